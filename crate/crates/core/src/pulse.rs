//! Pump/Stokes Gaussian envelopes, the mixing angle and the counterdiabatic
//! Q pulse.
//!
//! Time is measured in the same unit as the pulse width `T`; the CLI and the
//! analysis routines always use `T = 1`. The envelopes are
//!
//! ```text
//! Ω_p(t) = Ω₀ exp(-(t - τ/2)² / T²)        (pump, arrives second)
//! Ω_s(t) = Ω₀ exp(-(t + τ/2)² / T²)        (Stokes, arrives first)
//! θ(t)   = atan(Ω_p / Ω_s) = atan(exp(2τt / T²))
//! θ̇(t)   = (τ / T²) sech(2τt / T²)
//! Ω_q(t) = q_scale · 2θ̇(t)
//! ```

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Handedness of the molecule. Only the sign of the Q coupling differs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chirality {
    L,
    R,
}

impl Chirality {
    /// `+1` for L, `-1` for R.
    pub fn sign(self) -> f64 {
        match self {
            Chirality::L => 1.0,
            Chirality::R => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Chirality::L => Chirality::R,
            Chirality::R => Chirality::L,
        }
    }
}

impl fmt::Display for Chirality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Chirality::L => "L",
            Chirality::R => "R",
        })
    }
}

impl FromStr for Chirality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "L" | "l" => Ok(Chirality::L),
            "R" | "r" => Ok(Chirality::R),
            other => Err(Error::invalid(format!("chirality must be L or R, got {other:?}"))),
        }
    }
}

/// Every experimental knob of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseConfig {
    /// Peak P and S Rabi frequency (units of 1/T).
    pub omega0: f64,
    /// Delay between the pulse centres, in the same time unit as `width`.
    pub tau: f64,
    /// Gaussian width T.
    pub width: f64,
    /// Phase of the Q field in radians.
    pub phi: f64,
    pub chirality: Chirality,
    /// Multiplier on the counterdiabatic condition; 1 is exact, 0 switches Q off.
    pub q_scale: f64,
}

impl Default for PulseConfig {
    /// The reference operating point: τ = T = 1, A = 1.234π, φ = π/2, L.
    fn default() -> Self {
        PulseConfig {
            omega0: 1.234 * PI / PI.sqrt(),
            tau: 1.0,
            width: 1.0,
            phi: FRAC_PI_2,
            chirality: Chirality::L,
            q_scale: 1.0,
        }
    }
}

impl PulseConfig {
    /// Checks the invariants and returns a copy with `phi` folded into `[0, 2π)`.
    pub fn validate(&self) -> Result<PulseConfig> {
        let finite = [self.omega0, self.tau, self.width, self.phi, self.q_scale];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("pulse parameters must be finite"));
        }
        if self.omega0 < 0.0 {
            return Err(Error::invalid(format!("omega0 must be >= 0, got {}", self.omega0)));
        }
        if self.width <= 0.0 {
            return Err(Error::invalid(format!("width must be > 0, got {}", self.width)));
        }
        if self.tau < 0.0 {
            return Err(Error::invalid(format!("tau must be >= 0, got {}", self.tau)));
        }
        if self.q_scale < 0.0 {
            return Err(Error::invalid(format!("q_scale must be >= 0, got {}", self.q_scale)));
        }
        Ok(PulseConfig {
            phi: normalize_phase(self.phi),
            ..*self
        })
    }

    /// Sets the peak amplitude from a pulse area given in units of π.
    pub fn with_area_pi(self, area_pi: f64) -> Result<PulseConfig> {
        Ok(PulseConfig {
            omega0: amplitude_for_area(area_pi * PI, self.width)?,
            ..self
        })
    }

    pub fn with_chirality(self, chirality: Chirality) -> PulseConfig {
        PulseConfig { chirality, ..self }
    }

    pub fn with_phase(self, phi: f64) -> PulseConfig {
        PulseConfig { phi, ..self }
    }

    /// The symmetric window `[-(τ/2 + 5T), τ/2 + 5T]` outside of which every
    /// field is negligible.
    pub fn default_half_window(&self) -> f64 {
        0.5 * self.tau + 5.0 * self.width
    }
}

/// Folds an angle into `[0, 2π)`.
pub fn normalize_phase(phi: f64) -> f64 {
    let p = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if p >= TAU {
        0.0
    } else {
        p
    }
}

/// Instantaneous field values.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldSample {
    pub t: f64,
    pub omega_p: f64,
    pub omega_s: f64,
    pub omega_q: f64,
    pub theta: f64,
    pub theta_dot: f64,
    /// `sqrt(Ω_p² + Ω_s²)`.
    pub omega_rms: f64,
}

impl FieldSample {
    /// A sample with the given P and S couplings and no Q field. The mixing
    /// angle is taken from the envelope ratio, so it is only meaningful when
    /// at least one coupling is nonzero.
    pub fn static_ps(omega_p: f64, omega_s: f64) -> FieldSample {
        FieldSample {
            t: 0.0,
            omega_p,
            omega_s,
            omega_q: 0.0,
            theta: omega_p.atan2(omega_s),
            theta_dot: 0.0,
            omega_rms: omega_p.hypot(omega_s),
        }
    }
}

/// Uniform time grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_steps: usize) -> Result<TimeGrid> {
        let grid = TimeGrid {
            t_start,
            t_end,
            n_steps,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_start.is_finite() && self.t_end.is_finite()) || self.t_start >= self.t_end {
            return Err(Error::invalid(format!(
                "time grid needs t_start < t_end, got [{}, {}]",
                self.t_start, self.t_end
            )));
        }
        if self.n_steps == 0 {
            return Err(Error::invalid("time grid needs at least one step"));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_steps as f64
    }

    /// Time of grid node `k`, `0 <= k <= n_steps`. On a symmetric window the
    /// nodes are exactly antisymmetric and the middle node is exactly zero.
    pub fn node(&self, k: usize) -> f64 {
        let n = self.n_steps as f64;
        let k = k.min(self.n_steps);
        (self.t_start * (self.n_steps - k) as f64 + self.t_end * k as f64) / n
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(move |k| self.node(k))
    }
}

/// Resolution and window of a run, resolved against a config into a
/// [`TimeGrid`]. Analysis routines take this so that the window can follow the
/// delay when τ varies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_steps: usize,
    /// Half-width of the symmetric window; `None` uses
    /// [`PulseConfig::default_half_window`].
    pub t_max: Option<f64>,
}

pub const DEFAULT_STEPS: usize = 4000;

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n_steps: DEFAULT_STEPS,
            t_max: None,
        }
    }
}

impl GridSpec {
    pub fn with_steps(n_steps: usize) -> GridSpec {
        GridSpec {
            n_steps,
            t_max: None,
        }
    }

    pub fn resolve(&self, cfg: &PulseConfig) -> Result<TimeGrid> {
        let half = self.t_max.unwrap_or_else(|| cfg.default_half_window());
        TimeGrid::new(-half, half, self.n_steps)
    }
}

/// Mixing angle `atan(exp(2τt/T²))`. Stays finite where both Gaussians underflow.
pub fn mixing_angle(cfg: &PulseConfig, t: f64) -> f64 {
    (2.0 * cfg.tau * t / (cfg.width * cfg.width)).exp().atan()
}

/// `dθ/dt = (τ/T²) sech(2τt/T²)`.
pub fn mixing_angle_rate(cfg: &PulseConfig, t: f64) -> f64 {
    let t2 = cfg.width * cfg.width;
    cfg.tau / t2 / (2.0 * cfg.tau * t / t2).cosh()
}

/// Evaluates every field at time `t`. Chirality and phase are not applied
/// here; they only enter the Hamiltonian.
pub fn evaluate_fields(cfg: &PulseConfig, t: f64) -> FieldSample {
    let t2 = cfg.width * cfg.width;
    let half = 0.5 * cfg.tau;
    let omega_p = cfg.omega0 * (-(t - half).powi(2) / t2).exp();
    let omega_s = cfg.omega0 * (-(t + half).powi(2) / t2).exp();
    let theta_dot = mixing_angle_rate(cfg, t);
    FieldSample {
        t,
        omega_p,
        omega_s,
        omega_q: cfg.q_scale * 2.0 * theta_dot,
        theta: mixing_angle(cfg, t),
        theta_dot,
        omega_rms: omega_p.hypot(omega_s),
    }
}

/// `A = Ω₀ T √π`.
pub fn pulse_area(cfg: &PulseConfig) -> f64 {
    cfg.omega0 * cfg.width * PI.sqrt()
}

/// Peak amplitude giving pulse area `area` (radians) for width `width`.
pub fn amplitude_for_area(area: f64, width: f64) -> Result<f64> {
    if !(width > 0.0) || !width.is_finite() {
        return Err(Error::invalid(format!("width must be > 0, got {width}")));
    }
    if !(area >= 0.0) || !area.is_finite() {
        return Err(Error::invalid(format!("pulse area must be >= 0, got {area}")));
    }
    Ok(area / (width * PI.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(omega0: f64, tau: f64) -> PulseConfig {
        PulseConfig {
            omega0,
            tau,
            ..PulseConfig::default()
        }
    }

    #[test]
    fn symmetry_point_values() {
        let s = evaluate_fields(&unit(1.0, 1.0), 0.0);
        assert!((s.theta - PI / 4.0).abs() < 1e-15);
        assert!((s.theta_dot - 1.0).abs() < 1e-15);
        assert!((s.omega_q - 2.0).abs() < 1e-15);
    }

    #[test]
    fn gaussians_at_stokes_centre() {
        let s = evaluate_fields(&unit(1.0, 1.0), -0.5);
        assert!((s.omega_p - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(s.omega_s, 1.0);
    }

    #[test]
    fn mixing_angle_limits() {
        let cfg = unit(1.0, 1.0);
        assert_eq!(evaluate_fields(&cfg, -1e3).theta, 0.0);
        assert_eq!(evaluate_fields(&cfg, 1e3).theta, FRAC_PI_2);
        assert!(evaluate_fields(&cfg, -30.0).theta < 1e-20);
        assert!((evaluate_fields(&cfg, 30.0).theta - FRAC_PI_2).abs() < 1e-15);
        // deep in the wings the envelopes underflow but θ stays defined
        let far = evaluate_fields(&cfg, 100.0);
        assert_eq!(far.omega_s, 0.0);
        assert!(far.theta.is_finite() && far.theta_dot.is_finite());
    }

    #[test]
    fn theta_matches_envelope_ratio() {
        let cfg = unit(1.3, 0.7);
        for &t in &[-2.0, -0.3, 0.0, 0.8, 2.5] {
            let s = evaluate_fields(&cfg, t);
            assert!((s.theta - s.omega_p.atan2(s.omega_s)).abs() < 1e-12);
            assert!((s.omega_rms.powi(2) - s.omega_p.powi(2) - s.omega_s.powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_delay_switches_q_off() {
        let cfg = unit(2.0, 0.0);
        for &t in &[-3.0, 0.0, 1.5] {
            let s = evaluate_fields(&cfg, t);
            assert_eq!(s.theta_dot, 0.0);
            assert_eq!(s.omega_q, 0.0);
        }
    }

    #[test]
    fn non_unit_width_uses_physical_units() {
        let cfg = PulseConfig {
            omega0: 1.0,
            tau: 1.0,
            width: 2.0,
            ..PulseConfig::default()
        };
        // Ω_q(0) = 2τ/T²
        assert!((evaluate_fields(&cfg, 0.0).omega_q - 0.5).abs() < 1e-15);
    }

    #[test]
    fn area_examples() {
        assert_eq!(pulse_area(&unit(0.0, 1.0)), 0.0);
        assert!((pulse_area(&unit(PI.sqrt(), 1.0)) - PI).abs() < 1e-15);
        let cfg = unit(1.234 * PI / PI.sqrt(), 1.0);
        assert!((pulse_area(&cfg) - 1.234 * PI).abs() < 1e-14);

        assert_eq!(amplitude_for_area(0.0, 1.0).unwrap(), 0.0);
        assert!((amplitude_for_area(PI, 1.0).unwrap() - PI.sqrt()).abs() < 1e-15);
        assert!((amplitude_for_area(0.891 * PI, 1.0).unwrap() - 0.891 * PI.sqrt()).abs() < 1e-15);
        assert!(amplitude_for_area(1.0, 0.0).is_err());
        assert!(amplitude_for_area(1.0, -1.0).is_err());
    }

    #[test]
    fn config_validation() {
        let ok = PulseConfig {
            phi: -FRAC_PI_2,
            ..PulseConfig::default()
        }
        .validate()
        .unwrap();
        assert!((ok.phi - 1.5 * PI).abs() < 1e-15);
        assert!(PulseConfig { omega0: -1.0, ..PulseConfig::default() }.validate().is_err());
        assert!(PulseConfig { width: 0.0, ..PulseConfig::default() }.validate().is_err());
        assert!(PulseConfig { tau: -0.1, ..PulseConfig::default() }.validate().is_err());
        assert!(PulseConfig { q_scale: -1.0, ..PulseConfig::default() }.validate().is_err());
        assert!(PulseConfig { phi: f64::NAN, ..PulseConfig::default() }.validate().is_err());
        assert_eq!(normalize_phase(-1e-300), 0.0);
    }

    #[test]
    fn grid_checks() {
        assert!(TimeGrid::new(1.0, 1.0, 10).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
        let g = TimeGrid::new(-1.0, 1.0, 4).unwrap();
        assert_eq!(g.nodes().collect::<Vec<_>>(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let spec = GridSpec::default().resolve(&PulseConfig::default()).unwrap();
        assert_eq!((spec.t_start, spec.t_end, spec.n_steps), (-5.5, 5.5, 4000));
    }

    #[test]
    fn chirality_parsing() {
        assert_eq!("L".parse::<Chirality>().unwrap(), Chirality::L);
        assert_eq!("r".parse::<Chirality>().unwrap(), Chirality::R);
        assert!("X".parse::<Chirality>().is_err());
        assert_eq!(Chirality::L.flipped().sign(), -1.0);
    }
}
