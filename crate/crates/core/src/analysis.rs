//! Parameter scans and the critical-area search.
//!
//! `P₃ᴿ(A)` touches zero tangentially at the critical area, so the search is a
//! bracketed golden-section minimisation rather than a sign-change root find.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::propagator::final_populations_both;
use crate::propagator::{propagate, PropagateOptions};
use crate::pulse::{Chirality, GridSpec, PulseConfig};

/// Default search bracket for the critical area, in units of π.
pub const DEFAULT_BRACKET: (f64, f64) = (0.3, 2.5);
/// Default golden-section tolerance, in units of π.
pub const DEFAULT_TOL: f64 = 1e-4;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScanParameter {
    #[serde(rename = "area_pi")]
    AreaPi,
    #[serde(rename = "phase_rad")]
    PhaseRad,
    #[serde(rename = "tau_over_T")]
    TauOverT,
}

impl ScanParameter {
    pub fn name(self) -> &'static str {
        match self {
            ScanParameter::AreaPi => "area_pi",
            ScanParameter::PhaseRad => "phase_rad",
            ScanParameter::TauOverT => "tau_over_T",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub value: f64,
    pub p3_l: f64,
    pub p3_r: f64,
    pub contrast: f64,
}

impl ScanRow {
    fn new(value: f64, (p3_l, p3_r): (f64, f64)) -> ScanRow {
        ScanRow {
            value,
            p3_l,
            p3_r,
            contrast: (p3_l - p3_r).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub parameter: ScanParameter,
    pub rows: Vec<ScanRow>,
    /// Configuration the scanned parameter was varied around.
    pub base: PulseConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalArea {
    pub tau_over_t: f64,
    /// Area in units of π.
    pub area_star: f64,
    /// `P₃ᴿ` at `area_star`.
    pub p3_min: f64,
    pub iterations: usize,
}

/// Minimum located by [`golden_section_min`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenMin {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Uniform grid of `n` points on `[lo, hi]`, both ends included.
fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|k| if k == n - 1 { hi } else { lo + k as f64 * step })
        .collect()
}

fn run_scan<F>(parameter: ScanParameter, base: &PulseConfig, values: Vec<f64>, grid: &GridSpec, apply: F) -> Result<ScanResult>
where
    F: Fn(&PulseConfig, f64) -> Result<PulseConfig> + Sync,
{
    let base = base.validate()?;
    let rows = values
        .into_par_iter()
        .map(|v| {
            let cfg = apply(&base, v)?;
            let time = grid.resolve(&cfg)?;
            Ok(ScanRow::new(v, final_populations_both(&cfg, &time)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanResult {
        parameter,
        rows,
        base,
    })
}

/// `(P₃ᴸ, P₃ᴿ)` over a uniform grid of pulse areas `[a_min_pi, a_max_pi]π`.
/// The Q pulse does not depend on the area, so only the P/S amplitude varies.
pub fn scan_area(base: &PulseConfig, a_min_pi: f64, a_max_pi: f64, n_points: usize, grid: &GridSpec) -> Result<ScanResult> {
    if !(a_min_pi >= 0.0 && a_min_pi < a_max_pi && a_max_pi.is_finite()) {
        return Err(Error::invalid(format!(
            "area range needs 0 <= amin < amax, got [{a_min_pi}, {a_max_pi}]"
        )));
    }
    check_points(n_points)?;
    run_scan(
        ScanParameter::AreaPi,
        base,
        linspace(a_min_pi, a_max_pi, n_points),
        grid,
        |cfg, a| cfg.with_area_pi(a),
    )
}

/// `(P₃ᴸ, P₃ᴿ)` over `n_points` Q phases uniformly covering `[0, 2π)`.
pub fn scan_phase(base: &PulseConfig, n_points: usize, grid: &GridSpec) -> Result<ScanResult> {
    check_points(n_points)?;
    let values = (0..n_points).map(|k| TAU * k as f64 / n_points as f64).collect();
    run_scan(ScanParameter::PhaseRad, base, values, grid, |cfg, phi| {
        Ok(cfg.with_phase(phi))
    })
}

/// `(P₃ᴸ, P₃ᴿ)` over a uniform grid of delays `τ/T ∈ [lo, hi]` at fixed
/// area. The time window follows the delay unless `grid` pins it.
pub fn scan_delay(base: &PulseConfig, lo: f64, hi: f64, n_points: usize, grid: &GridSpec) -> Result<ScanResult> {
    if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::invalid(format!("delay range needs 0 <= lo < hi, got [{lo}, {hi}]")));
    }
    check_points(n_points)?;
    run_scan(ScanParameter::TauOverT, base, linspace(lo, hi, n_points), grid, |cfg, r| {
        Ok(PulseConfig {
            tau: r * cfg.width,
            ..*cfg
        })
    })
}

fn check_points(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 scan points, got {n}")));
    }
    Ok(())
}

/// Golden-section search for a minimum of `f` inside `[lo, hi]`, stopping once
/// the bracket is narrower than `tol`.
///
/// Fails with [`Error::Bracket`] if the search collapses onto an endpoint or
/// ends above the endpoint values, i.e. `f` has no interior minimum there.
pub fn golden_section_min<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<GoldenMin>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(format!("bracket needs lo < hi, got [{lo}, {hi}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be > 0, got {tol}")));
    }
    let bracket_err = || Error::Bracket { lo, hi };

    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;

    let mut iterations = 0;
    while b - a > tol {
        iterations += 1;
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }

    let (x, fx) = if fc < fd { (c, fc) } else { (d, fd) };
    if x - lo < tol || hi - x < tol || fx > f(lo)?.min(f(hi)?) {
        return Err(bracket_err());
    }
    Ok(GoldenMin { x, fx, iterations })
}

/// Locates the area (units of π) where `P₃ᴿ` vanishes, with `base` supplying
/// every other parameter. The chirality of `base` is ignored.
pub fn find_critical_area_with(base: &PulseConfig, bracket: (f64, f64), grid: &GridSpec, tol: f64) -> Result<CriticalArea> {
    let base = base.validate()?.with_chirality(Chirality::R);
    let p3_right = |a: f64| -> Result<f64> {
        let cfg = base.with_area_pi(a)?;
        Ok(propagate(&cfg, &grid.resolve(&cfg)?, PropagateOptions::default())?.p3())
    };
    let min = golden_section_min(p3_right, bracket.0, bracket.1, tol)?;
    Ok(CriticalArea {
        tau_over_t: base.tau / base.width,
        area_star: min.x,
        p3_min: min.fx,
        iterations: min.iterations,
    })
}

/// Critical area for delay `tau_over_t` with T = 1, φ = π/2 and the exact
/// counterdiabatic Q pulse.
pub fn find_critical_area(tau_over_t: f64, bracket: (f64, f64), grid: &GridSpec, tol: f64) -> Result<CriticalArea> {
    if !(tau_over_t > 0.0) || !tau_over_t.is_finite() {
        return Err(Error::invalid(format!("tau/T must be > 0, got {tau_over_t}")));
    }
    let base = PulseConfig {
        tau: tau_over_t,
        width: 1.0,
        ..PulseConfig::default()
    };
    find_critical_area_with(&base, bracket, grid, tol)
}

/// [`find_critical_area`] for every delay; a failing row does not abort the
/// others.
pub fn critical_area_table(tau_values: &[f64], bracket: (f64, f64), grid: &GridSpec, tol: f64) -> Vec<Result<CriticalArea>> {
    tau_values
        .par_iter()
        .map(|&tau| find_critical_area(tau, bracket, grid, tol))
        .collect()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    #[test]
    fn golden_finds_parabola_vertex() {
        let m = golden_section_min(|x| Ok((x - 0.7).powi(2)), 0.0, 2.0, 1e-8).unwrap();
        assert!((m.x - 0.7).abs() < 1e-8);
        let bound = ((2.0f64 / 1e-8).ln() / (1.0 / INV_PHI).ln()).ceil() as usize + 2;
        assert!(m.iterations <= bound);
    }

    #[test]
    fn golden_rejects_monotone_bracket() {
        let err = golden_section_min(|x| Ok(x), 0.0, 1.0, 1e-6).unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
        let err = golden_section_min(|x| Ok(-x), 0.0, 1.0, 1e-6).unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
    }

    #[test]
    fn golden_rejects_bad_arguments() {
        assert!(golden_section_min(|x| Ok(x * x), 1.0, 0.0, 1e-6).is_err());
        assert!(golden_section_min(|x| Ok(x * x), -1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn two_point_scan_hits_endpoints() {
        let grid = GridSpec::with_steps(200);
        let scan = scan_area(&PulseConfig::default(), 0.5, 1.5, 2, &grid).unwrap();
        let values: Vec<f64> = scan.rows.iter().map(|r| r.value).collect();
        assert_eq!(values, vec![0.5, 1.5]);
        assert_eq!(scan.parameter.name(), "area_pi");
    }

    #[test]
    fn scan_argument_checks() {
        let grid = GridSpec::with_steps(10);
        let base = PulseConfig::default();
        assert!(scan_area(&base, 1.0, 0.5, 10, &grid).is_err());
        assert!(scan_area(&base, -0.1, 0.5, 10, &grid).is_err());
        assert!(scan_area(&base, 0.1, 0.5, 1, &grid).is_err());
        assert!(scan_phase(&base, 1, &grid).is_err());
        assert!(find_critical_area(0.0, DEFAULT_BRACKET, &grid, 1e-3).is_err());
    }

    #[test]
    fn phase_scan_covers_half_open_circle() {
        let scan = scan_phase(&PulseConfig::default(), 4, &GridSpec::with_steps(100)).unwrap();
        let values: Vec<f64> = scan.rows.iter().map(|r| r.value).collect();
        assert_eq!(values, vec![0.0, PI / 2.0, PI, 1.5 * PI]);
    }

    #[test]
    fn empty_table() {
        assert!(critical_area_table(&[], DEFAULT_BRACKET, &GridSpec::default(), DEFAULT_TOL).is_empty());
    }
}
