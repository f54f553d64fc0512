//! Time propagation of `i dψ/dt = H(t) ψ` (ħ = 1) on a uniform grid.
//!
//! Each step multiplies by an exact 3×3 exponential, so the norm is conserved
//! to rounding and the drift is a pure diagnostic. Two schemes are offered:
//! the second-order exponential midpoint rule (default) and the fourth-order
//! Magnus expansion with two Gauss–Legendre nodes.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{
    adiabatic_hamiltonian, adiabatic_hamiltonian_general, bare_hamiltonian, transform_matrix,
    Frame, HamiltonianMatrix,
};
use crate::linalg::{expm_hermitian, norm_sqr, Mat3, Vec3};
use crate::pulse::{evaluate_fields, Chirality, PulseConfig, TimeGrid};
use crate::C64;

/// Norm drift above which a run is rejected.
pub const MAX_NORM_DRIFT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    /// `exp(-i H(t + dt/2) dt)`; second order.
    #[default]
    Midpoint,
    /// Two-node Magnus expansion; fourth order.
    Magnus4,
}

impl std::str::FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "midpoint" => Ok(Integrator::Midpoint),
            "magnus4" => Ok(Integrator::Magnus4),
            other => Err(Error::invalid(format!("integrator must be midpoint or magnus4, got {other:?}"))),
        }
    }
}

impl std::fmt::Display for Integrator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Integrator::Midpoint => "midpoint",
            Integrator::Magnus4 => "magnus4",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub amplitudes: Vec3,
    pub frame: Frame,
}

impl StateVector {
    /// Bare state `|1>`.
    pub fn ground() -> StateVector {
        StateVector {
            amplitudes: Vector3::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)),
            frame: Frame::Bare,
        }
    }

    pub fn populations(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| self.amplitudes[i].norm_sqr())
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amplitudes)
    }

    /// Re-expresses the state in the other basis at mixing angle `theta`.
    pub fn to_frame(&self, frame: Frame, theta: f64) -> StateVector {
        let w = transform_matrix(theta).map(|x| C64::new(x, 0.0));
        let amplitudes = match (self.frame, frame) {
            (Frame::Bare, Frame::Adiabatic) => w.transpose() * self.amplitudes,
            (Frame::Adiabatic, Frame::Bare) => w * self.amplitudes,
            _ => self.amplitudes,
        };
        StateVector { amplitudes, frame }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    /// Populations in the propagation frame.
    pub populations: [f64; 3],
    /// Populations of `|1>, |2>, |3>`.
    pub bare_populations: [f64; 3],
}

fn trajectory_row(cfg: &PulseConfig, state: &StateVector, t: f64) -> TrajectoryRow {
    let bare = match state.frame {
        Frame::Bare => state.populations(),
        Frame::Adiabatic => state.to_frame(Frame::Bare, evaluate_fields(cfg, t).theta).populations(),
    };
    TrajectoryRow {
        t,
        populations: state.populations(),
        bare_populations: bare,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    /// Final state in the propagation frame.
    pub final_state: StateVector,
    /// Final populations of the bare states `|1>, |2>, |3>`.
    pub populations: [f64; 3],
    /// Populations at every grid node, in the propagation frame.
    pub trajectory: Option<Vec<TrajectoryRow>>,
    /// `max |‖ψ‖² - 1|` over the run.
    pub norm_drift: f64,
}

impl PropagationResult {
    pub fn p3(&self) -> f64 {
        self.populations[2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PropagateOptions {
    pub frame: Frame,
    pub integrator: Integrator,
    pub record: bool,
}

/// Advances `state` by `dt` under a Hamiltonian held constant over the step.
pub fn step(h_mid: &HamiltonianMatrix, state: &StateVector, dt: f64) -> Result<StateVector> {
    if h_mid.frame != state.frame {
        return Err(Error::invalid("Hamiltonian and state are in different frames"));
    }
    let u = expm_hermitian(&h_mid.matrix, dt)?;
    Ok(StateVector {
        amplitudes: u * state.amplitudes,
        frame: state.frame,
    })
}

/// Hamiltonian of `cfg` at time `t` in `frame`.
pub fn hamiltonian_at(cfg: &PulseConfig, frame: Frame, t: f64) -> HamiltonianMatrix {
    match frame {
        Frame::Bare => bare_hamiltonian(&evaluate_fields(cfg, t), cfg.phi, cfg.chirality),
        Frame::Adiabatic if cfg.phi == FRAC_PI_2 => {
            adiabatic_hamiltonian(&evaluate_fields(cfg, t), cfg.chirality)
        }
        Frame::Adiabatic => adiabatic_hamiltonian_general(cfg, t),
    }
}

fn step_generator(cfg: &PulseConfig, frame: Frame, integrator: Integrator, t0: f64, dt: f64) -> HamiltonianMatrix {
    match integrator {
        Integrator::Midpoint => hamiltonian_at(cfg, frame, t0 + 0.5 * dt),
        Integrator::Magnus4 => {
            let offset = 3.0f64.sqrt() / 6.0;
            let h1 = hamiltonian_at(cfg, frame, t0 + (0.5 - offset) * dt).matrix;
            let h2 = hamiltonian_at(cfg, frame, t0 + (0.5 + offset) * dt).matrix;
            let commutator = h2 * h1 - h1 * h2;
            let matrix: Mat3 = (h1 + h2) * C64::new(0.5, 0.0)
                - commutator * C64::new(0.0, 3.0f64.sqrt() * dt / 12.0);
            HamiltonianMatrix { matrix, frame }
        }
    }
}

/// Propagates from bare `|1>` at `grid.t_start` to `grid.t_end`.
///
/// In the adiabatic frame the initial state is `|1>` expressed in the
/// adiabatic basis at `t_start` (essentially `|e₀>`), and the final state is
/// mapped back through `W(t_end)` for the reported bare populations.
pub fn propagate(cfg: &PulseConfig, grid: &TimeGrid, opts: PropagateOptions) -> Result<PropagationResult> {
    let cfg = cfg.validate()?;
    grid.validate()?;
    let frame = opts.frame;
    let mut state = StateVector::ground().to_frame(frame, evaluate_fields(&cfg, grid.t_start).theta);
    let mut trajectory = opts.record.then(|| Vec::with_capacity(grid.n_steps + 1));
    let mut drift = 0.0f64;

    if let Some(rows) = trajectory.as_mut() {
        rows.push(trajectory_row(&cfg, &state, grid.t_start));
    }
    for k in 0..grid.n_steps {
        let t0 = grid.node(k);
        let dt = grid.node(k + 1) - t0;
        let h = step_generator(&cfg, frame, opts.integrator, t0, dt);
        state = step(&h, &state, dt)?;
        let d = (state.norm_sqr() - 1.0).abs();
        if !(d <= MAX_NORM_DRIFT) {
            return Err(Error::NumericalFailure {
                drift: d,
                limit: MAX_NORM_DRIFT,
            });
        }
        drift = drift.max(d);
        if let Some(rows) = trajectory.as_mut() {
            rows.push(trajectory_row(&cfg, &state, grid.node(k + 1)));
        }
    }

    let bare = state.to_frame(Frame::Bare, evaluate_fields(&cfg, grid.t_end).theta);
    Ok(PropagationResult {
        final_state: state,
        populations: bare.populations(),
        trajectory,
        norm_drift: drift,
    })
}

/// Final `|3>` populations `(P₃ᴸ, P₃ᴿ)` for both handednesses, bare frame,
/// midpoint rule. The chirality in `cfg` is ignored.
pub fn final_populations_both(cfg: &PulseConfig, grid: &TimeGrid) -> Result<(f64, f64)> {
    let opts = PropagateOptions::default();
    let left = propagate(&cfg.with_chirality(Chirality::L), grid, opts)?;
    let right = propagate(&cfg.with_chirality(Chirality::R), grid, opts)?;
    Ok((left.p3(), right.p3()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{FieldSample, GridSpec};
    use crate::hamiltonian::base_hamiltonian;

    fn default_grid(cfg: &PulseConfig) -> TimeGrid {
        GridSpec::default().resolve(cfg).unwrap()
    }

    #[test]
    fn zero_hamiltonian_leaves_state() {
        let h = HamiltonianMatrix {
            matrix: Mat3::zeros(),
            frame: Frame::Bare,
        };
        let s = StateVector::ground();
        assert_eq!(step(&h, &s, 0.3).unwrap(), s);
    }

    #[test]
    fn step_rejects_frame_mismatch() {
        let h = HamiltonianMatrix {
            matrix: Mat3::zeros(),
            frame: Frame::Adiabatic,
        };
        assert!(step(&h, &StateVector::ground(), 0.1).is_err());
    }

    #[test]
    fn forward_backward_steps_cancel() {
        let cfg = PulseConfig::default().with_chirality(Chirality::R);
        let h = hamiltonian_at(&cfg, Frame::Bare, 0.2);
        let s = StateVector::ground();
        let back = step(&h, &step(&h, &s, 0.7).unwrap(), -0.7).unwrap();
        assert!((back.amplitudes - s.amplitudes).norm() < 1e-13);
    }

    #[test]
    fn constant_hamiltonian_many_steps_equal_one() {
        let h = base_hamiltonian(&FieldSample::static_ps(1.0, 1.0));
        let s = StateVector::ground();
        let once = step(&h, &s, 5.0).unwrap();
        let mut many = s;
        for _ in 0..1000 {
            many = step(&h, &many, 5.0 / 1000.0).unwrap();
        }
        assert!((once.amplitudes - many.amplitudes).norm() < 1e-10);
    }

    #[test]
    fn step_preserves_norm() {
        let cfg = PulseConfig { omega0: 3.0, ..PulseConfig::default() };
        let h = hamiltonian_at(&cfg, Frame::Bare, -0.4);
        let out = step(&h, &StateVector::ground(), 0.05).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn no_field_no_transfer() {
        let cfg = PulseConfig { omega0: 0.0, q_scale: 0.0, ..PulseConfig::default() };
        let res = propagate(&cfg, &default_grid(&cfg), PropagateOptions::default()).unwrap();
        assert_eq!(res.populations, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn reference_point_contrast() {
        let cfg = PulseConfig::default();
        let grid = default_grid(&cfg);
        let left = propagate(&cfg, &grid, PropagateOptions::default()).unwrap();
        assert!((left.p3() - 1.0).abs() < 1e-6);
        assert!(left.norm_drift < 1e-9);
        let right = propagate(&cfg.with_chirality(Chirality::R), &grid, PropagateOptions::default()).unwrap();
        assert!(right.p3() < 1e-4);
    }

    #[test]
    fn zero_delay_is_chirality_blind() {
        let cfg = PulseConfig { tau: 0.0, ..PulseConfig::default() };
        let (l, r) = final_populations_both(&cfg, &default_grid(&cfg)).unwrap();
        assert_eq!(l, r);
    }

    #[test]
    fn trajectory_has_every_node() {
        let cfg = PulseConfig::default();
        let grid = TimeGrid::new(-5.5, 5.5, 200).unwrap();
        let opts = PropagateOptions { record: true, ..Default::default() };
        let res = propagate(&cfg, &grid, opts).unwrap();
        let rows = res.trajectory.unwrap();
        assert_eq!(rows.len(), 201);
        assert_eq!(rows[0].populations, [1.0, 0.0, 0.0]);
        assert_eq!(rows[200].t, 5.5);
        for row in &rows {
            assert!((row.populations.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }
}
