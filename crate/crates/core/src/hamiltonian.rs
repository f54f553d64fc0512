//! Loop Hamiltonians in the bare basis `{|1>, |2>, |3>}` and in the adiabatic
//! basis `{|e₋>, |e₀>, |e₊>}` of the Q-free Hamiltonian.
//!
//! The adiabatic basis is the column set of
//!
//! ```text
//!     ⎡ sinθ/√2   cosθ   sinθ/√2 ⎤
//! W = ⎢  -1/√2     0      1/√2   ⎥
//!     ⎣ cosθ/√2  -sinθ   cosθ/√2 ⎦
//! ```
//!
//! and a bare-frame Hamiltonian `H` maps to `H_a = Wᵀ H W - i Wᵀ Ẇ`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::linalg::Mat3;
use crate::pulse::{evaluate_fields, mixing_angle_rate, Chirality, FieldSample, PulseConfig};
use crate::C64;

/// Basis in which a matrix or state is expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    #[default]
    Bare,
    Adiabatic,
}

impl std::str::FromStr for Frame {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.trim() {
            "bare" => Ok(Frame::Bare),
            "adiabatic" => Ok(Frame::Adiabatic),
            other => Err(crate::Error::invalid(format!("frame must be bare or adiabatic, got {other:?}"))),
        }
    }
}

impl std::fmt::Display for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Frame::Bare => "bare",
            Frame::Adiabatic => "adiabatic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianMatrix {
    pub matrix: Mat3,
    pub frame: Frame,
}

impl HamiltonianMatrix {
    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        crate::linalg::hermiticity_error(&self.matrix)
    }
}

/// Eigenvalues `(-Ω/2, 0, Ω/2)` of the Q-free Hamiltonian and the transform
/// whose columns are the matching eigenvectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSystem {
    pub eps_minus: f64,
    pub eps_zero: f64,
    pub eps_plus: f64,
    pub w: Matrix3<f64>,
    pub theta: f64,
}

const ZERO: C64 = C64::new(0.0, 0.0);

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Bare-frame loop Hamiltonian
///
/// ```text
///       ⎡     0        Ω_p    ±Ω_q e^{iφ} ⎤
/// ½  ·  ⎢    Ω_p        0         Ω_s     ⎥
///       ⎣ ±Ω_q e^{-iφ}  Ω_s        0      ⎦
/// ```
///
/// with `+` for L and `-` for R. The R sign is applied as an extra phase of π,
/// so `(R, φ)` and `(L, φ + π)` produce bit-identical matrices.
pub fn bare_hamiltonian(sample: &FieldSample, phi: f64, chirality: Chirality) -> HamiltonianMatrix {
    let phase = match chirality {
        Chirality::L => phi,
        Chirality::R => phi + PI,
    };
    let q = if sample.omega_q == 0.0 {
        ZERO
    } else {
        C64::from_polar(0.5 * sample.omega_q, phase)
    };
    let p = re(0.5 * sample.omega_p);
    let s = re(0.5 * sample.omega_s);
    HamiltonianMatrix {
        matrix: Mat3::new(
            ZERO, p, q, //
            p, ZERO, s, //
            q.conj(), s, ZERO,
        ),
        frame: Frame::Bare,
    }
}

/// The Hamiltonian with the Q coupling removed. Real symmetric.
pub fn base_hamiltonian(sample: &FieldSample) -> HamiltonianMatrix {
    let no_q = FieldSample {
        omega_q: 0.0,
        ..*sample
    };
    bare_hamiltonian(&no_q, 0.0, Chirality::L)
}

/// The transform `W(θ)`; columns are `|e₋>, |e₀>, |e₊>`.
pub fn transform_matrix(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    let h = FRAC_1_SQRT_2;
    Matrix3::new(
        s * h, c, s * h, //
        -h, 0.0, h, //
        c * h, -s, c * h,
    )
}

/// `dW/dθ`.
pub fn transform_matrix_derivative(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    let h = FRAC_1_SQRT_2;
    Matrix3::new(
        c * h, -s, c * h, //
        0.0, 0.0, 0.0, //
        -s * h, -c, -s * h,
    )
}

pub fn eigensystem(sample: &FieldSample) -> EigenSystem {
    let half = 0.5 * sample.omega_rms;
    EigenSystem {
        eps_minus: -half,
        eps_zero: 0.0,
        eps_plus: half,
        w: transform_matrix(sample.theta),
        theta: sample.theta,
    }
}

/// Closed-form adiabatic-frame Hamiltonian for a Q phase of π/2:
///
/// ```text
/// ⎡ -Ω/2    iκ     0  ⎤
/// ⎢ -iκ     0    -iκ  ⎥        κ = (θ̇ ∓ Ω_q/2) / √2
/// ⎣   0     iκ   Ω/2  ⎦
/// ```
///
/// with the upper sign for L.
pub fn adiabatic_hamiltonian(sample: &FieldSample, chirality: Chirality) -> HamiltonianMatrix {
    let kappa = FRAC_1_SQRT_2 * (sample.theta_dot - chirality.sign() * 0.5 * sample.omega_q);
    let up = C64::new(0.0, kappa);
    let half = 0.5 * sample.omega_rms;
    HamiltonianMatrix {
        matrix: Mat3::new(
            re(-half), up, ZERO, //
            -up, ZERO, -up, //
            ZERO, up, re(half),
        ),
        frame: Frame::Adiabatic,
    }
}

fn to_adiabatic(h: &Mat3, w: &Matrix3<f64>, w_dot: &Matrix3<f64>) -> HamiltonianMatrix {
    let wc = w.map(re);
    let wt = wc.transpose();
    let coupling = (w.transpose() * w_dot).map(|x| C64::new(0.0, -x));
    HamiltonianMatrix {
        matrix: wt * h * wc + coupling,
        frame: Frame::Adiabatic,
    }
}

/// `Wᵀ H W - i Wᵀ Ẇ` with `Ẇ` from central differences of `W(θ(t))` with time
/// step `dt_step`. Works for any phase and chirality in `cfg`.
pub fn adiabatic_hamiltonian_numeric(cfg: &PulseConfig, t: f64, dt_step: f64) -> HamiltonianMatrix {
    let sample = evaluate_fields(cfg, t);
    let h = bare_hamiltonian(&sample, cfg.phi, cfg.chirality);
    let forward = transform_matrix(evaluate_fields(cfg, t + dt_step).theta);
    let backward = transform_matrix(evaluate_fields(cfg, t - dt_step).theta);
    let w_dot = (forward - backward) / (2.0 * dt_step);
    to_adiabatic(&h.matrix, &transform_matrix(sample.theta), &w_dot)
}

/// Same transform with the exact `Ẇ = θ̇ dW/dθ`; used for adiabatic-frame
/// propagation at phases where the closed form does not apply.
pub fn adiabatic_hamiltonian_general(cfg: &PulseConfig, t: f64) -> HamiltonianMatrix {
    let sample = evaluate_fields(cfg, t);
    let h = bare_hamiltonian(&sample, cfg.phi, cfg.chirality);
    let w_dot = transform_matrix_derivative(sample.theta) * mixing_angle_rate(cfg, t);
    to_adiabatic(&h.matrix, &transform_matrix(sample.theta), &w_dot)
}
