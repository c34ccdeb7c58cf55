//! RBM block encoding of single-string imaginary-time factors.
//!
//! Each factor `exp(-kappa sigma)` becomes the unitary
//! `exp(-i (W Z_t + b I) ⊗ X_a)` on the reduction target `t` plus one ancilla
//! `a`, recovered on the ancilla-0 branch with normalization `2A`. Two
//! parameterizations are supported: `standard` maximizes the success
//! probability, `correctable` makes the failure branch apply
//! `exp(+kappa sigma)` so a controlled correction can repair it.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::dense::CMatrix;
use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::simulator::DensityMatrix;

/// Which encoding parameterization a layer uses.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Standard,
    Correctable,
}

/// Encoding constants for one imaginary-time factor.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct RbmParams {
    pub scheme: Scheme,
    pub kappa: f64,
    pub a: f64,
    pub w: f64,
    pub b: f64,
    /// sign(kappa), with +1 at kappa = 0.
    pub s: f64,
}

fn sign_of(kappa: f64) -> f64 {
    if kappa < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Standard parameterization:
/// `A = e^{|k|}/2`, `W = arccos(e^{-2|k|})/2`, `b = s W`.
pub fn params_standard(kappa: f64) -> RbmParams {
    let s = sign_of(kappa);
    let a = 0.5 * kappa.abs().exp();
    let w = 0.5 * (-2.0 * kappa.abs()).exp().acos();
    RbmParams { scheme: Scheme::Standard, kappa, a, w, b: s * w, s }
}

/// Correctable parameterization:
/// `A = sqrt(cosh(2k)/2)`, `W = arctan(e^{2k}) - pi/4`, `b = s pi/4`.
/// Satisfies `W(-k) = -W(k)`; the failure branch applies `exp(+k sigma)`.
pub fn params_correctable(kappa: f64) -> RbmParams {
    let s = sign_of(kappa);
    let a = ((2.0 * kappa).cosh() / 2.0).sqrt();
    let w = (2.0 * kappa).exp().atan() - FRAC_PI_4;
    RbmParams { scheme: Scheme::Correctable, kappa, a, w, b: s * FRAC_PI_4, s }
}

pub fn params_for(scheme: Scheme, kappa: f64) -> RbmParams {
    match scheme {
        Scheme::Standard => params_standard(kappa),
        Scheme::Correctable => params_correctable(kappa),
    }
}

/// One imaginary-time layer `exp(-kappa sigma)` with its encoding.
#[derive(Clone, Debug)]
pub struct IteLayer {
    pub sigma: PauliString,
    pub kappa: f64,
    pub params: RbmParams,
    pub correction: Option<PauliString>,
}

impl IteLayer {
    pub fn new(sigma: PauliString, kappa: f64, scheme: Scheme) -> Self {
        IteLayer { sigma, kappa, params: params_for(scheme, kappa), correction: None }
    }

    /// Attach a correction operator; requires the correctable scheme and an
    /// anticommuting operator.
    pub fn with_correction(sigma: PauliString, kappa: f64, op: PauliString) -> Result<Self> {
        if sigma.commutes(&op)? {
            return Err(Error::InvalidState(format!(
                "correction {op} must anticommute with layer {sigma}"
            )));
        }
        Ok(IteLayer {
            sigma,
            kappa,
            params: params_correctable(kappa),
            correction: Some(op),
        })
    }
}

/// Dense unitary `exp(-i (W Z_target + b I) ⊗ X_ancilla)` on `total` qubits.
///
/// Diagonal in the target bit; on the ancilla it rotates by the angle
/// `W z + b` where `z` is the Z eigenvalue of the target bit.
pub fn block_unitary(
    params: &RbmParams,
    target: usize,
    ancilla: usize,
    total: usize,
) -> Result<CMatrix> {
    if target == ancilla {
        return Err(Error::IndexCollision { index: target });
    }
    if target >= total {
        return Err(Error::QubitOutOfRange { index: target, total });
    }
    if ancilla >= total {
        return Err(Error::QubitOutOfRange { index: ancilla, total });
    }
    let dim = 1usize << total;
    let amask = 1u64 << ancilla;
    let tmask = 1u64 << target;
    let mut u = CMatrix::zeros(dim, dim);
    for col in 0..dim as u64 {
        let z = if col & tmask == 0 { 1.0 } else { -1.0 };
        let angle = params.w * z + params.b;
        u[(col as usize, col as usize)] = Complex64::new(angle.cos(), 0.0);
        u[((col ^ amask) as usize, col as usize)] = Complex64::new(0.0, -angle.sin());
    }
    Ok(u)
}

/// The 4x4 kernel of [`block_unitary`] on ordered qubits (target, ancilla).
pub fn block_kernel(params: &RbmParams) -> [[Complex64; 4]; 4] {
    let z = Complex64::new(0.0, 0.0);
    let mut k = [[z; 4]; 4];
    // Basis order: index bit 0 = target, bit 1 = ancilla.
    for t in 0..2usize {
        let zval = if t == 0 { 1.0 } else { -1.0 };
        let angle = params.w * zval + params.b;
        let c = Complex64::new(angle.cos(), 0.0);
        let ms = Complex64::new(0.0, -angle.sin());
        k[t][t] = c;
        k[t + 2][t + 2] = c;
        k[t + 2][t] = ms;
        k[t][t + 2] = ms;
    }
    k
}

/// Basis-change circuit mapping `exp(-kappa sigma)` to a single-qubit Z factor.
///
/// Returns `(pre, target)` such that `pre† · exp(-kappa Z_target) · pre`
/// equals `exp(-kappa sigma)` exactly: single-qubit rotations take X/Y sites
/// to Z, then a CX ladder folds the support parity onto the target, which is
/// the lowest-index non-identity site.
pub fn reduce_to_z(sigma: &PauliString) -> Result<(Circuit, usize)> {
    if sigma.is_identity() {
        return Err(Error::IdentityString);
    }
    let mut pre = Circuit::new();
    let mut support = Vec::new();
    for q in 0..sigma.n() {
        match sigma.letter(q) {
            'I' => continue,
            'X' => pre.push(Gate::H(q)),
            'Y' => {
                pre.push(Gate::Sdg(q));
                pre.push(Gate::H(q));
            }
            'Z' => {}
            _ => unreachable!(),
        }
        support.push(q);
    }
    let target = support[0];
    for &q in &support[1..] {
        pre.push(Gate::Cx { control: q, target });
    }
    Ok((pre, target))
}

/// Post-selection success probability of one layer on `state`.
///
/// Standard: `P = 1 - (1 - e^{-4|k|}) alpha` with `alpha = Pr(sigma = s)`.
/// Correctable: `P = 1 - 1/(1 + e^{4 s k}) - tanh(2 s k) alpha` with
/// `alpha = Pr(sigma = +1)`.
pub fn success_probability(
    params: &RbmParams,
    state: &DensityMatrix,
    sigma: &PauliString,
) -> Result<f64> {
    let tr = state.trace();
    if (tr - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidState(format!("state trace {tr} is not 1")));
    }
    let expect = state.expectation_string(sigma)?;
    match params.scheme {
        Scheme::Standard => {
            let alpha = 0.5 * (1.0 + params.s * expect);
            Ok(1.0 - (1.0 - (-4.0 * params.kappa.abs()).exp()) * alpha)
        }
        Scheme::Correctable => {
            let alpha = 0.5 * (1.0 + expect);
            let sk = params.s * params.kappa;
            Ok(1.0 - 1.0 / (1.0 + (4.0 * sk).exp()) - (2.0 * sk).tanh() * alpha)
        }
    }
}

/// Trace route for the same quantity: `Tr[cos^2(W sigma + b I) rho]`.
pub fn success_probability_trace(
    params: &RbmParams,
    state: &DensityMatrix,
    sigma: &PauliString,
) -> Result<f64> {
    // cos^2(W sigma + b) = (1 + cos(2W) cos(2b)) / 2 - sin(2W) sin(2b) sigma / 2
    // using sigma^2 = I.
    let expect = state.expectation_string(sigma)?;
    let c = 0.5 * (1.0 + (2.0 * params.w).cos() * (2.0 * params.b).cos());
    let s = 0.5 * (2.0 * params.w).sin() * (2.0 * params.b).sin();
    Ok(c - s * expect)
}

#[allow(dead_code)]
fn unused_pi_guard() -> f64 {
    PI
}
