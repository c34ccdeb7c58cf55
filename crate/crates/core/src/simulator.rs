//! Dense density-matrix simulation with exact post-selection branch arithmetic.
//!
//! Register layout is fixed as `[system | copy (TFD mode only) | RBM ancilla |
//! probe (optional)]`. Basis index bit `q` holds qubit `q`, so qubit 0 is the
//! least significant bit. Post-selection is handled by exact conditioning on
//! the ancilla, never by sampling; a shot sampler exists as a separate,
//! optional mode.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::circuit::{Circuit, Gate};
use crate::correction::CorrectionPlan;
use crate::dense::{pauli_column_phase, CMatrix};
use crate::error::{Error, Result};
use crate::pauli::{PauliSentence, PauliString};
use crate::rbm::{self, IteLayer, Scheme};

const PSD_TOLERANCE: f64 = -1e-10;
const BRANCH_CUTOFF: f64 = 1e-14;

/// Fixed register layout around an `n`-qubit system.
#[derive(Clone, Copy, Debug)]
pub struct Register {
    pub n_system: usize,
    pub copy: bool,
    pub probe: bool,
}

impl Register {
    pub fn new(n_system: usize, copy: bool, probe: bool) -> Self {
        Register { n_system, copy, probe }
    }

    pub fn total(&self) -> usize {
        self.n_system * (1 + self.copy as usize) + 1 + self.probe as usize
    }

    /// Index of the reusable RBM ancilla.
    pub fn rbm_ancilla(&self) -> usize {
        self.n_system * (1 + self.copy as usize)
    }

    pub fn probe(&self) -> Option<usize> {
        self.probe.then(|| self.rbm_ancilla() + 1)
    }
}

/// How the infinite-temperature state is represented.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum InitMode {
    MixedDensity,
    TfdPurified,
}

/// Which propagator split `run_ite` applies.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum IteSide {
    /// `exp(-beta c/2 sigma)` on each side of rho, per layer.
    SymmetricHalf,
}

/// A dense density operator on `m` qubits.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    m: usize,
    data: CMatrix,
}

impl DensityMatrix {
    pub fn from_matrix(m: usize, data: CMatrix) -> Self {
        assert_eq!(data.nrows(), 1 << m);
        assert_eq!(data.ncols(), 1 << m);
        DensityMatrix { m, data }
    }

    /// `I / 2^m`.
    pub fn maximally_mixed(m: usize) -> Self {
        let dim = 1usize << m;
        let p = Complex64::new(1.0 / dim as f64, 0.0);
        DensityMatrix { m, data: CMatrix::from_diagonal_element(dim, dim, p) }
    }

    /// All qubits in `|0>`.
    pub fn ground(m: usize) -> Self {
        let dim = 1usize << m;
        let mut data = CMatrix::zeros(dim, dim);
        data[(0, 0)] = Complex64::new(1.0, 0.0);
        DensityMatrix { m, data }
    }

    pub fn qubits(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        1 << self.m
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.data[(i, i)].re).sum()
    }

    pub fn purity(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.m {
            return Err(Error::QubitOutOfRange { index: q, total: self.m });
        }
        Ok(())
    }

    /// Hermiticity, unit trace, and positive semidefiniteness (to tolerance).
    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        let mut herm = 0.0f64;
        for r in 0..dim {
            for c in r..dim {
                herm = herm.max((self.data[(r, c)] - self.data[(c, r)].conj()).norm());
            }
        }
        if herm > 1e-12 {
            return Err(Error::InvalidState(format!("hermiticity error {herm:.3e}")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let eig = self.data.clone().symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < PSD_TOLERANCE {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    fn one_qubit_kernel(&mut self, q: usize, u: [[Complex64; 2]; 2]) {
        let dim = self.dim();
        let mask = 1usize << q;
        let low = mask - 1;
        // Left multiply by U.
        for c in 0..dim {
            for i in 0..dim / 2 {
                let r0 = ((i & !low) << 1) | (i & low);
                let r1 = r0 | mask;
                let a = self.data[(r0, c)];
                let b = self.data[(r1, c)];
                self.data[(r0, c)] = u[0][0] * a + u[0][1] * b;
                self.data[(r1, c)] = u[1][0] * a + u[1][1] * b;
            }
        }
        // Right multiply by U^dagger.
        for j in 0..dim / 2 {
            let c0 = ((j & !low) << 1) | (j & low);
            let c1 = c0 | mask;
            for r in 0..dim {
                let a = self.data[(r, c0)];
                let b = self.data[(r, c1)];
                self.data[(r, c0)] = a * u[0][0].conj() + b * u[0][1].conj();
                self.data[(r, c1)] = a * u[1][0].conj() + b * u[1][1].conj();
            }
        }
    }

    /// Kernel basis: local bit 0 = `qa`, local bit 1 = `qb`.
    fn two_qubit_kernel(&mut self, qa: usize, qb: usize, u: &[[Complex64; 4]; 4]) {
        assert_ne!(qa, qb);
        let dim = self.dim();
        let ma = 1usize << qa;
        let mb = 1usize << qb;
        let bases: Vec<usize> = (0..dim).filter(|v| v & ma == 0 && v & mb == 0).collect();
        let offsets = [0, ma, mb, ma | mb];
        for c in 0..dim {
            for &base in &bases {
                let old: Vec<Complex64> =
                    offsets.iter().map(|&o| self.data[(base | o, c)]).collect();
                for k in 0..4 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for l in 0..4 {
                        acc += u[k][l] * old[l];
                    }
                    self.data[(base | offsets[k], c)] = acc;
                }
            }
        }
        for &cbase in &bases {
            for r in 0..dim {
                let old: Vec<Complex64> =
                    offsets.iter().map(|&o| self.data[(r, cbase | o)]).collect();
                for k in 0..4 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for l in 0..4 {
                        acc += old[l] * u[k][l].conj();
                    }
                    self.data[(r, cbase | offsets[k])] = acc;
                }
            }
        }
    }

    /// Conjugation by a permutation-phase unitary `U|v> = phase(v) |perm(v)>`.
    fn perm_phase_conjugate<F>(&mut self, f: F)
    where
        F: Fn(usize) -> (usize, Complex64),
    {
        let dim = self.dim();
        let mut out = CMatrix::zeros(dim, dim);
        for c in 0..dim {
            let (pc, fc) = f(c);
            for r in 0..dim {
                let (pr, fr) = f(r);
                out[(pr, pc)] = fr * fc.conj() * self.data[(r, c)];
            }
        }
        self.data = out;
    }

    fn left_pauli(&self, p: &PauliString) -> CMatrix {
        let dim = self.dim();
        let x = p.x_bits() as usize;
        let mut out = CMatrix::zeros(dim, dim);
        for c in 0..dim {
            for r in 0..dim {
                out[(r, c)] = pauli_column_phase(p, (r ^ x) as u64) * self.data[(r ^ x, c)];
            }
        }
        out
    }

    fn right_pauli(&self, p: &PauliString) -> CMatrix {
        let dim = self.dim();
        let x = p.x_bits() as usize;
        let mut out = CMatrix::zeros(dim, dim);
        for c in 0..dim {
            let phase = pauli_column_phase(p, c as u64);
            for r in 0..dim {
                out[(r, c)] = self.data[(r, c ^ x)] * phase;
            }
        }
        out
    }

    /// Apply one gate, `rho -> U rho U^dagger`.
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        let inv_sqrt2 = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        match gate {
            Gate::H(q) => {
                self.check_qubit(*q)?;
                self.one_qubit_kernel(*q, [[inv_sqrt2, inv_sqrt2], [inv_sqrt2, -inv_sqrt2]]);
            }
            Gate::S(q) => {
                self.check_qubit(*q)?;
                self.one_qubit_kernel(*q, [[one, zero], [zero, Complex64::new(0.0, 1.0)]]);
            }
            Gate::Sdg(q) => {
                self.check_qubit(*q)?;
                self.one_qubit_kernel(*q, [[one, zero], [zero, Complex64::new(0.0, -1.0)]]);
            }
            Gate::Cx { control, target } => {
                self.check_qubit(*control)?;
                self.check_qubit(*target)?;
                if control == target {
                    return Err(Error::IndexCollision { index: *control });
                }
                let cm = 1usize << control;
                let tm = 1usize << target;
                self.perm_phase_conjugate(|v| {
                    if v & cm != 0 {
                        (v ^ tm, one)
                    } else {
                        (v, one)
                    }
                });
            }
            Gate::PauliExp { theta, string } => {
                if string.n() != self.m {
                    return Err(Error::LengthMismatch { left: string.n(), right: self.m });
                }
                if string.is_identity() {
                    return Ok(()); // global phase only
                }
                let c = theta.cos();
                let s = theta.sin();
                if s == 0.0 {
                    return Ok(());
                }
                // U rho U^dag with U = cos t I - i sin t P.
                let p_rho = self.left_pauli(string);
                let rho_p = self.right_pauli(string);
                let p_rho_p = DensityMatrix { m: self.m, data: p_rho.clone() }.right_pauli(string);
                let ics = Complex64::new(0.0, c * s);
                let c2 = Complex64::new(c * c, 0.0);
                let s2 = Complex64::new(s * s, 0.0);
                self.data = &self.data * c2 + p_rho_p * s2 + (rho_p - p_rho) * ics;
            }
            Gate::ControlledPauli { control, op } => {
                self.check_qubit(*control)?;
                if op.n() != self.m {
                    return Err(Error::LengthMismatch { left: op.n(), right: self.m });
                }
                let cm = 1u64 << control;
                if (op.x_bits() | op.z_bits()) & cm != 0 {
                    return Err(Error::IndexCollision { index: *control });
                }
                let x = op.x_bits() as usize;
                let op = *op;
                self.perm_phase_conjugate(move |v| {
                    if v as u64 & cm != 0 {
                        (v ^ x, pauli_column_phase(&op, v as u64))
                    } else {
                        (v, one)
                    }
                });
            }
        }
        Ok(())
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        for gate in &circuit.gates {
            self.apply_gate(gate)?;
        }
        Ok(())
    }

    /// Project qubit `q` onto `outcome`, renormalize, and return the branch
    /// probability.
    pub fn project_qubit(&mut self, q: usize, outcome: u8) -> Result<f64> {
        self.check_qubit(q)?;
        let dim = self.dim();
        let mask = 1usize << q;
        let want = (outcome as usize) << q;
        let mut p = 0.0;
        for v in 0..dim {
            if v & mask == want {
                p += self.data[(v, v)].re;
            }
        }
        if p < BRANCH_CUTOFF {
            return Err(Error::ZeroProbabilityBranch { probability: p });
        }
        let scale = Complex64::new(1.0 / p, 0.0);
        for c in 0..dim {
            for r in 0..dim {
                if r & mask == want && c & mask == want {
                    self.data[(r, c)] *= scale;
                } else {
                    self.data[(r, c)] = Complex64::new(0.0, 0.0);
                }
            }
        }
        Ok(p)
    }

    /// Measure qubit `q` in the computational basis, discard the outcome, and
    /// reset it to `|0>`.
    pub fn measure_reset(&mut self, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        let dim = self.dim();
        let mask = 1usize << q;
        let mut out = CMatrix::zeros(dim, dim);
        for c in 0..dim {
            if c & mask != 0 {
                continue;
            }
            for r in 0..dim {
                if r & mask != 0 {
                    continue;
                }
                out[(r, c)] = self.data[(r, c)] + self.data[(r | mask, c | mask)];
            }
        }
        self.data = out;
        Ok(())
    }

    /// Reduced 2x2 density matrix of one qubit.
    pub fn reduced_qubit(&self, q: usize) -> Result<[[Complex64; 2]; 2]> {
        self.check_qubit(q)?;
        let dim = self.dim();
        let mask = 1usize << q;
        let mut r = [[Complex64::new(0.0, 0.0); 2]; 2];
        for v in 0..dim {
            if v & mask != 0 {
                continue;
            }
            r[0][0] += self.data[(v, v)];
            r[0][1] += self.data[(v, v | mask)];
            r[1][0] += self.data[(v | mask, v)];
            r[1][1] += self.data[(v | mask, v | mask)];
        }
        Ok(r)
    }

    /// `Tr(rho P)` for a single word, embedded if shorter than the register.
    pub fn expectation_string(&self, p: &PauliString) -> Result<f64> {
        let val = self.expectation_string_complex(p)?;
        if val.im.abs() > 1e-10 {
            return Err(Error::InvalidState(format!(
                "expectation of {p} has imaginary part {:.3e}",
                val.im
            )));
        }
        Ok(val.re)
    }

    pub fn expectation_string_complex(&self, p: &PauliString) -> Result<Complex64> {
        if p.n() > self.m {
            return Err(Error::LengthMismatch { left: p.n(), right: self.m });
        }
        let p = p.embed(self.m);
        let dim = self.dim();
        let x = p.x_bits() as usize;
        let mut acc = Complex64::new(0.0, 0.0);
        for v in 0..dim {
            acc += self.data[(v, v ^ x)] * pauli_column_phase(&p, v as u64);
        }
        Ok(acc)
    }

    /// `Tr(rho O)` for a Hermitian sentence.
    pub fn expectation(&self, obs: &PauliSentence) -> Result<f64> {
        let mut acc = 0.0;
        for (p, c) in obs.terms() {
            acc += c * self.expectation_string(p)?;
        }
        Ok(acc)
    }

    /// `2 x` the (0,1) element of one qubit's reduced density matrix.
    ///
    /// For a probe prepared in `|+>` and evolved under a Z-type coupling this
    /// is exactly the partition-function ratio the protocols read out; a bare
    /// `exp(-i phi Z)` on a fresh probe gives `exp(-2 i phi)`.
    pub fn ancilla_coherence(&self, q: usize) -> Result<Complex64> {
        let r = self.reduced_qubit(q)?;
        Ok(2.0 * r[0][1])
    }

    /// Multinomial sampling of computational-basis outcomes after rotating
    /// each qubit into the eigenbasis of `basis` (X/Y letters; I and Z stay).
    ///
    /// Keys are bitstrings with qubit 0 leftmost. Deterministic per seed.
    pub fn sample_shots(
        &self,
        basis: &PauliString,
        shots: u64,
        seed: u64,
    ) -> Result<BTreeMap<String, u64>> {
        assert!(shots > 0, "shots must be positive");
        if basis.n() > self.m {
            return Err(Error::LengthMismatch { left: basis.n(), right: self.m });
        }
        let mut rotated = self.clone();
        for q in 0..basis.n() {
            match basis.letter(q) {
                'X' => rotated.apply_gate(&Gate::H(q))?,
                'Y' => {
                    rotated.apply_gate(&Gate::Sdg(q))?;
                    rotated.apply_gate(&Gate::H(q))?;
                }
                _ => {}
            }
        }
        let dim = rotated.dim();
        let mut probs: Vec<f64> = (0..dim).map(|v| rotated.data[(v, v)].re.max(0.0)).collect();
        let norm: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= norm;
        }
        let mut cumulative = Vec::with_capacity(dim);
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for _ in 0..shots {
            let u: f64 = rng.gen::<f64>() * acc;
            let mut idx = cumulative.partition_point(|&c| c <= u);
            if idx >= dim {
                idx = dim - 1;
            }
            // Never emit zero-probability outcomes, even on boundary hits.
            while probs[idx] == 0.0 {
                idx = (idx + 1) % dim;
            }
            let key: String =
                (0..self.m).map(|q| if idx >> q & 1 == 1 { '1' } else { '0' }).collect();
            *counts.entry(key).or_insert(0) += 1;
        }
        Ok(counts)
    }
}

/// Initial state for a register: `I/2^n` on the system (`mixed_density`) or
/// Bell pairs between system and copy (`tfd_purified`); ancillas start in
/// `|0>`.
pub fn prepare_initial(reg: &Register, mode: InitMode) -> DensityMatrix {
    let n = reg.n_system;
    let total = reg.total();
    let dim = 1usize << total;
    let mut data = CMatrix::zeros(dim, dim);
    match mode {
        InitMode::MixedDensity => {
            let p = Complex64::new(1.0 / (1 << n) as f64, 0.0);
            for v in 0..(1usize << n) {
                data[(v, v)] = p;
            }
        }
        InitMode::TfdPurified => {
            assert!(reg.copy, "TFD mode needs a copy register");
            let p = Complex64::new(1.0 / (1 << n) as f64, 0.0);
            for a in 0..(1usize << n) {
                let va = a | (a << n);
                for b in 0..(1usize << n) {
                    let vb = b | (b << n);
                    data[(va, vb)] = p;
                }
            }
        }
    }
    DensityMatrix::from_matrix(total, data)
}

/// Outcome of an imaginary-time run.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub state: DensityMatrix,
    /// Product of post-selection branch probabilities over uncorrected
    /// layers; corrected layers contribute a factor of 1.
    pub success_probability: f64,
    /// Accumulated `sum_l ln(2 A_l)` over applied layers.
    pub log_norm: f64,
}

/// Apply one RBM-encoded layer. Returns the branch probability: the
/// post-selected `|0>` probability for plain layers, exactly 1 for corrected
/// layers (both ancilla readouts are kept and repaired).
pub fn apply_rbm_layer(
    state: &mut DensityMatrix,
    layer: &IteLayer,
    ancilla: usize,
) -> Result<f64> {
    let m = state.qubits();
    let r = state.reduced_qubit(ancilla)?;
    if r[1][1].norm() > 1e-9 || r[0][1].norm() > 1e-9 {
        return Err(Error::AncillaNotReset { index: ancilla });
    }
    let sigma = layer.sigma.embed(m);
    let (pre, target) = rbm::reduce_to_z(&sigma)?;
    if target == ancilla {
        return Err(Error::IndexCollision { index: target });
    }
    state.apply_circuit(&pre)?;
    state.two_qubit_kernel(target, ancilla, &rbm::block_kernel(&layer.params));
    state.apply_circuit(&pre.inverted())?;
    match &layer.correction {
        Some(op) => {
            debug_assert_eq!(layer.params.scheme, Scheme::Correctable);
            state.apply_gate(&Gate::ControlledPauli { control: ancilla, op: op.embed(m) })?;
            state.measure_reset(ancilla)?;
            Ok(1.0)
        }
        None => state.project_qubit(ancilla, 0),
    }
}

/// Imaginary-time evolution `rho -> e^{-beta h/2} rho e^{-beta h/2} / norm`
/// through the RBM gadget sequence dictated by `plan`.
///
/// Layer `l` carries `kappa_l = beta c_l / 2` where `c_l` is the coefficient
/// of the layer's string in `h`. Identity terms of `h` never appear in plans;
/// they only shift the overall normalization, which is accounted for in
/// [`reconstruct_log_z`].
pub fn run_ite(
    state: DensityMatrix,
    h: &PauliSentence,
    beta: f64,
    plan: &CorrectionPlan,
    _side: IteSide,
    ancilla: usize,
) -> Result<RunResult> {
    if !h.is_abelian() {
        let strings: Vec<&PauliString> = h.strings().collect();
        for (i, p) in strings.iter().enumerate() {
            for q in &strings[i + 1..] {
                if !p.commutes(q).expect("equal length") {
                    return Err(Error::NonCommutingLayers { a: p.text(), b: q.text() });
                }
            }
        }
    }
    let mut state = state;
    let mut success = 1.0;
    let mut log_norm = 0.0;
    for entry in &plan.entries {
        let coeff = h.coeff(&entry.sigma);
        let kappa = beta * coeff / 2.0;
        let layer = match &entry.correction {
            Some(op) => IteLayer::with_correction(entry.sigma, kappa, *op)?,
            None => IteLayer::new(entry.sigma, kappa, entry.scheme),
        };
        let p = apply_rbm_layer(&mut state, &layer, ancilla)?;
        if layer.correction.is_none() {
            success *= p;
        }
        log_norm += (2.0 * layer.params.a).ln();
    }
    Ok(RunResult { state, success_probability: success, log_norm })
}

/// `ln Tr exp(-beta h)` reconstructed from run bookkeeping:
/// `2^n p_total prod(2A)^2` for the traceless part, times `exp(-beta c_I)`
/// for the identity coefficient.
pub fn reconstruct_log_z(run: &RunResult, h: &PauliSentence, beta: f64, n_system: usize) -> f64 {
    n_system as f64 * std::f64::consts::LN_2
        + run.success_probability.ln()
        + 2.0 * run.log_norm
        - beta * h.identity_coeff()
}

/// Dense unitary of a gate list (for verification at desk scale).
pub fn circuit_unitary(circuit: &Circuit, total: usize) -> CMatrix {
    let dim = 1usize << total;
    let mut u = CMatrix::identity(dim, dim);
    for gate in &circuit.gates {
        u = gate_matrix(gate, total) * u;
    }
    u
}

fn gate_matrix(gate: &Gate, total: usize) -> CMatrix {
    let dim = 1usize << total;
    let one = Complex64::new(1.0, 0.0);
    match gate {
        Gate::H(q) => {
            let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            embed_one_qubit(total, *q, [[s, s], [s, -s]])
        }
        Gate::S(q) => embed_one_qubit(
            total,
            *q,
            [[one, Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0)]],
        ),
        Gate::Sdg(q) => embed_one_qubit(
            total,
            *q,
            [[one, Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), Complex64::new(0.0, -1.0)]],
        ),
        Gate::Cx { control, target } => {
            let mut u = CMatrix::zeros(dim, dim);
            let cm = 1usize << control;
            let tm = 1usize << target;
            for v in 0..dim {
                let w = if v & cm != 0 { v ^ tm } else { v };
                u[(w, v)] = one;
            }
            u
        }
        Gate::PauliExp { theta, string } => {
            let p = crate::dense::pauli_matrix(&string.embed(total));
            let c = Complex64::new(theta.cos(), 0.0);
            let s = Complex64::new(0.0, -theta.sin());
            CMatrix::identity(dim, dim) * c + p * s
        }
        Gate::ControlledPauli { control, op } => {
            let mut u = CMatrix::zeros(dim, dim);
            let cm = 1u64 << control;
            let op = op.embed(total);
            let x = op.x_bits() as usize;
            for v in 0..dim {
                if v as u64 & cm != 0 {
                    u[(v ^ x, v)] = pauli_column_phase(&op, v as u64);
                } else {
                    u[(v, v)] = one;
                }
            }
            u
        }
    }
}

fn embed_one_qubit(total: usize, q: usize, u: [[Complex64; 2]; 2]) -> CMatrix {
    let dim = 1usize << total;
    let mask = 1usize << q;
    let mut m = CMatrix::zeros(dim, dim);
    for v in 0..dim {
        let vb = (v & mask != 0) as usize;
        for rb in 0..2 {
            let r = (v & !mask) | (rb << q);
            m[(r, v)] = u[rb][vb];
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correction::{plan_corrections, InitialStateKind};
    use crate::dense::{frobenius, gibbs, herm_exp, sentence_matrix, trace_distance};
    use approx::assert_relative_eq;

    fn p(text: &str) -> PauliString {
        PauliString::parse(text).unwrap()
    }

    fn random_state(m: usize, seed: u64) -> DensityMatrix {
        // Random full-rank density matrix from G G^dagger.
        let dim = 1usize << m;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let g = CMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let gg = &g * g.adjoint();
        let tr = (0..dim).map(|i| gg[(i, i)].re).sum::<f64>();
        DensityMatrix::from_matrix(m, gg / Complex64::new(tr, 0.0))
    }

    #[test]
    fn gates_match_dense_conjugation() {
        let gates = vec![
            Gate::H(1),
            Gate::S(0),
            Gate::Sdg(2),
            Gate::Cx { control: 0, target: 2 },
            Gate::PauliExp { theta: 0.37, string: p("XYZ") },
            Gate::ControlledPauli { control: 1, op: p("ZIX") },
        ];
        for gate in gates {
            let mut state = random_state(3, 7);
            let u = gate_matrix(&gate, 3);
            let expected = &u * state.matrix() * u.adjoint();
            state.apply_gate(&gate).unwrap();
            assert_relative_eq!(frobenius(&(state.matrix() - expected)), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_qubit_kernel_matches_block_unitary() {
        let params = rbm::params_correctable(0.9);
        let mut state = random_state(3, 13);
        let u = rbm::block_unitary(&params, 2, 0, 3).unwrap();
        let expected = &u * state.matrix() * u.adjoint();
        state.two_qubit_kernel(2, 0, &rbm::block_kernel(&params));
        assert_relative_eq!(frobenius(&(state.matrix() - expected)), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn prepare_initial_modes() {
        let mixed = prepare_initial(&Register::new(1, false, false), InitMode::MixedDensity);
        assert_relative_eq!(mixed.matrix()[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(mixed.matrix()[(1, 1)].re, 0.5, epsilon = 1e-15);

        let n = 2;
        let reg = Register::new(n, true, false);
        let tfd = prepare_initial(&reg, InitMode::TfdPurified);
        assert_relative_eq!(tfd.purity(), 1.0, epsilon = 1e-12);
        let reduced = crate::dense::partial_trace_keep(tfd.matrix(), reg.total(), &[0, 1]);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 0.25 } else { 0.0 };
                assert_relative_eq!(reduced[(i, j)].re, want, epsilon = 1e-12);
                assert_relative_eq!(reduced[(i, j)].im, 0.0, epsilon = 1e-12);
            }
        }

        let mixed4 = prepare_initial(&Register::new(4, false, false), InitMode::MixedDensity);
        let sys_purity: f64 = crate::dense::partial_trace_keep(mixed4.matrix(), 5, &[0, 1, 2, 3])
            .iter()
            .map(|c| c.norm_sqr())
            .sum();
        assert_relative_eq!(sys_purity, 1.0 / 16.0, epsilon = 1e-12);
    }

    #[test]
    fn expectation_on_mixed_state() {
        let state = DensityMatrix::maximally_mixed(3);
        assert_relative_eq!(state.expectation_string(&p("ZII")).unwrap(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(state.expectation_string(&p("III")).unwrap(), 1.0, epsilon = 1e-14);
        let random = random_state(2, 3);
        // Dense route.
        let obs = PauliSentence::from_text_terms(&[("XY", 0.7), ("ZI", -0.3)]).unwrap();
        let dense = sentence_matrix(&obs, 2);
        let want = (0..4)
            .map(|i| (random.matrix() * &dense)[(i, i)].re)
            .sum::<f64>();
        assert_relative_eq!(random.expectation(&obs).unwrap(), want, epsilon = 1e-12);
    }

    #[test]
    fn coherence_convention() {
        // Fresh |+> probe.
        let mut state = DensityMatrix::ground(1);
        state.apply_gate(&Gate::H(0)).unwrap();
        let c = state.ancilla_coherence(0).unwrap();
        assert_relative_eq!(c.re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(c.im, 0.0, epsilon = 1e-12);
        // exp(-i phi Z) imprints exp(-2 i phi).
        let phi = 0.4;
        state.apply_gate(&Gate::PauliExp { theta: phi, string: p("Z") }).unwrap();
        let c = state.ancilla_coherence(0).unwrap();
        assert_relative_eq!(c.re, (2.0 * phi).cos(), epsilon = 1e-12);
        assert_relative_eq!(c.im, -(2.0 * phi).sin(), epsilon = 1e-12);
    }

    #[test]
    fn rbm_layer_uncorrected_probability_and_state() {
        // sigma = Z on a single-qubit system, kappa = 0.5, mixed start.
        let reg = Register::new(1, false, false);
        let mut state = prepare_initial(&reg, InitMode::MixedDensity);
        let layer = IteLayer::new(p("Z"), 0.5, Scheme::Standard);
        let prob = apply_rbm_layer(&mut state, &layer, reg.rbm_ancilla()).unwrap();
        assert_relative_eq!(prob, 0.5 * (1.0 + (-2.0f64).exp()), epsilon = 1e-12);
        // Post state = e^{-0.5 Z} (I/2) e^{-0.5 Z} normalized.
        let ez = herm_exp(&crate::dense::pauli_matrix(&p("Z")), Complex64::new(-0.5, 0.0));
        let want = &ez * &ez / Complex64::new(2.0, 0.0);
        let want = &want / crate::dense::trace(&want);
        let sys = crate::dense::partial_trace_keep(state.matrix(), 2, &[0]);
        assert_relative_eq!(frobenius(&(sys - want)), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn corrected_layer_is_deterministic() {
        let reg = Register::new(2, false, false);
        let mut state = prepare_initial(&reg, InitMode::MixedDensity);
        let kappa = 1.5;
        let sigma = p("ZI");
        let layer = IteLayer::with_correction(sigma, kappa, p("XI")).unwrap();
        let prob = apply_rbm_layer(&mut state, &layer, reg.rbm_ancilla()).unwrap();
        assert_relative_eq!(prob, 1.0, epsilon = 1e-14);
        let ez = herm_exp(
            &sentence_matrix(&PauliSentence::from_text_terms(&[("ZI", 1.0)]).unwrap(), 2),
            Complex64::new(-kappa, 0.0),
        );
        let want = &ez * &ez / Complex64::new(4.0, 0.0);
        let want = &want / crate::dense::trace(&want);
        let sys = crate::dense::partial_trace_keep(state.matrix(), 3, &[0, 1]);
        assert_relative_eq!(frobenius(&(sys - want)), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn run_ite_single_qubit_analytic() {
        let h = PauliSentence::from_text_terms(&[("Z", 1.0)]).unwrap();
        let beta = 1.0;
        let plan = plan_corrections(
            &[(p("Z"), beta / 2.0)],
            Scheme::Standard,
            0,
            InitialStateKind::MaximallyMixed,
        )
        .unwrap();
        let reg = Register::new(1, false, false);
        let state = prepare_initial(&reg, InitMode::MixedDensity);
        let run =
            run_ite(state, &h, beta, &plan, IteSide::SymmetricHalf, reg.rbm_ancilla()).unwrap();
        let sys = crate::dense::partial_trace_keep(run.state.matrix(), 2, &[0]);
        let want = gibbs(&crate::dense::pauli_matrix(&p("Z")), beta);
        assert_relative_eq!(trace_distance(&sys, &want), 0.0, epsilon = 1e-10);
        // Z reconstruction: 2 cosh(beta).
        let logz = reconstruct_log_z(&run, &h, beta, 1);
        assert_relative_eq!(logz.exp(), 2.0 * beta.cosh(), epsilon = 1e-10);
    }

    #[test]
    fn run_ite_beta_zero_is_identity() {
        let h = PauliSentence::from_text_terms(&[("ZZ", 0.7), ("ZI", 0.2)]).unwrap();
        let plan = plan_corrections(
            &[(p("ZZ"), 0.0), (p("ZI"), 0.0)],
            Scheme::Standard,
            0,
            InitialStateKind::MaximallyMixed,
        )
        .unwrap();
        let reg = Register::new(2, false, false);
        let state = prepare_initial(&reg, InitMode::MixedDensity);
        let before = state.matrix().clone();
        let run = run_ite(state, &h, 0.0, &plan, IteSide::SymmetricHalf, reg.rbm_ancilla()).unwrap();
        assert_relative_eq!(run.success_probability, 1.0, epsilon = 1e-14);
        assert_relative_eq!(frobenius(&(run.state.matrix() - before)), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn sampler_is_deterministic_and_consistent() {
        let mut state = DensityMatrix::ground(2);
        state.apply_gate(&Gate::H(0)).unwrap();
        let counts = state.sample_shots(&p("ZZ"), 100_000, 42).unwrap();
        let again = state.sample_shots(&p("ZZ"), 100_000, 42).unwrap();
        assert_eq!(counts, again);
        // Only 00 and 10 can occur (qubit 1 stays |0>).
        assert!(counts.keys().all(|k| k == "00" || k == "10"));
        let f = counts["00"] as f64 / 100_000.0;
        // 4 sigma binomial bound around 0.5.
        assert!((f - 0.5).abs() < 4.0 * 0.5 / (100_000f64).sqrt());
    }

    #[test]
    fn validate_catches_bad_states() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = Complex64::new(1.5, 0.0);
        m[(1, 1)] = Complex64::new(-0.5, 0.0);
        let state = DensityMatrix::from_matrix(1, m);
        assert!(state.validate().is_err());
        assert!(DensityMatrix::maximally_mixed(2).validate().is_ok());
    }
}
