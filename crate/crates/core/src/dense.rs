//! Dense operator workhorse for desk-scale registers.
//!
//! Basis convention: computational basis index `v` holds qubit `q` in bit
//! `(v >> q) & 1`, so qubit 0 (the leftmost text character) is the least
//! significant bit.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{PauliSentence, PauliString};

pub type CMatrix = DMatrix<Complex64>;

pub const DENSE_MAX_QUBITS: usize = 12;

pub fn check_dense_size(n: usize) -> Result<()> {
    if n > DENSE_MAX_QUBITS {
        return Err(Error::SizeLimit { qubits: n, max: DENSE_MAX_QUBITS });
    }
    Ok(())
}

/// Phase of `P|v> = phase * |v ^ x>` for the canonical word `i^{|x.z|} X^x Z^z`.
pub fn pauli_column_phase(p: &PauliString, v: u64) -> Complex64 {
    let y_count = (p.x_bits() & p.z_bits()).count_ones();
    let sign_flips = (p.z_bits() & v).count_ones();
    let exponent = (y_count + 2 * sign_flips) % 4;
    match exponent {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Dense matrix of a single Pauli word.
pub fn pauli_matrix(p: &PauliString) -> CMatrix {
    let dim = 1usize << p.n();
    let mut m = CMatrix::zeros(dim, dim);
    for v in 0..dim as u64 {
        let r = v ^ p.x_bits();
        m[(r as usize, v as usize)] = pauli_column_phase(p, v);
    }
    m
}

/// Dense matrix of a sentence, optionally embedded in `total` qubits.
pub fn sentence_matrix(s: &PauliSentence, total: usize) -> CMatrix {
    assert!(total >= s.n());
    let dim = 1usize << total;
    let mut m = CMatrix::zeros(dim, dim);
    for (p, c) in s.terms() {
        let p = p.embed(total);
        for v in 0..dim as u64 {
            let r = v ^ p.x_bits();
            m[(r as usize, v as usize)] += pauli_column_phase(&p, v) * c;
        }
    }
    m
}

/// `exp(scale * H)` for Hermitian `H`, via eigendecomposition.
pub fn herm_exp(h: &CMatrix, scale: Complex64) -> CMatrix {
    let eig = h.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|lambda| (scale * lambda).exp()));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// General matrix exponential (scaling-and-squaring).
pub fn expm(m: &CMatrix) -> CMatrix {
    m.clone().exp()
}

/// Gibbs state `exp(-beta H) / Tr exp(-beta H)` of a Hermitian matrix.
pub fn gibbs(h: &CMatrix, beta: f64) -> CMatrix {
    let e = herm_exp(h, Complex64::new(-beta, 0.0));
    let z = trace(&e);
    e / z
}

pub fn trace(m: &CMatrix) -> Complex64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Trace distance `0.5 ||a - b||_1` between Hermitian matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = a - b;
    let eig = diff.symmetric_eigen();
    0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>()
}

/// Partial trace keeping `keep` (strictly increasing qubit indices) of `total`.
pub fn partial_trace_keep(rho: &CMatrix, total: usize, keep: &[usize]) -> CMatrix {
    debug_assert!(keep.windows(2).all(|w| w[0] < w[1]));
    debug_assert!(keep.iter().all(|&q| q < total));
    let traced: Vec<usize> = (0..total).filter(|q| !keep.contains(q)).collect();
    let kd = 1usize << keep.len();
    let td = 1usize << traced.len();
    let spread = |bits: usize, positions: &[usize]| -> usize {
        positions
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &q)| acc | (((bits >> i) & 1) << q))
    };
    let mut out = CMatrix::zeros(kd, kd);
    for r in 0..kd {
        for c in 0..kd {
            let rk = spread(r, keep);
            let ck = spread(c, keep);
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..td {
                let tk = spread(t, &traced);
                acc += rho[(rk | tk, ck | tk)];
            }
            out[(r, c)] = acc;
        }
    }
    out
}

/// Frobenius norm of the matrix commutator [A, B].
pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    frobenius(&(a * b - b * a))
}

/// Frobenius norm of the anticommutator {A, B}.
pub fn anticommutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    frobenius(&(a * b + b * a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::SignedPauli;
    use approx::assert_relative_eq;

    fn p(text: &str) -> PauliString {
        PauliString::parse(text).unwrap()
    }

    #[test]
    fn single_qubit_matrices() {
        let x = pauli_matrix(&p("X"));
        assert_eq!(x[(0, 1)], Complex64::new(1.0, 0.0));
        assert_eq!(x[(1, 0)], Complex64::new(1.0, 0.0));
        let y = pauli_matrix(&p("Y"));
        assert_eq!(y[(1, 0)], Complex64::new(0.0, 1.0));
        assert_eq!(y[(0, 1)], Complex64::new(0.0, -1.0));
        let z = pauli_matrix(&p("Z"));
        assert_eq!(z[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(z[(1, 1)], Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn qubit_zero_is_least_significant() {
        // ZI flips sign on bit 0 of the index.
        let zi = pauli_matrix(&p("ZI"));
        assert_eq!(zi[(1, 1)], Complex64::new(-1.0, 0.0));
        assert_eq!(zi[(2, 2)], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn dense_products_match_symbolic_phases_exhaustively() {
        // Exhaustive n = 2 check that dense products equal phase-tracked ones.
        let letters = ['I', 'X', 'Y', 'Z'];
        for a0 in letters {
            for a1 in letters {
                for b0 in letters {
                    for b1 in letters {
                        let pa = p(&format!("{a0}{a1}"));
                        let pb = p(&format!("{b0}{b1}"));
                        let prod = SignedPauli::positive(pa)
                            .multiply(&SignedPauli::positive(pb))
                            .unwrap();
                        let dense = pauli_matrix(&pa) * pauli_matrix(&pb);
                        let symbolic = pauli_matrix(&prod.string) * prod.phase.as_complex();
                        assert_relative_eq!(
                            frobenius(&(dense - symbolic)),
                            0.0,
                            epsilon = 1e-12
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn commute_or_anticommute_dichotomy() {
        let letters = ['I', 'X', 'Y', 'Z'];
        for a0 in letters {
            for a1 in letters {
                for b0 in letters {
                    for b1 in letters {
                        let pa = p(&format!("{a0}{a1}"));
                        let pb = p(&format!("{b0}{b1}"));
                        let ma = pauli_matrix(&pa);
                        let mb = pauli_matrix(&pb);
                        let commutes = commutator_norm(&ma, &mb) < 1e-12;
                        let anticommutes = anticommutator_norm(&ma, &mb) < 1e-12;
                        assert!(commutes ^ anticommutes);
                        assert_eq!(pa.commutes(&pb).unwrap(), commutes);
                    }
                }
            }
        }
    }

    #[test]
    fn herm_exp_matches_general_expm() {
        let h = sentence_matrix(
            &PauliSentence::from_text_terms(&[("XZ", 0.7), ("ZY", -0.4), ("II", 0.2)]).unwrap(),
            2,
        );
        let a = herm_exp(&h, Complex64::new(-0.9, 0.0));
        let b = expm(&(&h * Complex64::new(-0.9, 0.0)));
        assert_relative_eq!(frobenius(&(a - b)), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn partial_trace_of_product_state() {
        // rho = |0><0| (qubit 0) x I/2 (qubit 1); keeping qubit 0 recovers |0><0|.
        let mut rho = CMatrix::zeros(4, 4);
        rho[(0, 0)] = Complex64::new(0.5, 0.0);
        rho[(2, 2)] = Complex64::new(0.5, 0.0);
        let red = partial_trace_keep(&rho, 2, &[0]);
        assert_relative_eq!(red[(0, 0)].re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(red[(1, 1)].re, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states_is_one() {
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 0)] = Complex64::new(1.0, 0.0);
        let mut b = CMatrix::zeros(2, 2);
        b[(1, 1)] = Complex64::new(1.0, 0.0);
        assert_relative_eq!(trace_distance(&a, &b), 1.0, epsilon = 1e-12);
    }
}
