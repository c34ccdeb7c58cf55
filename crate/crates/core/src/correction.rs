//! Correction-operator synthesis over ordered commuting layer sequences.
//!
//! A layer `exp(-kappa sigma_j)` encoded with the correctable parameters can
//! be repaired on post-selection failure by a Pauli `O` that anticommutes
//! with `sigma_j` and commutes with every earlier layer. Such an `O` exists
//! exactly when `sigma_j` is GF(2)-independent of the earlier strings, and is
//! found by solving one linear system per layer. For mutually commuting
//! layers at most `n` of them can ever be corrected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{self, Gf2Vec};
use crate::pauli::PauliString;
use crate::rbm::Scheme;

/// Assumption made about the state the layer sequence acts on.
#[derive(Clone, Copy)]
pub enum InitialStateKind<'a> {
    /// `I/2^n`; commutes with any correction, so no extra check is needed.
    MaximallyMixed,
    /// A caller-supplied check that `O |psi> ~ |psi>` for the declared state.
    General(&'a dyn Fn(&PauliString) -> bool),
}

/// One planned layer.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlanEntry {
    pub sigma: PauliString,
    pub kappa: f64,
    pub scheme: Scheme,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correction: Option<PauliString>,
}

/// An ordered, partially corrected layer sequence.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CorrectionPlan {
    pub entries: Vec<PlanEntry>,
}

impl CorrectionPlan {
    pub fn corrected_indices(&self) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.correction.map(|_| i))
            .collect()
    }

    pub fn corrected_count(&self) -> usize {
        self.entries.iter().filter(|e| e.correction.is_some()).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::CacheFormat(e.to_string()))
    }
}

/// Minimum-weight Pauli `O` with `{O, target} = 0` and `[O, p] = 0` for every
/// `p` in `previous`, or `None` when `target` is a product of `previous`.
///
/// Weight ties break on the packed symplectic value, preferring support on
/// low qubit indices. The solution set is scanned exhaustively; sized for
/// desk-scale registers.
pub fn find_correction(previous: &[PauliString], target: &PauliString) -> Option<PauliString> {
    let n = target.n();
    debug_assert!(previous.iter().all(|p| p.n() == n), "equal qubit counts required");
    let mut rows: Vec<Gf2Vec> = previous.iter().map(|p| p.symplectic_row()).collect();
    rows.push(target.symplectic_row());
    let mut rhs = vec![false; previous.len()];
    rhs.push(true);
    let sol = gf2::solve(&rows, &rhs, 2 * n)?;

    let mut best: Option<PauliString> = None;
    let mut consider = |v: &Gf2Vec| {
        let candidate = PauliString::from_symplectic(v);
        let better = match &best {
            None => true,
            Some(b) => {
                (candidate.weight(), candidate.symplectic_key())
                    < (b.weight(), b.symplectic_key())
            }
        };
        if better {
            best = Some(candidate);
        }
    };

    // Gray-code walk over the affine solution space.
    let d = sol.null_dim();
    assert!(d <= 26, "correction search space too large ({d} free bits)");
    let mut current = sol.particular;
    consider(&current);
    let mut gray_prev = 0u32;
    for step in 1u32..(1u32 << d) {
        let gray = step ^ (step >> 1);
        let flipped = (gray ^ gray_prev).trailing_zeros() as usize;
        gray_prev = gray;
        current.xor_assign(&sol.null_basis[flipped]);
        consider(&current);
    }
    best
}

/// Greedy correction assignment over commuting layers.
///
/// Layers are ordered by |kappa| descending (text ascending on ties) and the
/// earliest-applied layers whose string is independent of everything applied
/// before them are corrected, up to `min(max_corrections, n)`. Uncorrected
/// layers keep `base_scheme`.
pub fn plan_corrections(
    layers: &[(PauliString, f64)],
    base_scheme: Scheme,
    max_corrections: usize,
    initial_state: InitialStateKind,
) -> Result<CorrectionPlan> {
    if layers.is_empty() {
        return Ok(CorrectionPlan::default());
    }
    let n = layers[0].0.n();
    for (p, _) in layers {
        if p.n() != n {
            return Err(Error::LengthMismatch { left: p.n(), right: n });
        }
    }
    for (i, (p, _)) in layers.iter().enumerate() {
        for (q, _) in &layers[i + 1..] {
            if !p.commutes(q)? {
                return Err(Error::NonCommutingLayers { a: p.text(), b: q.text() });
            }
        }
    }

    let mut ordered: Vec<(PauliString, f64)> = layers.to_vec();
    ordered.sort_by(|(pa, ka), (pb, kb)| {
        kb.abs()
            .partial_cmp(&ka.abs())
            .expect("finite kappas")
            .then_with(|| pa.cmp(pb))
    });

    let budget = max_corrections.min(n);
    let mut entries = Vec::with_capacity(ordered.len());
    let mut applied: Vec<PauliString> = Vec::new();
    let mut corrected = 0usize;
    for (sigma, kappa) in ordered {
        let mut correction = None;
        if corrected < budget && !sigma.is_identity() {
            if let Some(op) = find_correction(&applied, &sigma) {
                let admissible = match initial_state {
                    InitialStateKind::MaximallyMixed => true,
                    InitialStateKind::General(check) => check(&op),
                };
                if admissible {
                    correction = Some(op);
                    corrected += 1;
                }
            }
        }
        let scheme = if correction.is_some() { Scheme::Correctable } else { base_scheme };
        entries.push(PlanEntry { sigma, kappa, scheme, correction });
        applied.push(sigma);
    }
    Ok(CorrectionPlan { entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(text: &str) -> PauliString {
        PauliString::parse(text).unwrap()
    }

    #[test]
    fn first_layer_correction_is_min_weight() {
        // Exhaustive ground truth over all 16 two-qubit words: anticommute
        // with ZZ, minimum weight, lexicographic tie-break -> XI.
        assert_eq!(find_correction(&[], &p("ZZ")).unwrap(), p("XI"));
    }

    #[test]
    fn second_layer_respects_first() {
        let o = find_correction(&[p("ZI")], &p("IZ")).unwrap();
        assert_eq!(o, p("IX"));
        assert!(o.commutes(&p("ZI")).unwrap());
        assert!(!o.commutes(&p("IZ")).unwrap());
    }

    #[test]
    fn dependent_target_has_no_correction() {
        assert!(find_correction(&[p("ZI"), p("IZ")], &p("ZZ")).is_none());
    }

    #[test]
    fn exhaustive_validation_n2() {
        // For every previous-set/target drawn from the two-qubit words, the
        // returned operator satisfies the commutation pattern, and absence
        // coincides with GF(2) dependence.
        let letters = ['I', 'X', 'Y', 'Z'];
        let all: Vec<PauliString> = letters
            .iter()
            .flat_map(|a| letters.iter().map(move |b| p(&format!("{a}{b}"))))
            .collect();
        for prev1 in &all {
            for target in &all {
                if target.is_identity() {
                    assert!(find_correction(&[*prev1], target).is_none());
                    continue;
                }
                let previous = vec![*prev1];
                match find_correction(&previous, target) {
                    Some(o) => {
                        assert!(o.commutes(prev1).unwrap());
                        assert!(!o.commutes(target).unwrap());
                    }
                    None => {
                        assert!(!crate::pauli::is_independent(target, &previous));
                    }
                }
            }
        }
    }

    #[test]
    fn plan_sorts_by_kappa_and_corrects_independent_layers() {
        let plan = plan_corrections(
            &[(p("IZ"), 1.0), (p("ZI"), 2.0)],
            Scheme::Standard,
            8,
            InitialStateKind::MaximallyMixed,
        )
        .unwrap();
        assert_eq!(plan.entries[0].sigma, p("ZI"));
        assert_eq!(plan.entries[1].sigma, p("IZ"));
        assert_eq!(plan.corrected_count(), 2);
        assert!(plan.entries.iter().all(|e| e.scheme == Scheme::Correctable));
    }

    #[test]
    fn dependent_layer_stays_probabilistic() {
        let plan = plan_corrections(
            &[(p("ZI"), 3.0), (p("IZ"), 2.0), (p("ZZ"), 1.0)],
            Scheme::Standard,
            8,
            InitialStateKind::MaximallyMixed,
        )
        .unwrap();
        assert_eq!(plan.corrected_count(), 2);
        let last = &plan.entries[2];
        assert_eq!(last.sigma, p("ZZ"));
        assert!(last.correction.is_none());
        assert_eq!(last.scheme, Scheme::Standard);
    }

    #[test]
    fn zero_budget_gives_probabilistic_plan() {
        let plan = plan_corrections(
            &[(p("ZI"), 2.0), (p("IZ"), 1.0)],
            Scheme::Standard,
            0,
            InitialStateKind::MaximallyMixed,
        )
        .unwrap();
        assert_eq!(plan.corrected_count(), 0);
        assert!(plan.entries.iter().all(|e| e.correction.is_none()));
    }

    #[test]
    fn corrected_count_capped_at_qubit_count() {
        // Three commuting, pairwise independent strings on 2 qubits do not
        // exist; the rank bound caps corrections at n = 2 regardless of the
        // requested budget.
        let plan = plan_corrections(
            &[(p("ZZ"), 3.0), (p("ZI"), 2.0), (p("IZ"), 1.0)],
            Scheme::Standard,
            100,
            InitialStateKind::MaximallyMixed,
        )
        .unwrap();
        assert_eq!(plan.corrected_count(), 2);
    }

    #[test]
    fn general_initial_state_gates_corrections() {
        let reject_all = |_: &PauliString| false;
        let plan = plan_corrections(
            &[(p("ZI"), 2.0)],
            Scheme::Standard,
            4,
            InitialStateKind::General(&reject_all),
        )
        .unwrap();
        assert_eq!(plan.corrected_count(), 0);
    }

    #[test]
    fn non_commuting_layers_rejected() {
        let err = plan_corrections(
            &[(p("XI"), 1.0), (p("ZI"), 1.0)],
            Scheme::Standard,
            4,
            InitialStateKind::MaximallyMixed,
        );
        assert!(matches!(err, Err(Error::NonCommutingLayers { .. })));
    }

    #[test]
    fn plan_serialization_roundtrip() {
        let plan = plan_corrections(
            &[(p("ZI"), 2.0), (p("ZZ"), 1.0)],
            Scheme::Standard,
            1,
            InitialStateKind::MaximallyMixed,
        )
        .unwrap();
        let text = plan.to_json();
        let back = CorrectionPlan::from_json(&text).unwrap();
        assert_eq!(back.entries.len(), plan.entries.len());
        for (a, b) in back.entries.iter().zip(plan.entries.iter()) {
            assert_eq!(a.sigma, b.sigma);
            assert_eq!(a.correction, b.correction);
            assert_eq!(a.scheme, b.scheme);
        }
    }
}
