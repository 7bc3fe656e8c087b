//! Joint outcome tables shared by the SPDC and ideal-qubit sources, and the
//! error-correction entropies computed from them.

use std::marker::PhantomData;

use crate::entropy::{conditional_entropy, h2, DistributionTable, NoiseParam};

/// A local measurement result that can be binned to `±1` for CHSH.
pub trait LocalOutcome: Copy + PartialEq + std::fmt::Debug + Send + Sync + 'static {
    /// Every outcome, ordered by [`LocalOutcome::index`].
    const ALL: &'static [Self];
    fn index(self) -> usize;
    fn binarize(self) -> i8;
    fn label(self) -> &'static str;
}

/// Row of a binarized table: `+1` is index 0, `-1` index 1.
pub fn sign_index(v: i8) -> usize {
    if v < 0 {
        1
    } else {
        0
    }
}

/// Joint probabilities `p(a, b)` over local outcomes of Alice and Bob.
#[derive(Debug, Clone, PartialEq)]
pub struct JointOutcomeDistribution<O: LocalOutcome> {
    probs: Vec<f64>,
    _outcome: PhantomData<O>,
}

/// Which error-correction entropy a protocol pays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EcVariant {
    /// `H(B̂₁|A₀)` with Alice's key outcome left unbinned.
    FourValued,
    /// `h(Q)` with both outcomes binned to `±1`.
    Binary,
}

impl<O: LocalOutcome> JointOutcomeDistribution<O> {
    /// Row-major in `(alice index, bob index)`; no validation.
    pub(crate) fn from_vec(probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), O::ALL.len() * O::ALL.len());
        Self {
            probs,
            _outcome: PhantomData,
        }
    }

    pub fn outcomes() -> usize {
        O::ALL.len()
    }

    pub fn get(&self, a: O, b: O) -> f64 {
        self.probs[a.index() * O::ALL.len() + b.index()]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn alice_marginal(&self) -> Vec<f64> {
        let n = O::ALL.len();
        (0..n)
            .map(|a| self.probs[a * n..(a + 1) * n].iter().sum())
            .collect()
    }

    pub fn bob_marginal(&self) -> Vec<f64> {
        let n = O::ALL.len();
        (0..n)
            .map(|b| (0..n).map(|a| self.probs[a * n + b]).sum())
            .collect()
    }

    /// 2x2 table over binned outcomes, `+1` first.
    pub fn binarize(&self) -> DistributionTable {
        let mut t = vec![0.0; 4];
        for &a in O::ALL {
            for &b in O::ALL {
                t[sign_index(a.binarize()) * 2 + sign_index(b.binarize())] += self.get(a, b);
            }
        }
        DistributionTable::joint(2, 2, t).expect("coarse-graining keeps a valid table")
    }

    /// `E = p(equal) - p(different)` of the binned outcomes.
    pub fn correlator(&self) -> f64 {
        let t = self.binarize();
        t.get(0, 0) + t.get(1, 1) - t.get(0, 1) - t.get(1, 0)
    }

    /// Table of Alice's raw outcome against Bob's binned outcome after Bob
    /// flips it with probability `p`.
    pub fn key_table(&self, p: NoiseParam) -> DistributionTable {
        let p = p.p();
        let mut t = vec![0.0; O::ALL.len() * 2];
        for &a in O::ALL {
            let mut row = [0.0; 2];
            for &b in O::ALL {
                row[sign_index(b.binarize())] += self.get(a, b);
            }
            t[a.index() * 2] = (1.0 - p) * row[0] + p * row[1];
            t[a.index() * 2 + 1] = (1.0 - p) * row[1] + p * row[0];
        }
        DistributionTable::joint(O::ALL.len(), 2, t).expect("noise keeps a valid table")
    }

    /// Bit error rate `p(A ≠ B̂)` after binning both and flipping Bob's bit
    /// with probability `p`.
    pub fn qber(&self, p: NoiseParam) -> f64 {
        let t = self.binarize();
        let q0 = t.get(0, 1) + t.get(1, 0);
        let p = p.p();
        (1.0 - p) * q0 + p * (1.0 - q0)
    }

    /// Error-correction cost in bits for the chosen variant.
    pub fn error_correction_term(&self, p: NoiseParam, variant: EcVariant) -> f64 {
        match variant {
            EcVariant::FourValued => conditional_entropy(&self.key_table(p)),
            EcVariant::Binary => h2(self.qber(p)),
        }
    }
}

/// Symmetrized version of a `(A, B)` table with binary `B`: a public uniform
/// bit `T` flips `B`. The result has rows `(a, t)` (index `2a + t`) and
/// columns `B' = B ⊕ T`.
pub fn symmetrize(table: &DistributionTable) -> DistributionTable {
    assert_eq!(table.cols(), 2, "symmetrization acts on a binary column");
    let mut out = Vec::with_capacity(table.rows() * 4);
    for a in 0..table.rows() {
        let (b0, b1) = (table.get(a, 0), table.get(a, 1));
        out.extend([0.5 * b0, 0.5 * b1]);
        out.extend([0.5 * b1, 0.5 * b0]);
    }
    DistributionTable::joint(table.rows() * 2, 2, out).expect("symmetrization keeps a valid table")
}
