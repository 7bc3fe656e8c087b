//! Scalar entropy functions and the closed-form bound on Eve's information.
//!
//! All entropies are in bits and use the convention `0 log 0 = 0`.

use crate::error::{domain, Error, Result};

/// Slack within which probabilities just outside `[0, 1]` are clamped.
pub const PROB_SLACK: f64 = 1e-12;

/// Slack within which CHSH scores just outside `[2, 2√2]` are clamped.
pub const CHSH_SLACK: f64 = 1e-9;

/// Tsirelson's bound `2√2`.
pub const TSIRELSON: f64 = 2.0 * std::f64::consts::SQRT_2;

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || !(-PROB_SLACK..=1.0 + PROB_SLACK).contains(&value) {
            return Err(domain("probability", value, "[0, 1]"));
        }
        Ok(Self(value.clamp(0.0, 1.0)))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Bit-flip probability `p` of the noisy pre-processing step.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct NoiseParam(f64);

impl NoiseParam {
    pub const ZERO: NoiseParam = NoiseParam(0.0);

    pub fn new(p: f64) -> Result<Self> {
        if !p.is_finite() || !(-PROB_SLACK..=0.5 + PROB_SLACK).contains(&p) {
            return Err(domain("noise parameter p", p, "[0, 0.5]"));
        }
        Ok(Self(p.clamp(0.0, 0.5)))
    }

    pub fn p(self) -> f64 {
        self.0
    }

    /// `q = (1 - 2p)^2`.
    pub fn q(self) -> f64 {
        let s = 1.0 - 2.0 * self.0;
        s * s
    }
}

/// A CHSH score as estimated from statistics. Raw scores may lie anywhere in
/// `[-4, 4]`; the bound functions only accept `[2, 2√2]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ChshScore(f64);

impl ChshScore {
    pub fn new(s: f64) -> Result<Self> {
        if !s.is_finite() || s.abs() > 4.0 + CHSH_SLACK {
            return Err(domain("CHSH score", s, "[-4, 4]"));
        }
        Ok(Self(s))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Returns the score clamped into `[2, 2√2]` if it lies within
    /// [`CHSH_SLACK`] of that interval.
    pub fn in_bound_domain(self) -> Result<f64> {
        let s = self.0;
        if !(2.0 - CHSH_SLACK..=TSIRELSON + CHSH_SLACK).contains(&s) {
            return Err(domain("CHSH score", s, "[2, 2√2]"));
        }
        Ok(s.clamp(2.0, TSIRELSON))
    }
}

#[inline]
fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Binary entropy without range checks. Callers guarantee `z ∈ [0, 1]`.
#[inline]
pub(crate) fn h2(z: f64) -> f64 {
    -xlog2x(z) - xlog2x(1.0 - z)
}

/// Binary entropy `h(z) = -z log2 z - (1-z) log2 (1-z)`.
pub fn binary_entropy(z: Probability) -> f64 {
    h2(z.value())
}

#[inline]
fn n_q_raw(z: f64, q: f64) -> f64 {
    let radicand = (1.0 - 4.0 * (1.0 - q) * z * (1.0 - z)).max(0.0);
    0.5 * (1.0 + radicand.sqrt())
}

fn check_q(q: f64) -> Result<f64> {
    if !q.is_finite() || q <= 0.0 || q > 1.0 + PROB_SLACK {
        return Err(domain("q", q, "(0, 1]"));
    }
    Ok(q.min(1.0))
}

/// `n_q(z) = (1 + sqrt(1 - 4 (1-q) z (1-z))) / 2`, a value in `[1/2, 1]`.
pub fn n_q(z: Probability, q: f64) -> Result<Probability> {
    let q = check_q(q)?;
    Ok(Probability(n_q_raw(z.value(), q)))
}

/// `h_q(z) = h(z) - h(n_q(z))`.
///
/// `q = 0` is accepted here as a limit (the result is then identically zero);
/// this is the only function that admits it.
pub fn h_q(z: Probability, q: f64) -> Result<f64> {
    if q == 0.0 {
        return Ok(0.0);
    }
    let q = check_q(q)?;
    let z = z.value();
    Ok(h2(z) - h2(n_q_raw(z, q)))
}

/// Closed-form upper bound `I_p(S)` on Eve's information about Bob's noisy
/// key bit, given a CHSH score `S ∈ [2, 2√2]` and flip probability `p`.
///
/// ```text
/// I_p(S) = h((1 + sqrt((S/2)^2 - 1)) / 2) - h((1 + sqrt(1 - p(1-p)(8 - S^2))) / 2)
/// ```
pub fn eve_info_bound(s: ChshScore, p: NoiseParam) -> Result<f64> {
    let s = s.in_bound_domain()?;
    Ok(eve_info_bound_unchecked(s, p.p()))
}

#[inline]
pub(crate) fn eve_info_bound_unchecked(s: f64, p: f64) -> f64 {
    let a = (0.25 * s * s - 1.0).max(0.0).sqrt();
    let b = (1.0 - p * (1.0 - p) * (8.0 - s * s)).max(0.0).sqrt();
    (h2(0.5 * (1.0 + a)) - h2(0.5 * (1.0 + b))).max(0.0)
}

/// The same bound written through `h_q`: `I_E(S; q) = h_q((1 + sqrt(2 (S/2√2)^2 - 1)) / 2)`.
pub fn eve_info_bound_hq(s: ChshScore, q: f64) -> Result<f64> {
    let s = s.in_bound_domain()?;
    let r = s / TSIRELSON;
    let z = 0.5 * (1.0 + (2.0 * r * r - 1.0).max(0.0).sqrt());
    h_q(Probability(z.min(1.0)), q)
}

/// A finite distribution over one variable (`cols == 1`) or a joint
/// distribution over two variables stored row-major as `rows x cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionTable {
    rows: usize,
    cols: usize,
    probs: Vec<f64>,
}

/// Tolerance on the total mass of a [`DistributionTable`].
pub const NORMALIZATION_TOL: f64 = 1e-12;

impl DistributionTable {
    /// A single-variable distribution.
    pub fn marginal(probs: Vec<f64>) -> Result<Self> {
        let n = probs.len();
        Self::joint(n, 1, probs)
    }

    /// A two-variable distribution `p(a, b)` with `a` indexing rows.
    pub fn joint(rows: usize, cols: usize, mut probs: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || probs.len() != rows * cols {
            return Err(Error::InvalidDistribution(format!(
                "expected {rows}x{cols} entries, got {}",
                probs.len()
            )));
        }
        for v in probs.iter_mut() {
            if !v.is_finite() || *v < -PROB_SLACK {
                return Err(Error::InvalidDistribution(format!("entry {v} is negative")));
            }
            *v = v.max(0.0);
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "total mass {total} differs from 1"
            )));
        }
        Ok(Self { rows, cols, probs })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.probs[row * self.cols + col]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Marginal over the row variable.
    pub fn row_marginal(&self) -> Vec<f64> {
        self.probs
            .chunks(self.cols)
            .map(|r| r.iter().sum())
            .collect()
    }

    /// Marginal over the column variable.
    pub fn col_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for row in self.probs.chunks(self.cols) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }
}

/// Shannon entropy of all entries of the table, in bits.
pub fn shannon_entropy(dist: &DistributionTable) -> f64 {
    entropy_of(dist.probs())
}

/// Shannon entropy of a slice of nonnegative weights. No normalization check.
pub(crate) fn entropy_of(probs: &[f64]) -> f64 {
    -probs.iter().map(|&p| xlog2x(p)).sum::<f64>()
}

/// `H(col | row) = H(row, col) - H(row)` for a joint table.
pub fn conditional_entropy(joint: &DistributionTable) -> f64 {
    (entropy_of(joint.probs()) - entropy_of(&joint.row_marginal())).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pr(z: f64) -> Probability {
        Probability::new(z).unwrap()
    }

    fn s(v: f64) -> ChshScore {
        ChshScore::new(v).unwrap()
    }

    fn np(p: f64) -> NoiseParam {
        NoiseParam::new(p).unwrap()
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(pr(0.0)), 0.0);
        assert_eq!(binary_entropy(pr(1.0)), 0.0);
        assert_abs_diff_eq!(binary_entropy(pr(0.5)), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(binary_entropy(pr(0.11)), 0.499915958164528, epsilon = 1e-12);
    }

    #[test]
    fn probability_domain() {
        assert!(Probability::new(-1e-6).is_err());
        assert!(Probability::new(1.0 + 1e-6).is_err());
        assert!(Probability::new(f64::NAN).is_err());
        assert_eq!(Probability::new(-1e-13).unwrap().value(), 0.0);
        assert_eq!(Probability::new(1.0 + 1e-13).unwrap().value(), 1.0);
    }

    #[test]
    fn n_q_limits() {
        for z in [0.0, 0.1, 0.37, 0.5, 0.9] {
            assert_abs_diff_eq!(n_q(pr(z), 1.0).unwrap().value(), 1.0, epsilon = 1e-15);
        }
        for q in [1e-9, 0.3, 1.0] {
            assert_eq!(n_q(pr(0.0), q).unwrap().value(), 1.0);
        }
        // q -> 0: radicand becomes (1 - 2z)^2
        for z in [0.1, 0.3, 0.8] {
            let got = n_q(pr(z), 1e-14).unwrap().value();
            assert_abs_diff_eq!(got, f64::max(z, 1.0 - z), epsilon = 1e-7);
        }
        assert!(n_q(pr(0.3), 0.0).is_err());
        assert!(n_q(pr(0.3), 1.5).is_err());
    }

    #[test]
    fn h_q_special_cases() {
        for z in [0.0, 0.2, 0.5, 0.77] {
            assert_abs_diff_eq!(
                h_q(pr(z), 1.0).unwrap(),
                binary_entropy(pr(z)),
                epsilon = 1e-15
            );
            assert_eq!(h_q(pr(z), 0.0).unwrap(), 0.0);
        }
        for q in [0.1, 0.5, 0.9] {
            assert_eq!(h_q(pr(0.0), q).unwrap(), 0.0);
            assert_eq!(h_q(pr(1.0), q).unwrap(), 0.0);
        }
    }

    #[test]
    fn bound_at_tsirelson_is_zero() {
        for p in [0.0, 0.1, 0.3, 0.5] {
            assert_abs_diff_eq!(
                eve_info_bound(s(TSIRELSON), np(p)).unwrap(),
                0.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn bound_at_classical_limit() {
        for p in [0.1, 0.3] {
            let expected = 1.0 - binary_entropy(pr(p));
            assert_abs_diff_eq!(
                eve_info_bound(s(2.0), np(p)).unwrap(),
                expected,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn bound_without_noise_is_single_entropy() {
        for sv in [2.0, 2.3, 2.6, 2.8] {
            let z = 0.5 * (1.0 + ((sv / 2.0f64).powi(2) - 1.0).sqrt());
            assert_abs_diff_eq!(
                eve_info_bound(s(sv), NoiseParam::ZERO).unwrap(),
                binary_entropy(pr(z)),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn two_bound_routes_agree() {
        for sv in [2.0, 2.1, 2.4, 2.7, TSIRELSON] {
            for p in [0.0, 0.05, 0.2, 0.45] {
                let a = eve_info_bound(s(sv), np(p)).unwrap();
                let b = eve_info_bound_hq(s(sv), np(p).q()).unwrap();
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn bound_domain_and_clamping() {
        assert!(eve_info_bound(s(1.99), np(0.1)).is_err());
        assert!(eve_info_bound(s(2.9), np(0.1)).is_err());
        assert_eq!(eve_info_bound(s(TSIRELSON + 5e-10), np(0.1)).unwrap(), 0.0);
        assert!(eve_info_bound(s(TSIRELSON + 1e-8), np(0.1)).is_err());
        assert!(NoiseParam::new(0.6).is_err());
        assert!(ChshScore::new(4.5).is_err());
    }

    #[test]
    fn shannon_entropy_values() {
        let d = DistributionTable::marginal(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(shannon_entropy(&d), 0.0);
        let d = DistributionTable::marginal(vec![0.25; 4]).unwrap();
        assert_abs_diff_eq!(shannon_entropy(&d), 2.0, epsilon = 1e-15);
        let d = DistributionTable::marginal(vec![0.5, 0.25, 0.25]).unwrap();
        assert_abs_diff_eq!(shannon_entropy(&d), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn distribution_validation() {
        assert!(DistributionTable::marginal(vec![0.5, 0.6, -0.1]).is_err());
        assert!(DistributionTable::marginal(vec![0.5, 0.4]).is_err());
        assert!(DistributionTable::joint(2, 2, vec![1.0]).is_err());
        let d = DistributionTable::marginal(vec![1.0 + 5e-13, -5e-13]).unwrap();
        assert_eq!(d.probs()[1], 0.0);
    }

    #[test]
    fn conditional_entropy_values() {
        let indep = DistributionTable::joint(2, 2, vec![0.25; 4]).unwrap();
        assert_abs_diff_eq!(conditional_entropy(&indep), 1.0, epsilon = 1e-15);
        let corr = DistributionTable::joint(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_abs_diff_eq!(conditional_entropy(&corr), 0.0, epsilon = 1e-15);
        let noisy = DistributionTable::joint(2, 2, vec![0.4, 0.1, 0.1, 0.4]).unwrap();
        assert_abs_diff_eq!(
            conditional_entropy(&noisy),
            0.7219280948873623,
            epsilon = 1e-12
        );
    }
}
