//! Eve's view of a Bell-diagonal two-qubit block.
//!
//! Alice and Bob share `sum_i sqrt(L_i) |Phi_i>|i>_E` over the Bell basis
//! `{Phi+, Psi-, Phi-, Psi+}`. Bob measures `cos(phi) Z + sin(phi) X` and
//! flips the outcome with probability `p`; Eve's state conditioned on Bob's
//! noisy bit is a 4x4 matrix whose spectrum fixes her conditional entropy.

use num_complex::Complex64;

use crate::entropy::{entropy_of, NoiseParam, TSIRELSON};
use crate::error::{domain, Error, Result};
use crate::hermitian::{hermitian4_eigenvalues, Matrix4};

/// Slack on the normalization and ordering of Bell-diagonal weights.
pub const WEIGHT_TOL: f64 = 1e-12;

/// Tolerance handed to the eigensolver for Eve's conditional states.
pub const STATE_TOL: f64 = 1e-10;

/// Weights `L = (L1, L2, L3, L4)` over the Bell basis, with `L1 >= L2` and `L3 >= L4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellDiagonalWeights([f64; 4]);

impl BellDiagonalWeights {
    pub fn new(l: [f64; 4]) -> Result<Self> {
        let mut l = l;
        for v in l.iter_mut() {
            if !v.is_finite() || *v < -WEIGHT_TOL {
                return Err(Error::InvalidDistribution(format!(
                    "Bell weight {v} is negative"
                )));
            }
            *v = v.max(0.0);
        }
        let total: f64 = l.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidDistribution(format!(
                "Bell weights sum to {total}"
            )));
        }
        if l[0] + WEIGHT_TOL < l[1] || l[2] + WEIGHT_TOL < l[3] {
            return Err(Error::InvalidDistribution(format!(
                "Bell weights {l:?} violate L1 >= L2, L3 >= L4"
            )));
        }
        Ok(Self(l))
    }

    /// The `(P, x, y)` parametrization: `L1 = P x`, `L3 = P (1-x)`,
    /// `L2 = (1-P) y`, `L4 = (1-P)(1-y)`.
    pub fn from_pxy(big_p: f64, x: f64, y: f64) -> Result<Self> {
        Self::new([
            big_p * x,
            (1.0 - big_p) * y,
            big_p * (1.0 - x),
            (1.0 - big_p) * (1.0 - y),
        ])
    }

    pub fn weights(&self) -> [f64; 4] {
        self.0
    }

    /// Shannon entropy `H(L)`, which equals the entropy of Eve's reduced state.
    pub fn entropy(&self) -> f64 {
        entropy_of(&self.0)
    }
}

/// Bob's key-generating measurement angle `phi`. Eve's entropies depend on it
/// only through `C = cos(2 phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementAngle(pub f64);

impl MeasurementAngle {
    /// An angle in `[0, pi/2]` with `cos(2 phi) = c`.
    pub fn from_c(c: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&c) {
            return Err(domain("C = cos(2 phi)", c, "[-1, 1]"));
        }
        Ok(Self(0.5 * c.acos()))
    }

    pub fn c(self) -> f64 {
        (2.0 * self.0).cos()
    }
}

/// Eve's normalized state conditioned on Bob's noisy outcome.
#[derive(Debug, Clone)]
pub struct EveConditionalState(pub Matrix4);

impl EveConditionalState {
    pub fn eigenvalues(&self) -> Result<[f64; 4]> {
        hermitian4_eigenvalues(&self.0, STATE_TOL)
    }

    pub fn entropy(&self) -> Result<f64> {
        Ok(entropy_of(&self.eigenvalues()?))
    }
}

/// Largest CHSH value reachable with this Bell-diagonal state:
/// `2√2 sqrt((L1 - L2)^2 + (L3 - L4)^2)`.
pub fn bell_chsh(l: &BellDiagonalWeights) -> f64 {
    let [l1, l2, l3, l4] = l.0;
    TSIRELSON * ((l1 - l2).powi(2) + (l3 - l4).powi(2)).sqrt()
}

/// Eve's state conditioned on Bob's noisy bit `b = +1` (or `-1` when
/// `outcome_plus` is false), for flip strength `q = (1-2p)^2`.
pub fn eve_conditional_state_q(
    l: &BellDiagonalWeights,
    q: f64,
    phi: MeasurementAngle,
    outcome_plus: bool,
) -> EveConditionalState {
    let [l1, l2, l3, l4] = l.0;
    let sign = if outcome_plus { 1.0 } else { -1.0 };
    let (s, c) = phi.0.sin_cos();
    let sq = q.sqrt() * sign;
    let e13 = (l1 * l3).sqrt() * sq * c;
    let e14 = (l1 * l4).sqrt() * sq * s;
    let e23 = (l2 * l3).sqrt() * sq * s;
    let e24 = -(l2 * l4).sqrt() * sq * c;
    let r = |x: f64| Complex64::new(x, 0.0);
    EveConditionalState([
        [r(l1), r(0.0), r(e13), r(e14)],
        [r(0.0), r(l2), r(e23), r(e24)],
        [r(e13), r(e23), r(l3), r(0.0)],
        [r(e14), r(e24), r(0.0), r(l4)],
    ])
}

/// Eve's state conditioned on Bob's noisy bit being `+1`.
pub fn eve_conditional_state(
    l: &BellDiagonalWeights,
    p: NoiseParam,
    phi: MeasurementAngle,
) -> EveConditionalState {
    eve_conditional_state_q(l, p.q(), phi, true)
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(domain("q", q, "(0, 1]"));
    }
    Ok(())
}

/// `s(L, q, C)`: entropy of Eve's conditional state at `phi = acos(C)/2`.
pub fn eve_conditional_entropy(l: &BellDiagonalWeights, q: f64, c: f64) -> Result<f64> {
    check_q(q)?;
    let phi = MeasurementAngle::from_c(c)?;
    eve_conditional_state_q(l, q, phi, true).entropy()
}

/// `H(L) - s(L, q, C)`: Eve's information about Bob's noisy key bit.
pub fn eve_information(l: &BellDiagonalWeights, p: NoiseParam, c: f64) -> Result<f64> {
    Ok(l.entropy() - eve_conditional_entropy(l, p.q(), c)?)
}

/// Coefficients `(a0, a1, a2)` of the characteristic polynomial
/// `x^4 - x^3 + a2 x^2 + a1 x + a0` of Eve's conditional state.
pub fn char_poly_coefficients(l: &BellDiagonalWeights, q: f64, c: f64) -> [f64; 3] {
    let [l1, l2, l3, l4] = l.0;
    let a0 = l1 * l2 * l3 * l4 * (q - 1.0).powi(2);
    let a1 = -(l1 * l2 * l3 + l2 * l4 * l3 + l1 * l2 * l4 + l1 * l3 * l4) * (1.0 - q);
    let a2 = (l1 * l2 + l3 * l2 + l4 * l2 + l1 * l3 + l1 * l4 + l3 * l4)
        - 0.5 * (l1 + l2) * (l3 + l4) * q
        - 0.5 * (l1 - l2) * (l3 - l4) * q * c;
    [a0, a1, a2]
}

/// One failed step of a monotonicity scan: entropy rose from `c_lo` to `c_hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityViolation {
    pub c_lo: f64,
    pub c_hi: f64,
    pub increase: f64,
}

/// Scans `C` over `samples` equally spaced points of `[-1, 1]` and reports
/// every step where `s(L, q, C)` increases by more than `slack`.
pub fn verify_monotonicity(
    l: &BellDiagonalWeights,
    q: f64,
    samples: usize,
    slack: f64,
) -> Result<Vec<MonotonicityViolation>> {
    check_q(q)?;
    let n = samples.max(2);
    let grid: Vec<f64> = (0..n)
        .map(|k| (-1.0 + 2.0 * k as f64 / (n - 1) as f64).clamp(-1.0, 1.0))
        .collect();
    let values = grid
        .iter()
        .map(|&c| eve_conditional_entropy(l, q, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(grid
        .windows(2)
        .zip(values.windows(2))
        .filter(|(_, v)| v[1] > v[0] + slack)
        .map(|(c, v)| MonotonicityViolation {
            c_lo: c[0],
            c_hi: c[1],
            increase: v[1] - v[0],
        })
        .collect())
}
