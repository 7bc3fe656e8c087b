//! Ideal two-qubit reference source `cos θ|00> + sin θ|11>` measured in the
//! X-Z plane, with each party's detector firing independently with
//! probability `eta`.

use std::f64::consts::FRAC_PI_4;

use crate::error::{domain, Result};
use crate::stats::{JointOutcomeDistribution, LocalOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QubitOutcome {
    Plus,
    Minus,
    NoClick,
}

impl LocalOutcome for QubitOutcome {
    const ALL: &'static [Self] = &[
        QubitOutcome::Plus,
        QubitOutcome::Minus,
        QubitOutcome::NoClick,
    ];

    fn index(self) -> usize {
        self as usize
    }

    /// A missing click is binned with `+1`.
    fn binarize(self) -> i8 {
        match self {
            QubitOutcome::Minus => -1,
            _ => 1,
        }
    }

    fn label(self) -> &'static str {
        match self {
            QubitOutcome::Plus => "+1",
            QubitOutcome::Minus => "-1",
            QubitOutcome::NoClick => "none",
        }
    }
}

/// Outcome statistics for observables `cos α Z + sin α X` (Alice) and
/// `cos β Z + sin β X` (Bob).
pub fn qubit_source_distribution(
    theta: f64,
    alpha: f64,
    beta: f64,
    eta: f64,
) -> Result<JointOutcomeDistribution<QubitOutcome>> {
    if !(0.0..=FRAC_PI_4 + 1e-12).contains(&theta) {
        return Err(domain("state angle theta", theta, "[0, pi/4]"));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(domain("detection efficiency", eta, "[0, 1]"));
    }
    let (s2t, c2t) = (2.0 * theta).sin_cos();
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let ea = ca * c2t;
    let eb = cb * c2t;
    let eab = ca * cb + s2t * sa * sb;

    use QubitOutcome::*;
    let sign = |o: QubitOutcome| if o == Plus { 1.0 } else { -1.0 };
    let mut probs = vec![0.0; 9];
    for &a in QubitOutcome::ALL {
        for &b in QubitOutcome::ALL {
            let v = match (a, b) {
                (NoClick, NoClick) => (1.0 - eta) * (1.0 - eta),
                (NoClick, b) => (1.0 - eta) * eta * 0.5 * (1.0 + sign(b) * eb),
                (a, NoClick) => eta * (1.0 - eta) * 0.5 * (1.0 + sign(a) * ea),
                (a, b) => {
                    let (x, y) = (sign(a), sign(b));
                    eta * eta * 0.25 * (1.0 + x * ea + y * eb + x * y * eab)
                }
            };
            probs[a.index() * 3 + b.index()] = v.max(0.0);
        }
    }
    Ok(JointOutcomeDistribution::from_vec(probs))
}

/// CHSH score of the binned statistics for angles `(a1, a2, b1, b2)`.
pub fn qubit_chsh(theta: f64, angles: [f64; 4], eta: f64) -> Result<f64> {
    let [a1, a2, b1, b2] = angles;
    let e = |a, b| qubit_source_distribution(theta, a, b, eta).map(|d| d.correlator());
    Ok(e(a1, b1)? + e(a1, b2)? + e(a2, b1)? - e(a2, b2)?)
}
