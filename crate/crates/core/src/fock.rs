//! Brute-force click statistics from a truncated Fock-space expansion of the
//! single-mode-pair source.
//!
//! The emitted state `sum_{n,m} T_g^n (-T_ḡ)^m |n,m>_a |m,n>_b` is truncated
//! at `cutoff` photons per emitted mode, normalized, and rewritten in the
//! detected modes after each party's polarization rotation. Each detector
//! then stays silent on `k` photons with probability `(1 - p_dc)(1 - eta)^k`.
//! Nothing here uses the coupling-matrix formulas of [`crate::spdc`].

use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::spdc::{
    ClickPattern, DetectionModel, Detector, MeasurementSetting, SqueezedSourceParams,
};
use crate::stats::{JointOutcomeDistribution, LocalOutcome};

pub const DEFAULT_CUTOFF: usize = 20;

fn factorials(n: usize) -> Vec<f64> {
    let mut f = vec![1.0; n + 1];
    for k in 1..=n {
        f[k] = f[k - 1] * k as f64;
    }
    f
}

/// Amplitudes of `(u†)^n1 (w†)^n2 / sqrt(n1! n2!) |0>` on detected states
/// `|k, t-k>`, with `u† = c X† + s e^{iφ} Y†` and `w† = s e^{-iφ} X† - c Y†`.
fn rotate_pair(n1: usize, n2: usize, setting: MeasurementSetting, fact: &[f64]) -> Vec<Complex64> {
    let t = n1 + n2;
    let (s, c) = setting.angle.sin_cos();
    let e = Complex64::from_polar(1.0, setting.phase);
    let binom = |n: usize, k: usize| fact[n] / (fact[k] * fact[n - k]);
    let mut out = vec![Complex64::new(0.0, 0.0); t + 1];
    for k in 0..=n1 {
        // k copies of X† from u†, n1-k of Y†
        let uk = binom(n1, k) * c.powi(k as i32) * (e * s).powi((n1 - k) as i32);
        for j in 0..=n2 {
            let wj = binom(n2, j) * (e.conj() * s).powi(j as i32) * (-c).powi((n2 - j) as i32);
            out[k + j] += uk * wj;
        }
    }
    let norm = 1.0 / (fact[n1] * fact[n2]).sqrt();
    for (x, v) in out.iter_mut().enumerate() {
        *v *= norm * (fact[x] * fact[t - x]).sqrt();
    }
    out
}

/// Probability that a detector stays silent when `k` photons reach it.
fn silent(det: &DetectionModel, d: Detector, k: usize) -> f64 {
    (1.0 - det.dark_count(d)) * det.loss(d).powi(k as i32)
}

/// Click-pattern probabilities of one party holding `k` photons in the main
/// mode and `t - k` in the other.
fn local_patterns(
    det: &DetectionModel,
    main: Detector,
    perp: Detector,
    k: usize,
    t: usize,
) -> [f64; 4] {
    let s1 = silent(det, main, k);
    let s2 = silent(det, perp, t - k);
    let mut out = [0.0; 4];
    out[ClickPattern::NONE.index()] = s1 * s2;
    out[ClickPattern::MAIN.index()] = (1.0 - s1) * s2;
    out[ClickPattern::PERP.index()] = s1 * (1.0 - s2);
    out[ClickPattern::BOTH.index()] = (1.0 - s1) * (1.0 - s2);
    out
}

/// Click statistics of a single mode pair (`N = 1`) by explicit Fock
/// expansion with at most `cutoff` photons per emitted mode.
pub fn fock_joint_distribution(
    src: &SqueezedSourceParams,
    det: &DetectionModel,
    a: MeasurementSetting,
    b: MeasurementSetting,
    cutoff: usize,
) -> Result<JointOutcomeDistribution<ClickPattern>> {
    if src.modes() != 1 {
        return Err(domain(
            "mode count N",
            src.modes() as f64,
            "N = 1 for the Fock expansion",
        ));
    }
    let fact = factorials(2 * cutoff);
    let (tg, tgb) = (src.tg(), src.tgbar());

    let mut coeff = vec![vec![0.0f64; cutoff + 1]; cutoff + 1];
    let mut norm2 = 0.0;
    for (n, row) in coeff.iter_mut().enumerate() {
        for (m, c) in row.iter_mut().enumerate() {
            *c = tg.powi(n as i32) * (-tgb).powi(m as i32);
            norm2 += *c * *c;
        }
    }
    let inv_norm = 1.0 / norm2.sqrt();

    let mut probs = vec![0.0; 16];
    for t in 0..=2 * cutoff {
        // amplitude on |kA, t-kA>_{A,A⊥} |kB, t-kB>_{B,B⊥}
        let mut psi = vec![vec![Complex64::new(0.0, 0.0); t + 1]; t + 1];
        let n_lo = t.saturating_sub(cutoff);
        for n in n_lo..=t.min(cutoff) {
            let m = t - n;
            let c = coeff[n][m] * inv_norm;
            if c == 0.0 {
                continue;
            }
            let ua = rotate_pair(n, m, a, &fact);
            let ub = rotate_pair(m, n, b, &fact);
            for (ka, &xa) in ua.iter().enumerate() {
                for (kb, &xb) in ub.iter().enumerate() {
                    psi[ka][kb] += c * xa * xb;
                }
            }
        }
        for ka in 0..=t {
            let pa = local_patterns(det, Detector::A, Detector::APerp, ka, t);
            for kb in 0..=t {
                let w = psi[ka][kb].norm_sqr();
                if w == 0.0 {
                    continue;
                }
                let pb = local_patterns(det, Detector::B, Detector::BPerp, kb, t);
                for i in 0..4 {
                    for j in 0..4 {
                        probs[i * 4 + j] += w * pa[i] * pb[j];
                    }
                }
            }
        }
    }
    Ok(JointOutcomeDistribution::from_vec(probs))
}
