//! Click statistics of a polarization-entangled SPDC source measured with
//! threshold (non photon-number-resolving) detectors.
//!
//! The state seen by the detectors is `exp((A†, A⊥†) M (B†, B⊥†)^T)|0>` up to
//! normalization. Attenuating detector `d` by `R_d = 1 - eta_d` scales the row
//! (Alice) or column (Bob) of `M` by `sqrt(R_d)`, and the probability that a
//! set of detectors stays silent follows from the singular values of the
//! scaled matrix. Exact click-pattern probabilities come from
//! inclusion-exclusion over those no-click events.

use num_complex::Complex64;

use crate::entropy::{ChshScore, DistributionTable, NoiseParam, Probability};
use crate::error::{domain, Error, Result};
use crate::stats::{EcVariant, JointOutcomeDistribution, LocalOutcome};

pub type Matrix2 = [[Complex64; 2]; 2];

/// Singular values with `lambda^2` at or above this are rejected.
pub const UNNORMALIZABLE_GUARD: f64 = 1.0 - 1e-12;

/// Negative inclusion-exclusion results below this are an error.
pub const NEGATIVITY_TOL: f64 = 1e-10;

/// Pair source `exp(T_g a†b⊥† - T_ḡ a⊥†b†)` repeated over `modes` independent
/// mode pairs. Squeezing enters through `T = tanh(g)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezedSourceParams {
    tg: f64,
    tgbar: f64,
    modes: u32,
}

impl SqueezedSourceParams {
    /// From squeezing parameters `g, ḡ >= 0`.
    pub fn new(g: f64, gbar: f64, modes: u32) -> Result<Self> {
        if !(g >= 0.0 && g.is_finite()) {
            return Err(domain("squeezing g", g, "[0, inf)"));
        }
        if !(gbar >= 0.0 && gbar.is_finite()) {
            return Err(domain("squeezing gbar", gbar, "[0, inf)"));
        }
        Self::from_tanh(g.tanh(), gbar.tanh(), modes)
    }

    /// From `T_g = tanh g` and `T_ḡ = tanh ḡ`, each in `[0, 1)`.
    pub fn from_tanh(tg: f64, tgbar: f64, modes: u32) -> Result<Self> {
        if !(0.0..1.0).contains(&tg) {
            return Err(domain("tanh g", tg, "[0, 1)"));
        }
        if !(0.0..1.0).contains(&tgbar) {
            return Err(domain("tanh gbar", tgbar, "[0, 1)"));
        }
        if modes == 0 {
            return Err(domain("mode count N", 0.0, "N >= 1"));
        }
        Ok(Self { tg, tgbar, modes })
    }

    pub fn tg(&self) -> f64 {
        self.tg
    }

    pub fn tgbar(&self) -> f64 {
        self.tgbar
    }

    pub fn g(&self) -> f64 {
        self.tg.atanh()
    }

    pub fn gbar(&self) -> f64 {
        self.tgbar.atanh()
    }

    pub fn modes(&self) -> u32 {
        self.modes
    }

    /// Vacuum weight of one mode pair, `(1 - T_g^2)(1 - T_ḡ^2)`.
    fn vacuum_weight(&self) -> f64 {
        (1.0 - self.tg * self.tg) * (1.0 - self.tgbar * self.tgbar)
    }
}

/// The four threshold detectors. Alice owns `A` and `APerp`, Bob `B` and `BPerp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Detector {
    A = 0,
    APerp = 1,
    B = 2,
    BPerp = 3,
}

impl Detector {
    pub const ALL: [Detector; 4] = [Detector::A, Detector::APerp, Detector::B, Detector::BPerp];

    pub fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

/// A set of detectors, stored as a 4-bit mask in [`Detector`] order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct DetectorSet(pub u8);

impl DetectorSet {
    pub const EMPTY: DetectorSet = DetectorSet(0);
    pub const ALL: DetectorSet = DetectorSet(0b1111);

    pub fn contains(self, d: Detector) -> bool {
        self.0 & d.bit() != 0
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

impl FromIterator<Detector> for DetectorSet {
    fn from_iter<I: IntoIterator<Item = Detector>>(iter: I) -> Self {
        DetectorSet(iter.into_iter().fold(0, |m, d| m | d.bit()))
    }
}

/// Efficiency and dark-count probability of each detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionModel {
    efficiency: [f64; 4],
    dark_count: [f64; 4],
}

impl DetectionModel {
    pub fn new(efficiency: [f64; 4], dark_count: [f64; 4]) -> Result<Self> {
        for &e in &efficiency {
            if !(0.0..=1.0).contains(&e) {
                return Err(domain("detector efficiency", e, "[0, 1]"));
            }
        }
        for &d in &dark_count {
            if !(0.0..1.0).contains(&d) {
                return Err(domain("dark-count probability", d, "[0, 1)"));
            }
        }
        Ok(Self {
            efficiency,
            dark_count,
        })
    }

    /// Every detector with efficiency `eta` and no dark counts.
    pub fn uniform(eta: f64) -> Result<Self> {
        Self::new([eta; 4], [0.0; 4])
    }

    pub fn efficiency(&self, d: Detector) -> f64 {
        self.efficiency[d as usize]
    }

    pub fn dark_count(&self, d: Detector) -> f64 {
        self.dark_count[d as usize]
    }

    /// `R_d = 1 - eta_d`.
    pub fn loss(&self, d: Detector) -> f64 {
        1.0 - self.efficiency[d as usize]
    }
}

/// Polarization rotation `(angle, phase)` applied before a party's beamsplitter.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeasurementSetting {
    pub angle: f64,
    pub phase: f64,
}

impl MeasurementSetting {
    /// A planar setting (zero phase).
    pub fn planar(angle: f64) -> Self {
        Self { angle, phase: 0.0 }
    }
}

/// Which of a party's two detectors clicked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClickPattern {
    pub main: bool,
    pub perp: bool,
}

impl ClickPattern {
    pub const NONE: ClickPattern = ClickPattern {
        main: false,
        perp: false,
    };
    pub const MAIN: ClickPattern = ClickPattern {
        main: true,
        perp: false,
    };
    pub const PERP: ClickPattern = ClickPattern {
        main: false,
        perp: true,
    };
    pub const BOTH: ClickPattern = ClickPattern {
        main: true,
        perp: true,
    };
}

impl LocalOutcome for ClickPattern {
    const ALL: &'static [Self] = &[
        ClickPattern::NONE,
        ClickPattern::MAIN,
        ClickPattern::PERP,
        ClickPattern::BOTH,
    ];

    fn index(self) -> usize {
        self.main as usize + 2 * self.perp as usize
    }

    /// `-1` exactly when the main detector clicks and the other stays silent.
    fn binarize(self) -> i8 {
        if self == ClickPattern::MAIN {
            -1
        } else {
            1
        }
    }

    fn label(self) -> &'static str {
        match (self.main, self.perp) {
            (false, false) => "none",
            (true, false) => "main",
            (false, true) => "perp",
            (true, true) => "both",
        }
    }
}

/// The 2x2 coupling matrix between Alice's detected modes (rows `A`, `A⊥`)
/// and Bob's (columns `B`, `B⊥`).
pub fn coupling_matrix(
    src: &SqueezedSourceParams,
    a: MeasurementSetting,
    b: MeasurementSetting,
) -> Result<Matrix2> {
    let m = coupling_matrix_unchecked(src, a, b);
    let (l1, _) = singular_values_sq(&m);
    if l1 >= UNNORMALIZABLE_GUARD {
        return Err(Error::Unnormalizable(l1.sqrt()));
    }
    Ok(m)
}

fn coupling_matrix_unchecked(
    src: &SqueezedSourceParams,
    a: MeasurementSetting,
    b: MeasurementSetting,
) -> Matrix2 {
    let (sa, ca) = a.angle.sin_cos();
    let (sb, cb) = b.angle.sin_cos();
    let ea = Complex64::from_polar(1.0, a.phase);
    let eb = Complex64::from_polar(1.0, b.phase);
    let (tg, tgb) = (src.tg, src.tgbar);
    [
        [
            tg * ca * sb * eb.conj() - tgb * sa * ea.conj() * cb,
            -tg * ca * cb - tgb * sa * ea.conj() * sb * eb,
        ],
        [
            tg * sa * ea * sb * eb.conj() + tgb * ca * cb,
            -tg * sa * ea * cb + tgb * ca * sb * eb,
        ],
    ]
}

/// Squared singular values `(lambda_1^2, lambda_2^2)`, largest first, from the
/// eigenvalues of the Gram matrix `M†M`.
pub fn singular_values_sq(m: &Matrix2) -> (f64, f64) {
    let g00 = m[0][0].norm_sqr() + m[1][0].norm_sqr();
    let g11 = m[0][1].norm_sqr() + m[1][1].norm_sqr();
    let g01 = m[0][0].conj() * m[0][1] + m[1][0].conj() * m[1][1];
    let half_tr = 0.5 * (g00 + g11);
    let half_diff = 0.5 * (g00 - g11);
    let r = (half_diff * half_diff + g01.norm_sqr()).sqrt();
    (half_tr + r, (half_tr - r).max(0.0))
}

/// Scales rows by `sqrt(R)` of Alice's detectors and columns by `sqrt(R)` of
/// Bob's, for the detectors in `subset`.
fn attenuate(m: &Matrix2, subset: DetectorSet, det: &DetectionModel) -> Matrix2 {
    let f = |d: Detector| {
        if subset.contains(d) {
            det.loss(d).sqrt()
        } else {
            1.0
        }
    };
    let rows = [f(Detector::A), f(Detector::APerp)];
    let cols = [f(Detector::B), f(Detector::BPerp)];
    let mut out = *m;
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] *= rows[i] * cols[j];
        }
    }
    out
}

/// Probability that every detector in `subset` stays silent, from an
/// already-built coupling matrix.
fn noclick_from_matrix(
    m: &Matrix2,
    subset: DetectorSet,
    src: &SqueezedSourceParams,
    det: &DetectionModel,
) -> Result<f64> {
    let scaled = attenuate(m, subset, det);
    let (l1, l2) = singular_values_sq(&scaled);
    if l1 >= UNNORMALIZABLE_GUARD {
        return Err(Error::Unnormalizable(l1.sqrt()));
    }
    let per_mode = src.vacuum_weight() / ((1.0 - l1) * (1.0 - l2));
    let dark: f64 = Detector::ALL
        .iter()
        .filter(|&&d| subset.contains(d))
        .map(|&d| 1.0 - det.dark_count(d))
        .product();
    Ok(dark * per_mode.powi(src.modes as i32))
}

/// Probability that all detectors in `subset` register no click.
pub fn noclick_probability(
    subset: DetectorSet,
    src: &SqueezedSourceParams,
    det: &DetectionModel,
    a: MeasurementSetting,
    b: MeasurementSetting,
) -> Result<Probability> {
    let m = coupling_matrix(src, a, b)?;
    Probability::new(noclick_from_matrix(&m, subset, src, det)?)
}

/// Full 16-outcome click statistics for one pair of settings.
pub fn joint_outcome_distribution(
    src: &SqueezedSourceParams,
    det: &DetectionModel,
    a: MeasurementSetting,
    b: MeasurementSetting,
) -> Result<JointOutcomeDistribution<ClickPattern>> {
    let m = coupling_matrix(src, a, b)?;
    let mut silent = [0.0f64; 16];
    for (mask, v) in silent.iter_mut().enumerate() {
        *v = noclick_from_matrix(&m, DetectorSet(mask as u8), src, det)?;
    }
    let mut probs = vec![0.0; 16];
    for &pa in ClickPattern::ALL {
        for &pb in ClickPattern::ALL {
            let clicked = pattern_mask(pa, pb);
            let silent_set = !clicked & 0b1111;
            // P(exactly `silent_set` silent) = sum over supersets T, sign (-1)^{|T \ S|}
            let mut total = 0.0;
            let mut extra = clicked;
            loop {
                let t = silent_set | extra;
                let sign = if extra.count_ones().is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                };
                total += sign * silent[t as usize];
                if extra == 0 {
                    break;
                }
                extra = (extra - 1) & clicked;
            }
            if total < -NEGATIVITY_TOL {
                return Err(Error::InconsistentStatistics(
                    total,
                    format!("({}, {})", pa.label(), pb.label()),
                ));
            }
            probs[pa.index() * 4 + pb.index()] = total.max(0.0);
        }
    }
    Ok(JointOutcomeDistribution::from_vec(probs))
}

fn pattern_mask(a: ClickPattern, b: ClickPattern) -> u8 {
    (a.main as u8) | (a.perp as u8) << 1 | (b.main as u8) << 2 | (b.perp as u8) << 3
}

/// The four settings entering the CHSH expression.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChshSettings {
    pub a1: MeasurementSetting,
    pub a2: MeasurementSetting,
    pub b1: MeasurementSetting,
    pub b2: MeasurementSetting,
}

/// `S = E11 + E12 + E21 - E22` from binarized click statistics.
pub fn chsh_score(
    src: &SqueezedSourceParams,
    det: &DetectionModel,
    settings: &ChshSettings,
) -> Result<ChshScore> {
    let e = |a, b| joint_outcome_distribution(src, det, a, b).map(|d| d.correlator());
    let s =
        e(settings.a1, settings.b1)? + e(settings.a1, settings.b2)? + e(settings.a2, settings.b1)?
            - e(settings.a2, settings.b2)?;
    ChshScore::new(s)
}

/// Error-correction cost for key settings `a0`, `b1` with Bob's bit flipped
/// with probability `p`.
pub fn error_correction_term(
    src: &SqueezedSourceParams,
    det: &DetectionModel,
    a0: MeasurementSetting,
    b1: MeasurementSetting,
    p: NoiseParam,
    variant: EcVariant,
) -> Result<f64> {
    Ok(joint_outcome_distribution(src, det, a0, b1)?.error_correction_term(p, variant))
}

/// Binarized 2x2 table `p(A, B)` (index 0 is `+1`, index 1 is `-1`).
pub fn binarize(dist: &JointOutcomeDistribution<ClickPattern>) -> DistributionTable {
    dist.binarize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn src(tg: f64, tgb: f64, n: u32) -> SqueezedSourceParams {
        SqueezedSourceParams::from_tanh(tg, tgb, n).unwrap()
    }

    #[test]
    fn coupling_matrix_examples() {
        let z = Complex64::new(0.0, 0.0);
        let m = coupling_matrix(&src(0.0, 0.0, 1), Default::default(), Default::default()).unwrap();
        assert!(m.iter().flatten().all(|v| *v == z));

        let m = coupling_matrix(&src(0.3, 0.2, 1), Default::default(), Default::default()).unwrap();
        assert_abs_diff_eq!(m[0][0].norm(), 0.0);
        assert_abs_diff_eq!(m[0][1].re, -0.3);
        assert_abs_diff_eq!(m[1][0].re, 0.2);
        assert_abs_diff_eq!(m[1][1].norm(), 0.0);
        let (l1, l2) = singular_values_sq(&m);
        assert_abs_diff_eq!(l1, 0.09, epsilon = 1e-15);
        assert_abs_diff_eq!(l2, 0.04, epsilon = 1e-15);
    }

    #[test]
    fn rotations_preserve_singular_values() {
        let s = src(0.4, 0.25, 1);
        for (a, b, pa, pb) in [(0.3, 1.1, 0.0, 0.0), (2.0, -0.4, 0.7, -1.2)] {
            let m = coupling_matrix(
                &s,
                MeasurementSetting {
                    angle: a,
                    phase: pa,
                },
                MeasurementSetting {
                    angle: b,
                    phase: pb,
                },
            )
            .unwrap();
            let (l1, l2) = singular_values_sq(&m);
            assert_abs_diff_eq!(l1, 0.16, epsilon = 1e-14);
            assert_abs_diff_eq!(l2, 0.0625, epsilon = 1e-14);
        }
    }

    #[test]
    fn source_validation() {
        assert!(SqueezedSourceParams::from_tanh(1.0, 0.1, 1).is_err());
        assert!(SqueezedSourceParams::from_tanh(0.1, 0.1, 0).is_err());
        assert!(SqueezedSourceParams::new(-0.1, 0.1, 1).is_err());
        assert_abs_diff_eq!(
            SqueezedSourceParams::new(0.3, 0.0, 1).unwrap().g(),
            0.3,
            epsilon = 1e-14
        );
        assert!(DetectionModel::uniform(1.1).is_err());
        assert!(DetectionModel::new([1.0; 4], [1.0; 4]).is_err());
    }

    #[test]
    fn empty_subset_is_certain() {
        let det = DetectionModel::uniform(0.8).unwrap();
        for n in [1, 3] {
            let p = noclick_probability(
                DetectorSet::EMPTY,
                &src(0.5, 0.3, n),
                &det,
                MeasurementSetting::planar(0.3),
                MeasurementSetting::planar(1.2),
            )
            .unwrap();
            assert_abs_diff_eq!(p.value(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn vacuum_never_clicks() {
        let det = DetectionModel::uniform(0.7).unwrap();
        for mask in 0..16u8 {
            let p = noclick_probability(
                DetectorSet(mask),
                &src(0.0, 0.0, 2),
                &det,
                MeasurementSetting::planar(0.4),
                MeasurementSetting::planar(0.9),
            )
            .unwrap();
            assert_abs_diff_eq!(p.value(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn single_detector_noclick_closed_form() {
        let tg: f64 = 0.35;
        let eta = 0.6;
        let det = DetectionModel::uniform(eta).unwrap();
        let subset: DetectorSet = [Detector::A].into_iter().collect();
        let p = noclick_probability(
            subset,
            &src(tg, 0.0, 1),
            &det,
            Default::default(),
            Default::default(),
        )
        .unwrap();
        let r = 1.0 - eta;
        assert_abs_diff_eq!(
            p.value(),
            (1.0 - tg * tg) / (1.0 - r * tg * tg),
            epsilon = 1e-14
        );
    }

    #[test]
    fn dark_counts_scale_noclick() {
        let det = DetectionModel::new([1.0; 4], [0.1, 0.0, 0.2, 0.0]).unwrap();
        let subset: DetectorSet = [Detector::A, Detector::B].into_iter().collect();
        let p = noclick_probability(
            subset,
            &src(0.0, 0.0, 1),
            &det,
            Default::default(),
            Default::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(p.value(), 0.9 * 0.8, epsilon = 1e-15);
    }

    #[test]
    fn vacuum_distribution() {
        let det = DetectionModel::uniform(0.9).unwrap();
        let d = joint_outcome_distribution(
            &src(0.0, 0.0, 1),
            &det,
            Default::default(),
            Default::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(
            d.get(ClickPattern::NONE, ClickPattern::NONE),
            1.0,
            epsilon = 1e-15
        );
        let b = binarize(&d);
        assert_abs_diff_eq!(b.get(0, 0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn perfect_detection_pair_probability() {
        // single-pair term of exp(T_g a† b⊥†): A clicks and B⊥ clicks
        let tg: f64 = 0.3;
        let det = DetectionModel::uniform(1.0).unwrap();
        let d = joint_outcome_distribution(
            &src(tg, 0.0, 1),
            &det,
            Default::default(),
            Default::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(
            d.get(ClickPattern::MAIN, ClickPattern::PERP),
            tg * tg,
            epsilon = 1e-12
        );
        // binarized: Alice -1, Bob +1
        let b = binarize(&d);
        assert_abs_diff_eq!(b.get(1, 0), tg * tg, epsilon = 1e-12);
    }

    #[test]
    fn normalized_and_nonnegative() {
        let det = DetectionModel::new([0.9, 0.8, 0.85, 0.7], [1e-3, 0.0, 2e-3, 1e-4]).unwrap();
        let d = joint_outcome_distribution(
            &src(0.6, 0.4, 3),
            &det,
            MeasurementSetting {
                angle: 0.3,
                phase: 0.2,
            },
            MeasurementSetting {
                angle: -0.8,
                phase: 1.0,
            },
        )
        .unwrap();
        let total: f64 = d.probs().iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
        assert!(d.probs().iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn zero_efficiency_and_vacuum_give_classical_chsh() {
        let settings = ChshSettings {
            a1: MeasurementSetting::planar(0.0),
            a2: MeasurementSetting::planar(0.8),
            b1: MeasurementSetting::planar(0.4),
            b2: MeasurementSetting::planar(-0.4),
        };
        let s = chsh_score(
            &src(0.5, 0.5, 1),
            &DetectionModel::uniform(0.0).unwrap(),
            &settings,
        )
        .unwrap();
        assert_abs_diff_eq!(s.value(), 2.0, epsilon = 1e-12);
        let s = chsh_score(
            &src(0.0, 0.0, 1),
            &DetectionModel::uniform(0.9).unwrap(),
            &settings,
        )
        .unwrap();
        assert_abs_diff_eq!(s.value(), 2.0, epsilon = 1e-12);
    }
}
