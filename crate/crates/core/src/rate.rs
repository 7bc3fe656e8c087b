//! Key rates of the three CHSH-based protocols, their optimization over
//! source and measurement parameters, and threshold-efficiency search.

use std::f64::consts::{FRAC_PI_4, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::entropy::{eve_info_bound_unchecked, ChshScore, NoiseParam};
use crate::error::{domain, Error, Result};
use crate::optim::{nelder_mead, scrambled_halton, NelderMeadOptions};
use crate::qubit::qubit_source_distribution;
use crate::spdc::{
    joint_outcome_distribution, DetectionModel, MeasurementSetting, SqueezedSourceParams,
};
use crate::stats::EcVariant;

/// Upper end of the `T = tanh g` search box.
pub const MAX_TANH: f64 = 0.9;
/// Upper end of the noise search box.
pub const MAX_NOISE: f64 = 0.45;
/// Default cutoff above which a rate counts as positive. Near the noisy
/// pre-processing threshold optimal rates are of order `1e-8`; the numerical
/// floor of a rate evaluation is around `1e-13`.
pub const POSITIVE_RATE: f64 = 1e-8;
/// CHSH violations up to this size are rounding in the summed correlators
/// (observed up to `5e-14` at strongly squeezed deterministic points) and
/// certify nothing.
pub const CHSH_RESOLUTION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProtocolVariant {
    /// Binary key outcome, error correction at `h(Q)`, no added noise.
    Pironio09,
    /// Four-valued key outcome for Alice, no added noise.
    Ma12,
    /// Four-valued key outcome and Bob flips his key bit with probability `p`.
    NoisyPreprocessing,
}

impl ProtocolVariant {
    pub const ALL: [ProtocolVariant; 3] = [
        ProtocolVariant::Pironio09,
        ProtocolVariant::Ma12,
        ProtocolVariant::NoisyPreprocessing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolVariant::Pironio09 => "pironio",
            ProtocolVariant::Ma12 => "ma",
            ProtocolVariant::NoisyPreprocessing => "noisy",
        }
    }

    pub fn ec_variant(self) -> EcVariant {
        match self {
            ProtocolVariant::Pironio09 => EcVariant::Binary,
            _ => EcVariant::FourValued,
        }
    }
}

impl std::str::FromStr for ProtocolVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "pironio" => Ok(ProtocolVariant::Pironio09),
            "ma" => Ok(ProtocolVariant::Ma12),
            "noisy" => Ok(ProtocolVariant::NoisyPreprocessing),
            _ => Err(format!(
                "unknown protocol `{s}` (expected pironio, ma or noisy)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceKind {
    Spdc,
    PerfectQubit,
}

impl SourceKind {
    pub fn name(self) -> &'static str {
        match self {
            SourceKind::Spdc => "spdc",
            SourceKind::PerfectQubit => "qubit",
        }
    }
}

impl std::str::FromStr for SourceKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "spdc" => Ok(SourceKind::Spdc),
            "qubit" => Ok(SourceKind::PerfectQubit),
            _ => Err(format!("unknown source `{s}` (expected spdc or qubit)")),
        }
    }
}

/// Noise handling for the noisy pre-processing variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseChoice {
    Fixed(NoiseParam),
    Optimize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolSpec {
    pub variant: ProtocolVariant,
    pub noise: NoiseChoice,
    pub source: SourceKind,
    /// Dark-count probability applied to every detector.
    pub dark_count: f64,
}

impl ProtocolSpec {
    /// Noise is optimized for the noisy variant and zero otherwise.
    pub fn new(variant: ProtocolVariant, source: SourceKind) -> Self {
        let noise = match variant {
            ProtocolVariant::NoisyPreprocessing => NoiseChoice::Optimize,
            _ => NoiseChoice::Fixed(NoiseParam::ZERO),
        };
        Self {
            variant,
            noise,
            source,
            dark_count: 0.0,
        }
    }

    pub fn with_noise(mut self, noise: NoiseChoice) -> Self {
        self.noise = noise;
        self
    }

    fn optimizes_noise(&self) -> bool {
        self.variant == ProtocolVariant::NoisyPreprocessing && self.noise == NoiseChoice::Optimize
    }

    /// The noise actually applied at `point`.
    fn effective_noise(&self, point: &ParameterPoint) -> NoiseParam {
        match (self.variant, self.noise) {
            (ProtocolVariant::NoisyPreprocessing, NoiseChoice::Optimize) => point.p,
            (ProtocolVariant::NoisyPreprocessing, NoiseChoice::Fixed(p)) => p,
            _ => NoiseParam::ZERO,
        }
    }
}

/// Source-specific parameters of a [`ParameterPoint`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourcePoint {
    Spdc(SqueezedSourceParams),
    /// State `cos θ|00> + sin θ|11>`.
    Qubit {
        theta: f64,
    },
}

/// Everything a key rate depends on besides the protocol and efficiency.
/// `a0` is Alice's key setting; Bob's key setting is `b1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterPoint {
    pub source: SourcePoint,
    pub a0: MeasurementSetting,
    pub a1: MeasurementSetting,
    pub a2: MeasurementSetting,
    pub b1: MeasurementSetting,
    pub b2: MeasurementSetting,
    pub p: NoiseParam,
}

impl ParameterPoint {
    /// Maximally entangled qubits with the standard CHSH settings.
    pub fn ideal_qubit() -> Self {
        let planar = |a: f64| MeasurementSetting::planar(a);
        Self {
            source: SourcePoint::Qubit { theta: FRAC_PI_4 },
            a0: planar(FRAC_PI_4),
            a1: planar(0.0),
            a2: planar(2.0 * FRAC_PI_4),
            b1: planar(FRAC_PI_4),
            b2: planar(-FRAC_PI_4),
            p: NoiseParam::ZERO,
        }
    }

    fn kind(&self) -> SourceKind {
        match self.source {
            SourcePoint::Spdc(_) => SourceKind::Spdc,
            SourcePoint::Qubit { .. } => SourceKind::PerfectQubit,
        }
    }

    pub fn modes(&self) -> Option<u32> {
        match self.source {
            SourcePoint::Spdc(s) => Some(s.modes()),
            SourcePoint::Qubit { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateResult {
    pub s: ChshScore,
    pub ec_term: f64,
    pub eve_term: f64,
    /// `1 - eve_term - ec_term`, not clamped.
    pub rate: f64,
    pub point: ParameterPoint,
    pub eta: f64,
}

impl RateResult {
    pub fn clamped(&self) -> f64 {
        self.rate.max(0.0)
    }

    pub fn is_positive(&self, cutoff: f64) -> bool {
        self.rate > cutoff
    }
}

/// CHSH score and error-correction cost at `point`.
fn statistics(
    spec: &ProtocolSpec,
    point: &ParameterPoint,
    eta: f64,
    p: NoiseParam,
) -> Result<(f64, f64)> {
    let ec = spec.variant.ec_variant();
    match point.source {
        SourcePoint::Spdc(src) => {
            let det = DetectionModel::new([eta; 4], [spec.dark_count; 4])?;
            let e = |a, b| joint_outcome_distribution(&src, &det, a, b).map(|d| d.correlator());
            let s = e(point.a1, point.b1)? + e(point.a1, point.b2)? + e(point.a2, point.b1)?
                - e(point.a2, point.b2)?;
            let key = joint_outcome_distribution(&src, &det, point.a0, point.b1)?;
            Ok((s, key.error_correction_term(p, ec)))
        }
        SourcePoint::Qubit { theta } => {
            let e = |a: MeasurementSetting, b: MeasurementSetting| {
                qubit_source_distribution(theta, a.angle, b.angle, eta).map(|d| d.correlator())
            };
            let s = e(point.a1, point.b1)? + e(point.a1, point.b2)? + e(point.a2, point.b1)?
                - e(point.a2, point.b2)?;
            let key = qubit_source_distribution(theta, point.a0.angle, point.b1.angle, eta)?;
            Ok((s, key.error_correction_term(p, ec)))
        }
    }
}

/// Key rate of `spec` at `point` with every detector at efficiency `eta`.
///
/// Below `S = 2 + CHSH_RESOLUTION` nothing is certified and Eve's term is
/// set to one bit.
pub fn key_rate(spec: &ProtocolSpec, point: &ParameterPoint, eta: f64) -> Result<RateResult> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(domain("detection efficiency", eta, "[0, 1]"));
    }
    let p = spec.effective_noise(point);
    let (s, ec_term) = statistics(spec, point, eta, p)?;
    let s = ChshScore::new(s)?;
    let eve_term = if s.value() < 2.0 + CHSH_RESOLUTION {
        1.0
    } else {
        eve_info_bound_unchecked(s.in_bound_domain()?, p.p())
    };
    let mut point = *point;
    point.p = p;
    Ok(RateResult {
        s,
        ec_term,
        eve_term,
        rate: 1.0 - eve_term - ec_term,
        point,
        eta,
    })
}

/// Rate used while searching. Without a violation the reported rate has a flat
/// one-bit Eve term; here it continues from the `S = 2` value downward with
/// slope one in the missing violation, so local searches still climb toward
/// violation.
fn search_objective(r: &RateResult) -> f64 {
    let s = r.s.value();
    if s >= 2.0 + CHSH_RESOLUTION {
        return r.rate;
    }
    let at_two = 1.0 - eve_info_bound_unchecked(2.0, r.point.p.p()) - r.ec_term;
    at_two - (2.0 + CHSH_RESOLUTION - s)
}

/// Search settings for [`optimize_rate`] and friends.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerOptions {
    pub seed: u64,
    /// Quasi-random starts per mode count.
    pub restarts: usize,
    pub n_min: u32,
    pub n_max: u32,
    pub nelder_mead: NelderMeadOptions,
    /// Bisection tolerance of [`threshold_efficiency`].
    pub eta_tol: f64,
    /// Rates must exceed this to count as positive.
    pub positive_rate: f64,
    /// Extra starting points refined before the quasi-random ones.
    pub warm_starts: Vec<ParameterPoint>,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 32,
            n_min: 1,
            n_max: 8,
            nelder_mead: NelderMeadOptions::default(),
            eta_tol: 5e-4,
            positive_rate: POSITIVE_RATE,
            warm_starts: Vec::new(),
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(Error::Infeasible(format!(
                "mode range {}..={} is empty or starts at zero",
                self.n_min, self.n_max
            )));
        }
        if !(self.eta_tol > 0.0) {
            return Err(domain("efficiency tolerance", self.eta_tol, "(0, inf)"));
        }
        Ok(())
    }
}

/// Map from unconstrained `u` to `[lo, hi]`.
fn to_box(u: f64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * 0.5 * (1.0 - u.cos())
}

fn from_box(x: f64, lo: f64, hi: f64) -> f64 {
    (1.0 - 2.0 * (x - lo) / (hi - lo)).clamp(-1.0, 1.0).acos()
}

/// Coordinates of the search space: source parameters, the five angles, and
/// optionally the noise.
#[derive(Debug, Clone, Copy)]
struct Layout {
    source: SourceKind,
    optimize_p: bool,
}

impl Layout {
    fn source_dims(&self) -> usize {
        match self.source {
            SourceKind::Spdc => 2,
            SourceKind::PerfectQubit => 1,
        }
    }

    fn dims(&self) -> usize {
        self.source_dims() + 5 + self.optimize_p as usize
    }

    fn angle_period(&self) -> f64 {
        match self.source {
            SourceKind::Spdc => PI,
            SourceKind::PerfectQubit => 2.0 * PI,
        }
    }

    fn decode(&self, v: &[f64], modes: u32, fixed_p: NoiseParam) -> Option<ParameterPoint> {
        let (source, rest) = match self.source {
            SourceKind::Spdc => {
                let src = SqueezedSourceParams::from_tanh(
                    to_box(v[0], 0.0, MAX_TANH),
                    to_box(v[1], 0.0, MAX_TANH),
                    modes,
                )
                .ok()?;
                (SourcePoint::Spdc(src), &v[2..])
            }
            SourceKind::PerfectQubit => (
                SourcePoint::Qubit {
                    theta: to_box(v[0], 0.0, FRAC_PI_4),
                },
                &v[1..],
            ),
        };
        let planar = |a: f64| MeasurementSetting::planar(a);
        let p = if self.optimize_p {
            NoiseParam::new(to_box(rest[5], 0.0, MAX_NOISE)).ok()?
        } else {
            fixed_p
        };
        Some(ParameterPoint {
            source,
            a0: planar(rest[0]),
            a1: planar(rest[1]),
            a2: planar(rest[2]),
            b1: planar(rest[3]),
            b2: planar(rest[4]),
            p,
        })
    }

    fn encode(&self, point: &ParameterPoint) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dims());
        match point.source {
            SourcePoint::Spdc(s) => {
                v.push(from_box(s.tg().min(MAX_TANH), 0.0, MAX_TANH));
                v.push(from_box(s.tgbar().min(MAX_TANH), 0.0, MAX_TANH));
            }
            SourcePoint::Qubit { theta } => v.push(from_box(theta, 0.0, FRAC_PI_4)),
        }
        v.extend([point.a0, point.a1, point.a2, point.b1, point.b2].map(|s| s.angle));
        if self.optimize_p {
            v.push(from_box(point.p.p().min(MAX_NOISE), 0.0, MAX_NOISE));
        }
        v
    }

    fn random_start(&self, unit: &[f64]) -> Vec<f64> {
        let sd = self.source_dims();
        unit.iter()
            .enumerate()
            .map(|(i, &r)| {
                if i < sd || i >= sd + 5 {
                    PI * r
                } else {
                    self.angle_period() * r
                }
            })
            .collect()
    }

    fn steps(&self) -> Vec<f64> {
        vec![0.3; self.dims()]
    }
}

fn mode_range(spec: &ProtocolSpec, opts: &OptimizerOptions) -> Vec<u32> {
    match spec.source {
        SourceKind::Spdc => (opts.n_min..=opts.n_max).collect(),
        SourceKind::PerfectQubit => vec![1],
    }
}

/// Best rate over source parameters, settings and (when optimized) noise at
/// efficiency `eta`. Deterministic for a given `opts.seed`.
pub fn optimize_rate(spec: &ProtocolSpec, eta: f64, opts: &OptimizerOptions) -> Result<RateResult> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(domain("detection efficiency", eta, "[0, 1]"));
    }
    opts.validate()?;
    let layout = Layout {
        source: spec.source,
        optimize_p: spec.optimizes_noise(),
    };
    let fixed_p = match spec.noise {
        NoiseChoice::Fixed(p) => p,
        NoiseChoice::Optimize => NoiseParam::ZERO,
    };

    // (mode count, start vector) in a fixed order
    let mut tasks: Vec<(u32, Vec<f64>)> = Vec::new();
    for w in &opts.warm_starts {
        if w.kind() != spec.source {
            continue;
        }
        let modes = w.modes().unwrap_or(1);
        tasks.push((modes, layout.encode(w)));
    }
    if spec.source == SourceKind::Spdc {
        for seed in low_brightness_seeds(spec, eta, opts)? {
            tasks.push((1, layout.encode(&seed)));
        }
    }
    for modes in mode_range(spec, opts) {
        let mut rng = ChaCha8Rng::seed_from_u64(
            opts.seed ^ (modes as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        for unit in scrambled_halton(opts.restarts, layout.dims(), &mut rng) {
            tasks.push((modes, layout.random_start(&unit)));
        }
    }

    let objective = |v: &[f64], modes: u32| -> f64 {
        layout
            .decode(v, modes, fixed_p)
            .and_then(|pt| key_rate(spec, &pt, eta).ok())
            .map_or(f64::INFINITY, |r| -search_objective(&r))
    };

    let steps = layout.steps();
    let results: Vec<RateResult> = tasks
        .par_iter()
        .filter_map(|(modes, x0)| {
            let m = nelder_mead(|v| objective(v, *modes), x0, &steps, opts.nelder_mead);
            if !m.f.is_finite() {
                return None;
            }
            let point = layout.decode(&m.x, *modes, fixed_p)?;
            key_rate(spec, &point, eta).ok()
        })
        .collect();

    // the search ranks by the surrogate, the answer by the reported rate;
    // ties go to the earliest task
    let mut best: Option<RateResult> = None;
    for r in results {
        if best.as_ref().is_none_or(|b| r.rate > b.rate) {
            best = Some(r);
        }
    }
    best.ok_or_else(|| Error::Infeasible("no start produced a finite rate".into()))
}

/// Brightness values at which the qubit optimum is transplanted.
const SEED_BRIGHTNESS: [f64; 3] = [0.03, 0.1, 0.3];

/// SPDC starting points built from the optimum of the ideal qubit source.
///
/// At low squeezing the source emits `T_g a†b⊥† - T_ḡ a⊥†b†` pairs on top of
/// vacuum, which reproduces `cos θ|00> + sin θ|11>` with `T_g = ε cos θ`,
/// `T_ḡ = ε sin θ`, polarization angles `α/2 + π/2` for Alice and `β/2` for
/// Bob.
fn low_brightness_seeds(
    spec: &ProtocolSpec,
    eta: f64,
    opts: &OptimizerOptions,
) -> Result<Vec<ParameterPoint>> {
    let qubit_spec = ProtocolSpec {
        source: SourceKind::PerfectQubit,
        ..*spec
    };
    let qubit_opts = OptimizerOptions {
        warm_starts: Vec::new(),
        ..opts.clone()
    };
    let q = optimize_rate(&qubit_spec, eta, &qubit_opts)?.point;
    let SourcePoint::Qubit { theta } = q.source else {
        unreachable!("qubit optimization returns a qubit point")
    };
    let alice = |s: MeasurementSetting| MeasurementSetting::planar(0.5 * s.angle + 0.5 * PI);
    let bob = |s: MeasurementSetting| MeasurementSetting::planar(0.5 * s.angle);
    SEED_BRIGHTNESS
        .iter()
        .map(|&eps| {
            let src = SqueezedSourceParams::from_tanh(eps * theta.cos(), eps * theta.sin(), 1)?;
            Ok(ParameterPoint {
                source: SourcePoint::Spdc(src),
                a0: alice(q.a0),
                a1: alice(q.a1),
                a2: alice(q.a2),
                b1: bob(q.b1),
                b2: bob(q.b2),
                p: q.p,
            })
        })
        .collect()
}

/// Threshold efficiency with the rate evaluation that witnessed it.
#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    /// Smallest probed efficiency with a positive rate.
    pub eta: f64,
    /// Largest probed efficiency without one; `eta - lower <= eta_tol`.
    pub lower: f64,
    pub witness: RateResult,
    /// `(eta, best rate)` for every bisection probe, in order.
    pub trace: Vec<(f64, f64)>,
}

/// Smallest efficiency with a positive optimized rate, by bisection on
/// `[0.5, 1]` (widened to `[0, 0.5]` if the rate is already positive at 0.5).
/// Every probe is also started from the latest positive witness.
pub fn threshold_efficiency(spec: &ProtocolSpec, opts: &OptimizerOptions) -> Result<Threshold> {
    opts.validate()?;
    let cutoff = opts.positive_rate;
    let mut trace = Vec::new();
    let mut probe = |eta: f64, witness: Option<&RateResult>| -> Result<RateResult> {
        let local = match witness {
            Some(w) => with_warm(opts, w),
            None => opts.clone(),
        };
        let r = optimize_rate(spec, eta, &local)?;
        trace.push((eta, r.rate));
        Ok(r)
    };

    let mut witness = probe(1.0, None)?;
    if !witness.is_positive(cutoff) {
        return Err(Error::NoPositiveRate(witness.rate));
    }
    let (mut lo, mut hi) = (0.5, 1.0);
    let r = probe(lo, Some(&witness))?;
    if r.is_positive(cutoff) {
        witness = r;
        (lo, hi) = (0.0, 0.5);
    }
    while hi - lo > opts.eta_tol {
        let mid = 0.5 * (lo + hi);
        let r = probe(mid, Some(&witness))?;
        if r.is_positive(cutoff) {
            hi = mid;
            witness = r;
        } else {
            lo = mid;
        }
    }
    Ok(Threshold {
        eta: hi,
        lower: lo,
        witness,
        trace,
    })
}

fn with_warm(opts: &OptimizerOptions, r: &RateResult) -> OptimizerOptions {
    let mut o = opts.clone();
    o.warm_starts.insert(0, r.point);
    o
}

/// Optimized rates on `grid`, in ascending efficiency. Each point is also
/// started from the previous point's optimum.
pub fn rate_curve(
    spec: &ProtocolSpec,
    grid: &[f64],
    opts: &OptimizerOptions,
) -> Result<Vec<RateResult>> {
    rate_curve_seeded(spec, grid, opts, &[])
}

/// [`rate_curve`] with extra per-point starts: `seeds[i]` is refined at the
/// `i`-th efficiency of the sorted grid.
fn rate_curve_seeded(
    spec: &ProtocolSpec,
    grid: &[f64],
    opts: &OptimizerOptions,
    seeds: &[ParameterPoint],
) -> Result<Vec<RateResult>> {
    let mut etas = grid.to_vec();
    etas.sort_by(f64::total_cmp);
    let mut out: Vec<RateResult> = Vec::with_capacity(etas.len());
    for (i, eta) in etas.into_iter().enumerate() {
        let mut local = opts.clone();
        if let Some(seed) = seeds.get(i) {
            local.warm_starts.insert(0, *seed);
        }
        if let Some(prev) = out.last() {
            local.warm_starts.insert(0, prev.point);
        }
        out.push(optimize_rate(spec, eta, &local)?);
    }
    Ok(out)
}

/// Curves for several protocols on one source. Protocols run in the order
/// Pironio09, Ma12, NoisyPreprocessing, and each point also starts from the
/// previous protocol's optimum at the same efficiency.
pub fn protocol_curves(
    variants: &[ProtocolVariant],
    source: SourceKind,
    grid: &[f64],
    opts: &OptimizerOptions,
) -> Result<Vec<(ProtocolVariant, Vec<RateResult>)>> {
    let mut out: Vec<(ProtocolVariant, Vec<RateResult>)> = Vec::new();
    for v in ProtocolVariant::ALL
        .into_iter()
        .filter(|v| variants.contains(v))
    {
        let seeds: Vec<ParameterPoint> = out
            .last()
            .map(|(_, c)| c.iter().map(|r| r.point).collect())
            .unwrap_or_default();
        let curve = rate_curve_seeded(&ProtocolSpec::new(v, source), grid, opts, &seeds)?;
        out.push((v, curve));
    }
    Ok(out)
}
