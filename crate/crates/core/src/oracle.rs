//! Brute-force maximization of Eve's information over Bell-diagonal strategies.
//!
//! The search runs over the `(P, x, y)` parametrization of the weights and
//! over `C = cos(2 phi)`, subject only to the ordering constraints and
//! `bell_chsh(L) >= S`. It does not assume where the optimum lies; it is used
//! to certify the closed-form bound.

use rayon::prelude::*;

use crate::entropy::{ChshScore, NoiseParam, CHSH_SLACK, TSIRELSON};
use crate::error::{Error, Result};
use crate::eve::{bell_chsh, eve_information, BellDiagonalWeights};
use crate::optim::{nelder_mead, NelderMeadOptions};

/// Grid and refinement settings for [`oracle_max_eve_info`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResolution {
    /// Points per axis of the `(P, x, y)` grid.
    pub grid: usize,
    /// Points of the `C` grid on `[-1, 1]`.
    pub c_points: usize,
    /// Number of best grid points refined with Nelder-Mead.
    pub refine_starts: usize,
    pub refine: NelderMeadOptions,
}

impl Default for OracleResolution {
    fn default() -> Self {
        Self {
            grid: 64,
            c_points: 5,
            refine_starts: 5,
            refine: NelderMeadOptions {
                max_evals: 4000,
                tol: 1e-12,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    pub weights: BellDiagonalWeights,
    pub c: f64,
}

/// Candidate point `(P, x, y, C)`; `None` when outside the feasible set.
fn evaluate(v: &[f64], s: f64, p: NoiseParam) -> Option<(f64, BellDiagonalWeights)> {
    let (big_p, x, y, c) = (v[0], v[1], v[2], v[3]);
    if !(0.5..=1.0).contains(&big_p)
        || !(0.0..=1.0).contains(&x)
        || !(0.0..=1.0).contains(&y)
        || !(-1.0..=1.0).contains(&c)
    {
        return None;
    }
    let l = BellDiagonalWeights::from_pxy(big_p, x, y).ok()?;
    if bell_chsh(&l) < s {
        return None;
    }
    let info = eve_information(&l, p, c).ok()?;
    Some((info, l))
}

/// Maximizes `eve_information(L, p, C)` over valid weights with
/// `bell_chsh(L) >= S` and `C ∈ [-1, 1]`.
///
/// A `grid^3 x c_points` scan seeds Nelder-Mead refinements from the best
/// `refine_starts` feasible points.
pub fn oracle_max_eve_info(
    s: ChshScore,
    p: NoiseParam,
    res: OracleResolution,
) -> Result<OracleResult> {
    let s = s.value();
    if s > TSIRELSON + CHSH_SLACK {
        return Err(Error::Infeasible(format!("CHSH score {s} exceeds 2√2")));
    }
    let s = s.min(TSIRELSON);
    if p.q() <= 0.0 {
        return Err(Error::Infeasible(
            "p = 1/2 leaves no information to bound".into(),
        ));
    }

    let n = res.grid.max(2);
    let nc = res.c_points.max(1);
    let axis = |k: usize, lo: f64, hi: f64| lo + (hi - lo) * k as f64 / (n - 1) as f64;
    let c_axis = |k: usize| {
        if nc == 1 {
            1.0
        } else {
            -1.0 + 2.0 * k as f64 / (nc - 1) as f64
        }
    };

    let mut candidates: Vec<(f64, [f64; 4])> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let big_p = axis(i, 0.5, 1.0);
            let mut local = Vec::new();
            for j in 0..n {
                let x = axis(j, 0.0, 1.0);
                for k in 0..n {
                    let y = axis(k, 0.0, 1.0);
                    for kc in 0..nc {
                        let v = [big_p, x, y, c_axis(kc)];
                        if let Some((info, _)) = evaluate(&v, s, p) {
                            local.push((info, v));
                        }
                    }
                }
            }
            local
        })
        .collect();

    // The extremal state (P, x) = (1, 1) is always feasible.
    for kc in 0..nc {
        let v = [1.0, 1.0, 0.0, c_axis(kc)];
        if let Some((info, _)) = evaluate(&v, s, p) {
            candidates.push((info, v));
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.partial_cmp(&b.1).unwrap()));
    candidates.dedup_by(|a, b| a.1 == b.1);

    let h = 1.0 / (n - 1) as f64;
    let starts: Vec<(f64, [f64; 4])> = candidates
        .iter()
        .take(res.refine_starts.max(1))
        .copied()
        .collect();

    // Interior search in (P, x, y, C) with the constraint as a hard wall,
    // then a search restricted to the surface bell_chsh(L) = S. The maximum
    // over the feasible set is the larger of the two.
    let interior_steps = [0.5 * h, h, h, 2.0 / nc.max(2) as f64];
    let mut refined: Vec<(f64, [f64; 4])> = starts
        .par_iter()
        .map(|(v0, start)| {
            let m = nelder_mead(
                |v| evaluate(v, s, p).map_or(f64::INFINITY, |(info, _)| -info),
                start,
                &steps_inward(start, &interior_steps),
                res.refine,
            );
            let x = [m.x[0], m.x[1], m.x[2], m.x[3]];
            if -m.f > *v0 {
                (-m.f, x)
            } else {
                (*v0, *start)
            }
        })
        .collect();

    let surface_steps = [0.5 * h, h, 2.0 / nc.max(2) as f64];
    let surface: Vec<(f64, [f64; 4])> = starts
        .par_iter()
        .flat_map_iter(|(_, start)| [false, true].map(|upper| (*start, upper)))
        .filter_map(|(start, upper)| {
            let t0 = [start[0], start[2], start[3]];
            let objective = |t: &[f64]| {
                on_surface(t[0], t[1], t[2], s, upper)
                    .and_then(|v| evaluate(&v, s * (1.0 - 1e-15), p))
                    .map_or(f64::INFINITY, |(info, _)| -info)
            };
            if !objective(&t0).is_finite() {
                return None;
            }
            let steps = [
                if t0[0] + surface_steps[0] > 1.0 {
                    -surface_steps[0]
                } else {
                    surface_steps[0]
                },
                if t0[1] + surface_steps[1] > 1.0 {
                    -surface_steps[1]
                } else {
                    surface_steps[1]
                },
                if t0[2] + surface_steps[2] > 1.0 {
                    -surface_steps[2]
                } else {
                    surface_steps[2]
                },
            ];
            let m = nelder_mead(objective, &t0, &steps, res.refine);
            on_surface(m.x[0], m.x[1], m.x[2], s, upper).map(|v| (-m.f, v))
        })
        .collect();
    refined.extend(surface);

    let (value, v) = refined
        .into_iter()
        .fold(None::<(f64, [f64; 4])>, |best, cur| match best {
            Some(b) if b.0 >= cur.0 => Some(b),
            _ => Some(cur),
        })
        .ok_or_else(|| Error::Infeasible("no feasible grid point".into()))?;
    let (_, weights) = evaluate(&v, s * (1.0 - 1e-15), p).expect("refined point is feasible");
    Ok(OracleResult {
        value,
        weights,
        c: v[3],
    })
}

/// Point `(P, x, y, C)` with `bell_chsh = S`, solving for `x` given `(P, y)`.
///
/// With `u = L1 - L2` and `d = 2P - 1 = u + (L3 - L4)`, the constraint reads
/// `u^2 + (d - u)^2 = S^2 / 8`; `upper` picks the larger root.
fn on_surface(big_p: f64, y: f64, c: f64, s: f64, upper: bool) -> Option<[f64; 4]> {
    if !(0.5..=1.0).contains(&big_p) || !(0.0..=1.0).contains(&y) || !(-1.0..=1.0).contains(&c) {
        return None;
    }
    let d = 2.0 * big_p - 1.0;
    let disc = 0.25 * s * s - d * d;
    if disc < 0.0 {
        return None;
    }
    let root = disc.sqrt();
    let u = 0.5 * if upper { d + root } else { d - root };
    if u < 0.0 || u > d {
        return None;
    }
    let x = (u + (1.0 - big_p) * y) / big_p;
    if !(0.0..=1.0).contains(&x) {
        return None;
    }
    Some([big_p, x, y, c])
}

/// Initial simplex steps pointing into the box so the first vertices stay feasible.
fn steps_inward(start: &[f64; 4], steps: &[f64; 4]) -> [f64; 4] {
    let hi = [1.0, 1.0, 1.0, 1.0];
    let mut out = *steps;
    for i in 0..4 {
        if start[i] + steps[i] > hi[i] {
            out[i] = -steps[i];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::eve_info_bound;

    fn quick() -> OracleResolution {
        OracleResolution {
            grid: 24,
            c_points: 5,
            refine_starts: 5,
            ..Default::default()
        }
    }

    #[test]
    fn tsirelson_point() {
        let r = oracle_max_eve_info(
            ChshScore::new(TSIRELSON).unwrap(),
            NoiseParam::new(0.1).unwrap(),
            quick(),
        )
        .unwrap();
        assert!(r.value.abs() < 1e-9, "{}", r.value);
        // a single Bell state: (1,0,0,0) or, equivalently, (0,0,1,0)
        let l = r.weights.weights();
        assert!(l[1] < 1e-9 && l[3] < 1e-9, "{l:?}");
        assert!(l[0].max(l[2]) > 1.0 - 1e-6, "{l:?}");
    }

    #[test]
    fn infeasible_score() {
        assert!(oracle_max_eve_info(
            ChshScore::new(2.9).unwrap(),
            NoiseParam::new(0.1).unwrap(),
            quick()
        )
        .is_err());
    }

    #[test]
    fn matches_bound_at_midrange_score() {
        let s = ChshScore::new(2.5).unwrap();
        let p = NoiseParam::new(0.1).unwrap();
        let r = oracle_max_eve_info(s, p, quick()).unwrap();
        let bound = eve_info_bound(s, p).unwrap();
        assert!(r.value <= bound + 1e-9);
        assert!(
            (r.value - bound).abs() < 1e-5,
            "oracle {} bound {}",
            r.value,
            bound
        );
    }
}
