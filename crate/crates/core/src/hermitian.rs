//! Cyclic Jacobi eigensolver for 4x4 complex Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot element, then applies
//! an ordinary real Jacobi rotation. For matrices of this size the method
//! converges in a handful of sweeps and stays accurate near degenerate
//! eigenvalues.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Matrix4 = [[Complex64; 4]; 4];

/// Off-diagonal Frobenius norm (relative to the full norm) at which sweeps stop.
pub const JACOBI_TOL: f64 = 1e-13;
const MAX_SWEEPS: usize = 64;

/// Eigen-decomposition `m = V diag(values) V†`, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct Eigen4 {
    pub values: [f64; 4],
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: Matrix4,
}

pub fn zero4() -> Matrix4 {
    [[Complex64::new(0.0, 0.0); 4]; 4]
}

pub fn from_real(m: [[f64; 4]; 4]) -> Matrix4 {
    let mut out = zero4();
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = Complex64::new(m[i][j], 0.0);
        }
    }
    out
}

/// Largest deviation `|m_ij - conj(m_ji)|` over all entries.
pub fn hermiticity_defect(m: &Matrix4) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in i..4 {
            worst = worst.max((m[i][j] - m[j][i].conj()).norm());
        }
    }
    worst
}

fn off_norm2(a: &Matrix4) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                s += a[i][j].norm_sqr();
            }
        }
    }
    s
}

/// Full eigen-decomposition of a Hermitian matrix. The input is symmetrized as
/// `(m + m†)/2` before rotating; no positivity is assumed.
pub fn hermitian4_eigh(m: &Matrix4) -> Eigen4 {
    let mut a = zero4();
    for i in 0..4 {
        for j in 0..4 {
            a[i][j] = 0.5 * (m[i][j] + m[j][i].conj());
        }
    }
    let mut v = zero4();
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }

    let total: f64 = a.iter().flatten().map(|z| z.norm_sqr()).sum();
    let stop = (JACOBI_TOL * JACOBI_TOL) * total.max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        if off_norm2(&a) <= stop {
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..4 {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order = [0usize, 1, 2, 3];
    let diag = [a[0][0].re, a[1][1].re, a[2][2].re, a[3][3].re];
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));
    let mut values = [0.0; 4];
    let mut vectors = zero4();
    for (k, &idx) in order.iter().enumerate() {
        values[k] = diag[idx];
        for r in 0..4 {
            vectors[r][k] = v[r][idx];
        }
    }
    Eigen4 { values, vectors }
}

fn rotate(a: &mut Matrix4, v: &mut Matrix4, p: usize, q: usize) {
    let apq = a[p][q];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    // phase so that e^{-i theta} a_pq is real and positive
    let phase = apq / mag;
    let app = a[p][p].re;
    let aqq = a[q][q].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // U restricted to (p, q): [[c, s], [-s e^{-i theta}, c e^{-i theta}]]
    let e = phase.conj();
    let u_pp = Complex64::new(c, 0.0);
    let u_pq = Complex64::new(s, 0.0);
    let u_qp = -s * e;
    let u_qq = c * e;

    for row in a.iter_mut() {
        let (x, y) = (row[p], row[q]);
        row[p] = x * u_pp + y * u_qp;
        row[q] = x * u_pq + y * u_qq;
    }
    for k in 0..4 {
        let (x, y) = (a[p][k], a[q][k]);
        a[p][k] = u_pp.conj() * x + u_qp.conj() * y;
        a[q][k] = u_pq.conj() * x + u_qq.conj() * y;
    }
    a[p][q] = Complex64::new(0.0, 0.0);
    a[q][p] = Complex64::new(0.0, 0.0);
    a[p][p].im = 0.0;
    a[q][q].im = 0.0;

    for row in v.iter_mut() {
        let (x, y) = (row[p], row[q]);
        row[p] = x * u_pp + y * u_qp;
        row[q] = x * u_pq + y * u_qq;
    }
}

/// Eigenvalues of a 4x4 density matrix, sorted descending.
///
/// The matrix must be Hermitian and have unit trace within `tol`. Eigenvalues
/// in `(-tol, 0)` are clamped to zero; anything more negative is an error.
pub fn hermitian4_eigenvalues(m: &Matrix4, tol: f64) -> Result<[f64; 4]> {
    let defect = hermiticity_defect(m);
    if !(defect <= tol) {
        return Err(Error::InvalidMatrix(format!(
            "not Hermitian: asymmetry {defect:e} exceeds {tol:e}"
        )));
    }
    let trace: f64 = (0..4).map(|i| m[i][i].re).sum();
    if !((trace - 1.0).abs() <= tol) {
        return Err(Error::InvalidMatrix(format!(
            "trace {trace} differs from 1"
        )));
    }
    let mut values = hermitian4_eigh(m).values;
    for v in values.iter_mut() {
        if *v < -tol {
            return Err(Error::InvalidMatrix(format!("negative eigenvalue {v:e}")));
        }
        *v = v.max(0.0);
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng) -> Matrix4 {
        let mut m = zero4();
        for i in 0..4 {
            m[i][i] = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
            for j in (i + 1)..4 {
                let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                m[i][j] = z;
                m[j][i] = z.conj();
            }
        }
        m
    }

    fn reconstruct(e: &Eigen4) -> Matrix4 {
        let mut out = zero4();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    out[i][j] += e.vectors[i][k] * e.values[k] * e.vectors[j][k].conj();
                }
            }
        }
        out
    }

    #[test]
    fn maximally_mixed() {
        let mut m = zero4();
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = Complex64::new(0.25, 0.0);
        }
        let vals = hermitian4_eigenvalues(&m, 1e-12).unwrap();
        for v in vals {
            assert_abs_diff_eq!(v, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn diagonal_is_sorted() {
        let l = [0.1, 0.4, 0.2, 0.3];
        let mut m = [[0.0; 4]; 4];
        for i in 0..4 {
            m[i][i] = l[i];
        }
        let vals = hermitian4_eigenvalues(&from_real(m), 1e-12).unwrap();
        assert_eq!(vals, [0.4, 0.3, 0.2, 0.1]);
    }

    #[test]
    fn reconstruction_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let m = random_hermitian(&mut rng);
            let e = hermitian4_eigh(&m);
            let r = reconstruct(&e);
            for i in 0..4 {
                for j in 0..4 {
                    assert!((r[i][j] - m[i][j]).norm() < 1e-10);
                }
            }
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn density_matrix_spectrum_sums_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            // rho = G G† / tr(G G†)
            let g = random_hermitian(&mut rng);
            let mut rho = zero4();
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        rho[i][j] += g[i][k] * g[j][k].conj();
                    }
                }
            }
            let tr: f64 = (0..4).map(|i| rho[i][i].re).sum();
            for row in rho.iter_mut() {
                for z in row.iter_mut() {
                    *z /= tr;
                }
            }
            let vals = hermitian4_eigenvalues(&rho, 1e-10).unwrap();
            assert_abs_diff_eq!(vals.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn degenerate_spectrum() {
        // rank-2 projector mixed with a degenerate pair
        let m = from_real([
            [0.25, 0.0, 0.25, 0.0],
            [0.0, 0.25, 0.0, 0.0],
            [0.25, 0.0, 0.25, 0.0],
            [0.0, 0.0, 0.0, 0.25],
        ]);
        let vals = hermitian4_eigenvalues(&m, 1e-12).unwrap();
        assert_abs_diff_eq!(vals[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(vals[1], 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(vals[2], 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(vals[3], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_non_hermitian_and_negative() {
        let mut m = from_real([
            [0.25, 0.1, 0.0, 0.0],
            [0.0, 0.25, 0.0, 0.0],
            [0.0, 0.0, 0.25, 0.0],
            [0.0, 0.0, 0.0, 0.25],
        ]);
        assert!(hermitian4_eigenvalues(&m, 1e-10).is_err());
        m[0][1] = Complex64::new(0.0, 0.0);
        m[0][0] = Complex64::new(0.6, 0.0);
        m[1][1] = Complex64::new(-0.1, 0.0);
        assert!(hermitian4_eigenvalues(&m, 1e-10).is_err());
    }
}
