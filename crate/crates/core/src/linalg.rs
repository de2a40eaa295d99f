//! Dense complex linear algebra helpers on top of faer.

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef};

use crate::error::{Error, Result};
use crate::C64;

pub type CMat = Mat<C64>;

/// Singular value decomposition `A = U diag(s) V*`, singular values nonincreasing.
pub struct SvdParts {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

fn svd_impl(a: MatRef<'_, C64>, thin: bool) -> Result<SvdParts> {
    let (m, n) = (a.nrows(), a.ncols());
    if m == 0 || n == 0 {
        let u = if thin { Mat::zeros(m, 0) } else { Mat::identity(m, m) };
        let v = if thin { Mat::zeros(n, 0) } else { Mat::identity(n, n) };
        return Ok(SvdParts { u, s: Vec::new(), v });
    }
    let svd = if thin { a.thin_svd() } else { a.svd() }.map_err(|_| Error::SvdFailed)?;
    let k = m.min(n);
    let s = (0..k).map(|i| svd.S().column_vector()[i].re).collect();
    Ok(SvdParts { u: svd.U().to_owned(), s, v: svd.V().to_owned() })
}

pub fn svd_full(a: MatRef<'_, C64>) -> Result<SvdParts> {
    svd_impl(a, false)
}

pub fn svd_thin(a: MatRef<'_, C64>) -> Result<SvdParts> {
    svd_impl(a, true)
}

pub fn singular_values(a: MatRef<'_, C64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    a.singular_values().map_err(|_| Error::SvdFailed)
}

/// Spectral norm.
pub fn op_norm(a: MatRef<'_, C64>) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

/// Ratio of extreme singular values of a square matrix.
pub fn condition_number(a: MatRef<'_, C64>) -> Result<f64> {
    let s = singular_values(a)?;
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => Ok(hi / lo),
        (Some(_), Some(_)) => Ok(f64::INFINITY),
        _ => Ok(1.0),
    }
}

pub fn frobenius(a: MatRef<'_, C64>) -> f64 {
    a.norm_l2()
}

/// Orthonormal basis of the numerical null space together with the largest singular value.
pub struct Nullspace {
    pub basis: CMat,
    pub sigma_max: f64,
    pub singular_values: Vec<f64>,
}

/// Null space of `a` at relative tolerance `tol_rel`.
///
/// Columns span `{v : ‖Av‖ ≤ tol_rel σ_max ‖v‖}`; when `a` has fewer rows than
/// columns the trailing exact null directions are always included.
pub fn nullspace(a: MatRef<'_, C64>, tol_rel: f64) -> Result<Nullspace> {
    let (s_rows, t) = (a.nrows(), a.ncols());
    if s_rows == 0 {
        return Ok(Nullspace { basis: Mat::identity(t, t), sigma_max: 0.0, singular_values: Vec::new() });
    }
    nullspace_with(a, |sigma_max| tol_rel * sigma_max)
}

/// Null space below the absolute threshold `cut(σ_max)`.
pub fn nullspace_with(a: MatRef<'_, C64>, cut: impl Fn(f64) -> f64) -> Result<Nullspace> {
    let (s_rows, t) = (a.nrows(), a.ncols());
    if s_rows == 0 {
        return Ok(Nullspace { basis: Mat::identity(t, t), sigma_max: 0.0, singular_values: Vec::new() });
    }
    let parts = if s_rows >= t { svd_thin(a)? } else { svd_full(a)? };
    let sigma_max = parts.s.first().copied().unwrap_or(0.0);
    let cut = cut(sigma_max);
    let first = if sigma_max == 0.0 { 0 } else { parts.s.iter().position(|&x| x <= cut).unwrap_or(parts.s.len()) };
    let basis = parts.v.subcols(first, t - first).to_owned();
    Ok(Nullspace { basis, sigma_max, singular_values: parts.s })
}

pub fn numeric_nullspace(a: MatRef<'_, C64>, tol_rel: f64) -> Result<CMat> {
    Ok(nullspace(a, tol_rel)?.basis)
}

/// Truncated SVD pseudo-inverse, reusable across right-hand sides.
pub struct TruncatedSvd {
    u: CMat,
    s: Vec<f64>,
    v: CMat,
    pub dropped: usize,
    pub sigma_max: f64,
}

impl TruncatedSvd {
    pub fn new(a: MatRef<'_, C64>, reg_tol: f64) -> Result<Self> {
        let parts = svd_thin(a)?;
        let sigma_max = parts.s.first().copied().unwrap_or(0.0);
        let keep = parts.s.iter().take_while(|&&x| x > reg_tol * sigma_max && x > 0.0).count();
        let dropped = parts.s.len() - keep;
        Ok(Self {
            u: parts.u.subcols(0, keep).to_owned(),
            s: parts.s[..keep].to_vec(),
            v: parts.v.subcols(0, keep).to_owned(),
            dropped,
            sigma_max,
        })
    }

    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// Least-squares solution of `A x ≈ b` restricted to the retained singular directions.
    pub fn solve(&self, b: MatRef<'_, C64>) -> CMat {
        let mut c = self.u.adjoint() * b;
        for (i, &s) in self.s.iter().enumerate() {
            for j in 0..c.ncols() {
                c[(i, j)] /= s;
            }
        }
        &self.v * &c
    }

    /// `A x` through the retained singular triplets.
    pub fn apply(&self, x: MatRef<'_, C64>) -> CMat {
        let mut c = self.v.adjoint() * x;
        for (i, &s) in self.s.iter().enumerate() {
            for j in 0..c.ncols() {
                c[(i, j)] *= s;
            }
        }
        &self.u * &c
    }
}

/// Solve a square system by partial-pivot LU.
pub fn lu_solve(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> CMat {
    a.partial_piv_lu().solve(b)
}

/// Column vector from a slice.
pub fn col(v: &[C64]) -> CMat {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

/// First column as a vector.
pub fn to_vec(a: MatRef<'_, C64>) -> Vec<C64> {
    (0..a.nrows()).map(|i| a[(i, 0)]).collect()
}

/// Euclidean norm of a vector.
pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest principal-angle sine between the column spaces of `a` and `b`.
pub fn subspace_distance(a: MatRef<'_, C64>, b: MatRef<'_, C64>, tol: f64) -> Result<f64> {
    let qa = orthonormal_range(a, tol)?;
    let qb = orthonormal_range(b, tol)?;
    if qa.ncols() != qb.ncols() {
        return Ok(1.0);
    }
    let residual = &qb - &qa * (qa.adjoint() * &qb);
    op_norm(residual.as_ref())
}

/// Orthonormal basis for the numerical range of `a`.
pub fn orthonormal_range(a: MatRef<'_, C64>, tol: f64) -> Result<CMat> {
    let parts = svd_thin(a)?;
    let smax = parts.s.first().copied().unwrap_or(0.0);
    let keep = parts.s.iter().take_while(|&&x| x > tol * smax).count();
    Ok(parts.u.subcols(0, keep).to_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(m: usize, n: usize, rng: &mut ChaCha8Rng) -> CMat {
        Mat::from_fn(m, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn orthonormality_error(q: &CMat) -> f64 {
        let g = q.adjoint() * q;
        let e = &g - Mat::<C64>::identity(q.ncols(), q.ncols());
        op_norm(e.as_ref()).unwrap()
    }

    #[test]
    fn nullspace_examples() {
        let a = Mat::from_fn(2, 2, |i, j| if i == 0 && j == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        let n = numeric_nullspace(a.as_ref(), 1e-10).unwrap();
        assert_eq!(n.ncols(), 1);
        assert!(n[(0, 0)].norm() < 1e-15 && (n[(1, 0)].norm() - 1.0).abs() < 1e-15);

        let row = Mat::from_fn(1, 3, |_, _| C64::new(1.0, 0.0));
        let n = numeric_nullspace(row.as_ref(), 1e-10).unwrap();
        assert_eq!(n.ncols(), 2);
        assert!((&row * &n).norm_l2() < 1e-14);
        assert!(orthonormality_error(&n) < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random(20, 30, &mut rng);
        let n = numeric_nullspace(a.as_ref(), 1e-10).unwrap();
        assert_eq!(n.ncols(), 10);
        assert!((&a * &n).norm_l2() < 1e-12);
    }

    #[test]
    fn zero_matrix_null_space_is_everything() {
        let a = Mat::<C64>::zeros(4, 6);
        assert_eq!(numeric_nullspace(a.as_ref(), 1e-10).unwrap().ncols(), 6);
    }

    #[test]
    fn truncated_solve_recovers_column() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random(30, 8, &mut rng);
        let b = a.subcols(3, 1).to_owned();
        let t = TruncatedSvd::new(a.as_ref(), 1e-12).unwrap();
        let x = t.solve(b.as_ref());
        for i in 0..8 {
            let e = if i == 3 { 1.0 } else { 0.0 };
            assert!((x[(i, 0)] - C64::new(e, 0.0)).norm() < 1e-12);
        }
        assert_eq!(t.dropped, 0);
    }

    #[test]
    fn singular_values_sorted() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random(12, 7, &mut rng);
        let s = singular_values(a.as_ref()).unwrap();
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
        assert!((op_norm(a.as_ref()).unwrap() - s[0]).abs() < 1e-14);
        let _ = rng.gen::<f64>();
    }
}
