//! Plane-wave collocation leaves.
//!
//! A plane wave of wavenumber κ satisfies `Δu = −κ²u`, so the PDE residual of
//! a combination at a point is `Σ_j (k²n²(x) − κ_j²) B_j(x) c_j`. The basis is
//! first orthonormalized on the sample points so that null vectors of the
//! residual matrix are measured in function norm rather than coefficient norm.

use std::f64::consts::PI;

use faer::Mat;

use super::{leaf_boundary, plane_wave, InteriorRep, LeafBasis, LeafKind, TensorSamples};
use crate::boundary::DNTrace;
use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};
use crate::linalg::{nullspace_with, svd_thin, CMat};
use crate::medium::{Medium, WaveContext};
use crate::quadrature::GaussLegendre;
use crate::C64;

/// Relative cutoff used when orthonormalizing the sampled plane waves.
///
/// Coefficients grow like the inverse of this cutoff, and interior evaluation
/// loses that factor times machine precision to cancellation.
pub const BASIS_RANK_TOL: f64 = 1e-12;

const GRID_ROW_WEIGHT: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct PlaneWaveBasisSpec {
    pub directions: Vec<f64>,
    pub wavenumbers: Vec<f64>,
}

impl PlaneWaveBasisSpec {
    pub fn new(directions: Vec<f64>, wavenumbers: Vec<f64>) -> Result<Self> {
        if directions.is_empty() || wavenumbers.is_empty() {
            return Err(Error::InvalidParameter("plane-wave basis needs directions and wavenumbers".into()));
        }
        let mut reduced: Vec<f64> = directions.iter().map(|t| t.rem_euclid(2.0 * PI)).collect();
        reduced.sort_by(f64::total_cmp);
        let close = |a: f64, b: f64| (a - b).abs() < 1e-14;
        if reduced.windows(2).any(|w| close(w[0], w[1])) || (reduced.len() > 1 && close(reduced[0] + 2.0 * PI, reduced[reduced.len() - 1])) {
            return Err(Error::InvalidParameter("plane-wave directions must be distinct modulo 2π".into()));
        }
        if wavenumbers.iter().any(|&k| !(k > 0.0)) {
            return Err(Error::InvalidParameter("plane-wave wavenumbers must be positive".into()));
        }
        Ok(Self { directions, wavenumbers })
    }

    /// `ndir` equispaced directions at `nk` wavenumbers spread over `[k·n_min, k·n_max]`.
    pub fn equispaced(k: f64, n_range: (f64, f64), ndir: usize, nk: usize) -> Result<Self> {
        if ndir == 0 || nk == 0 {
            return Err(Error::InvalidCount { what: "plane-wave family size", value: ndir.min(nk) });
        }
        let directions = (0..ndir).map(|j| 2.0 * PI * j as f64 / ndir as f64).collect();
        let (lo, hi) = (k * n_range.0, k * n_range.1);
        let wavenumbers = if hi - lo <= 1e-12 * hi || nk == 1 {
            vec![0.5 * (lo + hi)]
        } else {
            (0..nk).map(|i| lo + (hi - lo) * i as f64 / (nk - 1) as f64).collect()
        };
        Self::new(directions, wavenumbers)
    }

    pub fn waves(&self) -> Vec<(f64, f64)> {
        self.wavenumbers.iter().flat_map(|&k| self.directions.iter().map(move |&t| (k, t))).collect()
    }
}

/// Tensor Gauss–Legendre points on the box, `n` per direction.
pub fn gauss_collocation_points(rect: &Rect, n: usize) -> Vec<Point> {
    let gl = GaussLegendre::new(n);
    let mut pts = Vec::with_capacity(n * n);
    for &ty in &gl.nodes {
        for &tx in &gl.nodes {
            pts.push(Point::new(
                rect.x0 + 0.5 * (1.0 + tx) * rect.width(),
                rect.y0 + 0.5 * (1.0 + ty) * rect.height(),
            ));
        }
    }
    pts
}

/// Gauss–Legendre nodes per axis for interpolating waves of phase span `kl`.
fn interpolation_order(kl: f64) -> usize {
    ((0.7 * kl).ceil() as usize + 12).min(48)
}

/// Collocation leaf with `q` trace nodes per edge.
///
/// The sampled basis (values at collocation points and trace nodes, normal
/// derivatives over `k` at trace nodes) is orthonormalized first; the trace is
/// then read off the left singular vectors, which avoids the cancellation of
/// large plane-wave coefficients. Interior values come from the same
/// singular vectors on a tensor grid.
pub fn build_leaf_collocation(
    ctx: &WaveContext,
    medium: &Medium,
    rect: &Rect,
    basis: &PlaneWaveBasisSpec,
    colloc: &[Point],
    tol_rel: f64,
    q: usize,
) -> Result<LeafBasis> {
    if !(tol_rel > 0.0 && tol_rel < 1.0) {
        return Err(Error::InvalidParameter(format!("null-space tolerance must lie in (0, 1), got {tol_rel}")));
    }
    if colloc.is_empty() {
        return Err(Error::InvalidCount { what: "collocation points", value: 0 });
    }
    let slack = 1e-12 * rect.width();
    if let Some(p) = colloc.iter().find(|p| !rect.contains_with(**p, slack)) {
        return Err(Error::TargetOutsideLeaf { x: p.x, y: p.y });
    }
    let boundary = leaf_boundary(rect, q)?;
    let center = rect.center();
    let waves = basis.waves();
    let k = ctx.k;
    let (nc, p) = (colloc.len(), boundary.len());
    let kmax = waves.iter().map(|w| w.0).fold(0.0, f64::max);
    let gl = GaussLegendre::new(interpolation_order(kmax * rect.width().max(rect.height())));
    let grid = TensorSamples::points(rect, &gl.nodes);
    let ng = grid.len();
    // light rows: they ride along in the SVD without shaping it
    let gw = GRID_ROW_WEIGHT * (((nc + 2 * p) as f64) / ng as f64).sqrt();

    let mut samples = Mat::<C64>::zeros(nc + 2 * p + ng, waves.len());
    for (j, &(kappa, theta)) in waves.iter().enumerate() {
        for (i, x) in colloc.iter().enumerate() {
            samples[(i, j)] = plane_wave(kappa, theta, center, *x).0;
        }
        for (i, (x, n)) in boundary.nodes.iter().zip(&boundary.normals).enumerate() {
            let (v, g) = plane_wave(kappa, theta, center, *x);
            samples[(nc + i, j)] = v;
            samples[(nc + p + i, j)] = (g[0] * n.x + g[1] * n.y) / k;
        }
        for (i, x) in grid.iter().enumerate() {
            samples[(nc + 2 * p + i, j)] = plane_wave(kappa, theta, center, *x).0 * gw;
        }
    }
    let parts = svd_thin(samples.as_ref())?;
    let smax = parts.s[0];
    let kept = parts.s.iter().take_while(|&&s| s > BASIS_RANK_TOL * smax).count();

    // residual of the orthonormal functions at the collocation points
    let w = Mat::from_fn(waves.len(), kept, |i, j| parts.v[(i, j)] / parts.s[j]);
    let n2: Vec<f64> = colloc.iter().map(|&x| medium.n2(x)).collect();
    let raw = Mat::from_fn(nc, waves.len(), |i, j| {
        let kappa = waves[j].0;
        samples[(i, j)] * (k * k * n2[i] - kappa * kappa)
    });
    let a = &raw * &w;
    // a floor keeps exact families (κ = kn everywhere) from being cut at round-off
    let floor = tol_rel * k * k * ((nc as f64) / ((nc + 2 * p) as f64)).sqrt();
    let null = nullspace_with(a.as_ref(), |smax| (tol_rel * smax).max(floor))?;
    if null.basis.ncols() == 0 {
        return Err(Error::EmptyBasis);
    }
    let coeffs = &w * &null.basis;
    let u = Mat::from_fn(2 * p, kept, |i, j| {
        let scale = if i < p { 1.0 } else { k };
        parts.u[(nc + i, j)] * scale
    });
    let data = &u * &null.basis;
    let values = parts.u.subrows(nc + 2 * p, ng).subcols(0, kept) * &null.basis * faer::Scale(C64::new(1.0 / gw, 0.0));
    Ok(LeafBasis {
        rect: *rect,
        kind: LeafKind::Collocation,
        interior: InteriorRep::PlaneWaves { center, waves, coeffs, tensor: TensorSamples { rect: *rect, nodes: gl.nodes, values } },
        trace: DNTrace::new(boundary, data)?,
    })
}

/// PDE residual `(Δ + k²n²)u` of every basis column at `pts`.
pub fn collocation_residual(ctx: &WaveContext, medium: &Medium, leaf: &LeafBasis, pts: &[Point]) -> Option<CMat> {
    let InteriorRep::PlaneWaves { center, waves, coeffs, .. } = &leaf.interior else { return None };
    let k2 = ctx.k * ctx.k;
    let b = Mat::from_fn(pts.len(), waves.len(), |i, j| {
        let kappa = waves[j].0;
        plane_wave(kappa, waves[j].1, *center, pts[i]).0 * (k2 * medium.n2(pts[i]) - kappa * kappa)
    });
    Some(b * coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leaf::compress_basis;
    use crate::linalg::{col, to_vec, vec_norm, TruncatedSvd};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn homogeneous_single_wavenumber_is_all_null() {
        let k = 4.0;
        let ctx = WaveContext::new(k, 1e-12).unwrap();
        let rect = Rect::new(0.0, 0.0, 0.5, 0.5);
        let med = Medium::homogeneous(rect);
        let spec = PlaneWaveBasisSpec::equispaced(k, (1.0, 1.0), 12, 1).unwrap();
        let pts = gauss_collocation_points(&rect, 6);
        let leaf = build_leaf_collocation(&ctx, &med, &rect, &spec, &pts, 1e-10, 8).unwrap();
        assert_eq!(leaf.rank(), 12);
    }

    #[test]
    fn wrong_wavenumber_gives_empty_basis() {
        let ctx = WaveContext::new(4.0, 1e-12).unwrap();
        let rect = Rect::new(0.0, 0.0, 0.5, 0.5);
        let med = Medium::homogeneous(rect);
        let spec = PlaneWaveBasisSpec::new(vec![0.3], vec![5.0]).unwrap();
        let pts = gauss_collocation_points(&rect, 4);
        assert!(matches!(build_leaf_collocation(&ctx, &med, &rect, &spec, &pts, 1e-10, 6), Err(Error::EmptyBasis)));
    }

    #[test]
    fn duplicate_directions_rejected() {
        assert!(PlaneWaveBasisSpec::new(vec![0.0, 2.0 * PI], vec![1.0]).is_err());
        assert!(PlaneWaveBasisSpec::new(vec![], vec![1.0]).is_err());
    }

    #[test]
    fn trace_matches_direct_evaluation() {
        let k = 10.0;
        let ctx = WaveContext::new(k, 1e-6).unwrap();
        let rect = Rect::new(0.0, 0.0, 0.25, 0.25);
        let med = Medium::gaussian_bump(0.5, 0.1, Point::default(), Rect::new(-0.5, -0.5, 0.5, 0.5)).unwrap();
        let pts = gauss_collocation_points(&rect, 14);
        let spec = PlaneWaveBasisSpec::equispaced(k, med.n_range(&pts), 32, 5).unwrap();
        let leaf = build_leaf_collocation(&ctx, &med, &rect, &spec, &pts, 1e-6, 12).unwrap();
        let b = leaf.trace.boundary.clone();
        let direct = leaf.evaluate_basis(&b.nodes).unwrap();
        let scale = leaf.trace.data.norm_max();
        for i in 0..b.len() {
            for j in 0..leaf.rank() {
                assert!((direct[(i, j)] - leaf.trace.data[(i, j)]).norm() < 1e-6 * scale);
            }
        }
    }

    #[test]
    fn bump_columns_have_small_residual_off_the_collocation_grid() {
        // one wavelength across at k = 10, bump centred in the box
        let k = 10.0;
        let tol = 1e-6;
        let ctx = WaveContext::new(k, tol).unwrap();
        let side = 2.0 * PI / k;
        let rect = Rect::square(-side / 2.0, -side / 2.0, side);
        let med = Medium::gaussian_bump(0.5, 0.1, Point::default(), Rect::new(-0.5, -0.5, 0.5, 0.5)).unwrap();
        let pts = gauss_collocation_points(&rect, 12);
        let spec = PlaneWaveBasisSpec::equispaced(k, med.n_range(&pts), 64, 3).unwrap();
        let leaf = build_leaf_collocation(&ctx, &med, &rect, &spec, &pts, tol, 10).unwrap();

        // σ_max of the residual matrix over an orthonormalized sampling of the same waves
        let InteriorRep::PlaneWaves { center, waves, .. } = &leaf.interior else { unreachable!() };
        let b = leaf.trace.boundary.clone();
        let mut rows = Mat::<C64>::zeros(pts.len() + 2 * b.len(), waves.len());
        for (j, &(kappa, theta)) in waves.iter().enumerate() {
            for (i, x) in pts.iter().chain(&b.nodes).enumerate() {
                rows[(i, j)] = plane_wave(kappa, theta, *center, *x).0;
            }
            for (i, (x, n)) in b.nodes.iter().zip(&b.normals).enumerate() {
                let g = plane_wave(kappa, theta, *center, *x).1;
                rows[(pts.len() + b.len() + i, j)] = (g[0] * n.x + g[1] * n.y) / k;
            }
        }
        let parts = svd_thin(rows.as_ref()).unwrap();
        let kept = parts.s.iter().take_while(|&&x| x > BASIS_RANK_TOL * parts.s[0]).count();
        let w = Mat::from_fn(waves.len(), kept, |i, j| parts.v[(i, j)] / parts.s[j]);
        let res = Mat::from_fn(pts.len(), waves.len(), |i, j| rows[(i, j)] * (k * k * med.n2(pts[i]) - waves[j].0 * waves[j].0));
        let sigma_max = crate::linalg::op_norm((&res * &w).as_ref()).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let check: Vec<Point> = (0..200)
            .map(|_| Point::new(rng.gen_range(rect.x0..rect.x1), rng.gen_range(rect.y0..rect.y1)))
            .collect();
        let res = collocation_residual(&ctx, &med, &leaf, &check).unwrap();
        let worst = res.norm_max();
        assert!(worst <= 10.0 * tol * sigma_max, "{worst:e} vs {:e}", tol * sigma_max);
    }

    #[test]
    fn compressed_basis_is_complete_for_plane_waves() {
        let k = 6.0;
        let ctx = WaveContext::new(k, 1e-12).unwrap();
        let rect = Rect::new(0.0, 0.0, 0.4, 0.4);
        let med = Medium::homogeneous(rect);
        let spec = PlaneWaveBasisSpec::equispaced(k, (1.0, 1.0), 40, 1).unwrap();
        let pts = gauss_collocation_points(&rect, 8);
        let leaf = build_leaf_collocation(&ctx, &med, &rect, &spec, &pts, 1e-10, 12).unwrap();
        let eps = 1e-10;
        let c = compress_basis(&leaf, &ctx, eps).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let b = &c.trace.boundary;
        for _ in 0..5 {
            let dir = Point::polar(1.0, rng.gen_range(0.0..2.0 * PI));
            let mut data: Vec<C64> = b.nodes.iter().map(|x| C64::new(0.0, k * x.dot(dir)).exp()).collect();
            let dn: Vec<C64> = b.nodes.iter().zip(&b.normals).map(|(x, n)| C64::new(0.0, k * n.dot(dir)) * C64::new(0.0, k * x.dot(dir)).exp()).collect();
            data.extend(dn);
            let scales = b.row_scales(k);
            let ws: Vec<C64> = data.iter().zip(&scales).map(|(d, s)| d * s).collect();
            let g = c.trace.scaled(k);
            let fit = TruncatedSvd::new(g.as_ref(), 1e-14).unwrap().solve(col(&ws).as_ref());
            let r = to_vec((&g * &fit - col(&ws)).as_ref());
            let err = vec_norm(&r) / vec_norm(&ws);
            assert!(err <= eps, "{err:e}");
        }
    }
}
