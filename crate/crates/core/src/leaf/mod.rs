//! Total-wave solution spaces on bottom-level boxes.
//!
//! A leaf basis is a set of solutions of the homogeneous variable-coefficient
//! equation with no boundary condition, stored both through their
//! Dirichlet/Neumann traces on the box boundary and through an interior
//! representation that evaluates them anywhere in the box.

mod collocation;
mod fd;

use std::sync::Arc;

use faer::Mat;

use crate::boundary::{discretize_box_boundary, BoundarySampling, DNTrace};
use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};
use crate::linalg::{svd_thin, CMat};
use crate::medium::WaveContext;
use crate::quadrature::lagrange_row;
use crate::C64;

pub use collocation::{build_leaf_collocation, collocation_residual, gauss_collocation_points, PlaneWaveBasisSpec, BASIS_RANK_TOL};
pub use fd::build_leaf_fd;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeafKind {
    Fd,
    Collocation,
}

/// How a leaf evaluates its basis solutions inside the box.
#[derive(Clone, Debug)]
pub enum InteriorRep {
    /// Values on an `m × m` mesh with spacing `h`, row index `iy·m + ix`.
    Grid { origin: Point, h: f64, m: usize, values: CMat },
    /// Plane waves `exp(iκ(cos θ, sin θ)·(x − center))` and a coefficient
    /// matrix, with point values sampled on a tensor grid for evaluation.
    PlaneWaves { center: Point, waves: Vec<(f64, f64)>, coeffs: CMat, tensor: TensorSamples },
}

/// Values on a tensor Gauss–Legendre grid, row index `iy·n + ix`.
///
/// Interpolating these is stable even when the plane-wave coefficients are
/// large and cancel.
#[derive(Clone, Debug)]
pub struct TensorSamples {
    pub rect: Rect,
    /// Reference nodes on `[-1, 1]`.
    pub nodes: Vec<f64>,
    pub values: CMat,
}

impl TensorSamples {
    pub fn points(rect: &Rect, nodes: &[f64]) -> Vec<Point> {
        let c = rect.center();
        let (hx, hy) = (0.5 * rect.width(), 0.5 * rect.height());
        let mut pts = Vec::with_capacity(nodes.len() * nodes.len());
        for &ty in nodes {
            for &tx in nodes {
                pts.push(Point::new(c.x + hx * tx, c.y + hy * ty));
            }
        }
        pts
    }

    fn eval(&self, targets: &[Point]) -> CMat {
        let n = self.nodes.len();
        let c = self.rect.center();
        let (hx, hy) = (0.5 * self.rect.width(), 0.5 * self.rect.height());
        let r = self.values.ncols();
        let mut out = Mat::<C64>::zeros(targets.len(), r);
        for (row, t) in targets.iter().enumerate() {
            let wx = lagrange_row(&self.nodes, (t.x - c.x) / hx);
            let wy = lagrange_row(&self.nodes, (t.y - c.y) / hy);
            for (a, &wya) in wy.iter().enumerate() {
                for (b, &wxb) in wx.iter().enumerate() {
                    let w = wya * wxb;
                    let idx = a * n + b;
                    for col in 0..r {
                        out[(row, col)] += self.values[(idx, col)] * w;
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct LeafBasis {
    pub rect: Rect,
    pub kind: LeafKind,
    pub interior: InteriorRep,
    pub trace: DNTrace,
}

impl LeafBasis {
    pub fn rank(&self) -> usize {
        self.trace.rank()
    }

    fn right_multiply(&mut self, f: &CMat) {
        match &mut self.interior {
            InteriorRep::Grid { values, .. } => *values = &*values * f,
            InteriorRep::PlaneWaves { coeffs, tensor, .. } => {
                *coeffs = &*coeffs * f;
                tensor.values = &tensor.values * f;
            }
        }
        self.trace.data = &self.trace.data * f;
    }

    /// Values of every basis solution at `targets`, one row per target.
    pub fn evaluate_basis(&self, targets: &[Point]) -> Result<CMat> {
        for t in targets {
            if !self.rect.contains_with(*t, 1e-12 * self.rect.width()) {
                return Err(Error::TargetOutsideLeaf { x: t.x, y: t.y });
            }
        }
        let r = self.rank();
        Ok(match &self.interior {
            InteriorRep::Grid { origin, h, m, values } => {
                let mut out = Mat::<C64>::zeros(targets.len(), r);
                for (row, t) in targets.iter().enumerate() {
                    let (ix, wx) = stencil(*m, (t.x - origin.x) / h);
                    let (iy, wy) = stencil(*m, (t.y - origin.y) / h);
                    for (a, &wya) in wy.iter().enumerate() {
                        for (b, &wxb) in wx.iter().enumerate() {
                            let idx = (iy + a) * m + ix + b;
                            let w = wya * wxb;
                            for c in 0..r {
                                out[(row, c)] += values[(idx, c)] * w;
                            }
                        }
                    }
                }
                out
            }
            InteriorRep::PlaneWaves { tensor, .. } => tensor.eval(targets),
        })
    }
}

/// Lagrange stencil of up to four points around fractional grid index `s` on `0..m`.
pub(crate) fn stencil(m: usize, s: f64) -> (usize, Vec<f64>) {
    let n = m.min(4);
    let start = (s.floor() as isize - (n as isize - 1) / 2).clamp(0, (m - n) as isize) as usize;
    let nodes: Vec<f64> = (start..start + n).map(|i| i as f64).collect();
    (start, lagrange_row(&nodes, s))
}

/// Boundary sampling with `q` Gauss–Legendre nodes per edge.
pub fn leaf_boundary(rect: &Rect, q: usize) -> Result<Arc<BoundarySampling>> {
    Ok(Arc::new(discretize_box_boundary(rect, q)?))
}

/// Orthonormalize the weighted trace and drop directions below `eps·σ_max`.
///
/// Value rows are weighted by `√w` and derivative rows by `√w / k`; the
/// interior representation follows the same right factor.
pub fn compress_basis(basis: &LeafBasis, ctx: &WaveContext, eps: f64) -> Result<LeafBasis> {
    let factor = compression_factor(&basis.trace, ctx.k, eps)?;
    let mut out = basis.clone();
    out.right_multiply(&factor);
    Ok(out)
}

/// Right factor `V_r Σ_r⁻¹` making the scaled trace orthonormal.
pub fn compression_factor(trace: &DNTrace, k: f64, eps: f64) -> Result<CMat> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("compression tolerance must lie in (0, 1), got {eps}")));
    }
    let parts = svd_thin(trace.scaled(k).as_ref())?;
    let smax = parts.s.first().copied().unwrap_or(0.0);
    let keep = parts.s.iter().take_while(|&&s| s > eps * smax && s > 0.0).count();
    Ok(Mat::from_fn(trace.rank(), keep, |i, j| parts.v[(i, j)] / parts.s[j]))
}

/// Plane wave value and gradient.
pub(crate) fn plane_wave(kappa: f64, theta: f64, center: Point, x: Point) -> (C64, [C64; 2]) {
    let (s, c) = theta.sin_cos();
    let d = x - center;
    let e = C64::new(0.0, kappa * (c * d.x + s * d.y)).exp();
    let ik = C64::new(0.0, kappa);
    (e, [ik * c * e, ik * s * e])
}
