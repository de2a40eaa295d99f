//! Dense Lippmann–Schwinger reference solver on a uniform cell grid.
//!
//! With `G = −Φ` the density `σ = −k²q·u` solves
//! `σ + k²q ∫ Gσ = −k²q·u₀` and the scattered field is `v = ∫ Gσ`.
//! Cells use the midpoint rule; the cell containing the target integrates the
//! logarithmic part of `Φ` exactly. Only the special functions are shared with
//! the fast solver.

use std::f64::consts::PI;

use faer::linalg::solvers::Solve;
use faer::Mat;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};
use crate::medium::{Medium, WaveContext};
use crate::solver::{IncidentKind, IncidentWave};
use crate::specfun::{hankel1_01, EULER_GAMMA};
use crate::C64;

/// `∫ ln|ξ| dξ` over the unit square centred at the origin.
pub const CELL_LOG_INTEGRAL: f64 = -1.061_175_426_882_524_4;

#[derive(Clone, Debug, PartialEq)]
pub struct VolumeGrid {
    pub rect: Rect,
    pub n_side: usize,
    /// Cell centres, row index `iy·n_side + ix`.
    pub points: Vec<Point>,
    pub cell_area: f64,
}

impl VolumeGrid {
    pub fn new(rect: Rect, n_side: usize) -> Result<Self> {
        if n_side == 0 {
            return Err(Error::InvalidCount { what: "grid side", value: 0 });
        }
        if !rect.is_square() {
            return Err(Error::UnsupportedGeometry("the oracle grid must be square".into()));
        }
        let h = rect.width() / n_side as f64;
        let points = (0..n_side)
            .flat_map(|iy| (0..n_side).map(move |ix| Point::new(rect.x0 + (ix as f64 + 0.5) * h, rect.y0 + (iy as f64 + 0.5) * h)))
            .collect();
        Ok(Self { rect, n_side, points, cell_area: h * h })
    }

    pub fn spacing(&self) -> f64 {
        self.rect.width() / self.n_side as f64
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn phi(k: f64, r: f64) -> C64 {
    C64::new(0.0, 0.25) * hankel1_01(k * r).0
}

/// `∫_cell Φ(x − ξ) dξ` for `x` at the centre of a square cell of side `h`.
pub fn self_cell_integral(k: f64, h: f64) -> C64 {
    let smooth = C64::new(-((0.5 * k).ln() + EULER_GAMMA) / (2.0 * PI), 0.25);
    let log_part = -(h.ln() + CELL_LOG_INTEGRAL) / (2.0 * PI);
    (smooth + log_part) * h * h
}

/// `∫_cell Φ(x − ξ) dξ` by the rule used for the grid, indexed by cell offset.
struct KernelTable {
    n: usize,
    values: Vec<C64>,
}

impl KernelTable {
    fn new(k: f64, grid: &VolumeGrid) -> Self {
        let n = grid.n_side;
        let h = grid.spacing();
        let mut values = vec![C64::new(0.0, 0.0); n * n];
        values.par_iter_mut().enumerate().for_each(|(idx, v)| {
            let (dx, dy) = ((idx % n) as f64, (idx / n) as f64);
            *v = if idx == 0 { self_cell_integral(k, h) } else { phi(k, h * dx.hypot(dy)) * (h * h) };
        });
        Self { n, values }
    }

    fn get(&self, i: usize, j: usize) -> C64 {
        let (ix, iy) = (i % self.n, i / self.n);
        let (jx, jy) = (j % self.n, j / self.n);
        self.values[iy.abs_diff(jy) * self.n + ix.abs_diff(jx)]
    }
}

fn incident_values(ctx: &WaveContext, wave: &IncidentWave, points: &[Point]) -> Result<Vec<C64>> {
    points
        .iter()
        .map(|&x| match wave.kind {
            IncidentKind::Plane { direction } => {
                let (s, c) = direction.sin_cos();
                Ok(wave.amplitude * C64::new(0.0, ctx.k * (c * x.x + s * x.y)).exp())
            }
            IncidentKind::Monopole { source } => {
                let r = x.dist(source);
                if r == 0.0 {
                    return Err(Error::SourceOnBoundary);
                }
                Ok(wave.amplitude * phi(ctx.k, r))
            }
        })
        .collect()
}

/// Density `σ` at the grid points.
///
/// Cells where the contrast vanishes carry no unknowns.
pub fn solve_lippmann_schwinger(ctx: &WaveContext, medium: &Medium, grid: &VolumeGrid, wave: &IncidentWave) -> Result<Vec<C64>> {
    let k2 = ctx.k * ctx.k;
    let q: Vec<f64> = grid.points.iter().map(|&x| medium.q(x)).collect();
    let active: Vec<usize> = (0..grid.len()).filter(|&i| q[i] != 0.0).collect();
    let mut sigma = vec![C64::new(0.0, 0.0); grid.len()];
    if active.is_empty() {
        return Ok(sigma);
    }
    let u0 = incident_values(ctx, wave, &grid.points)?;
    let table = KernelTable::new(ctx.k, grid);
    let m = active.len();
    // I − k²q·W with W the cell integrals of Φ
    let mut a = Mat::<C64>::zeros(m, m);
    for (c, &j) in active.iter().enumerate() {
        let column = a.col_mut(c).try_as_col_major_mut().expect("owned matrices are column-major").as_slice_mut();
        column.par_iter_mut().enumerate().for_each(|(r, v)| {
            let i = active[r];
            *v = -k2 * q[i] * table.get(i, j);
            if r == c {
                *v += 1.0;
            }
        });
    }
    let b = Mat::from_fn(m, 1, |r, _| -k2 * q[active[r]] * u0[active[r]]);
    let lu = a.partial_piv_lu();
    let x = lu.solve(&b);
    drop(lu);
    if (0..m).any(|r| !x[(r, 0)].re.is_finite() || !x[(r, 0)].im.is_finite()) {
        return Err(Error::SingularSystem);
    }
    for (r, &i) in active.iter().enumerate() {
        sigma[i] = x[(r, 0)];
    }
    Ok(sigma)
}

/// `v(x) = ∫ Gσ` by the grid rule, with the cell correction at coinciding nodes.
pub fn eval_scattered_volume(ctx: &WaveContext, grid: &VolumeGrid, sigma: &[C64], targets: &[Point]) -> Vec<C64> {
    let h = grid.spacing();
    let own = self_cell_integral(ctx.k, h);
    targets
        .par_iter()
        .map(|&t| {
            let mut acc = C64::new(0.0, 0.0);
            for (x, s) in grid.points.iter().zip(sigma) {
                if s.re == 0.0 && s.im == 0.0 {
                    continue;
                }
                let r = t.dist(*x);
                acc += if r <= 1e-12 * h { own } else { phi(ctx.k, r) * grid.cell_area } * s;
            }
            -acc
        })
        .collect()
}

/// Probe ring used by the self-convergence study: 16 points on the circle
/// whose radius equals the side of the box.
pub fn probe_ring(rect: &Rect, count: usize) -> Vec<Point> {
    let c = rect.center();
    let r = rect.width();
    (0..count)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / count as f64;
            Point::new(c.x + r * t.cos(), c.y + r * t.sin())
        })
        .collect()
}

/// Scattered field at exterior probes for one grid resolution.
pub fn oracle_scattered(ctx: &WaveContext, medium: &Medium, n_side: usize, wave: &IncidentWave, targets: &[Point]) -> Result<Vec<C64>> {
    let grid = VolumeGrid::new(medium.support(), n_side)?;
    let sigma = solve_lippmann_schwinger(ctx, medium, &grid, wave)?;
    Ok(eval_scattered_volume(ctx, &grid, &sigma, targets))
}

fn relative_difference(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Successive relative differences of the probe field over refining grids.
pub fn oracle_self_convergence(ctx: &WaveContext, medium: &Medium, wave: &IncidentWave, n_sides: &[usize]) -> Result<Vec<f64>> {
    if n_sides.len() < 3 {
        return Err(Error::InvalidCount { what: "grid sizes for a convergence study", value: n_sides.len() });
    }
    let probes = probe_ring(&medium.support(), 16);
    let fields = n_sides
        .iter()
        .map(|&n| oracle_scattered(ctx, medium, n, wave, &probes))
        .collect::<Result<Vec<_>>>()?;
    let diffs: Vec<f64> = fields.windows(2).map(|w| relative_difference(&w[0], &w[1])).collect();
    if diffs.windows(2).any(|w| w[1] > w[0] && w[1] > 1e-14) {
        return Err(Error::NonConvergent(format!("grid differences {diffs:?} do not decrease")));
    }
    Ok(diffs)
}
