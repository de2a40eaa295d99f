//! Five-point finite-difference leaves with a ghost layer.
//!
//! The stencil is imposed at all `m²` mesh points, including those on the box
//! edges. Their missing neighbours are `4m` ghost unknowns one step outside
//! the box, so the discrete operator has a `4m`-dimensional null space.

use faer::Mat;

use super::{leaf_boundary, stencil, InteriorRep, LeafBasis, LeafKind};
use crate::boundary::DNTrace;
use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};
use crate::linalg::{nullspace, CMat};
use crate::medium::{Medium, WaveContext};
use crate::C64;

const NULL_TOL: f64 = 1e-10;

/// Unknown numbering: mesh points first, then ghosts by edge (S, E, N, W).
struct Layout {
    m: usize,
}

impl Layout {
    fn mesh(&self, ix: usize, iy: usize) -> usize {
        iy * self.m + ix
    }

    /// Index of the value at `(ix, iy)` with ghosts at -1 and `m`.
    fn at(&self, ix: isize, iy: isize) -> usize {
        let m = self.m as isize;
        let g = |edge: usize, i: isize| self.m * self.m + edge * self.m + i as usize;
        match (ix, iy) {
            (_, -1) => g(0, ix),
            (x, _) if x == m => g(1, iy),
            (_, y) if y == m => g(2, ix),
            (-1, _) => g(3, iy),
            _ => self.mesh(ix as usize, iy as usize),
        }
    }

    fn unknowns(&self) -> usize {
        self.m * self.m + 4 * self.m
    }
}

/// Stencil rows scaled by `h²`: `u_E + u_W + u_N + u_S − (4 − k²n²h²) u`.
fn stencil_matrix(ctx: &WaveContext, medium: &Medium, rect: &Rect, m: usize) -> CMat {
    let lay = Layout { m };
    let h = rect.width() / (m - 1) as f64;
    let mut a = Mat::<C64>::zeros(m * m, lay.unknowns());
    for iy in 0..m {
        for ix in 0..m {
            let row = lay.mesh(ix, iy);
            let p = Point::new(rect.x0 + ix as f64 * h, rect.y0 + iy as f64 * h);
            let kh = ctx.k * h;
            a[(row, row)] = C64::new(-4.0 + kh * kh * medium.n2(p), 0.0);
            let (x, y) = (ix as isize, iy as isize);
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                a[(row, lay.at(x + dx, y + dy))] = C64::new(1.0, 0.0);
            }
        }
    }
    a
}

/// Total-wave basis from the null space of the ghost-augmented stencil.
///
/// `q` Gauss–Legendre nodes per edge carry the trace; values are interpolated
/// along each edge and normal derivatives come from centred differences
/// through the ghost layer.
pub fn build_leaf_fd(ctx: &WaveContext, medium: &Medium, rect: &Rect, m: usize, q: usize) -> Result<LeafBasis> {
    if m < 3 {
        return Err(Error::InvalidCount { what: "mesh points per edge", value: m });
    }
    if !rect.is_square() {
        return Err(Error::UnsupportedGeometry("leaf boxes must be square".into()));
    }
    let h = rect.width() / (m - 1) as f64;
    let corners = [
        Point::new(rect.x0, rect.y0),
        Point::new(rect.x1, rect.y1),
        rect.center(),
    ];
    let nmax = corners.iter().map(|&p| medium.n(p)).fold(1.0, f64::max);
    let ppw = 2.0 * std::f64::consts::PI / (ctx.k * nmax * h);
    if ppw < 4.0 {
        log::warn!("finite-difference leaf resolves only {ppw:.1} points per wavelength");
    }

    let a = stencil_matrix(ctx, medium, rect, m);
    let null = nullspace(a.as_ref(), NULL_TOL)?;
    if null.basis.ncols() != 4 * m {
        return Err(Error::DegenerateLeaf { expected: 4 * m, found: null.basis.ncols() });
    }
    let n = null.basis;

    let boundary = leaf_boundary(rect, q)?;
    let lay = Layout { m };
    let p = boundary.len();
    let mut e = Mat::<C64>::zeros(2 * p, lay.unknowns());
    for (node, x) in boundary.nodes.iter().enumerate() {
        let edge = node / q;
        // coordinate along the edge in grid units; `pick(i)` gives the edge point,
        // its ghost, and the next two points inward
        let mi = m as isize;
        let (s, pick): (f64, Box<dyn Fn(isize) -> [(isize, isize); 4]>) = match edge {
            0 => ((x.x - rect.x0) / h, Box::new(|i| [(i, 0), (i, -1), (i, 1), (i, 2)])),
            1 => ((x.y - rect.y0) / h, Box::new(move |i| [(mi - 1, i), (mi, i), (mi - 2, i), (mi - 3, i)])),
            2 => ((x.x - rect.x0) / h, Box::new(move |i| [(i, mi - 1), (i, mi), (i, mi - 2), (i, mi - 3)])),
            _ => ((x.y - rect.y0) / h, Box::new(|i| [(0, i), (-1, i), (1, i), (2, i)])),
        };
        let (start, w) = stencil(m, s);
        for (j, &wj) in w.iter().enumerate() {
            let i = (start + j) as isize;
            let [on, ghost, in1, in2] = pick(i);
            e[(node, lay.at(on.0, on.1))] += wj;
            let d = wj / (2.0 * h);
            if i == 0 || i == mi - 1 {
                // corner points have two ghosts but one equation, so their
                // ghosts are not determined by the field; difference inward
                e[(p + node, lay.at(on.0, on.1))] += 3.0 * d;
                e[(p + node, lay.at(in1.0, in1.1))] -= 4.0 * d;
                e[(p + node, lay.at(in2.0, in2.1))] += d;
            } else {
                e[(p + node, lay.at(ghost.0, ghost.1))] += d;
                e[(p + node, lay.at(in1.0, in1.1))] -= d;
            }
        }
    }
    let data = &e * &n;
    let values = n.subrows(0, m * m).to_owned();
    Ok(LeafBasis {
        rect: *rect,
        kind: LeafKind::Fd,
        interior: InteriorRep::Grid { origin: Point::new(rect.x0, rect.y0), h, m, values },
        trace: DNTrace::new(boundary, data)?,
    })
}
