//! Boundary samplings, Dirichlet and Neumann traces, layer operators and the
//! projectors that split boundary data into incoming and outgoing parts.

mod circle;
mod operators;
mod panels;
mod representation;

use std::sync::Arc;

use faer::Mat;

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};
use crate::linalg::CMat;
use crate::quadrature::GaussLegendre;

pub use circle::{circle_symbols, CircleSymbols};
pub use operators::{assemble_layer_ops, assemble_layer_ops_with, dtn_map, dtn_map_alt, projectors, CircleRule, LayerOperators};
pub use representation::{eval_green_representation, Representation};

/// Which side of a closed curve a field lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Interior,
    Exterior,
}

/// A straight segment carrying Gauss–Legendre nodes, oriented from `a` to `b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Panel {
    pub a: Point,
    pub b: Point,
    /// Index of the panel's first node in the sampling.
    pub start: usize,
    pub len: usize,
}

impl Panel {
    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn tangent(&self) -> Point {
        (self.b - self.a) * (1.0 / self.length())
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Circle { center: Point, radius: f64 },
    Panels(Vec<Panel>),
}

/// Ordered nodes, outward normals and arclength weights on a curve.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySampling {
    pub nodes: Vec<Point>,
    pub normals: Vec<Point>,
    pub weights: Vec<f64>,
    pub closed: bool,
    pub arclength: f64,
    pub shape: Shape,
}

/// Gauss–Legendre nodes on the segment, computed from the lexicographically
/// smaller endpoint so that both traversal directions give bit-equal points.
fn panel_nodes(a: Point, b: Point, gl: &GaussLegendre) -> (Vec<Point>, Vec<f64>) {
    let forward = (a.x, a.y) < (b.x, b.y);
    let (lo, hi) = if forward { (a, b) } else { (b, a) };
    let d = hi - lo;
    let half = 0.5 * d.norm();
    let mut pts: Vec<Point> = gl
        .nodes
        .iter()
        .map(|&t| {
            let s = 0.5 * (1.0 + t);
            Point::new(lo.x + d.x * s, lo.y + d.y * s)
        })
        .collect();
    let mut w: Vec<f64> = gl.weights.iter().map(|&x| x * half).collect();
    if !forward {
        pts.reverse();
        w.reverse();
    }
    (pts, w)
}

impl BoundarySampling {
    /// Closed or open chain of straight panels, `q` nodes each.
    pub fn from_segments(segments: &[(Point, Point)], q: usize, closed: bool) -> Result<Self> {
        if q < 4 {
            return Err(Error::InvalidCount { what: "nodes per panel", value: q });
        }
        let gl = GaussLegendre::new(q);
        let mut nodes = Vec::with_capacity(q * segments.len());
        let mut normals = Vec::with_capacity(q * segments.len());
        let mut weights = Vec::with_capacity(q * segments.len());
        let mut panels = Vec::with_capacity(segments.len());
        let mut arclength = 0.0;
        for &(a, b) in segments {
            let panel = Panel { a, b, start: nodes.len(), len: q };
            let tau = panel.tangent();
            let normal = Point::new(tau.y, -tau.x);
            let (pts, w) = panel_nodes(a, b, &gl);
            nodes.extend(pts);
            weights.extend(w);
            normals.extend(std::iter::repeat(normal).take(q));
            arclength += panel.length();
            panels.push(panel);
        }
        Ok(Self { nodes, normals, weights, closed, arclength, shape: Shape::Panels(panels) })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn panels(&self) -> Option<&[Panel]> {
        match &self.shape {
            Shape::Panels(p) => Some(p),
            Shape::Circle { .. } => None,
        }
    }

    /// Arclength coordinate of each node measured from the start of the curve.
    pub fn arclength_coords(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Circle { radius, .. } => {
                let p = self.len() as f64;
                (0..self.len()).map(|j| 2.0 * std::f64::consts::PI * radius * j as f64 / p).collect()
            }
            Shape::Panels(panels) => {
                let mut s = vec![0.0; self.len()];
                let mut offset = 0.0;
                for panel in panels {
                    for i in panel.range() {
                        s[i] = offset + panel.a.dist(self.nodes[i]);
                    }
                    offset += panel.length();
                }
                s
            }
        }
    }

    /// Row scaling that balances values and normal derivatives in a weighted L2 norm.
    pub fn row_scales(&self, k: f64) -> Vec<f64> {
        let sq: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        sq.iter().copied().chain(sq.iter().map(|s| s / k)).collect()
    }

    /// Smallest distance from `x` to a node, and the weight of that node.
    pub fn nearest_node(&self, x: Point) -> (f64, f64) {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(p, &w)| (p.dist(x), w))
            .fold((f64::INFINITY, 0.0), |acc, v| if v.0 < acc.0 { v } else { acc })
    }
}

/// Equispaced sampling of a circle, counterclockwise from angle zero.
pub fn discretize_circle(center: Point, radius: f64, p: usize) -> Result<BoundarySampling> {
    if p < 8 || p % 2 == 1 {
        return Err(Error::InvalidCount { what: "circle node count", value: p });
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    let h = 2.0 * std::f64::consts::PI / p as f64;
    let normals: Vec<Point> = (0..p).map(|j| Point::polar(1.0, h * j as f64)).collect();
    let nodes = normals.iter().map(|&n| center + n * radius).collect();
    Ok(BoundarySampling {
        nodes,
        normals,
        weights: vec![radius * h; p],
        closed: true,
        arclength: 2.0 * std::f64::consts::PI * radius,
        shape: Shape::Circle { center, radius },
    })
}

/// Edges of a rectangle as counterclockwise segments starting with the south edge.
pub fn box_edges(b: &Rect) -> [(Point, Point); 4] {
    let sw = Point::new(b.x0, b.y0);
    let se = Point::new(b.x1, b.y0);
    let ne = Point::new(b.x1, b.y1);
    let nw = Point::new(b.x0, b.y1);
    [(sw, se), (se, ne), (ne, nw), (nw, sw)]
}

/// `q` Gauss–Legendre nodes per edge, counterclockwise from the south edge.
pub fn discretize_box_boundary(b: &Rect, q: usize) -> Result<BoundarySampling> {
    BoundarySampling::from_segments(&box_edges(b), q, true)
}

/// Dirichlet and Neumann data of a family of solutions: values stacked over
/// outward normal derivatives, one column per solution.
#[derive(Clone, Debug)]
pub struct DNTrace {
    pub boundary: Arc<BoundarySampling>,
    pub data: CMat,
}

impl DNTrace {
    pub fn new(boundary: Arc<BoundarySampling>, data: CMat) -> Result<Self> {
        if data.nrows() != 2 * boundary.len() {
            return Err(Error::ShapeMismatch(format!(
                "trace has {} rows for {} boundary nodes",
                data.nrows(),
                boundary.len()
            )));
        }
        Ok(Self { boundary, data })
    }

    pub fn nodes(&self) -> usize {
        self.boundary.len()
    }

    pub fn rank(&self) -> usize {
        self.data.ncols()
    }

    /// Trace rows scaled by [`BoundarySampling::row_scales`].
    pub fn scaled(&self, k: f64) -> CMat {
        let s = self.boundary.row_scales(k);
        Mat::from_fn(self.data.nrows(), self.data.ncols(), |i, j| self.data[(i, j)] * s[i])
    }
}
