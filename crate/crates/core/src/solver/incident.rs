use serde::{Deserialize, Serialize};

use crate::boundary::{BoundarySampling, Shape};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::medium::WaveContext;
use crate::specfun::green_pair;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum IncidentKind {
    /// `exp(ik d·x)` with `d = (cos θ, sin θ)`.
    Plane { direction: f64 },
    /// Outgoing point source `Φ(x, s)`.
    Monopole { source: Point },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncidentWave {
    #[serde(flatten)]
    pub kind: IncidentKind,
    pub amplitude: C64,
}

impl IncidentWave {
    pub fn plane(direction: f64, amplitude: C64) -> Self {
        Self { kind: IncidentKind::Plane { direction }, amplitude }
    }

    pub fn monopole(source: Point, amplitude: C64) -> Self {
        Self { kind: IncidentKind::Monopole { source }, amplitude }
    }

    /// Value and gradient at `x`.
    pub fn eval(&self, ctx: &WaveContext, x: Point) -> Result<(C64, [C64; 2])> {
        let a = self.amplitude;
        match self.kind {
            IncidentKind::Plane { direction } => {
                let (s, c) = direction.sin_cos();
                let e = a * C64::new(0.0, ctx.k * (c * x.x + s * x.y)).exp();
                let ik = C64::new(0.0, ctx.k);
                Ok((e, [ik * c * e, ik * s * e]))
            }
            IncidentKind::Monopole { source } => {
                let g = green_pair(ctx, x, source).map_err(|_| Error::SourceOnBoundary)?;
                Ok((a * g.value, [a * g.gradient_x[0], a * g.gradient_x[1]]))
            }
        }
    }

    pub fn values(&self, ctx: &WaveContext, points: &[Point]) -> Result<Vec<C64>> {
        points.iter().map(|&x| self.eval(ctx, x).map(|v| v.0)).collect()
    }
}

/// Dirichlet and outward Neumann data on a boundary sampling.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DNPair {
    pub dirichlet: Vec<C64>,
    pub neumann: Vec<C64>,
}

impl DNPair {
    pub fn zeros(p: usize) -> Self {
        Self { dirichlet: vec![C64::new(0.0, 0.0); p], neumann: vec![C64::new(0.0, 0.0); p] }
    }

    /// Split a stacked `[u; ∂n u]` vector.
    pub fn from_stacked(v: &[C64]) -> Result<Self> {
        if v.len() % 2 != 0 {
            return Err(Error::ShapeMismatch(format!("stacked trace of odd length {}", v.len())));
        }
        let p = v.len() / 2;
        Ok(Self { dirichlet: v[..p].to_vec(), neumann: v[p..].to_vec() })
    }

    pub fn stacked(&self) -> Vec<C64> {
        self.dirichlet.iter().chain(&self.neumann).copied().collect()
    }

    pub fn len(&self) -> usize {
        self.dirichlet.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirichlet.is_empty()
    }

    /// Norm in the scaled inner product used throughout (`√w`, `√w/k`).
    pub fn weighted_norm(&self, boundary: &BoundarySampling, k: f64) -> f64 {
        let s = boundary.row_scales(k);
        self.stacked().iter().zip(&s).map(|(v, w)| (v * w).norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &DNPair) -> DNPair {
        let d = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        DNPair { dirichlet: d(&self.dirichlet, &other.dirichlet), neumann: d(&self.neumann, &other.neumann) }
    }
}

fn segment_distance(x: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let t = ((x - a).dot(d) / d.dot(d)).clamp(0.0, 1.0);
    x.dist(Point::new(a.x + t * d.x, a.y + t * d.y))
}

/// Distance from `x` to the curve itself.
pub(crate) fn curve_distance(boundary: &BoundarySampling, x: Point) -> f64 {
    match &boundary.shape {
        Shape::Circle { center, radius } => (x.dist(*center) - radius).abs(),
        Shape::Panels(panels) => panels.iter().map(|p| segment_distance(x, p.a, p.b)).fold(f64::INFINITY, f64::min),
    }
}

/// Whether `x` lies in the closed region bounded by the curve.
///
/// Panel chains are treated through the bounding box of their endpoints,
/// which is exact for the rectangular domains built here.
pub(crate) fn inside_closed(boundary: &BoundarySampling, x: Point) -> bool {
    match &boundary.shape {
        Shape::Circle { center, radius } => x.dist(*center) <= *radius,
        Shape::Panels(panels) => {
            let (mut lo, mut hi) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
            for p in panels {
                for e in [p.a, p.b] {
                    lo = Point::new(lo.x.min(e.x), lo.y.min(e.y));
                    hi = Point::new(hi.x.max(e.x), hi.y.max(e.y));
                }
            }
            x.x >= lo.x && x.x <= hi.x && x.y >= lo.y && x.y <= hi.y
        }
    }
}

/// Analytic Dirichlet and Neumann data of the incident wave.
pub fn incident_trace(wave: &IncidentWave, boundary: &BoundarySampling, ctx: &WaveContext) -> Result<DNPair> {
    if let IncidentKind::Monopole { source } = wave.kind {
        if curve_distance(boundary, source) <= 1e-12 * boundary.arclength {
            return Err(Error::SourceOnBoundary);
        }
    }
    let mut out = DNPair::zeros(boundary.len());
    for (i, (&x, n)) in boundary.nodes.iter().zip(&boundary.normals).enumerate() {
        let (v, g) = wave.eval(ctx, x)?;
        out.dirichlet[i] = v;
        out.neumann[i] = g[0] * n.x + g[1] * n.y;
    }
    Ok(out)
}
