use std::sync::Arc;

use faer::Mat;

use super::{circle, panels, BoundarySampling, Shape, Side};
use crate::error::{Error, Result};
use crate::linalg::{condition_number, lu_solve, CMat};
use crate::medium::WaveContext;
use crate::C64;

/// Quadrature used for S and K on a circle. T is always spectral there.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CircleRule {
    /// Exact Fourier symbols for all four operators.
    #[default]
    Spectral,
    /// Periodic log-splitting quadrature for S and K; K′ = K.
    Kress,
}

/// Nyström matrices of the four layer operators on a closed curve.
#[derive(Clone, Debug)]
pub struct LayerOperators {
    pub boundary: Arc<BoundarySampling>,
    pub s: CMat,
    pub k: CMat,
    pub kp: CMat,
    pub t: CMat,
}

impl LayerOperators {
    pub fn len(&self) -> usize {
        self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundary.is_empty()
    }

    /// `Q = [[-K, S], [-T, K′]]`.
    pub fn q_block(&self) -> CMat {
        let p = self.len();
        Mat::from_fn(2 * p, 2 * p, |i, j| match (i < p, j < p) {
            (true, true) => -self.k[(i, j)],
            (true, false) => self.s[(i, j - p)],
            (false, true) => -self.t[(i - p, j)],
            (false, false) => self.kp[(i - p, j - p)],
        })
    }
}

pub fn assemble_layer_ops(ctx: &WaveContext, boundary: Arc<BoundarySampling>) -> Result<LayerOperators> {
    assemble_layer_ops_with(ctx, boundary, CircleRule::default())
}

pub fn assemble_layer_ops_with(
    ctx: &WaveContext,
    boundary: Arc<BoundarySampling>,
    rule: CircleRule,
) -> Result<LayerOperators> {
    if !boundary.closed {
        return Err(Error::UnsupportedGeometry("layer operators need a closed curve".into()));
    }
    let k = ctx.k;
    let [s, kk, kp, t] = match &boundary.shape {
        Shape::Circle { radius, .. } => {
            let p = boundary.len();
            let [s, kk, kp, t] = circle::spectral(k, *radius, p)?;
            match rule {
                CircleRule::Spectral => [s, kk, kp, t],
                CircleRule::Kress => {
                    let (s, kk) = circle::kress(k, *radius, p);
                    let kp = kk.clone();
                    [s, kk, kp, t]
                }
            }
        }
        Shape::Panels(pl) => panels::assemble(k, &boundary, pl),
    };
    Ok(LayerOperators { boundary, s, k: kk, kp, t })
}

/// `(P₋, P₊)` with `P₋ = ½I + Q` and `P₊ = ½I − Q`.
///
/// With the outgoing fundamental solution, `P₋` keeps the data of entire
/// solutions and annihilates the data of radiating ones.
pub fn projectors(ops: &LayerOperators) -> (CMat, CMat) {
    let q = ops.q_block();
    let n = q.nrows();
    let half = faer::Scale(C64::new(0.5, 0.0)) * Mat::<C64>::identity(n, n);
    let minus = &half + &q;
    let plus = &half - &q;
    (minus, plus)
}

fn shifted(a: &CMat, shift: f64) -> CMat {
    let mut out = a.clone();
    for i in 0..a.nrows() {
        out[(i, i)] += shift;
    }
    out
}

const RESONANCE_COND: f64 = 1e12;

/// Dirichlet-to-Neumann map `Λ = S⁻¹(K ± ½I)`, `+` for the interior.
pub fn dtn_map(ops: &LayerOperators, side: Side) -> Result<CMat> {
    let cond = condition_number(ops.s.as_ref())?;
    if cond > RESONANCE_COND {
        return Err(Error::NearResonance { cond });
    }
    let shift = match side {
        Side::Interior => 0.5,
        Side::Exterior => -0.5,
    };
    Ok(lu_solve(ops.s.as_ref(), shifted(&ops.k, shift).as_ref()))
}

/// The same map through `(K′ ∓ ½I)⁻¹T`.
pub fn dtn_map_alt(ops: &LayerOperators, side: Side) -> Result<CMat> {
    let shift = match side {
        Side::Interior => -0.5,
        Side::Exterior => 0.5,
    };
    let a = shifted(&ops.kp, shift);
    let cond = condition_number(a.as_ref())?;
    if cond > RESONANCE_COND {
        return Err(Error::NearResonance { cond });
    }
    Ok(lu_solve(a.as_ref(), ops.t.as_ref()))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::boundary::{circle_symbols, discretize_circle, eval_green_representation};
    use crate::geometry::{Point, Rect};
    use crate::linalg::{col, op_norm, to_vec, vec_norm};
    use crate::specfun::{bessel_j_seq, derivative_seq, green_radial, hankel1_seq};

    const I: C64 = C64::new(0.0, 1.0);

    fn ctx(k: f64) -> WaveContext {
        WaveContext::new(k, 1e-12).unwrap()
    }

    fn circle_ops(k: f64, p: usize, rule: CircleRule) -> LayerOperators {
        let b = Arc::new(discretize_circle(Point::default(), 1.0, p).unwrap());
        assemble_layer_ops_with(&ctx(k), b, rule).unwrap()
    }

    fn mode(p: usize, n: i32) -> Vec<C64> {
        (0..p).map(|j| (I * (n as f64 * 2.0 * PI * j as f64 / p as f64)).exp()).collect()
    }

    fn apply(a: &CMat, v: &[C64]) -> Vec<C64> {
        to_vec((a * col(v)).as_ref())
    }

    fn rel_err(a: &[C64], b: &[C64]) -> f64 {
        let d: Vec<C64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        vec_norm(&d) / vec_norm(b)
    }

    fn plane_wave_trace(b: &BoundarySampling, k: f64, dir: Point) -> Vec<C64> {
        let mut v: Vec<C64> = b.nodes.iter().map(|x| (I * k * x.dot(dir)).exp()).collect();
        let dn: Vec<C64> = b.nodes.iter().zip(&b.normals).map(|(x, n)| I * k * n.dot(dir) * (I * k * x.dot(dir)).exp()).collect();
        v.extend(dn);
        v
    }

    fn monopole_trace(b: &BoundarySampling, k: f64, src: Point) -> Vec<C64> {
        let mut v = Vec::new();
        let mut dn = Vec::new();
        for (x, n) in b.nodes.iter().zip(&b.normals) {
            let d = *x - src;
            let r = d.norm();
            let (g, gp) = green_radial(k, r);
            v.push(g);
            dn.push(gp * d.dot(*n) / r);
        }
        v.extend(dn);
        v
    }

    #[test]
    fn kress_single_layer_mode_zero() {
        let ops = circle_ops(2.0, 64, CircleRule::Kress);
        let sym = circle_symbols(2.0, 1.0, 1).unwrap();
        let v = mode(64, 0);
        let sv = apply(&ops.s, &v);
        let expect: Vec<C64> = v.iter().map(|x| x * sym.s[0]).collect();
        assert!(rel_err(&sv, &expect) < 1e-10);
    }

    #[test]
    fn kress_double_layer_mode_one() {
        let ops = circle_ops(2.0, 64, CircleRule::Kress);
        let sym = circle_symbols(2.0, 1.0, 1).unwrap();
        let v = mode(64, 1);
        let kv = apply(&ops.k, &v);
        let expect: Vec<C64> = v.iter().map(|x| x * sym.k[1]).collect();
        assert!(rel_err(&kv, &expect) < 1e-8);
    }

    #[test]
    fn kress_and_spectral_agree_on_low_modes() {
        let a = circle_ops(2.0, 128, CircleRule::Kress);
        let b = circle_ops(2.0, 128, CircleRule::Spectral);
        for n in [0, 1, 5, 20, -7] {
            let v = mode(128, n);
            assert!(rel_err(&apply(&a.s, &v), &apply(&b.s, &v)) < 1e-10, "n={n}");
            assert!(rel_err(&apply(&a.k, &v), &apply(&b.k, &v)) < 1e-10, "n={n}");
        }
    }

    #[test]
    fn matrix_sizes() {
        let ops = circle_ops(2.0, 16, CircleRule::Spectral);
        for m in [&ops.s, &ops.k, &ops.kp, &ops.t] {
            assert_eq!((m.nrows(), m.ncols()), (16, 16));
        }
    }

    #[test]
    fn open_curve_rejected() {
        let seg = [(Point::new(0.0, 0.0), Point::new(1.0, 0.0))];
        let b = Arc::new(BoundarySampling::from_segments(&seg, 6, false).unwrap());
        assert!(matches!(assemble_layer_ops(&ctx(1.0), b), Err(Error::UnsupportedGeometry(_))));
    }

    #[test]
    fn projectors_on_circle() {
        let ops = circle_ops(2.0, 128, CircleRule::Spectral);
        let (pm, pp) = projectors(&ops);
        let n = pm.nrows();
        let sum = &pm + &pp - Mat::<C64>::identity(n, n);
        assert_eq!(sum.norm_max(), 0.0);
        assert!(op_norm((&pm * &pm - &pm).as_ref()).unwrap() <= 1e-8);
        assert!(op_norm((&pp * &pp - &pp).as_ref()).unwrap() <= 1e-8);
        assert!(op_norm((&pp * &pm).as_ref()).unwrap() <= 1e-8);
        assert!(op_norm((&pm * &pp).as_ref()).unwrap() <= 1e-8);

        let w = plane_wave_trace(&ops.boundary, 2.0, Point::polar(1.0, 0.0));
        let kept = apply(&pm, &w);
        assert!(rel_err(&kept, &w) <= 1e-8);
        assert!(vec_norm(&apply(&pp, &w)) / vec_norm(&w) <= 1e-8);
    }

    #[test]
    fn calderon_identities_on_circle() {
        let ops = circle_ops(2.0, 128, CircleRule::Spectral);
        let id = faer::Scale(C64::new(0.25, 0.0)) * Mat::<C64>::identity(128, 128);
        let checks = [
            &ops.s * &ops.t - (&ops.k * &ops.k - &id),
            &ops.t * &ops.s - (&ops.kp * &ops.kp - &id),
            &ops.k * &ops.s - &ops.s * &ops.kp,
            &ops.t * &ops.k - &ops.kp * &ops.t,
        ];
        for c in &checks {
            assert!(op_norm(c.as_ref()).unwrap() < 1e-7);
        }
    }

    #[test]
    fn dtn_modes_on_circle() {
        let k = 2.0;
        let ops = circle_ops(k, 64, CircleRule::Spectral);
        let j = bessel_j_seq(6, k);
        let jp = derivative_seq(&j);
        let h = hankel1_seq(6, k).unwrap();
        let hp = derivative_seq(&h);
        let int = dtn_map(&ops, Side::Interior).unwrap();
        let ext = dtn_map(&ops, Side::Exterior).unwrap();
        for n in 0..5 {
            let v = mode(64, n as i32);
            let want: Vec<C64> = v.iter().map(|x| x * (k * jp[n] / j[n])).collect();
            assert!(rel_err(&apply(&int, &v), &want) < 1e-10, "n={n}");
        }
        let v = mode(64, 0);
        let want: Vec<C64> = v.iter().map(|x| x * (k * hp[0] / h[0])).collect();
        assert!(rel_err(&apply(&ext, &v), &want) < 1e-10);

        let alt = dtn_map_alt(&ops, Side::Interior).unwrap();
        let scale = op_norm(int.as_ref()).unwrap();
        assert!(op_norm((&int - &alt).as_ref()).unwrap() <= 1e-6 * scale);
    }

    #[test]
    fn dtn_near_dirichlet_eigenvalue_is_flagged() {
        // first zero of J0
        let ops = circle_ops(2.404825557695773, 64, CircleRule::Spectral);
        assert!(matches!(dtn_map(&ops, Side::Interior), Err(Error::NearResonance { .. })));
    }

    fn square_ops(k: f64, q: usize) -> LayerOperators {
        let mut segs = Vec::new();
        let b = Rect::new(-0.5, -0.5, 0.5, 0.5);
        for (a, c) in crate::boundary::box_edges(&b) {
            for i in 0..4 {
                segs.push((a + (c - a) * (i as f64 / 4.0), a + (c - a) * ((i + 1) as f64 / 4.0)));
            }
        }
        let s = Arc::new(BoundarySampling::from_segments(&segs, q, true).unwrap());
        assemble_layer_ops(&ctx(k), s).unwrap()
    }

    #[test]
    fn square_projector_keeps_entire_waves() {
        let ops = square_ops(3.0, 16);
        let (pm, pp) = projectors(&ops);
        for t in [0.0, 0.7, 2.9] {
            let w = plane_wave_trace(&ops.boundary, 3.0, Point::polar(1.0, t));
            assert!(rel_err(&apply(&pm, &w), &w) < 1e-6, "theta={t}");
            assert!(vec_norm(&apply(&pp, &w)) / vec_norm(&w) < 1e-6);
        }
    }

    #[test]
    fn square_projector_removes_radiating_waves() {
        let ops = square_ops(3.0, 16);
        let (pm, _) = projectors(&ops);
        for src in [Point::new(0.1, -0.2), Point::new(0.3, 0.25)] {
            let w = monopole_trace(&ops.boundary, 3.0, src);
            assert!(vec_norm(&apply(&pm, &w)) / vec_norm(&w) < 1e-8, "{src:?}");
        }
    }

    #[test]
    fn square_quadrature_converges() {
        let err = |q| {
            let ops = square_ops(3.0, q);
            let (pm, _) = projectors(&ops);
            let w = plane_wave_trace(&ops.boundary, 3.0, Point::polar(1.0, 0.4));
            rel_err(&apply(&pm, &w), &w)
        };
        assert!(err(16) < err(8) * 0.1);
    }

    #[test]
    fn green_representation_examples() {
        let k = 2.0;
        let b = discretize_circle(Point::default(), 1.0, 128).unwrap();
        let w = plane_wave_trace(&b, k, Point::polar(1.0, 0.3));
        let (phi, psi) = w.split_at(128);
        let r = eval_green_representation(&ctx(k), &b, phi, psi, &[Point::default()], Side::Interior).unwrap();
        assert!((r.values[0] - 1.0).norm() < 1e-10);
        assert!(!r.too_close[0]);

        let src = Point::new(0.2, -0.3);
        let m = monopole_trace(&b, k, src);
        let (phi, psi) = m.split_at(128);
        let targets = [Point::new(2.0, 0.5), Point::new(-1.5, -1.5), Point::new(0.0, 3.0)];
        let r = eval_green_representation(&ctx(k), &b, phi, psi, &targets, Side::Exterior).unwrap();
        for (x, v) in targets.iter().zip(&r.values) {
            let (g, _) = green_radial(k, x.dist(src));
            assert!((v - g).norm() < 1e-10);
        }

        let z = vec![C64::new(0.0, 0.0); 128];
        let r = eval_green_representation(&ctx(k), &b, &z, &z, &targets, Side::Interior).unwrap();
        assert!(r.values.iter().all(|v| v.norm() == 0.0));

        let r = eval_green_representation(&ctx(k), &b, &z, &z, &[Point::new(1.001, 0.0)], Side::Exterior).unwrap();
        assert!(r.too_close[0]);
    }

    #[test]
    fn plane_waves_reproduced_in_many_directions() {
        use rand::{Rng, SeedableRng};
        let k = 2.0;
        let b = discretize_circle(Point::default(), 1.0, 128).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let targets = [Point::new(0.3, 0.1), Point::new(-0.5, 0.4), Point::default()];
        for _ in 0..20 {
            let dir = Point::polar(1.0, rng.gen_range(0.0..2.0 * PI));
            let w = plane_wave_trace(&b, k, dir);
            let (phi, psi) = w.split_at(128);
            let r = eval_green_representation(&ctx(k), &b, phi, psi, &targets, Side::Interior).unwrap();
            for (x, v) in targets.iter().zip(&r.values) {
                assert!((v - (I * k * x.dot(dir)).exp()).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn double_layer_jump() {
        // one-sided limits of the double layer differ by the density
        let k = 2.0;
        let p = 1024;
        let b = discretize_circle(Point::default(), 1.0, p).unwrap();
        let phi: Vec<C64> = b.normals.iter().map(|n| C64::new(n.x, 0.0)).collect();
        let zero = vec![C64::new(0.0, 0.0); p];
        // K acts on cos θ by its mode-one symbol
        let on_curve = circle_symbols(k, 1.0, 1).unwrap().k[1];
        let side = |h: f64| {
            let inner = b.nodes[0] * (1.0 - h);
            let outer = b.nodes[0] * (1.0 + h);
            // interior representation with ψ = 0 is minus the double layer
            let eval = |x| -eval_green_representation(&ctx(k), &b, &phi, &zero, &[x], Side::Interior).unwrap().values[0];
            (eval(inner), eval(outer))
        };
        let hs = [0.08, 0.04, 0.02];
        let vals: Vec<(C64, C64)> = hs.iter().map(|&h| side(h)).collect();
        // quadratic extrapolation to h = 0 on a halving sequence
        let extrap = |f: [C64; 3]| (f[0] - 6.0 * f[1] + 8.0 * f[2]) / 3.0;
        let di = extrap([vals[0].0, vals[1].0, vals[2].0]);
        let de = extrap([vals[0].1, vals[1].1, vals[2].1]);
        assert!((de - di - phi[0]).norm() < 1e-4);
        assert!((di - (on_curve - 0.5)).norm() < 1e-4);
        assert!((de - (on_curve + 0.5)).norm() < 1e-4);
        let first = (vals[0].1 - vals[0].0 - phi[0]).norm();
        let last = (vals[2].1 - vals[2].0 - phi[0]).norm();
        assert!(last < first);
    }
}
