//! Layer operators on chains of straight Gauss–Legendre panels.
//!
//! Targets near a panel use product integration: the kernel is split into a
//! Cauchy part, a logarithmic part and a smooth remainder, and the first two
//! are integrated exactly against the panel's interpolating polynomial using
//! Legendre moments. The hypersingular operator is assembled through the
//! Maue identity `Tφ = ∂τ S(∂s φ) + k² S(n·n φ)`.

use std::f64::consts::PI;

use faer::Mat;
use rayon::prelude::*;

use super::{BoundarySampling, Panel};
use crate::geometry::Point;
use crate::linalg::CMat;
use crate::quadrature::{differentiation_matrix, legendre_values, GaussLegendre};
use crate::specfun::{hankel1_01, EULER_GAMMA};
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);
const REFERENCE_RULES: [usize; 8] = [16, 24, 32, 48, 64, 96, 128, 192];

fn cz(p: Point) -> C64 {
    C64::new(p.x, p.y)
}

/// Per-panel-size tables: nodes, weights, and `w_j (2k+1)/2 P_k(t_j)`.
struct RuleTable {
    gl: GaussLegendre,
    proj: Vec<Vec<f64>>,
    diff: Vec<Vec<f64>>,
}

impl RuleTable {
    fn new(q: usize) -> Self {
        let gl = GaussLegendre::new(q);
        let proj = (0..q)
            .map(|j| {
                let p = legendre_values(q, gl.nodes[j]);
                (0..q).map(|k| gl.weights[j] * (2 * k + 1) as f64 / 2.0 * p[k]).collect()
            })
            .collect();
        let diff = differentiation_matrix(&gl.nodes);
        Self { gl, proj, diff }
    }
}

/// Bernstein-ellipse parameter of `z0` relative to `[-1, 1]`.
fn ellipse_parameter(z0: C64) -> f64 {
    let w = (z0 - 1.0).sqrt() * (z0 + 1.0).sqrt();
    (z0 + w).norm().max((z0 - w).norm())
}

/// `∫ P_k(t)/(t - z0) dt` for `k = 0..=n` and the real parts of
/// `∫ P_k(t) log(t - z0) dt` for `k = 0..n`.
fn moments(z0: C64, n: usize, rho: f64, refs: &[GaussLegendre]) -> (Vec<C64>, Vec<f64>) {
    if rho.powi(2 * (n as i32 + 1)) <= 1e4 {
        let mut c = Vec::with_capacity(n + 1);
        let c0 = if z0.im == 0.0 {
            C64::new(((1.0 - z0.re) / (-1.0 - z0.re)).abs().ln(), 0.0)
        } else {
            (1.0 - z0).ln() - (-1.0 - z0).ln()
        };
        c.push(c0);
        for k in 0..n {
            let kf = k as f64;
            let extra = if k == 0 { 2.0 } else { 0.0 };
            let prev = if k == 0 { C64::new(0.0, 0.0) } else { c[k - 1] };
            let next = ((2.0 * kf + 1.0) * (z0 * c[k] + extra) - kf * prev) / (kf + 1.0);
            c.push(next);
        }
        let wp = 1.0 - z0;
        let wm = -1.0 - z0;
        let re_wlogw = |w: C64| if w.norm() == 0.0 { 0.0 } else { (w * w.ln()).re };
        let mut l = Vec::with_capacity(n);
        l.push(re_wlogw(wp) - re_wlogw(wm) - 2.0);
        for k in 1..n {
            l.push(-(c[k + 1] - c[k - 1]).re / (2 * k + 1) as f64);
        }
        (c, l)
    } else {
        let need = ((n as f64 + 40.0 / rho.ln()) / 2.0).ceil() as usize + 2;
        let gl = refs.iter().find(|g| g.len() >= need).unwrap_or(&refs[refs.len() - 1]);
        let mut c = vec![C64::new(0.0, 0.0); n + 1];
        let mut l = vec![0.0; n];
        for (&t, &w) in gl.nodes.iter().zip(&gl.weights) {
            let p = legendre_values(n + 1, t);
            let inv = w / (t - z0);
            let lg = w * (t - z0).norm().ln();
            for k in 0..=n {
                c[k] += inv * p[k];
            }
            for k in 0..n {
                l[k] += lg * p[k];
            }
        }
        (c, l)
    }
}

/// Rows of S, K, K′ and the tangential-derivative operator D for one target.
struct RowBlock {
    s: Vec<C64>,
    k: Vec<C64>,
    kp: Vec<C64>,
    d: Vec<C64>,
}

struct Assembler<'a> {
    k: f64,
    sampling: &'a BoundarySampling,
    panels: &'a [Panel],
    tables: Vec<Option<RuleTable>>,
    refs: Vec<GaussLegendre>,
}

impl<'a> Assembler<'a> {
    fn table(&self, q: usize) -> &RuleTable {
        self.tables[q].as_ref().expect("rule table")
    }

    fn row(&self, i: usize) -> RowBlock {
        let p = self.sampling.len();
        let zero = C64::new(0.0, 0.0);
        let mut out = RowBlock { s: vec![zero; p], k: vec![zero; p], kp: vec![zero; p], d: vec![zero; p] };
        let x = self.sampling.nodes[i];
        let nx = self.sampling.normals[i];
        let tx = Point::new(-nx.y, nx.x);
        let k = self.k;
        let s_limit = 0.25 * I - ((k / 2.0).ln() + EULER_GAMMA) / (2.0 * PI);
        for panel in self.panels {
            let q = panel.len;
            let table = self.table(q);
            let zc = cz((panel.a + panel.b) * 0.5);
            let h = 0.5 * (cz(panel.b) - cz(panel.a));
            let habs = h.norm();
            let ln_h = habs.ln();
            let mut z0 = (cz(x) - zc) / h;
            if z0.im.abs() < 1e-13 * z0.norm().max(1.0) {
                z0.im = 0.0;
            }
            let rho = ellipse_parameter(z0);
            let near = rho < 10f64.powf(8.0 / q as f64).max(2.0);
            let nxi = {
                let t = panel.tangent();
                Point::new(t.y, -t.x)
            };
            if !near {
                for j in panel.range() {
                    let xi = self.sampling.nodes[j];
                    let w = self.sampling.weights[j];
                    let d = x - xi;
                    let r = d.norm();
                    let (h0, h1) = hankel1_01(k * r);
                    let g = 0.25 * I * h0;
                    let gp = -0.25 * I * k * h1;
                    out.s[j] = g * w;
                    out.k[j] = -gp * (d.dot(nxi) / r) * w;
                    out.kp[j] = gp * (d.dot(nx) / r) * w;
                    out.d[j] = gp * (d.dot(tx) / r) * w;
                }
                continue;
            }
            let (cm, lm) = moments(z0, q, rho, &self.refs);
            let alpha_k = -cz(nxi) * habs / (2.0 * PI * h);
            let alpha_kp = cz(nx) * habs / (2.0 * PI * h);
            let alpha_d = cz(tx) * habs / (2.0 * PI * h);
            for (jl, j) in panel.range().enumerate() {
                let proj = &table.proj[jl];
                let mut chat = C64::new(0.0, 0.0);
                let mut wl = 0.0;
                for kk in 0..q {
                    chat += proj[kk] * cm[kk];
                    wl += proj[kk] * lm[kk];
                }
                let wj = table.gl.weights[jl];
                let log_w = habs * (wl + wj * ln_h);
                let smooth_w = habs * wj;
                let xi = self.sampling.nodes[j];
                let d = x - xi;
                let r = d.norm();
                if r == 0.0 {
                    out.s[j] = log_w * (-1.0 / (2.0 * PI)) + smooth_w * s_limit;
                    out.k[j] = C64::new((alpha_k * chat).re, 0.0);
                    out.kp[j] = C64::new((alpha_kp * chat).re, 0.0);
                    out.d[j] = C64::new((alpha_d * chat).re, 0.0);
                    continue;
                }
                let ln_r = r.ln();
                let (h0, h1) = hankel1_01(k * r);
                let g = 0.25 * I * h0;
                let gp = -0.25 * I * k * h1;
                let j0 = h0.re;
                let j1 = h1.re;

                let l_s = -j0 / (2.0 * PI);
                out.s[j] = log_w * l_s + smooth_w * (g - l_s * ln_r);

                let split = |dn: f64, full: C64, cauchy_sign: f64, alpha: C64| -> C64 {
                    let cauchy = cauchy_sign * dn / (2.0 * PI * r);
                    let l = -cauchy_sign * k * j1 * dn / (2.0 * PI);
                    let rem = full - cauchy - l * ln_r;
                    C64::new((alpha * chat).re, 0.0) + log_w * l + smooth_w * rem
                };
                let dn_xi = d.dot(nxi) / r;
                let dn_x = d.dot(nx) / r;
                let dt_x = d.dot(tx) / r;
                out.k[j] = split(dn_xi, -gp * dn_xi, 1.0, alpha_k);
                out.kp[j] = split(dn_x, gp * dn_x, -1.0, alpha_kp);
                out.d[j] = split(dt_x, gp * dt_x, -1.0, alpha_d);
            }
        }
        out
    }
}

/// S, K, K′, T on a closed chain of panels.
pub(super) fn assemble(k: f64, sampling: &BoundarySampling, panels: &[Panel]) -> [CMat; 4] {
    let p = sampling.len();
    let qmax = panels.iter().map(|pl| pl.len).max().unwrap_or(0);
    let mut tables: Vec<Option<RuleTable>> = (0..=qmax).map(|_| None).collect();
    for pl in panels {
        if tables[pl.len].is_none() {
            tables[pl.len] = Some(RuleTable::new(pl.len));
        }
    }
    let refs = REFERENCE_RULES.iter().map(|&n| GaussLegendre::new(n)).collect();
    let asm = Assembler { k, sampling, panels, tables, refs };
    let rows: Vec<RowBlock> = (0..p).into_par_iter().map(|i| asm.row(i)).collect();
    let s = Mat::from_fn(p, p, |i, j| rows[i].s[j]);
    let kk = Mat::from_fn(p, p, |i, j| rows[i].k[j]);
    let kp = Mat::from_fn(p, p, |i, j| rows[i].kp[j]);
    let d = Mat::from_fn(p, p, |i, j| rows[i].d[j]);

    // arclength derivative on each panel, in the panel's a → b direction
    let mut diff = Mat::<C64>::zeros(p, p);
    for pl in panels {
        let table = asm.table(pl.len);
        let scale = 2.0 / pl.length();
        for (il, i) in pl.range().enumerate() {
            for (jl, j) in pl.range().enumerate() {
                diff[(i, j)] = C64::new(scale * table.diff[il][jl], 0.0);
            }
        }
    }
    let normals = &sampling.normals;
    let snn = Mat::from_fn(p, p, |i, j| s[(i, j)] * normals[i].dot(normals[j]));
    let t = &d * &diff + faer::Scale(C64::new(k * k, 0.0)) * snn;
    [s, kk, kp, t]
}
