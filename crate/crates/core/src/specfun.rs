//! Bessel and Hankel functions of integer order and the outgoing Helmholtz
//! Green's function `Φ(x, ξ) = (i/4) H₀¹(k|x − ξ|)`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::medium::WaveContext;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Below this argument `J_n` is summed from its power series.
const SERIES_MAX: f64 = 1.0;
/// At and above this argument `H₀` and `H₁` use the Hankel expansion.
const ASYMPTOTIC_MIN: f64 = 25.0;

const I: C64 = C64::new(0.0, 1.0);

/// Starting order for Miller's backward recurrence.
fn miller_start(nmax: usize, x: f64) -> usize {
    let m = (nmax as f64).max(x);
    let n = m + 30.0 + (40.0 * m.max(1.0)).sqrt();
    (n as usize) | 1
}

/// `J_0(x) … J_top(x)` by normalized backward recurrence from order `top`, `x > 0`.
fn miller_from(top: usize, x: f64) -> Vec<f64> {
    let mut j = vec![0.0; top + 2];
    j[top] = 1e-300;
    for k in (1..=top).rev() {
        j[k - 1] = 2.0 * k as f64 / x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in j[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let mut norm = j[0];
    for k in (2..=top).step_by(2) {
        norm += 2.0 * j[k];
    }
    j.truncate(top + 1);
    for v in j.iter_mut() {
        *v /= norm;
    }
    j
}

/// `J_0(x) … J_nmax(x)` by Miller's algorithm, `x > 0`.
fn miller(nmax: usize, x: f64) -> Vec<f64> {
    let mut j = miller_from(miller_start(nmax, x), x);
    j.truncate(nmax + 1);
    j
}

/// Power series for `J_n(x)`; accurate for small `x`.
fn series_j(n: usize, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut lead = 1.0;
    for i in 1..=n {
        lead *= h / i as f64;
    }
    let z = -h * h;
    let mut term = lead;
    let mut sum = lead;
    for k in 1..200 {
        term *= z / (k as f64 * (n + k) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `J_0(x) … J_nmax(x)` for `x ≥ 0`.
pub fn bessel_j_seq(nmax: usize, x: f64) -> Vec<f64> {
    let ax = x.abs();
    let mut out = if ax == 0.0 {
        let mut v = vec![0.0; nmax + 1];
        v[0] = 1.0;
        v
    } else if ax <= SERIES_MAX {
        (0..=nmax).map(|n| series_j(n, ax)).collect()
    } else {
        miller(nmax, ax)
    };
    if x < 0.0 {
        for (n, v) in out.iter_mut().enumerate() {
            if n % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// Bessel function of the first kind `J_n(x)`.
pub fn bessel_j(n: usize, x: f64) -> f64 {
    if x.abs() <= SERIES_MAX {
        let v = if x == 0.0 {
            if n == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            series_j(n, x.abs())
        };
        return if x < 0.0 && n % 2 == 1 { -v } else { v };
    }
    bessel_j_seq(n, x)[n]
}

/// Coefficients of the Hankel expansion for order `nu` in `1/x`.
fn hankel_asymptotic(nu: f64, x: f64) -> C64 {
    let mu = 4.0 * nu * nu;
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= I * ((mu - odd * odd) / (8.0 * kf * x));
        let t = term.norm();
        if t > last {
            break;
        }
        sum += term;
        last = t;
        if t < 1e-17 {
            break;
        }
    }
    let phase = x - nu * FRAC_PI_2 - FRAC_PI_4;
    sum * C64::from_polar((2.0 / (PI * x)).sqrt(), phase)
}

/// `(J_0, J_1, Y_0, Y_1)` at `x > 0` from the Neumann series over one Miller sequence.
fn neumann_01(x: f64) -> [f64; 4] {
    let top = miller_start(1, x);
    let j = miller_from(top, x);
    let lg = (0.5 * x).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut k = 1;
    while 2 * k + 1 <= top {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let kf = k as f64;
        s0 += sign * j[2 * k] / kf;
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / kf;
        k += 1;
    }
    let y0 = 2.0 / PI * (lg * j[0] - 2.0 * s0);
    let y1 = 2.0 / PI * (lg * j[1] - j[0] / x + s1);
    [j[0], j[1], y0, y1]
}

/// `(H₀¹(x), H₁¹(x))` for `x > 0`.
pub fn hankel1_01(x: f64) -> (C64, C64) {
    if x >= ASYMPTOTIC_MIN {
        return (hankel_asymptotic(0.0, x), hankel_asymptotic(1.0, x));
    }
    let [mut j0, mut j1, y0, y1] = neumann_01(x);
    if x <= SERIES_MAX {
        j0 = series_j(0, x);
        j1 = series_j(1, x);
    }
    (C64::new(j0, y0), C64::new(j1, y1))
}

/// `(Y_0(x), Y_1(x))` for `x > 0`.
pub fn bessel_y01(x: f64) -> (f64, f64) {
    if x >= ASYMPTOTIC_MIN {
        (hankel_asymptotic(0.0, x).im, hankel_asymptotic(1.0, x).im)
    } else {
        let [_, _, y0, y1] = neumann_01(x);
        (y0, y1)
    }
}

/// `Y_0(x) … Y_nmax(x)` by upward recurrence, `x > 0`.
pub fn bessel_y_seq(nmax: usize, x: f64) -> Vec<f64> {
    let (y0, y1) = bessel_y01(x);
    let mut y = Vec::with_capacity(nmax + 1);
    y.push(y0);
    if nmax >= 1 {
        y.push(y1);
    }
    for n in 1..nmax {
        let next = 2.0 * n as f64 / x * y[n] - y[n - 1];
        y.push(next);
    }
    y
}

/// `H_0¹(x) … H_nmax¹(x)` for `x > 0`.
pub fn hankel1_seq(nmax: usize, x: f64) -> Result<Vec<C64>> {
    if !(x > 0.0) {
        return Err(Error::DomainError(format!("Hankel function needs x > 0, got {x}")));
    }
    let j = bessel_j_seq(nmax, x);
    let y = bessel_y_seq(nmax, x);
    Ok(j.into_iter().zip(y).map(|(a, b)| C64::new(a, b)).collect())
}

/// Hankel function of the first kind `H_n¹(x) = J_n(x) + i Y_n(x)`.
pub fn hankel1(n: usize, x: f64) -> Result<C64> {
    if !(x > 0.0) {
        return Err(Error::DomainError(format!("Hankel function needs x > 0, got {x}")));
    }
    if n <= 1 {
        let (h0, h1) = hankel1_01(x);
        return Ok(if n == 0 { h0 } else { h1 });
    }
    Ok(hankel1_seq(n, x)?[n])
}

/// Derivatives `f_n'` from a sequence `f_0 … f_{nmax+1}` of cylinder functions.
pub fn derivative_seq<T>(f: &[T]) -> Vec<T>
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Neg<Output = T>,
{
    let mut d = Vec::with_capacity(f.len() - 1);
    d.push(-f[1]);
    for n in 1..f.len() - 1 {
        d.push((f[n - 1] - f[n + 1]) * 0.5);
    }
    d
}

/// Green's function value with its gradient in the target point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelPair {
    pub value: C64,
    pub gradient_x: [C64; 2],
}

/// The kernels of S, K, K′ and T at one pair of points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSet {
    pub g: C64,
    pub dg_dn_xi: C64,
    pub dg_dn_x: C64,
    pub d2g: C64,
}

fn separation(x: Point, xi: Point) -> Result<(Point, f64)> {
    let d = x - xi;
    let r = d.norm();
    if r == 0.0 {
        return Err(Error::DomainError("Green's function evaluated at coincident points".into()));
    }
    Ok((d, r))
}

/// `Φ(x, ξ) = (i/4) H₀¹(k|x − ξ|)`.
pub fn green(ctx: &WaveContext, x: Point, xi: Point) -> Result<C64> {
    let (_, r) = separation(x, xi)?;
    Ok(0.25 * I * hankel1_01(ctx.k * r).0)
}

/// `Φ` and `∇ₓΦ`.
pub fn green_pair(ctx: &WaveContext, x: Point, xi: Point) -> Result<KernelPair> {
    let (d, r) = separation(x, xi)?;
    let (h0, h1) = hankel1_01(ctx.k * r);
    let gp = -0.25 * I * ctx.k * h1;
    Ok(KernelPair { value: 0.25 * I * h0, gradient_x: [gp * (d.x / r), gp * (d.y / r)] })
}

/// Radial derivative `Φ'(r) = −(ik/4) H₁¹(kr)` together with `Φ(r)`.
pub fn green_radial(k: f64, r: f64) -> (C64, C64) {
    let (h0, h1) = hankel1_01(k * r);
    (0.25 * I * h0, -0.25 * I * k * h1)
}

/// Value, both normal derivatives and the mixed second normal derivative.
pub fn green_kernels(ctx: &WaveContext, x: Point, nx: Point, xi: Point, nxi: Point) -> Result<KernelSet> {
    let (d, r) = separation(x, xi)?;
    let k = ctx.k;
    let kr = k * r;
    let (h0, h1) = hankel1_01(kr);
    let g = 0.25 * I * h0;
    let gp = -0.25 * I * k * h1;
    let h1p = h0 - h1 / kr;
    let gpp = -0.25 * I * k * k * h1p;
    let dnx = d.dot(nx) / r;
    let dnxi = d.dot(nxi) / r;
    Ok(KernelSet {
        g,
        dg_dn_xi: -gp * dnxi,
        dg_dn_x: gp * dnx,
        d2g: -(gpp - gp / r) * dnx * dnxi - gp * nx.dot(nxi) / r,
    })
}
