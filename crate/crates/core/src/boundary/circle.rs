//! Layer operators on a circle: exact Fourier symbols and the
//! Martensen–Kussmaul quadrature for the logarithmic kernels.

use std::f64::consts::PI;

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::specfun::{bessel_j_seq, bessel_y_seq, derivative_seq, hankel1_01, EULER_GAMMA};
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

/// Eigenvalues of S, K, K′ and T on the Fourier modes `e^{inθ}`, `n = 0..=nmax`.
#[derive(Clone, Debug)]
pub struct CircleSymbols {
    pub s: Vec<C64>,
    pub k: Vec<C64>,
    pub kp: Vec<C64>,
    pub t: Vec<C64>,
}

pub fn circle_symbols(k: f64, radius: f64, nmax: usize) -> Result<CircleSymbols> {
    let x = k * radius;
    let j = bessel_j_seq(nmax + 1, x);
    let y = bessel_y_seq(nmax + 1, x);
    if y.iter().any(|v| !v.is_finite()) || j[nmax] == 0.0 {
        return Err(Error::UnsupportedGeometry(format!(
            "mode {nmax} is out of floating-point range at ka = {x}"
        )));
    }
    let jp = derivative_seq(&j);
    let yp = derivative_seq(&y);
    let mut out = CircleSymbols { s: vec![], k: vec![], kp: vec![], t: vec![] };
    for n in 0..=nmax {
        let h = C64::new(j[n], y[n]);
        let hp = C64::new(jp[n], yp[n]);
        out.s.push(I * (PI * radius / 2.0) * j[n] * h);
        out.k.push(I * (PI * x / 2.0) * j[n] * hp + 0.5);
        out.kp.push(I * (PI * x / 2.0) * jp[n] * h - 0.5);
        out.t.push(I * (PI * k * x / 2.0) * jp[n] * hp);
    }
    Ok(out)
}

/// Circulant matrix acting on `p` equispaced samples with even symbol `sigma(|n|)`.
fn circulant(p: usize, sigma: &[C64]) -> CMat {
    let half = p / 2;
    let c: Vec<C64> = (0..p)
        .map(|m| {
            let delta = 2.0 * PI * m as f64 / p as f64;
            let mut acc = sigma[0];
            for (n, &s) in sigma.iter().enumerate().take(half).skip(1) {
                acc += 2.0 * s * (n as f64 * delta).cos();
            }
            acc += sigma[half] * (half as f64 * delta).cos();
            acc / p as f64
        })
        .collect();
    Mat::from_fn(p, p, |i, j| c[(i + p - j) % p])
}

/// S, K, K′, T from exact symbols.
pub(super) fn spectral(k: f64, radius: f64, p: usize) -> Result<[CMat; 4]> {
    let sym = circle_symbols(k, radius, p / 2)?;
    Ok([circulant(p, &sym.s), circulant(p, &sym.k), circulant(p, &sym.kp), circulant(p, &sym.t)])
}

/// Weights of the periodic log-quadrature at offsets `m = 0..p`.
fn kress_weights(p: usize) -> Vec<f64> {
    let n = p / 2;
    let nf = n as f64;
    (0..p)
        .map(|m| {
            let t = PI * m as f64 / nf;
            let mut acc = 0.0;
            for l in 1..n {
                acc += (l as f64 * t).cos() / l as f64;
            }
            -2.0 * PI / nf * acc - PI / (nf * nf) * (nf * t).cos()
        })
        .collect()
}

/// S and K (equal to K′ on a circle) by singularity splitting.
pub(super) fn kress(k: f64, radius: f64, p: usize) -> (CMat, CMat) {
    let r_w = kress_weights(p);
    let smooth_w = 2.0 * PI / p as f64;
    let a = radius;
    let s_diag = a * (0.25 * I - (1.0 / (2.0 * PI)) * ((k / 2.0).ln() + EULER_GAMMA) - (1.0 / (2.0 * PI)) * a.ln());
    let k_diag = C64::new(-1.0 / (4.0 * PI), 0.0);
    let mut s_row = vec![C64::new(0.0, 0.0); p];
    let mut k_row = vec![C64::new(0.0, 0.0); p];
    for m in 0..p {
        if m == 0 {
            s_row[0] = r_w[0] * C64::new(-a / (4.0 * PI), 0.0) + smooth_w * s_diag;
            k_row[0] = smooth_w * k_diag;
            continue;
        }
        let half = PI * m as f64 / p as f64;
        let sin_half = half.sin();
        let r = 2.0 * a * sin_half.abs();
        let lg = (4.0 * sin_half * sin_half).ln();
        let (h0, h1) = hankel1_01(k * r);
        let phi = 0.25 * I * h0;
        let b_s = -a / (4.0 * PI) * h0.re;
        let m_s = a * phi;
        s_row[m] = r_w[m] * b_s + smooth_w * (m_s - b_s * lg);
        let m_k = 0.5 * r * (-0.25 * I * k * h1);
        let b_k = k * r / (8.0 * PI) * h1.re;
        k_row[m] = r_w[m] * b_k + smooth_w * (m_k - b_k * lg);
    }
    let s = Mat::from_fn(p, p, |i, j| s_row[(i + p - j) % p]);
    let kk = Mat::from_fn(p, p, |i, j| k_row[(i + p - j) % p]);
    (s, kk)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::hankel1;

    #[test]
    fn symbols_satisfy_calderon_relations() {
        let sym = circle_symbols(2.0, 1.0, 40).unwrap();
        for n in 0..=40 {
            let st = sym.s[n] * sym.t[n];
            let k2 = sym.k[n] * sym.k[n] - 0.25;
            assert!((st - k2).norm() < 1e-12 * (1.0 + st.norm()), "n={n}");
            assert!((sym.k[n] - sym.kp[n]).norm() < 1e-12 * (1.0 + sym.k[n].norm()), "n={n}");
        }
    }

    #[test]
    fn mode_zero_single_layer_symbol() {
        let sym = circle_symbols(2.0, 1.0, 1).unwrap();
        let h0 = hankel1(0, 2.0).unwrap();
        let j0 = crate::specfun::bessel_j(0, 2.0);
        assert!((sym.s[0] - I * PI / 2.0 * j0 * h0).norm() < 1e-15);
    }

    #[test]
    fn kress_weights_integrate_log() {
        // ∫ log(4 sin²(τ/2)) cos(mτ) dτ = -2π/m for m ≥ 1 and 0 for m = 0
        let p = 32;
        let w = kress_weights(p);
        for m in 0..p / 2 {
            let approx: f64 = (0..p).map(|j| w[j] * (m as f64 * 2.0 * PI * j as f64 / p as f64).cos()).sum();
            let exact = if m == 0 { 0.0 } else { -2.0 * PI / m as f64 };
            assert!((approx - exact).abs() < 1e-12, "m={m}");
        }
    }
}
