//! Gauss–Legendre rules and polynomial tools on `[-1, 1]`.

use std::f64::consts::PI;

/// Gauss–Legendre nodes (ascending, exactly antisymmetric) and weights.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..(n + 1) / 2 {
            let mut x = -(PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = x;
            nodes[n - 1 - i] = -x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `P_0(x) … P_{n-1}(x)`.
pub fn legendre_values(n: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(n);
    if n == 0 {
        return p;
    }
    p.push(1.0);
    if n > 1 {
        p.push(x);
    }
    for k in 2..n {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * p[k - 1] - (kf - 1.0) * p[k - 2]) / kf;
        p.push(next);
    }
    p
}

/// Barycentric weights for interpolation through `nodes`.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    (0..nodes.len())
        .map(|j| {
            let prod: f64 = (0..nodes.len()).filter(|&m| m != j).map(|m| nodes[j] - nodes[m]).product();
            1.0 / prod
        })
        .collect()
}

/// Spectral differentiation matrix (row-major) on `nodes`.
pub fn differentiation_matrix(nodes: &[f64]) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let lam = barycentric_weights(nodes);
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = lam[j] / lam[i] / (nodes[i] - nodes[j]);
                d[i][j] = v;
                diag -= v;
            }
        }
        d[i][i] = diag;
    }
    d
}

/// Lagrange basis values at `x` for interpolation through `nodes`.
pub fn lagrange_row(nodes: &[f64], x: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|j| {
            let mut v = 1.0;
            for (m, &t) in nodes.iter().enumerate() {
                if m != j {
                    v *= (x - t) / (nodes[j] - t);
                }
            }
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        for n in 1..=24 {
            let gl = GaussLegendre::new(n);
            for deg in 0..2 * n {
                let approx: f64 = gl.nodes.iter().zip(&gl.weights).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-14, "n={n} deg={deg}");
            }
            assert!(gl.nodes.windows(2).all(|w| w[0] < w[1]));
            assert!(gl.nodes[0] > -1.0 && gl.nodes[n - 1] < 1.0);
        }
    }

    #[test]
    fn sixteen_point_reference() {
        let gl = GaussLegendre::new(16);
        assert!((gl.nodes[15] - 0.989_400_934_991_649_9).abs() < 1e-15);
        assert!((gl.weights[15] - 0.027_152_459_411_754_09).abs() < 1e-15);
    }

    #[test]
    fn differentiation_is_exact_on_polynomials() {
        let gl = GaussLegendre::new(10);
        let d = differentiation_matrix(&gl.nodes);
        for i in 0..10 {
            let approx: f64 = (0..10).map(|j| d[i][j] * gl.nodes[j].powi(7)).sum();
            assert!((approx - 7.0 * gl.nodes[i].powi(6)).abs() < 1e-12);
        }
    }

    #[test]
    fn lagrange_interpolates() {
        let gl = GaussLegendre::new(8);
        let row = lagrange_row(&gl.nodes, 0.37);
        let v: f64 = row.iter().zip(&gl.nodes).map(|(l, x)| l * x.powi(5)).sum();
        assert!((v - 0.37f64.powi(5)).abs() < 1e-14);
        let p = legendre_values(4, 0.3);
        assert!((p[3] - 0.5 * (5.0 * 0.027 - 0.9)).abs() < 1e-15);
    }
}
