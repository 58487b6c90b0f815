//! Gauss-Legendre and Gauss-Jacobi rules.

use crate::special::ln_beta;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// n-point Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
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
        dp = if d.is_finite() { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Three-term recurrence coefficients of the monic Jacobi polynomials for the
/// weight (1-x)^a (1+x)^b on [-1, 1].
pub fn jacobi_recurrence(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    let ab = a + b;
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        alpha[k] = if k == 0 { (b - a) / (ab + 2.0) } else { (b * b - a * a) / (s * (s + 2.0)) };
        beta[k] = match k {
            0 => (ln_beta(a + 1.0, b + 1.0) + (ab + 1.0) * 2f64.ln()).exp(),
            1 => 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab)),
            _ => 4.0 * kf * (kf + a) * (kf + b) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0)),
        };
    }
    (alpha, beta)
}

/// Gauss rule for the weight y^b (1-y)^a on [0, 1] (Golub-Welsch).
pub fn gauss_jacobi_unit(n: usize, a: f64, b: f64) -> Rule {
    assert!(n > 0 && a > -1.0 && b > -1.0);
    let (alpha, beta) = jacobi_recurrence(n, a, b);
    let mut d = alpha;
    let mut e: Vec<f64> = (0..n).map(|i| if i + 1 < n { beta[i + 1].sqrt() } else { 0.0 }).collect();
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    tridiagonal_ql(&mut d, &mut e, &mut z);
    let mu0 = beta[0];
    let mut pairs: Vec<(f64, f64)> = d.iter().zip(&z).map(|(&x, &zi)| ((1.0 + x) / 2.0, mu0 * zi * zi)).collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let scale = 0.5f64.powf(a + b + 1.0);
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1 * scale).collect(),
    }
}

/// Implicit QL on a symmetric tridiagonal matrix (diagonal `d`, off-diagonal
/// `e[i]` between i and i+1). On return `d` holds the eigenvalues and `z` the
/// first components of the normalised eigenvectors, given `z = e_1` on entry.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 60, "tridiagonal QL did not converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::ln_beta;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_exactness() {
        for n in [1usize, 2, 5, 16, 33] {
            let r = gauss_legendre(n);
            for deg in 0..2 * n {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((r.integrate(|x| x.powi(deg as i32)) - exact).abs() < 1e-14, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn jacobi_moments() {
        // int_0^1 y^{b+j} (1-y)^a dy = B(b+j+1, a+1)
        for (a, b) in [(0.0, 0.0), (3.0, 1.0), (2.5, 0.5), (1.2, -0.6)] {
            let r = gauss_jacobi_unit(30, a, b);
            for j in 0..40 {
                let exact = ln_beta(b + j as f64 + 1.0, a + 1.0).exp();
                assert_relative_eq!(r.integrate(|y| y.powi(j)), exact, max_relative = 1e-12);
            }
            assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
            assert!(r.weights.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn large_rule_is_consistent() {
        // moments of a 400-point rule with a strongly asymmetric weight
        let r = gauss_jacobi_unit(400, 4.5, 2.5);
        for j in [0, 3, 40, 200, 790] {
            let exact = ln_beta(2.5 + j as f64 + 1.0, 5.5).exp();
            assert_relative_eq!(r.integrate(|y| y.powi(j)), exact, max_relative = 1e-11);
        }
    }
}
