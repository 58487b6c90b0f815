//! Nonradial solutions at alpha = -2 depending on |x'| and |x''| separately,
//! x = (x', x'') in R^{N/2} x R^{N/2}, and their finite-difference residual.

use crate::error::{CknError, Result};
use crate::params::{normalization_constant, Params};
use crate::profiles::extremal_u;
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiradialProfile {
    #[serde(rename = "N")]
    pub n: usize,
    pub a: f64,
    /// C_{N,-2}.
    pub c: f64,
}

impl BiradialProfile {
    pub fn params(&self) -> Params {
        Params::new(self.n, -2.0).expect("N >= 8 admits alpha = -2")
    }

    /// C (1 + |x|^4 - 2a(t1^2 - t2^2) + a^2)^{-(N-6)/4}.
    pub fn eval(&self, t1: f64, t2: f64) -> f64 {
        let r2 = t1 * t1 + t2 * t2;
        let base = 1.0 + r2 * r2 - 2.0 * self.a * (t1 * t1 - t2 * t2) + self.a * self.a;
        self.c * base.powf(-(self.n as f64 - 6.0) / 4.0)
    }
}

pub fn nonradial_branch(n: usize, a: f64) -> Result<BiradialProfile> {
    if n % 2 == 1 {
        return Err(CknError::OddDimension(n));
    }
    if n < 8 {
        return Err(CknError::DimensionTooSmall(n, 8));
    }
    let p = Params::new(n, -2.0)?;
    Ok(BiradialProfile { n, a, c: normalization_constant(&p) })
}

/// Tensor grid t = L tan(pi xi / 2) at cell centres xi_i = (i + 1/2)/cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiradialGrid {
    pub cells: usize,
    pub scale: f64,
}

impl BiradialGrid {
    pub fn new(cells: usize) -> Self {
        Self { cells, scale: 1.0 }
    }

    fn axis(&self) -> Axis {
        let n = self.cells;
        let h = 1.0 / n as f64;
        let mut t = Vec::with_capacity(n);
        let mut d1 = Vec::with_capacity(n);
        let mut d2 = Vec::with_capacity(n);
        for i in 0..n {
            let arg = FRAC_PI_2 * (i as f64 + 0.5) * h;
            let (tn, sec2) = (arg.tan(), 1.0 / arg.cos().powi(2));
            t.push(self.scale * tn);
            d1.push(self.scale * FRAC_PI_2 * sec2);
            d2.push(self.scale * FRAC_PI_2 * FRAC_PI_2 * 2.0 * sec2 * tn);
        }
        Axis { t, d1, d2, h }
    }
}

struct Axis {
    t: Vec<f64>,
    /// dt/dxi and d^2t/dxi^2 at the nodes.
    d1: Vec<f64>,
    d2: Vec<f64>,
    h: f64,
}

impl Axis {
    /// (d^2/dt^2 + kappa/t d/dt) along a line of samples, even across t = 0.
    fn apply(&self, v: &[f64], kappa: f64, out: &mut [f64]) {
        let n = v.len();
        let h = self.h;
        for i in 0..n {
            let (vx, vxx) = if i + 1 < n {
                let left = if i == 0 { v[0] } else { v[i - 1] };
                ((v[i + 1] - left) / (2.0 * h), (v[i + 1] - 2.0 * v[i] + left) / (h * h))
            } else {
                (
                    (3.0 * v[i] - 4.0 * v[i - 1] + v[i - 2]) / (2.0 * h),
                    (2.0 * v[i] - 5.0 * v[i - 1] + 4.0 * v[i - 2] - v[i - 3]) / (h * h),
                )
            };
            let vt = vx / self.d1[i];
            let vtt = (vxx - self.d2[i] * vt) / (self.d1[i] * self.d1[i]);
            out[i] = vtt + kappa / self.t[i] * vt;
        }
    }
}

/// Bi-radial Laplacian of a row-major field f[i * n + j] = f(t_i, t_j).
fn laplacian(axis: &Axis, f: &[f64], kappa: f64) -> Vec<f64> {
    let n = axis.t.len();
    let mut out = vec![0.0; n * n];
    let mut line = vec![0.0; n];
    let mut res = vec![0.0; n];
    for i in 0..n {
        axis.apply(&f[i * n..(i + 1) * n], kappa, &mut res);
        out[i * n..(i + 1) * n].copy_from_slice(&res);
    }
    for j in 0..n {
        for i in 0..n {
            line[i] = f[i * n + j];
        }
        axis.apply(&line, kappa, &mut res);
        for i in 0..n {
            out[i * n + j] += res[i];
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiradialResidual {
    pub cells: usize,
    pub a: f64,
    pub max_abs: f64,
    pub max_rhs: f64,
    /// max |w residual| / max |w rhs| with w = |x|^4/(1+|x|^4). The weight
    /// removes the O(h^2)/|x|^2 error that the discrete Delta v picks up when
    /// divided by |x|^2 next to the origin.
    pub relative: f64,
    /// max |FD lhs - exact radial lhs| / max |exact radial lhs|; only at a = 0.
    pub radial_discrepancy: Option<f64>,
}

/// Residual of Delta(|x|^{-2} Delta v) - |x|^2 v^{p*-1} on the mapped grid.
pub fn biradial_residual(profile: &BiradialProfile, grid: &BiradialGrid) -> Result<BiradialResidual> {
    if grid.cells < 8 {
        return Err(CknError::GridTooCoarse { nodes: grid.cells, min: 8 });
    }
    let p = profile.params();
    let axis = grid.axis();
    let n = grid.cells;
    let kappa = profile.n as f64 / 2.0 - 1.0;
    let r2 = |i: usize, j: usize| axis.t[i] * axis.t[i] + axis.t[j] * axis.t[j];
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            v[i * n + j] = profile.eval(axis.t[i], axis.t[j]);
        }
    }
    let mut g = laplacian(&axis, &v, kappa);
    for i in 0..n {
        for j in 0..n {
            g[i * n + j] /= r2(i, j);
        }
    }
    let lhs = laplacian(&axis, &g, kappa);
    let radial = (profile.a == 0.0).then(|| extremal_u(&p, 1.0).expect("unit scale"));
    let (mut max_abs, mut max_rhs, mut max_dev, mut max_rad) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        for j in 0..n {
            let k = i * n + j;
            let rhs = r2(i, j) * v[k].powf(p.pstar - 1.0);
            let w = r2(i, j) * r2(i, j) / (1.0 + r2(i, j) * r2(i, j));
            max_abs = max_abs.max(w * (lhs[k] - rhs).abs());
            max_rhs = max_rhs.max(w * rhs.abs());
            if let Some(u) = &radial {
                let exact = u.weighted_bilaplacian_exact(r2(i, j).sqrt());
                max_dev = max_dev.max(w * (lhs[k] - exact).abs());
                max_rad = max_rad.max(w * exact.abs());
            }
        }
    }
    Ok(BiradialResidual {
        cells: n,
        a: profile.a,
        max_abs,
        max_rhs,
        relative: max_abs / max_rhs,
        radial_discrepancy: radial.map(|_| max_dev / max_rad),
    })
}

/// Residuals on successive grids and the observed orders between neighbours.
pub fn biradial_convergence(profile: &BiradialProfile, cells: &[usize]) -> Result<(Vec<BiradialResidual>, Vec<f64>)> {
    let res: Vec<BiradialResidual> =
        cells.iter().map(|&c| biradial_residual(profile, &BiradialGrid::new(c))).collect::<Result<_>>()?;
    let orders = res
        .windows(2)
        .map(|w| (w[0].relative / w[1].relative).ln() / (w[1].cells as f64 / w[0].cells as f64).ln())
        .collect();
    Ok((res, orders))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn validation() {
        assert!(matches!(nonradial_branch(9, 0.0), Err(CknError::OddDimension(9))));
        assert!(matches!(nonradial_branch(6, 0.0), Err(CknError::DimensionTooSmall(6, 8))));
    }

    #[test]
    fn reduces_to_radial_extremal() {
        let b = nonradial_branch(8, 0.0).unwrap();
        let u = extremal_u(&b.params(), 1.0).unwrap();
        for (t1, t2) in [(0.1, 0.2), (1.0, 0.5), (3.0, 4.0)] {
            assert_relative_eq!(b.eval(t1, t2), u.eval((t1 * t1 + t2 * t2).sqrt()), max_relative = 1e-13);
        }
    }

    #[test]
    fn second_order_convergence() {
        for a in [0.0, 0.3] {
            let b = nonradial_branch(8, a).unwrap();
            let (res, orders) = biradial_convergence(&b, &[50, 100, 200]).unwrap();
            assert!(orders.iter().all(|&o| o > 1.8), "a={a} orders={orders:?}");
            assert!(res[2].relative < 1e-3);
        }
    }
}
