//! Radial functions, mapped quadrature grids and the weighted functionals.

use crate::error::{CknError, Result};
use crate::jet::Jet;
use crate::params::{best_constant_radial, Params};
use crate::quadrature::gauss_legendre;
use serde::{Deserialize, Serialize};

/// A radial function with derivatives through order 4.
pub trait RadialFunction: Send + Sync {
    /// Taylor jet in r at r.
    fn jet(&self, r: f64) -> Jet;

    fn value(&self, r: f64) -> f64 {
        self.jet(r).value()
    }

    fn deriv(&self, r: f64, order: usize) -> f64 {
        self.jet(r).d(order)
    }

    /// u'' + (N-1)/r u' - lam/r^2 u.
    fn laplacian(&self, p: &Params, lam: f64, r: f64) -> f64 {
        self.jet(r).radial_laplacian(r, p.nf(), lam).value()
    }

    /// L(r^alpha L u) with L the mode operator carrying eigenvalue `lam`.
    fn weighted_bilaplacian(&self, p: &Params, lam: f64, r: f64) -> f64 {
        let g = self.jet(r).radial_laplacian(r, p.nf(), lam) * Jet::var(r).powf(p.alpha);
        g.radial_laplacian(r, p.nf(), lam).value()
    }
}

impl<T: RadialFunction + ?Sized> RadialFunction for &T {
    fn jet(&self, r: f64) -> Jet {
        (**self).jet(r)
    }
    fn value(&self, r: f64) -> f64 {
        (**self).value(r)
    }
    fn laplacian(&self, p: &Params, lam: f64, r: f64) -> f64 {
        (**self).laplacian(p, lam, r)
    }
    fn weighted_bilaplacian(&self, p: &Params, lam: f64, r: f64) -> f64 {
        (**self).weighted_bilaplacian(p, lam, r)
    }
}

/// A radial function given as a closure over jets, e.g. `JetFn(|r| (-(r * r)).exp())`.
pub struct JetFn<F>(pub F);

impl<F: Fn(Jet) -> Jet + Send + Sync> RadialFunction for JetFn<F> {
    fn jet(&self, r: f64) -> Jet {
        (self.0)(Jet::var(r))
    }
}

/// Linear combination of radial functions.
pub struct Combination<'a> {
    pub terms: Vec<(f64, &'a dyn RadialFunction)>,
}

impl<'a> Combination<'a> {
    pub fn new(terms: Vec<(f64, &'a dyn RadialFunction)>) -> Self {
        Self { terms }
    }
}

impl RadialFunction for Combination<'_> {
    fn jet(&self, r: f64) -> Jet {
        self.terms.iter().fold(Jet::constant(0.0), |acc, (c, f)| acc + f.jet(r).scale(*c))
    }
    fn value(&self, r: f64) -> f64 {
        self.terms.iter().map(|(c, f)| c * f.value(r)).sum()
    }
    fn laplacian(&self, p: &Params, lam: f64, r: f64) -> f64 {
        self.terms.iter().map(|(c, f)| c * f.laplacian(p, lam, r)).sum()
    }
    fn weighted_bilaplacian(&self, p: &Params, lam: f64, r: f64) -> f64 {
        self.terms.iter().map(|(c, f)| c * f.weighted_bilaplacian(p, lam, r)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    /// Composite Gauss-Legendre panels in t = ln r.
    LogUniform,
    /// r = L (1 + xi)/(1 - xi), single Gauss-Legendre rule in xi.
    AlgebraicMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub n: usize,
    pub map: MapKind,
}

pub const PANEL_NODES: usize = 16;
const TAIL_DECADES: f64 = 45.0;

impl GridSpec {
    /// Range chosen so that the extremal's integrands have decayed by e^{-45}
    /// at both ends; panels shrink with 2 - alpha, which sets the width of the
    /// transition region in ln r.
    pub fn for_params(p: &Params) -> Self {
        let k0 = (p.nf() - p.alpha).min(p.nf() + p.alpha);
        let kinf = p.a();
        let t0 = -TAIL_DECADES / k0;
        let t1 = TAIL_DECADES / kinf;
        let width = 1.0 / p.b().max(1.0);
        let panels = ((t1 - t0) / width).ceil() as usize;
        let n = (panels * PANEL_NODES).max(512);
        Self { r_min: t0.exp(), r_max: t1.exp(), n, map: MapKind::LogUniform }
    }

    pub fn with_nodes(mut self, n: usize) -> Self {
        self.n = n;
        self
    }
}

/// Quadrature nodes and weights for integrals in dr.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialGrid {
    pub spec: GridSpec,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RadialGrid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        let GridSpec { r_min, r_max, n, map } = spec;
        if n < PANEL_NODES {
            return Err(CknError::GridTooCoarse { nodes: n, min: PANEL_NODES });
        }
        if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
            return Err(CknError::InvalidGrid(format!("need 0 < r_min < r_max < inf, got [{r_min}, {r_max}]")));
        }
        let (mut nodes, mut weights) = (Vec::with_capacity(n), Vec::with_capacity(n));
        match map {
            MapKind::LogUniform => {
                let panels = n.div_ceil(PANEL_NODES);
                let rule = gauss_legendre(PANEL_NODES);
                let (t0, t1) = (r_min.ln(), r_max.ln());
                let h = (t1 - t0) / panels as f64;
                for k in 0..panels {
                    let mid = t0 + (k as f64 + 0.5) * h;
                    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                        let r = (mid + 0.5 * h * x).exp();
                        nodes.push(r);
                        weights.push(0.5 * h * w * r);
                    }
                }
            }
            MapKind::AlgebraicMap => {
                let l = (r_min * r_max).sqrt();
                let rule = gauss_legendre(n);
                for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                    nodes.push(l * (1.0 + x) / (1.0 - x));
                    weights.push(w * 2.0 * l / ((1.0 - x) * (1.0 - x)));
                }
            }
        }
        Ok(Self { spec, nodes, weights })
    }

    pub fn for_params(p: &Params) -> Self {
        Self::new(GridSpec::for_params(p)).expect("default grid spec is valid")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral of f over (0, inf) with power-law tail corrections at both ends.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> Result<Integral> {
        let vals: Vec<f64> = self.nodes.iter().map(|&r| f(r)).collect();
        self.integrate_values(&vals)
    }

    pub fn integrate_values(&self, vals: &[f64]) -> Result<Integral> {
        let body: f64 = vals.iter().zip(&self.weights).map(|(v, w)| v * w).sum();
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(CknError::NonIntegrable("integrand not finite on the grid".into()));
        }
        if self.spec.map == MapKind::AlgebraicMap {
            return Ok(Integral { value: body, est_error: 0.0 });
        }
        let n = vals.len();
        // g(t) = f(r) r, the integrand in t = ln r
        let g = |i: usize| vals[i] * self.nodes[i];
        let t = |i: usize| self.nodes[i].ln();
        let mut tail = 0.0;
        for (a, b, sign) in [(0, 1, -1.0), (n - 1, n - 2, 1.0)] {
            let (ga, gb) = (g(a), g(b));
            if ga.abs() <= 1e-15 * body.abs() || ga == 0.0 {
                continue;
            }
            let slope = sign * ((ga.abs().ln() - gb.abs().ln()) / (t(a) - t(b)));
            let decay = -slope;
            if !(decay > 0.0) || ga.signum() != gb.signum() {
                let end = if sign < 0.0 { "origin" } else { "infinity" };
                return Err(CknError::NonIntegrable(format!("integrand does not decay towards {end}")));
            }
            tail += ga / decay;
        }
        Ok(Integral { value: body + tail, est_error: tail.abs() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Integral {
    pub value: f64,
    /// Size of the analytic tail correction added to the grid sum.
    pub est_error: f64,
}

/// Named functional value for reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub name: String,
    pub params: Params,
    pub value: f64,
    pub est_error: f64,
}

/// ||u||^2 = omega int r^alpha (u'' + (N-1)u'/r)^2 r^{N-1} dr.
pub fn weighted_hessian_norm_sq(p: &Params, u: &dyn RadialFunction, grid: &RadialGrid) -> Result<Integral> {
    inner_alpha(p, u, u, grid)
}

pub fn inner_alpha(p: &Params, u: &dyn RadialFunction, v: &dyn RadialFunction, grid: &RadialGrid) -> Result<Integral> {
    let (al, nm1) = (p.alpha, p.nf() - 1.0);
    let i = grid.integrate(|r| r.powf(al + nm1) * u.laplacian(p, 0.0, r) * v.laplacian(p, 0.0, r))?;
    Ok(scale(i, p.omega()))
}

/// omega int r^{-alpha} |u|^{p*} r^{N-1} dr, i.e. ||u||_*^{p*}.
pub fn weighted_star_power(p: &Params, u: &dyn RadialFunction, grid: &RadialGrid) -> Result<Integral> {
    let e = p.nf() - 1.0 - p.alpha;
    let i = grid.integrate(|r| r.powf(e) * u.value(r).abs().powf(p.pstar))?;
    Ok(scale(i, p.omega()))
}

pub fn weighted_star_norm(p: &Params, u: &dyn RadialFunction, grid: &RadialGrid) -> Result<f64> {
    Ok(weighted_star_power(p, u, grid)?.value.powf(1.0 / p.pstar))
}

pub fn rayleigh_quotient(p: &Params, u: &dyn RadialFunction, grid: &RadialGrid) -> Result<f64> {
    let num = weighted_hessian_norm_sq(p, u, grid)?.value;
    let star = weighted_star_norm(p, u, grid)?;
    if star == 0.0 || num == 0.0 {
        return Err(CknError::ZeroFunction);
    }
    Ok(num / (star * star))
}

/// CKN deficit ||u||^2 - S ||u||_*^2.
pub fn deficit(p: &Params, u: &dyn RadialFunction, grid: &RadialGrid) -> Result<f64> {
    let num = weighted_hessian_norm_sq(p, u, grid)?.value;
    let star = weighted_star_norm(p, u, grid)?;
    Ok(num - best_constant_radial(p) * star * star)
}

/// H[u] = (1/p*) int h |x|^{-alpha} u_+^{p*} dx.
pub fn weighted_h(p: &Params, h: &dyn Fn(f64) -> f64, u: &dyn RadialFunction, grid: &RadialGrid) -> Result<f64> {
    let e = p.nf() - 1.0 - p.alpha;
    let i = grid.integrate(|r| h(r) * r.powf(e) * u.value(r).max(0.0).powf(p.pstar))?;
    Ok(p.omega() * i.value / p.pstar)
}

/// J_eps[u] = ||u||^2/2 - (1/p*) int (1 + eps h) |x|^{-alpha} u_+^{p*} dx.
pub fn energy_j(p: &Params, eps: f64, h: &dyn Fn(f64) -> f64, u: &dyn RadialFunction, grid: &RadialGrid) -> Result<f64> {
    let norm = weighted_hessian_norm_sq(p, u, grid)?.value;
    let e = p.nf() - 1.0 - p.alpha;
    let i = grid.integrate(|r| (1.0 + eps * h(r)) * r.powf(e) * u.value(r).max(0.0).powf(p.pstar))?;
    Ok(0.5 * norm - p.omega() * i.value / p.pstar)
}

fn scale(i: Integral, s: f64) -> Integral {
    Integral { value: i.value * s, est_error: i.est_error * s }
}

/// Samples on Chebyshev points in t = ln r with barycentric interpolation;
/// derivatives through the collocation differentiation matrix. Zero outside
/// [r_min, r_max].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledRadial {
    t0: f64,
    t1: f64,
    nodes: Vec<f64>,
    bary: Vec<f64>,
    /// Samples of d^j u / dt^j at the nodes, j = 0..=4.
    dt: Vec<Vec<f64>>,
}

impl SampledRadial {
    pub fn from_fn(f: impl Fn(f64) -> f64, r_min: f64, r_max: f64, n: usize) -> Result<Self> {
        if n < 8 {
            return Err(CknError::GridTooCoarse { nodes: n, min: 8 });
        }
        if !(r_min > 0.0 && r_max > r_min) {
            return Err(CknError::InvalidGrid(format!("[{r_min}, {r_max}]")));
        }
        let (t0, t1) = (r_min.ln(), r_max.ln());
        let m = n - 1;
        let x: Vec<f64> = (0..n).map(|j| -(std::f64::consts::PI * j as f64 / m as f64).cos()).collect();
        let bary: Vec<f64> = (0..n)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == m { 0.5 * s } else { s }
            })
            .collect();
        let nodes: Vec<f64> = x.iter().map(|&xi| t0 + 0.5 * (xi + 1.0) * (t1 - t0)).collect();
        let values: Vec<f64> = nodes.iter().map(|&t| f(t.exp())).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CknError::InvalidGrid("non-finite sample".into()));
        }
        let d = cheb_diff_matrix(&x, &bary, 2.0 / (t1 - t0));
        let mut dt = vec![values];
        for j in 0..4 {
            let next = (0..n).map(|i| (0..n).map(|k| d[i * n + k] * dt[j][k]).sum()).collect();
            dt.push(next);
        }
        Ok(Self { t0, t1, nodes, bary, dt })
    }

    fn interp(&self, j: usize, t: f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (k, &tk) in self.nodes.iter().enumerate() {
            let diff = t - tk;
            if diff == 0.0 {
                return self.dt[j][k];
            }
            let w = self.bary[k] / diff;
            num += w * self.dt[j][k];
            den += w;
        }
        num / den
    }
}

fn cheb_diff_matrix(x: &[f64], w: &[f64], scale: f64) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        let mut diag = 0.0;
        for k in 0..n {
            if i != k {
                let v = w[k] / w[i] / (x[i] - x[k]);
                d[i * n + k] = v * scale;
                diag -= v;
            }
        }
        d[i * n + i] = diag * scale;
    }
    d
}

impl RadialFunction for SampledRadial {
    fn jet(&self, r: f64) -> Jet {
        let t = r.ln();
        if t < self.t0 || t > self.t1 {
            return Jet::constant(0.0);
        }
        // r^k d^k/dr^k = theta(theta-1)...(theta-k+1) with theta = d/dt
        let th: Vec<f64> = (0..5).map(|j| self.interp(j, t)).collect();
        let falling = [
            [1.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0, 0.0],
            [0.0, -1.0, 1.0, 0.0, 0.0],
            [0.0, 2.0, -3.0, 1.0, 0.0],
            [0.0, -6.0, 11.0, -6.0, 1.0],
        ];
        let mut d = [0.0; 5];
        for k in 0..5 {
            let s: f64 = (0..5).map(|j| falling[k][j] * th[j]).sum();
            d[k] = s / r.powi(k as i32);
        }
        Jet::from_derivs(d)
    }
}

/// Piecewise-linear radial weight from (r, h) samples, zero outside the table.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    r: Vec<f64>,
    h: Vec<f64>,
}

impl Tabulated {
    pub fn new(mut pts: Vec<(f64, f64)>) -> Result<Self> {
        if pts.len() < 2 {
            return Err(CknError::InvalidGrid("need at least two samples".into()));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.windows(2).any(|w| w[0].0 == w[1].0) || pts.iter().any(|p| !p.0.is_finite() || !p.1.is_finite() || p.0 < 0.0) {
            return Err(CknError::InvalidGrid("radii must be distinct, finite and nonnegative".into()));
        }
        Ok(Self { r: pts.iter().map(|p| p.0).collect(), h: pts.iter().map(|p| p.1).collect() })
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r < self.r[0] || r > *self.r.last().unwrap() {
            return 0.0;
        }
        let i = self.r.partition_point(|&x| x <= r).clamp(1, self.r.len() - 1);
        let (r0, r1) = (self.r[i - 1], self.r[i]);
        let s = (r - r0) / (r1 - r0);
        self.h[i - 1] * (1.0 - s) + self.h[i] * s
    }

    pub fn sup_abs(&self) -> f64 {
        self.h.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn log_grid_integrates_powers_with_tails() {
        let g = RadialGrid::new(GridSpec { r_min: 1e-8, r_max: 1e8, n: 512, map: MapKind::LogUniform }).unwrap();
        // int_0^inf r^2/(1+r^2)^3 dr = pi/16
        let i = g.integrate(|r| r * r / (1.0 + r * r).powi(3)).unwrap();
        assert_relative_eq!(i.value, std::f64::consts::PI / 16.0, max_relative = 1e-13);
        // tails matter: int_0^inf r^0.3/(1+r)^1.6 dr = B(1.3, 0.3)
        let exact = crate::special::ln_beta(1.3, 0.3).exp();
        let i = g.integrate(|r| r.powf(0.3) / (1.0 + r).powf(1.6)).unwrap();
        assert!(i.est_error > 1e-4);
        assert_relative_eq!(i.value, exact, max_relative = 1e-5);
        assert!(matches!(g.integrate(|_| 1.0), Err(CknError::NonIntegrable(_))));
    }

    #[test]
    fn algebraic_map_integrates() {
        let g = RadialGrid::new(GridSpec { r_min: 0.1, r_max: 10.0, n: 200, map: MapKind::AlgebraicMap }).unwrap();
        let i = g.integrate(|r| 1.0 / (1.0 + r * r)).unwrap();
        assert_relative_eq!(i.value, std::f64::consts::FRAC_PI_2, max_relative = 1e-10);
        assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn grid_validation() {
        let bad = GridSpec { r_min: 0.0, r_max: 1.0, n: 64, map: MapKind::LogUniform };
        assert!(matches!(RadialGrid::new(bad), Err(CknError::InvalidGrid(_))));
        let coarse = GridSpec { r_min: 0.1, r_max: 1.0, n: 4, map: MapKind::LogUniform };
        assert!(matches!(RadialGrid::new(coarse), Err(CknError::GridTooCoarse { .. })));
    }

    #[test]
    fn sampled_radial_derivatives() {
        let f = |r: f64| (-(r * r)).exp();
        let s = SampledRadial::from_fn(f, 1e-2, 8.0, 80).unwrap();
        for r in [0.05, 0.3, 1.0, 2.2] {
            let exact = JetFn(|x: Jet| (-(x * x)).exp()).jet(r);
            for k in 0..3 {
                assert_relative_eq!(s.deriv(r, k), exact.d(k), max_relative = 1e-6, epsilon = 1e-7);
            }
        }
        assert_eq!(s.value(20.0), 0.0);
    }

    #[test]
    fn tabulated_weight() {
        let t = Tabulated::new(vec![(2.0, 4.0), (0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert_eq!(t.eval(0.5), 0.5);
        assert_eq!(t.eval(1.5), 2.5);
        assert_eq!(t.eval(2.0), 4.0);
        assert_eq!(t.eval(3.0), 0.0);
        assert_eq!(t.sup_abs(), 4.0);
    }
}
