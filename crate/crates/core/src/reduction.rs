//! Distance to the extremal manifold {c U_lambda}, the remainder quotient near it,
//! and the finite-dimensional reduction for
//! J_eps[u] = ||u||^2/2 - (1/p*) int (1 + eps h) |x|^{-alpha} u_+^{p*} dx.
//!
//! The reduction works in the frame of scale one: by dilation invariance
//! J_eps[U_lambda + w] equals the same functional at scale one with h replaced by
//! h(. / lambda). Radial functions are expanded in the mode-0 basis of
//! [`crate::spectrum`], u = y^c sum_i x_i G_i(2y - 1), so that
//! ||u||^2 = omega q^{-3} x^T S x and the nonlinear term is a Gauss-Jacobi sum with
//! weight y^{M/2-1} (1-y)^{M/2-1}.

use crate::error::{CknError, Result};
use crate::optimize::{brent_min, brent_root};
use crate::params::{best_constant_radial, normalization_constant, Params};
use crate::profiles::{dilation_tangent, extremal_u, log_space};
use crate::quadrature::gauss_jacobi_unit;
use crate::radial::{deficit, Combination, RadialFunction, RadialGrid};
use crate::spectrum::{assemble_mode_problem, mode_eigenvalues, GalerkinFunction, ModeBasis};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::sync::Arc;

/// Laplacian samples r^{(alpha+N-1)/2} Delta u on the grid nodes.
struct LapSamples(Vec<f64>);

impl LapSamples {
    fn new(p: &Params, u: &dyn RadialFunction, grid: &RadialGrid) -> Self {
        let e = 0.5 * (p.alpha + p.nf() - 1.0);
        Self(grid.nodes.iter().map(|&r| r.powf(e) * u.laplacian(p, 0.0, r)).collect())
    }

    fn inner(&self, other: &Self, p: &Params, grid: &RadialGrid) -> Result<f64> {
        let v: Vec<f64> = self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect();
        Ok(p.omega() * grid.integrate_values(&v)?.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalFit {
    pub c: f64,
    pub lambda: f64,
    pub dist: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifoldFit {
    pub c: f64,
    pub lambda: f64,
    pub dist: f64,
    pub converged: bool,
    pub starts_used: usize,
    /// Every local minimum of lambda -> dist found from the starts, ordered by lambda.
    pub local_minima: Vec<LocalFit>,
}

/// min over (c, lambda) of ||u - c U_lambda||. For fixed lambda the optimal c is
/// <u, U_lambda>/||U||^2; stationary points in lambda are the zeros of
/// <u, U_lambda> <u, dU_lambda/dlambda>, located by Brent from the starts 2^-6..2^6.
pub fn dist_to_manifold(p: &Params, u: &dyn RadialFunction, grid: &RadialGrid) -> Result<ManifoldFit> {
    let lu = LapSamples::new(p, u, grid);
    let uu = lu.inner(&lu, p, grid)?;
    if !(uu > 0.0) {
        return Err(CknError::ZeroFunction);
    }
    let u1 = LapSamples::new(p, &extremal_u(p, 1.0)?, grid);
    let nu = u1.inner(&u1, p, grid)?;
    let proj = |t: f64| -> Result<f64> { lu.inner(&LapSamples::new(p, &extremal_u(p, t.exp())?, grid), p, grid) };
    let slope = |t: f64| -> Result<f64> {
        let lam = t.exp();
        let d = LapSamples::new(p, &dilation_tangent(p, lam)?, grid);
        Ok(lam * lu.inner(&d, p, grid)?)
    };
    // sign of d/dt <u, U>^2
    let dir = |t: f64| -> Result<f64> { Ok(proj(t)? * slope(t)?) };
    let starts: Vec<f64> = (-6..=6).map(|j| j as f64 * std::f64::consts::LN_2).collect();
    let signs: Vec<f64> = starts.iter().map(|&t| dir(t)).collect::<Result<_>>()?;
    let mut minima = Vec::new();
    let mut failed = None;
    for w in 0..starts.len() - 1 {
        if signs[w] > 0.0 && signs[w + 1] <= 0.0 {
            let mut err = None;
            let root = brent_root(
                |t| match dir(t) {
                    Ok(v) => v,
                    Err(e) => {
                        err = Some(e);
                        0.0
                    }
                },
                starts[w],
                starts[w + 1],
                1e-14,
                200,
            );
            if let Some(e) = err {
                failed = Some(e);
                continue;
            }
            let Some(t) = root else { continue };
            let lam = t.exp();
            let ul = extremal_u(p, lam)?;
            let c = proj(t)? / nu;
            let scaled = ul.scaled(-c);
            let diff = Combination::new(vec![(1.0, u), (1.0, &scaled)]);
            let dl = LapSamples::new(p, &diff, grid);
            let dist = dl.inner(&dl, p, grid)?.max(0.0).sqrt();
            minima.push(LocalFit { c, lambda: lam, dist });
        }
    }
    if let Some(e) = failed {
        return Err(e);
    }
    let Some(best) = minima.iter().copied().min_by(|a, b| a.dist.total_cmp(&b.dist)) else {
        let best = starts
            .iter()
            .map(|&t| proj(t).map(|v| (uu - v * v / nu).max(0.0).sqrt()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        return Err(CknError::NoConvergence { best });
    };
    Ok(ManifoldFit {
        c: best.c,
        lambda: best.lambda,
        dist: best.dist,
        converged: true,
        starts_used: starts.len(),
        local_minima: minima,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemainderPoint {
    pub t: f64,
    pub quotient: f64,
    pub deficit: f64,
    pub dist: f64,
    pub fit: ManifoldFit,
}

/// (||u||^2 - S ||u||_*^2) / dist(u, M)^2.
pub fn remainder_quotient(p: &Params, u: &dyn RadialFunction, grid: &RadialGrid) -> Result<RemainderPoint> {
    let fit = dist_to_manifold(p, u, grid)?;
    let norm = LapSamples::new(p, u, grid);
    let nn = norm.inner(&norm, p, grid)?.sqrt();
    if fit.dist <= 1e-10 * nn {
        return Err(CknError::OnManifold);
    }
    let d = deficit(p, u, grid)?;
    Ok(RemainderPoint { t: f64::NAN, quotient: d / (fit.dist * fit.dist), deficit: d, dist: fit.dist, fit })
}

/// Quotient along u(t) = U_1 + t w.
pub fn remainder_scan(p: &Params, w: &dyn RadialFunction, t_list: &[f64], grid: &RadialGrid) -> Result<Vec<RemainderPoint>> {
    let u1 = extremal_u(p, 1.0)?;
    t_list
        .iter()
        .map(|&t| {
            let u = Combination::new(vec![(1.0, &u1 as &dyn RadialFunction), (t, w)]);
            let mut pt = remainder_quotient(p, &u, grid)?;
            pt.t = t;
            Ok(pt)
        })
        .collect()
}

/// The j-th radial eigenfunction (j = 0 is U itself) scaled so that ||phi|| = ||U_1||.
pub fn radial_direction(p: &Params, j: usize, nodes: usize, grid: &RadialGrid) -> Result<GalerkinFunction> {
    let s = mode_eigenvalues(p, 0, j + 1, nodes)?;
    let f = s.eigenfunction(j, 1.0, 1.0)?;
    let lf = LapSamples::new(p, &f, grid);
    let lu = LapSamples::new(p, &extremal_u(p, 1.0)?, grid);
    let scale = (lu.inner(&lu, p, grid)? / lf.inner(&lf, p, grid)?).sqrt();
    GalerkinFunction::new(f.basis, f.coeffs, 1.0, scale)
}

/// e^{-r} r^2 / (1 + r^2).
pub fn bump_h(r: f64) -> f64 {
    (-r).exp() * r * r / (1.0 + r * r)
}

pub type HFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub const DEFAULT_PERTURB_NODES: usize = 256;

/// Perturbed problem with radial bounded h, discretized on the mode-0 basis.
#[derive(Clone)]
pub struct PerturbationProblem {
    pub params: Params,
    pub eps: f64,
    pub h_name: String,
    pub h_sup: f64,
    h: HFn,
    disc: Arc<Discrete>,
}

impl std::fmt::Debug for PerturbationProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PerturbationProblem")
            .field("params", &self.params)
            .field("eps", &self.eps)
            .field("h", &self.h_name)
            .field("dim", &self.disc.basis.dim)
            .finish()
    }
}

/// Scale-one discretization shared by every (lambda, eps).
struct Discrete {
    basis: ModeBasis,
    /// omega q^{-3} S
    a: DMatrix<f64>,
    /// G_i(2 y_r - 1), one row per quadrature node
    g: DMatrix<f64>,
    /// omega q w_r / 2
    wq: Vec<f64>,
    /// radius of each quadrature node at scale one
    r: Vec<f64>,
    x_u: DVector<f64>,
    /// coefficients of dU_lambda/dlambda at lambda = 1
    z: DVector<f64>,
    az: DVector<f64>,
    bordered: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    norm_u: f64,
}

impl Discrete {
    fn new(p: &Params, nodes: usize) -> Result<Self> {
        let prob = assemble_mode_problem(p, 0, nodes)?;
        let basis = prob.basis.clone();
        let dim = basis.dim;
        let om = p.omega();
        let a = &prob.stiffness * (om / p.q.powi(3));
        let a0 = p.m / 2.0 - 1.0;
        let rule = gauss_jacobi_unit(nodes, a0, a0);
        let mut g = DMatrix::zeros(nodes, dim);
        for (row, &y) in rule.nodes.iter().enumerate() {
            for (i, v) in basis.poly_values(y).into_iter().enumerate() {
                g[(row, i)] = v;
            }
        }
        let wq = rule.weights.iter().map(|w| 0.5 * om * p.q * w).collect();
        let r = rule.nodes.iter().map(|&y| ((1.0 - y) / y).powf(1.0 / p.b())).collect();
        let cn = normalization_constant(p);
        let x_u = DVector::from_vec(basis.constant_coeffs(cn));
        let z = DVector::from_vec(basis.linear_coeffs(0.5 * cn * p.a()));
        let az = &a * &z;
        // frozen Hessian of J_0 at U: A - (p*-1) C^{p*-2} (omega q / 2) I
        let shift = (p.pstar - 1.0) * cn.powf(p.pstar - 2.0) * 0.5 * om * p.q;
        let mut big = DMatrix::zeros(dim + 1, dim + 1);
        big.view_mut((0, 0), (dim, dim)).copy_from(&a);
        for i in 0..dim {
            big[(i, i)] -= shift;
            big[(i, dim)] = -az[i];
            big[(dim, i)] = az[i];
        }
        let norm_u = x_u.dot(&(&a * &x_u)).sqrt();
        Ok(Self { basis, a, g, wq, r, x_u, z, az, bordered: big.lu(), norm_u })
    }

    fn norm(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.a * x)).max(0.0).sqrt()
    }

    /// Gradient of J in coefficient space and the energy at x, with weights 1 + eps h_lambda.
    fn grad_energy(&self, p: &Params, x: &DVector<f64>, pert: &[f64]) -> (DVector<f64>, f64) {
        let vals = &self.g * x;
        let ax = &self.a * x;
        let mut nl = DVector::zeros(x.len());
        let mut pot = 0.0;
        for (row, &v) in vals.iter().enumerate() {
            let vp = v.max(0.0);
            if vp == 0.0 {
                continue;
            }
            let w = self.wq[row] * (1.0 + pert[row]);
            let d = w * vp.powf(p.pstar - 1.0);
            pot += d * vp;
            nl.axpy(d, &self.g.row(row).transpose(), 1.0);
        }
        let energy = 0.5 * x.dot(&ax) - pot / p.pstar;
        (ax - nl, energy)
    }
}

impl PerturbationProblem {
    pub fn new(p: &Params, eps: f64, h_name: &str, h: HFn, nodes: usize) -> Result<Self> {
        let h_sup = log_space(1e-8, 1e8, 4001).into_iter().map(|r| h(r).abs()).fold(0.0, f64::max);
        let me = Self { params: *p, eps, h_name: h_name.to_string(), h_sup, h, disc: Arc::new(Discrete::new(p, nodes)?) };
        me.check_eps()?;
        Ok(me)
    }

    /// Built-in h = e^{-r} r^2/(1+r^2).
    pub fn with_bump(p: &Params, eps: f64) -> Result<Self> {
        Self::new(p, eps, "bump", Arc::new(bump_h), DEFAULT_PERTURB_NODES)
    }

    /// Same problem with another eps (shares the discretization).
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        let me = Self { eps, ..self.clone() };
        me.check_eps()?;
        Ok(me)
    }

    fn check_eps(&self) -> Result<()> {
        let v = self.eps.abs() * self.h_sup;
        if v > 1.0 {
            return Err(CknError::EpsilonTooLarge(v));
        }
        Ok(())
    }

    pub fn h(&self, r: f64) -> f64 {
        (self.h)(r)
    }

    pub fn dim(&self) -> usize {
        self.disc.basis.dim
    }

    /// J_0[U_1] = (1/2 - 1/p*) S^{p*/(p*-2)}.
    pub fn j0(&self) -> f64 {
        let p = &self.params;
        (0.5 - 1.0 / p.pstar) * best_constant_radial(p).powf(p.pstar / (p.pstar - 2.0))
    }

    fn pert(&self, lambda: f64) -> Vec<f64> {
        self.disc.r.iter().map(|&r| self.eps * self.h(r / lambda)).collect()
    }

    /// U_lambda + omega as a radial function.
    pub fn assemble(&self, corr: &CorrectionResult) -> Result<GalerkinFunction> {
        let x: Vec<f64> = self.disc.x_u.iter().zip(&corr.omega).map(|(a, b)| a + b).collect();
        let amp = corr.lambda.powf(0.5 * self.params.a());
        GalerkinFunction::new(self.disc.basis.clone(), x, corr.lambda, amp)
    }

    /// omega(lambda, eps) alone as a radial function.
    pub fn omega_function(&self, corr: &CorrectionResult) -> Result<GalerkinFunction> {
        let amp = corr.lambda.powf(0.5 * self.params.a());
        GalerkinFunction::new(self.disc.basis.clone(), corr.omega.clone(), corr.lambda, amp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectionResult {
    pub lambda: f64,
    pub eps: f64,
    /// Coefficients of omega in the scale-one frame.
    pub omega: Vec<f64>,
    pub l: f64,
    pub iterations: usize,
    pub contraction_factor: f64,
    pub omega_norm: f64,
    /// ||omega|| / |eps|.
    pub c2: f64,
    /// |<omega, xi>| / (||omega|| ||xi||).
    pub orthogonality: f64,
    /// Dual norm of the projected gradient relative to ||U||.
    pub projected_residual: f64,
    /// Gamma_eps(lambda) = J_eps[U_lambda + omega].
    pub energy: f64,
}

pub const CORRECTION_TOL: f64 = 1e-10;
pub const MAX_CORRECTION_ITERS: usize = 100;
pub const CONTRACTION_LIMIT: f64 = 0.9;

/// Chord iteration for (omega, l): grad J_eps[U_lambda + omega] = l A xi, <omega, xi> = 0,
/// with the Hessian of J_0 at U frozen and bordered by the constraint.
pub fn solve_correction(pp: &PerturbationProblem, lambda: f64) -> Result<CorrectionResult> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(CknError::NonpositiveScale(lambda));
    }
    pp.check_eps()?;
    let p = &pp.params;
    let d = &*pp.disc;
    let dim = d.basis.dim;
    let pert = pp.pert(lambda);
    let mut omega = DVector::zeros(dim);
    let mut l = 0.0;
    let mut iterations = 0;
    let mut factor: f64 = 0.0;
    if pert.iter().any(|&v| v != 0.0) {
        let mut prev: Option<f64> = None;
        loop {
            let x = &d.x_u + &omega;
            let (g, _) = d.grad_energy(p, &x, &pert);
            let mut rhs = DVector::zeros(dim + 1);
            rhs.rows_mut(0, dim).copy_from(&(-(g - &d.az * l)));
            rhs[dim] = -d.az.dot(&omega);
            let step = d
                .bordered
                .solve(&rhs)
                .ok_or_else(|| CknError::EigensolveFailure("bordered Hessian is singular".into()))?;
            let dw = step.rows(0, dim).into_owned();
            omega += &dw;
            l += step[dim];
            iterations += 1;
            let size = d.norm(&dw) / d.norm_u;
            if let Some(pv) = prev {
                if pv > 1e3 * f64::EPSILON {
                    factor = factor.max(size / pv);
                }
            }
            if factor >= CONTRACTION_LIMIT && iterations >= 3 {
                return Err(CknError::ContractionFailure(factor));
            }
            if size < CORRECTION_TOL {
                break;
            }
            if iterations >= MAX_CORRECTION_ITERS {
                return Err(CknError::ContractionFailure(factor.max(size / prev.unwrap_or(size))));
            }
            prev = Some(size);
        }
    }
    let x = &d.x_u + &omega;
    let (g, energy) = d.grad_energy(p, &x, &pert);
    let zn = d.norm(&d.z);
    let omega_norm = d.norm(&omega);
    // projected gradient: g - (g.z / z.Az) A z, measured in the dual norm
    let pg = &g - &d.az * (g.dot(&d.z) / d.az.dot(&d.z));
    let projected_residual = dual_norm(&d.a, &pg)? / d.norm_u;
    Ok(CorrectionResult {
        lambda,
        eps: pp.eps,
        omega: omega.iter().copied().collect(),
        l,
        iterations,
        contraction_factor: factor,
        omega_norm,
        c2: if pp.eps == 0.0 { 0.0 } else { omega_norm / pp.eps.abs() },
        orthogonality: if omega_norm == 0.0 { 0.0 } else { d.az.dot(&omega).abs() / (omega_norm * zn) },
        projected_residual,
        energy,
    })
}

fn dual_norm(a: &DMatrix<f64>, g: &DVector<f64>) -> Result<f64> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| CknError::EigensolveFailure("Gram matrix is not positive definite".into()))?;
    Ok(g.dot(&chol.solve(g)).max(0.0).sqrt())
}

/// Gamma_eps(lambda) = J_eps[U_lambda + omega(lambda, eps)].
pub fn reduced_energy(pp: &PerturbationProblem, lambda: f64) -> Result<f64> {
    Ok(solve_correction(pp, lambda)?.energy)
}

/// Gamma_eps(lambda) re-evaluated by radial quadrature of the assembled function at its own scale.
pub fn reduced_energy_radial(pp: &PerturbationProblem, lambda: f64, grid: &RadialGrid) -> Result<f64> {
    let corr = solve_correction(pp, lambda)?;
    let u = pp.assemble(&corr)?;
    crate::radial::energy_j(&pp.params, pp.eps, &|r| pp.h(r), &u, grid)
}

fn map_lambdas<T: Send>(lams: &[f64], f: impl Fn(f64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        lams.par_iter().map(|&l| f(l)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        lams.iter().map(|&l| f(l)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbedSolution {
    pub lambda_star: f64,
    /// Gamma_eps(lambda*).
    pub energy: f64,
    pub j0: f64,
    pub omega_norm: f64,
    pub l: f64,
    pub kind: &'static str,
    /// Dual norm of J'_eps[u] over a test basis twice the solve dimension, relative to ||u||.
    pub residual: f64,
    pub projected_residual: f64,
    pub test_dim: usize,
    pub min_value: f64,
    pub positive: bool,
    pub gamma_curve: Vec<(f64, f64)>,
    pub correction: CorrectionResult,
}

pub const LAMBDA_GRID: (f64, f64, usize) = (1e-2, 1e2, 33);

/// Interior extremum of Gamma_eps on the log grid, refined in log lambda, and the
/// assembled u = U_{lambda*} + omega with its unprojected residual.
pub fn find_perturbed_solution(pp: &PerturbationProblem, grid: &RadialGrid) -> Result<(PerturbedSolution, GalerkinFunction)> {
    let (l0, l1, n) = LAMBDA_GRID;
    let lams = log_space(l0, l1, n);
    let gam = map_lambdas(&lams, |l| reduced_energy(pp, l))?;
    let j0 = pp.j0();
    let dev: Vec<f64> = gam.iter().map(|g| g - j0).collect();
    let scale = dev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale <= 1e-13 * j0.abs() {
        return Err(CknError::NoInteriorExtremum);
    }
    // largest |Gamma - J0|, smallest lambda on ties
    let mut best = 0;
    for i in 1..n {
        if dev[i].abs() > dev[best].abs() {
            best = i;
        }
    }
    if best == 0 || best == n - 1 {
        return Err(CknError::NoInteriorExtremum);
    }
    let sign = dev[best].signum();
    let (ta, tb) = (lams[best - 1].ln(), lams[best + 1].ln());
    let kind = if sign > 0.0 { "max" } else { "min" };
    let m = brent_min(|t| -sign * reduced_energy(pp, t.exp()).unwrap_or(f64::INFINITY), ta, tb, 1e-10, 200);
    let mut t_star = m.x;
    // the multiplier l vanishes at critical points of Gamma; polish on it when bracketed
    let lag = |t: f64| solve_correction(pp, t.exp()).map(|c| c.l).unwrap_or(f64::NAN);
    let (la, lb) = (lag(t_star - 0.05), lag(t_star + 0.05));
    if la.is_finite() && lb.is_finite() && la.signum() != lb.signum() {
        if let Some(t) = brent_root(lag, t_star - 0.05, t_star + 0.05, 1e-14, 200) {
            t_star = t;
        }
    }
    let lambda_star = t_star.exp();
    let corr = solve_correction(pp, lambda_star)?;
    let u = pp.assemble(&corr)?;
    let test_dim = 2 * pp.dim();
    let residual = unprojected_residual(pp, &u, test_dim, grid)?;
    let min_value = grid.nodes.iter().map(|&r| u.value(r)).fold(f64::INFINITY, f64::min);
    let on_nodes = &pp.disc.g * (&pp.disc.x_u + DVector::from_vec(corr.omega.clone()));
    let positive = min_value > 0.0 && on_nodes.iter().all(|&v| v > 0.0);
    let sol = PerturbedSolution {
        lambda_star,
        energy: corr.energy,
        j0,
        omega_norm: corr.omega_norm,
        l: corr.l,
        kind,
        residual,
        projected_residual: corr.projected_residual,
        test_dim,
        min_value,
        positive,
        gamma_curve: lams.into_iter().zip(gam).collect(),
        correction: corr,
    };
    Ok((sol, u))
}

/// sup over the span of `test_dim` mode-0 basis functions at the scale of u of
/// |J'_eps[u] eta| / ||eta||, relative to ||u||, by quadrature on the radial grid
/// refined so that the test functions are resolved.
pub fn unprojected_residual(pp: &PerturbationProblem, u: &GalerkinFunction, test_dim: usize, grid: &RadialGrid) -> Result<f64> {
    let p = &pp.params;
    let fine = RadialGrid::new(grid.spec.with_nodes(grid.len() * (test_dim / 16).max(1)))?;
    let grid = &fine;
    let tb = ModeBasis::new(p, 0, test_dim)?;
    let nf = p.nf();
    let nn = grid.nodes.len();
    let ea = 0.5 * (p.alpha + nf - 1.0);
    let es = nf - 1.0 - p.alpha;
    let mut lt = DMatrix::zeros(nn, test_dim);
    let mut vt = DMatrix::zeros(nn, test_dim);
    let mut lu = vec![0.0; nn];
    let mut nl = vec![0.0; nn];
    for (row, &r) in grid.nodes.iter().enumerate() {
        let ra = r.powf(ea);
        for (i, j) in tb.function_jets(r, u.lambda).into_iter().enumerate() {
            lt[(row, i)] = ra * j.radial_laplacian(r, nf, 0.0).value();
            vt[(row, i)] = j.value();
        }
        lu[row] = ra * u.laplacian(p, 0.0, r);
        let v = u.value(r).max(0.0);
        nl[row] = (1.0 + pp.eps * pp.h(r)) * r.powf(es) * v.powf(p.pstar - 1.0);
    }
    let om = p.omega();
    let mut g = DVector::zeros(test_dim);
    let mut gram = DMatrix::zeros(test_dim, test_dim);
    let mut col = vec![0.0; nn];
    for i in 0..test_dim {
        for (row, c) in col.iter_mut().enumerate() {
            *c = lu[row] * lt[(row, i)];
        }
        let lin = grid.integrate_values(&col)?.value;
        for (row, c) in col.iter_mut().enumerate() {
            *c = nl[row] * vt[(row, i)];
        }
        let non = grid.integrate_values(&col)?.value;
        g[i] = om * (lin - non);
        for j in i..test_dim {
            for (row, c) in col.iter_mut().enumerate() {
                *c = lt[(row, i)] * lt[(row, j)];
            }
            let v = om * grid.integrate_values(&col)?.value;
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let uu: f64 = {
        let sq: Vec<f64> = lu.iter().map(|v| v * v).collect();
        om * grid.integrate_values(&sq)?.value
    };
    Ok(dual_norm(&gram, &g)? / uu.sqrt())
}

/// ||omega(eps)|| / ||omega(eps/2)|| at scale lambda.
pub fn linear_response_ratio(pp: &PerturbationProblem, lambda: f64) -> Result<f64> {
    let a = solve_correction(pp, lambda)?;
    let b = solve_correction(&pp.with_eps(pp.eps / 2.0)?, lambda)?;
    Ok(a.omega_norm / b.omega_norm)
}

/// ||h^{1/p*} U_lambda||_*^{p*} = int |h| |x|^{-alpha} U_lambda^{p*} dx.
pub fn h_weighted_norm(pp: &PerturbationProblem, lambda: f64, grid: &RadialGrid) -> Result<f64> {
    let p = &pp.params;
    let u = extremal_u(p, lambda)?;
    let e = p.nf() - 1.0 - p.alpha;
    let i = grid.integrate(|r| pp.h(r).abs() * r.powf(e) * u.value(r).powf(p.pstar))?;
    Ok(p.omega() * i.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HSample {
    pub lambda: f64,
    pub omega_norm: f64,
    pub h_value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HBoundFit {
    /// Smallest C_1 with |H[U_lambda + w]| <= C_1 (||h^{1/p*} U_lambda||_*^{p*} + ||w||^{p*}) on the samples.
    pub c1: f64,
    pub samples: Vec<HSample>,
}

/// Fit of the bound on H[u] = (1/p*) int h |x|^{-alpha} u_+^{p*} over a lambda ladder and
/// perturbations w along the second radial eigendirection of several sizes.
pub fn h_bound_fit(pp: &PerturbationProblem, lambdas: &[f64], sizes: &[f64]) -> Result<HBoundFit> {
    let p = &pp.params;
    let d = &*pp.disc;
    let mut dir = DVector::zeros(d.basis.dim);
    if d.basis.dim > 2 {
        dir[2] = 1.0;
    }
    let dn = d.norm(&dir);
    let mut samples = Vec::new();
    for &lam in lambdas {
        let hl: Vec<f64> = d.r.iter().map(|&r| pp.h(r / lam)).collect();
        let cn = normalization_constant(p);
        let base: f64 = d.wq.iter().zip(&hl).map(|(w, h)| w * h.abs() * cn.powf(p.pstar)).sum();
        for &s in sizes {
            let w = &dir * (s * d.norm_u / dn);
            let x = &d.x_u + &w;
            let vals = &d.g * &x;
            let hv: f64 = vals.iter().zip(&d.wq).zip(&hl).map(|((v, wq), h)| wq * h * v.max(0.0).powf(p.pstar)).sum::<f64>() / p.pstar;
            let wn = d.norm(&w);
            samples.push(HSample { lambda: lam, omega_norm: wn, h_value: hv, bound: base + wn.powf(p.pstar) });
        }
    }
    let c1 = samples.iter().filter(|s| s.bound > 0.0).map(|s| s.h_value.abs() / s.bound).fold(0.0, f64::max);
    Ok(HBoundFit { c1, samples })
}
