//! Per-mode linearized operator around the extremal, discretized on the
//! Sobolev side.
//!
//! A mode-k function is written X = s^l y^gamma P(y) with y = 1/(1+s^2),
//! l = qk and gamma = (M-4)/2 + l. Then
//!
//! ```text
//! L X = s^l y^{gamma+1} Q(y),
//! Q = 4(1-y)(gamma(gamma-1)P + 2 gamma y P' + y^2 P'') - (8y + 4 gamma)(gamma P + y P'),
//! ```
//!
//! the quadratic form int (L X)^2 s^{M-1} ds becomes (1/2) int y^{a-2} (1-y)^a Q^2 dy and
//! the potential term int K y^4 X^2 s^{M-1} ds becomes (K/2) int y^a (1-y)^a P^2 dy with
//! a = M/2 + l - 1. P is expanded in polynomials orthonormal for y^a (1-y)^a, so the
//! mass matrix is (K/2) I and both forms are integrated exactly by Gauss-Jacobi.

use crate::error::{CknError, Result};
use crate::jet::Jet;
use crate::params::{effective_index, even_alpha_info, kernel_condition, mode_lambda, Params};
use crate::profiles::{extremal_u, log_space, ProfileKind, RadialProfile};
use crate::quadrature::gauss_jacobi_unit;
use crate::radial::{RadialFunction, RadialGrid};
use crate::special::{harmonic_multiplicity, ln_beta};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

pub const MIN_NODES: usize = 64;

/// Orthonormal polynomial basis G_i(2y - 1) for the weight y^a (1-y)^a.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBasis {
    pub params: Params,
    pub k: u32,
    pub ell: f64,
    pub gamma: f64,
    /// Jacobi exponent a = M/2 + l - 1.
    pub jac: f64,
    pub dim: usize,
    g0: f64,
    /// sqrt(beta_n), n = 0..=dim; entry 0 unused.
    sb: Vec<f64>,
}

impl ModeBasis {
    pub fn new(p: &Params, k: u32, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(CknError::InvalidGrid("empty basis".into()));
        }
        let ell = effective_index(p, k);
        let jac = p.m / 2.0 + ell - 1.0;
        let sb = (0..=dim)
            .map(|n| {
                if n == 0 {
                    return 0.0;
                }
                let n = n as f64;
                let t = 2.0 * n + 2.0 * jac;
                (n * (n + 2.0 * jac) / ((t + 1.0) * (t - 1.0))).sqrt()
            })
            .collect();
        Ok(Self {
            params: *p,
            k,
            ell,
            gamma: p.c() + ell,
            jac,
            dim,
            g0: (-0.5 * ln_beta(jac + 1.0, jac + 1.0)).exp(),
            sb,
        })
    }

    /// Values and first two x-derivatives of G_0..G_{dim-1} at x.
    pub fn poly_derivs(&self, x: f64) -> [Vec<f64>; 3] {
        let n = self.dim;
        let (mut g, mut g1, mut g2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        g[0] = self.g0;
        for i in 0..n - 1 {
            let (pm, pm1, pm2) = if i > 0 { (g[i - 1], g1[i - 1], g2[i - 1]) } else { (0.0, 0.0, 0.0) };
            let s = self.sb[i];
            let inv = 1.0 / self.sb[i + 1];
            g[i + 1] = (x * g[i] - s * pm) * inv;
            g1[i + 1] = (g[i] + x * g1[i] - s * pm1) * inv;
            g2[i + 1] = (2.0 * g1[i] + x * g2[i] - s * pm2) * inv;
        }
        [g, g1, g2]
    }

    /// P_i(y) = G_i(2y - 1).
    pub fn poly_values(&self, y: f64) -> Vec<f64> {
        let x = 2.0 * y - 1.0;
        let n = self.dim;
        let mut g = vec![0.0; n];
        g[0] = self.g0;
        for i in 0..n - 1 {
            let pm = if i > 0 { g[i - 1] } else { 0.0 };
            g[i + 1] = (x * g[i] - self.sb[i] * pm) / self.sb[i + 1];
        }
        g
    }

    /// Sum_i c_i G_i(x) carried through jets in x.
    pub fn combination_jet(&self, coeffs: &[f64], x: Jet) -> Jet {
        let mut prev = Jet::constant(0.0);
        let mut cur = Jet::constant(self.g0);
        let mut acc = cur.scale(coeffs[0]);
        for i in 0..coeffs.len().min(self.dim) - 1 {
            let next = (x * cur - prev.scale(self.sb[i])).scale(1.0 / self.sb[i + 1]);
            prev = cur;
            cur = next;
            acc = acc + cur.scale(coeffs[i + 1]);
        }
        acc
    }

    /// Jets in r of every basis function s^l y^gamma G_i(2y - 1) at scale lambda.
    pub fn function_jets(&self, r: f64, lambda: f64) -> Vec<Jet> {
        let b = self.params.b();
        let rho = Jet::var(r) * lambda;
        let y = (rho.powf(b) + 1.0).recip();
        let x = y.scale(2.0) + (-1.0);
        let mut lead = y.powf(self.gamma);
        if self.ell != 0.0 {
            lead = lead * rho.powf(0.5 * self.ell * b);
        }
        let mut out = Vec::with_capacity(self.dim);
        let mut prev = Jet::constant(0.0);
        let mut cur = Jet::constant(self.g0);
        out.push(cur * lead);
        for i in 0..self.dim - 1 {
            let next = (x * cur - prev.scale(self.sb[i])).scale(1.0 / self.sb[i + 1]);
            prev = cur;
            cur = next;
            out.push(cur * lead);
        }
        out
    }

    /// Q_i(y) with L(s^l y^gamma P_i) = s^l y^{gamma+1} Q_i.
    pub fn operator_values(&self, y: f64) -> Vec<f64> {
        let [g, g1, g2] = self.poly_derivs(2.0 * y - 1.0);
        let gm = self.gamma;
        (0..self.dim)
            .map(|i| {
                let (pv, p1, p2) = (g[i], 2.0 * g1[i], 4.0 * g2[i]);
                4.0 * (1.0 - y) * (gm * (gm - 1.0) * pv + 2.0 * gm * y * p1 + y * y * p2)
                    - (8.0 * y + 4.0 * gm) * (gm * pv + y * p1)
            })
            .collect()
    }

    /// Coefficients of the constant polynomial `v`.
    pub fn constant_coeffs(&self, v: f64) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        c[0] = v / self.g0;
        c
    }

    /// Coefficients of v * (2y - 1).
    pub fn linear_coeffs(&self, v: f64) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        if self.dim > 1 {
            // G_1 = x G_0 / sqrt(beta_1)
            c[1] = v * self.sb[1] / self.g0;
        }
        c
    }
}

/// Discretized mode problem: A x = mu (K/2) x.
#[derive(Debug, Clone)]
pub struct ModeProblem {
    pub params: Params,
    pub k: u32,
    pub lambda_k: f64,
    pub nodes: usize,
    pub basis: ModeBasis,
    pub stiffness: DMatrix<f64>,
    /// The mass matrix is mass_scale times the identity.
    pub mass_scale: f64,
    pub symmetry_defect: f64,
}

pub fn assemble_mode_problem(p: &Params, k: u32, nodes: usize) -> Result<ModeProblem> {
    if nodes < MIN_NODES {
        return Err(CknError::GridTooCoarse { nodes, min: MIN_NODES });
    }
    let basis = ModeBasis::new(p, k, nodes / 4)?;
    let rule = gauss_jacobi_unit(nodes, basis.jac, basis.jac - 2.0);
    let dim = basis.dim;
    let mut qw = DMatrix::zeros(nodes, dim);
    for (r, (&y, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        let sw = (0.5 * w).sqrt();
        for (i, q) in basis.operator_values(y).into_iter().enumerate() {
            qw[(r, i)] = sw * q;
        }
    }
    let stiffness = qw.tr_mul(&qw);
    let norm = stiffness.norm();
    let symmetry_defect = (&stiffness - stiffness.transpose()).norm() / norm;
    let (lambda_k, _) = mode_lambda(k as i64, p.n)?;
    Ok(ModeProblem {
        params: *p,
        k,
        lambda_k,
        nodes,
        basis,
        stiffness,
        mass_scale: p.k_const() / 2.0,
        symmetry_defect,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumResult {
    pub params: Params,
    pub k: u32,
    pub nodes: usize,
    pub dim: usize,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Basis coefficients, sign fixed by P(1) > 0 (value side of the origin).
    pub vectors: Vec<Vec<f64>>,
    pub symmetry_defect: f64,
    /// max |V^T M V - (K/2) I| / (K/2): weighted orthogonality of the eigenvectors.
    pub orthogonality_defect: f64,
    #[serde(skip)]
    pub basis: Option<ModeBasis>,
}

pub fn mode_eigenvalues(p: &Params, k: u32, n_eigs: usize, nodes: usize) -> Result<SpectrumResult> {
    let prob = assemble_mode_problem(p, k, nodes)?;
    solve_mode_problem(&prob, n_eigs)
}

pub fn solve_mode_problem(prob: &ModeProblem, n_eigs: usize) -> Result<SpectrumResult> {
    let c = &prob.stiffness / prob.mass_scale;
    if c.iter().any(|v| !v.is_finite()) {
        return Err(CknError::EigensolveFailure("non-finite operator entries".into()));
    }
    let eig = SymmetricEigen::try_new(c.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| CknError::EigensolveFailure("symmetric QR did not converge".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let take = n_eigs.min(order.len());
    let basis = &prob.basis;
    let ends = basis.poly_values(1.0);
    let mut eigenvalues = Vec::with_capacity(take);
    let mut residuals = Vec::with_capacity(take);
    let mut vectors = Vec::with_capacity(take);
    for &j in &order[..take] {
        let mu = eig.eigenvalues[j];
        let mut v = eig.eigenvectors.column(j).into_owned();
        let at_one: f64 = v.iter().zip(&ends).map(|(a, b)| a * b).sum();
        if at_one < 0.0 {
            v = -v;
        }
        let res = (&c * &v - &v * mu).norm() / (mu.abs() * v.norm());
        eigenvalues.push(mu);
        residuals.push(res);
        vectors.push(v.iter().copied().collect::<Vec<_>>());
    }
    let mut orth: f64 = 0.0;
    for i in 0..take {
        for j in 0..take {
            let d: f64 = vectors[i].iter().zip(&vectors[j]).map(|(a, b)| a * b).sum();
            orth = orth.max((d - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    Ok(SpectrumResult {
        params: prob.params,
        k: prob.k,
        nodes: prob.nodes,
        dim: basis.dim,
        eigenvalues,
        residuals,
        vectors,
        symmetry_defect: prob.symmetry_defect,
        orthogonality_defect: orth,
        basis: Some(basis.clone()),
    })
}

impl SpectrumResult {
    fn basis(&self) -> Result<ModeBasis> {
        match &self.basis {
            Some(b) => Ok(b.clone()),
            None => ModeBasis::new(&self.params, self.k, self.dim),
        }
    }

    /// |<P_j, P>| / (|P_j| |P|) in L^2(y^a (1-y)^a) against a closed-form polynomial P(y).
    pub fn alignment(&self, j: usize, closed: impl Fn(f64) -> f64) -> Result<f64> {
        let basis = self.basis()?;
        let rule = gauss_jacobi_unit(self.nodes, basis.jac, basis.jac);
        let (mut uv, mut uu, mut vv) = (0.0, 0.0, 0.0);
        for (&y, &w) in rule.nodes.iter().zip(&rule.weights) {
            let pv: f64 = basis.poly_values(y).iter().zip(&self.vectors[j]).map(|(a, b)| a * b).sum();
            let cv = closed(y);
            uv += w * pv * cv;
            uu += w * pv * pv;
            vv += w * cv * cv;
        }
        Ok(uv.abs() / (uu * vv).sqrt())
    }

    /// The j-th eigenfunction as a radial function at scale lambda.
    pub fn eigenfunction(&self, j: usize, lambda: f64, amplitude: f64) -> Result<GalerkinFunction> {
        GalerkinFunction::new(self.basis()?, self.vectors[j].clone(), lambda, amplitude)
    }
}

/// u(r) = A s^l y^gamma sum_i c_i G_i(2y - 1) with rho = lambda r, s = rho^{1/q}.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinFunction {
    pub basis: ModeBasis,
    pub coeffs: Vec<f64>,
    pub lambda: f64,
    pub amplitude: f64,
}

impl GalerkinFunction {
    pub fn new(basis: ModeBasis, coeffs: Vec<f64>, lambda: f64, amplitude: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(CknError::NonpositiveScale(lambda));
        }
        if coeffs.len() > basis.dim || coeffs.is_empty() {
            return Err(CknError::InvalidGrid(format!("{} coefficients for a basis of {}", coeffs.len(), basis.dim)));
        }
        Ok(Self { basis, coeffs, lambda, amplitude })
    }

    /// Value of the polynomial factor sum_i c_i G_i at y.
    pub fn poly_value(&self, y: f64) -> f64 {
        self.basis.poly_values(y).iter().zip(&self.coeffs).map(|(a, b)| a * b).sum()
    }
}

impl RadialFunction for GalerkinFunction {
    fn jet(&self, r: f64) -> Jet {
        let b = self.basis.params.b();
        let rho = Jet::var(r) * self.lambda;
        let t = rho.powf(b);
        let y = (t + 1.0).recip();
        let x = y.scale(2.0) + (-1.0);
        let mut f = self.basis.combination_jet(&self.coeffs, x) * y.powf(self.basis.gamma);
        if self.basis.ell != 0.0 {
            f = f * rho.powf(0.5 * self.basis.ell * b);
        }
        f.scale(self.amplitude)
    }

    fn value(&self, r: f64) -> f64 {
        if r == 0.0 {
            return if self.basis.ell > 0.0 { 0.0 } else { self.amplitude * self.poly_value(1.0) };
        }
        let ln_t = self.basis.params.b() * (self.lambda * r).ln();
        let ln_1p_t = if ln_t > 30.0 { ln_t + (-ln_t).exp().ln_1p() } else { ln_t.exp().ln_1p() };
        let ln_y = -ln_1p_t;
        let lead = (self.basis.gamma * ln_y + 0.5 * self.basis.ell * ln_t).exp();
        self.amplitude * lead * self.poly_value(ln_y.exp())
    }
}

/// Mode-k eigenvalues assembled independently on a radial grid in r, with the
/// weight r^{-alpha} U_lambda^{p*-2} of the extremal at scale `lambda` and the
/// basis dilated to the same scale. Returns the smallest `n_eigs` eigenvalues.
pub fn mode_eigenvalues_radial(p: &Params, k: u32, lambda: f64, dim: usize, n_eigs: usize, grid: &RadialGrid) -> Result<Vec<f64>> {
    let basis = ModeBasis::new(p, k, dim)?;
    let u = extremal_u(p, lambda)?;
    let (lam_k, _) = mode_lambda(k as i64, p.n)?;
    let nf = p.nf();
    let nn = grid.nodes.len();
    // per node: r^{(alpha+N-1)/2} L phi_i and sqrt(w r^{N-1}) phi_i
    let mut lphi = DMatrix::zeros(nn, dim);
    let mut wphi = DMatrix::zeros(nn, dim);
    for (row, &r) in grid.nodes.iter().enumerate() {
        let wsq = (0.5 * ((nf - 1.0 - p.alpha) * r.ln() + (p.pstar - 2.0) * u.value(r).ln())).exp();
        let asq = r.powf(0.5 * (p.alpha + nf - 1.0));
        for (i, j) in basis.function_jets(r, lambda).into_iter().enumerate() {
            lphi[(row, i)] = asq * j.radial_laplacian(r, nf, lam_k).value();
            wphi[(row, i)] = wsq * j.value();
        }
    }
    let form = |m: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(dim, dim);
        let mut col = vec![0.0; nn];
        for i in 0..dim {
            for j in i..dim {
                for (row, c) in col.iter_mut().enumerate() {
                    *c = m[(row, i)] * m[(row, j)];
                }
                let v = grid.integrate_values(&col)?.value;
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Ok(out)
    };
    let a = form(&lphi)?;
    let bm = form(&wphi)?;
    let chol = bm
        .cholesky()
        .ok_or_else(|| CknError::EigensolveFailure("weight matrix is not positive definite".into()))?;
    let l = chol.l();
    let x = l
        .solve_lower_triangular(&a)
        .ok_or_else(|| CknError::EigensolveFailure("singular weight factor".into()))?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| CknError::EigensolveFailure("singular weight factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let mut ev: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev.truncate(n_eigs);
    Ok(ev)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeVerdict {
    pub k: u32,
    pub lambda_k: f64,
    pub q2_lambda_k: f64,
    pub analytic: bool,
    pub numeric: bool,
    /// Eigenvalue closest to p* - 1.
    pub nearest: f64,
    pub multiplicity: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelReport {
    pub params: Params,
    pub target: f64,
    pub tol: f64,
    pub modes: Vec<ModeVerdict>,
    pub kernel_modes: Vec<u32>,
    pub kernel_dim: u128,
    pub expected_dim: u128,
}

/// Mode-by-mode comparison of the analytic kernel condition with the discrete spectrum.
pub fn verify_kernel(p: &Params, k_max: u32, nodes: usize, tol: f64) -> Result<KernelReport> {
    let target = p.pstar - 1.0;
    let mut modes = Vec::new();
    let mut dim: u128 = 1;
    for k in 0..=k_max {
        let spec = mode_eigenvalues(p, k, 4, nodes)?;
        let nearest = spec
            .eigenvalues
            .iter()
            .copied()
            .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
            .unwrap_or(f64::NAN);
        let numeric = (nearest - target).abs() <= tol * target;
        let analytic = k == 0 || kernel_condition(p, k);
        if numeric != analytic {
            return Err(CknError::InconsistentKernel { k, analytic, numeric });
        }
        let (lambda_k, _) = mode_lambda(k as i64, p.n)?;
        let mult = harmonic_multiplicity(p.n as u32, k)?;
        if k > 0 && numeric {
            dim = dim.checked_add(mult).ok_or(CknError::Overflow("kernel dimension"))?;
        }
        modes.push(ModeVerdict { k, lambda_k, q2_lambda_k: p.q * p.q * lambda_k, analytic, numeric, nearest, multiplicity: mult });
    }
    let expected_dim = even_alpha_info(p)?.kernel_dim;
    let kernel_modes = modes.iter().filter(|m| m.numeric).map(|m| m.k).collect();
    Ok(KernelReport { params: *p, target, tol, modes, kernel_modes, kernel_dim: dim, expected_dim })
}

/// Sup over r in [1e-3, 1e3] of the pointwise mode-k residual
/// |L_k(r^alpha L_k Z) - mu r^{-alpha} U^{p*-2} Z|, relative to the size of the
/// right-hand side with every term of the profile taken in absolute value.
/// mu = 1 for the extremal itself and p* - 1 otherwise.
pub fn kernel_residual(p: &Params, profile: &RadialProfile, k: u32) -> Result<f64> {
    let (lam_k, _) = mode_lambda(k as i64, p.n)?;
    let mu = if profile.kind == ProfileKind::ExtremalU { 1.0 } else { p.pstar - 1.0 };
    let u = extremal_u(p, profile.lambda)?;
    let g = profile.gamma();
    let mut env = profile.clone();
    for term in env.series.0.iter_mut() {
        *term = crate::profiles::GammaPoly::constant(term.eval(g).abs());
    }
    let mut worst: f64 = 0.0;
    for r in log_space(1e-3, 1e3, 241) {
        let lhs = profile.weighted_bilaplacian(p, lam_k, r);
        let w = mu * r.powf(-p.alpha) * u.eval(r).powf(p.pstar - 2.0);
        let rhs = w * profile.eval(r);
        let scale = w * env.eval(r).abs();
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mu3Estimate {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    /// |mu3(nodes) - mu3(2 nodes)|.
    pub error_bar: f64,
    /// mu3 - (p* - 1) - error_bar.
    pub margin: f64,
}

pub fn mu3_estimate(p: &Params, nodes: usize) -> Result<Mu3Estimate> {
    let coarse = mode_eigenvalues(p, 0, 3, nodes)?;
    let fine = mode_eigenvalues(p, 0, 3, 2 * nodes)?;
    let e = &fine.eigenvalues;
    if e.len() < 3 {
        return Err(CknError::EigensolveFailure("fewer than three radial eigenvalues".into()));
    }
    let error_bar = (coarse.eigenvalues[2] - e[2]).abs();
    Ok(Mu3Estimate { mu1: e[0], mu2: e[1], mu3: e[2], error_bar, margin: e[2] - (p.pstar - 1.0) - error_bar })
}
