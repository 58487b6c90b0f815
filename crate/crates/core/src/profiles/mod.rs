//! Closed-form radial families and Euler-Lagrange residuals.
//!
//! Every family here has the shape `u(r) = A s^l F(y)` with `rho = lambda r`,
//! `s = rho^{1/q}`, `y = 1/(1+s^2)` and `F = sum_j f_j(gamma) y^{gamma+j}`,
//! `gamma = (M-4)/2 + l`. The coefficients `f_j` are kept as polynomials in
//! `gamma`, so the Sobolev-side operator acts on them exactly and identities
//! that cancel symbolically cancel to the last bit.

pub mod biradial;

use crate::error::{CknError, Result};
use crate::jet::Jet;
use crate::params::{effective_index, normalization_constant, Params};
use crate::radial::RadialFunction;
use serde::{Deserialize, Serialize};

pub use biradial::{biradial_residual, nonradial_branch, BiradialGrid, BiradialProfile, BiradialResidual};

/// Polynomial in gamma, ascending coefficients.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GammaPoly(pub Vec<f64>);

impl GammaPoly {
    pub fn constant(v: f64) -> Self {
        Self(vec![v])
    }

    pub fn eval(&self, g: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * g + c)
    }

    /// self * (gamma + j)
    fn times_shift(&self, j: f64) -> Self {
        let mut out = vec![0.0; self.0.len() + 1];
        for (i, c) in self.0.iter().enumerate() {
            out[i + 1] += c;
            out[i] += j * c;
        }
        Self(out)
    }

    fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|c| c * s).collect())
    }

    fn add_assign(&mut self, o: &Self) {
        if self.0.len() < o.0.len() {
            self.0.resize(o.0.len(), 0.0);
        }
        for (a, b) in self.0.iter_mut().zip(&o.0) {
            *a += b;
        }
    }

    fn is_zero(&self) -> bool {
        self.0.iter().all(|c| *c == 0.0)
    }
}

/// `F = sum_j f_j(gamma) y^{gamma + j}` on the Sobolev side.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct YSeries(pub Vec<GammaPoly>);

impl YSeries {
    pub fn from_reals(c: &[f64]) -> Self {
        Self(c.iter().map(|&v| GammaPoly::constant(v)).collect())
    }

    /// Radial Laplacian in dimension M' = 2 gamma + 4 written in t = s^2:
    /// D F = 4 t F'' + 2 M' F'. On y^{gamma+j} it gives
    /// 2(gamma+j)(2j-2) y^{gamma+j+1} - 4(gamma+j)(gamma+j+1) y^{gamma+j+2}.
    pub fn apply_d(&self) -> Self {
        let mut out = vec![GammaPoly::default(); self.0.len() + 2];
        for (j, f) in self.0.iter().enumerate() {
            if f.is_zero() {
                continue;
            }
            let jf = j as f64;
            let lin = f.times_shift(jf);
            if j != 1 {
                out[j + 1].add_assign(&lin.scaled(2.0 * (2.0 * jf - 2.0)));
            }
            out[j + 2].add_assign(&lin.times_shift(jf + 1.0).scaled(-4.0));
        }
        Self(out)
    }

    /// Evaluates with y given through ln y.
    pub fn eval(&self, gamma: f64, ln_y: f64) -> f64 {
        self.0
            .iter()
            .enumerate()
            .map(|(j, f)| {
                let c = f.eval(gamma);
                if c == 0.0 { 0.0 } else { c * ((gamma + j as f64) * ln_y).exp() }
            })
            .sum()
    }

    pub fn jet(&self, gamma: f64, y: &Jet) -> Jet {
        self.0.iter().enumerate().fold(Jet::constant(0.0), |acc, (j, f)| {
            let c = f.eval(gamma);
            if c == 0.0 { acc } else { acc + y.powf(gamma + j as f64).scale(c) }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    ExtremalU,
    ExtremalV,
    KernelZ0,
    KernelZkRadial(u32),
    DilationTangent,
    Custom,
}

/// A closed-form radial profile `A s^l F(y)` at scale lambda.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub params: Params,
    pub kind: ProfileKind,
    pub lambda: f64,
    pub amplitude: f64,
    /// Spherical-harmonic degree the profile belongs to.
    pub mode: u32,
    pub series: YSeries,
}

/// Point on the Sobolev side: ln y, s^l and the scale factors.
struct SobolevPoint {
    ln_y: f64,
    s_pow_l: f64,
}

impl RadialProfile {
    pub fn new(params: Params, kind: ProfileKind, lambda: f64, amplitude: f64, mode: u32, series: YSeries) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(CknError::NonpositiveScale(lambda));
        }
        Ok(Self { params, kind, lambda, amplitude, mode, series })
    }

    pub fn ell(&self) -> f64 {
        effective_index(&self.params, self.mode)
    }

    pub fn gamma(&self) -> f64 {
        self.params.c() + self.ell()
    }

    /// lambda_k for the profile's own mode.
    pub fn lambda_mode(&self) -> f64 {
        let k = self.mode as f64;
        k * (self.params.nf() - 2.0 + k)
    }

    fn point(&self, r: f64) -> SobolevPoint {
        let p = &self.params;
        let ln_t = p.b() * (self.lambda * r).ln();
        // ln(1 + T) without overflow
        let ln_1p_t = if ln_t > 30.0 { ln_t + (-ln_t).exp().ln_1p() } else { ln_t.exp().ln_1p() };
        let l = self.ell();
        SobolevPoint { ln_y: -ln_1p_t, s_pow_l: if l == 0.0 { 1.0 } else { (0.5 * l * ln_t).exp() } }
    }

    fn check_r(r: f64) -> Result<()> {
        if r > 0.0 && r.is_finite() {
            Ok(())
        } else {
            Err(CknError::NonpositiveRadius(r))
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r == 0.0 {
            return self.value_at_origin();
        }
        let pt = self.point(r);
        self.amplitude * pt.s_pow_l * self.series.eval(self.gamma(), pt.ln_y)
    }

    fn value_at_origin(&self) -> f64 {
        if self.ell() > 0.0 {
            return 0.0;
        }
        let g = self.gamma();
        self.amplitude * self.series.0.iter().map(|f| f.eval(g)).sum::<f64>()
    }

    /// r^alpha L_k u, evaluated on the Sobolev side.
    pub fn weighted_laplacian_exact(&self, r: f64) -> f64 {
        let p = &self.params;
        let pt = self.point(r);
        let df = self.series.apply_d();
        let scale = self.lambda.powf(p.b()) / (p.q * p.q);
        scale * self.amplitude * pt.s_pow_l * df.eval(self.gamma(), pt.ln_y)
    }

    /// L_k(r^alpha L_k u) = r^{-alpha} lambda^{4-2alpha} q^{-4} A s^l D^2 F.
    pub fn weighted_bilaplacian_exact(&self, r: f64) -> f64 {
        let p = &self.params;
        let pt = self.point(r);
        let d2 = self.series.apply_d().apply_d();
        let scale = r.powf(-p.alpha) * self.lambda.powf(2.0 * p.b()) / p.q.powi(4);
        scale * self.amplitude * pt.s_pow_l * d2.eval(self.gamma(), pt.ln_y)
    }

    /// Same profile multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self { amplitude: self.amplitude * c, kind: ProfileKind::Custom, ..self.clone() }
    }
}

impl RadialFunction for RadialProfile {
    fn jet(&self, r: f64) -> Jet {
        let p = &self.params;
        let rho = Jet::var(r) * self.lambda;
        let t = rho.powf(p.b());
        let y = (t + 1.0).recip();
        let mut f = self.series.jet(self.gamma(), &y);
        let l = self.ell();
        if l != 0.0 {
            f = f * rho.powf(0.5 * l * p.b());
        }
        f.scale(self.amplitude)
    }

    fn value(&self, r: f64) -> f64 {
        self.eval(r)
    }

    fn laplacian(&self, p: &Params, lam: f64, r: f64) -> f64 {
        if *p == self.params && lam == self.lambda_mode() {
            r.powf(-p.alpha) * self.weighted_laplacian_exact(r)
        } else {
            self.jet(r).radial_laplacian(r, p.nf(), lam).value()
        }
    }

    fn weighted_bilaplacian(&self, p: &Params, lam: f64, r: f64) -> f64 {
        if *p == self.params && lam == self.lambda_mode() {
            self.weighted_bilaplacian_exact(r)
        } else {
            let g = self.jet(r).radial_laplacian(r, p.nf(), lam) * Jet::var(r).powf(p.alpha);
            g.radial_laplacian(r, p.nf(), lam).value()
        }
    }
}

/// U_lambda = C_{N,alpha} lambda^{(N-4+alpha)/2} (1 + (lambda r)^{2-alpha})^{-(N-4+alpha)/(2-alpha)}.
pub fn extremal_u(p: &Params, lambda: f64) -> Result<RadialProfile> {
    let amp = normalization_constant(p) * lambda.powf(0.5 * p.a());
    RadialProfile::new(*p, ProfileKind::ExtremalU, lambda, amp, 0, YSeries::from_reals(&[1.0]))
}

/// A lambda^{(N-4+alpha)/2} (1 + (lambda r)^{2-alpha})^{-(N-4+alpha)/(2-alpha)} for arbitrary A.
pub fn extremal_v(p: &Params, lambda: f64, a: f64) -> Result<RadialProfile> {
    let amp = a * lambda.powf(0.5 * p.a());
    RadialProfile::new(*p, ProfileKind::ExtremalV, lambda, amp, 0, YSeries::from_reals(&[1.0]))
}

/// Z0 = (1 - r^{2-alpha}) / (1 + r^{2-alpha})^{(N-2)/(2-alpha)} = (2y - 1) y^c.
pub fn kernel_z0(p: &Params) -> RadialProfile {
    RadialProfile::new(*p, ProfileKind::KernelZ0, 1.0, 1.0, 0, YSeries::from_reals(&[-1.0, 2.0])).expect("unit scale")
}

/// Radial factor r^k / (1 + r^{2-alpha})^{(N-2)/(2-alpha)} of the mode-k kernel, alpha = -2(k-1).
pub fn kernel_zk_radial(p: &Params, k: u32) -> Result<RadialProfile> {
    if k == 0 || p.even_k != Some(k) {
        return Err(CknError::NotEvenCase { alpha: p.alpha, k });
    }
    RadialProfile::new(*p, ProfileKind::KernelZkRadial(k), 1.0, 1.0, k, YSeries::from_reals(&[1.0]))
}

/// dU_lambda/dlambda = C (N-4+alpha)/2 lambda^{(N-4+alpha)/2 - 1} (2y - 1) y^c.
pub fn dilation_tangent(p: &Params, lambda: f64) -> Result<RadialProfile> {
    let amp = normalization_constant(p) * 0.5 * p.a() * lambda.powf(0.5 * p.a() - 1.0);
    RadialProfile::new(*p, ProfileKind::DilationTangent, lambda, amp, 0, YSeries::from_reals(&[-1.0, 2.0]))
}

/// Pointwise Euler-Lagrange residual with its scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElResidual {
    pub r: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// |residual| / max(|lhs|, |rhs|).
    pub relative: f64,
}

/// Delta(|x|^alpha Delta u) - |x|^{-alpha} u_+^{p*-1} at r.
pub fn el_residual(p: &Params, u: &dyn RadialFunction, r: f64) -> Result<ElResidual> {
    RadialProfile::check_r(r)?;
    let lhs = u.weighted_bilaplacian(p, 0.0, r);
    let rhs = r.powf(-p.alpha) * u.value(r).max(0.0).powf(p.pstar - 1.0);
    let residual = lhs - rhs;
    let scale = lhs.abs().max(rhs.abs());
    Ok(ElResidual { r, lhs, rhs, residual, relative: if scale > 0.0 { residual.abs() / scale } else { 0.0 } })
}

/// Largest relative residual over `n` log-spaced radii in [r0, r1].
pub fn el_residual_sweep(p: &Params, u: &dyn RadialFunction, r0: f64, r1: f64, n: usize) -> Result<f64> {
    log_space(r0, r1, n).into_iter().try_fold(0.0f64, |m, r| Ok(m.max(el_residual(p, u, r)?.relative)))
}

pub fn log_space(r0: f64, r1: f64, n: usize) -> Vec<f64> {
    let (a, b) = (r0.ln(), r1.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n.max(2) - 1) as f64).exp()).collect()
}
