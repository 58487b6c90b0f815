//! Validated problem parameters and every closed-form constant.

use crate::error::{CknError, Result};
use crate::special::{gamma, harmonic_multiplicity, ln_gamma, sphere_area};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Tolerance used to recognise alpha = -2(k-1) from a float.
pub const EVEN_ALPHA_TOL: f64 = 1e-12;

/// Dimension `N`, weight exponent `alpha` and the derived exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(rename = "N")]
    pub n: usize,
    pub alpha: f64,
    pub pstar: f64,
    pub q: f64,
    #[serde(rename = "M")]
    pub m: f64,
    /// `Some(k)` when alpha = -2(k-1).
    pub even_k: Option<u32>,
}

impl Params {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        let even_k = detect_even_float(alpha);
        Self::build(n, alpha, even_k)
    }

    /// Parses alpha from a decimal string; the even case is decided on the
    /// decimal digits, not on the rounded float.
    pub fn from_decimal(n: usize, alpha: &str) -> Result<Self> {
        let s = alpha.trim();
        let value: f64 = s.parse().map_err(|_| CknError::Parse(format!("alpha '{s}' is not a decimal number")))?;
        if !value.is_finite() || s.contains(['e', 'E']) {
            return Err(CknError::Parse(format!("alpha '{s}' must be a plain decimal")));
        }
        Self::build(n, value, detect_even_decimal(s))
    }

    fn build(n: usize, alpha: f64, even_k: Option<u32>) -> Result<Self> {
        if n < 3 {
            return Err(CknError::DimensionTooSmall(n, 3));
        }
        let nf = n as f64;
        let lo = 4.0 - nf;
        if !(alpha > lo && alpha < 2.0) {
            return Err(CknError::AlphaOutOfRange { n, alpha, lo });
        }
        let b = 2.0 - alpha;
        let q = 2.0 / b;
        let m = 2.0 * (nf - alpha) / b;
        let pstar = 2.0 * (nf - alpha) / (nf - 4.0 + alpha);
        Ok(Self { n, alpha, pstar, q, m, even_k })
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// N - 4 + alpha, the decay exponent of the extremal.
    pub fn a(&self) -> f64 {
        self.nf() - 4.0 + self.alpha
    }

    /// 2 - alpha.
    pub fn b(&self) -> f64 {
        2.0 - self.alpha
    }

    /// (M - 4)/2, the Sobolev-side bubble exponent.
    pub fn c(&self) -> f64 {
        0.5 * (self.m - 4.0)
    }

    /// Surface area of S^{N-1}.
    pub fn omega(&self) -> f64 {
        sphere_area(self.nf())
    }

    /// (M-4)(M-2)M(M+2) = q^4 C_{N,alpha}^{p*-2}.
    pub fn k_const(&self) -> f64 {
        let m = self.m;
        (m - 4.0) * (m - 2.0) * m * (m + 2.0)
    }
}

fn detect_even_float(alpha: f64) -> Option<u32> {
    if alpha > EVEN_ALPHA_TOL {
        return None;
    }
    let k = 1.0 - alpha / 2.0;
    let kr = k.round();
    ((k - kr).abs() * 2.0 <= EVEN_ALPHA_TOL && kr >= 1.0).then_some(kr as u32)
}

fn detect_even_decimal(s: &str) -> Option<u32> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if !frac.bytes().all(|c| c == b'0') || int.is_empty() && frac.is_empty() {
        return None;
    }
    let digits = int.trim_start_matches('0');
    if digits.is_empty() {
        return Some(1);
    }
    if !neg || digits.len() > 9 {
        return None;
    }
    let v: u32 = digits.parse().ok()?;
    (v % 2 == 0).then_some(v / 2 + 1)
}

/// C(M) = (M-4)(M-2)M(M+2) [Gamma(M/2)^2 / (2 Gamma(M))]^{4/M}.
pub fn sobolev_constant_c(m: f64) -> Result<f64> {
    if !(m > 4.0) {
        return Err(CknError::MOutOfRange(m));
    }
    let poly = (m - 4.0) * (m - 2.0) * m * (m + 2.0);
    let ln_bracket = 2.0 * ln_gamma(0.5 * m) - 2f64.ln() - ln_gamma(m);
    let c = poly * (4.0 / m * ln_bracket).exp();
    debug_assert!((c / sobolev_constant_c_alt(m)? - 1.0).abs() < 1e-12);
    Ok(c)
}

/// The same constant written through the sphere area of S^{M-1}:
/// pi^2 (M+2)M(M-2)(M-4) (Gamma(M/2)/Gamma(M))^{4/M} (2 pi^{M/2}/Gamma(M/2))^{-4/M}.
pub fn sobolev_constant_c_alt(m: f64) -> Result<f64> {
    if !(m > 4.0) {
        return Err(CknError::MOutOfRange(m));
    }
    let poly = (m + 2.0) * m * (m - 2.0) * (m - 4.0);
    let ratio = (gamma(0.5 * m) / gamma(m)).powf(4.0 / m);
    let area = (2.0 * PI.powf(0.5 * m) / gamma(0.5 * m)).powf(-4.0 / m);
    Ok(PI * PI * poly * ratio * area)
}

/// Classical fourth-order Sobolev constant pi^2 (N-4)(N-2)N(N+2) [Gamma(N/2)/Gamma(N)]^{4/N}.
pub fn classical_sobolev_constant(n: f64) -> f64 {
    PI * PI * (n - 4.0) * (n - 2.0) * n * (n + 2.0) * (gamma(0.5 * n) / gamma(n)).powf(4.0 / n)
}

/// Sharp radial constant q^{-3-(M-4)/M} omega^{1-2/p*} C(M).
pub fn best_constant_radial(p: &Params) -> f64 {
    let expo = -3.0 - (p.m - 4.0) / p.m;
    let c = sobolev_constant_c(p.m).expect("M > 4 for valid Params");
    p.q.powf(expo) * p.omega().powf(1.0 - 2.0 / p.pstar) * c
}

/// The prefactor written with exponent (4N-4-2alpha)/(N-4). Undefined for N = 4.
pub fn alt_prefactor_constant(p: &Params) -> Option<f64> {
    if p.n == 4 {
        return None;
    }
    let nf = p.nf();
    let expo = (4.0 * nf - 4.0 - 2.0 * p.alpha) / (nf - 4.0);
    let c = sobolev_constant_c(p.m).ok()?;
    Some((p.b() / 2.0).powf(expo) * p.omega().powf((4.0 - 2.0 * p.alpha) / (nf - p.alpha)) * c)
}

/// Both forms of the sharp constant and their relative deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrefactorComparison {
    pub used: f64,
    pub alt: Option<f64>,
    pub rel_deviation: Option<f64>,
}

pub fn compare_prefactor_forms(p: &Params) -> PrefactorComparison {
    let used = best_constant_radial(p);
    let alt = alt_prefactor_constant(p);
    PrefactorComparison { used, alt, rel_deviation: alt.map(|v| (v - used).abs() / used) }
}

/// C_{N,alpha} = [(N-4+alpha)(N-2)(N-alpha)(N+2-2alpha)]^{(N-4+alpha)/(8-4alpha)}.
pub fn normalization_constant(p: &Params) -> f64 {
    let (nf, al) = (p.nf(), p.alpha);
    let base = (nf - 4.0 + al) * (nf - 2.0) * (nf - al) * (nf + 2.0 - 2.0 * al);
    base.powf((nf - 4.0 + al) / (8.0 - 4.0 * al))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EvenAlphaInfo {
    pub is_even_case: bool,
    pub k: Option<u32>,
    pub multiplicity: Option<u128>,
    pub kernel_dim: u128,
}

pub fn even_alpha_info(p: &Params) -> Result<EvenAlphaInfo> {
    Ok(match p.even_k {
        None => EvenAlphaInfo { is_even_case: false, k: None, multiplicity: None, kernel_dim: 1 },
        Some(k) => {
            let mult = harmonic_multiplicity(p.n as u32, k)?;
            EvenAlphaInfo { is_even_case: true, k: Some(k), multiplicity: Some(mult), kernel_dim: 1 + mult }
        }
    })
}

/// (lambda_k, multiplicity) for the k-th eigenspace of the Laplace-Beltrami operator on S^{N-1}.
pub fn mode_lambda(k: i64, n: usize) -> Result<(f64, u128)> {
    if k < 0 {
        return Err(CknError::NegativeMode(k));
    }
    if n < 3 {
        return Err(CknError::DimensionTooSmall(n, 3));
    }
    let kf = k as f64;
    let k32 = u32::try_from(k).map_err(|_| CknError::Overflow("mode index"))?;
    Ok((kf * (n as f64 - 2.0 + kf), harmonic_multiplicity(n as u32, k32)?))
}

/// Effective angular index l = q k on the Sobolev side, l(l+M-2) = q^2 lambda_k.
pub fn effective_index(p: &Params, k: u32) -> f64 {
    p.q * k as f64
}

/// Whether q^2 lambda_k = M - 1 (mode k carries kernel at mu = p* - 1).
pub fn kernel_condition(p: &Params, k: u32) -> bool {
    if k == 0 {
        return false;
    }
    let kf = k as f64;
    let lam = kf * (p.nf() - 2.0 + kf);
    (p.q * p.q * lam - (p.m - 1.0)).abs() <= 1e-9 * (p.m - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn derived_exponents() {
        let p = Params::new(5, 1.0).unwrap();
        assert_eq!((p.pstar, p.q, p.m), (4.0, 2.0, 8.0));
        let p = Params::new(6, 0.0).unwrap();
        assert_eq!((p.pstar, p.q, p.m), (6.0, 1.0, 6.0));
        assert!(matches!(Params::new(3, 0.0), Err(CknError::AlphaOutOfRange { .. })));
        assert!(matches!(Params::new(2, 1.0), Err(CknError::DimensionTooSmall(2, 3))));
        assert!(Params::new(5, 2.0).is_err());
        assert!(Params::new(5, -1.0).is_err());
        assert!(Params::new(5, f64::NAN).is_err());
    }

    #[test]
    fn m_identity_and_pstar_relation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.gen_range(3..13usize);
            let lo = 4.0 - n as f64;
            let alpha = rng.gen_range(lo + 1e-3..2.0 - 1e-3);
            let p = Params::new(n, alpha).unwrap();
            let nf = n as f64;
            assert_relative_eq!(p.m, (nf - 1.0) * p.q - (p.q - 1.0) + 1.0, max_relative = 1e-12);
            assert_relative_eq!((p.pstar - 2.0) * (nf - 4.0 + alpha), 8.0 - 4.0 * alpha, max_relative = 1e-12);
            assert_relative_eq!(2.0 * p.m / (p.m - 4.0), p.pstar, max_relative = 1e-12);
            assert_relative_eq!(p.m / p.q - 1.0, nf - 1.0 - alpha, max_relative = 1e-12, epsilon = 1e-12);
            // q^4 (p*-1) C^{p*-2} = (M+4)(M-2)M(M+2)
            let c = normalization_constant(&p);
            let m = p.m;
            assert_relative_eq!(
                p.q.powi(4) * (p.pstar - 1.0) * c.powf(p.pstar - 2.0),
                (m + 4.0) * (m - 2.0) * m * (m + 2.0),
                max_relative = 1e-10
            );
            assert!(p.m > 4.0 && p.pstar > 2.0);
        }
    }

    #[test]
    fn sobolev_constant_values() {
        let table = [
            (4.5, 2.783717552701041),
            (5.0, 7.481940131235264),
            (6.0, 25.05515290348073),
            (8.0, 114.7419464961018),
            (10.7, 452.0991785254945),
        ];
        for (m, v) in table {
            let c = sobolev_constant_c(m).unwrap();
            assert_relative_eq!(c, v, max_relative = 1e-13);
            assert_relative_eq!(c, sobolev_constant_c_alt(m).unwrap(), max_relative = 1e-12);
        }
        assert_relative_eq!(sobolev_constant_c(8.0).unwrap(), 1920.0 * (36.0f64 / 10080.0).sqrt(), max_relative = 1e-14);
        assert!(matches!(sobolev_constant_c(4.0), Err(CknError::MOutOfRange(_))));
    }

    #[test]
    fn radial_constants_and_normalisation() {
        let table = [
            (5, 0.0, 102.3832734405829, 1.789157866970849),
            (5, 1.0, 52.02971740140652, 10.95445115010333),
            (5, 0.5, 84.97286351390753, 3.320045759100965),
            (6, -1.0, 279.0261460587200, 1.599299626962385),
            (3, 1.5, 1.333021013785997, 1.106681919700322),
            (7, -2.0, 539.2750738941943, 1.489180160169204),
            (6, 0.0, 247.2844473661602, 4.426727678801286),
        ];
        for (n, al, s, c) in table {
            let p = Params::new(n, al).unwrap();
            assert_relative_eq!(best_constant_radial(&p), s, max_relative = 1e-12);
            assert_relative_eq!(normalization_constant(&p), c, max_relative = 1e-13);
        }
        assert_relative_eq!(normalization_constant(&Params::new(5, 1.0).unwrap()), 120f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(normalization_constant(&Params::new(5, 0.0).unwrap()), 105f64.powf(0.125), max_relative = 1e-15);
    }

    #[test]
    fn classical_constant_at_alpha_zero() {
        let table = [
            102.38327344058293,
            247.28444736616021,
            431.53266467865956,
            653.82471182644696,
            913.53384477999401,
            1210.3236298262271,
            1543.9981687600297,
            1914.4360194261035,
        ];
        for (i, v) in table.into_iter().enumerate() {
            let n = 5 + i;
            let p = Params::new(n, 0.0).unwrap();
            assert_relative_eq!(best_constant_radial(&p), v, max_relative = 1e-12);
            assert_relative_eq!(classical_sobolev_constant(n as f64), v, max_relative = 1e-12);
        }
    }

    #[test]
    fn alt_form_deviation() {
        let table = [
            (5, 1.0, 0.035928287107),
            (5, 0.5, 2.96252251807),
            (6, -1.0, 6748.6837772901),
            (3, 1.5, 138676.72925501),
            (7, -2.0, 40261.122177097),
        ];
        for (n, al, v) in table {
            let p = Params::new(n, al).unwrap();
            let chk = compare_prefactor_forms(&p);
            assert_relative_eq!(chk.alt.unwrap(), v, max_relative = 1e-10);
            assert!(chk.rel_deviation.unwrap() > 0.5);
        }
        let p = Params::new(7, 0.0).unwrap();
        assert!(compare_prefactor_forms(&p).rel_deviation.unwrap() < 1e-14);
        assert!(alt_prefactor_constant(&Params::new(4, 1.0).unwrap()).is_none());
    }

    #[test]
    fn even_case_detection() {
        let info = even_alpha_info(&Params::new(5, 1.0).unwrap()).unwrap();
        assert_eq!(info.kernel_dim, 1);
        assert!(!info.is_even_case);
        let info = even_alpha_info(&Params::new(5, 0.0).unwrap()).unwrap();
        assert_eq!((info.k, info.multiplicity, info.kernel_dim), (Some(1), Some(5), 6));
        let info = even_alpha_info(&Params::new(7, -2.0).unwrap()).unwrap();
        assert_eq!((info.k, info.multiplicity, info.kernel_dim), (Some(2), Some(27), 28));
        assert_eq!(Params::from_decimal(7, "-2.000").unwrap().even_k, Some(2));
        assert_eq!(Params::from_decimal(7, "-2.0000000000001").unwrap().even_k, None);
        assert_eq!(Params::from_decimal(5, "0").unwrap().even_k, Some(1));
        assert_eq!(Params::from_decimal(5, "-0.0").unwrap().even_k, Some(1));
        assert_eq!(Params::from_decimal(9, "-4").unwrap().even_k, Some(3));
        assert_eq!(Params::from_decimal(9, "-3").unwrap().even_k, None);
        assert_eq!(Params::from_decimal(5, "1").unwrap().even_k, None);
        assert!(Params::from_decimal(5, "abc").is_err());
        assert!(Params::from_decimal(5, "1e-1").is_err());
    }

    #[test]
    fn kernel_condition_iff_even_alpha() {
        for n in 3..10usize {
            let lo = 4.0 - n as f64;
            let mut alpha = lo + 0.25;
            while alpha < 2.0 {
                let p = Params::new(n, alpha).unwrap();
                for k in 1..=6u32 {
                    let even = (alpha + 2.0 * (k as f64 - 1.0)).abs() < 1e-12;
                    assert_eq!(kernel_condition(&p, k), even, "n={n} alpha={alpha} k={k}");
                    // l = 1 exactly in the kernel case
                    if even {
                        assert_relative_eq!(effective_index(&p, k), 1.0, max_relative = 1e-14);
                    }
                }
                alpha += 0.25;
            }
        }
    }

    #[test]
    fn mode_lambdas() {
        assert_eq!(mode_lambda(0, 5).unwrap(), (0.0, 1));
        assert_eq!(mode_lambda(1, 5).unwrap(), (4.0, 5));
        assert_eq!(mode_lambda(2, 7).unwrap(), (14.0, 27));
        assert!(matches!(mode_lambda(-1, 5), Err(CknError::NegativeMode(-1))));
    }
}
