use anyhow::{bail, Context};
use serde::Serialize;
use std::fmt;

/// Thresholds applied by every command. Echoed verbatim in each report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub constant_forms_rel: f64,
    pub classical_rel: f64,
    pub el_residual_rel: f64,
    pub rayleigh_rel: f64,
    pub transform_rel: f64,
    pub eigenvalue_rel: f64,
    pub eigen_residual: f64,
    pub kernel_hit_rel: f64,
    pub kernel_profile_residual: f64,
    pub remainder_rel: f64,
    pub perturb_residual: f64,
    pub contraction_limit: f64,
    pub branch_min_order: f64,
}

pub const TOLERANCES: Tolerances = Tolerances {
    constant_forms_rel: 1e-12,
    classical_rel: 1e-12,
    el_residual_rel: 1e-9,
    rayleigh_rel: 1e-8,
    transform_rel: 1e-7,
    eigenvalue_rel: 1e-4,
    eigen_residual: 1e-8,
    kernel_hit_rel: 1e-3,
    kernel_profile_residual: 1e-8,
    remainder_rel: 0.05,
    perturb_residual: 1e-6,
    contraction_limit: 0.9,
    branch_min_order: 1.9,
};

/// Bad input. Mapped to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Fixed-point decimal: value = digits * 10^-scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Fixed {
    digits: i128,
    scale: u32,
}

fn parse_fixed(s: &str) -> anyhow::Result<Fixed> {
    let t = s.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !int.bytes().chain(frac.bytes()).all(|c| c.is_ascii_digit()) {
        bail!("'{s}' is not a plain decimal");
    }
    if frac.len() > 12 || int.len() > 12 {
        bail!("'{s}' has too many digits");
    }
    let mag: i128 = format!("{int}{frac}").parse().with_context(|| format!("'{s}'"))?;
    Ok(Fixed { digits: if neg { -mag } else { mag }, scale: frac.len() as u32 })
}

fn rescale(x: Fixed, scale: u32) -> i128 {
    x.digits * 10i128.pow(scale - x.scale)
}

fn format_fixed(v: i128, scale: u32) -> String {
    let sign = if v < 0 { "-" } else { "" };
    let mag = v.unsigned_abs();
    let den = 10u128.pow(scale);
    let (int, frac) = (mag / den, mag % den);
    let frac = format!("{frac:0width$}", width = scale as usize);
    let frac = frac.trim_end_matches('0');
    if frac.is_empty() {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

pub const MAX_SCAN_CELLS: usize = 10_000;

/// Expands `a0:a1:step` into exact decimal strings a0, a0 + step, ... up to a1.
pub fn scan_alphas(spec: &str) -> anyhow::Result<Vec<String>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [a0, a1, st] = parts[..] else {
        return Err(usage(format!("--scan-alpha expects a0:a1:step, got '{spec}'")));
    };
    let (a0, a1, st) = (parse_fixed(a0), parse_fixed(a1), parse_fixed(st));
    let (a0, a1, st) = match (a0, a1, st) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        (Err(e), ..) | (_, Err(e), _) | (.., Err(e)) => return Err(usage(format!("--scan-alpha: {e}"))),
    };
    let scale = a0.scale.max(a1.scale).max(st.scale);
    let (lo, hi, step) = (rescale(a0, scale), rescale(a1, scale), rescale(st, scale));
    if step == 0 || (hi - lo).signum() * step.signum() < 0 {
        return Err(usage(format!("--scan-alpha step {spec} does not reach the end point")));
    }
    let count = (hi - lo) / step + 1;
    if count as usize > MAX_SCAN_CELLS {
        return Err(usage(format!("--scan-alpha would produce {count} cells (max {MAX_SCAN_CELLS})")));
    }
    Ok((0..count).map(|i| format_fixed(lo + i * step, scale)).collect())
}

/// Canonical spelling of an alpha argument ("-2.50" -> "-2.5", "+1" -> "1").
pub fn canonical_alpha(s: &str) -> anyhow::Result<String> {
    let x = parse_fixed(s).map_err(|e| usage(format!("--alpha: {e}")))?;
    Ok(format_fixed(x.digits, x.scale))
}
