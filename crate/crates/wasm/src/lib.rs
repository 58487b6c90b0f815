//! Browser bindings. Every export takes plain numbers plus alpha as a decimal
//! string and returns a JSON document; `www/index.html` draws them.

use ckn_core::params::{best_constant_radial, Params};
use ckn_core::profiles::{extremal_u, log_space};
use ckn_core::radial::RadialFunction;
use ckn_core::reduction::{reduced_energy, PerturbationProblem, LAMBDA_GRID};
use ckn_core::spectrum::mode_eigenvalues;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_NODES: usize = 800;

#[derive(Debug, Serialize)]
pub struct ExtremalCurve {
    pub pstar: f64,
    pub m: f64,
    pub s_rad: f64,
    pub lambda: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct ModeSpectrum {
    pub k: u32,
    pub target: f64,
    pub eigenvalues: Vec<f64>,
    pub kernel_hit: bool,
    pub r: Vec<f64>,
    /// Eigenfunctions at scale one, each normalised to max |f| = 1 on the plotted range.
    pub eigenfunctions: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct EnergyCurve {
    pub eps: f64,
    pub j0: f64,
    pub lambda: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Grid point with the largest |Gamma - J0|.
    pub extremum: Option<(f64, f64)>,
}

fn params(n: u32, alpha: &str) -> Result<Params, String> {
    Params::from_decimal(n as usize, alpha).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

pub fn extremal_curve_json(n: u32, alpha: &str, lambda: f64, points: usize) -> Result<String, String> {
    let p = params(n, alpha)?;
    let u = extremal_u(&p, lambda).map_err(|e| e.to_string())?;
    let r = log_space(1e-3 * lambda, 1e3 * lambda, points.clamp(2, 2000));
    let vals = r.iter().map(|&x| u.value(x)).collect();
    to_json(&ExtremalCurve { pstar: p.pstar, m: p.m, s_rad: best_constant_radial(&p), lambda, r, u: vals })
}

pub fn mode_spectrum_json(n: u32, alpha: &str, k: u32, num_eigs: usize, nodes: usize) -> Result<String, String> {
    let p = params(n, alpha)?;
    let s = mode_eigenvalues(&p, k, num_eigs.clamp(1, 12), nodes.min(MAX_NODES)).map_err(|e| e.to_string())?;
    let target = p.pstar - 1.0;
    let kernel_hit = s.eigenvalues.iter().any(|mu| (mu - target).abs() <= 1e-3 * target);
    let r = log_space(1e-2, 1e2, 200);
    let mut eigenfunctions = Vec::new();
    for j in 0..s.eigenvalues.len().min(4) {
        let f = s.eigenfunction(j, 1.0, 1.0).map_err(|e| e.to_string())?;
        let v: Vec<f64> = r.iter().map(|&x| f.value(x)).collect();
        let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        eigenfunctions.push(v.into_iter().map(|x| if peak > 0.0 { x / peak } else { x }).collect());
    }
    to_json(&ModeSpectrum { k, target, eigenvalues: s.eigenvalues, kernel_hit, r, eigenfunctions })
}

pub fn energy_curve_json(n: u32, alpha: &str, eps: f64, points: usize) -> Result<String, String> {
    let p = params(n, alpha)?;
    let pp = PerturbationProblem::with_bump(&p, eps).map_err(|e| e.to_string())?;
    let (l0, l1, _) = LAMBDA_GRID;
    let lambda = log_space(l0, l1, points.clamp(3, 129));
    let gamma = lambda.iter().map(|&l| reduced_energy(&pp, l)).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    let j0 = pp.j0();
    let extremum = lambda
        .iter()
        .zip(&gamma)
        .max_by(|a, b| (a.1 - j0).abs().total_cmp(&(b.1 - j0).abs()))
        .filter(|(_, g)| (*g - j0).abs() > 1e-13 * j0)
        .map(|(l, g)| (*l, *g));
    to_json(&EnergyCurve { eps, j0, lambda, gamma, extremum })
}

#[wasm_bindgen]
pub fn extremal_curve(n: u32, alpha: &str, lambda: f64, points: usize) -> Result<String, JsError> {
    extremal_curve_json(n, alpha, lambda, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn mode_spectrum(n: u32, alpha: &str, k: u32, num_eigs: usize, nodes: usize) -> Result<String, JsError> {
    mode_spectrum_json(n, alpha, k, num_eigs, nodes).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn energy_curve(n: u32, alpha: &str, eps: f64, points: usize) -> Result<String, JsError> {
    energy_curve_json(n, alpha, eps, points).map_err(|e| JsError::new(&e))
}
