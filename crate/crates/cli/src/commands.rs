use crate::config::TOLERANCES as TOL;
use crate::report::{num, Check, Report, Table};
use ckn_core::emden::{norm_identity_check, star_identity_check};
use ckn_core::jet::Jet;
use ckn_core::params::{
    best_constant_radial, classical_sobolev_constant, compare_prefactor_forms, even_alpha_info, kernel_condition,
    normalization_constant, sobolev_constant_c, sobolev_constant_c_alt, Params,
};
use ckn_core::profiles::biradial::{biradial_convergence, nonradial_branch};
use ckn_core::profiles::{el_residual, el_residual_sweep, extremal_u, kernel_z0, kernel_zk_radial, log_space};
use ckn_core::radial::{rayleigh_quotient, JetFn, RadialFunction, RadialGrid};
use ckn_core::reduction::{find_perturbed_solution, radial_direction, remainder_scan, HFn, PerturbationProblem};
use ckn_core::spectrum::{kernel_residual, mode_eigenvalues, verify_kernel};
use ckn_core::Result as CoreResult;
use serde_json::{json, Value};

/// Runs `f`, turning a numerical failure into a failed report.
fn guard(f: impl FnOnce() -> CoreResult<Report>) -> Report {
    f().unwrap_or_else(|e| Report::failed("computation", e))
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

pub fn constants(p: &Params) -> Report {
    guard(|| {
        let c_m = sobolev_constant_c(p.m)?;
        let c_alt = sobolev_constant_c_alt(p.m)?;
        let forms = (c_m - c_alt).abs() / c_m;
        let s = best_constant_radial(p);
        let alt = compare_prefactor_forms(p);
        let cn = normalization_constant(p);
        let even = even_alpha_info(p)?;
        let mut checks = vec![Check::at_most("C(M) closed forms agree", forms, TOL.constant_forms_rel)];
        let mut result = json!({
            "pstar": p.pstar,
            "q": p.q,
            "M": p.m,
            "C_M": c_m,
            "S_rad": s,
            "S_alt_form": alt.alt,
            "alt_form_rel_deviation": alt.rel_deviation,
            "C_N_alpha": cn,
            "even_alpha": to_value(&even),
            "kernel_dim": to_value(&even.kernel_dim),
        });
        let mut table = Table::new(&["name", "value"]);
        for (k, v) in [("pstar", p.pstar), ("q", p.q), ("M", p.m), ("C_M", c_m), ("S_rad", s), ("C_N_alpha", cn)] {
            table.push(vec![k.into(), num(v)]);
        }
        if let Some(v) = alt.alt {
            table.push(vec!["S_alt_form".into(), num(v)]);
        }
        table.push(vec!["kernel_dim".into(), even.kernel_dim.to_string()]);
        if p.alpha == 0.0 {
            let classical = classical_sobolev_constant(p.nf());
            let dev = (s - classical).abs() / classical;
            result["S_classical"] = json!(classical);
            table.push(vec!["S_classical".into(), num(classical)]);
            checks.push(Check::at_most("S_rad matches the classical constant", dev, TOL.classical_rel));
        }
        Ok(Report { result, checks, table })
    })
}

pub fn verify_extremal(p: &Params, amplitude: f64) -> Report {
    guard(|| {
        let u = extremal_u(p, 1.0)?.scaled(amplitude);
        let g = RadialGrid::for_params(p);
        let sweep = el_residual_sweep(p, &u, 1e-3, 1e3, 400)?;
        let s = best_constant_radial(p);
        let rq = rayleigh_quotient(p, &u, &g)?;
        let rq_dev = (rq - s).abs() / s;
        let mut table = Table::new(&["r", "lhs", "rhs", "relative"]);
        for r in log_space(1e-3, 1e3, 13) {
            let e = el_residual(p, &u, r)?;
            table.push(vec![num(r), num(e.lhs), num(e.rhs), num(e.relative)]);
        }
        let result = json!({
            "amplitude": amplitude,
            "el_residual_max": sweep,
            "sweep": { "r_min": 1e-3, "r_max": 1e3, "points": 400 },
            "rayleigh_quotient": rq,
            "S_rad": s,
            "rayleigh_rel_deviation": rq_dev,
        });
        let checks = vec![
            Check::at_most("Euler-Lagrange residual", sweep, TOL.el_residual_rel),
            Check::at_most("Rayleigh quotient equals S_rad", rq_dev, TOL.rayleigh_rel),
        ];
        Ok(Report { result, checks, table })
    })
}

pub fn transform_check(p: &Params) -> Report {
    guard(|| {
        let g = RadialGrid::for_params(p);
        let u = extremal_u(p, 1.0)?;
        let gauss = JetFn(|r: Jet| (-(r * r)).exp());
        let mut rows = Vec::new();
        let mut table = Table::new(&["function", "identity", "lhs", "rhs", "rel_err"]);
        let mut worst: f64 = 0.0;
        for (fname, f) in [("extremal", &u as &dyn RadialFunction), ("gaussian", &gauss)] {
            for (iname, c) in [("hessian_norm", norm_identity_check(p, f, &g)?), ("star_norm", star_identity_check(p, f, &g)?)] {
                worst = worst.max(c.rel_err);
                rows.push(json!({ "function": fname, "identity": iname, "lhs": c.lhs, "rhs": c.rhs, "rel_err": c.rel_err }));
                table.push(vec![fname.into(), iname.into(), num(c.lhs), num(c.rhs), num(c.rel_err)]);
            }
        }
        let checks = vec![Check::at_most("transform identities", worst, TOL.transform_rel)];
        Ok(Report { result: json!({ "identities": rows, "max_rel_err": worst }), checks, table })
    })
}

pub fn spectrum(p: &Params, k: u32, num_eigs: usize, nodes: usize) -> Report {
    guard(|| {
        let s = mode_eigenvalues(p, k, num_eigs, nodes)?;
        let target = p.pstar - 1.0;
        let nearest = s.eigenvalues.iter().copied().min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()));
        let numeric = nearest.is_some_and(|mu| (mu - target).abs() <= TOL.kernel_hit_rel * target);
        let analytic = k == 0 || kernel_condition(p, k);
        let worst_res = s.residuals.iter().copied().fold(0.0, f64::max);
        let mut checks = vec![
            Check::at_most("eigen residuals", worst_res, TOL.eigen_residual),
            Check::equals("kernel verdict matches analytic test", numeric, analytic),
        ];
        if k == 0 {
            if let Some(&mu1) = s.eigenvalues.first() {
                checks.push(Check::at_most("mu_1 = 1", (mu1 - 1.0).abs(), TOL.eigenvalue_rel));
            }
            if let Some(&mu2) = s.eigenvalues.get(1) {
                checks.push(Check::at_most("mu_2 = p*-1", (mu2 - target).abs() / target, TOL.eigenvalue_rel));
            }
        }
        let mut table = Table::new(&["k", "index", "eigenvalue", "residual"]);
        for (j, (mu, r)) in s.eigenvalues.iter().zip(&s.residuals).enumerate() {
            table.push(vec![k.to_string(), (j + 1).to_string(), num(*mu), num(*r)]);
        }
        let result = json!({
            "N": p.n,
            "alpha": p.alpha,
            "k": k,
            "nodes": nodes,
            "dim": s.dim,
            "eigenvalues": s.eigenvalues,
            "residuals": s.residuals,
            "symmetry_defect": s.symmetry_defect,
            "orthogonality_defect": s.orthogonality_defect,
            "kernel": { "target": target, "nearest": nearest, "numeric": numeric, "analytic": analytic },
        });
        Ok(Report { result, checks, table })
    })
}

pub fn kernel(p: &Params, k_max: u32, nodes: usize) -> Report {
    guard(|| {
        let rep = match verify_kernel(p, k_max, nodes, TOL.kernel_hit_rel) {
            Ok(r) => r,
            Err(e @ ckn_core::CknError::InconsistentKernel { .. }) => return Ok(Report::failed("kernel verdicts agree", e)),
            Err(e) => return Err(e),
        };
        let mut checks = vec![Check::equals("kernel dimension", rep.kernel_dim.to_string(), rep.expected_dim.to_string())];
        let mut profile_res = Vec::new();
        for m in rep.modes.iter().filter(|m| m.numeric) {
            let z = if m.k == 0 { kernel_z0(p) } else { kernel_zk_radial(p, m.k)? };
            let r = kernel_residual(p, &z, m.k)?;
            checks.push(Check::at_most(&format!("mode {} kernel profile residual", m.k), r, TOL.kernel_profile_residual));
            profile_res.push(json!({ "k": m.k, "residual": r }));
        }
        let mut table = Table::new(&["k", "lambda_k", "q2_lambda_k", "analytic", "numeric", "nearest", "multiplicity"]);
        for m in &rep.modes {
            table.push(vec![
                m.k.to_string(),
                num(m.lambda_k),
                num(m.q2_lambda_k),
                m.analytic.to_string(),
                m.numeric.to_string(),
                num(m.nearest),
                m.multiplicity.to_string(),
            ]);
        }
        let mut result = to_value(&rep);
        result["profile_residuals"] = json!(profile_res);
        result["kernel_dim"] = json!(rep.kernel_dim.to_string());
        result["expected_dim"] = json!(rep.expected_dim.to_string());
        for (slot, m) in rep.modes.iter().enumerate() {
            result["modes"][slot]["multiplicity"] = json!(m.multiplicity.to_string());
        }
        Ok(Report { result, checks, table })
    })
}

pub const DEFAULT_T: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];

pub fn remainder(p: &Params, nodes: usize, ts: &[f64]) -> Report {
    guard(|| {
        let g = RadialGrid::for_params(p);
        let s = mode_eigenvalues(p, 0, 3, nodes)?;
        let bound = 1.0 - s.eigenvalues[1] / s.eigenvalues[2];
        let phi3 = radial_direction(p, 2, nodes, &g)?;
        let scan = remainder_scan(p, &phi3, ts, &g)?;
        let mut table = Table::new(&["t", "quotient", "deficit", "dist", "lambda", "c"]);
        for pt in &scan {
            table.push(vec![num(pt.t), num(pt.quotient), num(pt.deficit), num(pt.dist), num(pt.fit.lambda), num(pt.fit.c)]);
        }
        let mut checks = Vec::new();
        let min_q = scan.iter().map(|pt| pt.quotient).fold(f64::INFINITY, f64::min);
        checks.push(Check::at_least("quotient nonnegative", min_q, 0.0));
        if let Some(last) = scan.iter().min_by(|a, b| a.t.total_cmp(&b.t)) {
            let dev = (last.quotient - bound).abs() / bound;
            checks.push(Check::at_most("smallest-t quotient near 1 - mu2/mu3", dev, TOL.remainder_rel));
        }
        let curve: Vec<Value> = scan
            .iter()
            .map(|pt| json!({ "t": pt.t, "quotient": pt.quotient, "deficit": pt.deficit, "dist": pt.dist }))
            .collect();
        let result = json!({
            "direction": "third radial eigenfunction, norm ||U_1||",
            "mu": s.eigenvalues,
            "limit": bound,
            "curve": curve,
        });
        Ok(Report { result, checks, table })
    })
}

pub fn perturb(p: &Params, eps: f64, h_name: &str, h: HFn, nodes: usize) -> Report {
    guard(|| {
        let pp = PerturbationProblem::new(p, eps, h_name, h, nodes)?;
        let g = RadialGrid::for_params(p);
        let (sol, _) = find_perturbed_solution(&pp, &g)?;
        let mut table = Table::new(&["lambda", "gamma"]);
        for (l, v) in &sol.gamma_curve {
            table.push(vec![num(*l), num(*v)]);
        }
        let checks = vec![
            Check::at_most("unprojected residual", sol.residual, TOL.perturb_residual),
            Check::below("contraction factor", sol.correction.contraction_factor, TOL.contraction_limit),
            Check::equals("solution positive", sol.positive, true),
        ];
        let result = json!({
            "h": h_name,
            "h_sup": pp.h_sup,
            "eps": eps,
            "dim": pp.dim(),
            "lambda_star": sol.lambda_star,
            "energy": sol.energy,
            "j0": sol.j0,
            "kind": sol.kind,
            "omega_norm": sol.omega_norm,
            "multiplier": sol.l,
            "residual": sol.residual,
            "projected_residual": sol.projected_residual,
            "test_dim": sol.test_dim,
            "min_value": sol.min_value,
            "positive": sol.positive,
            "iterations": sol.correction.iterations,
            "contraction_factor": sol.correction.contraction_factor,
            "gamma_curve": sol.gamma_curve.iter().map(|(l, v)| json!([l, v])).collect::<Vec<_>>(),
        });
        Ok(Report { result, checks, table })
    })
}

pub fn branch(n: usize, shifts: &[f64], cells: &[usize]) -> Report {
    guard(|| {
        let mut checks = Vec::new();
        let mut table = Table::new(&["a", "cells", "relative_residual", "order", "radial_discrepancy"]);
        let mut runs = Vec::new();
        for &a in shifts {
            let prof = nonradial_branch(n, a)?;
            let (res, orders) = biradial_convergence(&prof, cells)?;
            let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
            if !orders.is_empty() {
                checks.push(Check::at_least(&format!("a={a}: residual order"), min_order, TOL.branch_min_order));
            }
            let decreasing = res.windows(2).all(|w| w[1].relative < w[0].relative);
            checks.push(Check::equals(&format!("a={a}: residual decreases"), decreasing, true));
            let disc: Vec<f64> = res.iter().filter_map(|r| r.radial_discrepancy).collect();
            if disc.len() >= 2 {
                let o = disc
                    .windows(2)
                    .zip(res.windows(2))
                    .map(|(d, r)| (d[0] / d[1]).ln() / (r[1].cells as f64 / r[0].cells as f64).ln())
                    .fold(f64::INFINITY, f64::min);
                checks.push(Check::at_least(&format!("a={a}: radial discrepancy order"), o, TOL.branch_min_order));
            }
            for (i, r) in res.iter().enumerate() {
                table.push(vec![
                    num(a),
                    r.cells.to_string(),
                    num(r.relative),
                    if i == 0 { String::new() } else { num(orders[i - 1]) },
                    r.radial_discrepancy.map(num).unwrap_or_default(),
                ]);
            }
            runs.push(json!({ "a": a, "residuals": to_value(&res), "orders": orders }));
        }
        Ok(Report { result: json!({ "alpha": -2.0, "runs": runs }), checks, table })
    })
}
