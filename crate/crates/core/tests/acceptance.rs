//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use ckn_core::emden::{norm_identity_check, star_identity_check};
use ckn_core::jet::Jet;
use ckn_core::params::{best_constant_radial, classical_sobolev_constant, sobolev_constant_c, sobolev_constant_c_alt, Params};
use ckn_core::profiles::biradial::{biradial_convergence, nonradial_branch};
use ckn_core::profiles::{el_residual_sweep, extremal_u, log_space};
use ckn_core::radial::{rayleigh_quotient, JetFn, RadialGrid};
use ckn_core::reduction::{
    find_perturbed_solution, linear_response_ratio, radial_direction, reduced_energy_radial, remainder_scan,
    solve_correction, PerturbationProblem,
};
use ckn_core::spectrum::{mode_eigenvalues, mode_eigenvalues_radial, mu3_estimate, verify_kernel};
use rand::{Rng, SeedableRng};
use std::sync::OnceLock;
use std::time::Instant;

const SETS: [(usize, &str); 5] = [(5, "1"), (5, "0.5"), (6, "-1"), (3, "1.5"), (7, "-2")];

type Outcome = Result<(bool, String), String>;

fn params(n: usize, alpha: &str) -> Result<Params, String> {
    Params::from_decimal(n, alpha).map_err(|e| e.to_string())
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn constants() -> Outcome {
    let mut worst_s: f64 = 0.0;
    for n in 5..=12usize {
        let p = Params::new(n, 0.0).map_err(err)?;
        let s = best_constant_radial(&p);
        let c = classical_sobolev_constant(n as f64);
        worst_s = worst_s.max((s - c).abs() / c);
    }
    let mut worst_c: f64 = 0.0;
    let mut ms: Vec<f64> = SETS.iter().map(|&(n, a)| params(n, a).map(|p| p.m)).collect::<Result<_, _>>()?;
    ms.extend((0..40).map(|i| 4.05 + 0.37 * i as f64));
    for m in ms {
        let a = sobolev_constant_c(m).map_err(err)?;
        let b = sobolev_constant_c_alt(m).map_err(err)?;
        worst_c = worst_c.max((a - b).abs() / a);
    }
    Ok((worst_s < 1e-12 && worst_c < 1e-12, format!("max rel S(N,0) vs classical {worst_s:.1e}; C(M) forms {worst_c:.1e}")))
}

fn trial_profile(rng: &mut impl Rng) -> JetFn<impl Fn(Jet) -> Jet + Send + Sync> {
    let beta: f64 = rng.gen_range(0.3..3.0);
    let coef: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    JetFn(move |r: Jet| {
        if beta * r.value() * r.value() > 700.0 {
            return Jet::constant(0.0);
        }
        let r2 = r * r;
        let mut poly = Jet::constant(1.0);
        let mut pw = Jet::constant(1.0);
        for c in &coef {
            pw = pw * r2;
            poly = poly + pw.scale(*c);
        }
        poly * (r2 * -beta).exp()
    })
}

fn extremality() -> Outcome {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let (mut worst, mut min_gap) = (0.0f64, f64::INFINITY);
    for (n, a) in SETS {
        let p = params(n, a)?;
        let g = RadialGrid::for_params(&p);
        let s = best_constant_radial(&p);
        let q = rayleigh_quotient(&p, &extremal_u(&p, 1.0).map_err(err)?, &g).map_err(err)?;
        worst = worst.max((q - s).abs() / s);
        for _ in 0..50 {
            let f = trial_profile(&mut rng);
            let q = rayleigh_quotient(&p, &f, &g).map_err(err)?;
            min_gap = min_gap.min(q - s);
        }
    }
    Ok((worst < 1e-8 && min_gap >= -1e-8, format!("max rel |Q(U)-S| {worst:.1e}; min Q(trial)-S over 250 {min_gap:.3e}")))
}

fn euler_lagrange() -> Outcome {
    let mut worst: f64 = 0.0;
    for (n, a) in SETS {
        let p = params(n, a)?;
        let u = extremal_u(&p, 1.0).map_err(err)?;
        worst = worst.max(el_residual_sweep(&p, &u, 1e-3, 1e3, 400).map_err(err)?);
    }
    Ok((worst < 1e-9, format!("max relative residual on [1e-3, 1e3] {worst:.1e}")))
}

fn transform() -> Outcome {
    let mut worst: f64 = 0.0;
    for (n, a) in SETS {
        let p = params(n, a)?;
        let g = RadialGrid::for_params(&p);
        let u = extremal_u(&p, 1.0).map_err(err)?;
        let gauss = JetFn(|r: Jet| (-(r * r)).exp());
        for f in [&u as &dyn ckn_core::radial::RadialFunction, &gauss] {
            worst = worst.max(norm_identity_check(&p, f, &g).map_err(err)?.rel_err);
            worst = worst.max(star_identity_check(&p, f, &g).map_err(err)?.rel_err);
        }
    }
    Ok((worst < 1e-7, format!("max relative error {worst:.1e}")))
}

/// (mu_1, mu_2, mu_3) per parameter set from the spectrum criterion.
static SPECTRA: OnceLock<Vec<[f64; 3]>> = OnceLock::new();

fn spectrum() -> Outcome {
    let mut ok = true;
    let (mut e_mu, mut worst_align, mut min_margin, mut shift, mut slowest) = (0.0f64, 1.0f64, f64::INFINITY, 0.0f64, 0.0f64);
    let mut spectra = Vec::new();
    for (n, a) in SETS {
        let t = Instant::now();
        let p = params(n, a)?;
        let s = mode_eigenvalues(&p, 0, 3, 400).map_err(err)?;
        e_mu = e_mu.max((s.eigenvalues[0] - 1.0).abs());
        e_mu = e_mu.max((s.eigenvalues[1] - (p.pstar - 1.0)).abs() / (p.pstar - 1.0));
        worst_align = worst_align.min(s.alignment(0, |_| 1.0).map_err(err)?);
        worst_align = worst_align.min(s.alignment(1, |y| 2.0 * y - 1.0).map_err(err)?);
        let m3 = mu3_estimate(&p, 400).map_err(err)?;
        min_margin = min_margin.min(m3.margin);
        ok &= m3.mu1 < m3.mu2 && m3.mu2 < m3.mu3;
        let g = RadialGrid::for_params(&p);
        let r = mode_eigenvalues_radial(&p, 0, 2.0, 16, 3, &g).map_err(err)?;
        for j in 0..3 {
            shift = shift.max((r[j] - s.eigenvalues[j]).abs() / s.eigenvalues[j]);
        }
        spectra.push([s.eigenvalues[0], s.eigenvalues[1], s.eigenvalues[2]]);
        slowest = slowest.max(t.elapsed().as_secs_f64());
    }
    let _ = SPECTRA.set(spectra);
    ok &= e_mu < 1e-4 && worst_align > 0.999 && min_margin > 0.0 && shift < 1e-6 && slowest < 30.0;
    Ok((
        ok,
        format!(
            "max rel err {{1, p*-1}} {e_mu:.1e}; min alignment {worst_align:.12}; min mu3 margin {min_margin:.3}; \
             lambda=2 shift {shift:.1e}; slowest set {slowest:.2}s"
        ),
    ))
}

fn kernel_jump() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for a in ["-2.5", "-2", "-1.5"] {
        let p = params(7, a)?;
        let s = mode_eigenvalues(&p, 2, 4, 400).map_err(err)?;
        let target = p.pstar - 1.0;
        let hit = s.eigenvalues.iter().any(|mu| (mu - target).abs() <= 1e-3 * target);
        let rep = verify_kernel(&p, 6, 400, 1e-3).map_err(err)?;
        let want = if a == "-2" { 28 } else { 1 };
        ok &= hit == (a == "-2") && rep.kernel_dim == want;
        parts.push(format!("alpha={a}: mode-2 hit={hit} dim={}", rep.kernel_dim));
    }
    let p = params(5, "0")?;
    let rep = verify_kernel(&p, 6, 400, 1e-3).map_err(err)?;
    ok &= rep.kernel_dim == 6;
    parts.push(format!("(5,0): dim={}", rep.kernel_dim));
    Ok((ok, parts.join("; ")))
}

fn remainder() -> Outcome {
    let spectra = match SPECTRA.get() {
        Some(s) => s.clone(),
        None => {
            spectrum()?;
            SPECTRA.get().cloned().ok_or("spectrum unavailable")?
        }
    };
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for ((n, a), mu) in SETS.into_iter().zip(spectra) {
        let p = params(n, a)?;
        let g = RadialGrid::for_params(&p);
        let bound = 1.0 - mu[1] / mu[2];
        let phi3 = radial_direction(&p, 2, 400, &g).map_err(err)?;
        let q = remainder_scan(&p, &phi3, &[1e-3], &g).map_err(err)?[0].quotient;
        let dev = (q - bound).abs() / bound;
        worst = worst.max(dev);
        parts.push(format!("({n},{a}) {q:.5}/{bound:.5}"));
    }
    Ok((worst < 0.05, format!("quotient/limit at t=1e-3: {}; max rel dev {worst:.1e}", parts.join(" "))))
}

fn lyapunov_schmidt() -> Outcome {
    let p = params(5, "1")?;
    let g = RadialGrid::for_params(&p);
    let pp = PerturbationProblem::with_bump(&p, 1e-3).map_err(err)?;
    let corr = solve_correction(&pp, 1.0).map_err(err)?;
    let ratio = linear_response_ratio(&pp, 1.0).map_err(err)?;
    let j0 = pp.j0();
    let flat = pp.with_eps(0.0).map_err(err)?;
    let mut g0: f64 = 0.0;
    for lam in log_space(0.1, 10.0, 9) {
        g0 = g0.max((reduced_energy_radial(&flat, lam, &g).map_err(err)? - j0).abs() / j0);
    }
    let mut ends: f64 = 0.0;
    for lam in [1e-3, 1e3] {
        ends = ends.max((reduced_energy_radial(&pp, lam, &g).map_err(err)? - j0).abs() / j0);
    }
    let (sol, _) = find_perturbed_solution(&pp, &g).map_err(err)?;
    let ok = corr.contraction_factor < 0.9
        && (1.8..=2.2).contains(&ratio)
        && g0 < 1e-9
        && ends < 1e-6
        && sol.residual < 1e-6
        && sol.positive;
    Ok((
        ok,
        format!(
            "contraction {:.1e}; |w(e)|/|w(e/2)| {ratio:.5}; Gamma_0 spread {g0:.1e}; Gamma_e ends {ends:.1e}; \
             lambda* {:.6} ({}); residual {:.1e}; u>0 {}",
            corr.contraction_factor, sol.lambda_star, sol.kind, sol.residual, sol.positive
        ),
    ))
}

fn branch() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for a in [0.0, 0.3] {
        let b = nonradial_branch(8, a).map_err(err)?;
        let (res, orders) = biradial_convergence(&b, &[50, 100, 200, 400]).map_err(err)?;
        ok &= orders.iter().all(|&o| o >= 1.9) && res.windows(2).all(|w| w[1].relative < w[0].relative);
        let rel: Vec<String> = res.iter().map(|r| format!("{:.1e}", r.relative)).collect();
        let mut line = format!("a={a}: residual {} orders {:.2?}", rel.join("/"), orders);
        if a == 0.0 {
            let d: Vec<f64> = res.iter().map(|r| r.radial_discrepancy.unwrap_or(f64::NAN)).collect();
            let dord = (d[2] / d[3]).log2();
            ok &= dord >= 1.9;
            line += &format!(" radial discrepancy {:.1e} (order {dord:.2})", d[3]);
        }
        parts.push(line);
    }
    Ok((ok, parts.join("; ")))
}

fn main() {
    let criteria: [(u32, &str, f64, fn() -> Outcome); 9] = [
        (1, "constant consistency", 1.0, constants),
        (2, "extremality", 10.0, extremality),
        (3, "Euler-Lagrange identity", 1.0, euler_lagrange),
        (4, "transform identity", 5.0, transform),
        (5, "spectrum", 150.0, spectrum),
        (6, "kernel-dimension jump", 60.0, kernel_jump),
        (7, "remainder bound", 30.0, remainder),
        (8, "Lyapunov-Schmidt reduction", 120.0, lyapunov_schmidt),
        (9, "nonradial branch", 120.0, branch),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || f == &id.to_string()) {
            continue;
        }
        let t = Instant::now();
        let out = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        let (pass, detail) = match out {
            Ok((ok, d)) => (ok && secs < limit, d),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("criterion {id} [{name}]: {} ({secs:.2}s, limit {limit}s) {detail}", if pass { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
