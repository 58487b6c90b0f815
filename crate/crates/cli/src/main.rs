//! `ckn-lab`: verification workflows for the weighted fourth-order CKN inequality.
//!
//! Exit codes: 0 all checks pass, 1 some check failed (failure list in the
//! report), 2 usage error.

mod commands;
mod config;
mod report;

use anyhow::Context;
use ckn_core::params::Params;
use ckn_core::radial::Tabulated;
use ckn_core::reduction::{bump_h, HFn, DEFAULT_PERTURB_NODES};
use ckn_core::spectrum::MIN_NODES;
use clap::{Args, Parser, Subcommand};
use config::{canonical_alpha, scan_alphas, usage, UsageError};
use rayon::prelude::*;
use report::{render_scan, render_single, Envelope, Format, Report};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Debug, Parser)]
#[command(name = "ckn-lab", version, about = "Sharp constants, spectra and reductions for the weighted fourth-order CKN inequality")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Space dimension.
    #[arg(long = "N", global = true)]
    n: Option<usize>,
    /// Weight exponent as a plain decimal, e.g. -2 or 0.5.
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// Quadrature nodes for spectral solves (basis dimension is nodes/4).
    #[arg(long, global = true)]
    nodes: Option<usize>,
    /// Sweep alpha over a0:a1:step instead of a single --alpha.
    #[arg(long, global = true, allow_hyphen_values = true)]
    scan_alpha: Option<String>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Worker threads.
    #[arg(long, global = true, env = "CKN_LAB_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exponents and sharp constants.
    Constants,
    /// Euler-Lagrange residual and Rayleigh quotient of the extremal.
    VerifyExtremal {
        /// Multiply the extremal by this factor before checking.
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
    },
    /// Norm identities under the Emden-Fowler change of variables.
    TransformCheck,
    /// Eigenvalues of one angular mode of the linearized operator.
    Spectrum {
        #[arg(long, default_value_t = 0)]
        mode: u32,
        #[arg(long, default_value_t = 4)]
        num_eigs: usize,
    },
    /// Kernel dimension of the linearized operator, mode by mode.
    Kernel {
        #[arg(long, default_value_t = 6)]
        k_max: u32,
    },
    /// Stability quotient along the third radial eigendirection.
    Remainder {
        /// Perturbation sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        t: Option<Vec<f64>>,
    },
    /// Critical point of the functional with weight 1 + eps h.
    Perturb {
        #[arg(long, default_value_t = 1e-3, allow_hyphen_values = true)]
        eps: f64,
        /// Built-in h. Only "bump" (e^{-r} r^2/(1+r^2)) is provided.
        #[arg(long, default_value = "bump", conflicts_with = "h_file")]
        h: String,
        /// CSV with columns r, h(r); a header line is optional.
        #[arg(long)]
        h_file: Option<PathBuf>,
    },
    /// Finite-difference residual of the bi-radial solutions at alpha = -2.
    Branch {
        /// Shift parameters, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0.3")]
        a: Vec<f64>,
        /// Grid sizes per axis, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "50,100,200,400")]
        cells: Vec<usize>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::VerifyExtremal { .. } => "verify-extremal",
            Command::TransformCheck => "transform-check",
            Command::Spectrum { .. } => "spectrum",
            Command::Kernel { .. } => "kernel",
            Command::Remainder { .. } => "remainder",
            Command::Perturb { .. } => "perturb",
            Command::Branch { .. } => "branch",
        }
    }
}

/// Everything a single parameter cell needs, resolved from the command line.
enum Job {
    Constants,
    Verify { amplitude: f64 },
    Transform,
    Spectrum { mode: u32, num_eigs: usize, nodes: usize },
    Kernel { k_max: u32, nodes: usize },
    Remainder { nodes: usize, t: Vec<f64> },
    Perturb { eps: f64, h_name: String, h: HFn, nodes: usize },
}

impl Job {
    fn run(&self, p: &Params) -> Report {
        match self {
            Job::Constants => commands::constants(p),
            Job::Verify { amplitude } => commands::verify_extremal(p, *amplitude),
            Job::Transform => commands::transform_check(p),
            Job::Spectrum { mode, num_eigs, nodes } => commands::spectrum(p, *mode, *num_eigs, *nodes),
            Job::Kernel { k_max, nodes } => commands::kernel(p, *k_max, *nodes),
            Job::Remainder { nodes, t } => commands::remainder(p, *nodes, t),
            Job::Perturb { eps, h_name, h, nodes } => commands::perturb(p, *eps, h_name, h.clone(), *nodes),
        }
    }

    fn inputs(&self) -> serde_json::Value {
        match self {
            Job::Constants | Job::Transform => json!({}),
            Job::Verify { amplitude } => json!({ "amplitude": amplitude }),
            Job::Spectrum { mode, num_eigs, nodes } => json!({ "mode": mode, "num_eigs": num_eigs, "nodes": nodes }),
            Job::Kernel { k_max, nodes } => json!({ "k_max": k_max, "nodes": nodes }),
            Job::Remainder { nodes, t } => json!({ "nodes": nodes, "t": t }),
            Job::Perturb { eps, h_name, nodes, .. } => json!({ "eps": eps, "h": h_name, "nodes": nodes }),
        }
    }
}

fn nodes_or(n: Option<usize>, default: usize) -> anyhow::Result<usize> {
    let n = n.unwrap_or(default);
    if n < MIN_NODES {
        return Err(usage(format!("--nodes {n} is below the minimum {MIN_NODES}")));
    }
    Ok(n)
}

fn read_h_file(path: &Path) -> anyhow::Result<Tabulated> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut pts = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("reading {}", path.display()))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != 2 {
            return Err(usage(format!("{}: line {} has {} columns, expected 2", path.display(), i + 1, rec.len())));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(r), Ok(h)) => pts.push((r, h)),
            // a non-numeric first line is a header
            _ if i == 0 => continue,
            _ => return Err(usage(format!("{}: line {} is not numeric", path.display(), i + 1))),
        }
    }
    Tabulated::new(pts).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn params(n: usize, alpha: &str) -> anyhow::Result<Params> {
    Params::from_decimal(n, alpha).map_err(|e| usage(format!("(N, alpha) = ({n}, {alpha}): {e}")))
}

fn job_for(cmd: &Command, c: &Common) -> anyhow::Result<Job> {
    Ok(match cmd {
        Command::Constants => Job::Constants,
        Command::VerifyExtremal { amplitude } => {
            if !(amplitude.is_finite() && *amplitude > 0.0) {
                return Err(usage("--amplitude must be positive"));
            }
            Job::Verify { amplitude: *amplitude }
        }
        Command::TransformCheck => Job::Transform,
        Command::Spectrum { mode, num_eigs, .. } => {
            if *num_eigs == 0 {
                return Err(usage("--num-eigs must be at least 1"));
            }
            Job::Spectrum { mode: *mode, num_eigs: *num_eigs, nodes: nodes_or(c.nodes, 400)? }
        }
        Command::Kernel { k_max } => Job::Kernel { k_max: *k_max, nodes: nodes_or(c.nodes, 400)? },
        Command::Remainder { t } => {
            let t = t.clone().unwrap_or_else(|| commands::DEFAULT_T.to_vec());
            if t.is_empty() || t.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(usage("--t values must be positive"));
            }
            Job::Remainder { nodes: nodes_or(c.nodes, 400)?, t }
        }
        Command::Perturb { eps, h, h_file } => {
            if !eps.is_finite() {
                return Err(usage("--eps must be finite"));
            }
            let (h_name, hf): (String, HFn) = match h_file {
                Some(path) => {
                    let tab = read_h_file(path)?;
                    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                    (format!("file:{name}"), Arc::new(move |r| tab.eval(r)))
                }
                None if h == "bump" => (h.clone(), Arc::new(bump_h)),
                None => return Err(usage(format!("unknown builtin h '{h}' (available: bump)"))),
            };
            Job::Perturb { eps: *eps, h_name, h: hf, nodes: nodes_or(c.nodes, DEFAULT_PERTURB_NODES)? }
        }
        Command::Branch { .. } => unreachable!("handled separately"),
    })
}

fn emit(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            use std::io::Write;
            let mut lock = std::io::stdout().lock();
            lock.write_all(text.as_bytes())?;
            Ok(lock.flush()?)
        }
    }
}

fn report_failures(failures: &[serde_json::Value]) {
    if !failures.is_empty() {
        eprintln!("{}", json!({ "failures": failures }));
    }
}

/// Returns whether every check passed.
fn run(cli: Cli) -> anyhow::Result<bool> {
    let c = &cli.common;
    let name = cli.command.name();
    if let Command::Branch { a, cells } = &cli.command {
        if c.scan_alpha.is_some() {
            return Err(usage("branch runs at alpha = -2 only; --scan-alpha is not available"));
        }
        let n = c.n.unwrap_or(8);
        if let Some(al) = &c.alpha {
            if canonical_alpha(al)? != "-2" {
                return Err(usage("branch runs at alpha = -2 only"));
            }
        }
        if n % 2 == 1 || n < 8 {
            return Err(usage(format!("branch needs an even N >= 8, got {n}")));
        }
        if cells.iter().any(|&k| k < 8) || a.iter().any(|v| !v.is_finite()) {
            return Err(usage("--cells must be >= 8 and --a finite"));
        }
        let rep = commands::branch(n, a, cells);
        let env = Envelope { command: name, n, inputs: json!({ "a": a, "cells": cells }) };
        emit(&render_single(&env, "-2", &rep, c.format)?, c.out.as_deref())?;
        report_failures(&rep.failures());
        return Ok(rep.pass());
    }

    let n = c.n.ok_or_else(|| usage("--N is required"))?;
    let job = job_for(&cli.command, c)?;
    let env = Envelope { command: name, n, inputs: job.inputs() };
    match (&c.alpha, &c.scan_alpha) {
        (Some(_), Some(_)) => Err(usage("give either --alpha or --scan-alpha")),
        (None, None) => Err(usage("--alpha is required")),
        (Some(al), None) => {
            let al = canonical_alpha(al)?;
            let p = params(n, &al)?;
            let rep = job.run(&p);
            emit(&render_single(&env, &al, &rep, c.format)?, c.out.as_deref())?;
            report_failures(&rep.failures());
            Ok(rep.pass())
        }
        (None, Some(spec)) => {
            let alphas = scan_alphas(spec)?;
            let ps: Vec<Params> = alphas.iter().map(|a| params(n, a)).collect::<anyhow::Result<_>>()?;
            // indexed collect keeps the output in parameter order
            let reps: Vec<Report> = ps.par_iter().map(|p| job.run(p)).collect();
            let cells: Vec<(String, Report)> = alphas.into_iter().zip(reps).collect();
            emit(&render_scan(&env, spec, &cells, c.format)?, c.out.as_deref())?;
            let failures: Vec<_> =
                cells.iter().flat_map(|(a, r)| r.failures().into_iter().map(move |f| json!({ "alpha": a, "failure": f }))).collect();
            report_failures(&failures);
            Ok(failures.is_empty())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match cli.common.threads {
        Some(0) => {
            eprintln!("error: thread count must be at least 1");
            return ExitCode::from(2);
        }
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    match pool.install(|| run(cli)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("usage error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
