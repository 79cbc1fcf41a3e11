use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use rangelab::lbgeom::{lbverify, LbVerifyConfig};

use crate::common::{artifact, csv_header, emit, emit_json, CheckFailed, Globals};

#[derive(Args, Clone, Debug)]
pub struct LbArgs {
    #[arg(long)]
    n: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Dimension `D`.
    #[arg(long)]
    dim: Option<u32>,
    /// Degree `Δ`.
    #[arg(long)]
    delta: Option<u32>,
    /// Monte Carlo samples per estimate.
    #[arg(long)]
    samples: Option<usize>,
    /// Derandomization trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Where to write the `ητ` sweep as CSV.
    #[arg(long)]
    sweep: Option<PathBuf>,
}

pub fn run(g: &Globals, a: &LbArgs) -> Result<()> {
    let mut cfg = g.load_config(LbVerifyConfig::default())?;
    macro_rules! set {
        ($($f:ident),*) => { $(if let Some(v) = a.$f { cfg.$f = v; })* };
    }
    set!(n, q, dim, delta, samples, trials);
    cfg.seed = g.seed;
    let report = lbverify(&cfg)?;

    let p = &report.params;
    eprintln!(
        "schedule n = {} Q = {} D = {} Δ = {}: β = {}, β_b = {}, β̈ = {}, exponent {}",
        p.n, p.q, p.dim, p.delta, p.beta, p.beta_b, p.beta_bb, p.bound_exponent
    );
    for w in &p.warnings {
        eprintln!("  warning: {w}");
    }
    let table: Vec<String> = report.beta_table.iter().map(|(d, b)| format!("Δ={d}:{b}")).collect();
    eprintln!("β for D = 2: {}", table.join(" "));
    for e in &report.estimates {
        eprintln!("{:<28} {:>12.6} ± {:<10.2e} bound {:<10} {}", e.name, e.value, e.stderr, e.bound, if e.pass { "PASS" } else { "FAIL" });
    }

    if let Some(path) = &a.sweep {
        let mut csv = csv_header(g.seed, &cfg)?;
        csv.push_str("eta_tau,estimate,stderr\n");
        for r in &report.scaling.rows {
            writeln!(csv, "{},{},{}", r.eta_tau, r.estimate, r.stderr)?;
        }
        writeln!(csv, "# slope {}", report.scaling.slope)?;
        emit(Some(path), &csv)?;
    }
    let mut body = serde_json::to_value(&report)?;
    // the envelope carries the seed
    body.as_object_mut().map(|o| o.remove("seed"));
    emit_json(g.out.as_deref(), &artifact(g.seed, &cfg, body))?;
    if !report.passed() {
        let failed: Vec<&str> = report.estimates.iter().filter(|e| !e.pass).map(|e| e.name.as_str()).collect();
        return Err(CheckFailed(failed.join(", ")).into());
    }
    Ok(())
}
