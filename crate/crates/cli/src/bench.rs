use std::fmt::Write as _;
use std::time::Instant;

use anyhow::{bail, Result};
use clap::Args;
use rangelab::rrds::suite::{query_suite, uniform_points, QueryKind};
use rangelab::rrds::{brute_force_query, BuildConfig, Mode, QueryRange, RangeStructure};
use serde::Serialize;

use crate::common::{artifact, csv_header, emit, CheckFailed, Globals, ModeName};

#[derive(Args, Clone, Debug)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Grid resolutions, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [8u32, 16, 32, 64])]
    q: Vec<u32>,
    /// Modes to run; both when absent.
    #[arg(long, value_enum)]
    mode: Option<ModeName>,
    #[arg(long)]
    delta: Option<u32>,
    #[arg(long, default_value_t = 200)]
    queries: usize,
}

#[derive(Serialize)]
struct BenchConfig<'a> {
    n: usize,
    q: &'a [u32],
    modes: Vec<Mode>,
    queries: usize,
}

#[derive(Serialize)]
struct Mismatch<'a> {
    q: u32,
    mode: Mode,
    index: usize,
    kind: QueryKind,
    range: &'a QueryRange,
    expected: usize,
    got: usize,
    missing: Vec<u32>,
    extra: Vec<u32>,
}

fn percentile(sorted: &[u64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let i = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[i] as f64
}

pub fn run(g: &Globals, a: &BenchArgs) -> Result<()> {
    if a.q.iter().any(|&q| q < 2) || a.n == 0 {
        bail!("need n ≥ 1 and every q ≥ 2");
    }
    let derivative = Mode::Derivative { delta: a.delta.unwrap_or(3), c: 2.0 };
    let modes = match a.mode {
        Some(ModeName::Curvature) => vec![Mode::Curvature],
        Some(ModeName::Derivative) => vec![derivative],
        None => vec![Mode::Curvature, derivative],
    };
    let conf = BenchConfig { n: a.n, q: &a.q, modes: modes.clone(), queries: a.queries };
    let points = uniform_points(a.n, g.seed);
    let suite = query_suite(a.queries, g.seed.wrapping_add(1));

    let mut out = csv_header(g.seed, &conf)?;
    out.push_str("n,q,mode,modeled_space,mean_overscan,p95_overscan,oracle_pass\n");
    for &mode in &modes {
        let mut spaces = Vec::new();
        for &q in &a.q {
            let mut cfg = g.load_config(BuildConfig::new(q, mode))?;
            cfg.q = q;
            cfg.mode = mode;
            cfg.seed = g.seed;
            let t0 = Instant::now();
            let st = RangeStructure::build(&points, cfg)?;
            let build_s = t0.elapsed().as_secs_f64();
            let t1 = Instant::now();
            let mut over = Vec::with_capacity(suite.len());
            for (index, (kind, range)) in suite.iter().enumerate() {
                let (ids, stats) = st.query(range)?;
                let expected = brute_force_query(&points, range);
                if ids != expected {
                    let m = Mismatch {
                        q,
                        mode,
                        index,
                        kind: *kind,
                        range,
                        expected: expected.len(),
                        got: ids.len(),
                        missing: expected.iter().filter(|i| ids.binary_search(i).is_err()).copied().collect(),
                        extra: ids.iter().filter(|i| expected.binary_search(i).is_err()).copied().collect(),
                    };
                    eprintln!("{}", serde_json::to_string_pretty(&artifact(g.seed, &conf, m))?);
                    return Err(CheckFailed(format!("oracle mismatch at q = {q}, query {index}")).into());
                }
                over.push(stats.overscan());
            }
            over.sort_unstable();
            let mean = over.iter().sum::<u64>() as f64 / over.len().max(1) as f64;
            let space = st.space_report().modeled_space;
            spaces.push(space);
            eprintln!(
                "{} q = {q}: build {build_s:.2} s, queries {:.2} s, space {space:.4e}",
                mode.name(),
                t1.elapsed().as_secs_f64()
            );
            writeln!(out, "{},{q},{},{space},{mean},{},true", a.n, mode.name(), percentile(&over, 0.95))?;
        }
        if a.q.len() >= 2 {
            let xs: Vec<f64> = a.q.iter().map(|&q| q as f64).collect();
            eprintln!("{} space slope in q: {:.3}", mode.name(), rangelab::lbgeom::loglog_slope(&xs, &spaces));
        }
    }
    emit(g.out.as_deref(), &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_picks_the_rank() {
        let v: Vec<u64> = (1..=100).collect();
        assert_eq!(percentile(&v, 0.95), 95.0);
        assert_eq!(percentile(&v, 1.0), 100.0);
        assert_eq!(percentile(&[7], 0.5), 7.0);
        assert_eq!(percentile(&[], 0.5), 0.0);
    }
}
