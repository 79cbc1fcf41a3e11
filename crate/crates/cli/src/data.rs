use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use rangelab::rrds::suite::uniform_points;
use rangelab::rrds::{brute_force_query, CostStats, QueryRange, RangeStructure, SpaceReport};
use serde::Serialize;
use serde_json::json;

use crate::common::{artifact, emit, emit_json, points_csv, read_json, read_points, CheckFailed, Globals, StructureArgs};

pub fn gen(g: &Globals, n: usize) -> Result<()> {
    let points = uniform_points(n, g.seed);
    emit(g.out.as_deref(), &points_csv(&points, g.seed, &json!({ "n": n }))?)
}

#[derive(Serialize)]
struct BuildBody<'a> {
    points: &'a Path,
    n: usize,
    space: &'a SpaceReport,
}

pub fn build(g: &Globals, points: &Path, s: &StructureArgs) -> Result<()> {
    let cfg = s.build_config(g)?;
    let pts = read_points(points)?;
    let t0 = Instant::now();
    let st = RangeStructure::build(&pts, cfg)?;
    eprintln!("built n = {} q = {} {} in {:.3} s", pts.len(), cfg.q, cfg.mode.name(), t0.elapsed().as_secs_f64());
    emit_json(g.out.as_deref(), &artifact(g.seed, &cfg, BuildBody { points, n: pts.len(), space: st.space_report() }))
}

#[derive(Serialize)]
struct QueryBody {
    ids: Vec<u32>,
    stats: CostStats,
}

pub fn query(g: &Globals, points: &Path, range: &Path, s: &StructureArgs, verify: bool) -> Result<()> {
    let cfg = s.build_config(g)?;
    let pts = read_points(points)?;
    let range: QueryRange = read_json(range)?;
    let st = RangeStructure::build(&pts, cfg)?;
    let (ids, stats) = st.query(&range)?;
    if verify {
        let expected = brute_force_query(&pts, &range);
        if expected != ids {
            return Err(CheckFailed(format!(
                "structure returned {} ids, brute force {}",
                ids.len(),
                expected.len()
            ))
            .into());
        }
    }
    emit_json(g.out.as_deref(), &artifact(g.seed, &cfg, QueryBody { ids, stats }))
}
