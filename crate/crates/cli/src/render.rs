use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use rangelab::curve::{trace_zero_set, Rect};
use rangelab::rrds::suite::uniform_points;
use rangelab::rrds::{QueryRange, RangeStructure, RegionKind, UsedCover, Verdict};

use crate::common::{emit, read_json, read_points, Globals, StructureArgs, VERSION};

#[derive(Args, Clone, Debug)]
pub struct RenderArgs {
    /// Points CSV; uniform points from the seed when absent.
    #[arg(long)]
    points: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Query range JSON; only the grid is drawn when absent.
    #[arg(long)]
    range: Option<PathBuf>,
    #[arg(long)]
    show_points: bool,
    #[command(flatten)]
    structure: StructureArgs,
}

const SIZE: f64 = 800.0;
const LEVEL_COLORS: [&str; 8] = ["#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00", "#a65628", "#f781bf", "#999999"];

fn px(p: [f64; 2]) -> (f64, f64) {
    (p[0] * SIZE, (1.0 - p[1]) * SIZE)
}

fn path_of(points: &[[f64; 2]], closed: bool) -> String {
    let mut d = String::new();
    for (i, &p) in points.iter().enumerate() {
        let (x, y) = px(p);
        let _ = write!(d, "{}{x:.2},{y:.2} ", if i == 0 { "M" } else { "L" });
    }
    if closed {
        d.push('Z');
    }
    d
}

/// Outline of a polynomial strip, sampled across its cell and clipped to
/// the cell's rows.
fn poly_strip_outline(s: &rangelab::cover::PolySlab) -> Vec<[f64; 2]> {
    let g = s.family.grid;
    let (x0, x1) = s.x_range();
    let (y0, y1) = (g.line(s.family.cell.row), g.line(s.family.cell.row + 1));
    let xs: Vec<f64> = (0..=16).map(|i| x0 + (x1 - x0) * i as f64 / 16.0).collect();
    let mut out: Vec<[f64; 2]> = xs.iter().map(|&x| [x, s.lower(x).clamp(y0, y1)]).collect();
    out.extend(xs.iter().rev().map(|&x| [x, s.upper(x).clamp(y0, y1)]));
    out
}

/// The SVG document. Coordinates are printed with fixed precision so the
/// output is byte-for-byte reproducible.
pub fn render_svg(st: &RangeStructure, range: Option<&QueryRange>, show_points: bool, seed: u64) -> Result<String> {
    let g = st.grid();
    let q = g.q();
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#)?;
    let meta = serde_json::json!({ "version": VERSION, "seed": seed, "config": st.config() });
    writeln!(s, "<metadata>{}</metadata>", meta.to_string().replace('&', "&amp;").replace('<', "&lt;"))?;
    writeln!(s, r##"<rect width="{SIZE}" height="{SIZE}" fill="#ffffff"/>"##)?;

    let parts = range.map(|r| r.conjuncts()).unwrap_or_default();
    if let (Some(r), false) = (range, parts.is_empty()) {
        let out = st.query_detailed(r)?;
        writeln!(s, r#"<g id="chunks">"#)?;
        for region in &out.report.regions {
            if let RegionKind::Chunk { col, row_lo, row_hi } = region.kind {
                let fill = match region.verdict {
                    Verdict::Inside => "#c7e9c0",
                    Verdict::Outside => "#f0f0f0",
                    Verdict::Scanned => "#fee391",
                };
                let (x, y) = px([g.line(col), g.line(row_hi + 1)]);
                let h = (row_hi + 1 - row_lo) as f64 * SIZE / q as f64;
                writeln!(s, r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{h:.2}" fill="{fill}"/>"#, SIZE / q as f64)?;
            }
        }
        writeln!(s, "</g>")?;
        writeln!(s, r#"<g id="slabs" fill-opacity="0.35" stroke-width="0.5">"#)?;
        for cover in &out.report.covers {
            let polys: Vec<(u32, Vec<[f64; 2]>)> = match cover {
                UsedCover::Rotated(c) => match st.rotated_catalog() {
                    Some(cat) => {
                        let f = c.family(cat);
                        (c.lo..=c.hi).map(|k| (c.level, f.polygon(k))).collect()
                    }
                    None => Vec::new(),
                },
                UsedCover::Taylor(c) => c.slabs().iter().map(|sl| (sl.level(), poly_strip_outline(sl))).collect(),
            };
            for (level, poly) in polys {
                let col = LEVEL_COLORS[level as usize % LEVEL_COLORS.len()];
                writeln!(s, r#"<path d="{}" fill="{col}" stroke="{col}"/>"#, path_of(&poly, true))?;
            }
        }
        writeln!(s, "</g>")?;
    }

    writeln!(s, r##"<g id="grid" stroke="#bbbbbb" stroke-width="0.5">"##)?;
    for k in 0..=q {
        let v = g.line(k) * SIZE;
        writeln!(s, r#"<line x1="{v:.2}" y1="0" x2="{v:.2}" y2="{SIZE}"/>"#)?;
        writeln!(s, r#"<line x1="0" y1="{v:.2}" x2="{SIZE}" y2="{v:.2}"/>"#)?;
    }
    writeln!(s, "</g>")?;

    if !parts.is_empty() {
        writeln!(s, r##"<g id="boundary" fill="none" stroke="#000000" stroke-width="1.2">"##)?;
        let step = 1.0 / (16.0 * q as f64);
        for part in &parts {
            for line in trace_zero_set(&part.poly, &Rect::unit(), step)? {
                writeln!(s, r#"<path d="{}"/>"#, path_of(&line.points, line.closed))?;
            }
        }
        writeln!(s, "</g>")?;
    }
    if show_points {
        writeln!(s, r##"<g id="points" fill="#333333">"##)?;
        for &p in st.points() {
            let (x, y) = px(p);
            writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="1"/>"#)?;
        }
        writeln!(s, "</g>")?;
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn run(g: &Globals, a: &RenderArgs) -> Result<()> {
    let cfg = a.structure.build_config(g)?;
    let pts = match &a.points {
        Some(p) => read_points(p)?,
        None => uniform_points(a.n, g.seed),
    };
    let range: Option<QueryRange> = a.range.as_deref().map(read_json).transpose()?;
    let st = RangeStructure::build(&pts, cfg)?;
    emit(g.out.as_deref(), &render_svg(&st, range.as_ref(), a.show_points, g.seed)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rangelab::poly::MultiPoly;
    use rangelab::rrds::{BuildConfig, Mode, Sign};

    fn disk() -> QueryRange {
        let p = MultiPoly::bivariate(&[(2, 0, 1.0), (1, 0, -1.0), (0, 2, 1.0), (0, 1, -1.0), (0, 0, 0.41)]);
        QueryRange::single(p, Sign::Le)
    }

    #[test]
    fn empty_range_draws_only_the_grid() {
        let st = RangeStructure::build(&uniform_points(200, 1), BuildConfig::new(4, Mode::Curvature)).unwrap();
        let a = render_svg(&st, None, false, 1).unwrap();
        let b = render_svg(&st, Some(&QueryRange::default()), false, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.matches("<line").count(), 10);
        assert!(!a.contains(r#"id="boundary""#) && !a.contains(r#"id="slabs""#));
    }

    #[test]
    fn disk_render_is_deterministic_and_complete() {
        for mode in [Mode::Curvature, Mode::derivative()] {
            let st = RangeStructure::build(&uniform_points(500, 2), BuildConfig::new(8, mode)).unwrap();
            let a = render_svg(&st, Some(&disk()), true, 2).unwrap();
            assert_eq!(a, render_svg(&st, Some(&disk()), true, 2).unwrap());
            assert!(a.contains(r#"<g id="boundary""#) && a.contains(r#"<g id="chunks">"#));
            assert_eq!(a.matches("<circle").count(), 500);
        }
    }
}
