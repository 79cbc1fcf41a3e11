use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use rangelab::rrds::{BuildConfig, Mode};
use serde::{de::DeserializeOwned, Serialize};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A check did not hold; maps to exit code 1.
#[derive(Debug)]
pub struct CheckFailed(pub String);

impl fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "check failed: {}", self.0)
    }
}

impl std::error::Error for CheckFailed {}

/// Settings shared by every subcommand.
#[derive(Clone, Debug)]
pub struct Globals {
    pub seed: u64,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Globals {
    /// Reads the `--config` file, or returns `fallback`.
    pub fn load_config<T: DeserializeOwned>(&self, fallback: T) -> Result<T> {
        match &self.config {
            None => Ok(fallback),
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeName {
    Curvature,
    Derivative,
}

#[derive(Args, Clone, Debug)]
pub struct StructureArgs {
    /// Grid resolution.
    #[arg(long)]
    pub q: Option<u32>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeName>,
    /// Derivative order of the polynomial strips.
    #[arg(long)]
    pub delta: Option<u32>,
    /// Derivative bound of the polynomial strips.
    #[arg(long)]
    pub c: Option<f64>,
}

impl StructureArgs {
    /// Flags override the config file, which overrides the defaults.
    pub fn build_config(&self, g: &Globals) -> Result<BuildConfig> {
        let mut cfg = g.load_config(BuildConfig::new(16, Mode::Curvature))?;
        if let Some(q) = self.q {
            cfg.q = q;
        }
        let (d0, c0) = match cfg.mode {
            Mode::Derivative { delta, c } => (delta, c),
            Mode::Curvature => (3, 2.0),
        };
        cfg.mode = match (self.mode, cfg.mode) {
            (Some(ModeName::Curvature), _) => Mode::Curvature,
            (Some(ModeName::Derivative), _) | (None, Mode::Derivative { .. }) => {
                Mode::Derivative { delta: self.delta.unwrap_or(d0), c: self.c.unwrap_or(c0) }
            }
            (None, Mode::Curvature) => Mode::Curvature,
        };
        cfg.seed = g.seed;
        if cfg.q < 2 {
            bail!("--q must be at least 2");
        }
        Ok(cfg)
    }
}

#[derive(Serialize)]
pub struct Artifact<'a, C: Serialize, T: Serialize> {
    pub version: &'static str,
    pub seed: u64,
    pub config: &'a C,
    #[serde(flatten)]
    pub body: T,
}

pub fn artifact<'a, C: Serialize, T: Serialize>(seed: u64, config: &'a C, body: T) -> Artifact<'a, C, T> {
    Artifact { version: VERSION, seed, config, body }
}

/// One-line JSON header for CSV artifacts, written as a `#` comment.
pub fn csv_header<C: Serialize>(seed: u64, config: &C) -> Result<String> {
    Ok(format!("# {}\n", serde_json::to_string(&artifact(seed, config, serde_json::json!({})))?))
}

/// Writes to the path or to stdout.
pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut s = io::stdout().lock();
            s.write_all(text.as_bytes())?;
            s.flush()?;
            Ok(())
        }
    }
}

pub fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(out, &text)
}

pub fn read_points(path: &Path) -> Result<Vec<[f64; 2]>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<(f64, f64)>().enumerate() {
        let (x, y) = rec.with_context(|| format!("{}: row {}", path.display(), i + 1))?;
        out.push([x, y]);
    }
    Ok(out)
}

pub fn points_csv<C: Serialize>(points: &[[f64; 2]], seed: u64, config: &C) -> Result<String> {
    let mut s = csv_header(seed, config)?;
    s.push_str("x,y\n");
    for p in points {
        // Display prints the shortest string that parses back to the same f64
        s.push_str(&format!("{},{}\n", p[0], p[1]));
    }
    Ok(s)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
