//! The four subcommands, each producing the bytes it writes.

use std::path::{Path, PathBuf};

use expoly_core::coeffs::{end_to_end, Tolerances};
use expoly_core::ideal::DEFAULT_RANK_TOL;
use expoly_core::index::{IndexSet, MultiIndex};
use expoly_core::poly::Poly;
use expoly_core::signal::{annihilation_residual, box_points, ExpPolyModel, SampleSource, SampleTable};
use expoly_core::stirling::{stirling, StirlingKind, StirlingTable};
use expoly_core::zeros::{DEFAULT_CLUSTER_TOL, DEFAULT_SEED};

use crate::error::CliError;
use crate::format::{parse_grid, parse_poly_text, read_samples, write_samples, write_stirling, ModelDoc};

/// Environment variable overriding the default seed.
pub const SEED_ENV: &str = "EXPOLY_SEED";
/// Largest relative annihilation residual accepted by `verify`.
pub const ANNIHILATION_TOL: f64 = 1e-8;
/// Largest relative resynthesis residual accepted by `verify`.
pub const RESYNTHESIS_TOL: f64 = 1e-8;

/// Settings shared by the reconstruction pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub samples: PathBuf,
    pub mult_bound: usize,
    pub rank_tol: f64,
    pub cluster_tol: f64,
    pub seed: u64,
    pub refine: bool,
}

impl RunConfig {
    pub fn new(samples: PathBuf, mult_bound: usize) -> Self {
        RunConfig {
            samples,
            mult_bound,
            rank_tol: DEFAULT_RANK_TOL,
            cluster_tol: DEFAULT_CLUSTER_TOL,
            seed: DEFAULT_SEED,
            refine: true,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.mult_bound == 0 {
            return Err(CliError::parse("--mult-bound must be at least 1"));
        }
        if !(self.rank_tol > 0.0) || !(self.cluster_tol > 0.0) {
            return Err(CliError::parse("tolerances must be positive"));
        }
        Ok(())
    }

    fn tolerances(&self) -> Tolerances {
        Tolerances {
            rank: self.rank_tol,
            cluster: self.cluster_tol,
            seed: self.seed,
            refine: self.refine,
        }
    }
}

/// The seed from the environment override, or the built-in default.
pub fn default_seed() -> Result<u64, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::parse(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    Ok(std::fs::read_to_string(path)?)
}

fn load_samples(path: &Path) -> Result<SampleTable, CliError> {
    read_samples(std::fs::File::open(path)?)
}

pub fn synth(model: &Path, grid: &str) -> Result<Vec<u8>, CliError> {
    let doc = ModelDoc::from_json(&read_text(model)?)?;
    let model = doc.model()?;
    let (lo, hi) = parse_grid(model.dim(), grid)?;
    let table = SampleTable::from_model(&model, &lo, &hi)?;
    let mut out = Vec::new();
    write_samples(&mut out, &table)?;
    Ok(out)
}

pub fn reconstruct(config: &RunConfig) -> Result<Vec<u8>, CliError> {
    config.validate()?;
    let table = load_samples(&config.samples)?;
    let source = SampleSource::Table(table);
    let result = end_to_end(&source, config.mult_bound, &config.tolerances())?;
    Ok(ModelDoc::from_reconstruction(&result).to_json().into_bytes())
}

/// Outcome of `verify`: the printable report and the overall verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub report: String,
    pub pass: bool,
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// All α ≥ 0 whose shifts by the support of q stay inside the table.
fn annihilation_points(table: &SampleTable, q: &Poly) -> Result<IndexSet, CliError> {
    let dim = table.dim();
    let q = q.to_monomial();
    let reach: Vec<i64> = (0..dim)
        .map(|j| q.terms().keys().map(|a| a.entries()[j] as i64).max().unwrap_or(0))
        .collect();
    let lo: Vec<i64> = table.lo().iter().map(|&l| l.max(0)).collect();
    let hi: Vec<i64> = table.hi().iter().zip(&reach).map(|(h, r)| h - r).collect();
    if lo.iter().zip(&hi).any(|(l, h)| l > h) {
        let first: Vec<u32> = reach.iter().map(|&r| r as u32).collect();
        return Err(expoly_core::error::Error::Coverage(MultiIndex::new(first)).into());
    }
    let members = box_points(&lo, &hi)?
        .into_iter()
        .map(|p| MultiIndex::new(p.into_iter().map(|v| v as u32).collect()));
    Ok(IndexSet::from_members(dim, members)?)
}

fn resynthesis(table: &SampleTable, model: &ExpPolyModel) -> Result<f64, CliError> {
    let source = SampleSource::Table(table.clone());
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for p in table.points() {
        let f = source.sample(&p)?;
        scale = scale.max(f.norm());
        worst = worst.max((model.sample(&p)? - f).norm());
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

pub fn verify(samples: &Path, model: Option<&Path>, kernels: &[String]) -> Result<Verification, CliError> {
    let table = load_samples(samples)?;
    let dim = table.dim();
    let doc = match model {
        Some(path) => Some(ModelDoc::from_json(&read_text(path)?)?),
        None => None,
    };
    if let Some(d) = &doc {
        if d.dim != dim {
            return Err(CliError::parse(format!(
                "model dimension {} does not match sample dimension {dim}",
                d.dim
            )));
        }
    }
    let mut polys = match &doc {
        Some(d) => d.kernel()?,
        None => Vec::new(),
    };
    for text in kernels {
        polys.push(parse_poly_text(dim, text)?);
    }

    let source = SampleSource::Table(table.clone());
    let mut lines = Vec::new();
    let mut pass = true;
    for (k, q) in polys.iter().enumerate() {
        let points = annihilation_points(&table, q)?;
        let r = annihilation_residual(&source, q, &points)?;
        let ok = r <= ANNIHILATION_TOL;
        pass &= ok;
        lines.push(format!("kernel {} annihilation {r:.3e} {}", k + 1, verdict(ok)));
    }
    if polys.is_empty() {
        lines.push("kernel empty: nothing to annihilate, trivially PASS".to_string());
    }
    if let Some(d) = &doc {
        let r = resynthesis(&table, &d.model()?)?;
        let ok = r <= RESYNTHESIS_TOL;
        pass &= ok;
        lines.push(format!("resynthesis {r:.3e} {}", verdict(ok)));
    }
    lines.push(format!("overall {}", verdict(pass)));
    let mut report = lines.join("\n");
    report.push('\n');
    Ok(Verification { report, pass })
}

/// One exact value followed by a newline.
pub fn stirling_value(kind: StirlingKind, nu: &str, kappa: &str) -> Result<Vec<u8>, CliError> {
    let nu = parse_index(nu)?;
    let kappa = parse_index(kappa)?;
    Ok(format!("{}\n", stirling(kind, &nu, &kappa)?).into_bytes())
}

fn parse_index(text: &str) -> Result<MultiIndex, CliError> {
    text.split(',')
        .map(|v| v.trim().parse::<u32>().map_err(|_| CliError::parse(format!("bad multiindex entry `{v}`"))))
        .collect::<Result<Vec<_>, _>>()
        .map(MultiIndex::new)
}

pub fn stirling_table(kind: StirlingKind, dim: usize, max: u32) -> Result<Vec<u8>, CliError> {
    let table = StirlingTable::build(kind, dim, max)?;
    let mut out = Vec::new();
    write_stirling(&mut out, &table)?;
    Ok(out)
}
