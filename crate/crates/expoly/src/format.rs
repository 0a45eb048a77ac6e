//! File formats: model JSON, polynomial text, sample and Stirling CSV, grid
//! boxes.

use std::io::{Read, Write};

use expoly_core::coeffs::Reconstruction;
use expoly_core::index::MultiIndex;
use expoly_core::linalg::C64;
use expoly_core::poly::{Basis, Poly};
use expoly_core::signal::{box_points, ExpPolyModel, SampleTable};
use expoly_core::stirling::StirlingTable;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A polynomial either as `re,im:e1,..,es;...` text or as an explicit term
/// list.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum PolyDoc {
    Text(String),
    Terms { terms: Vec<TermDoc> },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TermDoc {
    pub exp: Vec<u32>,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ComponentDoc {
    pub omega: Vec<[f64; 2]>,
    pub poly: PolyDoc,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ClusterDoc {
    pub xi: Vec<[f64; 2]>,
    pub omega: Vec<[f64; 2]>,
    pub mult: usize,
    pub deg_bound: u32,
    pub spread: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct IdealDoc {
    pub bound: usize,
    pub normal_set: Vec<Vec<u32>>,
    pub kernel: Vec<PolyDoc>,
    /// (n, rank) pairs of the affine Hilbert function.
    pub trace: Vec<(u32, usize)>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ReportDoc {
    pub cluster_residuals: Vec<f64>,
    pub solve_residual: f64,
    pub fit_residual: [f64; 2],
    pub resynthesis_error: f64,
    pub grid_points: usize,
}

/// Model JSON. Reconstruction output adds clusters, ideal and report; the
/// model part keeps the input schema so outputs can be fed back in.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ModelDoc {
    pub dim: usize,
    pub components: Vec<ComponentDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clusters: Option<Vec<ClusterDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ideal: Option<IdealDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ReportDoc>,
}

fn pair(z: C64) -> [f64; 2] {
    [clean(z.re), clean(z.im)]
}

/// Maps −0 to 0 so that output does not depend on roundoff signs.
fn clean(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

pub fn parse_poly_text(dim: usize, text: &str) -> Result<Poly, CliError> {
    let mut terms = Vec::new();
    for item in text.split(';').map(str::trim).filter(|t| !t.is_empty()) {
        let (coef, exp) = item
            .split_once(':')
            .ok_or_else(|| CliError::parse(format!("polynomial term `{item}` lacks `:`")))?;
        let (re, im) = coef
            .split_once(',')
            .ok_or_else(|| CliError::parse(format!("coefficient `{coef}` must be `re,im`")))?;
        let c = C64::new(parse_f64(re)?, parse_f64(im)?);
        let e: Vec<u32> = exp
            .split(',')
            .map(|v| v.trim().parse::<u32>().map_err(|_| CliError::parse(format!("bad exponent `{v}`"))))
            .collect::<Result<_, _>>()?;
        if e.len() != dim {
            return Err(CliError::parse(format!(
                "term `{item}` has {} exponents, expected {dim}",
                e.len()
            )));
        }
        terms.push((MultiIndex::new(e), c));
    }
    Ok(Poly::from_terms(dim, Basis::Monomial, terms)?)
}

pub fn format_poly_text(p: &Poly) -> String {
    p.to_monomial()
        .terms()
        .iter()
        .map(|(a, c)| {
            let [re, im] = pair(*c);
            format!("{re},{im}:{a}")
        })
        .collect::<Vec<_>>()
        .join(";")
}

fn parse_f64(s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::parse(format!("bad number `{}`", s.trim())))
}

impl PolyDoc {
    pub fn to_poly(&self, dim: usize) -> Result<Poly, CliError> {
        match self {
            PolyDoc::Text(t) => parse_poly_text(dim, t),
            PolyDoc::Terms { terms } => {
                let mut items = Vec::with_capacity(terms.len());
                for t in terms {
                    if t.exp.len() != dim {
                        return Err(CliError::parse(format!(
                            "term exponent {:?} does not have {dim} entries",
                            t.exp
                        )));
                    }
                    items.push((MultiIndex::new(t.exp.clone()), C64::new(t.re, t.im)));
                }
                Ok(Poly::from_terms(dim, Basis::Monomial, items)?)
            }
        }
    }

    pub fn from_poly(p: &Poly) -> Self {
        PolyDoc::Terms {
            terms: p
                .to_monomial()
                .terms()
                .iter()
                .map(|(a, c)| {
                    let [re, im] = pair(*c);
                    TermDoc {
                        exp: a.entries().to_vec(),
                        re,
                        im,
                    }
                })
                .collect(),
        }
    }
}

impl ModelDoc {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::parse(format!("model JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("finite values serialize");
        s.push('\n');
        s
    }

    pub fn model(&self) -> Result<ExpPolyModel, CliError> {
        let mut model = ExpPolyModel::empty(self.dim)?;
        for (k, comp) in self.components.iter().enumerate() {
            if comp.omega.len() != self.dim {
                return Err(CliError::parse(format!(
                    "component {k}: omega has {} entries, expected {}",
                    comp.omega.len(),
                    self.dim
                )));
            }
            let omega = comp.omega.iter().map(|&[re, im]| C64::new(re, im)).collect();
            model.push(omega, comp.poly.to_poly(self.dim)?)?;
        }
        Ok(model)
    }

    /// Kernel polynomials recorded by a reconstruction, if any.
    pub fn kernel(&self) -> Result<Vec<Poly>, CliError> {
        match &self.ideal {
            Some(ideal) => ideal.kernel.iter().map(|q| q.to_poly(self.dim)).collect(),
            None => Ok(Vec::new()),
        }
    }

    pub fn from_model(model: &ExpPolyModel) -> Self {
        ModelDoc {
            dim: model.dim(),
            components: model
                .components()
                .iter()
                .map(|c| ComponentDoc {
                    omega: c.omega().iter().map(|&w| pair(w)).collect(),
                    poly: PolyDoc::from_poly(c.poly()),
                })
                .collect(),
            clusters: None,
            ideal: None,
            report: None,
        }
    }

    pub fn from_reconstruction(r: &Reconstruction) -> Self {
        let mut doc = ModelDoc::from_model(&r.model);
        doc.clusters = Some(
            r.clusters
                .iter()
                .map(|c| ClusterDoc {
                    xi: c.xi.iter().map(|&z| pair(z)).collect(),
                    omega: c.omega().map(|w| w.into_iter().map(pair).collect()).unwrap_or_default(),
                    mult: c.mult,
                    deg_bound: c.deg_bound,
                    spread: clean(c.spread),
                })
                .collect(),
        );
        doc.ideal = Some(IdealDoc {
            bound: r.ideal.bound(),
            normal_set: r.ideal.normal_set().iter().map(|a| a.entries().to_vec()).collect(),
            kernel: r.ideal.kernel().iter().map(PolyDoc::from_poly).collect(),
            trace: r.ideal.trace().to_vec(),
        });
        doc.report = Some(ReportDoc {
            cluster_residuals: r.report.cluster_residuals.clone(),
            solve_residual: r.report.solve_residual,
            fit_residual: [r.report.fit_residual.0, r.report.fit_residual.1],
            resynthesis_error: r.report.resynthesis_error,
            grid_points: r.report.grid_points,
        });
        doc
    }
}

/// Parses `box:lo..hi[,lo..hi]...`. A single range applies to every
/// coordinate.
pub fn parse_grid(dim: usize, text: &str) -> Result<(Vec<i64>, Vec<i64>), CliError> {
    let body = text
        .strip_prefix("box:")
        .ok_or_else(|| CliError::parse(format!("grid `{text}` must start with `box:`")))?;
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for range in body.split(',') {
        let (a, b) = range
            .split_once("..")
            .ok_or_else(|| CliError::parse(format!("range `{range}` must be `lo..hi`")))?;
        let a: i64 = a.trim().parse().map_err(|_| CliError::parse(format!("bad bound `{a}`")))?;
        let b: i64 = b.trim().parse().map_err(|_| CliError::parse(format!("bad bound `{b}`")))?;
        if a > b {
            return Err(CliError::parse(format!("empty range `{range}`")));
        }
        lo.push(a);
        hi.push(b);
    }
    if lo.len() == 1 && dim > 1 {
        lo = vec![lo[0]; dim];
        hi = vec![hi[0]; dim];
    }
    if lo.len() != dim {
        return Err(CliError::parse(format!(
            "grid has {} ranges, model dimension is {dim}",
            lo.len()
        )));
    }
    Ok((lo, hi))
}

/// Writes `a1,...,as,re,im` rows in graded order.
pub fn write_samples<W: Write>(out: W, table: &SampleTable) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let dim = table.dim();
    let mut header: Vec<String> = (1..=dim).map(|j| format!("a{j}")).collect();
    header.push("re".into());
    header.push("im".into());
    w.write_record(&header)?;
    let source = expoly_core::signal::SampleSource::Table(table.clone());
    for p in box_points(table.lo(), table.hi())? {
        let v = source.sample(&p)?;
        let mut rec: Vec<String> = p.iter().map(|a| a.to_string()).collect();
        rec.push(clean(v.re).to_string());
        rec.push(clean(v.im).to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples<R: Read>(input: R) -> Result<SampleTable, CliError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = r.headers()?.clone();
    let cols = header.len();
    if cols < 3 {
        return Err(CliError::parse("sample CSV needs columns a1,...,as,re,im"));
    }
    let dim = cols - 2;
    let expected: Vec<String> = (1..=dim)
        .map(|j| format!("a{j}"))
        .chain(["re".to_string(), "im".to_string()])
        .collect();
    if header.iter().zip(&expected).any(|(h, e)| h != e) {
        return Err(CliError::parse(format!(
            "sample CSV header must be `{}`",
            expected.join(",")
        )));
    }
    let mut points = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != cols {
            return Err(CliError::parse(format!("row {}: expected {cols} fields", line + 2)));
        }
        let p: Vec<i64> = rec
            .iter()
            .take(dim)
            .map(|v| v.parse::<i64>().map_err(|_| CliError::parse(format!("row {}: bad index `{v}`", line + 2))))
            .collect::<Result<_, _>>()?;
        let v = C64::new(parse_f64(&rec[dim])?, parse_f64(&rec[dim + 1])?);
        points.push((p, v));
    }
    SampleTable::from_points(dim, points).map_err(|e| CliError::parse(format!("sample CSV: {e}")))
}

/// Writes `nu1..nus,kappa1..kappas,value` rows.
pub fn write_stirling<W: Write>(out: W, table: &StirlingTable) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header: Vec<String> = (1..=table.dim).map(|j| format!("nu{j}")).collect();
    header.extend((1..=table.dim).map(|j| format!("kappa{j}")));
    header.push("value".into());
    w.write_record(&header)?;
    for (nu, kappa, v) in &table.entries {
        let rec: Vec<String> = nu
            .entries()
            .iter()
            .chain(kappa.entries())
            .map(|a| a.to_string())
            .chain(std::iter::once(v.to_string()))
            .collect();
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
