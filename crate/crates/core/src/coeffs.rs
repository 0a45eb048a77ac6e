//! Coefficient recovery from known zeros through the confluent Vandermonde
//! system G f_Ω = f(B), and the full reconstruction pipeline.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result, Stage, StageError};
use crate::ideal::{reconstruct_ideal, IdealData, DEFAULT_RANK_TOL};
use crate::index::{binomial, gamma_set, upsilon_set, IndexSet, MultiIndex};
use crate::linalg::{norm, svd, Mat, C64};
use crate::poly::Poly;
use crate::signal::{point_power, ExpPolyModel, SampleSource};
use crate::zeros::{
    build_tables, frequencies_from_zeros, joint_eigen_checked, verify_zero_residual, ZeroCluster,
    DEFAULT_CLUSTER_TOL, DEFAULT_SEED,
};

/// Coefficients below this fraction of the full coefficient norm are dropped.
pub const PRUNE_TOL: f64 = 1e-9;
/// Relative least-squares residual above which the system counts as
/// inconsistent with the data.
const CONSISTENCY_TOL: f64 = 1e-7;
/// Largest accepted kernel residual at a recovered zero.
const ZERO_RESIDUAL_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct CoefficientSystem {
    clusters: Vec<ZeroCluster>,
    blocks: Vec<IndexSet>,
    rows: IndexSet,
    matrix: Mat,
    rhs: Vec<C64>,
}

impl CoefficientSystem {
    pub fn clusters(&self) -> &[ZeroCluster] {
        &self.clusters
    }

    /// Exponent set Γ_{d̂} of each component.
    pub fn blocks(&self) -> &[IndexSet] {
        &self.blocks
    }

    /// The sample rows B.
    pub fn rows(&self) -> &IndexSet {
        &self.rows
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn rhs(&self) -> &[C64] {
        &self.rhs
    }

    /// Least-squares solution with column equilibration, and the residual
    /// ‖G x − f(B)‖ / ‖f(B)‖.
    pub fn least_squares(&self, tol: f64) -> Result<(Vec<C64>, f64)> {
        let n = self.matrix.cols();
        let weights: Vec<f64> = (0..n)
            .map(|j| {
                let c = norm(self.matrix.col(j));
                if c > 0.0 {
                    1.0 / c
                } else {
                    1.0
                }
            })
            .collect();
        let scaled = Mat::from_fn(self.matrix.rows(), n, |i, j| self.matrix[(i, j)] * weights[j]);
        let d = svd(&scaled);
        if d.rank(tol) < n {
            return Err(Error::Solve("degree bounds inconsistent with data (rank deficient system)".into()));
        }
        let y = d.solve(&self.rhs, tol);
        let x: Vec<C64> = y.iter().zip(&weights).map(|(v, w)| v * w).collect();
        let fit = self.matrix.mul_vec(&x);
        let rn = norm(&self.rhs);
        let res: Vec<C64> = fit.iter().zip(&self.rhs).map(|(a, b)| a - b).collect();
        let r = norm(&res);
        Ok((x, if rn > 0.0 { r / rn } else { r }))
    }
}

/// Rows B = Υ_M with M = Σ_ω C(d̂_ω + s, s) + 1.
pub fn required_rows(dim: usize, clusters: &[ZeroCluster]) -> Result<IndexSet> {
    let cols: u64 = clusters
        .iter()
        .map(|c| binomial(c.deg_bound as u64 + dim as u64, dim as u64))
        .sum();
    upsilon_set(dim, cols as usize + 1)
}

/// Assembles G with entries β^α ξ_ω^β (0⁰ = 1) and the samples f(B).
pub fn build_system(clusters: &[ZeroCluster], source: &SampleSource) -> Result<CoefficientSystem> {
    if clusters.is_empty() {
        return Err(Error::Invalid("no zeros to build a coefficient system from".into()));
    }
    let dim = source.dim();
    for c in clusters {
        if c.xi.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: c.xi.len(),
            });
        }
    }
    let rows = required_rows(dim, clusters)?;
    let blocks: Vec<IndexSet> = clusters
        .iter()
        .map(|c| gamma_set(dim, c.deg_bound))
        .collect::<Result<_>>()?;
    let ncols: usize = blocks.iter().map(|b| b.len()).sum();
    let mut matrix = Mat::zeros(rows.len(), ncols);
    let mut col = 0;
    for (c, block) in clusters.iter().zip(&blocks) {
        for alpha in block.iter() {
            for (i, beta) in rows.iter().enumerate() {
                let p: Vec<i64> = beta.entries().iter().map(|&b| b as i64).collect();
                matrix[(i, col)] = monomial_at(beta, alpha) * point_power(&c.xi, &p);
            }
            col += 1;
        }
    }
    let rhs = rows.iter().map(|b| source.sample_index(b)).collect::<Result<Vec<_>>>()?;
    Ok(CoefficientSystem {
        clusters: clusters.to_vec(),
        blocks,
        rows,
        matrix,
        rhs,
    })
}

/// β^α with 0⁰ = 1.
fn monomial_at(beta: &MultiIndex, alpha: &MultiIndex) -> f64 {
    beta.entries()
        .iter()
        .zip(alpha.entries())
        .map(|(&b, &a)| (b as f64).powi(a as i32))
        .product()
}

fn assemble(system: &CoefficientSystem, x: &[C64]) -> Result<ExpPolyModel> {
    let dim = system.rows.dim();
    let total = norm(x);
    let cutoff = PRUNE_TOL * total;
    let mut model = ExpPolyModel::empty(dim)?;
    let mut off = 0;
    for (c, block) in system.clusters.iter().zip(&system.blocks) {
        let coeffs = &x[off..off + block.len()];
        off += block.len();
        let poly = Poly::from_coeff_vector(block, coeffs).pruned(cutoff);
        if poly.is_zero() {
            continue;
        }
        model.push(c.omega()?, poly)?;
    }
    Ok(model)
}

/// Least-squares coefficients, pruned and attached to the cluster
/// frequencies.
pub fn solve_coefficients(system: &CoefficientSystem) -> Result<ExpPolyModel> {
    let (x, _) = system.least_squares(DEFAULT_RANK_TOL)?;
    assemble(system, &x)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub rank: f64,
    pub cluster: f64,
    pub seed: u64,
    /// Gauss–Newton polishing of zeros and coefficients against the samples.
    pub refine: bool,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank: DEFAULT_RANK_TOL,
            cluster: DEFAULT_CLUSTER_TOL,
            seed: DEFAULT_SEED,
            refine: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    /// (n, rank F_{Υ_N, Γ_n}).
    pub trace: Vec<(u32, usize)>,
    /// verify_zero_residual per cluster.
    pub cluster_residuals: Vec<f64>,
    /// Relative least-squares residual of the coefficient system.
    pub solve_residual: f64,
    /// Relative residual of the final model on the comparison grid before
    /// and after polishing.
    pub fit_residual: (f64, f64),
    /// max |f̂(α) − f(α)| / max |f(α)| over the sampled grid.
    pub resynthesis_error: f64,
    /// Number of grid points in the resynthesis comparison.
    pub grid_points: usize,
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub model: ExpPolyModel,
    pub ideal: IdealData,
    pub clusters: Vec<ZeroCluster>,
    pub report: Report,
}

fn tag(stage: Stage) -> impl Fn(Error) -> StageError {
    move |error| StageError { stage, error }
}

/// Points where the reconstruction is compared against the data: the whole
/// table for stored samples, and everything the pipeline touched otherwise.
fn comparison_grid(source: &SampleSource, ideal: &IdealData, rows: Option<&IndexSet>) -> Vec<Vec<i64>> {
    match source {
        SampleSource::Table(t) => t.points(),
        SampleSource::Model(_) => {
            let cols = gamma_set(ideal.dim(), ideal.max_degree() + 1).expect("valid dimension");
            let mut touched = ideal.rows().sum(&cols);
            if let Some(b) = rows {
                touched = IndexSet::from_members(
                    ideal.dim(),
                    touched.iter().chain(b.iter()).cloned(),
                )
                .expect("same dimension");
            }
            touched
                .iter()
                .map(|a| a.entries().iter().map(|&x| x as i64).collect())
                .collect()
        }
    }
}

fn resynthesis_error(source: &SampleSource, model: &ExpPolyModel, grid: &[Vec<i64>]) -> Result<f64> {
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for p in grid {
        let f = source.sample(p)?;
        scale = scale.max(f.norm());
        worst = worst.max((model.sample(p)? - f).norm());
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

/// Ideal, tables, joint eigenvalues, frequencies, coefficient system and
/// solve, with every failure tagged by its stage.
pub fn end_to_end(
    source: &SampleSource,
    bound: usize,
    tol: &Tolerances,
) -> core::result::Result<Reconstruction, StageError> {
    let ideal = reconstruct_ideal(source, bound, tol.rank).map_err(tag(Stage::Ideal))?;
    let dim = ideal.dim();
    if ideal.multiplicity() == 0 {
        let model = ExpPolyModel::empty(dim).map_err(tag(Stage::Solve))?;
        let grid = comparison_grid(source, &ideal, None);
        let err = resynthesis_error(source, &model, &grid).map_err(tag(Stage::Solve))?;
        return Ok(Reconstruction {
            model,
            clusters: Vec::new(),
            report: Report {
                trace: ideal.trace().to_vec(),
                cluster_residuals: Vec::new(),
                solve_residual: 0.0,
                fit_residual: (0.0, 0.0),
                resynthesis_error: err,
                grid_points: grid.len(),
            },
            ideal,
        });
    }
    let tables = build_tables(&ideal, source).map_err(tag(Stage::Tables))?;
    let accept = |cs: &[ZeroCluster]| {
        cs.iter().all(|c| {
            verify_zero_residual(&ideal, c).is_ok_and(|r| r <= ZERO_RESIDUAL_TOL)
        })
    };
    let clusters =
        joint_eigen_checked(&tables, tol.cluster, tol.seed, accept).map_err(tag(Stage::Eigen))?;
    frequencies_from_zeros(&clusters).map_err(tag(Stage::Frequencies))?;
    let cluster_residuals: Vec<f64> = clusters
        .iter()
        .map(|c| verify_zero_residual(&ideal, c).unwrap_or(f64::INFINITY))
        .collect();

    let polish = if tol.refine { REFINE_STEPS } else { 0 };
    let mut outcome = solve_stage(source, &ideal, &clusters, polish);
    let tight = clusters.iter().any(|c| (c.deg_bound as usize) + 1 < c.mult);
    if outcome.is_err() && tight {
        // the nilpotency estimate may have been too small; fall back to the
        // always valid bound mult − 1
        let loose: Vec<ZeroCluster> = clusters
            .iter()
            .map(|c| ZeroCluster {
                deg_bound: (c.mult - 1) as u32,
                ..c.clone()
            })
            .collect();
        let retry = solve_stage(source, &ideal, &loose, polish);
        if retry.is_ok() {
            outcome = retry;
        }
    }
    let solved = outcome?;
    let err = resynthesis_error(source, &solved.model, &solved.grid).map_err(tag(Stage::Solve))?;
    Ok(Reconstruction {
        model: solved.model,
        clusters: solved.clusters,
        report: Report {
            trace: ideal.trace().to_vec(),
            cluster_residuals,
            solve_residual: solved.solve_residual,
            fit_residual: solved.fit_residual,
            resynthesis_error: err,
            grid_points: solved.grid.len(),
        },
        ideal,
    })
}

/// Gauss–Newton iterations for the polishing step.
const REFINE_STEPS: usize = 4;

struct Solved {
    model: ExpPolyModel,
    clusters: Vec<ZeroCluster>,
    grid: Vec<Vec<i64>>,
    solve_residual: f64,
    fit_residual: (f64, f64),
}

fn solve_stage(
    source: &SampleSource,
    ideal: &IdealData,
    clusters: &[ZeroCluster],
    polish: usize,
) -> core::result::Result<Solved, StageError> {
    let system = build_system(clusters, source).map_err(tag(Stage::System))?;
    let (mut x, mut solve_residual) = system
        .least_squares(DEFAULT_RANK_TOL)
        .map_err(tag(Stage::Solve))?;
    let grid = comparison_grid(source, ideal, Some(system.rows()));
    let samples: Vec<C64> = grid
        .iter()
        .map(|p| source.sample(p))
        .collect::<Result<_>>()
        .map_err(tag(Stage::Solve))?;
    let mut fitted = clusters.to_vec();
    let before = fit_residual(&grid, &samples, &fitted, system.blocks(), &x);
    let mut after = before;
    if polish > 0 && before > 0.0 {
        let (c2, x2, r2) = refine(&grid, &samples, &fitted, system.blocks(), &x, polish);
        if r2 < before {
            let refit = CoefficientSystem {
                clusters: c2.clone(),
                ..build_system(&c2, source).map_err(tag(Stage::System))?
            };
            solve_residual = relative_residual(&refit.matrix, &x2, &refit.rhs);
            fitted = c2;
            x = x2;
            after = r2;
        }
    }
    if after > CONSISTENCY_TOL {
        return Err(StageError {
            stage: Stage::Solve,
            error: Error::Solve(alloc::format!(
                "degree bounds inconsistent with data (relative residual {after:.3e})"
            )),
        });
    }
    let system = CoefficientSystem {
        clusters: fitted.clone(),
        ..system
    };
    let model = assemble(&system, &x).map_err(tag(Stage::Solve))?;
    Ok(Solved {
        model,
        clusters: fitted,
        grid,
        solve_residual,
        fit_residual: (before, after),
    })
}

fn relative_residual(m: &Mat, x: &[C64], rhs: &[C64]) -> f64 {
    let fit = m.mul_vec(x);
    let res: Vec<C64> = fit.iter().zip(rhs).map(|(a, b)| a - b).collect();
    let rn = norm(rhs);
    if rn > 0.0 {
        norm(&res) / rn
    } else {
        norm(&res)
    }
}

/// p^α for an integer point, 0⁰ = 1.
fn power_at(p: &[i64], alpha: &MultiIndex) -> f64 {
    p.iter()
        .zip(alpha.entries())
        .map(|(&b, &a)| (b as f64).powi(a as i32))
        .product()
}

/// Model values Σ_ω ξ_ω^p Σ_α x_{ω,α} p^α on the grid.
fn synthesize(grid: &[Vec<i64>], clusters: &[ZeroCluster], blocks: &[IndexSet], x: &[C64]) -> Vec<C64> {
    grid.iter()
        .map(|p| {
            let mut acc = C64::zero();
            let mut off = 0;
            for (c, block) in clusters.iter().zip(blocks) {
                let mut poly = C64::zero();
                for (k, alpha) in block.iter().enumerate() {
                    poly += x[off + k] * power_at(p, alpha);
                }
                off += block.len();
                acc += poly * point_power(&c.xi, p);
            }
            acc
        })
        .collect()
}

fn fit_residual(
    grid: &[Vec<i64>],
    samples: &[C64],
    clusters: &[ZeroCluster],
    blocks: &[IndexSet],
    x: &[C64],
) -> f64 {
    let model = synthesize(grid, clusters, blocks, x);
    let res: Vec<C64> = model.iter().zip(samples).map(|(a, b)| a - b).collect();
    let sn = norm(samples);
    if sn > 0.0 {
        norm(&res) / sn
    } else {
        norm(&res)
    }
}

/// Joint Gauss–Newton polish of zeros and coefficients. Each step solves
/// the linearized least-squares problem with equilibrated columns and is
/// kept only if it lowers the residual.
fn refine(
    grid: &[Vec<i64>],
    samples: &[C64],
    clusters: &[ZeroCluster],
    blocks: &[IndexSet],
    x: &[C64],
    steps: usize,
) -> (Vec<ZeroCluster>, Vec<C64>, f64) {
    let s = clusters.first().map_or(0, |c| c.xi.len());
    let nx = x.len();
    let ncols = nx + s * clusters.len();
    let mut cur_c = clusters.to_vec();
    let mut cur_x = x.to_vec();
    let mut cur_r = fit_residual(grid, samples, &cur_c, blocks, &cur_x);
    for _ in 0..steps {
        let model = synthesize(grid, &cur_c, blocks, &cur_x);
        let rhs: Vec<C64> = samples.iter().zip(&model).map(|(f, g)| f - g).collect();
        let mut jac = Mat::zeros(grid.len(), ncols);
        for (i, p) in grid.iter().enumerate() {
            let mut off = 0;
            for (w, (c, block)) in cur_c.iter().zip(blocks).enumerate() {
                let base = point_power(&c.xi, p);
                let mut poly = C64::zero();
                for (k, alpha) in block.iter().enumerate() {
                    let m = power_at(p, alpha);
                    jac[(i, off + k)] = base * m;
                    poly += cur_x[off + k] * m;
                }
                off += block.len();
                for j in 0..s {
                    jac[(i, nx + w * s + j)] = poly * base * p[j] as f64 / c.xi[j];
                }
            }
        }
        let weights: Vec<f64> = (0..ncols)
            .map(|j| {
                let n = norm(jac.col(j));
                if n > 0.0 {
                    1.0 / n
                } else {
                    1.0
                }
            })
            .collect();
        let scaled = Mat::from_fn(grid.len(), ncols, |i, j| jac[(i, j)] * weights[j]);
        let step: Vec<C64> = svd(&scaled)
            .solve(&rhs, 1e-13)
            .iter()
            .zip(&weights)
            .map(|(v, w)| v * w)
            .collect();
        let next_x: Vec<C64> = cur_x.iter().zip(&step).map(|(a, d)| a + d).collect();
        let next_c: Vec<ZeroCluster> = cur_c
            .iter()
            .enumerate()
            .map(|(w, c)| ZeroCluster {
                xi: c.xi.iter().enumerate().map(|(j, z)| z + step[nx + w * s + j]).collect(),
                ..c.clone()
            })
            .collect();
        let r = fit_residual(grid, samples, &next_c, blocks, &next_x);
        if !(r < cur_r) {
            break;
        }
        let gain = cur_r / r;
        cur_c = next_c;
        cur_x = next_x;
        cur_r = r;
        if gain < 1.5 {
            break;
        }
    }
    (cur_c, cur_x, cur_r)
}
