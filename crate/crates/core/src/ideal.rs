//! Graded recovery of the annihilating ideal from Hankel kernels.
//!
//! Rows are fixed to the hyperbolic orthant Υ_N. Columns x^β are appended
//! in graded order and orthogonalized against the columns kept so far. A
//! column that still contributes a new direction joins the normal set; any
//! other column yields the ideal element x^β − NF(x^β). Rank is compared
//! per total degree and the sweep stops at the first degree that adds
//! nothing.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::index::{graded_enumerator, upsilon_set, IndexSet, MultiIndex};
use crate::linalg::{dot, norm, Mat, C64};
use crate::poly::Poly;
use crate::signal::{annihilation_residual, SampleSource};

/// Default relative threshold separating normal-set columns from kernel
/// columns.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Annihilation tolerance for the extra-row consistency check that
/// detects an undersized multiplicity bound.
const EXTENSION_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct IdealData {
    dim: usize,
    bound: usize,
    tol: f64,
    rows: IndexSet,
    kernel: Vec<Poly>,
    normal_set: IndexSet,
    trace: Vec<(u32, usize)>,
    normal_gaps: Vec<f64>,
    kernel_gaps: Vec<f64>,
    basis: Mat,
    triangle: Mat,
}

impl IdealData {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// The row set Υ_N.
    pub fn rows(&self) -> &IndexSet {
        &self.rows
    }

    /// Ideal elements with unit coefficient norm, orthonormal within each
    /// total degree.
    pub fn kernel(&self) -> &[Poly] {
        &self.kernel
    }

    pub fn normal_set(&self) -> &IndexSet {
        &self.normal_set
    }

    /// (n, rank F_{Υ_N, Γ_n}) for every processed degree.
    pub fn trace(&self) -> &[(u32, usize)] {
        &self.trace
    }

    /// Estimated total multiplicity.
    pub fn multiplicity(&self) -> usize {
        self.normal_set.len()
    }

    /// Largest total degree whose columns were processed.
    pub fn max_degree(&self) -> u32 {
        self.trace.last().map(|t| t.0).unwrap_or(0)
    }

    /// Relative residual of each normal-set column against the earlier ones.
    pub fn normal_gaps(&self) -> &[f64] {
        &self.normal_gaps
    }

    /// Relative residual of each column declared dependent.
    pub fn kernel_gaps(&self) -> &[f64] {
        &self.kernel_gaps
    }

    /// Orthonormal basis Q of the normal-set columns, F_{Υ_N,P} = Q R.
    pub(crate) fn column_basis(&self) -> &Mat {
        &self.basis
    }

    /// The triangular factor R of F_{Υ_N,P} = Q R.
    pub(crate) fn column_triangle(&self) -> &Mat {
        &self.triangle
    }
}

pub(crate) fn hankel_column(source: &SampleSource, rows: &IndexSet, beta: &MultiIndex) -> Result<Vec<C64>> {
    rows.iter().map(|a| source.sample_index(&a.add(beta))).collect()
}

/// Projects `c` off the orthonormal columns of `q`, twice for stability.
/// Returns the projection coefficients and the residual.
fn project_out(q: &[Vec<C64>], c: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let mut r = c.to_vec();
    let mut coef = vec![C64::zero(); q.len()];
    for _ in 0..2 {
        for (k, qk) in q.iter().enumerate() {
            let h = dot(qk, &r);
            coef[k] += h;
            for (ri, qi) in r.iter_mut().zip(qk) {
                *ri -= qi * h;
            }
        }
    }
    (coef, r)
}

/// Back substitution with the leading r×r block of an upper triangle.
pub(crate) fn solve_upper(t: &Mat, rhs: &[C64]) -> Vec<C64> {
    let n = rhs.len();
    let mut x = vec![C64::zero(); n];
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        for k in i + 1..n {
            acc -= t[(i, k)] * x[k];
        }
        x[i] = acc / t[(i, i)];
    }
    x
}

fn orthonormalize(batch: &mut [Vec<C64>]) {
    for k in 0..batch.len() {
        for _ in 0..2 {
            for j in 0..k {
                let h = dot(&batch[j], &batch[k]);
                let (done, rest) = batch.split_at_mut(k);
                for (x, y) in rest[0].iter_mut().zip(&done[j]) {
                    *x -= y * h;
                }
            }
        }
        let nk = norm(&batch[k]);
        for x in batch[k].iter_mut() {
            *x /= nk;
        }
    }
}

/// Runs the graded sweep with rows Υ_N.
pub fn reconstruct_ideal(source: &SampleSource, bound: usize, tol: f64) -> Result<IdealData> {
    if bound == 0 {
        return Err(Error::ZeroBound);
    }
    if !(tol > 0.0) {
        return Err(Error::Invalid("rank tolerance must be positive".into()));
    }
    let dim = source.dim();
    let rows = upsilon_set(dim, bound)?;
    let mut q: Vec<Vec<C64>> = Vec::new();
    let mut r_cols: Vec<Vec<C64>> = Vec::new();
    let mut normal: Vec<MultiIndex> = Vec::new();
    let mut normal_gaps = Vec::new();
    let mut kernel_gaps = Vec::new();
    let mut kernel: Vec<Poly> = Vec::new();
    let mut trace: Vec<(u32, usize)> = Vec::new();

    let mut cols = graded_enumerator(dim)?.peekable();
    let mut degree = 0u32;
    loop {
        // relations x^β − Σ c_γ x^γ found at this degree, as coefficient
        // lists over (normal set ∪ {β})
        let mut batch: Vec<(MultiIndex, Vec<C64>)> = Vec::new();
        while let Some(beta) = cols.next_if(|b| b.len() == degree) {
            let c = hankel_column(source, &rows, &beta)?;
            let cn = norm(&c);
            let (coef, res) = project_out(&q, &c);
            let rn = norm(&res);
            let gap = if cn > 0.0 { rn / cn } else { 0.0 };
            if gap > tol {
                let unit: Vec<C64> = res.iter().map(|x| x / rn).collect();
                let mut rc = coef;
                rc.push(C64::new(rn, 0.0));
                q.push(unit);
                r_cols.push(rc);
                normal.push(beta);
                normal_gaps.push(gap);
            } else {
                kernel_gaps.push(gap);
                batch.push((beta, coef));
            }
        }
        let rank = normal.len();
        trace.push((degree, rank));

        let triangle = triangle_from(&r_cols);
        let mut vecs: Vec<Vec<C64>> = Vec::new();
        let mut support: Vec<MultiIndex> = normal.clone();
        support.extend(batch.iter().map(|b| b.0.clone()));
        let support = IndexSet::from_members(dim, support)?;
        for (beta, coef) in &batch {
            let nf = solve_upper(&triangle, coef);
            let mut v = vec![C64::zero(); support.len()];
            for (g, c) in normal.iter().zip(&nf) {
                v[support.position(g).unwrap()] -= *c;
            }
            v[support.position(beta).unwrap()] += C64::new(1.0, 0.0);
            vecs.push(v);
        }
        orthonormalize(&mut vecs);
        for v in &vecs {
            kernel.push(Poly::from_coeff_vector(&support, v));
        }

        if rank > bound {
            return Err(Error::MultiplicityBoundTooSmall { bound, rank });
        }
        let stagnant = trace.len() >= 2 && trace[trace.len() - 2].1 == rank;
        if rank == 0 || stagnant {
            break;
        }
        degree += 1;
    }

    let normal_set = IndexSet::from_members(dim, normal.iter().cloned())?;
    let data = IdealData {
        dim,
        bound,
        tol,
        rows: rows.clone(),
        kernel,
        normal_set,
        trace,
        normal_gaps,
        kernel_gaps,
        basis: Mat::from_columns(rows.len(), &q),
        triangle: triangle_from(&r_cols),
    };
    if !data.normal_set.is_lower() {
        return Err(Error::MultiplicityBoundTooSmall {
            bound,
            rank: data.multiplicity(),
        });
    }
    check_extension(source, &data)?;
    Ok(data)
}

fn triangle_from(r_cols: &[Vec<C64>]) -> Mat {
    let n = r_cols.len();
    Mat::from_fn(n, n, |i, j| r_cols[j].get(i).copied().unwrap_or_else(C64::zero))
}

/// Evaluates the kernel on the rows Υ_N + Γ₁ wherever samples exist. With
/// an adequate bound the kernel lies in the ideal and annihilates every
/// row; a bound below the true multiplicity lets spurious relations in.
fn check_extension(source: &SampleSource, data: &IdealData) -> Result<()> {
    let dim = data.dim;
    let mut ext: Vec<MultiIndex> = data.rows.members().to_vec();
    for a in data.rows.iter() {
        for j in 0..dim {
            ext.push(a.plus_unit(j));
        }
    }
    let ext = IndexSet::from_members(dim, ext)?;
    for q in &data.kernel {
        let rows: Vec<MultiIndex> = ext
            .iter()
            .filter(|a| q.terms().keys().all(|b| source.covers_index(&a.add(b))))
            .cloned()
            .collect();
        let rows = IndexSet::from_members(dim, rows)?;
        if annihilation_residual(source, q, &rows)? > EXTENSION_TOL {
            return Err(Error::MultiplicityBoundTooSmall {
                bound: data.bound,
                rank: data.multiplicity(),
            });
        }
    }
    Ok(())
}

/// The recorded rank of F_{Υ_N, Γ_n}.
pub fn hilbert_function(ideal: &IdealData, n: u32) -> Result<usize> {
    ideal
        .trace
        .iter()
        .find(|t| t.0 == n)
        .map(|t| t.1)
        .ok_or(Error::BeyondTrace(n as usize))
}

/// The element of span{x^γ : γ in the normal set} congruent to p modulo
/// the recovered ideal, found by least squares on the Hankel columns.
pub fn normal_form(ideal: &IdealData, source: &SampleSource, p: &Poly) -> Result<Poly> {
    if p.dim() != ideal.dim {
        return Err(Error::DimensionMismatch {
            expected: ideal.dim,
            found: p.dim(),
        });
    }
    let p = p.to_monomial();
    let limit = ideal.max_degree() + 1;
    if p.degree() > limit as i64 {
        return Err(Error::DegreeBeyondData {
            degree: p.degree() as usize,
            max: limit as usize,
        });
    }
    if ideal.normal_set.is_empty() {
        return Ok(Poly::zero(ideal.dim));
    }
    let mut image = vec![C64::zero(); ideal.rows.len()];
    for (beta, c) in p.terms() {
        let col = hankel_column(source, &ideal.rows, beta)?;
        for (y, v) in image.iter_mut().zip(col) {
            *y += c * v;
        }
    }
    let b = &ideal.basis;
    let proj: Vec<C64> = (0..b.cols()).map(|k| dot(b.col(k), &image)).collect();
    // selection followed the graded enumeration, which is the sorted order
    let coef = solve_upper(&ideal.triangle, &proj);
    Ok(Poly::from_coeff_vector(&ideal.normal_set, &coef))
}
