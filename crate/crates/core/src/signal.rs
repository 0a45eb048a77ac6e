//! Exponential polynomials sampled on ℤ^s, stored sample tables, and the
//! Hankel, Toeplitz and Hermite–Vandermonde matrices built from them.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::index::{IndexSet, MultiIndex};
use crate::linalg::{svd, Mat, C64};
use crate::poly::{shift_span, Poly, PolySpace, SPAN_RANK_TOL};
use crate::stirling::box_indices;

/// Reduces an angle into [−π, π).
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = theta - two_pi * ((theta + PI) / two_pi).floor();
    if t >= PI {
        t -= two_pi;
    }
    if t < -PI {
        t += two_pi;
    }
    t
}

/// z^k for integer k, by binary powering.
pub fn powi_signed(z: C64, k: i64) -> C64 {
    let mut base = if k < 0 { C64::new(1.0, 0.0) / z } else { z };
    let mut e = k.unsigned_abs();
    let mut acc = C64::new(1.0, 0.0);
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

/// ξ^α for an integer point α.
pub fn point_power(xi: &[C64], alpha: &[i64]) -> C64 {
    xi.iter().zip(alpha).map(|(&z, &a)| powi_signed(z, a)).product()
}

fn as_point(alpha: &MultiIndex) -> Vec<i64> {
    alpha.entries().iter().map(|&a| a as i64).collect()
}

/// One term f_ω(x) e^{ωᵀx}.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    omega: Vec<C64>,
    xi: Vec<C64>,
    poly: Poly,
}

impl Component {
    pub fn omega(&self) -> &[C64] {
        &self.omega
    }

    /// ξ = e^ω.
    pub fn xi(&self) -> &[C64] {
        &self.xi
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpPolyModel {
    dim: usize,
    components: Vec<Component>,
}

impl ExpPolyModel {
    pub fn empty(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension);
        }
        Ok(ExpPolyModel {
            dim,
            components: Vec::new(),
        })
    }

    /// Builds a model from (ω, f_ω) pairs, wrapping imaginary parts into
    /// [−π, π) and rejecting zero coefficients and repeated frequencies.
    pub fn new(dim: usize, parts: impl IntoIterator<Item = (Vec<C64>, Poly)>) -> Result<Self> {
        let mut model = ExpPolyModel::empty(dim)?;
        for (omega, poly) in parts {
            model.push(omega, poly)?;
        }
        Ok(model)
    }

    pub fn push(&mut self, omega: Vec<C64>, poly: Poly) -> Result<()> {
        for found in [omega.len(), poly.dim()] {
            if found != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found,
                });
            }
        }
        let poly = poly.to_monomial();
        if poly.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let omega: Vec<C64> = omega
            .into_iter()
            .map(|w| C64::new(w.re, wrap_angle(w.im)))
            .collect();
        let duplicate = self.components.iter().any(|c| {
            c.omega.iter().zip(&omega).all(|(a, b)| {
                (a.re - b.re).abs() <= 1e-12 * (1.0 + a.re.abs())
                    && wrap_angle(a.im - b.im).abs() <= 1e-12
            })
        });
        if duplicate {
            return Err(Error::DuplicateFrequency);
        }
        let xi = omega.iter().map(|w| w.exp()).collect();
        self.components.push(Component { omega, xi, poly });
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// f(α) = Σ_ω f_ω(α) ξ_ω^α.
    pub fn sample(&self, alpha: &[i64]) -> Result<C64> {
        if alpha.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: alpha.len(),
            });
        }
        let mut acc = C64::zero();
        for c in &self.components {
            acc += c.poly.evaluate_int(alpha)? * point_power(&c.xi, alpha);
        }
        Ok(acc)
    }

    /// Total multiplicity Σ_ω dim S(f_ω).
    pub fn total_multiplicity(&self) -> usize {
        self.components
            .iter()
            .map(|c| shift_span(&c.poly).map(|s| s.len()).unwrap_or(0))
            .sum()
    }
}

/// Samples stored densely over the box lo..=hi.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleTable {
    lo: Vec<i64>,
    hi: Vec<i64>,
    values: Vec<C64>,
}

impl SampleTable {
    /// Builds a table from (point, value) pairs that must fill a box exactly.
    pub fn from_points(dim: usize, points: impl IntoIterator<Item = (Vec<i64>, C64)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension);
        }
        let pts: Vec<(Vec<i64>, C64)> = points.into_iter().collect();
        if pts.is_empty() {
            return Err(Error::Invalid("sample table is empty".into()));
        }
        for (p, _) in &pts {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
        }
        let lo: Vec<i64> = (0..dim).map(|j| pts.iter().map(|p| p.0[j]).min().unwrap()).collect();
        let hi: Vec<i64> = (0..dim).map(|j| pts.iter().map(|p| p.0[j]).max().unwrap()).collect();
        let size: usize = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) as usize).product();
        let mut values = vec![C64::zero(); size];
        let mut seen = vec![false; size];
        let mut table = SampleTable { lo, hi, values: Vec::new() };
        for (p, v) in &pts {
            let k = table.offset(p).expect("inside bounding box");
            if seen[k] {
                return Err(Error::Invalid(alloc::format!("duplicate sample at {p:?}")));
            }
            seen[k] = true;
            values[k] = *v;
        }
        if pts.len() != size {
            return Err(Error::Invalid("samples do not fill a dense box".into()));
        }
        table.values = values;
        Ok(table)
    }

    /// Tabulates a model over lo..=hi.
    pub fn from_model(model: &ExpPolyModel, lo: &[i64], hi: &[i64]) -> Result<Self> {
        let pts = box_points(lo, hi)?;
        let mut out = Vec::with_capacity(pts.len());
        for p in pts {
            let v = model.sample(&p)?;
            out.push((p, v));
        }
        SampleTable::from_points(model.dim(), out)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn hi(&self) -> &[i64] {
        &self.hi
    }

    fn offset(&self, p: &[i64]) -> Option<usize> {
        if p.len() != self.lo.len() {
            return None;
        }
        let mut k = 0usize;
        let mut stride = 1usize;
        for j in 0..p.len() {
            if p[j] < self.lo[j] || p[j] > self.hi[j] {
                return None;
            }
            k += (p[j] - self.lo[j]) as usize * stride;
            stride *= (self.hi[j] - self.lo[j] + 1) as usize;
        }
        Some(k)
    }

    pub fn points(&self) -> Vec<Vec<i64>> {
        box_points(&self.lo, &self.hi).expect("valid box")
    }
}

/// All integer points of lo..=hi in graded order of their offsets from lo.
pub fn box_points(lo: &[i64], hi: &[i64]) -> Result<Vec<Vec<i64>>> {
    if lo.len() != hi.len() {
        return Err(Error::DimensionMismatch {
            expected: lo.len(),
            found: hi.len(),
        });
    }
    if lo.is_empty() {
        return Err(Error::InvalidDimension);
    }
    if lo.iter().zip(hi).any(|(l, h)| l > h) {
        return Err(Error::Invalid("empty grid box".into()));
    }
    let dim = lo.len();
    let mut out = Vec::new();
    let mut cur = lo.to_vec();
    loop {
        out.push(cur.clone());
        let mut j = 0;
        while j < dim {
            if cur[j] < hi[j] {
                cur[j] += 1;
                break;
            }
            cur[j] = lo[j];
            j += 1;
        }
        if j == dim {
            break;
        }
    }
    out.sort_by(|a, b| {
        let ka = MultiIndex::new(a.iter().zip(lo).map(|(x, l)| (x - l) as u32).collect());
        let kb = MultiIndex::new(b.iter().zip(lo).map(|(x, l)| (x - l) as u32).collect());
        ka.cmp(&kb)
    });
    Ok(out)
}

/// Where samples come from: exact synthesis or a stored table.
#[derive(Clone, Debug)]
pub enum SampleSource {
    Model(ExpPolyModel),
    Table(SampleTable),
}

impl SampleSource {
    pub fn dim(&self) -> usize {
        match self {
            SampleSource::Model(m) => m.dim(),
            SampleSource::Table(t) => t.dim(),
        }
    }

    pub fn covers(&self, p: &[i64]) -> bool {
        match self {
            SampleSource::Model(m) => p.len() == m.dim(),
            SampleSource::Table(t) => t.offset(p).is_some(),
        }
    }

    pub fn covers_index(&self, alpha: &MultiIndex) -> bool {
        self.covers(&as_point(alpha))
    }

    pub fn sample(&self, p: &[i64]) -> Result<C64> {
        match self {
            SampleSource::Model(m) => m.sample(p),
            SampleSource::Table(t) => match t.offset(p) {
                Some(k) => Ok(t.values[k]),
                None if p.len() != t.dim() => Err(Error::DimensionMismatch {
                    expected: t.dim(),
                    found: p.len(),
                }),
                None => Err(Error::Coverage(MultiIndex::new(
                    p.iter().map(|&x| x.max(0) as u32).collect(),
                ))),
            },
        }
    }

    pub fn sample_index(&self, alpha: &MultiIndex) -> Result<C64> {
        self.sample(&as_point(alpha))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixKind {
    Hankel,
    Toeplitz,
}

#[derive(Clone, Debug)]
pub struct SampleMatrix {
    pub kind: MatrixKind,
    pub rows: IndexSet,
    pub cols: IndexSet,
    pub entries: Mat,
}

fn check_sets(source: &SampleSource, a: &IndexSet, b: &IndexSet) -> Result<()> {
    for found in [a.dim(), b.dim()] {
        if found != source.dim() {
            return Err(Error::DimensionMismatch {
                expected: source.dim(),
                found,
            });
        }
    }
    Ok(())
}

fn build_sample_matrix(
    source: &SampleSource,
    a: &IndexSet,
    b: &IndexSet,
    kind: MatrixKind,
) -> Result<SampleMatrix> {
    check_sets(source, a, b)?;
    let mut entries = Mat::zeros(a.len(), b.len());
    for (j, beta) in b.iter().enumerate() {
        for (i, alpha) in a.iter().enumerate() {
            let p: Vec<i64> = alpha
                .entries()
                .iter()
                .zip(beta.entries())
                .map(|(&x, &y)| match kind {
                    MatrixKind::Hankel => x as i64 + y as i64,
                    MatrixKind::Toeplitz => x as i64 - y as i64,
                })
                .collect();
            entries.col_mut(j)[i] = source.sample(&p)?;
        }
    }
    Ok(SampleMatrix {
        kind,
        rows: a.clone(),
        cols: b.clone(),
        entries,
    })
}

/// F_{A,B} = [f(α+β)].
pub fn build_hankel(source: &SampleSource, a: &IndexSet, b: &IndexSet) -> Result<SampleMatrix> {
    build_sample_matrix(source, a, b, MatrixKind::Hankel)
}

/// T_{A,B} = [f(α−β)].
pub fn build_toeplitz(source: &SampleSource, a: &IndexSet, b: &IndexSet) -> Result<SampleMatrix> {
    build_sample_matrix(source, a, b, MatrixKind::Toeplitz)
}

/// V(Θ_Ω, A): one row per (ω, q ∈ Q_ω), entry (q(D̂)x^α)(ξ_ω) = q(α) ξ_ω^α.
pub fn build_vandermonde(model: &ExpPolyModel, bases: &[PolySpace], a: &IndexSet) -> Result<Mat> {
    if bases.len() != model.components().len() {
        return Err(Error::InvalidBasis);
    }
    let rows: usize = bases.iter().map(|b| b.len()).sum();
    let mut v = Mat::zeros(rows, a.len());
    let mut r = 0;
    for (comp, basis) in model.components().iter().zip(bases) {
        if comp.xi.iter().any(|z| z.is_zero()) {
            return Err(Error::InvalidZero);
        }
        for q in basis.basis() {
            for (k, alpha) in a.iter().enumerate() {
                let p = as_point(alpha);
                v.col_mut(k)[r] = q.evaluate_int(&p)? * point_power(&comp.xi, &p);
            }
            r += 1;
        }
    }
    Ok(v)
}

/// max_α |Σ_β q_β f(α+β)| over the test set, relative to max |f| on the
/// touched samples.
pub fn annihilation_residual(source: &SampleSource, q: &Poly, testset: &IndexSet) -> Result<f64> {
    let q = q.to_monomial();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for alpha in testset.iter() {
        let mut acc = C64::zero();
        for (beta, c) in q.terms() {
            let f = source.sample_index(&alpha.add(beta))?;
            scale = scale.max(f.norm());
            acc += c * f;
        }
        worst = worst.max(acc.norm());
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

/// Coefficients a with g(x+y) = Σ a[q,q'] q(x) q'(y) over a basis of S(g),
/// fitted on the grid {0..d}^s × {0..d}^s.
pub fn linearization_matrix(g: &Poly, basis: &PolySpace) -> Result<Mat> {
    let d = g.max_coordinate_degree();
    let grid = box_indices(g.dim(), d);
    let n = basis.len();
    let mut q = Mat::zeros(grid.len(), n);
    for (k, qk) in basis.basis().iter().enumerate() {
        for (i, x) in grid.iter().enumerate() {
            q.col_mut(k)[i] = qk.evaluate_int(&as_point(x))?;
        }
    }
    let mut h = Mat::zeros(grid.len(), grid.len());
    for (j, y) in grid.iter().enumerate() {
        for (i, x) in grid.iter().enumerate() {
            h.col_mut(j)[i] = g.evaluate_int(&as_point(&x.add(y)))?;
        }
    }
    // H = Q A Qᵀ, solved as two least-squares problems.
    let dq = svd(&q);
    if dq.rank(SPAN_RANK_TOL) < n {
        return Err(Error::InvalidBasis);
    }
    let mut left = Mat::zeros(n, grid.len());
    for j in 0..grid.len() {
        let sol = dq.solve(h.col(j), SPAN_RANK_TOL);
        left.col_mut(j).copy_from_slice(&sol);
    }
    let lt = left.transpose();
    let mut at = Mat::zeros(n, n);
    for j in 0..n {
        let sol = dq.solve(lt.col(j), SPAN_RANK_TOL);
        at.col_mut(j).copy_from_slice(&sol);
    }
    let a = at.transpose();
    let fit = q.mul(&a).mul(&q.transpose()).sub(&h).frobenius();
    if fit > 1e-8 * (1.0 + h.frobenius()) {
        return Err(Error::InvalidBasis);
    }
    Ok(a)
}

/// ‖F_{A,B} − V_Aᵀ diag(A_ω) V_B‖ / ‖F_{A,B}‖ with Q_ω = shift_span(f_ω).
pub fn hankel_factorization_residual(model: &ExpPolyModel, a: &IndexSet, b: &IndexSet) -> Result<f64> {
    let bases: Vec<PolySpace> = model
        .components()
        .iter()
        .map(|c| shift_span(&c.poly))
        .collect::<Result<_>>()?;
    let total: usize = bases.iter().map(|q| q.len()).sum();
    let mut middle = Mat::zeros(total, total);
    let mut off = 0;
    for (c, q) in model.components().iter().zip(&bases) {
        let blk = linearization_matrix(&c.poly, q)?;
        for j in 0..q.len() {
            for i in 0..q.len() {
                middle.col_mut(off + j)[off + i] = blk[(i, j)];
            }
        }
        off += q.len();
    }
    let va = build_vandermonde(model, &bases, a)?;
    let vb = build_vandermonde(model, &bases, b)?;
    let f = build_hankel(&SampleSource::Model(model.clone()), a, b)?.entries;
    let approx = va.transpose().mul(&middle).mul(&vb);
    let norm = f.frobenius();
    let diff = f.sub(&approx).frobenius();
    Ok(if norm > 0.0 { diff / norm } else { diff })
}
