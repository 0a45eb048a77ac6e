//! Sparse multivariate polynomials with complex coefficients and the
//! operators acting on them: shifts, forward differences, derivatives,
//! θ-operators and the Taylor/Newton basis change L.
//!
//! Every operator returns a monomial-basis result. The falling-factorial
//! basis is accepted on input and converted on entry.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::index::{IndexSet, MultiIndex};
use crate::linalg::{svd, Mat, C64};
use crate::stirling::{box_indices, stirling1_f64, stirling2_f64};

/// Relative singular-value threshold deciding linear independence in spans.
pub const SPAN_RANK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    Monomial,
    FallingFactorial,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    dim: usize,
    basis: Basis,
    terms: BTreeMap<MultiIndex, C64>,
}

fn binom_f(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn powi_c(z: C64, k: u32) -> C64 {
    let mut acc = C64::new(1.0, 0.0);
    for _ in 0..k {
        acc *= z;
    }
    acc
}

/// x^α for a complex point.
pub fn monomial_value(alpha: &MultiIndex, x: &[C64]) -> C64 {
    alpha
        .entries()
        .iter()
        .zip(x)
        .map(|(&a, &xi)| powi_c(xi, a))
        .product()
}

/// The falling factorial (x)_α.
pub fn falling_value(alpha: &MultiIndex, x: &[C64]) -> C64 {
    let mut acc = C64::new(1.0, 0.0);
    for (&a, &xi) in alpha.entries().iter().zip(x) {
        for k in 0..a {
            acc *= xi - k as f64;
        }
    }
    acc
}

impl Poly {
    pub fn zero(dim: usize) -> Self {
        Poly {
            dim,
            basis: Basis::Monomial,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: C64) -> Self {
        Poly::from_terms(dim, Basis::Monomial, [(MultiIndex::zero(dim), c)]).expect("dims agree")
    }

    pub fn one(dim: usize) -> Self {
        Poly::constant(dim, C64::new(1.0, 0.0))
    }

    pub fn monomial(alpha: MultiIndex, c: C64) -> Self {
        let dim = alpha.dim();
        Poly::from_terms(dim, Basis::Monomial, [(alpha, c)]).expect("dims agree")
    }

    /// Builds a polynomial, summing repeated exponents and pruning exact zeros.
    pub fn from_terms(
        dim: usize,
        basis: Basis,
        terms: impl IntoIterator<Item = (MultiIndex, C64)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<MultiIndex, C64> = BTreeMap::new();
        for (a, c) in terms {
            if a.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: a.dim(),
                });
            }
            *map.entry(a).or_insert_with(C64::zero) += c;
        }
        map.retain(|_, c| !c.is_zero());
        Ok(Poly {
            dim,
            basis,
            terms: map,
        })
    }

    /// Real-coefficient convenience constructor.
    pub fn from_real(dim: usize, terms: &[(&[u32], f64)]) -> Self {
        Poly::from_terms(
            dim,
            Basis::Monomial,
            terms
                .iter()
                .map(|(a, c)| (MultiIndex::new(a.to_vec()), C64::new(*c, 0.0))),
        )
        .expect("dims agree")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, C64> {
        &self.terms
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> C64 {
        self.terms.get(alpha).copied().unwrap_or_else(C64::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree, −1 for the zero polynomial.
    pub fn degree(&self) -> i64 {
        self.terms.keys().map(|a| a.len() as i64).max().unwrap_or(-1)
    }

    /// Largest single-coordinate exponent appearing in any term.
    pub fn max_coordinate_degree(&self) -> u32 {
        self.terms
            .keys()
            .flat_map(|a| a.entries().iter().copied())
            .max()
            .unwrap_or(0)
    }

    pub fn coeff_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Drops coefficients with magnitude at or below `tol`.
    pub fn pruned(&self, tol: f64) -> Poly {
        Poly {
            dim: self.dim,
            basis: self.basis,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.norm() > tol)
                .map(|(a, c)| (a.clone(), *c))
                .collect(),
        }
    }

    fn check_point(&self, x: &[C64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[C64]) -> Result<C64> {
        self.check_point(x)?;
        let value = match self.basis {
            Basis::Monomial => self.terms.iter().map(|(a, c)| c * monomial_value(a, x)).sum(),
            Basis::FallingFactorial => self.terms.iter().map(|(a, c)| c * falling_value(a, x)).sum(),
        };
        Ok(value)
    }

    /// Evaluation at an integer point.
    pub fn evaluate_int(&self, alpha: &[i64]) -> Result<C64> {
        let x: Vec<C64> = alpha.iter().map(|&a| C64::new(a as f64, 0.0)).collect();
        self.evaluate(&x)
    }

    /// Re-expands a falling-factorial polynomial in monomials via ⟦·,·⟧.
    pub fn to_monomial(&self) -> Poly {
        match self.basis {
            Basis::Monomial => self.clone(),
            Basis::FallingFactorial => {
                let mut out: BTreeMap<MultiIndex, C64> = BTreeMap::new();
                for (nu, c) in &self.terms {
                    for kappa in box_below(nu) {
                        let s = stirling1_f64(nu, &kappa);
                        if s != 0.0 {
                            *out.entry(kappa).or_insert_with(C64::zero) += c * s;
                        }
                    }
                }
                Poly::from_terms(self.dim, Basis::Monomial, out).expect("dims agree")
            }
        }
    }

    fn mono(&self) -> Poly {
        self.to_monomial()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let a = self.mono();
        let b = other.mono();
        Poly::from_terms(
            a.dim,
            Basis::Monomial,
            a.terms.into_iter().chain(b.terms),
        )
        .expect("dims agree")
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> Poly {
        Poly::from_terms(
            self.dim,
            self.basis,
            self.terms.iter().map(|(a, v)| (a.clone(), v * c)),
        )
        .expect("dims agree")
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let a = self.mono();
        let b = other.mono();
        let mut out: BTreeMap<MultiIndex, C64> = BTreeMap::new();
        for (ea, ca) in &a.terms {
            for (eb, cb) in &b.terms {
                *out.entry(ea.add(eb)).or_insert_with(C64::zero) += ca * cb;
            }
        }
        Poly::from_terms(a.dim, Basis::Monomial, out).expect("dims agree")
    }

    /// p(· + α) for a real (possibly non-integer) shift vector.
    pub fn shift_by(&self, t: &[f64]) -> Poly {
        let p = self.mono();
        let mut out: BTreeMap<MultiIndex, C64> = BTreeMap::new();
        for (beta, c) in &p.terms {
            // (x + t)^β = Σ_{γ≤β} C(β,γ) t^{β−γ} x^γ
            for gamma in box_below(beta) {
                let mut w = 1.0;
                for j in 0..self.dim {
                    let (b, g) = (beta.entries()[j], gamma.entries()[j]);
                    w *= binom_f(b, g) * t[j].powi((b - g) as i32);
                }
                if w != 0.0 {
                    *out.entry(gamma).or_insert_with(C64::zero) += c * w;
                }
            }
        }
        Poly::from_terms(self.dim, Basis::Monomial, out).expect("dims agree")
    }

    /// τ^α p = p(· + α).
    pub fn shift(&self, alpha: &MultiIndex) -> Poly {
        let t: Vec<f64> = alpha.entries().iter().map(|&a| a as f64).collect();
        self.shift_by(&t)
    }

    /// Δ^κ p = (τ − I)^κ p, expanded by inclusion–exclusion.
    pub fn difference(&self, kappa: &MultiIndex) -> Poly {
        let mut acc = Poly::zero(self.dim);
        for gamma in box_below(kappa) {
            let mut w = 1.0;
            for j in 0..self.dim {
                w *= binom_f(kappa.entries()[j], gamma.entries()[j]);
            }
            if (kappa.len() - gamma.len()) % 2 == 1 {
                w = -w;
            }
            acc = acc.add(&self.shift(&gamma).scale(C64::new(w, 0.0)));
        }
        acc
    }

    /// D^α p.
    pub fn derivative(&self, alpha: &MultiIndex) -> Poly {
        let p = self.mono();
        let terms = p.terms.iter().filter_map(|(beta, c)| {
            let rest = beta.checked_sub(alpha)?;
            let mut w = 1.0;
            for j in 0..self.dim {
                let b = beta.entries()[j];
                for k in 0..alpha.entries()[j] {
                    w *= (b - k) as f64;
                }
            }
            Some((rest, c * w))
        });
        Poly::from_terms(self.dim, Basis::Monomial, terms.collect::<Vec<_>>()).expect("dims agree")
    }

    /// Multiplication by the monomial x^α.
    pub fn mul_monomial(&self, alpha: &MultiIndex) -> Poly {
        let p = self.mono();
        Poly::from_terms(
            self.dim,
            Basis::Monomial,
            p.terms.iter().map(|(b, c)| (b.add(alpha), *c)),
        )
        .expect("dims agree")
    }

    /// x ↦ p(ξ₁x₁, …, ξ_s x_s).
    pub fn scale_argument(&self, xi: &[C64]) -> Result<Poly> {
        self.check_point(xi)?;
        if xi.iter().any(|z| z.is_zero()) {
            return Err(Error::ZeroScale);
        }
        let p = self.mono();
        Ok(Poly::from_terms(
            self.dim,
            Basis::Monomial,
            p.terms.iter().map(|(a, c)| (a.clone(), c * monomial_value(a, xi))),
        )
        .expect("dims agree"))
    }

    /// Coefficient vector over an index set (terms outside the set are
    /// ignored).
    pub fn coeff_vector(&self, set: &IndexSet) -> Vec<C64> {
        let p = self.mono();
        set.iter().map(|a| p.coeff(a)).collect()
    }

    pub fn from_coeff_vector(set: &IndexSet, coeffs: &[C64]) -> Poly {
        Poly::from_terms(
            set.dim(),
            Basis::Monomial,
            set.iter().cloned().zip(coeffs.iter().copied()),
        )
        .expect("dims agree")
    }
}

/// All γ with γ ≤ α.
pub(crate) fn box_below(alpha: &MultiIndex) -> Vec<MultiIndex> {
    let s = alpha.dim();
    let e = alpha.entries();
    let mut out = Vec::new();
    let mut cur = vec![0u32; s];
    loop {
        out.push(MultiIndex::new(cur.clone()));
        let mut j = 0;
        while j < s {
            if cur[j] < e[j] {
                cur[j] += 1;
                break;
            }
            cur[j] = 0;
            j += 1;
        }
        if j == s {
            break;
        }
    }
    out
}

fn same_dim(q: &Poly, p: &Poly) -> Result<()> {
    if q.dim != p.dim {
        return Err(Error::DimensionMismatch {
            expected: q.dim,
            found: p.dim,
        });
    }
    Ok(())
}

/// q(D̂) p using D̂^α = Σ_{β≤α} ⦃α,β⦄ x^β D^β.
pub fn theta_apply(q: &Poly, p: &Poly) -> Result<Poly> {
    same_dim(q, p)?;
    let q = q.to_monomial();
    let p = p.to_monomial();
    let mut acc = Poly::zero(p.dim);
    for (alpha, qa) in &q.terms {
        for beta in box_below(alpha) {
            let s = stirling2_f64(alpha, &beta);
            if s == 0.0 {
                continue;
            }
            let term = p.derivative(&beta).mul_monomial(&beta).scale(qa * s);
            acc = acc.add(&term);
        }
    }
    Ok(acc)
}

/// (Lp)_α = Σ_β ⦃β,α⦄ p_β: Taylor coefficients to forward-difference
/// (Newton) coefficients.
pub fn l_apply(p: &Poly) -> Poly {
    let p = p.to_monomial();
    let mut out: BTreeMap<MultiIndex, C64> = BTreeMap::new();
    for (beta, c) in &p.terms {
        for alpha in box_below(beta) {
            let s = stirling2_f64(beta, &alpha);
            if s != 0.0 {
                *out.entry(alpha).or_insert_with(C64::zero) += c * s;
            }
        }
    }
    Poly::from_terms(p.dim, Basis::Monomial, out).expect("dims agree")
}

/// L⁻¹p = Σ_γ p_γ (·)_γ, re-expanded to monomials.
pub fn l_inverse(p: &Poly) -> Poly {
    let p = p.to_monomial();
    Poly {
        dim: p.dim,
        basis: Basis::FallingFactorial,
        terms: p.terms,
    }
    .to_monomial()
}

/// |q(D̂)p(ξ) − (Lq)(ξD)p(ξ)|, where (ξD)^α = ξ^α D^α.
pub fn theta_equals_scaled_derivative_check(q: &Poly, p: &Poly, xi: &[C64]) -> Result<f64> {
    same_dim(q, p)?;
    p.check_point(xi)?;
    let lhs = theta_apply(q, p)?.evaluate(xi)?;
    let lq = l_apply(q);
    let mut rhs = C64::zero();
    for (beta, c) in lq.terms() {
        rhs += c * monomial_value(beta, xi) * p.derivative(beta).evaluate(xi)?;
    }
    Ok((lhs - rhs).norm())
}

/// A finite family of linearly independent polynomials.
#[derive(Clone, Debug)]
pub struct PolySpace {
    dim: usize,
    basis: Vec<Poly>,
}

impl PolySpace {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &[Poly] {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Greedy reduction of a generator list to an independent subset,
    /// keeping the earliest generators.
    pub fn reduce(dim: usize, generators: impl IntoIterator<Item = Poly>) -> PolySpace {
        let gens: Vec<Poly> = generators.into_iter().map(|g| g.to_monomial()).collect();
        let support = IndexSet::from_members(
            dim,
            gens.iter().flat_map(|g| g.terms.keys().cloned()),
        )
        .expect("dims agree");
        let mut kept: Vec<Poly> = Vec::new();
        let mut cols: Vec<Vec<C64>> = Vec::new();
        for g in gens {
            if g.is_zero() {
                continue;
            }
            let v = g.coeff_vector(&support);
            cols.push(v);
            let m = Mat::from_columns(support.len(), &cols);
            let d = svd(&m);
            if d.rank(SPAN_RANK_TOL) == cols.len() {
                kept.push(g);
            } else {
                cols.pop();
            }
        }
        PolySpace { dim, basis: kept }
    }

    /// Numerical rank of the stacked coefficient matrix.
    pub fn numerical_rank(&self) -> usize {
        if self.basis.is_empty() {
            return 0;
        }
        let support = IndexSet::from_members(
            self.dim,
            self.basis.iter().flat_map(|g| g.terms.keys().cloned()),
        )
        .expect("dims agree");
        let cols: Vec<Vec<C64>> = self.basis.iter().map(|g| g.coeff_vector(&support)).collect();
        svd(&Mat::from_columns(support.len(), &cols)).rank(SPAN_RANK_TOL)
    }
}

/// S(p) = span{p(· + α)}. The basis starts with p itself and then the
/// constant 1; the rest comes from forward differences Δ^α p, which span
/// the same space as the integer shifts.
pub fn shift_span(p: &Poly) -> Result<PolySpace> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let p = p.to_monomial();
    let d = p.max_coordinate_degree();
    let mut gens = vec![p.clone(), Poly::one(p.dim)];
    for alpha in box_indices(p.dim, d).into_iter().skip(1) {
        gens.push(p.difference(&alpha));
    }
    Ok(PolySpace::reduce(p.dim, gens))
}

/// D(p) = span{D^α p}, starting with p itself.
pub fn derivative_span(p: &Poly) -> Result<PolySpace> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let p = p.to_monomial();
    let d = p.max_coordinate_degree();
    let gens = box_indices(p.dim, d).into_iter().map(|alpha| p.derivative(&alpha));
    Ok(PolySpace::reduce(p.dim, gens))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    fn close(a: &Poly, b: &Poly, tol: f64) -> bool {
        a.sub(b).terms().values().all(|z| z.norm() <= tol)
    }

    #[test]
    fn evaluate_examples() {
        let p = Poly::from_real(1, &[(&[2], 1.0)]);
        assert_eq!(p.evaluate(&[c(3., 0.)]).unwrap(), c(9., 0.));
        let ff = Poly::from_terms(1, Basis::FallingFactorial, [(mi(&[2]), c(1., 0.))]).unwrap();
        assert_eq!(ff.evaluate(&[c(3., 0.)]).unwrap(), c(6., 0.));
        let q = Poly::from_real(2, &[(&[1, 1], 1.0), (&[0, 0], 1.0)]);
        assert_eq!(q.evaluate(&[c(2., 0.), c(0., 1.)]).unwrap(), c(1., 2.));
        assert!(q.evaluate(&[c(1., 0.)]).is_err());
    }

    #[test]
    fn shift_and_difference_examples() {
        let p = Poly::from_real(1, &[(&[2], 1.0)]);
        let expect = Poly::from_real(1, &[(&[2], 1.0), (&[1], 2.0), (&[0], 1.0)]);
        assert!(close(&p.shift(&mi(&[1])), &expect, 0.0));
        let expect = Poly::from_real(1, &[(&[1], 2.0), (&[0], 1.0)]);
        assert!(close(&p.difference(&mi(&[1])), &expect, 0.0));
        let q = Poly::from_real(2, &[(&[1, 1], 1.0)]);
        assert!(close(&q.difference(&mi(&[1, 1])), &Poly::one(2), 0.0));
    }

    #[test]
    fn derivative_examples() {
        let p = Poly::from_real(1, &[(&[3], 1.0)]);
        assert_eq!(p.derivative(&mi(&[2])), Poly::from_real(1, &[(&[1], 6.0)]));
        let q = Poly::from_real(2, &[(&[2, 1], 1.0)]);
        assert_eq!(q.derivative(&mi(&[1, 1])), Poly::from_real(2, &[(&[1, 0], 2.0)]));
        assert!(Poly::one(2).derivative(&mi(&[1, 0])).is_zero());
    }

    #[test]
    fn theta_examples() {
        let x = Poly::from_real(1, &[(&[1], 1.0)]);
        let x2 = Poly::from_real(1, &[(&[2], 1.0)]);
        let x3 = Poly::from_real(1, &[(&[3], 1.0)]);
        assert!(close(&theta_apply(&x, &x3).unwrap(), &x3.scale(c(3., 0.)), 1e-14));
        assert!(close(&theta_apply(&x2, &x3).unwrap(), &x3.scale(c(9., 0.)), 1e-14));
        let p = Poly::from_real(1, &[(&[3], 2.0), (&[0], -1.0)]);
        assert!(close(&theta_apply(&Poly::one(1), &p).unwrap(), &p, 0.0));
    }

    #[test]
    fn l_operator_examples() {
        let x2 = Poly::from_real(1, &[(&[2], 1.0)]);
        let lx2 = Poly::from_real(1, &[(&[1], 1.0), (&[2], 1.0)]);
        assert_eq!(l_apply(&x2), lx2);
        assert_eq!(l_apply(&Poly::one(1)), Poly::one(1));
        assert!(close(&l_inverse(&lx2), &x2, 0.0));
    }

    #[test]
    fn theta_identity_examples() {
        let x = Poly::from_real(1, &[(&[1], 1.0)]);
        let x2 = Poly::from_real(1, &[(&[2], 1.0)]);
        let x3 = Poly::from_real(1, &[(&[3], 1.0)]);
        assert!(theta_equals_scaled_derivative_check(&x, &x2, &[c(2., 0.)]).unwrap() < 1e-14);
        assert!(
            theta_equals_scaled_derivative_check(&Poly::one(1), &x3, &[c(0.3, 1.)]).unwrap() < 1e-14
        );
        assert!(theta_equals_scaled_derivative_check(&x2, &x3, &[c(1., 0.)]).unwrap() < 1e-14);
    }

    #[test]
    fn scale_argument_examples() {
        let x2 = Poly::from_real(1, &[(&[2], 1.0)]);
        assert_eq!(
            x2.scale_argument(&[c(2., 0.)]).unwrap(),
            Poly::from_real(1, &[(&[2], 4.0)])
        );
        let p = Poly::from_real(2, &[(&[1, 0], 1.0), (&[0, 1], 1.0)]);
        let expect = Poly::from_terms(
            2,
            Basis::Monomial,
            [(mi(&[1, 0]), c(1., 0.)), (mi(&[0, 1]), c(0., 1.))],
        )
        .unwrap();
        assert_eq!(p.scale_argument(&[c(1., 0.), c(0., 1.)]).unwrap(), expect);
        assert_eq!(Poly::one(2).scale_argument(&[c(3., 1.), c(0.5, 0.)]).unwrap(), Poly::one(2));
        assert_eq!(x2.scale_argument(&[c(0., 0.)]), Err(Error::ZeroScale));
    }

    #[test]
    fn span_examples() {
        let x = Poly::from_real(1, &[(&[1], 1.0)]);
        assert_eq!(shift_span(&x).unwrap().len(), 2);
        let q = Poly::from_real(2, &[(&[1, 1], 1.0)]);
        let d = derivative_span(&q).unwrap();
        assert_eq!(d.len(), 4);
        assert_eq!(shift_span(&q).unwrap().len(), 4);
        let x3 = Poly::from_real(1, &[(&[3], 1.0)]);
        assert_eq!(shift_span(&x3).unwrap().len(), 4);
        assert!(shift_span(&Poly::zero(1)).is_err());
    }

    #[test]
    fn shift_span_starts_with_p_and_one() {
        let p = Poly::from_real(2, &[(&[2, 0], 1.0), (&[1, 1], -0.5), (&[0, 1], 2.0)]);
        let s = shift_span(&p).unwrap();
        assert_eq!(s.basis()[0], p);
        assert_eq!(s.basis()[1], Poly::one(2));
        assert_eq!(s.numerical_rank(), s.len());
    }
}
