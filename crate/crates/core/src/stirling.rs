//! Exact multivariate Stirling numbers of both kinds.
//!
//! Second kind: ⦃ν,κ⦄ = (1/κ!) (Δ^κ (·)^ν)(0), the coefficients expanding a
//! monomial in falling factorials. First kind: ⟦ν,κ⟧, the coefficient of x^κ
//! in the falling factorial (x)_ν. Both vanish unless κ ≤ ν.
//!
//! Values are memoized in process-wide tables that fill lazily along the
//! recurrences; the tables sit behind spin locks so lookups may come from
//! any thread.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use spin::{Lazy, Mutex};

use crate::error::{Error, Result};
use crate::index::MultiIndex;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StirlingKind {
    First,
    Second,
}

type Memo = BTreeMap<(MultiIndex, MultiIndex), BigInt>;

static SECOND: Lazy<Mutex<Memo>> = Lazy::new(|| Mutex::new(BTreeMap::new()));
static FIRST: Lazy<Mutex<Memo>> = Lazy::new(|| Mutex::new(BTreeMap::new()));

fn check_dims(nu: &MultiIndex, kappa: &MultiIndex) -> Result<()> {
    if nu.dim() != kappa.dim() {
        return Err(Error::DimensionMismatch {
            expected: nu.dim(),
            found: kappa.dim(),
        });
    }
    Ok(())
}

fn first_nonzero(nu: &MultiIndex) -> Option<usize> {
    nu.entries().iter().position(|&a| a > 0)
}

fn second_rec(memo: &mut Memo, nu: &MultiIndex, kappa: &MultiIndex) -> BigInt {
    if !kappa.le(nu) {
        return BigInt::zero();
    }
    let Some(j) = first_nonzero(nu) else {
        // ν = 0 and κ ≤ ν forces κ = 0.
        return BigInt::one();
    };
    let key = (nu.clone(), kappa.clone());
    if let Some(v) = memo.get(&key) {
        return v.clone();
    }
    let prev = nu.minus_unit(j).expect("nonzero entry");
    let mut v = BigInt::from(kappa.entries()[j]) * second_rec(memo, &prev, kappa);
    if let Some(km) = kappa.minus_unit(j) {
        v += second_rec(memo, &prev, &km);
    }
    memo.insert(key, v.clone());
    v
}

fn first_rec(memo: &mut Memo, nu: &MultiIndex, kappa: &MultiIndex) -> BigInt {
    if !kappa.le(nu) {
        return BigInt::zero();
    }
    let Some(j) = first_nonzero(nu) else {
        return BigInt::one();
    };
    let key = (nu.clone(), kappa.clone());
    if let Some(v) = memo.get(&key) {
        return v.clone();
    }
    // (x)_ν = (x)_{ν-ε_j} · (x_j - (ν_j - 1))
    let prev = nu.minus_unit(j).expect("nonzero entry");
    let shift = BigInt::from(nu.entries()[j] - 1);
    let mut v = -(shift * first_rec(memo, &prev, kappa));
    if let Some(km) = kappa.minus_unit(j) {
        v += first_rec(memo, &prev, &km);
    }
    memo.insert(key, v.clone());
    v
}

/// Multivariate Stirling number of the second kind ⦃ν,κ⦄.
pub fn stirling2(nu: &MultiIndex, kappa: &MultiIndex) -> Result<BigInt> {
    check_dims(nu, kappa)?;
    Ok(second_rec(&mut SECOND.lock(), nu, kappa))
}

/// Multivariate Stirling number of the first kind ⟦ν,κ⟧ (signed).
pub fn stirling1(nu: &MultiIndex, kappa: &MultiIndex) -> Result<BigInt> {
    check_dims(nu, kappa)?;
    Ok(first_rec(&mut FIRST.lock(), nu, kappa))
}

pub fn stirling(kind: StirlingKind, nu: &MultiIndex, kappa: &MultiIndex) -> Result<BigInt> {
    match kind {
        StirlingKind::First => stirling1(nu, kappa),
        StirlingKind::Second => stirling2(nu, kappa),
    }
}

/// ⦃ν+ε_j, κ⦄ obtained from the row ν via κ_j ⦃ν,κ⦄ + ⦃ν,κ−ε_j⦄.
pub fn stirling2_recurrence_step(nu: &MultiIndex, kappa: &MultiIndex, j: usize) -> Result<BigInt> {
    check_dims(nu, kappa)?;
    if j >= nu.dim() {
        return Err(Error::Invalid(alloc::format!("coordinate {j} out of range")));
    }
    let mut v = BigInt::from(kappa.entries()[j]) * stirling2(nu, kappa)?;
    if let Some(km) = kappa.minus_unit(j) {
        v += stirling2(nu, &km)?;
    }
    Ok(v)
}

/// The defining alternating sum (1/κ!) Σ_{γ≤κ} (−1)^{|κ|−|γ|} C(κ,γ) γ^ν.
///
/// Slow; kept as an independent cross-check of the memoized tables.
pub fn stirling2_by_sum(nu: &MultiIndex, kappa: &MultiIndex) -> Result<BigInt> {
    check_dims(nu, kappa)?;
    let s = nu.dim();
    let k = kappa.entries();
    let mut total = BigInt::zero();
    let mut gamma = alloc::vec![0u32; s];
    loop {
        let mut term = BigInt::one();
        for j in 0..s {
            term *= binom_big(k[j], gamma[j]);
            term *= num_traits::pow(BigInt::from(gamma[j]), nu.entries()[j] as usize);
        }
        let parity: u32 = k.iter().zip(&gamma).map(|(a, b)| a - b).sum();
        if parity % 2 == 1 {
            total -= term;
        } else {
            total += term;
        }
        // odometer over γ ≤ κ
        let mut j = 0;
        while j < s {
            if gamma[j] < k[j] {
                gamma[j] += 1;
                break;
            }
            gamma[j] = 0;
            j += 1;
        }
        if j == s {
            break;
        }
    }
    let mut kfact = BigInt::one();
    for &kj in k {
        for t in 1..=kj {
            kfact *= BigInt::from(t);
        }
    }
    Ok(total / kfact)
}

fn binom_big(n: u32, k: u32) -> BigInt {
    let mut v = BigInt::one();
    for i in 0..k {
        v = v * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    v
}

/// Floating-point view of ⦃ν,κ⦄ for operator application.
pub(crate) fn stirling2_f64(nu: &MultiIndex, kappa: &MultiIndex) -> f64 {
    if !kappa.le(nu) {
        return 0.0;
    }
    second_rec(&mut SECOND.lock(), nu, kappa).to_f64().unwrap_or(f64::NAN)
}

pub(crate) fn stirling1_f64(nu: &MultiIndex, kappa: &MultiIndex) -> f64 {
    if !kappa.le(nu) {
        return 0.0;
    }
    first_rec(&mut FIRST.lock(), nu, kappa).to_f64().unwrap_or(f64::NAN)
}

/// Dense dump of one kind over the box {0..=max}^s in both arguments.
#[derive(Clone, Debug)]
pub struct StirlingTable {
    pub kind: StirlingKind,
    pub dim: usize,
    pub entries: Vec<(MultiIndex, MultiIndex, BigInt)>,
}

impl StirlingTable {
    pub fn build(kind: StirlingKind, dim: usize, max: u32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension);
        }
        let boxed = box_indices(dim, max);
        let mut entries = Vec::with_capacity(boxed.len() * boxed.len());
        for nu in &boxed {
            for kappa in &boxed {
                entries.push((nu.clone(), kappa.clone(), stirling(kind, nu, kappa)?));
            }
        }
        Ok(StirlingTable { kind, dim, entries })
    }
}

/// All of {0..=max}^s in canonical order.
pub fn box_indices(dim: usize, max: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = alloc::vec![0u32; dim];
    loop {
        out.push(MultiIndex::new(cur.clone()));
        let mut j = 0;
        while j < dim {
            if cur[j] < max {
                cur[j] += 1;
                break;
            }
            cur[j] = 0;
            j += 1;
        }
        if j == dim {
            break;
        }
    }
    out.sort();
    out
}
