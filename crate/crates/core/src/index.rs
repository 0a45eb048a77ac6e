//! Multiindices and the structured index-set families built from them.
//!
//! All sets use one canonical order: graded, and within a fixed total degree
//! lexicographically descending in the exponent vector, so that
//! `(1,0)` precedes `(0,1)`. This order is a term order (it is compatible
//! with addition), which keeps greedy normal sets lower.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::error::{Error, Result};

/// An exponent vector in ℕ₀^s.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zero(s: usize) -> Self {
        MultiIndex(vec![0; s])
    }

    /// The unit vector ε_j.
    pub fn unit(s: usize, j: usize) -> Self {
        let mut e = vec![0; s];
        e[j] = 1;
        MultiIndex(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    /// Total degree |α|.
    pub fn len(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// Componentwise partial order α ≤ β.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// α − β, or `None` when β ≰ α.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if !other.le(self) {
            return None;
        }
        Some(MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    pub fn plus_unit(&self, j: usize) -> MultiIndex {
        let mut e = self.0.clone();
        e[j] += 1;
        MultiIndex(e)
    }

    pub fn minus_unit(&self, j: usize) -> Option<MultiIndex> {
        if self.0[j] == 0 {
            return None;
        }
        let mut e = self.0.clone();
        e[j] -= 1;
        Some(MultiIndex(e))
    }

    /// ∏ (1 + α_j), the quantity bounding the hyperbolic orthant.
    pub fn hyperbolic_weight(&self) -> u64 {
        self.0.iter().map(|&a| 1 + a as u64).product()
    }

    /// α! = ∏ α_j!.
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&a| (1..=a).map(|k| k as f64).product::<f64>())
            .product()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.len().cmp(&other.len()))
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, a) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

impl<const N: usize> From<[u32; N]> for MultiIndex {
    fn from(v: [u32; N]) -> Self {
        MultiIndex(v.to_vec())
    }
}

/// Finite, deduplicated, canonically ordered set of multiindices with an
/// explicit position map.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexSet {
    dim: usize,
    members: Vec<MultiIndex>,
    positions: BTreeMap<MultiIndex, usize>,
}

impl IndexSet {
    pub fn empty(dim: usize) -> Self {
        IndexSet {
            dim,
            members: Vec::new(),
            positions: BTreeMap::new(),
        }
    }

    /// Builds a set from arbitrary members; duplicates are dropped and the
    /// result is sorted canonically.
    pub fn from_members(dim: usize, members: impl IntoIterator<Item = MultiIndex>) -> Result<Self> {
        let mut sorted: Vec<MultiIndex> = Vec::new();
        for m in members {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.dim(),
                });
            }
            sorted.push(m);
        }
        sorted.sort();
        sorted.dedup();
        let positions = sorted.iter().cloned().enumerate().map(|(k, m)| (m, k)).collect();
        Ok(IndexSet {
            dim,
            members: sorted,
            positions,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[MultiIndex] {
        &self.members
    }

    pub fn iter(&self) -> core::slice::Iter<'_, MultiIndex> {
        self.members.iter()
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.positions.get(alpha).copied()
    }

    pub fn contains(&self, alpha: &MultiIndex) -> bool {
        self.positions.contains_key(alpha)
    }

    /// α ∈ set and β ≤ α imply β ∈ set.
    pub fn is_lower(&self) -> bool {
        self.members.iter().all(|a| {
            (0..self.dim).all(|j| match a.minus_unit(j) {
                Some(b) => self.contains(&b),
                None => true,
            })
        })
    }

    pub fn max_degree(&self) -> Option<u32> {
        self.members.iter().map(MultiIndex::len).max()
    }

    /// Minkowski sum {α + β}.
    pub fn sum(&self, other: &IndexSet) -> IndexSet {
        let members = self
            .members
            .iter()
            .flat_map(|a| other.members.iter().map(move |b| a.add(b)));
        IndexSet::from_members(self.dim, members).expect("same dimension")
    }
}

impl<'a> IntoIterator for &'a IndexSet {
    type Item = &'a MultiIndex;
    type IntoIter = core::slice::Iter<'a, MultiIndex>;
    fn into_iter(self) -> Self::IntoIter {
        self.members.iter()
    }
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Γ_n = {α : |α| ≤ n}.
pub fn gamma_set(s: usize, n: u32) -> Result<IndexSet> {
    if s == 0 {
        return Err(Error::InvalidDimension);
    }
    let count = binomial(n as u64 + s as u64, s as u64) as usize;
    let members: Vec<MultiIndex> = GradedEnumerator::new(s)?.take(count).collect();
    Ok(IndexSet::from_sorted(s, members))
}

/// Υ_N = {α : ∏(1 + α_j) ≤ N}, the first hyperbolic orthant.
pub fn upsilon_set(s: usize, bound: usize) -> Result<IndexSet> {
    if s == 0 {
        return Err(Error::InvalidDimension);
    }
    if bound == 0 {
        return Err(Error::ZeroBound);
    }
    let mut out = Vec::new();
    let mut cur = vec![0u32; s];
    fill_upsilon(&mut cur, 0, bound as u64, &mut out);
    IndexSet::from_members(s, out)
}

fn fill_upsilon(cur: &mut Vec<u32>, j: usize, budget: u64, out: &mut Vec<MultiIndex>) {
    if j == cur.len() {
        out.push(MultiIndex(cur.clone()));
        return;
    }
    let mut a = 0u32;
    while (1 + a as u64) <= budget {
        cur[j] = a;
        fill_upsilon(cur, j + 1, budget / (1 + a as u64), out);
        a += 1;
    }
    cur[j] = 0;
}

impl IndexSet {
    fn from_sorted(dim: usize, members: Vec<MultiIndex>) -> Self {
        let positions = members.iter().cloned().enumerate().map(|(k, m)| (m, k)).collect();
        IndexSet {
            dim,
            members,
            positions,
        }
    }
}

/// Endless stream over ℕ₀^s in canonical graded order.
#[derive(Clone, Debug)]
pub struct GradedEnumerator {
    next: Vec<u32>,
}

impl GradedEnumerator {
    pub fn new(s: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidDimension);
        }
        Ok(GradedEnumerator { next: vec![0; s] })
    }
}

impl Iterator for GradedEnumerator {
    type Item = MultiIndex;

    fn next(&mut self) -> Option<MultiIndex> {
        let current = MultiIndex(self.next.clone());
        let a = &mut self.next;
        let s = a.len();
        // Successor in descending lex order among compositions of |α|.
        match (0..s.saturating_sub(1)).rev().find(|&k| a[k] > 0) {
            Some(k) => {
                let tail = a[s - 1];
                a[s - 1] = 0;
                a[k] -= 1;
                a[k + 1] = tail + 1;
            }
            None => {
                let n = a[s - 1];
                a[s - 1] = 0;
                a[0] = n + 1;
            }
        }
        Some(current)
    }
}

/// Shorthand for [`GradedEnumerator::new`].
pub fn graded_enumerator(s: usize) -> Result<GradedEnumerator> {
    GradedEnumerator::new(s)
}
