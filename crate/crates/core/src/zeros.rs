//! Multiplication tables on the quotient by the recovered ideal and their
//! joint eigenstructure: zeros ξ_ω, multiplicities and degree bounds.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::ideal::{hankel_column, solve_upper, IdealData};
use crate::index::IndexSet;
use crate::linalg::{dot, schur, svd, Mat, C64};
use crate::poly::Poly;
use crate::signal::{wrap_angle, SampleSource};

/// Default cluster tolerance.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-6;
/// Default seed for the random combination of tables.
pub const DEFAULT_SEED: u64 = 0x005e_ed0f_2a11;
/// Number of attempts with fresh combinations before giving up.
pub const MAX_ATTEMPTS: usize = 5;
/// Zeros with a component this small cannot be mapped to a frequency.
pub const MIN_ZERO_MODULUS: f64 = 1e-12;
/// Relative size below which a power of a cluster's nilpotent part counts
/// as zero when estimating degree bounds.
const NILPOTENT_TOL: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct MultiplicationTables {
    normal_set: IndexSet,
    tables: Vec<Mat>,
    // the same operators in the orthonormal column basis, which is far
    // better conditioned than the monomial one
    work: Vec<Mat>,
}

impl MultiplicationTables {
    /// Tables given directly in some basis of the quotient.
    pub fn from_matrices(normal_set: IndexSet, tables: Vec<Mat>) -> Result<Self> {
        if tables.len() != normal_set.dim() {
            return Err(Error::DimensionMismatch {
                expected: normal_set.dim(),
                found: tables.len(),
            });
        }
        for m in &tables {
            if m.rows() != normal_set.len() || m.cols() != normal_set.len() {
                return Err(Error::Invalid("table size differs from normal set".into()));
            }
        }
        Ok(MultiplicationTables {
            normal_set,
            work: tables.clone(),
            tables,
        })
    }

    pub fn dim(&self) -> usize {
        self.tables.len()
    }

    pub fn size(&self) -> usize {
        self.normal_set.len()
    }

    pub fn normal_set(&self) -> &IndexSet {
        &self.normal_set
    }

    /// M_j in the normal-set monomial basis.
    pub fn tables(&self) -> &[Mat] {
        &self.tables
    }

    /// max_{j<k} ‖M_j M_k − M_k M_j‖ / max_j ‖M_j‖².
    pub fn commutator_residual(&self) -> f64 {
        let scale = self
            .tables
            .iter()
            .map(|m| m.frobenius())
            .fold(0.0, f64::max)
            .powi(2);
        let mut worst = 0.0f64;
        for j in 0..self.tables.len() {
            for k in j + 1..self.tables.len() {
                let (a, b) = (&self.tables[j], &self.tables[k]);
                worst = worst.max(a.mul(b).sub(&b.mul(a)).frobenius());
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            worst
        }
    }
}

/// W R = G for upper triangular R.
fn solve_right_upper(g: &Mat, r: &Mat) -> Mat {
    let n = r.rows();
    let mut w = Mat::zeros(g.rows(), n);
    for i in 0..g.rows() {
        for j in 0..n {
            let mut acc = g[(i, j)];
            for k in 0..j {
                acc -= w[(i, k)] * r[(k, j)];
            }
            w[(i, j)] = acc / r[(j, j)];
        }
    }
    w
}

/// M_j with columns NF(x_j x^β) for β in the normal set.
pub fn build_tables(ideal: &IdealData, source: &SampleSource) -> Result<MultiplicationTables> {
    let normal = ideal.normal_set().clone();
    let q = ideal.column_basis();
    let r = ideal.column_triangle();
    let n = normal.len();
    let mut tables = Vec::with_capacity(ideal.dim());
    let mut work = Vec::with_capacity(ideal.dim());
    for j in 0..ideal.dim() {
        // G = Q^* F_{Υ_N, x_j P}
        let mut g = Mat::zeros(n, n);
        for (k, beta) in normal.iter().enumerate() {
            let col = hankel_column(source, ideal.rows(), &beta.plus_unit(j))?;
            for i in 0..n {
                g[(i, k)] = dot(q.col(i), &col);
            }
        }
        let mut m = Mat::zeros(n, n);
        for k in 0..n {
            let x = solve_upper(r, g.col(k));
            m.col_mut(k).copy_from_slice(&x);
        }
        work.push(solve_right_upper(&g, r));
        tables.push(m);
    }
    Ok(MultiplicationTables {
        normal_set: normal,
        tables,
        work,
    })
}

/// One joint eigenvalue of the tables.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroCluster {
    pub xi: Vec<C64>,
    pub mult: usize,
    /// Upper bound for the degree of the coefficient polynomial.
    pub deg_bound: u32,
    /// Largest deviation of a block eigenvalue from its cluster mean,
    /// relative to the table scale.
    pub spread: f64,
}

impl ZeroCluster {
    /// Componentwise principal logarithm with imaginary parts in [−π, π).
    pub fn omega(&self) -> Result<Vec<C64>> {
        self.xi
            .iter()
            .map(|z| {
                if z.norm() < MIN_ZERO_MODULUS {
                    Err(Error::InvalidZero)
                } else {
                    Ok(C64::new(z.norm().ln(), wrap_angle(z.arg())))
                }
            })
            .collect()
    }
}

/// A recovered frequency with its multiplicity and degree bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Frequency {
    pub omega: Vec<C64>,
    pub mult: usize,
    pub deg_bound: u32,
}

/// Convex weights drawn uniformly from the simplex.
fn simplex_weights(rng: &mut ChaCha8Rng, s: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..s)
        .map(|_| {
            let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
            -(1.0 - u).ln()
        })
        .collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// Divisive grouping of eigenvalues along their minimum spanning tree. A
/// group of size m is kept when every member lies within scale·τ^{1/m} of
/// its centroid, the δ^{1/m} splitting of a defective eigenvalue; otherwise
/// the group is cut at its longest tree edge. Block sizes are capped by
/// `max_block`, the largest possible Jordan block.
fn cluster_eigenvalues(lambda: &[C64], tol: f64, scale: f64, max_block: usize) -> Vec<usize> {
    let n = lambda.len();
    let dist = |i: usize, j: usize| (lambda[i] - lambda[j]).norm();
    // Prim's algorithm on the complete graph
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(n.saturating_sub(1));
    let mut in_tree = vec![false; n];
    let mut best = vec![(f64::INFINITY, 0usize); n];
    if n > 0 {
        in_tree[0] = true;
        for j in 1..n {
            best[j] = (dist(0, j), 0);
        }
    }
    for _ in 1..n {
        let next = (0..n)
            .filter(|&j| !in_tree[j])
            .min_by(|&a, &b| best[a].0.total_cmp(&best[b].0))
            .expect("vertices left");
        in_tree[next] = true;
        edges.push((best[next].1, next));
        for j in 0..n {
            if !in_tree[j] && dist(next, j) < best[j].0 {
                best[j] = (dist(next, j), next);
            }
        }
    }

    let accepted = |group: &[usize]| {
        let m = group.len();
        let centroid = group.iter().map(|&i| lambda[i]).sum::<C64>() / m as f64;
        let radius = group
            .iter()
            .map(|&i| (lambda[i] - centroid).norm())
            .fold(0.0, f64::max);
        radius <= scale * tol.powf(1.0 / m.min(max_block).max(1) as f64)
    };

    let mut done: Vec<Vec<usize>> = Vec::new();
    let mut todo: Vec<Vec<usize>> = if n > 0 { vec![(0..n).collect()] } else { Vec::new() };
    while let Some(group) = todo.pop() {
        if group.len() == 1 || accepted(&group) {
            done.push(group);
            continue;
        }
        let inside: Vec<(usize, usize)> = edges
            .iter()
            .copied()
            .filter(|(a, b)| group.contains(a) && group.contains(b))
            .collect();
        let longest = inside
            .iter()
            .enumerate()
            .max_by(|x, y| dist(x.1 .0, x.1 .1).total_cmp(&dist(y.1 .0, y.1 .1)))
            .map(|(k, _)| k)
            .expect("a connected group of two or more has an edge");
        // the remaining edges split the group into two subtrees
        let mut side: Vec<usize> = vec![group[0]];
        let mut grew = true;
        while grew {
            grew = false;
            for (k, &(a, b)) in inside.iter().enumerate() {
                if k == longest {
                    continue;
                }
                if side.contains(&a) != side.contains(&b) {
                    side.push(if side.contains(&a) { b } else { a });
                    grew = true;
                }
            }
        }
        let other: Vec<usize> = group.iter().copied().filter(|i| !side.contains(i)).collect();
        todo.push(side);
        todo.push(other);
    }
    let mut labels = vec![0; n];
    for (g, members) in done.iter().enumerate() {
        for &i in members {
            labels[i] = g;
        }
    }
    labels
}

fn combine(mats: &[Mat], w: &[f64]) -> Mat {
    let n = mats[0].rows();
    let mut acc = Mat::zeros(n, n);
    for (m, &c) in mats.iter().zip(w) {
        acc = acc.add(&m.scale(C64::new(c, 0.0)));
    }
    acc
}

/// Smallest k with ‖N^k‖ negligible, minus one.
fn degree_from_nilpotent(n: &Mat, scale: f64) -> u32 {
    let m = n.rows();
    let mut power = Mat::identity(m);
    for k in 1..=m {
        power = power.mul(n);
        if power.frobenius() <= NILPOTENT_TOL * scale.powi(k as i32) {
            return (k - 1) as u32;
        }
    }
    (m - 1) as u32
}

fn spectral_spread(block: &Mat, center: C64) -> f64 {
    if block.rows() <= 1 {
        return 0.0;
    }
    schur(block)
        .eigenvalues()
        .iter()
        .map(|l| (l - center).norm())
        .fold(0.0, f64::max)
}

fn attempt(tables: &MultiplicationTables, tol: f64, seed: u64) -> Option<Vec<ZeroCluster>> {
    let s = tables.dim();
    let n = tables.size();
    // a local quotient spanned by monomials of degree ≤ D has nilpotency
    // index at most D + 1
    let max_block = tables.normal_set.max_degree().map_or(1, |d| d as usize + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = simplex_weights(&mut rng, s);
    let mc = combine(&tables.work, &w);
    let mut sch = schur(&mc);
    let lambda = sch.eigenvalues();
    let scale = lambda.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut labels = cluster_eigenvalues(&lambda, tol, scale, max_block);
    let first: Vec<usize> = {
        let mut f = vec![usize::MAX; n];
        for (i, &l) in labels.iter().enumerate() {
            f[l] = f[l].min(i);
        }
        f
    };
    sch.group_by(&mut labels, |l| first[l]);

    let transformed: Vec<Mat> = tables
        .work
        .iter()
        .map(|m| sch.u.adjoint().mul(m).mul(&sch.u))
        .collect();
    let mut clusters = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && labels[end] == labels[start] {
            end += 1;
        }
        let m = end - start;
        let mut xi = Vec::with_capacity(s);
        let mut spread = 0.0f64;
        for t in &transformed {
            let block = t.block(start, start, m, m);
            let mean = block.trace() / m as f64;
            spread = spread.max(spectral_spread(&block, mean));
            xi.push(mean);
        }
        let tblock = sch.t.block(start, start, m, m);
        let mean = tblock.trace() / m as f64;
        let nil = tblock.sub(&Mat::identity(m).scale(mean));
        let deg_bound = degree_from_nilpotent(&nil, scale);
        let spread = spread / scale;
        if spread > tol.powf(1.0 / m.min(max_block) as f64) {
            return None;
        }
        clusters.push(ZeroCluster {
            xi,
            mult: m,
            deg_bound,
            spread,
        });
        start = end;
    }
    clusters.sort_by(|a, b| {
        // coarse rounding keeps the order stable under roundoff
        let key = |c: &ZeroCluster| {
            c.xi.iter()
                .flat_map(|z| [z.re, z.im])
                .map(|x| (x * 1e6).round())
                .collect::<Vec<_>>()
        };
        key(a).partial_cmp(&key(b)).unwrap_or(core::cmp::Ordering::Equal)
    });
    Some(clusters)
}

/// Joint eigenvalues with multiplicities, retrying with fresh random
/// combinations until every cluster block has a single eigenvalue per
/// table.
pub fn joint_eigen(tables: &MultiplicationTables, tol: f64, seed: u64) -> Result<Vec<ZeroCluster>> {
    joint_eigen_checked(tables, tol, seed, |_| true)
}

/// As [`joint_eigen`], additionally requiring `accept` to approve the result.
pub fn joint_eigen_checked(
    tables: &MultiplicationTables,
    tol: f64,
    seed: u64,
    accept: impl Fn(&[ZeroCluster]) -> bool,
) -> Result<Vec<ZeroCluster>> {
    if !(tol > 0.0) {
        return Err(Error::Invalid("cluster tolerance must be positive".into()));
    }
    if tables.size() == 0 {
        return Ok(Vec::new());
    }
    for k in 0..MAX_ATTEMPTS {
        if let Some(c) = attempt(tables, tol, seed.wrapping_add(k as u64)) {
            if accept(&c) {
                return Ok(c);
            }
        }
    }
    Err(Error::Clustering {
        attempts: MAX_ATTEMPTS,
    })
}

pub fn frequencies_from_zeros(clusters: &[ZeroCluster]) -> Result<Vec<Frequency>> {
    clusters
        .iter()
        .map(|c| {
            Ok(Frequency {
                omega: c.omega()?,
                mult: c.mult,
                deg_bound: c.deg_bound,
            })
        })
        .collect()
}

fn top_degree_norm(q: &Poly) -> f64 {
    let d = q.degree();
    q.terms()
        .iter()
        .filter(|(a, _)| a.len() as i64 == d)
        .map(|(_, c)| c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Vanishing of the kernel at a cluster: max |q(ξ)| with q scaled by the
/// norm of its leading homogeneous part. For a multiple zero the gradients
/// (ξ_j ∂_j q(ξ))_j must also be rank deficient, and in one variable the
/// θ-derivatives up to order m−1 must vanish.
pub fn verify_zero_residual(ideal: &IdealData, cluster: &ZeroCluster) -> Result<f64> {
    let s = ideal.dim();
    if cluster.xi.len() != s {
        return Err(Error::DimensionMismatch {
            expected: s,
            found: cluster.xi.len(),
        });
    }
    let mut worst = 0.0f64;
    let mut grads: Vec<Vec<C64>> = Vec::new();
    for q in ideal.kernel() {
        let w = top_degree_norm(q);
        if w == 0.0 {
            continue;
        }
        worst = worst.max(q.evaluate(&cluster.xi)?.norm() / w);
        if cluster.mult > 1 {
            let mut row = Vec::with_capacity(s);
            for j in 0..s {
                let e = crate::index::MultiIndex::unit(s, j);
                row.push(q.derivative(&e).evaluate(&cluster.xi)? * cluster.xi[j] / w);
            }
            grads.push(row);
            if s == 1 {
                let x = Poly::monomial(crate::index::MultiIndex::unit(1, 0), C64::new(1.0, 0.0));
                let mut theta = q.clone();
                for _ in 1..cluster.mult {
                    theta = crate::poly::theta_apply(&x, &theta)?;
                    worst = worst.max(theta.evaluate(&cluster.xi)?.norm() / w);
                }
            }
        }
    }
    if cluster.mult > 1 && grads.len() >= s {
        let j = Mat::from_rows(&grads);
        let d = svd(&j);
        worst = worst.max(d.s.get(s - 1).copied().unwrap_or(0.0));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ideal::{reconstruct_ideal, DEFAULT_RANK_TOL};
    use crate::index::MultiIndex;
    use crate::signal::ExpPolyModel;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn real(rows: &[&[f64]]) -> Mat {
        Mat::from_rows(&rows.iter().map(|r| r.iter().map(|&x| c(x, 0.)).collect()).collect::<Vec<_>>())
    }

    fn set(dim: usize, v: &[&[u32]]) -> IndexSet {
        IndexSet::from_members(dim, v.iter().map(|a| MultiIndex::new(a.to_vec()))).unwrap()
    }

    #[test]
    fn companion_of_double_zero() {
        let t = MultiplicationTables::from_matrices(set(1, &[&[0], &[1]]), vec![real(&[&[0., -4.], &[1., 4.]])])
            .unwrap();
        let z = joint_eigen(&t, DEFAULT_CLUSTER_TOL, DEFAULT_SEED).unwrap();
        assert_eq!(z.len(), 1);
        assert_eq!(z[0].mult, 2);
        assert!((z[0].xi[0] - c(2., 0.)).norm() < 1e-10);
        assert_eq!(z[0].deg_bound, 1);
    }

    #[test]
    fn diagonal_tables() {
        let t = MultiplicationTables::from_matrices(set(1, &[&[0], &[1]]), vec![real(&[&[2., 0.], &[0., 3.]])])
            .unwrap();
        let z = joint_eigen(&t, DEFAULT_CLUSTER_TOL, DEFAULT_SEED).unwrap();
        assert_eq!(z.len(), 2);
        assert!((z[0].xi[0] - c(2., 0.)).norm() < 1e-12 && z[0].mult == 1);
        assert!((z[1].xi[0] - c(3., 0.)).norm() < 1e-12 && z[1].mult == 1);
    }

    #[test]
    fn tables_from_ideals() {
        let s = SampleSource::Model(
            ExpPolyModel::new(1, [(vec![c(2f64.ln(), 0.)], Poly::from_real(1, &[(&[1], 1.0)]))]).unwrap(),
        );
        let id = reconstruct_ideal(&s, 3, DEFAULT_RANK_TOL).unwrap();
        let t = build_tables(&id, &s).unwrap();
        let expect = real(&[&[0., -4.], &[1., 4.]]);
        assert!(t.tables()[0].sub(&expect).max_abs() < 1e-8);

        let s = SampleSource::Model(ExpPolyModel::new(1, [(vec![c(2f64.ln(), 0.)], Poly::one(1))]).unwrap());
        let id = reconstruct_ideal(&s, 2, DEFAULT_RANK_TOL).unwrap();
        let t = build_tables(&id, &s).unwrap();
        assert!((t.tables()[0][(0, 0)] - c(2., 0.)).norm() < 1e-12);

        let s = SampleSource::Model(ExpPolyModel::new(2, [(vec![c(0., 0.); 2], Poly::one(2))]).unwrap());
        let id = reconstruct_ideal(&s, 1, DEFAULT_RANK_TOL).unwrap();
        let t = build_tables(&id, &s).unwrap();
        for m in t.tables() {
            assert!((m[(0, 0)] - c(1., 0.)).norm() < 1e-12);
        }
    }

    #[test]
    fn zeros_sharing_a_component_are_separated() {
        let m = ExpPolyModel::new(
            2,
            [
                (vec![c(2f64.ln(), 0.), c(0., 0.)], Poly::one(2)),
                (vec![c(2f64.ln(), 0.), c(3f64.ln(), 0.)], Poly::one(2)),
            ],
        )
        .unwrap();
        let s = SampleSource::Model(m);
        let id = reconstruct_ideal(&s, 2, DEFAULT_RANK_TOL).unwrap();
        let t = build_tables(&id, &s).unwrap();
        assert!(t.commutator_residual() < 1e-8);
        let z = joint_eigen(&t, DEFAULT_CLUSTER_TOL, DEFAULT_SEED).unwrap();
        assert_eq!(z.len(), 2);
        assert!((z[0].xi[0] - c(2., 0.)).norm() < 1e-9 && (z[0].xi[1] - c(1., 0.)).norm() < 1e-9);
        assert!((z[1].xi[0] - c(2., 0.)).norm() < 1e-9 && (z[1].xi[1] - c(3., 0.)).norm() < 1e-9);
    }

    #[test]
    fn frequency_examples() {
        let z = |xi: Vec<C64>| ZeroCluster {
            xi,
            mult: 1,
            deg_bound: 0,
            spread: 0.,
        };
        let f = frequencies_from_zeros(&[z(vec![c(2., 0.)])]).unwrap();
        assert!((f[0].omega[0] - c(2f64.ln(), 0.)).norm() < 1e-15);
        let f = frequencies_from_zeros(&[z(vec![c(-1., 0.)])]).unwrap();
        assert!((f[0].omega[0] - c(0., -core::f64::consts::PI)).norm() < 1e-15);
        let f = frequencies_from_zeros(&[z(vec![c(2., 0.), c(0., 1.)])]).unwrap();
        assert!((f[0].omega[1] - c(0., core::f64::consts::FRAC_PI_2)).norm() < 1e-15);
        assert_eq!(frequencies_from_zeros(&[z(vec![c(1e-13, 0.)])]), Err(Error::InvalidZero));
    }

    #[test]
    fn zero_residual_examples() {
        let s = SampleSource::Model(
            ExpPolyModel::new(1, [(vec![c(2f64.ln(), 0.)], Poly::from_real(1, &[(&[1], 1.0)]))]).unwrap(),
        );
        let id = reconstruct_ideal(&s, 3, DEFAULT_RANK_TOL).unwrap();
        let at = |x: f64, mult| ZeroCluster {
            xi: vec![c(x, 0.)],
            mult,
            deg_bound: 1,
            spread: 0.,
        };
        assert!(verify_zero_residual(&id, &at(2., 2)).unwrap() < 1e-8);
        assert!((verify_zero_residual(&id, &at(3., 1)).unwrap() - 1.0).abs() < 1e-8);
    }
}
