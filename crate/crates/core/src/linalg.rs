//! Small dense complex linear algebra: Householder QR, one-sided Jacobi SVD,
//! least squares, and the complex Schur form with diagonal reordering.
//!
//! Matrices are column-major. Sizes in this crate stay in the low hundreds,
//! so the simple O(n³) kernels are adequate.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::{Float, Zero};

pub type C64 = Complex64;

const EPS: f64 = f64::EPSILON;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![C64::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Builds from row-major nested data (handy in tests).
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        Mat::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn from_columns(rows: usize, cols: &[Vec<C64>]) -> Self {
        let mut data = Vec::with_capacity(rows * cols.len());
        for c in cols {
            debug_assert_eq!(c.len(), rows);
            data.extend_from_slice(c);
        }
        Mat {
            rows,
            cols: cols.len(),
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Column-major storage.
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn col(&self, j: usize) -> &[C64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [C64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<C64> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Mat::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            for k in 0..self.cols {
                let b = other[(k, j)];
                if b.is_zero() {
                    continue;
                }
                let a = self.col(k);
                let o = out.col_mut(j);
                for i in 0..a.len() {
                    o[i] += a[i] * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, x.len());
        let mut out = vec![C64::zero(); self.rows];
        for (k, &b) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.col(k)) {
                *o += a * b;
            }
        }
        out
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, c: C64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Contiguous sub-block [r0, r0+nr) × [c0, c0+nc).
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Mat {
        Mat::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn select_columns(&self, idx: &[usize]) -> Mat {
        let cols: Vec<Vec<C64>> = idx.iter().map(|&j| self.col(j).to_vec()).collect();
        Mat::from_columns(self.rows, &cols)
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[j * self.rows + i]
    }
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Thin Householder QR of an m×n matrix with m ≥ n: returns (Q m×n, R n×n).
pub fn qr(a: &Mat) -> (Mat, Mat) {
    let (m, n) = (a.rows, a.cols);
    assert!(m >= n, "qr expects a tall matrix");
    let mut r = a.clone();
    let mut reflectors: Vec<Vec<C64>> = Vec::with_capacity(n);
    for k in 0..n {
        let x: Vec<C64> = (k..m).map(|i| r[(i, k)]).collect();
        let xn = norm(&x);
        let mut v = x.clone();
        if xn > 0.0 {
            let phase = if x[0].norm() > 0.0 {
                x[0] / x[0].norm()
            } else {
                C64::new(1.0, 0.0)
            };
            v[0] += phase * xn;
            let vn = norm(&v);
            for z in v.iter_mut() {
                *z /= vn;
            }
            for j in k..n {
                let col = &mut r.col_mut(j)[k..];
                let d = dot(&v, col);
                for (c, vi) in col.iter_mut().zip(&v) {
                    *c -= vi * d * 2.0;
                }
            }
        } else {
            v.iter_mut().for_each(|z| *z = C64::zero());
        }
        reflectors.push(v);
    }
    let mut q = Mat::zeros(m, n);
    for j in 0..n {
        q[(j, j)] = C64::new(1.0, 0.0);
    }
    for k in (0..n).rev() {
        let v = &reflectors[k];
        for j in 0..n {
            let col = &mut q.col_mut(j)[k..];
            let d = dot(v, col);
            for (c, vi) in col.iter_mut().zip(v) {
                *c -= vi * d * 2.0;
            }
        }
    }
    let rr = Mat::from_fn(n, n, |i, j| if i <= j { r[(i, j)] } else { C64::zero() });
    (q, rr)
}

/// Thin singular value decomposition A V = U Σ with n = cols(A) singular
/// values sorted in decreasing order. U is rows(A)×n (zero columns where
/// σ = 0), V is n×n unitary.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Mat,
    pub s: Vec<f64>,
    pub v: Mat,
}

impl Svd {
    pub fn max(&self) -> f64 {
        self.s.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values with σ_k > tol · σ₁.
    pub fn rank(&self, tol: f64) -> usize {
        let smax = self.max();
        if smax == 0.0 {
            return 0;
        }
        self.s.iter().filter(|&&x| x > tol * smax).count()
    }

    /// Columns of V spanning the numerical null space.
    pub fn null_space(&self, tol: f64) -> Vec<Vec<C64>> {
        let r = self.rank(tol);
        (r..self.v.cols).map(|j| self.v.col(j).to_vec()).collect()
    }

    /// Minimum-norm least-squares solution of A x = b, discarding
    /// singular values at or below tol · σ₁.
    pub fn solve(&self, b: &[C64], tol: f64) -> Vec<C64> {
        let r = self.rank(tol);
        let mut x = vec![C64::zero(); self.v.rows];
        for k in 0..r {
            let c = dot(self.u.col(k), b) / self.s[k];
            for (xi, vi) in x.iter_mut().zip(self.v.col(k)) {
                *xi += vi * c;
            }
        }
        x
    }
}

pub fn svd(a: &Mat) -> Svd {
    let (m, n) = (a.rows, a.cols);
    if n == 0 {
        return Svd {
            u: Mat::zeros(m, 0),
            s: Vec::new(),
            v: Mat::zeros(0, 0),
        };
    }
    let (q, mut w) = if m > n {
        let (q, r) = qr(a);
        (Some(q), r)
    } else {
        (None, a.clone())
    };
    let mut v = Mat::identity(n);
    jacobi_sweeps(&mut w, &mut v);
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| norm(w.col(j))).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap_or(core::cmp::Ordering::Equal));
    let rows_w = w.rows;
    let mut s = Vec::with_capacity(n);
    let mut u_small = Mat::zeros(rows_w, n);
    let mut v_sorted = Mat::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        let sj = norms[j];
        s.push(sj);
        if sj > 0.0 {
            for i in 0..rows_w {
                u_small[(i, k)] = w[(i, j)] / sj;
            }
        }
        v_sorted.col_mut(k).copy_from_slice(v.col(j));
    }
    let u = match q {
        Some(q) => q.mul(&u_small),
        None => u_small,
    };
    Svd { u, s, v: v_sorted }
}

fn jacobi_sweeps(w: &mut Mat, v: &mut Mat) {
    let n = w.cols;
    let tol = EPS * (w.rows.max(1) as f64).sqrt();
    // columns below this are treated as exact zeros
    let negligible = w.frobenius() * EPS * EPS;
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let na = norm(w.col(p));
                let nb = norm(w.col(q));
                if na <= negligible || nb <= negligible {
                    continue;
                }
                let gamma = dot(w.col(p), w.col(q));
                let g = gamma.norm();
                if g <= tol * na * nb {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (nb - na) * (nb + na) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(w, p, q, c, s, phase);
                rotate_columns(v, p, q, c, s, phase);
            }
        }
        if !rotated {
            break;
        }
    }
}

// [a_p, a_q] <- [c a_p - s conj(φ) a_q, s a_p + c conj(φ) a_q] ... with b = a_q·conj(phase).
fn rotate_columns(m: &mut Mat, p: usize, q: usize, c: f64, s: f64, phase: C64) {
    let rows = m.rows;
    let pc = phase.conj();
    for i in 0..rows {
        let ap = m[(i, p)];
        let b = m[(i, q)] * pc;
        m[(i, p)] = ap * c - b * s;
        m[(i, q)] = ap * s + b * c;
    }
}

/// Complex Givens rotation G = [[c, s], [-conj(s), c]] with G [x; y] = [r; 0].
fn givens(x: C64, y: C64) -> (f64, C64) {
    let nx = x.norm();
    let ny = y.norm();
    if ny == 0.0 {
        return (1.0, C64::zero());
    }
    if nx == 0.0 {
        return (0.0, C64::new(1.0, 0.0));
    }
    let r = nx.hypot(ny);
    let c = nx / r;
    let s = (x / nx) * y.conj() / r;
    (c, s)
}

// Rows k, k+1 <- G · rows, for columns in [c0, c1).
fn apply_left(m: &mut Mat, k: usize, c: f64, s: C64, c0: usize, c1: usize) {
    for j in c0..c1 {
        let h1 = m[(k, j)];
        let h2 = m[(k + 1, j)];
        m[(k, j)] = h1 * c + s * h2;
        m[(k + 1, j)] = -s.conj() * h1 + h2 * c;
    }
}

// Columns k, k+1 <- columns · G^*, for rows in [r0, r1).
fn apply_right(m: &mut Mat, k: usize, c: f64, s: C64, r0: usize, r1: usize) {
    for i in r0..r1 {
        let h1 = m[(i, k)];
        let h2 = m[(i, k + 1)];
        m[(i, k)] = h1 * c + s.conj() * h2;
        m[(i, k + 1)] = -s * h1 + h2 * c;
    }
}

/// Complex Schur form A = U T U^* with T upper triangular.
#[derive(Clone, Debug)]
pub struct Schur {
    pub t: Mat,
    pub u: Mat,
}

impl Schur {
    pub fn eigenvalues(&self) -> Vec<C64> {
        (0..self.t.rows).map(|i| self.t[(i, i)]).collect()
    }

    /// Swaps the diagonal entries k and k+1 by a unitary similarity.
    pub fn swap(&mut self, k: usize) {
        let n = self.t.rows;
        let a = self.t[(k, k)];
        let b = self.t[(k + 1, k + 1)];
        let t12 = self.t[(k, k + 1)];
        let (c, s) = givens(t12, b - a);
        apply_left(&mut self.t, k, c, s, k, n);
        apply_right(&mut self.t, k, c, s, 0, k + 2);
        apply_right(&mut self.u, k, c, s, 0, n);
        self.t[(k + 1, k)] = C64::zero();
        self.t[(k, k)] = b;
        self.t[(k + 1, k + 1)] = a;
    }

    /// Reorders the diagonal so that equal labels become contiguous, in the
    /// order given by `rank_of_label` (smaller first). Stable within a label.
    pub fn group_by(&mut self, labels: &mut [usize], rank_of_label: impl Fn(usize) -> usize) {
        let n = labels.len();
        // bubble sort with adjacent swaps only
        loop {
            let mut changed = false;
            for k in 0..n.saturating_sub(1) {
                if rank_of_label(labels[k]) > rank_of_label(labels[k + 1]) {
                    self.swap(k);
                    labels.swap(k, k + 1);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }
}

/// Reduces A to upper Hessenberg form H = Q^* A Q.
fn hessenberg(a: &Mat) -> (Mat, Mat) {
    let n = a.rows;
    let mut h = a.clone();
    let mut q = Mat::identity(n);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xn = norm(&x);
        if xn == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut v = x;
        v[0] += phase * xn;
        let vn = norm(&v);
        v.iter_mut().for_each(|z| *z /= vn);
        // H <- P H
        for j in 0..n {
            let d: C64 = (0..v.len()).map(|i| v[i].conj() * h[(k + 1 + i, j)]).sum();
            for i in 0..v.len() {
                let val = h[(k + 1 + i, j)] - v[i] * d * 2.0;
                h[(k + 1 + i, j)] = val;
            }
        }
        // H <- H P, Q <- Q P
        for m in [&mut h, &mut q] {
            for i in 0..n {
                let d: C64 = (0..v.len()).map(|l| m[(i, k + 1 + l)] * v[l]).sum();
                for l in 0..v.len() {
                    let val = m[(i, k + 1 + l)] - d * v[l].conj() * 2.0;
                    m[(i, k + 1 + l)] = val;
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = C64::zero();
        }
    }
    (h, q)
}

/// Complex Schur decomposition by shifted QR iteration on the Hessenberg form.
pub fn schur(a: &Mat) -> Schur {
    assert_eq!(a.rows, a.cols, "schur expects a square matrix");
    let n = a.rows;
    let (mut h, mut u) = hessenberg(a);
    if n <= 1 {
        return Schur { t: h, u };
    }
    let mut hi = n - 1;
    let mut iter = 0usize;
    let scale = h.max_abs().max(f64::MIN_POSITIVE);
    while hi > 0 {
        // look for a negligible subdiagonal entry
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            let reference = if diag == 0.0 { scale } else { diag };
            if sub <= EPS * reference {
                h[(lo, lo - 1)] = C64::zero();
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > 300 {
            // give up on this block; leave what we have
            break;
        }
        let mu = if iter.is_multiple_of(11) {
            // exceptional shift
            h[(hi, hi)] + C64::new(h[(hi, hi - 1)].norm() * 0.75, 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };
        // implicit single-shift QR sweep on the active window [lo, hi]
        let mut x = h[(lo, lo)] - mu;
        let mut y = h[(lo + 1, lo)];
        for k in lo..hi {
            let (c, s) = givens(x, y);
            let c0 = if k > lo { k - 1 } else { lo };
            apply_left(&mut h, k, c, s, c0, n);
            let r1 = (k + 3).min(hi + 1).max(k + 2);
            apply_right(&mut h, k, c, s, 0, r1);
            apply_right(&mut u, k, c, s, 0, n);
            if k > lo {
                h[(k + 1, k - 1)] = C64::zero();
            }
            if k + 1 < hi {
                x = h[(k + 1, k)];
                y = h[(k + 2, k)];
            }
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = C64::zero();
        }
    }
    Schur { t: h, u }
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    // eigenvalue of [[a, b], [c, d]] closest to d
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr * 0.25 - det).sqrt();
    let l1 = tr * 0.5 + disc;
    let l2 = tr * 0.5 - disc;
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}
