//! Shared generators and comparisons for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use expoly_core::index::MultiIndex;
use expoly_core::linalg::C64;
use expoly_core::poly::{Basis, Poly};
use expoly_core::signal::ExpPolyModel;
use rand::rngs::StdRng;
use rand::Rng;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A random complex number with modulus in [lo, hi] and uniform phase.
pub fn random_coeff(rng: &mut StdRng, lo: f64, hi: f64) -> C64 {
    let r = rng.gen_range(lo..=hi);
    C64::from_polar(r, rng.gen_range(-PI..PI))
}

pub fn random_index(rng: &mut StdRng, dim: usize, max_total: u32) -> MultiIndex {
    let total = rng.gen_range(0..=max_total);
    let mut e = vec![0u32; dim];
    for _ in 0..total {
        e[rng.gen_range(0..dim)] += 1;
    }
    MultiIndex::new(e)
}

/// A random polynomial of total degree exactly `deg` with `terms` terms.
pub fn random_poly(rng: &mut StdRng, dim: usize, deg: u32, terms: usize, lo: f64, hi: f64) -> Poly {
    let mut items = Vec::new();
    let mut lead = vec![0u32; dim];
    for _ in 0..deg {
        lead[rng.gen_range(0..dim)] += 1;
    }
    items.push((MultiIndex::new(lead), random_coeff(rng, lo, hi)));
    for _ in 1..terms {
        items.push((random_index(rng, dim, deg), random_coeff(rng, lo, hi)));
    }
    let p = Poly::from_terms(dim, Basis::Monomial, items).unwrap();
    if p.degree() == deg as i64 {
        p
    } else {
        random_poly(rng, dim, deg, terms, lo, hi)
    }
}

pub struct ModelShape {
    pub dim: usize,
    pub components: usize,
    pub max_degree: u32,
    /// Bound on |Re ω_j|.
    pub damping: f64,
    /// Minimal Euclidean distance between distinct ξ.
    pub separation: f64,
    pub coeff_lo: f64,
    pub coeff_hi: f64,
}

/// Random model with well separated zeros ξ = e^ω.
pub fn random_model(rng: &mut StdRng, shape: &ModelShape) -> ExpPolyModel {
    let mut xis: Vec<Vec<C64>> = Vec::new();
    let mut parts = Vec::new();
    while parts.len() < shape.components {
        let omega: Vec<C64> = (0..shape.dim)
            .map(|_| c(rng.gen_range(-shape.damping..=shape.damping), rng.gen_range(-PI..PI)))
            .collect();
        let xi: Vec<C64> = omega.iter().map(|w| w.exp()).collect();
        let far = xis.iter().all(|other| {
            other
                .iter()
                .zip(&xi)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt()
                >= shape.separation
        });
        if !far {
            continue;
        }
        let deg = rng.gen_range(0..=shape.max_degree);
        let terms = rng.gen_range(1..=3);
        let poly = random_poly(rng, shape.dim, deg, terms, shape.coeff_lo, shape.coeff_hi);
        xis.push(xi);
        parts.push((omega, poly));
    }
    ExpPolyModel::new(shape.dim, parts).unwrap()
}

/// Pairs each true component with the recovered one of nearest ξ and
/// returns (max frequency error, max relative coefficient error), or None
/// when the component counts differ or the pairing is not one to one.
pub fn compare_models(truth: &ExpPolyModel, found: &ExpPolyModel) -> Option<(f64, f64)> {
    if truth.components().len() != found.components().len() {
        return None;
    }
    let mut used = vec![false; found.components().len()];
    let mut freq_err = 0.0f64;
    let mut coeff_err = 0.0f64;
    for t in truth.components() {
        let (k, _) = found
            .components()
            .iter()
            .enumerate()
            .map(|(k, f)| {
                let d: f64 = t.xi().iter().zip(f.xi()).map(|(a, b)| (a - b).norm_sqr()).sum();
                (k, d)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))?;
        if used[k] {
            return None;
        }
        used[k] = true;
        let f = &found.components()[k];
        for (a, b) in t.omega().iter().zip(f.omega()) {
            let d_im = expoly_core::signal::wrap_angle(a.im - b.im);
            freq_err = freq_err.max((a.re - b.re).hypot(d_im));
        }
        coeff_err = coeff_err.max(t.poly().sub(f.poly()).coeff_norm() / t.poly().coeff_norm());
    }
    Some((freq_err, coeff_err))
}
