//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use expoly_core::coeffs::{end_to_end, Tolerances};
use expoly_core::ideal::{hilbert_function, reconstruct_ideal, DEFAULT_RANK_TOL};
use expoly_core::index::{gamma_set, upsilon_set, IndexSet, MultiIndex};
use expoly_core::linalg::{svd, Mat, C64};
use expoly_core::poly::{l_apply, l_inverse, shift_span, theta_apply, theta_equals_scaled_derivative_check, Poly};
use expoly_core::signal::{annihilation_residual, build_vandermonde, hankel_factorization_residual, ExpPolyModel, SampleSource};
use expoly_core::stirling::{box_indices, stirling1, stirling2, stirling2_by_sum, stirling2_recurrence_step};
use expoly_core::zeros::{build_tables, joint_eigen, MultiplicationTables, DEFAULT_CLUSTER_TOL, DEFAULT_SEED};
use num_bigint::BigInt;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Verdict = (bool, String);

fn model_shape(dim: usize, components: usize) -> ModelShape {
    ModelShape {
        dim,
        components,
        max_degree: 2,
        damping: 0.05,
        separation: 0.3,
        coeff_lo: 0.1,
        coeff_hi: 10.0,
    }
}

fn stirling_duality() -> Verdict {
    let start = Instant::now();
    let mut checked = 0usize;
    for s in 1..=3 {
        let boxed = box_indices(s, 5);
        for alpha in &boxed {
            for gamma in &boxed {
                let mut sum = BigInt::from(0);
                for beta in boxed.iter().filter(|b| gamma.le(b) && (*b).le(alpha)) {
                    sum += stirling2(alpha, beta).unwrap() * stirling1(beta, gamma).unwrap();
                }
                let expect = BigInt::from((alpha == gamma) as i32);
                if sum != expect {
                    return (false, format!("s={s} α={:?} γ={:?} sum={sum}", alpha.entries(), gamma.entries()));
                }
                checked += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    (elapsed.as_secs_f64() < 10.0, format!("{checked} pairs exact in {elapsed:.2?}"))
}

fn stirling_recurrence() -> Verdict {
    let mut checked = 0usize;
    for s in 1..=3 {
        let boxed = box_indices(s, 5);
        for nu in &boxed {
            for kappa in &boxed {
                let memo = stirling2(nu, kappa).unwrap();
                if memo != stirling2_by_sum(nu, kappa).unwrap() {
                    return (false, format!("definition mismatch at ν={:?} κ={:?}", nu.entries(), kappa.entries()));
                }
                for j in 0..s {
                    let up = nu.plus_unit(j);
                    if up.entries()[j] <= 5 && stirling2_recurrence_step(nu, kappa, j).unwrap() != stirling2(&up, kappa).unwrap() {
                        return (false, format!("recurrence mismatch at ν={:?} κ={:?} j={j}", nu.entries(), kappa.entries()));
                    }
                }
                checked += 1;
            }
        }
    }
    (true, format!("{checked} pairs agree"))
}

fn l_round_trip() -> Verdict {
    let mut rng = StdRng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let dim = rng.gen_range(1..=3);
        let deg = rng.gen_range(0..=6);
        let terms = rng.gen_range(1..=8);
        let p = random_poly(&mut rng, dim, deg, terms, 0.1, 10.0);
        let back = l_inverse(&l_apply(&p));
        worst = worst.max(back.sub(&p).coeff_norm() / p.coeff_norm());
    }
    (worst <= 1e-9, format!("max relative coefficient error {worst:.2e}"))
}

fn theta_identity() -> Verdict {
    let mut rng = StdRng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let dim = rng.gen_range(1..=3);
        let (dq, tq, dp, tp) = (rng.gen_range(0..=4), rng.gen_range(1..=5), rng.gen_range(0..=4), rng.gen_range(1..=5));
        let q = random_poly(&mut rng, dim, dq, tq, 0.1, 10.0);
        let p = random_poly(&mut rng, dim, dp, tp, 0.1, 10.0);
        let xi: Vec<C64> = (0..dim).map(|_| random_coeff(&mut rng, 0.5, 2.0)).collect();
        let abs = theta_equals_scaled_derivative_check(&q, &p, &xi).unwrap();
        // magnitude of the left-hand side computed term by term
        let scale: f64 = q
            .terms()
            .iter()
            .map(|(alpha, c)| {
                let mono = Poly::monomial(alpha.clone(), *c);
                theta_apply(&mono, &p).unwrap().evaluate(&xi).unwrap().norm()
            })
            .sum();
        worst = worst.max(abs / scale.max(f64::MIN_POSITIVE));
    }
    (worst <= 1e-9, format!("max relative residual {worst:.2e}"))
}

fn hankel_factorization() -> Verdict {
    let mut rng = StdRng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let dim = 1 + i % 2;
        let shape = model_shape(dim, rng.gen_range(1..=3));
        let model = random_model(&mut rng, &shape);
        let set = gamma_set(dim, 4).unwrap();
        worst = worst.max(hankel_factorization_residual(&model, &set, &set).unwrap());
    }
    (worst <= 1e-10, format!("max relative residual {worst:.2e}"))
}

fn kernel_ideal(s2_tables: &mut Vec<MultiplicationTables>) -> Verdict {
    let mut rng = StdRng::seed_from_u64(6);
    let mut worst_kernel = 0.0f64;
    let mut worst_gap = f64::INFINITY;
    let mut kernels = 0;
    for i in 0..30 {
        let dim = 1 + i % 3;
        let model = random_model(&mut rng, &model_shape(dim, 1 + (i / 3) % 4));
        let n = model.total_multiplicity();
        let source = SampleSource::Model(model);
        let ideal = reconstruct_ideal(&source, n, DEFAULT_RANK_TOL).unwrap();
        let test = upsilon_set(dim, 2 * n).unwrap();
        for q in ideal.kernel() {
            worst_kernel = worst_kernel.max(annihilation_residual(&source, q, &test).unwrap());
            kernels += 1;
        }
        for &g in ideal.normal_gaps() {
            worst_gap = worst_gap.min(g);
        }
        if dim == 2 {
            s2_tables.push(build_tables(&ideal, &source).unwrap());
        }
    }
    (
        worst_kernel <= 1e-8 && worst_gap >= 1e-6,
        format!("{kernels} kernel vectors, max annihilation {worst_kernel:.2e}, min normal-set gap {worst_gap:.2e}"),
    )
}

/// rank V(Θ, Γ_n) from the known zeros and multiplicity spaces.
fn brute_hilbert(model: &ExpPolyModel, n: u32) -> usize {
    let bases: Vec<_> = model.components().iter().map(|c| shift_span(c.poly()).unwrap()).collect();
    let v: Mat = build_vandermonde(model, &bases, &gamma_set(model.dim(), n).unwrap()).unwrap();
    svd(&v).rank(1e-10)
}

fn hilbert_examples() -> (Verdict, Option<MultiplicationTables>) {
    let point = ExpPolyModel::new(2, [(vec![c(0.0, 0.0); 2], Poly::from_real(2, &[(&[1, 1], 1.0)]))]).unwrap();
    let cases = [
        ("<x-2>", ExpPolyModel::new(1, [(vec![c(2f64.ln(), 0.0)], Poly::from_real(1, &[(&[0], 1.0)]))]).unwrap(), 2),
        (
            "<(x-2)^2>",
            ExpPolyModel::new(1, [(vec![c(2f64.ln(), 0.0)], Poly::from_real(1, &[(&[0], 1.0), (&[1], 1.0)]))]).unwrap(),
            4,
        ),
        ("point (1,1)", point, 8),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    let mut tables = None;
    for (name, model, bound) in cases {
        let source = SampleSource::Model(model.clone());
        let ideal = reconstruct_ideal(&source, bound, DEFAULT_RANK_TOL).unwrap();
        let top = ideal.trace().last().map_or(0, |t| t.0);
        let found: Vec<usize> = (0..=top).map(|n| hilbert_function(&ideal, n).unwrap()).collect();
        let brute: Vec<usize> = (0..=top).map(|n| brute_hilbert(&model, n)).collect();
        ok &= found == brute;
        lines.push(format!("{name} {found:?} vs {brute:?}"));
        if model.dim() == 2 {
            tables = Some(build_tables(&ideal, &source).unwrap());
        }
    }
    ((ok, lines.join("; ")), tables)
}

fn eigenstructure(s2_tables: &[MultiplicationTables]) -> Verdict {
    let companion = Mat::from_rows(&[vec![c(0.0, 0.0), c(-4.0, 0.0)], vec![c(1.0, 0.0), c(4.0, 0.0)]]);
    let normal = IndexSet::from_members(1, [MultiIndex::new(vec![0]), MultiIndex::new(vec![1])]).unwrap();
    let tables = MultiplicationTables::from_matrices(normal, vec![companion]).unwrap();
    let clusters = joint_eigen(&tables, DEFAULT_CLUSTER_TOL, DEFAULT_SEED).unwrap();
    let single = clusters.len() == 1 && clusters[0].mult == 2 && (clusters[0].xi[0] - c(2.0, 0.0)).norm() <= 1e-6;
    let worst = s2_tables.iter().map(|t| t.commutator_residual()).fold(0.0, f64::max);
    (
        single && worst <= 1e-8,
        format!(
            "companion -> {} cluster(s) ξ={:.6} mult {}; max commutator {worst:.2e} over {} s=2 ideals",
            clusters.len(),
            clusters[0].xi[0],
            clusters[0].mult,
            s2_tables.len()
        ),
    )
}

fn round_trip() -> Verdict {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(9);
    let tol = Tolerances::default();
    let (mut worst_freq, mut worst_coeff, mut worst_resyn) = (0.0f64, 0.0f64, 0.0f64);
    let mut failures = Vec::new();
    for i in 0..50 {
        let dim = 1 + i % 3;
        let model = random_model(&mut rng, &model_shape(dim, 1 + (i / 3) % 4));
        let bound = 2 * model.total_multiplicity();
        match end_to_end(&SampleSource::Model(model.clone()), bound, &tol) {
            Ok(r) => match compare_models(&model, &r.model) {
                Some((f, k)) => {
                    worst_freq = worst_freq.max(f);
                    worst_coeff = worst_coeff.max(k);
                    worst_resyn = worst_resyn.max(r.report.resynthesis_error);
                    if f > 1e-6 || k > 1e-6 || r.report.resynthesis_error > 1e-8 {
                        failures.push(format!("#{i}"));
                    }
                }
                None => failures.push(format!("#{i} component mismatch")),
            },
            Err(e) => failures.push(format!("#{i} {e}")),
        }
    }
    let elapsed = start.elapsed();
    (
        failures.is_empty() && elapsed.as_secs_f64() < 60.0,
        format!(
            "freq {worst_freq:.2e}, coeff {worst_coeff:.2e}, resynthesis {worst_resyn:.2e}, {elapsed:.2?}{}",
            if failures.is_empty() { String::new() } else { format!(", failed: {}", failures.join(", ")) }
        ),
    )
}

fn classical_prony() -> Verdict {
    let mut rng = StdRng::seed_from_u64(10);
    let mut shape = model_shape(1, 1);
    shape.max_degree = 0;
    let mut checked = 0;
    for i in 0..24 {
        shape.dim = 1 + i % 3;
        shape.components = 1 + (i / 3) % 4;
        let model = random_model(&mut rng, &shape);
        let k = model.components().len();
        let ideal = reconstruct_ideal(&SampleSource::Model(model), 2 * k, DEFAULT_RANK_TOL).unwrap();
        let trace = ideal.trace();
        let saturated = trace.last().map(|t| t.1) == Some(k)
            && trace.windows(2).all(|w| w[0].1 <= w[1].1)
            && trace.iter().rev().nth(1).is_none_or(|t| t.1 == k || trace.len() == 1);
        if ideal.normal_set().len() != k || !saturated {
            return (false, format!("case {i}: #Ω={k}, normal set {}, trace {trace:?}", ideal.normal_set().len()));
        }
        checked += 1;
    }
    (true, format!("{checked} constant-coefficient models, normal set = #Ω and trace saturates"))
}

fn main() -> ExitCode {
    let mut s2_tables = Vec::new();
    let mut results: Vec<(&str, Verdict)> = vec![
        ("Stirling duality", stirling_duality()),
        ("recurrence vs definition", stirling_recurrence()),
        ("L round trip", l_round_trip()),
        ("theta identity", theta_identity()),
        ("Hankel factorization", hankel_factorization()),
    ];
    results.push(("kernel <=> ideal", kernel_ideal(&mut s2_tables)));
    let (hilbert, point_tables) = hilbert_examples();
    results.push(("Hilbert function", hilbert));
    s2_tables.extend(point_tables);
    results.push(("multiplication tables", eigenstructure(&s2_tables)));
    results.push(("end-to-end round trip", round_trip()));
    results.push(("classical Prony", classical_prony()));

    let mut all = true;
    for (k, (name, (pass, detail))) in results.iter().enumerate() {
        all &= pass;
        println!("criterion {:>2} {:<26} {}  {detail}", k + 1, name, if *pass { "PASS" } else { "FAIL" });
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
