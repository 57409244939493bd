mod common;

use common::{brute_prox, gaussian, max_abs_diff, random_function, rng, Kind};
use levelreg::error::Error;
use levelreg::path::{check_agglo_condition, prox_path_agglomerative, PathOptions};
use levelreg::solver::{
    objective, proximal_gradient, subgradient_descent, Denoise, LeastSquares, SolverConfig,
};
use levelreg::{ProxEngine, SetFunction};
use proptest::prelude::*;
use rand::Rng;

fn agglomerative_function(k: usize, p: usize, r: &mut rand_chacha::ChaCha8Rng) -> SetFunction {
    if k.is_multiple_of(2) {
        random_function(Kind::Cardinality, p, r)
    } else {
        SetFunction::chain_tv(p).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn path_matches_enumerated_prox(seed in any::<u64>(), p in 1usize..=8, k in 0usize..2) {
        let mut r = rng(seed);
        let f = agglomerative_function(k, p, &mut r);
        let z = gaussian(&mut r, p, 1.0);
        let path = prox_path_agglomerative(&f, &z, PathOptions::default()).unwrap();
        let last = path.breakpoints.last().copied().unwrap_or(1.0);
        for _ in 0..10 {
            let lambda = r.random_range(0.01..1.5 * last);
            let d = max_abs_diff(&path.evaluate(lambda), &brute_prox(&f, &z, lambda));
            prop_assert!(d <= 1e-8, "λ={lambda}: {d:e}");
        }
    }

    #[test]
    fn segments_are_affine_and_blocks_only_merge(seed in any::<u64>(), p in 2usize..=12, k in 0usize..2) {
        let mut r = rng(seed);
        let f = agglomerative_function(k, p, &mut r);
        let z = gaussian(&mut r, p, 1.0);
        let path = prox_path_agglomerative(&f, &z, PathOptions::default()).unwrap();
        prop_assert!(path.breakpoints.windows(2).all(|b| b[0] <= b[1]));
        prop_assert_eq!(path.segments.last().unwrap().blocks.len(), 1);
        for pair in path.segments.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            prop_assert!(b.blocks.len() <= a.blocks.len());
            // Every earlier block is contained in some later block.
            for block in &a.blocks {
                prop_assert!(b.blocks.iter().any(|big| block.iter().all(|e| big.contains(e))));
            }
            // The path is continuous at the breakpoint.
            let at = a.lambda_end;
            let left = path_values(&a.blocks, &a.values_at(at), p);
            let right = path_values(&b.blocks, &b.values_at(at), p);
            prop_assert!(max_abs_diff(&left, &right) <= 1e-9);
        }
        for seg in &path.segments {
            let end = if seg.lambda_end.is_finite() { seg.lambda_end } else { seg.lambda_start + 1.0 };
            let (lo, hi) = (seg.lambda_start, end);
            let mid = 0.5 * (lo + hi);
            let w = |l: f64| path.evaluate(l);
            // w(mid) is the average of the end points on an affine segment.
            let avg: Vec<f64> = w(lo + 0.25 * (hi - lo)).iter().zip(w(hi - 0.25 * (hi - lo))).map(|(a, b)| 0.5 * (a + b)).collect();
            prop_assert!(max_abs_diff(&w(mid), &avg) <= 1e-8);
        }
    }

    #[test]
    fn agglomerative_families_satisfy_the_condition(seed in any::<u64>(), p in 1usize..=8) {
        let mut r = rng(seed);
        let f = random_function(Kind::Cardinality, p, &mut r);
        prop_assert!(check_agglo_condition(&f).unwrap().holds);
    }
}

fn path_values(blocks: &[Vec<usize>], v: &[f64], p: usize) -> Vec<f64> {
    let mut w = vec![0.0; p];
    for (b, &val) in blocks.iter().zip(v) {
        for &e in b {
            w[e] = val;
        }
    }
    w
}

#[test]
fn unit_chain_is_agglomerative_with_tight_margin() {
    // p = 2: only A = V, C a singleton, margin 1. p = 3: A = {0, 1}, margin 1/2.
    // From p = 4 on, A = {1, 2} after B = {0} gives margin 0.
    for (p, expect) in [
        (2, 1.0),
        (3, 0.5),
        (4, 0.0),
        (5, 0.0),
        (6, 0.0),
        (7, 0.0),
        (8, 0.0),
    ] {
        let rep = check_agglo_condition(&SetFunction::chain_tv(p).unwrap()).unwrap();
        assert!(rep.holds, "p={p}: {rep:?}");
        assert!(
            (rep.worst_margin - expect).abs() <= 1e-12,
            "p={p}: {}",
            rep.worst_margin
        );
    }
}

#[test]
fn weighted_chain_paths_are_certified_or_rejected() {
    let mut r = rng(11);
    let mut rejected = 0;
    for _ in 0..60 {
        let p = r.random_range(3..=9);
        let f = random_function(Kind::ChainTv, p, &mut r);
        let z = gaussian(&mut r, p, 1.0);
        match prox_path_agglomerative(&f, &z, PathOptions::default()) {
            Ok(path) => {
                let last = path.breakpoints.last().copied().unwrap_or(1.0);
                for i in 1..=10 {
                    let lambda = 1.2 * last * i as f64 / 10.0;
                    let d = max_abs_diff(&path.evaluate(lambda), &brute_prox(&f, &z, lambda));
                    assert!(d <= 1e-8, "certified path is wrong by {d:e} at λ={lambda}");
                }
            }
            Err(Error::CertificationFailed(_)) => rejected += 1,
            Err(e) => panic!("unexpected error {e}"),
        }
    }
    assert!(rejected > 0, "no weighted chain split a block");
}

#[test]
fn merges_are_recorded_in_lambda_order() {
    let f = SetFunction::chain_tv(4).unwrap();
    let z = [3.0, 1.0, 0.0, -4.0];
    let path = prox_path_agglomerative(&f, &z, PathOptions::default()).unwrap();
    // Values 3 − λ, 1, 0, −4 + λ: {0} meets {1} at λ = 2, giving 2 − λ/2, and
    // the three remaining blocks meet together at λ = 4.
    assert_eq!(path.breakpoints, vec![2.0, 4.0]);
    let at: Vec<f64> = path.merges.iter().map(|m| m.lambda).collect();
    assert_eq!(at, vec![2.0, 4.0, 4.0]);
    assert_eq!(path.merges.last().unwrap().merged, 6);
    assert_eq!(path.block_count(3.0), 3);
    assert!(path
        .evaluate(100.0)
        .iter()
        .all(|v| (v - 0.0).abs() <= 1e-12));
}

fn regression_problem(seed: u64, n: usize, p: usize) -> (LeastSquares, SetFunction) {
    let mut r = rng(seed);
    let x = gaussian(&mut r, n * p, 1.0 / (n as f64).sqrt());
    let truth: Vec<f64> = (0..p).map(|i| if i < p / 2 { 1.0 } else { -1.0 }).collect();
    let noise = gaussian(&mut r, n, 0.1);
    let y: Vec<f64> = x
        .chunks_exact(p)
        .zip(&noise)
        .map(|(row, e)| row.iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>() + e)
        .collect();
    (
        LeastSquares::new(x, y, p).unwrap(),
        SetFunction::chain_tv(p).unwrap(),
    )
}

#[test]
fn fista_is_no_worse_than_ista_at_equal_iterations() {
    for seed in 0..10 {
        let (loss, f) = regression_problem(seed, 40, 20);
        let base = SolverConfig {
            max_iters: 25,
            tol: 0.0,
            ..SolverConfig::default()
        };
        let fista = proximal_gradient(&loss, &f, 0.05, &base, ProxEngine::Auto).unwrap();
        let ista = proximal_gradient(
            &loss,
            &f,
            0.05,
            &SolverConfig {
                accelerated: false,
                ..base
            },
            ProxEngine::Auto,
        )
        .unwrap();
        let slack = 1e-9 * (1.0 + ista.objective.abs());
        assert!(
            fista.objective <= ista.objective + slack,
            "seed {seed}: {} > {}",
            fista.objective,
            ista.objective
        );
        assert!(ista
            .trace
            .windows(2)
            .all(|t| t[1].objective <= t[0].objective + slack));
    }
}

#[test]
fn proximal_gradient_on_denoising_is_the_prox() {
    let mut r = rng(21);
    for _ in 0..10 {
        let p = r.random_range(2..=8);
        let f = random_function(Kind::Cut, p, &mut r);
        let z = gaussian(&mut r, p, 1.0);
        let loss = Denoise { z: z.clone() };
        let out =
            proximal_gradient(&loss, &f, 0.4, &SolverConfig::default(), ProxEngine::Auto).unwrap();
        assert!(max_abs_diff(&out.w, &brute_prox(&f, &z, 0.4)) <= 1e-8);
    }
}

#[test]
fn subgradient_best_objective_never_increases() {
    let (loss, f) = regression_problem(3, 30, 12);
    let cfg = SolverConfig {
        max_iters: 300,
        ..SolverConfig::default()
    };
    let out = subgradient_descent(&loss, &f, 0.05, &cfg).unwrap();
    assert!(out
        .trace
        .windows(2)
        .all(|t| t[1].objective <= t[0].objective));
    let direct = objective(&loss, &f, 0.05, &out.w).unwrap();
    assert!((direct - out.objective).abs() <= 1e-9 * (1.0 + direct.abs()));
    let fista =
        proximal_gradient(&loss, &f, 0.05, &SolverConfig::default(), ProxEngine::Auto).unwrap();
    assert!(fista.objective <= out.objective + 1e-9);
}

#[test]
fn solvers_reject_bad_inputs() {
    let f = SetFunction::chain_tv(3).unwrap();
    let loss = Denoise { z: vec![0.0; 4] };
    assert!(proximal_gradient(&loss, &f, 0.1, &SolverConfig::default(), ProxEngine::Auto).is_err());
    let loss = Denoise { z: vec![0.0; 3] };
    assert!(
        proximal_gradient(&loss, &f, -1.0, &SolverConfig::default(), ProxEngine::Auto).is_err()
    );
    let cfg = SolverConfig {
        max_iters: 0,
        ..SolverConfig::default()
    };
    assert!(subgradient_descent(&loss, &f, 0.1, &cfg).is_err());
}
