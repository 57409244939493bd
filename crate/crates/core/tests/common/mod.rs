//! Independent brute-force oracles and random instance generators shared by the
//! integration tests. Nothing here calls the prox, SFM or path code under test.

#![allow(dead_code)]

use levelreg::{CardinalityProfile, NoisyCutSpec, SetFunction, WeightedGraph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, p: usize, scale: f64) -> Vec<f64> {
    (0..p)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    ChainTv,
    Cut,
    Cardinality,
    NoisyCut,
    Symmetrized,
    Table,
}

impl Kind {
    pub const ALL: [Kind; 6] = [
        Kind::ChainTv,
        Kind::Cut,
        Kind::Cardinality,
        Kind::NoisyCut,
        Kind::Symmetrized,
        Kind::Table,
    ];
}

fn random_graph(rng: &mut ChaCha8Rng, p: usize) -> WeightedGraph {
    let mut edges = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            if rng.random_bool(0.4) {
                edges.push((i, j, rng.random_range(0.1..2.0)));
            }
        }
    }
    WeightedGraph::new(p, &edges).unwrap()
}

/// Concave profile on 0..=n vanishing at both ends.
fn random_profile(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut slopes: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    slopes.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mean = slopes.iter().sum::<f64>() / n.max(1) as f64;
    let mut h = vec![0.0];
    for s in slopes {
        h.push(h.last().unwrap() + s - mean);
    }
    h[n] = 0.0;
    h.iter().map(|v| v.max(0.0)).collect()
}

/// h(|A ∩ S|) for concave h vanishing at 0 and |S|; submodular and normalized.
fn subset_profile_table(rng: &mut ChaCha8Rng, p: usize, table: &mut [f64]) {
    if p < 2 {
        return;
    }
    let mut members: Vec<usize> = (0..p).collect();
    members.shuffle(rng);
    let k = rng.random_range(2..=p);
    let s: u64 = members[..k].iter().fold(0, |m, &i| m | 1 << i);
    let h = random_profile(rng, k);
    for (bits, v) in table.iter_mut().enumerate() {
        *v += h[(bits as u64 & s).count_ones() as usize];
    }
}

pub fn random_function(kind: Kind, p: usize, rng: &mut ChaCha8Rng) -> SetFunction {
    match kind {
        Kind::ChainTv => {
            let w: Vec<f64> = (0..p.saturating_sub(1))
                .map(|_| rng.random_range(0.2..2.0))
                .collect();
            SetFunction::cut(WeightedGraph::chain(&w).unwrap())
        }
        Kind::Cut => SetFunction::cut(random_graph(rng, p)),
        Kind::Cardinality => {
            SetFunction::cardinality(CardinalityProfile::new(random_profile(rng, p)).unwrap())
        }
        Kind::NoisyCut => {
            let g = random_graph(rng, p);
            SetFunction::noisy_cut(NoisyCutSpec::new(g, rng.random_range(0.2..1.5)).unwrap())
        }
        Kind::Symmetrized => {
            // G = concave of a weighted count plus a modular term.
            let a: Vec<f64> = (0..p).map(|_| rng.random_range(0.0..1.0)).collect();
            let m: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g = (0..1usize << p)
                .map(|bits| {
                    let mass: f64 = (0..p).filter(|i| bits >> i & 1 == 1).map(|i| a[i]).sum();
                    let lin: f64 = (0..p).filter(|i| bits >> i & 1 == 1).map(|i| m[i]).sum();
                    mass.sqrt() + lin
                })
                .collect();
            SetFunction::symmetrized(p, g).unwrap()
        }
        Kind::Table => {
            let g = random_graph(rng, p);
            let mut table: Vec<f64> = (0..1u64 << p)
                .map(|bits| {
                    g.edges()
                        .iter()
                        .filter(|&&(i, j, _)| (bits >> i & 1) != (bits >> j & 1))
                        .map(|&(_, _, w)| w)
                        .sum()
                })
                .collect();
            for _ in 0..2 {
                subset_profile_table(rng, p, &mut table);
            }
            SetFunction::table(p, table).unwrap()
        }
    }
}

pub fn table_of(f: &SetFunction) -> Vec<f64> {
    (0..1u64 << f.size()).map(|b| f.value_bits(b)).collect()
}

/// s(A) ≤ F(A) + tol for every A, and s(V) = F(V) within tol.
pub fn in_base(table: &[f64], s: &[f64], tol: f64) -> bool {
    let p = s.len();
    let full = (1usize << p) - 1;
    let sum = |bits: usize| {
        (0..p)
            .filter(|i| bits >> i & 1 == 1)
            .map(|i| s[i])
            .sum::<f64>()
    };
    if (sum(full) - table[full]).abs() > tol {
        return false;
    }
    (0..full).all(|bits| sum(bits) <= table[bits] + tol)
}

/// Minimum of λF(A) − z(A) over all A.
pub fn brute_sfm(table: &[f64], z: &[f64], lambda: f64) -> f64 {
    let p = z.len();
    (0..1usize << p)
        .map(|bits| {
            lambda * table[bits]
                - (0..p)
                    .filter(|i| bits >> i & 1 == 1)
                    .map(|i| z[i])
                    .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Enumerates ordered partitions (A_1, …, A_m) of {0..p-1} as bitmask sequences,
/// pruning any prefix rejected by `keep`.
fn ordered_partitions(
    full: usize,
    prefix: usize,
    stack: &mut Vec<usize>,
    keep: &mut dyn FnMut(&[usize]) -> bool,
    leaf: &mut dyn FnMut(&[usize]),
) {
    if prefix == full {
        leaf(stack);
        return;
    }
    let rest = full & !prefix;
    let mut block = rest;
    while block != 0 {
        stack.push(block);
        if keep(stack) {
            ordered_partitions(full, prefix | block, stack, keep, leaf);
        }
        stack.pop();
        block = (block - 1) & rest;
    }
}

/// Block values v_j = mean(z on A_j) − λ t_j/|A_j| with t_j the prefix increments.
fn block_values(table: &[f64], z: &[f64], lambda: f64, blocks: &[usize]) -> Vec<f64> {
    let p = z.len();
    let mut prefix = 0usize;
    blocks
        .iter()
        .map(|&b| {
            let before = table[prefix];
            prefix |= b;
            let t = table[prefix] - before;
            let n = b.count_ones() as f64;
            let zs: f64 = (0..p).filter(|i| b >> i & 1 == 1).map(|i| z[i]).sum();
            (zs - lambda * t) / n
        })
        .collect()
}

fn assemble(p: usize, blocks: &[usize], v: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; p];
    for (&b, &val) in blocks.iter().zip(v) {
        for (i, wi) in w.iter_mut().enumerate() {
            if b >> i & 1 == 1 {
                *wi = val;
            }
        }
    }
    w
}

/// Prox of λf at z by enumerating ordered partitions: keeps the one whose block
/// values strictly decrease and whose dual (z − w)/λ lies in B(F).
pub fn brute_prox(f: &SetFunction, z: &[f64], lambda: f64) -> Vec<f64> {
    let p = z.len();
    if lambda == 0.0 {
        return z.to_vec();
    }
    let table = table_of(f);
    let full = (1usize << p) - 1;
    let mut found: Option<Vec<f64>> = None;
    let mut keep = |blocks: &[usize]| {
        let v = block_values(&table, z, lambda, blocks);
        v.windows(2).all(|w| w[0] > w[1])
    };
    let mut leaf = |blocks: &[usize]| {
        if found.is_some() {
            return;
        }
        let v = block_values(&table, z, lambda, blocks);
        let w = assemble(p, blocks, &v);
        let s: Vec<f64> = z.iter().zip(&w).map(|(a, b)| (a - b) / lambda).collect();
        if in_base(&table, &s, 1e-9) {
            found = Some(w);
        }
    };
    ordered_partitions(full, 0, &mut Vec::new(), &mut keep, &mut leaf);
    found.expect("some ordered partition certifies the prox")
}

/// ½‖w − z‖² + λ_f f(w) + λ_1‖w‖₁ with f by the level-set formula.
pub fn composed_objective(table: &[f64], z: &[f64], lf: f64, l1: f64, w: &[f64]) -> f64 {
    let p = z.len();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| w[b].partial_cmp(&w[a]).unwrap());
    let mut prefix = 0usize;
    let mut fw = 0.0;
    for k in 0..p {
        prefix |= 1 << order[k];
        let next = if k + 1 < p { w[order[k + 1]] } else { continue };
        fw += table[prefix] * (w[order[k]] - next);
    }
    let quad: f64 = w.iter().zip(z).map(|(a, b)| 0.5 * (a - b).powi(2)).sum();
    quad + lf * fw + l1 * w.iter().map(|v| v.abs()).sum::<f64>()
}

/// Exact minimizer of ½‖w − z‖² + λ_f f(w) + λ_1‖w‖₁.
///
/// On the relative interior of the cone of an ordered partition with a fixed sign
/// per block, the objective is a smooth quadratic with minimizer
/// v_j = mean(z on A_j) − (λ_f t_j + λ_1 sign_j |A_j|)/|A_j| (v_j = 0 for a zero block).
/// The global minimizer is one of these stationary points, so the best feasible one wins.
pub fn brute_prox_l1(f: &SetFunction, z: &[f64], lf: f64, l1: f64) -> Vec<f64> {
    let p = z.len();
    let table = table_of(f);
    let full = (1usize << p) - 1;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut keep = |_: &[usize]| true;
    let mut leaf = |blocks: &[usize]| {
        let base = block_values(&table, z, lf, blocks);
        let m = blocks.len();
        // Blocks 0..k are positive, an optional block k is zero, the rest negative.
        for k in 0..=m {
            for zero in [false, true] {
                if zero && k == m {
                    continue;
                }
                let v: Vec<f64> = (0..m)
                    .map(|j| {
                        if j < k {
                            base[j] - l1
                        } else if zero && j == k {
                            0.0
                        } else {
                            base[j] + l1
                        }
                    })
                    .collect();
                let signs_ok = (0..m).all(|j| {
                    if j < k {
                        v[j] > 0.0
                    } else if zero && j == k {
                        true
                    } else {
                        v[j] < 0.0
                    }
                });
                if !signs_ok || !v.windows(2).all(|w| w[0] > w[1]) {
                    continue;
                }
                let w = assemble(p, blocks, &v);
                let obj = composed_objective(&table, z, lf, l1, &w);
                if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                    best = Some((obj, w));
                }
            }
        }
    };
    ordered_partitions(full, 0, &mut Vec::new(), &mut keep, &mut leaf);
    best.expect("a stationary point exists").1
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
