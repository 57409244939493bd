//! Level-set recovery for z = w* + σε: the constants of the recovery bound,
//! Monte-Carlo estimates of the recovery probability, the 2-D total variation
//! counterexample, the concentration check for cardinality functions and the
//! robust total variation experiment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, guard, Error, Result};
use crate::lattice::OrderedPartition;
use crate::prox::{prox, ProxEngine};
use crate::setfn::{Minor, NoisyCutSpec, SetFunction, SubsetMask, WeightedGraph};

/// A piecewise-constant signal: blocks (higher-valued first) with their values.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    partition: OrderedPartition,
    values: Vec<f64>,
}

impl GroundTruth {
    /// Values must strictly decrease along every relation of the partition.
    pub fn new(partition: OrderedPartition, values: Vec<f64>) -> Result<Self> {
        check_dim(partition.len(), values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("block values must be finite".into()));
        }
        for &(i, j) in partition.relations() {
            if !(values[i] > values[j]) {
                return Err(Error::InvalidArgument(format!(
                    "block {i} is above block {j} but its value {} is not larger than {}",
                    values[i], values[j]
                )));
            }
        }
        Ok(Self { partition, values })
    }

    /// Consecutive segments of a chain with the given sizes and values. Neighbouring
    /// segments are ordered by value; non-neighbours are unrelated.
    pub fn chain(sizes: &[usize], values: &[f64]) -> Result<Self> {
        check_dim(sizes.len(), values.len())?;
        if sizes.contains(&0) {
            return Err(Error::InvalidArgument("segments must be nonempty".into()));
        }
        let mut start = 0;
        let segments: Vec<Vec<usize>> = sizes
            .iter()
            .map(|&s| {
                let seg = (start..start + s).collect();
                start += s;
                seg
            })
            .collect();
        let mut order: Vec<usize> = (0..sizes.len()).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        let mut index = vec![0; sizes.len()];
        for (k, &seg) in order.iter().enumerate() {
            index[seg] = k;
        }
        let mut relations = Vec::new();
        for s in 0..sizes.len().saturating_sub(1) {
            let (a, b) = (index[s], index[s + 1]);
            if values[s] == values[s + 1] {
                return Err(Error::InvalidArgument(format!(
                    "neighbouring segments {s} and {} share the value {}",
                    s + 1,
                    values[s]
                )));
            }
            relations.push((a.min(b), a.max(b)));
        }
        let blocks = order.iter().map(|&s| segments[s].clone()).collect();
        let vals = order.iter().map(|&s| values[s]).collect();
        Self::new(OrderedPartition::new(start, blocks, relations)?, vals)
    }

    /// Constant sets of `w` in decreasing value order, totally ordered.
    pub fn from_signal(w: &[f64]) -> Result<Self> {
        let part = crate::prox::extract_lattice(w, 0.0);
        let values = part.blocks().iter().map(|b| w[b[0]]).collect();
        Self::new(part, values)
    }

    pub fn partition(&self) -> &OrderedPartition {
        &self.partition
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn size(&self) -> usize {
        self.partition.ground_size()
    }

    pub fn w_star(&self) -> Vec<f64> {
        self.partition.assemble(&self.values)
    }

    /// B_j = A_0 ∪ … ∪ A_{j−1}.
    pub fn prefix(&self, j: usize) -> Vec<bool> {
        self.partition.prefix_mask(j)
    }

    /// Whether every truth block lies inside one constant set of `lattice` and
    /// related blocks sit in different constant sets with strictly ordered values.
    /// Unrelated blocks may share a value: their union is separable, so the tie
    /// does not change the allowed level sets.
    pub fn is_recovered_by(&self, lattice: &OrderedPartition, w: &[f64]) -> bool {
        if lattice.ground_size() != self.size() || w.len() != self.size() {
            return false;
        }
        let owner = lattice.block_of();
        let blocks = self.partition.blocks();
        let mut label = Vec::with_capacity(blocks.len());
        for block in blocks {
            let b = owner[block[0]];
            if block.iter().any(|&e| owner[e] != b) {
                return false;
            }
            label.push(b);
        }
        self.partition
            .relations()
            .iter()
            .all(|&(i, j)| label[i] != label[j] && w[blocks[i][0]] > w[blocks[j][0]])
    }
}

pub const MAX_ETA_BLOCK: usize = 20;

/// η_j = min over nonempty C ⊊ A_j of
/// [G(C) − (|C|/|A_j|)·G(A_j)] / min{|C|/|A_j|, 1 − |C|/|A_j|}, with G(C) = F(B_{j−1} ∪ C) − F(B_{j−1}).
/// Singleton blocks get +∞.
pub fn compute_eta(f: &SetFunction, truth: &GroundTruth) -> Result<Vec<f64>> {
    check_dim(f.size(), truth.size())?;
    let part = truth.partition();
    let mut out = Vec::with_capacity(part.len());
    for j in 0..part.len() {
        let block = part.block(j);
        let a = block.len();
        guard("compute_eta block size", MAX_ETA_BLOCK, a)?;
        if a == 1 {
            out.push(f64::INFINITY);
            continue;
        }
        let minor = Minor::new(f, truth.prefix(j), block.to_vec());
        let full = (1u64 << a) - 1;
        let ga = minor.value_bits(full);
        let mut eta = f64::INFINITY;
        for c in 1..full {
            let frac = c.count_ones() as f64 / a as f64;
            let ratio = (minor.value_bits(c) - frac * ga) / frac.min(1.0 - frac);
            eta = eta.min(ratio);
        }
        out.push(eta);
    }
    Ok(out)
}

/// ν = min over related blocks A_i ≻ A_j of v_i − v_j; +∞ without relations.
pub fn compute_nu(truth: &GroundTruth) -> f64 {
    let c = truth.partition().closure();
    let v = truth.values();
    let mut nu = f64::INFINITY;
    for (i, row) in c.iter().enumerate() {
        for (j, &rel) in row.iter().enumerate() {
            if rel {
                nu = nu.min(v[i] - v[j]);
            }
        }
    }
    nu
}

/// Largest λ with λ·|F(B_j) − F(B_{j−1})|/|A_j| ≤ ν/4 for every block.
pub fn lambda_bound(f: &SetFunction, truth: &GroundTruth, nu: f64) -> Result<f64> {
    check_dim(f.size(), truth.size())?;
    let part = truth.partition();
    let mut bound = f64::INFINITY;
    let mut prev = 0.0;
    for j in 0..part.len() {
        let cur = f.value(&truth.prefix(j + 1));
        let slope = (cur - prev).abs() / part.block(j).len() as f64;
        prev = cur;
        if slope > 0.0 {
            bound = bound.min(nu / (4.0 * slope));
        }
    }
    Ok(bound)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbabilityBound {
    /// The bound clamped to [0, 1].
    pub value: f64,
    /// 1 − Σ exp(−ν²|A_j|/32σ²) − 2Σ |A_j| exp(−λ²η_j²/2σ²|A_j|²).
    pub raw: f64,
    pub clamped: bool,
}

/// Lower bound on the probability of recovering the truth's lattice.
/// Blocks with η_j = +∞ contribute no splitting term; η_j ≤ 0 gives the
/// vacuous term 2|A_j|. σ = 0 is evaluated as the limit σ → 0.
pub fn recovery_probability_bound(
    truth: &GroundTruth,
    eta: &[f64],
    nu: f64,
    lambda: f64,
    sigma: f64,
) -> Result<ProbabilityBound> {
    check_dim(truth.partition().len(), eta.len())?;
    if !(sigma >= 0.0) || !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(
            "sigma and lambda must be non-negative".into(),
        ));
    }
    let s2 = sigma * sigma;
    let mut raw = 1.0;
    for (block, &e) in truth.partition().blocks().iter().zip(eta) {
        let a = block.len() as f64;
        raw -= decay(nu * nu * a / 32.0, s2);
        if e.is_finite() {
            let rate = if e > 0.0 {
                lambda * lambda * e * e / (2.0 * a * a)
            } else {
                0.0
            };
            raw -= 2.0 * a * decay(rate, s2);
        }
    }
    let value = raw.clamp(0.0, 1.0);
    Ok(ProbabilityBound {
        value,
        raw,
        clamped: value != raw,
    })
}

/// exp(−num/s2), with the σ → 0 limit.
fn decay(num: f64, s2: f64) -> f64 {
    if s2 > 0.0 {
        (-num / s2).exp()
    } else if num > 0.0 {
        0.0
    } else {
        1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryReport {
    pub eta: Vec<f64>,
    pub nu: f64,
    pub lambda_max: f64,
    pub bound: ProbabilityBound,
    /// Fraction of trials whose prox lattice matched the truth.
    pub empirical: f64,
    pub successes: usize,
    pub trials: usize,
}

impl RecoveryReport {
    /// Binomial standard error of the empirical rate.
    pub fn std_error(&self) -> f64 {
        (self.empirical * (1.0 - self.empirical) / self.trials as f64).sqrt()
    }
}

/// Per-trial generator: stream `trial` of the ChaCha8 generator seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Draws z = w* + σε for `trials` independent trials, solves the prox at λ and
/// counts exact lattice recoveries. Trials run in parallel; results do not depend
/// on the thread count.
pub fn monte_carlo_recovery(
    f: &SetFunction,
    truth: &GroundTruth,
    sigma: f64,
    lambda: f64,
    trials: usize,
    engine: ProxEngine,
    seed: u64,
) -> Result<RecoveryReport> {
    check_dim(f.size(), truth.size())?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "sigma must be non-negative, got {sigma}"
        )));
    }
    let eta = compute_eta(f, truth)?;
    let nu = compute_nu(truth);
    let lambda_max = lambda_bound(f, truth, nu)?;
    let bound = recovery_probability_bound(truth, &eta, nu, lambda, sigma)?;
    let w_star = truth.w_star();
    let hits = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<bool> {
            let mut rng = trial_rng(seed, t as u64);
            let z: Vec<f64> = w_star
                .iter()
                .map(|w| w + sigma * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let sol = prox(f, &z, lambda, engine)?;
            Ok(truth.is_recovered_by(&sol.lattice, &sol.w))
        })
        .collect::<Result<Vec<bool>>>()?;
    let successes = hits.iter().filter(|&&h| h).count();
    Ok(RecoveryReport {
        eta,
        nu,
        lambda_max,
        bound,
        empirical: successes as f64 / trials as f64,
        successes,
        trials,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tv2dInstance {
    pub width: usize,
    pub height: usize,
    pub a: SubsetMask,
    pub b: SubsetMask,
    pub c: SubsetMask,
    pub f_b: f64,
    pub f_bc: f64,
    pub f_ba: f64,
    /// F(B ∪ C) − F(B) − (|C|/|A|)(F(B ∪ A) − F(B)).
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tv2dReport {
    /// Most negative margin found.
    pub best: Option<Tv2dInstance>,
    /// First instance with |A| = 13, |C| = 2, F(B) = 5 and F(B ∪ C) = 4.
    pub reference: Option<Tv2dInstance>,
    /// Whether every B was enumerated (otherwise |B| ≤ 3 and |C| ≤ 2).
    pub exhaustive: bool,
    pub triples: u64,
}

impl Tv2dReport {
    pub fn found_negative(&self) -> bool {
        self.best.as_ref().is_some_and(|b| b.margin < -1e-12)
    }
}

pub const MAX_TV2D_SIDE: usize = 6;
pub const MAX_TV2D_EXHAUSTIVE: usize = 16;

/// Searches a width × height unit grid for B and C ⊆ A = V∖B with A connected and a
/// negative agglomerativity margin. Grids with at most 16 nodes are searched over
/// all B and all C with |C| ≤ 3.
pub fn tv2d_counterexample(width: usize, height: usize) -> Result<Tv2dReport> {
    guard("tv2d_counterexample width", MAX_TV2D_SIDE, width)?;
    guard("tv2d_counterexample height", MAX_TV2D_SIDE, height)?;
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument("grid must be nonempty".into()));
    }
    let g = WeightedGraph::grid(width, height)?;
    let p = width * height;
    let nbr: Vec<u64> = (0..p)
        .map(|i| g.neighbors(i).iter().fold(0u64, |m, &(j, _)| m | 1 << j))
        .collect();
    let cut = |m: u64| -> u32 {
        let mut total = 0;
        let mut rest = m;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            total += (nbr[i] & !m).count_ones();
        }
        total
    };
    let connected = |m: u64| -> bool {
        if m == 0 {
            return false;
        }
        let mut seen = m & m.wrapping_neg();
        loop {
            let mut grow = seen;
            let mut rest = seen;
            while rest != 0 {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                grow |= nbr[i] & m;
            }
            if grow == seen {
                return seen == m;
            }
            seen = grow;
        }
    };
    let full = if p == 64 { u64::MAX } else { (1u64 << p) - 1 };
    let exhaustive = p <= MAX_TV2D_EXHAUSTIVE;
    let (max_b, max_c) = if exhaustive { (p, 3) } else { (3, 2) };
    let bs: Vec<u64> = if exhaustive {
        (1..full).collect()
    } else {
        subsets_up_to(p, max_b)
    };
    let mut best: Option<(f64, u64, u64)> = None;
    let mut reference: Option<(u64, u64)> = None;
    let mut triples = 0u64;
    for b in bs {
        if b == 0 {
            continue;
        }
        let a = full & !b;
        let na = a.count_ones() as usize;
        if na < 2 || !connected(a) {
            continue;
        }
        let fb = cut(b) as f64;
        let members: Vec<usize> = (0..p).filter(|&i| a >> i & 1 == 1).collect();
        for c_local in subsets_up_to(na, max_c.min(na - 1)) {
            let mut c = 0u64;
            let mut rest = c_local;
            while rest != 0 {
                c |= 1 << members[rest.trailing_zeros() as usize];
                rest &= rest - 1;
            }
            triples += 1;
            let nc = c.count_ones() as f64;
            let fbc = cut(b | c) as f64;
            let margin = fbc - fb - nc / na as f64 * (0.0 - fb);
            if best.is_none_or(|(m, _, _)| margin < m - 1e-12) {
                best = Some((margin, b, c));
            }
            if reference.is_none() && na == 13 && nc == 2.0 && fb == 5.0 && fbc == 4.0 {
                reference = Some((b, c));
            }
        }
    }
    let build = |b: u64, c: u64| {
        let a = full & !b;
        let (fb, fbc) = (cut(b) as f64, cut(b | c) as f64);
        let margin = fbc - fb + c.count_ones() as f64 / a.count_ones() as f64 * fb;
        Tv2dInstance {
            width,
            height,
            a: SubsetMask::from_bits(p, a),
            b: SubsetMask::from_bits(p, b),
            c: SubsetMask::from_bits(p, c),
            f_b: fb,
            f_bc: fbc,
            f_ba: 0.0,
            margin,
        }
    };
    Ok(Tv2dReport {
        best: best.map(|(_, b, c)| build(b, c)),
        reference: reference.map(|(b, c)| build(b, c)),
        exhaustive,
        triples,
    })
}

/// Nonempty subsets of {0, …, n−1} with at most k elements, as bitmasks.
fn subsets_up_to(n: usize, k: usize) -> Vec<u64> {
    let mut out = Vec::new();
    fn rec(start: usize, n: usize, left: usize, cur: u64, out: &mut Vec<u64>) {
        for i in start..n {
            let next = cur | 1 << i;
            out.push(next);
            if left > 1 {
                rec(i + 1, n, left - 1, next, out);
            }
        }
    }
    if k > 0 {
        rec(0, n, k, 0, &mut out);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub p: usize,
    pub t: f64,
    pub samples: usize,
    pub exceed: usize,
    pub empirical_tail: f64,
    /// 2p·exp(−t²/2p²).
    pub bound: f64,
    /// Empirical tail ≤ bound + 3 standard errors.
    pub holds: bool,
}

pub const MAX_CONCENTRATION_P: usize = 12;

/// Estimates P(max_A s(A)/F(A) ≥ t) for s ~ N(0, I − 11ᵀ/p) and
/// F(A) = min{|A|/p, 1 − |A|/p}, the maximum running over nonempty proper A.
pub fn concentration_tail_check(
    p: usize,
    t: f64,
    samples: usize,
    seed: u64,
) -> Result<ConcentrationReport> {
    guard("concentration_tail_check", MAX_CONCENTRATION_P, p)?;
    if p < 2 || samples == 0 {
        return Err(Error::InvalidArgument(
            "need p ≥ 2 and at least one sample".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pf = p as f64;
    let mut exceed = 0;
    let mut s = vec![0.0; p];
    for _ in 0..samples {
        for x in s.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        let mean = s.iter().sum::<f64>() / pf;
        for x in s.iter_mut() {
            *x -= mean;
        }
        s.sort_by(|a, b| b.total_cmp(a));
        // For |A| = k the largest s(A) is the sum of the k largest entries.
        let mut top = 0.0;
        let mut best = f64::NEG_INFINITY;
        for (k, x) in s.iter().take(p - 1).enumerate() {
            top += x;
            let kf = (k + 1) as f64;
            best = best.max(top / (kf / pf).min(1.0 - kf / pf));
        }
        if best >= t {
            exceed += 1;
        }
    }
    let tail = exceed as f64 / samples as f64;
    let bound = 2.0 * pf * (-t * t / (2.0 * pf * pf)).exp();
    let se = (tail * (1.0 - tail) / samples as f64).sqrt();
    Ok(ConcentrationReport {
        p,
        t,
        samples,
        exceed,
        empirical_tail: tail,
        bound,
        holds: tail <= bound + 3.0 * se,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobustTvConfig {
    pub chain_length: usize,
    /// Elements before this index are high (value 1), the rest low (value 0).
    pub jump_position: usize,
    pub outlier_fraction: f64,
    /// Spikes of ± this size are added at outlier positions.
    pub outlier_magnitude: f64,
    pub sigma_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    /// Mismatch penalty of the robust cut.
    pub penalty: f64,
    pub replications: usize,
    pub seed: u64,
}

impl Default for RobustTvConfig {
    fn default() -> Self {
        Self {
            chain_length: 100,
            jump_position: 50,
            outlier_fraction: 0.05,
            outlier_magnitude: 5.0,
            sigma_grid: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
            lambda_grid: (0..12).map(|k| 0.1 * 1.5f64.powi(k)).collect(),
            penalty: 1.0,
            replications: 20,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TvMethod {
    Tv,
    RobustTv,
}

impl TvMethod {
    pub fn name(self) -> &'static str {
        match self {
            TvMethod::Tv => "tv",
            TvMethod::RobustTv => "robust-tv",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobustTvRow {
    pub sigma: f64,
    /// λ on the grid with the smallest mean error.
    pub lambda: f64,
    pub method: TvMethod,
    pub error_mean: f64,
    pub error_std: f64,
    /// Fraction of replications with zero error.
    pub recovery_rate: f64,
}

/// Fraction of misassigned indices between `estimate` and `truth`, matching
/// either the set or its complement.
pub fn set_error(estimate: &[bool], truth: &[bool]) -> f64 {
    let p = truth.len();
    let diff = estimate.iter().zip(truth).filter(|(a, b)| a != b).count();
    diff.min(p - diff) as f64 / p as f64
}

/// Best error over the level sets {w ≥ α}, or over their hidden robust-cut
/// witnesses when `spec` is given.
pub fn level_set_error(w: &[f64], truth: &[bool], spec: Option<&NoisyCutSpec>) -> Result<f64> {
    check_dim(truth.len(), w.len())?;
    let mut levels: Vec<f64> = w.to_vec();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();
    let mut best = set_error(&vec![false; w.len()], truth);
    for alpha in levels {
        let set: Vec<bool> = w.iter().map(|&x| x >= alpha).collect();
        let estimate = match spec {
            Some(s) => s.eval_with_witness(&set)?.1.into_inner(),
            None => set,
        };
        best = best.min(set_error(&estimate, truth));
    }
    Ok(best)
}

/// One noisy signal: the step plus outliers plus Gaussian noise.
pub fn robust_tv_signal(cfg: &RobustTvConfig, sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let p = cfg.chain_length;
    let mut z: Vec<f64> = (0..p)
        .map(|i| if i < cfg.jump_position { 1.0 } else { 0.0 })
        .collect();
    let count = (cfg.outlier_fraction * p as f64).round() as usize;
    let picks = rand::seq::index::sample(rng, p, count.min(p));
    for i in picks.iter() {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        z[i] += sign * cfg.outlier_magnitude;
    }
    for x in z.iter_mut() {
        *x += sigma * rng.sample::<f64, _>(StandardNormal);
    }
    z
}

/// Plain and robust total variation on a chain with one jump and outliers. For
/// each σ and method, reports the λ with the smallest mean level-set error.
pub fn robust_tv_experiment(cfg: &RobustTvConfig) -> Result<Vec<RobustTvRow>> {
    let p = cfg.chain_length;
    if p < 2 || cfg.jump_position == 0 || cfg.jump_position >= p {
        return Err(Error::InvalidArgument(
            "need a chain of length ≥ 2 with the jump strictly inside".into(),
        ));
    }
    if !(0.0..=1.0).contains(&cfg.outlier_fraction) || cfg.replications == 0 {
        return Err(Error::InvalidArgument(
            "outlier fraction must lie in [0, 1] and replications be positive".into(),
        ));
    }
    if cfg.lambda_grid.is_empty() || cfg.lambda_grid.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::InvalidArgument(
            "lambda grid must be nonempty and positive".into(),
        ));
    }
    let truth: Vec<bool> = (0..p).map(|i| i < cfg.jump_position).collect();
    let tv = SetFunction::chain_tv(p)?;
    let spec = NoisyCutSpec::new(WeightedGraph::unit_chain(p)?, cfg.penalty)?;
    let robust = SetFunction::noisy_cut(spec.clone());
    let mut rows = Vec::new();
    for (si, &sigma) in cfg.sigma_grid.iter().enumerate() {
        // errors[rep][method][lambda]
        let errors = (0..cfg.replications)
            .into_par_iter()
            .map(|rep| -> Result<[Vec<f64>; 2]> {
                let stream = (si * cfg.replications + rep) as u64;
                let z = robust_tv_signal(cfg, sigma, &mut trial_rng(cfg.seed, stream));
                let mut plain = Vec::with_capacity(cfg.lambda_grid.len());
                let mut rob = Vec::with_capacity(cfg.lambda_grid.len());
                for &lambda in &cfg.lambda_grid {
                    let w = prox(&tv, &z, lambda, ProxEngine::Auto)?.w;
                    plain.push(level_set_error(&w, &truth, None)?);
                    let w = prox(&robust, &z, lambda, ProxEngine::Auto)?.w;
                    rob.push(level_set_error(&w, &truth, Some(&spec))?);
                }
                Ok([plain, rob])
            })
            .collect::<Result<Vec<_>>>()?;
        for (m, method) in [TvMethod::Tv, TvMethod::RobustTv].into_iter().enumerate() {
            let stats: Vec<(f64, f64, f64)> = (0..cfg.lambda_grid.len())
                .map(|l| {
                    let e: Vec<f64> = errors.iter().map(|r| r[m][l]).collect();
                    mean_std_zero(&e)
                })
                .collect();
            let (l, &(mean, std, zero)) = stats
                .iter()
                .enumerate()
                .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
                .expect("lambda grid is nonempty");
            rows.push(RobustTvRow {
                sigma,
                lambda: cfg.lambda_grid[l],
                method,
                error_mean: mean,
                error_std: std,
                recovery_rate: zero,
            });
        }
    }
    Ok(rows)
}

fn mean_std_zero(e: &[f64]) -> (f64, f64, f64) {
    let n = e.len() as f64;
    let mean = e.iter().sum::<f64>() / n;
    let var = e.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let zero = e.iter().filter(|&&x| x == 0.0).count() as f64 / n;
    (mean, var.sqrt(), zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setfn::CardinalityProfile;

    #[test]
    fn chain_truth_orders_blocks_by_value() {
        let t = GroundTruth::chain(&[2, 2, 2, 2], &[1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(t.partition().blocks()[0], vec![0, 1]);
        assert_eq!(t.partition().blocks()[1], vec![4, 5]);
        assert_eq!(t.partition().relations(), &[(0, 2), (1, 2), (1, 3)]);
        assert!(GroundTruth::chain(&[1, 1], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn nu_examples() {
        let t = GroundTruth::chain(&[1, 1, 1], &[2.0, 1.0, 0.0]).unwrap();
        assert_eq!(compute_nu(&t), 1.0);
        let t = GroundTruth::chain(&[1, 1, 1], &[3.0, 1.0, 0.5]).unwrap();
        assert_eq!(compute_nu(&t), 0.5);
        let t = GroundTruth::chain(&[3], &[1.0]).unwrap();
        assert_eq!(compute_nu(&t), f64::INFINITY);
    }

    #[test]
    fn eta_on_chains() {
        let f = SetFunction::chain_tv(12).unwrap();
        let t = GroundTruth::chain(&[4, 4, 4], &[1.0, 0.0, 1.0]).unwrap();
        let eta = compute_eta(&f, &t).unwrap();
        assert!(eta.iter().all(|&e| e >= 1.0));
        let stair = GroundTruth::chain(&[4, 4, 4], &[2.0, 1.0, 0.0]).unwrap();
        let eta = compute_eta(&f, &stair).unwrap();
        assert_eq!(eta[1], 0.0);
        let single = GroundTruth::chain(&[1, 11], &[1.0, 0.0]).unwrap();
        assert_eq!(compute_eta(&f, &single).unwrap()[0], f64::INFINITY);
    }

    #[test]
    fn lambda_bound_examples() {
        let f = SetFunction::chain_tv(40).unwrap();
        let t = GroundTruth::chain(&[10; 4], &[1.0, 0.0, 1.0, 0.0]).unwrap();
        let nu = compute_nu(&t);
        let lb = lambda_bound(&f, &t, nu).unwrap();
        assert!((lb - 1.25).abs() < 1e-12);
        assert!(lb >= nu / 8.0 * 10.0);
        let card = SetFunction::cardinality(CardinalityProfile::clustering(6).unwrap());
        let t = GroundTruth::from_signal(&[2.0, 2.0, 1.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(lambda_bound(&card, &t, compute_nu(&t)).unwrap() >= 1.0 / 24.0);
        let flat = GroundTruth::from_signal(&[1.0; 6]).unwrap();
        assert_eq!(lambda_bound(&card, &flat, 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn bound_limits_and_clamping() {
        let t = GroundTruth::chain(&[5, 5], &[1.0, 0.0]).unwrap();
        let b = recovery_probability_bound(&t, &[1.0, 1.0], 1.0, 0.5, 1e-4).unwrap();
        assert!((b.value - 1.0).abs() < 1e-12);
        let b = recovery_probability_bound(&t, &[0.0, 1.0], 1.0, 0.5, 1e-4).unwrap();
        assert!(b.raw <= 1.0 - 10.0 + 1e-12 && b.value == 0.0 && b.clamped);
    }

    #[test]
    fn noiseless_recovery_is_exact() {
        let f = SetFunction::chain_tv(12).unwrap();
        let t = GroundTruth::chain(&[4, 4, 4], &[1.0, 0.0, 1.0]).unwrap();
        let nu = compute_nu(&t);
        let lb = lambda_bound(&f, &t, nu).unwrap();
        let r = monte_carlo_recovery(&f, &t, 0.0, lb, 4, ProxEngine::Auto, 1).unwrap();
        assert_eq!(r.successes, 4);
    }

    #[test]
    fn staircase_fails_with_small_noise() {
        let f = SetFunction::chain_tv(30).unwrap();
        let t = GroundTruth::chain(&[10; 3], &[2.0, 1.0, 0.0]).unwrap();
        let r = monte_carlo_recovery(&f, &t, 0.01, 1.0, 200, ProxEngine::Auto, 3).unwrap();
        assert!(r.empirical < 1.0);
    }

    #[test]
    fn chains_have_no_negative_margin() {
        for len in 2..=6 {
            let r = tv2d_counterexample(len, 1).unwrap();
            assert!(!r.found_negative(), "chain of {len}");
        }
        let r = tv2d_counterexample(2, 2).unwrap();
        assert!(r.exhaustive && r.best.is_some());
    }

    #[test]
    fn grid_counterexample_matches_reference_values() {
        let r = tv2d_counterexample(3, 5).unwrap();
        let inst = r.reference.clone().expect("reference configuration");
        assert!((inst.margin + 3.0 / 13.0).abs() < 1e-12);
        assert!(r.found_negative());
    }

    #[test]
    fn concentration_tails() {
        let r = concentration_tail_check(4, 1e6, 1000, 0).unwrap();
        assert_eq!(r.empirical_tail, 0.0);
        let r = concentration_tail_check(4, 4.0, 2000, 0).unwrap();
        assert!((r.bound - 8.0 * (-0.5f64).exp()).abs() < 1e-12 && r.holds);
    }

    #[test]
    fn set_error_matches_complements() {
        let truth = [true, true, false, false];
        assert_eq!(set_error(&[false, false, true, true], &truth), 0.0);
        assert_eq!(set_error(&[true, false, false, false], &truth), 0.25);
    }

    #[test]
    fn outlier_free_step_is_recovered() {
        let cfg = RobustTvConfig {
            chain_length: 30,
            jump_position: 15,
            outlier_fraction: 0.0,
            sigma_grid: vec![0.05],
            replications: 3,
            ..RobustTvConfig::default()
        };
        let rows = robust_tv_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.error_mean == 0.0));
    }
}
