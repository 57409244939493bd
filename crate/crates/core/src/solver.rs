//! First-order solvers for min_w L(w) + λf(w): proximal gradient (ISTA and
//! FISTA with backtracking) and subgradient descent with decaying steps. The
//! agglomerative path tracker lives in [`crate::path`] and is re-exported here.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::lovasz::{greedy, lovasz_extension};
use crate::prox::{prox, MnpProx, ProxEngine, MNP_PROX_TOL};
use crate::setfn::SetFunction;

pub use crate::path::{
    agglo_margin, check_agglo_condition, prox_path_agglomerative, AggloReport, MergeEvent,
    PathOptions, PathResult, PathSegment,
};

/// A differentiable loss with Lipschitz gradient.
pub trait SmoothLoss: Sync {
    fn dim(&self) -> usize;

    /// Returns L(w) and writes ∇L(w) into `grad`.
    fn value_grad(&self, w: &[f64], grad: &mut [f64]) -> f64;

    fn value(&self, w: &[f64]) -> f64 {
        let mut g = vec![0.0; self.dim()];
        self.value_grad(w, &mut g)
    }

    /// An estimate of the gradient's Lipschitz constant, if cheaply available.
    fn lipschitz_estimate(&self) -> Option<f64> {
        None
    }
}

/// ½‖w − z‖².
#[derive(Clone, Debug)]
pub struct Denoise {
    pub z: Vec<f64>,
}

impl SmoothLoss for Denoise {
    fn dim(&self) -> usize {
        self.z.len()
    }

    fn value_grad(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        let mut v = 0.0;
        for ((g, wi), zi) in grad.iter_mut().zip(w).zip(&self.z) {
            *g = wi - zi;
            v += 0.5 * *g * *g;
        }
        v
    }

    fn lipschitz_estimate(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// ½‖y − Xw‖² with X stored row-major (n × p).
#[derive(Clone, Debug)]
pub struct LeastSquares {
    x: Vec<f64>,
    y: Vec<f64>,
    n: usize,
    p: usize,
}

impl LeastSquares {
    pub fn new(x: Vec<f64>, y: Vec<f64>, p: usize) -> Result<Self> {
        let n = y.len();
        check_dim(n * p, x.len())?;
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "design or response is not finite".into(),
            ));
        }
        Ok(Self { x, y, n, p })
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    fn residual(&self, w: &[f64]) -> Vec<f64> {
        self.x
            .chunks_exact(self.p)
            .zip(&self.y)
            .map(|(row, yi)| row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() - yi)
            .collect()
    }

    fn xt_times(&self, r: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (row, ri) in self.x.chunks_exact(self.p).zip(r) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * ri;
            }
        }
    }

    /// ‖X‖₂² from 20 power iterations on XᵀX.
    pub fn spectral_estimate(&self) -> f64 {
        let mut v = vec![1.0 / (self.p as f64).sqrt(); self.p];
        let mut xtxv = vec![0.0; self.p];
        let mut est = 0.0;
        for _ in 0..20 {
            let xv: Vec<f64> = self
                .x
                .chunks_exact(self.p)
                .map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum())
                .collect();
            self.xt_times(&xv, &mut xtxv);
            let norm = xtxv.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            est = norm;
            for (vi, a) in v.iter_mut().zip(&xtxv) {
                *vi = a / norm;
            }
        }
        est
    }
}

impl SmoothLoss for LeastSquares {
    fn dim(&self) -> usize {
        self.p
    }

    fn value_grad(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        let r = self.residual(w);
        self.xt_times(&r, grad);
        0.5 * r.iter().map(|a| a * a).sum::<f64>()
    }

    fn value(&self, w: &[f64]) -> f64 {
        0.5 * self.residual(w).iter().map(|a| a * a).sum::<f64>()
    }

    fn lipschitz_estimate(&self) -> Option<f64> {
        Some(self.spectral_estimate())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    /// Step 1/L with the given L.
    Fixed(f64),
    /// Start from an estimate of L and double it until the quadratic upper bound holds.
    #[default]
    Backtracking,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    /// γ_t = c/t.
    Harmonic,
    /// γ_t = c/√t.
    #[default]
    InverseSqrt,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub step: StepRule,
    /// Stop when |objective change| ≤ tol·(1 + |objective|).
    pub tol: f64,
    /// FISTA momentum.
    pub accelerated: bool,
    pub schedule: Schedule,
    /// Subgradient step constant; defaults to ‖∇L(0)‖∞/(L·‖g₀‖∞).
    pub step_constant: Option<f64>,
    /// Wall-clock budget in milliseconds.
    pub time_budget_ms: Option<f64>,
    /// Tolerance for the minimum-norm-point prox.
    pub prox_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            step: StepRule::Backtracking,
            tol: 1e-12,
            accelerated: true,
            schedule: Schedule::InverseSqrt,
            step_constant: None,
            time_budget_ms: None,
            prox_tol: MNP_PROX_TOL,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("{what} must be positive")));
        if self.max_iters == 0 {
            return bad("max_iters");
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidArgument("tol must be non-negative".into()));
        }
        if let StepRule::Fixed(l) = self.step {
            if !(l > 0.0 && l.is_finite()) {
                return bad("the fixed Lipschitz constant");
            }
        }
        if matches!(self.step_constant, Some(c) if !(c > 0.0 && c.is_finite())) {
            return bad("step_constant");
        }
        if matches!(self.time_budget_ms, Some(t) if !(t > 0.0)) {
            return bad("time_budget_ms");
        }
        if !(self.prox_tol > 0.0) {
            return bad("prox_tol");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    /// |objective change| for proximal gradient; best-so-far improvement for subgradient.
    pub gap: f64,
    pub wall_time_ms: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOutput {
    pub w: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
    /// Final Lipschitz estimate (proximal gradient).
    pub lipschitz: Option<f64>,
    /// Step constant c used (subgradient).
    pub step_constant: Option<f64>,
}

/// L(w) + λf(w).
pub fn objective<L: SmoothLoss + ?Sized>(
    loss: &L,
    f: &SetFunction,
    lambda: f64,
    w: &[f64],
) -> Result<f64> {
    Ok(loss.value(w) + lambda * lovasz_extension(f, w)?)
}

fn check_problem<L: SmoothLoss + ?Sized>(loss: &L, f: &SetFunction, lambda: f64) -> Result<()> {
    check_dim(f.size(), loss.dim())?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be finite and non-negative, got {lambda}"
        )));
    }
    Ok(())
}

enum ProxRoute {
    Stateless(ProxEngine),
    Warm(MnpProx),
}

impl ProxRoute {
    fn apply(&mut self, f: &SetFunction, u: &[f64], t: f64) -> Result<Vec<f64>> {
        if t == 0.0 {
            return Ok(u.to_vec());
        }
        Ok(match self {
            ProxRoute::Stateless(e) => prox(f, u, t, *e)?.w,
            ProxRoute::Warm(m) => m.prox(f, u, t)?.w,
        })
    }
}

const MAX_DOUBLINGS: usize = 60;

/// ISTA (`accelerated = false`) or FISTA from w = 0.
///
/// With [`ProxEngine::MinNorm`] the projection is warm-started from the
/// previous iteration's corral.
pub fn proximal_gradient<L: SmoothLoss + ?Sized>(
    loss: &L,
    f: &SetFunction,
    lambda: f64,
    config: &SolverConfig,
    engine: ProxEngine,
) -> Result<SolverOutput> {
    check_problem(loss, f, lambda)?;
    config.validate()?;
    let start = Instant::now();
    let p = loss.dim();
    let mut route = match engine {
        ProxEngine::MinNorm => ProxRoute::Warm(MnpProx::new(config.prox_tol)),
        e => ProxRoute::Stateless(e),
    };
    let mut lip = match config.step {
        StepRule::Fixed(l) => l,
        StepRule::Backtracking => loss
            .lipschitz_estimate()
            .filter(|l| *l > 0.0 && l.is_finite())
            .unwrap_or(1.0),
    };
    let mut w = vec![0.0; p];
    let mut y = w.clone();
    let mut momentum = 1.0f64;
    let mut grad = vec![0.0; p];
    let mut obj = objective(loss, f, lambda, &w)?;
    let mut trace = vec![TraceRow {
        iter: 0,
        objective: obj,
        gap: f64::NAN,
        wall_time_ms: 0.0,
    }];
    let mut converged = false;
    let mut iterations = 0;
    for k in 1..=config.max_iters {
        let ly = loss.value_grad(&y, &mut grad);
        let mut doublings = 0;
        let next = loop {
            let u: Vec<f64> = y.iter().zip(&grad).map(|(a, g)| a - g / lip).collect();
            let cand = route.apply(f, &u, lambda / lip)?;
            if matches!(config.step, StepRule::Fixed(_)) {
                break cand;
            }
            let mut lin = 0.0;
            let mut sq = 0.0;
            for ((c, yi), g) in cand.iter().zip(&y).zip(&grad) {
                let d = c - yi;
                lin += g * d;
                sq += d * d;
            }
            let upper = ly + lin + 0.5 * lip * sq;
            let lc = loss.value(&cand);
            if lc <= upper + 1e-12 * (1.0 + ly.abs()) {
                break cand;
            }
            doublings += 1;
            if doublings > MAX_DOUBLINGS {
                return Err(Error::Numerical(format!(
                    "proximal gradient diverged: no step satisfied the quadratic bound \
                     after {MAX_DOUBLINGS} doublings (L = {lip:e})"
                )));
            }
            lip *= 2.0;
        };
        let new_obj = objective(loss, f, lambda, &next)?;
        if !new_obj.is_finite() {
            return Err(Error::Numerical(format!(
                "objective became non-finite at iteration {k}"
            )));
        }
        if config.accelerated {
            let m_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let beta = (momentum - 1.0) / m_next;
            y = next
                .iter()
                .zip(&w)
                .map(|(a, b)| a + beta * (a - b))
                .collect();
            momentum = m_next;
        } else {
            y.clone_from(&next);
        }
        w = next;
        let change = (new_obj - obj).abs();
        obj = new_obj;
        iterations = k;
        trace.push(TraceRow {
            iter: k,
            objective: obj,
            gap: change,
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        if change <= config.tol * (1.0 + obj.abs()) {
            converged = true;
            break;
        }
        if matches!(config.time_budget_ms, Some(t) if start.elapsed().as_secs_f64() * 1e3 >= t) {
            break;
        }
    }
    Ok(SolverOutput {
        w,
        objective: obj,
        iterations,
        converged,
        trace,
        lipschitz: Some(lip),
        step_constant: None,
    })
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, a| m.max(a.abs()))
}

/// w_{t+1} = w_t − γ_t(∇L(w_t) + λ s_t) from w = 0, with s_t the greedy base
/// point at w_t. Returns the best iterate; the trace holds best-so-far values.
pub fn subgradient_descent<L: SmoothLoss + ?Sized>(
    loss: &L,
    f: &SetFunction,
    lambda: f64,
    config: &SolverConfig,
) -> Result<SolverOutput> {
    check_problem(loss, f, lambda)?;
    config.validate()?;
    let start = Instant::now();
    let p = loss.dim();
    let mut w = vec![0.0; p];
    let mut grad = vec![0.0; p];
    let mut full = vec![0.0; p];
    let subgradient = |w: &[f64], grad: &mut [f64], full: &mut [f64]| -> Result<f64> {
        let lv = loss.value_grad(w, grad);
        let (s, _) = greedy(f, w)?;
        let fw = s.dot(w);
        for ((o, g), si) in full.iter_mut().zip(grad.iter()).zip(&s.s) {
            *o = g + lambda * si;
        }
        Ok(lv + lambda * fw)
    };
    let mut obj = subgradient(&w, &mut grad, &mut full)?;
    let c = match config.step_constant {
        Some(c) => c,
        None => {
            // ‖∇L(0)‖∞/L is the size of one gradient step from 0; for denoising
            // it is ‖z‖∞.
            let lip = loss
                .lipschitz_estimate()
                .filter(|l| *l > 0.0 && l.is_finite())
                .unwrap_or(1.0);
            let g0 = inf_norm(&full);
            let scale = inf_norm(&grad) / lip;
            if g0 > 0.0 && scale > 0.0 {
                scale / g0
            } else {
                1.0
            }
        }
    };
    let mut best = obj;
    let mut best_w = w.clone();
    let mut trace = vec![TraceRow {
        iter: 0,
        objective: best,
        gap: f64::NAN,
        wall_time_ms: 0.0,
    }];
    let mut iterations = 0;
    for t in 1..=config.max_iters {
        let gamma = match config.schedule {
            Schedule::Harmonic => c / t as f64,
            Schedule::InverseSqrt => c / (t as f64).sqrt(),
        };
        for (wi, g) in w.iter_mut().zip(&full) {
            *wi -= gamma * g;
        }
        obj = subgradient(&w, &mut grad, &mut full)?;
        if !obj.is_finite() {
            return Err(Error::Numerical(format!(
                "objective became non-finite at iteration {t}"
            )));
        }
        let prev = best;
        if obj < best {
            best = obj;
            best_w.clone_from(&w);
        }
        iterations = t;
        trace.push(TraceRow {
            iter: t,
            objective: best,
            gap: prev - best,
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        if matches!(config.time_budget_ms, Some(b) if start.elapsed().as_secs_f64() * 1e3 >= b) {
            break;
        }
    }
    Ok(SolverOutput {
        w: best_w,
        objective: best,
        iterations,
        converged: false,
        trace,
        lipschitz: None,
        step_constant: Some(c),
    })
}

/// Least-squares regression with a cardinality-based penalty, for timing solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpeedConfig {
    pub p: usize,
    /// Number of observations.
    pub n: usize,
    pub lambda: f64,
    /// Wall-clock budget per method in milliseconds.
    pub budget_ms: f64,
    /// Distance tolerance of the minimum-norm-point prox.
    pub prox_tol: f64,
    /// Number of distinct values in the true predictor.
    pub clusters: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SpeedConfig {
    fn default() -> Self {
        Self {
            p: 1000,
            n: 500,
            lambda: 1e-3,
            budget_ms: 3000.0,
            prox_tol: 1e-2,
            clusters: 5,
            noise: 0.1,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpeedMethod {
    DedicatedFista,
    MinNormFista,
    SubgradientHarmonic,
    SubgradientInverseSqrt,
}

impl SpeedMethod {
    pub const ALL: [SpeedMethod; 4] = [
        SpeedMethod::DedicatedFista,
        SpeedMethod::MinNormFista,
        SpeedMethod::SubgradientHarmonic,
        SpeedMethod::SubgradientInverseSqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpeedMethod::DedicatedFista => "fista-dedicated",
            SpeedMethod::MinNormFista => "fista-min-norm",
            SpeedMethod::SubgradientHarmonic => "subgradient-1/t",
            SpeedMethod::SubgradientInverseSqrt => "subgradient-1/sqrt(t)",
        }
    }
}

/// X with N(0, 1/n) entries, a predictor with `clusters` equally spaced values in
/// [−1, 1] and y = Xw* + noise·ε; the penalty uses h(k) = k(p − k).
pub fn speed_problem(cfg: &SpeedConfig) -> Result<(LeastSquares, SetFunction)> {
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;
    if cfg.p < 2 || cfg.n == 0 || cfg.clusters == 0 {
        return Err(Error::InvalidArgument(
            "need p ≥ 2, n ≥ 1 and clusters ≥ 1".into(),
        ));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let (n, p) = (cfg.n, cfg.p);
    let scale = 1.0 / (n as f64).sqrt();
    let x: Vec<f64> = (0..n * p)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let levels = cfg.clusters.max(2) - 1;
    let w_star: Vec<f64> = (0..p)
        .map(|i| {
            if cfg.clusters == 1 {
                0.0
            } else {
                1.0 - 2.0 * (i % cfg.clusters) as f64 / levels as f64
            }
        })
        .collect();
    let y: Vec<f64> = x
        .chunks_exact(p)
        .map(|row| {
            row.iter().zip(&w_star).map(|(a, b)| a * b).sum::<f64>()
                + cfg.noise * rng.sample::<f64, _>(StandardNormal)
        })
        .collect();
    let f = SetFunction::cardinality(crate::setfn::CardinalityProfile::clustering(p)?);
    Ok((LeastSquares::new(x, y, p)?, f))
}

/// Runs the four methods one after another, each for `budget_ms`.
pub fn speed_comparison(cfg: &SpeedConfig) -> Result<Vec<(SpeedMethod, SolverOutput)>> {
    let (loss, f) = speed_problem(cfg)?;
    let base = SolverConfig {
        max_iters: usize::MAX,
        tol: 0.0,
        time_budget_ms: Some(cfg.budget_ms),
        prox_tol: cfg.prox_tol,
        ..SolverConfig::default()
    };
    SpeedMethod::ALL
        .iter()
        .map(|&m| {
            let out = match m {
                SpeedMethod::DedicatedFista => {
                    proximal_gradient(&loss, &f, cfg.lambda, &base, ProxEngine::Auto)
                }
                SpeedMethod::MinNormFista => {
                    proximal_gradient(&loss, &f, cfg.lambda, &base, ProxEngine::MinNorm)
                }
                SpeedMethod::SubgradientHarmonic => subgradient_descent(
                    &loss,
                    &f,
                    cfg.lambda,
                    &SolverConfig {
                        schedule: Schedule::Harmonic,
                        ..base
                    },
                ),
                SpeedMethod::SubgradientInverseSqrt => subgradient_descent(
                    &loss,
                    &f,
                    cfg.lambda,
                    &SolverConfig {
                        schedule: Schedule::InverseSqrt,
                        ..base
                    },
                ),
            }?;
            Ok((m, out))
        })
        .collect()
}

/// Best objective recorded at or before `t_ms`; +∞ if none.
pub fn best_by_time(trace: &[TraceRow], t_ms: f64) -> f64 {
    trace
        .iter()
        .filter(|r| r.wall_time_ms <= t_ms)
        .map(|r| r.objective)
        .fold(f64::INFINITY, f64::min)
}
