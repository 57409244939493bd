//! Proximal operator of the Lovász extension:
//! prox_{λf}(z) = argmin_w ½‖w − z‖² + λf(w).
//!
//! Routes: divide-and-conquer over submodular minimizations, projection onto
//! B(F) by the minimum-norm-point algorithm, pool-adjacent-violators for
//! cardinality functions and the taut string for weighted 1-D total variation.
//! [`certify_lattice`] checks a candidate ordered partition against the
//! closed-form optimality conditions.

use crate::error::{check_dim, Error, Result};
use crate::lattice::OrderedPartition;
use crate::lovasz::{in_base_polyhedron, BasePoint};
use crate::mnp::{MinNormPoint, ShiftedMinor};
use crate::setfn::{CardinalityProfile, Family, Minor, SetFunction, WeightedGraph};
use crate::sfm::{minimize_minor, SfmEngine};

#[derive(Clone, Debug, PartialEq)]
pub struct ProxSolution {
    pub w: Vec<f64>,
    /// s = (z − w)/λ, an element of B(F) at the optimum; zero when λ = 0.
    pub dual: BasePoint,
    /// Constant sets of w in decreasing order of value.
    pub lattice: OrderedPartition,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ProxEngine {
    /// Dedicated fast path when the family has one, else decomposition.
    #[default]
    Auto,
    Decomposition,
    MinNorm,
}

/// Default duality-gap tolerance for the minimum-norm-point route.
pub const MNP_PROX_TOL: f64 = 1e-10;

/// Relative tolerance for grouping equal coordinates into constant sets.
pub const LATTICE_REL_TOL: f64 = 1e-7;

fn validate(z: &[f64], lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "lambda must be finite and non-negative, got {lambda}"
        )));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("z has non-finite entries".into()));
    }
    Ok(())
}

fn inf_norm(z: &[f64]) -> f64 {
    z.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Packs w into a solution with its dual and extracted lattice.
pub fn finish(z: &[f64], lambda: f64, w: Vec<f64>) -> ProxSolution {
    let s = if lambda > 0.0 {
        z.iter()
            .zip(&w)
            .map(|(zi, wi)| (zi - wi) / lambda)
            .collect()
    } else {
        vec![0.0; z.len()]
    };
    let lattice = if lambda > 0.0 {
        extract_lattice(&w, LATTICE_REL_TOL * inf_norm(z))
    } else {
        singleton_lattice(&w)
    };
    ProxSolution {
        w,
        dual: BasePoint { s },
        lattice,
    }
}

fn singleton_lattice(w: &[f64]) -> OrderedPartition {
    let order = crate::lovasz::decreasing_order(w);
    OrderedPartition::total(w.len(), order.into_iter().map(|i| vec![i]).collect())
        .expect("singletons partition the ground set")
}

/// Dispatches to an engine.
pub fn prox(f: &SetFunction, z: &[f64], lambda: f64, engine: ProxEngine) -> Result<ProxSolution> {
    match engine {
        ProxEngine::Decomposition => prox_decomposition(f, z, lambda, SfmEngine::Auto),
        ProxEngine::MinNorm => {
            if lambda == 0.0 {
                check_dim(f.size(), z.len())?;
                validate(z, lambda)?;
                return Ok(finish(z, lambda, z.to_vec()));
            }
            prox_via_mnp(f, z, lambda, MNP_PROX_TOL)
        }
        ProxEngine::Auto => match f.family() {
            Family::Cardinality(h) => prox_cardinality(h, z, lambda),
            Family::Cut(g) => match g.chain_weights() {
                Some(weights) => prox_tv1d(z, lambda, &weights),
                None => prox_decomposition(f, z, lambda, SfmEngine::Auto),
            },
            _ => prox_decomposition(f, z, lambda, SfmEngine::Auto),
        },
    }
}

/// Divide and conquer over at most p minimizations.
///
/// On a minor G with ground S, let α = (z(S) − λG(S))/|S| and let A be the smallest
/// minimizer of λG(A) − z(A) + α|A|. Then A = {w > α}. If A is empty, w ≡ α on S;
/// otherwise the problem splits into the restriction to A and the contraction by A.
pub fn prox_decomposition(
    f: &SetFunction,
    z: &[f64],
    lambda: f64,
    sfm: SfmEngine,
) -> Result<ProxSolution> {
    check_dim(f.size(), z.len())?;
    validate(z, lambda)?;
    if lambda == 0.0 {
        return Ok(finish(z, lambda, z.to_vec()));
    }
    let p = f.size();
    let mut w = vec![0.0; p];
    let mut stack = vec![Minor::whole(f)];
    let scale = 1.0 + z.iter().map(|v| v.abs()).sum::<f64>();
    while let Some(m) = stack.pop() {
        let n = m.size();
        let zl: Vec<f64> = m.ground().iter().map(|&g| z[g]).collect();
        let all = vec![true; n];
        let total = m.value(&all);
        let alpha = (zl.iter().sum::<f64>() - lambda * total) / n as f64;
        if n == 1 {
            w[m.ground()[0]] = alpha;
            continue;
        }
        let shifted: Vec<f64> = zl.iter().map(|v| v - alpha).collect();
        let res = minimize_minor(&m, &shifted, lambda, sfm)?;
        let size = res.minimal.iter().filter(|&&b| b).count();
        let split = size > 0 && size < n && res.value < -1e-13 * (scale + lambda * total.abs());
        if split {
            stack.push(m.restrict(&res.minimal));
            stack.push(m.contract(&res.minimal));
        } else {
            for &g in m.ground() {
                w[g] = alpha;
            }
        }
    }
    Ok(finish(z, lambda, w))
}

/// Point of B(F) closest to `target`, within `tol` of the exact projection.
pub fn min_norm_point(f: &SetFunction, target: &[f64], tol: f64) -> Result<BasePoint> {
    check_dim(f.size(), target.len())?;
    validate(target, 1.0)?;
    let m = Minor::whole(f);
    let oracle = ShiftedMinor {
        minor: &m,
        lambda: 1.0,
        z: target,
    };
    let out = MinNormPoint::new().solve(&oracle, target, tol)?;
    Ok(BasePoint {
        s: out.x.iter().zip(target).map(|(x, t)| x + t).collect(),
    })
}

/// w = z − λ·Π_{B(F)}(z/λ), computed as minus the minimum-norm point of B(λF − z).
pub fn prox_via_mnp(f: &SetFunction, z: &[f64], lambda: f64, tol: f64) -> Result<ProxSolution> {
    MnpProx::new(tol).prox(f, z, lambda)
}

/// Minimum-norm-point prox that warm-starts each call from the previous corral.
#[derive(Clone, Debug)]
pub struct MnpProx {
    solver: MinNormPoint,
    tol: f64,
}

impl MnpProx {
    pub fn new(tol: f64) -> Self {
        Self {
            solver: MinNormPoint::new(),
            tol,
        }
    }

    pub fn prox(&mut self, f: &SetFunction, z: &[f64], lambda: f64) -> Result<ProxSolution> {
        check_dim(f.size(), z.len())?;
        validate(z, lambda)?;
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument(
                "the projection route needs lambda > 0".into(),
            ));
        }
        let m = Minor::whole(f);
        let oracle = ShiftedMinor {
            minor: &m,
            lambda,
            z,
        };
        let out = self.solver.solve(&oracle, z, self.tol)?;
        let w = out.x.iter().map(|x| -x).collect();
        Ok(finish(z, lambda, w))
    }
}

/// Antitonic least squares: the non-increasing sequence closest to `y`.
pub fn pava_nonincreasing(y: &[f64]) -> Vec<f64> {
    // Stack of (sum, count) pools.
    let mut pools: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        pools.push((v, 1));
        while pools.len() > 1 {
            let (s1, c1) = pools[pools.len() - 1];
            let (s0, c0) = pools[pools.len() - 2];
            if s0 / c0 as f64 >= s1 / c1 as f64 {
                break;
            }
            pools.pop();
            let last = pools.len() - 1;
            pools[last] = (s0 + s1, c0 + c1);
        }
    }
    let mut out = Vec::with_capacity(y.len());
    for (s, c) in pools {
        out.extend(std::iter::repeat_n(s / c as f64, c));
    }
    out
}

/// Cardinality-based prox: w keeps the order of z, so with sorted z_(1) ≥ … ≥ z_(p)
/// it is the non-increasing fit to z_(k) − λ(h(k) − h(k−1)).
pub fn prox_cardinality(h: &CardinalityProfile, z: &[f64], lambda: f64) -> Result<ProxSolution> {
    check_dim(h.size(), z.len())?;
    validate(z, lambda)?;
    let order = crate::lovasz::decreasing_order(z);
    let y: Vec<f64> = order
        .iter()
        .enumerate()
        .map(|(k, &i)| z[i] - lambda * (h.at(k + 1) - h.at(k)))
        .collect();
    let fit = pava_nonincreasing(&y);
    let mut w = vec![0.0; z.len()];
    for (k, &i) in order.iter().enumerate() {
        w[i] = fit[k];
    }
    Ok(finish(z, lambda, w))
}

/// Weighted 1-D total variation Σ_k weights[k]·|w_{k+1} − w_k| by the taut string:
/// the cumulative sums of w form the shortest path through the tube
/// [R_k − λ·weights[k−1], R_k + λ·weights[k−1]] around the cumulative sums R of z.
pub fn prox_tv1d(z: &[f64], lambda: f64, weights: &[f64]) -> Result<ProxSolution> {
    validate(z, lambda)?;
    let p = z.len();
    if p == 0 {
        return Err(Error::InvalidArgument("empty signal".into()));
    }
    check_dim(p - 1, weights.len())?;
    if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidArgument(
            "edge weights must be non-negative".into(),
        ));
    }
    let w = taut_string(z, lambda, weights);
    Ok(finish(z, lambda, w))
}

fn taut_string(z: &[f64], lambda: f64, weights: &[f64]) -> Vec<f64> {
    let p = z.len();
    let mut r = vec![0.0; p + 1];
    for i in 0..p {
        r[i + 1] = r[i] + z[i];
    }
    let width = |k: usize| {
        if k == 0 || k == p {
            0.0
        } else {
            lambda * weights[k - 1]
        }
    };
    let lo = |k: usize| r[k] - width(k);
    let hi = |k: usize| r[k] + width(k);
    let mut w = vec![0.0; p];
    let (mut i0, mut y0) = (0usize, 0.0f64);
    while i0 < p {
        let (mut smax, mut jmax) = (f64::NEG_INFINITY, i0);
        let (mut smin, mut jmin) = (f64::INFINITY, i0);
        let mut next = None;
        for k in i0 + 1..=p {
            let d = (k - i0) as f64;
            let sl = (lo(k) - y0) / d;
            let su = (hi(k) - y0) / d;
            if su < smax {
                // The string touches the lower bound at jmax and turns down.
                next = Some((jmax, smax, lo(jmax)));
                break;
            }
            if sl > smin {
                // The string touches the upper bound at jmin and turns up.
                next = Some((jmin, smin, hi(jmin)));
                break;
            }
            if sl > smax {
                smax = sl;
                jmax = k;
            }
            if su < smin {
                smin = su;
                jmin = k;
            }
        }
        match next {
            Some((j, slope, y)) => {
                w[i0..j].fill(slope);
                i0 = j;
                y0 = y;
            }
            None => {
                let slope = (r[p] - y0) / (p - i0) as f64;
                w[i0..p].fill(slope);
                i0 = p;
            }
        }
    }
    w
}

/// Decomposition route for the chain, used as the reference for [`prox_tv1d`].
pub fn prox_tv1d_reference(z: &[f64], lambda: f64, weights: &[f64]) -> Result<ProxSolution> {
    let f = SetFunction::cut(WeightedGraph::chain(weights)?);
    prox_decomposition(&f, z, lambda, SfmEngine::Auto)
}

pub fn soft_threshold(w: &[f64], t: f64) -> Vec<f64> {
    w.iter()
        .map(|&v| v.signum() * (v.abs() - t).max(0.0))
        .collect()
}

/// Minimizer of ½‖w − z‖² + λ_f·f(w) + λ_1‖w‖₁, obtained by soft-thresholding prox_{λ_f f}(z).
pub fn prox_l1_composed(
    f: &SetFunction,
    z: &[f64],
    lambda_f: f64,
    lambda_1: f64,
    engine: ProxEngine,
) -> Result<Vec<f64>> {
    if !(lambda_1 >= 0.0) || !lambda_1.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "l1 weight must be finite and non-negative, got {lambda_1}"
        )));
    }
    let sol = prox(f, z, lambda_f, engine)?;
    Ok(soft_threshold(&sol.w, lambda_1))
}

/// Groups coordinates whose sorted neighbours differ by at most `tol` and orders
/// the groups by decreasing value, as a total order.
pub fn extract_lattice(w: &[f64], tol: f64) -> OrderedPartition {
    let order = crate::lovasz::decreasing_order(w);
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut prev = f64::NAN;
    for &i in &order {
        if blocks.is_empty() || prev - w[i] > tol {
            blocks.push(vec![i]);
        } else {
            blocks.last_mut().expect("nonempty").push(i);
        }
        prev = w[i];
    }
    OrderedPartition::total(w.len(), blocks).expect("grouping partitions the ground set")
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeCertificate {
    /// v_i strictly decreases along every relation of the poset.
    pub order_ok: bool,
    /// (z − Σ_i v_i 1_{A_i})/λ lies in B(F).
    pub base_ok: bool,
    /// Block values v_i = mean(z on A_i) − λ·t_i/|A_i|.
    pub v: Vec<f64>,
    /// Increments t_i = F(A_0 ∪ … ∪ A_i) − F(A_0 ∪ … ∪ A_{i−1}).
    pub t: Vec<f64>,
}

/// Block values and increments of a partition in index order.
pub fn lattice_values(
    f: &SetFunction,
    z: &[f64],
    lambda: f64,
    part: &OrderedPartition,
) -> (Vec<f64>, Vec<f64>) {
    let p = f.size();
    let mut prefix = vec![false; p];
    let mut prev = 0.0;
    let mut t = Vec::with_capacity(part.len());
    let mut v = Vec::with_capacity(part.len());
    for block in part.blocks() {
        for &e in block {
            prefix[e] = true;
        }
        let cur = f.value(&prefix);
        let ti = cur - prev;
        prev = cur;
        let mean = block.iter().map(|&e| z[e]).sum::<f64>() / block.len() as f64;
        v.push(mean - lambda * ti / block.len() as f64);
        t.push(ti);
    }
    (v, t)
}

/// Checks whether `part` is the ordered partition of prox_{λf}(z).
pub fn certify_lattice(
    f: &SetFunction,
    z: &[f64],
    lambda: f64,
    part: &OrderedPartition,
    tol: f64,
) -> Result<LatticeCertificate> {
    check_dim(f.size(), z.len())?;
    check_dim(f.size(), part.ground_size())?;
    validate(z, lambda)?;
    let (v, t) = lattice_values(f, z, lambda, part);
    let c = part.closure();
    let m = part.len();
    let order_ok = (0..m).all(|i| (i + 1..m).all(|j| !c[i][j] || v[i] > v[j]));
    let w = part.assemble(&v);
    let base_ok = if lambda > 0.0 {
        let s: Vec<f64> = z
            .iter()
            .zip(&w)
            .map(|(zi, wi)| (zi - wi) / lambda)
            .collect();
        in_base_polyhedron(f, &s, tol)?
    } else {
        z.iter().zip(&w).all(|(a, b)| (a - b).abs() <= tol)
    };
    Ok(LatticeCertificate {
        order_ok,
        base_ok,
        v,
        t,
    })
}

/// Gap between λF(A) − z(A) + α|A| at A = {w ≥ α} and its minimum over all A.
/// Zero (up to rounding) when w is the prox solution.
pub fn threshold_gap(
    f: &SetFunction,
    z: &[f64],
    lambda: f64,
    w: &[f64],
    alpha: f64,
) -> Result<f64> {
    check_dim(f.size(), w.len())?;
    let shifted: Vec<f64> = z.iter().map(|v| v - alpha).collect();
    let level: Vec<bool> = w.iter().map(|&x| x >= alpha).collect();
    let at_level = lambda * f.eval_slice(&level)?
        - shifted
            .iter()
            .zip(&level)
            .filter(|(_, &b)| b)
            .map(|(v, _)| v)
            .sum::<f64>();
    let best = crate::sfm::minimize(f, &shifted, lambda, SfmEngine::Auto)?;
    Ok(at_level - best.value)
}
