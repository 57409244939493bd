//! Minimization of A ↦ λF(A) − z(A), returning the smallest and the largest minimizer.
//!
//! Every engine works on a [`Minor`] so that the prox decomposition can call it
//! on restrictions and contractions without rebuilding functions.

use crate::error::{check_dim, guard, Error, Result};
use crate::flow::FlowNetwork;
use crate::mnp::{MinNormPoint, ShiftedMinor};
use crate::setfn::{CardinalityProfile, Family, Minor, SetFunction, SubsetMask, WeightedGraph};

#[derive(Clone, Debug, PartialEq)]
pub struct SfmResult {
    pub minimal_minimizer: SubsetMask,
    pub maximal_minimizer: SubsetMask,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SfmEngine {
    /// Family-dedicated engine when one exists, else brute force for small
    /// ground sets, else minimum-norm point.
    #[default]
    Auto,
    BruteForce,
    MinNorm,
}

/// Largest ground set for exhaustive minimization.
pub const MAX_BRUTE_FORCE: usize = 22;
/// Ground sets up to this size use brute force under [`SfmEngine::Auto`] when no dedicated engine exists.
pub const AUTO_BRUTE_FORCE: usize = 16;
/// Duality-gap tolerance for minimum-norm-point based minimization.
pub const MNP_SFM_TOL: f64 = 1e-10;

/// Minimizers as local masks over a minor's ground set.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct LocalSfm {
    pub minimal: Vec<bool>,
    pub maximal: Vec<bool>,
    pub value: f64,
}

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

fn to_result(local: LocalSfm) -> SfmResult {
    SfmResult {
        minimal_minimizer: SubsetMask::from_bools(local.minimal),
        maximal_minimizer: SubsetMask::from_bools(local.maximal),
        value: local.value,
    }
}

/// Minimizes λF(A) − z(A) over all A ⊆ V with the chosen engine.
pub fn minimize(f: &SetFunction, z: &[f64], lambda: f64, engine: SfmEngine) -> Result<SfmResult> {
    check_dim(f.size(), z.len())?;
    validate(z, lambda)?;
    let m = Minor::whole(f);
    minimize_minor(&m, z, lambda, engine).map(to_result)
}

/// Exhaustive scan of all 2^p subsets.
pub fn sfm_bruteforce(f: &SetFunction, z: &[f64], lambda: f64) -> Result<SfmResult> {
    minimize(f, z, lambda, SfmEngine::BruteForce)
}

/// Closed form by sorting z for F(A) = h(|A|).
pub fn sfm_cardinality(h: &CardinalityProfile, z: &[f64], lambda: f64) -> Result<SfmResult> {
    let f = SetFunction::cardinality(h.clone());
    check_dim(f.size(), z.len())?;
    validate(z, lambda)?;
    let m = Minor::whole(&f);
    Ok(to_result(cardinality_minor(&m, h, z, lambda)))
}

/// Reduction of λ·cut(A) − z(A) to an s-t minimum cut.
pub fn sfm_cut(graph: &WeightedGraph, z: &[f64], lambda: f64) -> Result<SfmResult> {
    let f = SetFunction::cut(graph.clone());
    check_dim(f.size(), z.len())?;
    validate(z, lambda)?;
    let m = Minor::whole(&f);
    cut_minor(&m, graph, z, lambda).map(to_result)
}

/// Minimization through the minimum-norm point of B(λF − z): the smallest and
/// largest minimizers are read off the sorted point, checked against the
/// function values of all its prefixes.
pub fn sfm_min_norm(f: &SetFunction, z: &[f64], lambda: f64) -> Result<SfmResult> {
    minimize(f, z, lambda, SfmEngine::MinNorm)
}

pub(crate) fn minimize_minor(
    m: &Minor,
    z: &[f64],
    lambda: f64,
    engine: SfmEngine,
) -> Result<LocalSfm> {
    debug_assert_eq!(m.size(), z.len());
    let n = m.size();
    if n == 0 {
        return Ok(LocalSfm {
            minimal: Vec::new(),
            maximal: Vec::new(),
            value: 0.0,
        });
    }
    match engine {
        SfmEngine::BruteForce => brute_force_minor(m, z, lambda),
        SfmEngine::MinNorm => min_norm_minor(m, z, lambda),
        SfmEngine::Auto => match m.function().family() {
            Family::Cut(g) => cut_minor(m, g, z, lambda),
            Family::Cardinality(h) => Ok(cardinality_minor(m, h, z, lambda)),
            Family::NoisyCut(_) => noisy_cut_minor(m, z, lambda),
            _ if n <= AUTO_BRUTE_FORCE => brute_force_minor(m, z, lambda),
            _ => min_norm_minor(m, z, lambda),
        },
    }
}

fn objective(m: &Minor, z: &[f64], lambda: f64, set: &[bool]) -> f64 {
    let zs: f64 = z.iter().zip(set).filter(|(_, &b)| b).map(|(v, _)| v).sum();
    lambda * m.value(set) - zs
}

fn tie_tol(z: &[f64], lambda: f64, fscale: f64) -> f64 {
    let zs: f64 = z.iter().map(|v| v.abs()).sum();
    1e-11 * (1.0 + zs + lambda * fscale)
}

fn brute_force_minor(m: &Minor, z: &[f64], lambda: f64) -> Result<LocalSfm> {
    let n = m.size();
    guard("sfm_bruteforce", MAX_BRUTE_FORCE, n)?;
    let total = 1u64 << n;
    let mut values = vec![0.0; total as usize];
    // Gray-code walk keeps z(A) current with one update per subset.
    let mut zsum = 0.0;
    let mut bits = 0u64;
    let mut fscale: f64 = 0.0;
    for k in 1..total {
        let flip = k.trailing_zeros() as usize;
        bits ^= 1 << flip;
        if bits >> flip & 1 == 1 {
            zsum += z[flip];
        } else {
            zsum -= z[flip];
        }
        let g = m.value_bits(bits);
        fscale = fscale.max(g.abs());
        values[bits as usize] = lambda * g - zsum;
    }
    let best = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = tie_tol(z, lambda, fscale);
    let mut lo = u64::MAX >> (64 - n);
    let mut hi = 0u64;
    for (b, &v) in values.iter().enumerate() {
        if v <= best + tol {
            lo &= b as u64;
            hi |= b as u64;
        }
    }
    let minimal: Vec<bool> = (0..n).map(|k| lo >> k & 1 == 1).collect();
    let maximal: Vec<bool> = (0..n).map(|k| hi >> k & 1 == 1).collect();
    Ok(LocalSfm {
        value: values[lo as usize],
        minimal,
        maximal,
    })
}

fn cardinality_minor(m: &Minor, h: &CardinalityProfile, z: &[f64], lambda: f64) -> LocalSfm {
    let n = m.size();
    let b = m.base().iter().filter(|&&x| x).count();
    let order = crate::lovasz::decreasing_order(z);
    let mut vals = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    vals.push(0.0);
    let hb = h.at(b);
    let mut fscale: f64 = 0.0;
    for (k, &i) in order.iter().enumerate() {
        acc += z[i];
        let g = h.at(b + k + 1) - hb;
        fscale = fscale.max(g.abs());
        vals.push(lambda * g - acc);
    }
    let best = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = tie_tol(z, lambda, fscale);
    let mut kmin = vals.iter().position(|&v| v <= best + tol).unwrap_or(0);
    let mut kmax = vals.iter().rposition(|&v| v <= best + tol).unwrap_or(n);
    // Elements tied in z across a boundary are excluded from the smallest
    // minimizer and included in the largest.
    while kmin > 0 && kmin < n && z[order[kmin - 1]] == z[order[kmin]] {
        kmin -= 1;
    }
    while kmax > 0 && kmax < n && z[order[kmax - 1]] == z[order[kmax]] {
        kmax += 1;
    }
    let mut minimal = vec![false; n];
    for &i in &order[..kmin] {
        minimal[i] = true;
    }
    let mut maximal = vec![false; n];
    for &i in &order[..kmax] {
        maximal[i] = true;
    }
    LocalSfm {
        value: vals[kmin],
        minimal,
        maximal,
    }
}

fn cut_minor(m: &Minor, g: &WeightedGraph, z: &[f64], lambda: f64) -> Result<LocalSfm> {
    let n = m.size();
    let p = g.size();
    let mut local = vec![usize::MAX; p];
    for (k, &e) in m.ground().iter().enumerate() {
        local[e] = k;
    }
    let base = m.base();
    let (s, t) = (n, n + 1);
    let mut net = FlowNetwork::new(n + 2, s, t)?;
    for (k, &e) in m.ground().iter().enumerate() {
        // Adding e to the base removes its edges to the base from the cut and
        // adds its edges to nodes outside base ∪ ground.
        let mut offset = 0.0;
        for &(j, w) in g.neighbors(e) {
            if base[j] {
                offset -= w;
            } else if local[j] == usize::MAX {
                offset += w;
            }
        }
        let gain = z[k] - lambda * offset;
        if gain > 0.0 {
            net.add_arc(s, k, gain)?;
        } else if gain < 0.0 {
            net.add_arc(k, t, -gain)?;
        }
    }
    if lambda > 0.0 {
        for &(i, j, w) in g.edges() {
            let (li, lj) = (local[i], local[j]);
            if li != usize::MAX && lj != usize::MAX {
                net.add_edge(li, lj, lambda * w)?;
            }
        }
    }
    let cut = net.min_cut();
    let minimal = cut.min_source_side[..n].to_vec();
    let maximal = cut.max_source_side[..n].to_vec();
    Ok(LocalSfm {
        value: objective(m, z, lambda, &minimal),
        minimal,
        maximal,
    })
}

/// Joint minimum cut over the ground elements and all hidden nodes.
fn noisy_cut_minor(m: &Minor, z: &[f64], lambda: f64) -> Result<LocalSfm> {
    let Family::NoisyCut(spec) = m.function().family() else {
        return Err(Error::InvalidArgument(
            "noisy-cut engine on another family".into(),
        ));
    };
    let n = m.size();
    let p = spec.size();
    // Nodes: ground elements 0..n, hidden nodes n..n+p, then source and sink.
    let (s, t) = (n + p, n + p + 1);
    let mut net = FlowNetwork::new(n + p + 2, s, t)?;
    let mu = lambda * spec.penalty();
    let base = m.base();
    let mut in_ground = vec![false; p];
    for (k, &e) in m.ground().iter().enumerate() {
        in_ground[e] = true;
        net.add_edge(k, n + e, mu)?;
        if z[k] > 0.0 {
            net.add_arc(s, k, z[k])?;
        } else if z[k] < 0.0 {
            net.add_arc(k, t, -z[k])?;
        }
    }
    for e in 0..p {
        if base[e] {
            net.add_arc(s, n + e, mu)?;
        } else if !in_ground[e] {
            net.add_arc(n + e, t, mu)?;
        }
    }
    for &(i, j, w) in spec.hidden_graph().edges() {
        net.add_edge(n + i, n + j, lambda * w)?;
    }
    let cut = net.min_cut();
    let minimal = cut.min_source_side[..n].to_vec();
    let maximal = cut.max_source_side[..n].to_vec();
    Ok(LocalSfm {
        value: objective(m, z, lambda, &minimal),
        minimal,
        maximal,
    })
}

fn min_norm_minor(m: &Minor, z: &[f64], lambda: f64) -> Result<LocalSfm> {
    let n = m.size();
    let oracle = ShiftedMinor {
        minor: m,
        lambda,
        z,
    };
    let out = MinNormPoint::new().solve(&oracle, z, MNP_SFM_TOL)?;
    let x = out.x;
    // Candidates are the prefixes of the increasing order of x.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let mut inc = vec![0.0; n];
    m.increments(&order, &mut inc);
    let mut vals = Vec::with_capacity(n + 1);
    vals.push(0.0);
    let mut acc = 0.0;
    let mut gacc = 0.0;
    let mut fscale: f64 = 0.0;
    for (k, &i) in order.iter().enumerate() {
        gacc += inc[k];
        fscale = fscale.max(gacc.abs());
        acc += lambda * inc[k] - z[i];
        vals.push(acc);
    }
    let best = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = tie_tol(z, lambda, fscale).max(1e-9);
    let kmin = vals.iter().position(|&v| v <= best + tol).unwrap_or(0);
    let kmax = vals.iter().rposition(|&v| v <= best + tol).unwrap_or(n);
    let mut minimal = vec![false; n];
    for &i in &order[..kmin] {
        minimal[i] = true;
    }
    let mut maximal = vec![false; n];
    for &i in &order[..kmax] {
        maximal[i] = true;
    }
    Ok(LocalSfm {
        value: objective(m, z, lambda, &minimal),
        minimal,
        maximal,
    })
}
