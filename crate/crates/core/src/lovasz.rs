//! Lovász extension, the greedy algorithm, base-polyhedron membership and the
//! polyhedral geometry of the unit ball {f ≤ 1}.

use crate::error::{check_dim, guard, Error, Result};
use crate::lattice::OrderedPartition;
use crate::setfn::{is_inseparable_in, Family, SetFunction, SubsetMask, VALUE_TOL};

/// A vector claimed to lie in the base polyhedron B(F).
#[derive(Clone, Debug, PartialEq)]
pub struct BasePoint {
    pub s: Vec<f64>,
}

impl BasePoint {
    pub fn dot(&self, w: &[f64]) -> f64 {
        self.s.iter().zip(w).map(|(a, b)| a * b).sum()
    }
}

/// Indices sorted by decreasing value, ties broken by increasing index.
pub fn decreasing_order(w: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    order
}

fn check_finite(w: &[f64]) -> Result<()> {
    if w.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(
            "vector has non-finite entries".into(),
        ))
    }
}

/// f(w) as the Abel sum Σ_k F({j_1..j_k})·(w_{j_k} − w_{j_{k+1}}) over the
/// decreasing order, evaluating F only where the gap is nonzero. On indicator
/// vectors this returns F(A) without any rounding.
pub fn lovasz_extension(f: &SetFunction, w: &[f64]) -> Result<f64> {
    check_dim(f.size(), w.len())?;
    check_finite(w)?;
    if let Family::Cut(g) = f.family() {
        return Ok(g
            .edges()
            .iter()
            .map(|&(i, j, d)| d * (w[i] - w[j]).abs())
            .sum());
    }
    let order = decreasing_order(w);
    let p = w.len();
    let mut prefix = vec![false; p];
    let mut total = 0.0;
    for k in 0..p - 1 {
        prefix[order[k]] = true;
        let gap = w[order[k]] - w[order[k + 1]];
        if gap != 0.0 {
            let fk = match f.family() {
                Family::Cardinality(h) => h.at(k + 1),
                _ => f.value(&prefix),
            };
            total += fk * gap;
        }
    }
    Ok(total)
}

/// Greedy vertex of B(F) for the decreasing order of `w`:
/// s_{j_k} = F({j_1..j_k}) − F({j_1..j_{k−1}}). Returns s and the order used.
pub fn greedy(f: &SetFunction, w: &[f64]) -> Result<(BasePoint, Vec<usize>)> {
    check_dim(f.size(), w.len())?;
    check_finite(w)?;
    let order = decreasing_order(w);
    let s = greedy_vertex(f, &order);
    Ok((BasePoint { s }, order))
}

/// Greedy vertex for an explicit order.
pub fn greedy_vertex(f: &SetFunction, order: &[usize]) -> Vec<f64> {
    let p = f.size();
    let mut inc = vec![0.0; p];
    f.increments_from(&vec![false; p], order, &mut inc);
    let mut s = vec![0.0; p];
    for (k, &j) in order.iter().enumerate() {
        s[j] = inc[k];
    }
    s
}

/// ∫ F({w ≥ α}) dα evaluated exactly over the distinct values of w.
pub fn level_set_integral(f: &SetFunction, w: &[f64]) -> Result<f64> {
    check_dim(f.size(), w.len())?;
    check_finite(w)?;
    let mut levels: Vec<f64> = w.to_vec();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();
    let mut total = 0.0;
    for pair in levels.windows(2) {
        let (hi, lo) = (pair[0], pair[1]);
        let set: Vec<bool> = w.iter().map(|&x| x >= hi).collect();
        total += f.value(&set) * (hi - lo);
    }
    Ok(total)
}

/// Largest ground set for exhaustive membership testing.
pub const MAX_EXHAUSTIVE_P: usize = 20;

/// Whether s(V) = F(V) and s(A) ≤ F(A) + tol for all A. Exhaustive up to
/// p = 20, otherwise decided by minimizing F − s.
pub fn in_base_polyhedron(f: &SetFunction, s: &[f64], tol: f64) -> Result<bool> {
    check_dim(f.size(), s.len())?;
    let p = f.size();
    let total: f64 = s.iter().sum();
    if (total - f.value(&vec![true; p])).abs() > tol {
        return Ok(false);
    }
    if p <= MAX_EXHAUSTIVE_P {
        let n = 1u64 << p;
        // Walk subsets in Gray-code order so s(A) is updated in O(1).
        let mut sum = 0.0;
        let mut bits = 0u64;
        for k in 1..n {
            let flip = k.trailing_zeros() as usize;
            bits ^= 1 << flip;
            if bits >> flip & 1 == 1 {
                sum += s[flip];
            } else {
                sum -= s[flip];
            }
            if sum > f.value_bits(bits) + tol {
                return Ok(false);
            }
        }
        Ok(true)
    } else {
        let neg: Vec<f64> = s.to_vec();
        let res = crate::sfm::minimize(f, &neg, 1.0, crate::sfm::SfmEngine::Auto)?;
        Ok(res.value >= -tol)
    }
}

/// Extreme point of {w : f(w) ≤ 1, wᵀ1 = 0}.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtremePoint {
    pub generating_set: SubsetMask,
    pub coordinates: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExtremePoints {
    pub points: Vec<ExtremePoint>,
    /// Proper sets with F(A) = 0, for which 1_A/F(A) is undefined; they are skipped.
    pub degenerate: Vec<SubsetMask>,
}

pub const MAX_EXTREME_P: usize = 16;

/// Projections of 1_A/F(A) onto {wᵀ1 = 0} for every proper A that is inseparable
/// and whose complement is inseparable for B ↦ F(A ∪ B) − F(A).
pub fn extreme_points(f: &SetFunction) -> Result<ExtremePoints> {
    let p = f.size();
    guard("extreme_points", MAX_EXTREME_P, p)?;
    let mut out = ExtremePoints::default();
    for bits in 1..(1u64 << p) - 1 {
        let a = SubsetMask::from_bits(p, bits);
        let fa = f.value_bits(bits);
        if fa.abs() <= VALUE_TOL {
            out.degenerate.push(a);
            continue;
        }
        let inside = a.indices();
        let outside = a.complement().indices();
        if !is_inseparable_in(f, &vec![false; p], &inside)? {
            continue;
        }
        if !is_inseparable_in(f, a.as_slice(), &outside)? {
            continue;
        }
        let k = inside.len() as f64;
        let coordinates = (0..p)
            .map(|i| {
                let v = if a.contains(i) { 1.0 } else { 0.0 };
                (v - k / p as f64) / fa
            })
            .collect();
        out.points.push(ExtremePoint {
            generating_set: a,
            coordinates,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FaceReport {
    /// F restricted to the up-sets of the poset is modular.
    pub modular_on_lattice: bool,
    /// Every block is inseparable for C ↦ F(B ∪ C) − F(B), B the union of its ancestors.
    pub blocks_inseparable: bool,
    /// No strictly larger lattice on the same blocks keeps F modular; only when requested.
    pub maximal: Option<bool>,
}

pub const MAX_MAXIMALITY_P: usize = 8;
pub const MAX_MAXIMALITY_PAIRS: usize = 20;

/// Checks the face conditions of an ordered partition.
pub fn check_face_lattice(
    f: &SetFunction,
    part: &OrderedPartition,
    check_maximal: bool,
) -> Result<FaceReport> {
    check_dim(f.size(), part.ground_size())?;
    let modular_on_lattice = is_modular_on(f, part)?;
    let mut blocks_inseparable = true;
    for j in 0..part.len() {
        let anc = part.ancestors_mask(j);
        if !is_inseparable_in(f, &anc, part.block(j))? {
            blocks_inseparable = false;
            break;
        }
    }
    let maximal = if check_maximal {
        guard("lattice maximality", MAX_MAXIMALITY_P, f.size())?;
        Some(is_maximal(f, part)?)
    } else {
        None
    };
    Ok(FaceReport {
        modular_on_lattice,
        blocks_inseparable,
        maximal,
    })
}

/// F(U) = Σ_{j ∈ U} c_j on every up-set U, with c_j = F(anc_j ∪ A_j) − F(anc_j).
fn is_modular_on(f: &SetFunction, part: &OrderedPartition) -> Result<bool> {
    let m = part.len();
    let c: Vec<f64> = (0..m)
        .map(|j| {
            let anc = part.ancestors_mask(j);
            let mut with = anc.clone();
            for &e in part.block(j) {
                with[e] = true;
            }
            f.value(&with) - f.value(&anc)
        })
        .collect();
    for up in part.up_sets()? {
        let predicted: f64 = up.iter().zip(&c).filter(|(&u, _)| u).map(|(_, &v)| v).sum();
        let actual = f.value(&part.union_mask(&up));
        if (predicted - actual).abs() > VALUE_TOL * (1.0 + actual.abs()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// No proper transitive sub-relation of the closure yields a lattice on which F is modular.
fn is_maximal(f: &SetFunction, part: &OrderedPartition) -> Result<bool> {
    let c = part.closure();
    let m = part.len();
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .filter(|&(i, j)| c[i][j])
        .collect();
    guard(
        "lattice maximality relation pairs",
        MAX_MAXIMALITY_PAIRS,
        pairs.len(),
    )?;
    let full = (1u32 << pairs.len()) - 1;
    for sub in 0..full {
        let rel: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(k, _)| sub >> k & 1 == 1)
            .map(|(_, &r)| r)
            .collect();
        let mut has = vec![vec![false; m]; m];
        for &(i, j) in &rel {
            has[i][j] = true;
        }
        let transitive = rel
            .iter()
            .all(|&(i, j)| (j + 1..m).all(|k| !has[j][k] || has[i][k]));
        if !transitive {
            continue;
        }
        if is_modular_on(f, &part.with_relations(rel)?)? {
            return Ok(false);
        }
    }
    Ok(true)
}
