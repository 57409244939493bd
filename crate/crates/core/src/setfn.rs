//! Ground sets, subsets and the normalized submodular set-function families.
//!
//! Every function here satisfies F(∅) = F(V) = 0. Families:
//! graph cuts, concave cardinality profiles, noisy (robust) cuts,
//! symmetrizations G(A) + G(V∖A) − G(∅) − G(V) of a tabulated G, and explicit tables.

use std::fmt;

use crate::error::{check_dim, guard, Error, Result};
use crate::flow::FlowNetwork;

/// Absolute tolerance for equalities between set-function values.
pub const VALUE_TOL: f64 = 1e-9;

/// Largest ground set for which explicit 2^p tables are accepted.
pub const MAX_TABLE_P: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GroundSet {
    p: usize,
}

impl GroundSet {
    pub fn new(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidArgument("ground set must be nonempty".into()));
        }
        Ok(Self { p })
    }

    pub fn size(&self) -> usize {
        self.p
    }
}

/// Membership vector of a subset of {0, …, p−1}.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetMask(Vec<bool>);

impl SubsetMask {
    pub fn empty(p: usize) -> Self {
        Self(vec![false; p])
    }

    pub fn full(p: usize) -> Self {
        Self(vec![true; p])
    }

    pub fn from_bools(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn from_indices(p: usize, indices: &[usize]) -> Result<Self> {
        let mut m = vec![false; p];
        for &i in indices {
            if i >= p {
                return Err(Error::InvalidArgument(format!(
                    "element {i} outside ground set of size {p}"
                )));
            }
            m[i] = true;
        }
        Ok(Self(m))
    }

    /// Bit k of `bits` is element k.
    pub fn from_bits(p: usize, bits: u64) -> Self {
        Self((0..p).map(|k| bits >> k & 1 == 1).collect())
    }

    pub fn to_bits(&self) -> u64 {
        debug_assert!(self.0.len() <= 64);
        bits_of(&self.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, v: bool) {
        self.0[i] = v;
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
    }

    pub fn indices(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn complement(&self) -> Self {
        Self(self.0.iter().map(|&b| !b).collect())
    }

    pub fn union(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| a || b).collect())
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| a && b).collect())
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(&a, &b)| !a || b)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<bool> {
        self.0
    }
}

impl fmt::Display for SubsetMask {
    /// 1-based, e.g. `{1,3}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

pub(crate) fn bits_of(mask: &[bool]) -> u64 {
    mask.iter()
        .enumerate()
        .fold(0u64, |acc, (k, &b)| if b { acc | 1 << k } else { acc })
}

/// Undirected graph with non-negative weights; each pair is stored once with i < j.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    p: usize,
    edges: Vec<(usize, usize, f64)>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    /// Duplicate pairs are merged by summing their weights; zero weights are dropped.
    pub fn new(p: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        GroundSet::new(p)?;
        let mut merged: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
        for &(i, j, w) in edges {
            if i >= p || j >= p {
                return Err(Error::InvalidArgument(format!(
                    "edge ({i}, {j}) outside ground set of size {p}"
                )));
            }
            if i == j {
                return Err(Error::InvalidArgument(format!("self-loop at node {i}")));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "edge ({i}, {j}) has invalid weight {w}"
                )));
            }
            *merged.entry((i.min(j), i.max(j))).or_insert(0.0) += w;
        }
        let edges: Vec<_> = merged
            .into_iter()
            .filter(|&(_, w)| w > 0.0)
            .map(|((i, j), w)| (i, j, w))
            .collect();
        let mut adj = vec![Vec::new(); p];
        for &(i, j, w) in &edges {
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
        Ok(Self { p, edges, adj })
    }

    /// Path 0–1–…–(p−1) with `weights[k]` on edge (k, k+1).
    pub fn chain(weights: &[f64]) -> Result<Self> {
        let p = weights.len() + 1;
        let edges: Vec<_> = weights
            .iter()
            .enumerate()
            .map(|(k, &w)| (k, k + 1, w))
            .collect();
        Self::new(p, &edges)
    }

    pub fn unit_chain(p: usize) -> Result<Self> {
        Self::chain(&vec![1.0; p.saturating_sub(1)]).and_then(|g| {
            if p == 0 {
                Err(Error::InvalidArgument("ground set must be nonempty".into()))
            } else {
                Ok(g)
            }
        })
    }

    /// 4-neighbour grid with unit weights; node (r, c) has index r·width + c.
    pub fn grid(width: usize, height: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for r in 0..height {
            for c in 0..width {
                let k = r * width + c;
                if c + 1 < width {
                    edges.push((k, k + 1, 1.0));
                }
                if r + 1 < height {
                    edges.push((k, k + width, 1.0));
                }
            }
        }
        Self::new(width * height, &edges)
    }

    pub fn size(&self) -> usize {
        self.p
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    pub fn cut_value(&self, a: &[bool]) -> f64 {
        self.edges
            .iter()
            .filter(|&&(i, j, _)| a[i] != a[j])
            .map(|&(_, _, w)| w)
            .sum()
    }

    /// Whether the subgraph induced by `members` is connected. Empty sets count as connected.
    pub fn is_connected_subset(&self, members: &[bool]) -> bool {
        let Some(start) = members.iter().position(|&b| b) else {
            return true;
        };
        let mut seen = vec![false; self.p];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &(v, _) in &self.adj[u] {
                if members[v] && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        members.iter().zip(&seen).all(|(&m, &s)| !m || s)
    }

    /// Weights of edges (k, k+1) if this graph is a chain with no other edges.
    pub fn chain_weights(&self) -> Option<Vec<f64>> {
        let mut w = vec![0.0; self.p.saturating_sub(1)];
        for &(i, j, wt) in &self.edges {
            if j != i + 1 {
                return None;
            }
            w[i] = wt;
        }
        Some(w)
    }
}

/// Concave profile h with h(0) = h(p) = 0, defining F(A) = h(|A|).
#[derive(Clone, Debug, PartialEq)]
pub struct CardinalityProfile {
    h: Vec<f64>,
}

impl CardinalityProfile {
    pub fn new(h: Vec<f64>) -> Result<Self> {
        if h.len() < 2 {
            return Err(Error::InvalidFunction(
                "cardinality profile needs at least two values".into(),
            ));
        }
        let p = h.len() - 1;
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction(
                "profile values must be finite".into(),
            ));
        }
        if h[0].abs() > VALUE_TOL || h[p].abs() > VALUE_TOL {
            return Err(Error::InvalidFunction(format!(
                "profile must vanish at 0 and p, got h(0)={} h(p)={}",
                h[0], h[p]
            )));
        }
        if let Some(k) = h.iter().position(|&v| v < -VALUE_TOL) {
            return Err(Error::InvalidFunction(format!(
                "h({k}) = {} is negative",
                h[k]
            )));
        }
        for k in 1..p {
            let left = h[k] - h[k - 1];
            let right = h[k + 1] - h[k];
            if right > left + VALUE_TOL {
                return Err(Error::InvalidFunction(format!(
                    "profile is not concave at k = {k}"
                )));
            }
        }
        Ok(Self { h })
    }

    /// h(k) = k·(p − k), i.e. F(A) = |A|·|V∖A|.
    pub fn clustering(p: usize) -> Result<Self> {
        Self::new((0..=p).map(|k| (k * (p - k)) as f64).collect())
    }

    pub fn from_fn(p: usize, h: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new((0..=p).map(h).collect())
    }

    pub fn size(&self) -> usize {
        self.h.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.h
    }

    pub fn at(&self, k: usize) -> f64 {
        self.h[k]
    }
}

/// Robust cut: F(A) = min over B ⊆ W of cut_W(B) + penalty·|A Δ B|,
/// with hidden node k of W paired with element k of V.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisyCutSpec {
    hidden: WeightedGraph,
    penalty: f64,
}

impl NoisyCutSpec {
    pub fn new(hidden: WeightedGraph, penalty: f64) -> Result<Self> {
        if !(penalty >= 0.0) || !penalty.is_finite() {
            return Err(Error::InvalidFunction(format!(
                "mismatch penalty must be finite and non-negative, got {penalty}"
            )));
        }
        Ok(Self { hidden, penalty })
    }

    pub fn hidden_graph(&self) -> &WeightedGraph {
        &self.hidden
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn size(&self) -> usize {
        self.hidden.size()
    }

    /// Value and the minimal optimal hidden set B.
    pub fn eval_with_witness(&self, a: &[bool]) -> Result<(f64, SubsetMask)> {
        let p = self.size();
        check_dim(p, a.len())?;
        let (s, t) = (p, p + 1);
        let mut net = FlowNetwork::new(p + 2, s, t)?;
        for (k, &in_a) in a.iter().enumerate() {
            if in_a {
                net.add_arc(s, k, self.penalty)?;
            } else {
                net.add_arc(k, t, self.penalty)?;
            }
        }
        for &(i, j, w) in self.hidden.edges() {
            net.add_edge(i, j, w)?;
        }
        let cut = net.min_cut();
        let witness = SubsetMask::from_bools(cut.min_source_side[..p].to_vec());
        Ok((cut.flow, witness))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Cut(WeightedGraph),
    Cardinality(CardinalityProfile),
    NoisyCut(NoisyCutSpec),
    /// Table of G over all 2^p subsets, indexed by bitmask.
    Symmetrized(Vec<f64>),
    /// Table of F over all 2^p subsets, indexed by bitmask.
    Table(Vec<f64>),
}

impl Family {
    pub fn kind(&self) -> &'static str {
        match self {
            Family::Cut(_) => "cut",
            Family::Cardinality(_) => "cardinality",
            Family::NoisyCut(_) => "noisy_cut",
            Family::Symmetrized(_) => "symmetrized",
            Family::Table(_) => "table",
        }
    }
}

/// A normalized set function F on {0, …, p−1}.
#[derive(Clone, Debug, PartialEq)]
pub struct SetFunction {
    ground: GroundSet,
    family: Family,
}

impl SetFunction {
    pub fn cut(graph: WeightedGraph) -> Self {
        Self {
            ground: GroundSet { p: graph.size() },
            family: Family::Cut(graph),
        }
    }

    /// Unit-weight total variation on a chain of length p.
    pub fn chain_tv(p: usize) -> Result<Self> {
        Ok(Self::cut(WeightedGraph::unit_chain(p)?))
    }

    pub fn grid_tv(width: usize, height: usize) -> Result<Self> {
        Ok(Self::cut(WeightedGraph::grid(width, height)?))
    }

    pub fn cardinality(profile: CardinalityProfile) -> Self {
        Self {
            ground: GroundSet { p: profile.size() },
            family: Family::Cardinality(profile),
        }
    }

    pub fn noisy_cut(spec: NoisyCutSpec) -> Self {
        Self {
            ground: GroundSet { p: spec.size() },
            family: Family::NoisyCut(spec),
        }
    }

    /// Symmetrization of G, given as a table over all 2^p subsets.
    pub fn symmetrized(p: usize, g: Vec<f64>) -> Result<Self> {
        check_table(p, &g)?;
        Ok(Self {
            ground: GroundSet::new(p)?,
            family: Family::Symmetrized(g),
        })
    }

    /// Explicit table over all 2^p subsets, indexed by bitmask.
    pub fn table(p: usize, values: Vec<f64>) -> Result<Self> {
        check_table(p, &values)?;
        let full = values.len() - 1;
        if values[0].abs() > VALUE_TOL || values[full].abs() > VALUE_TOL {
            return Err(Error::InvalidFunction(format!(
                "table must vanish on the empty and full sets, got {} and {}",
                values[0], values[full]
            )));
        }
        Ok(Self {
            ground: GroundSet::new(p)?,
            family: Family::Table(values),
        })
    }

    pub fn size(&self) -> usize {
        self.ground.p
    }

    pub fn ground(&self) -> GroundSet {
        self.ground
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn kind(&self) -> &'static str {
        self.family.kind()
    }

    pub fn eval(&self, a: &SubsetMask) -> Result<f64> {
        self.eval_slice(a.as_slice())
    }

    pub fn eval_slice(&self, a: &[bool]) -> Result<f64> {
        check_dim(self.size(), a.len())?;
        Ok(self.value(a))
    }

    /// Unchecked evaluation; `a` must have length p.
    pub fn value(&self, a: &[bool]) -> f64 {
        debug_assert_eq!(a.len(), self.size());
        match &self.family {
            Family::Cut(g) => g.cut_value(a),
            Family::Cardinality(h) => h.at(a.iter().filter(|&&b| b).count()),
            Family::NoisyCut(spec) => spec
                .eval_with_witness(a)
                .map(|(v, _)| v)
                .unwrap_or(f64::NAN),
            Family::Symmetrized(g) => symmetrized_value(g, bits_of(a) as usize),
            Family::Table(t) => t[bits_of(a) as usize],
        }
    }

    /// Evaluation on a bitmask (p ≤ 63).
    pub fn value_bits(&self, bits: u64) -> f64 {
        let p = self.size();
        match &self.family {
            Family::Cut(g) => g
                .edges()
                .iter()
                .filter(|&&(i, j, _)| (bits >> i & 1) != (bits >> j & 1))
                .map(|&(_, _, w)| w)
                .sum(),
            Family::Cardinality(h) => h.at(bits.count_ones() as usize),
            Family::Symmetrized(g) => symmetrized_value(g, bits as usize),
            Family::Table(t) => t[bits as usize],
            Family::NoisyCut(_) => self.value(SubsetMask::from_bits(p, bits).as_slice()),
        }
    }

    /// Noisy-cut value together with the minimal optimal hidden set.
    pub fn eval_noisy_cut(&self, a: &SubsetMask) -> Result<(f64, SubsetMask)> {
        match &self.family {
            Family::NoisyCut(spec) => spec.eval_with_witness(a.as_slice()),
            _ => Err(Error::InvalidArgument(format!(
                "eval_noisy_cut called on a {} function",
                self.kind()
            ))),
        }
    }

    /// Marginal gains of adding `order[0], order[1], …` one by one, starting from `base`.
    /// `out[k]` = F(base ∪ {order[..=k]}) − F(base ∪ {order[..k]}).
    pub fn increments_from(&self, base: &[bool], order: &[usize], out: &mut [f64]) {
        debug_assert_eq!(order.len(), out.len());
        match &self.family {
            Family::Cut(g) => {
                let mut inside = base.to_vec();
                for (k, &e) in order.iter().enumerate() {
                    let mut d = 0.0;
                    for &(j, w) in g.neighbors(e) {
                        if inside[j] {
                            d -= w;
                        } else {
                            d += w;
                        }
                    }
                    inside[e] = true;
                    out[k] = d;
                }
            }
            Family::Cardinality(h) => {
                let b = base.iter().filter(|&&x| x).count();
                for (k, o) in out.iter_mut().enumerate().take(order.len()) {
                    *o = h.at(b + k + 1) - h.at(b + k);
                }
            }
            Family::Symmetrized(_) | Family::Table(_) => {
                let mut bits = bits_of(base);
                let mut prev = self.value_bits(bits);
                for (k, &e) in order.iter().enumerate() {
                    bits |= 1 << e;
                    let cur = self.value_bits(bits);
                    out[k] = cur - prev;
                    prev = cur;
                }
            }
            Family::NoisyCut(_) => {
                let mut inside = base.to_vec();
                let mut prev = self.value(&inside);
                for (k, &e) in order.iter().enumerate() {
                    inside[e] = true;
                    let cur = self.value(&inside);
                    out[k] = cur - prev;
                    prev = cur;
                }
            }
        }
    }

    /// All 2^p values indexed by bitmask.
    pub fn tabulate(&self) -> Result<Vec<f64>> {
        guard("tabulate", MAX_TABLE_P, self.size())?;
        let n = 1usize << self.size();
        Ok((0..n as u64).map(|b| self.value_bits(b)).collect())
    }
}

fn check_table(p: usize, values: &[f64]) -> Result<()> {
    GroundSet::new(p)?;
    guard("set-function table", MAX_TABLE_P, p)?;
    if values.len() != 1 << p {
        return Err(Error::InvalidFunction(format!(
            "table for p = {p} needs {} entries, got {}",
            1usize << p,
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidFunction("table values must be finite".into()));
    }
    Ok(())
}

fn symmetrized_value(g: &[f64], idx: usize) -> f64 {
    let full = g.len() - 1;
    g[idx] + g[full ^ idx] - g[0] - g[full]
}

/// Violation found by [`check_axioms`].
#[derive(Clone, Debug, PartialEq)]
pub enum AxiomWitness {
    /// F(A) + F(B) < F(A ∪ B) + F(A ∩ B).
    Submodularity { a: SubsetMask, b: SubsetMask },
    /// F(A) ≠ F(V∖A).
    Symmetry { a: SubsetMask },
    /// F(A) < 0.
    Negative { a: SubsetMask },
}

#[derive(Clone, Debug, PartialEq)]
pub struct AxiomReport {
    pub submodular: bool,
    pub symmetric: bool,
    pub nonnegative: bool,
    /// First violation found, checking sign, then submodularity, then symmetry.
    pub witness: Option<AxiomWitness>,
}

/// Largest ground set for the exhaustive axiom check.
pub const MAX_AXIOM_P: usize = 20;

/// Exhaustive check of submodularity, symmetry and non-negativity.
///
/// Submodularity is tested through the equivalent second-order condition
/// F(A+i) + F(A+j) ≥ F(A+i+j) + F(A) for all A and i ≠ j outside A.
pub fn check_axioms(f: &SetFunction) -> Result<AxiomReport> {
    let p = f.size();
    guard("check_axioms", MAX_AXIOM_P, p)?;
    let table = f.tabulate()?;
    let full = (1usize << p) - 1;

    let neg = (0..=full).find(|&a| table[a] < -VALUE_TOL);
    let mut witness = neg.map(|a| AxiomWitness::Negative {
        a: SubsetMask::from_bits(p, a as u64),
    });

    let mut submodular = true;
    'outer: for a in 0..=full {
        for i in 0..p {
            if a >> i & 1 == 1 {
                continue;
            }
            for j in i + 1..p {
                if a >> j & 1 == 1 {
                    continue;
                }
                let (ai, aj, aij) = (a | 1 << i, a | 1 << j, a | 1 << i | 1 << j);
                if table[ai] + table[aj] < table[aij] + table[a] - VALUE_TOL {
                    submodular = false;
                    witness.get_or_insert(AxiomWitness::Submodularity {
                        a: SubsetMask::from_bits(p, ai as u64),
                        b: SubsetMask::from_bits(p, aj as u64),
                    });
                    break 'outer;
                }
            }
        }
    }

    let asym = (0..=full).find(|&a| (table[a] - table[full ^ a]).abs() > VALUE_TOL);
    if let Some(a) = asym {
        witness.get_or_insert(AxiomWitness::Symmetry {
            a: SubsetMask::from_bits(p, a as u64),
        });
    }

    Ok(AxiomReport {
        submodular,
        symmetric: asym.is_none(),
        nonnegative: neg.is_none(),
        witness,
    })
}

/// Largest set for exhaustive partition search.
pub const MAX_PARTITION_SEARCH: usize = 20;

/// Whether A admits no split A = B ∪ C (both nonempty) with F(A) = F(B) + F(C).
pub fn is_inseparable(f: &SetFunction, a: &SubsetMask) -> Result<bool> {
    check_dim(f.size(), a.len())?;
    let set = a.indices();
    if set.is_empty() {
        return Err(Error::InvalidArgument(
            "inseparability is defined for nonempty sets".into(),
        ));
    }
    is_inseparable_in(f, &vec![false; f.size()], &set)
}

/// Inseparability of `set` for the contracted function C ↦ F(base ∪ C) − F(base).
///
/// For cuts the contraction differs from an induced cut by a modular term, so
/// inseparability reduces to connectivity of the induced subgraph.
pub fn is_inseparable_in(f: &SetFunction, base: &[bool], set: &[usize]) -> Result<bool> {
    check_dim(f.size(), base.len())?;
    if set.len() <= 1 {
        return Ok(true);
    }
    if let Family::Cut(g) = f.family() {
        let mut members = vec![false; f.size()];
        for &i in set {
            members[i] = true;
        }
        return Ok(g.is_connected_subset(&members));
    }
    if let Family::Cardinality(h) = f.family() {
        // Splits of equal sizes have equal values, so only |C| matters.
        let b = base.iter().filter(|&&x| x).count();
        let n = set.len();
        let g = |k: usize| h.at(b + k) - h.at(b);
        return Ok((1..n).all(|k| (g(k) + g(n - k) - g(n)).abs() > VALUE_TOL));
    }
    guard("is_inseparable", MAX_PARTITION_SEARCH, set.len())?;
    let m = Minor::new(f, base.to_vec(), set.to_vec());
    let n = set.len();
    let full = (1u64 << n) - 1;
    let total = m.value_bits(full);
    // Fix the last element in C to visit each unordered split once.
    let half = 1u64 << (n - 1);
    for b in 1..half {
        let c = full ^ b;
        if (m.value_bits(b) + m.value_bits(c) - total).abs() <= VALUE_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The contraction/restriction C ↦ F(base ∪ C) − F(base) for C ⊆ `ground`,
/// where `base` and `ground` are disjoint. Local index k refers to `ground[k]`.
#[derive(Clone, Debug)]
pub struct Minor<'a> {
    f: &'a SetFunction,
    base: Vec<bool>,
    ground: Vec<usize>,
    base_value: f64,
}

impl<'a> Minor<'a> {
    pub fn new(f: &'a SetFunction, base: Vec<bool>, ground: Vec<usize>) -> Self {
        debug_assert!(ground.iter().all(|&g| !base[g]));
        let base_value = f.value(&base);
        Self {
            f,
            base,
            ground,
            base_value,
        }
    }

    pub fn whole(f: &'a SetFunction) -> Self {
        Self::new(f, vec![false; f.size()], (0..f.size()).collect())
    }

    pub fn function(&self) -> &'a SetFunction {
        self.f
    }

    pub fn base(&self) -> &[bool] {
        &self.base
    }

    pub fn ground(&self) -> &[usize] {
        &self.ground
    }

    pub fn size(&self) -> usize {
        self.ground.len()
    }

    pub fn base_value(&self) -> f64 {
        self.base_value
    }

    fn lift(&self, local: &[bool]) -> Vec<bool> {
        let mut full = self.base.clone();
        for (k, &g) in self.ground.iter().enumerate() {
            if local[k] {
                full[g] = true;
            }
        }
        full
    }

    /// Value on a local mask of length `size()`.
    pub fn value(&self, local: &[bool]) -> f64 {
        self.f.value(&self.lift(local)) - self.base_value
    }

    /// Value on a local bitmask (size ≤ 63).
    pub fn value_bits(&self, bits: u64) -> f64 {
        match self.f.family() {
            Family::NoisyCut(_) => {
                let local: Vec<bool> = (0..self.size()).map(|k| bits >> k & 1 == 1).collect();
                self.value(&local)
            }
            _ if self.f.size() <= 63 => {
                let mut full = bits_of(&self.base);
                for (k, &g) in self.ground.iter().enumerate() {
                    if bits >> k & 1 == 1 {
                        full |= 1 << g;
                    }
                }
                self.f.value_bits(full) - self.base_value
            }
            _ => {
                let local: Vec<bool> = (0..self.size()).map(|k| bits >> k & 1 == 1).collect();
                self.value(&local)
            }
        }
    }

    /// Marginal gains along a local order.
    pub fn increments(&self, order: &[usize], out: &mut [f64]) {
        let global: Vec<usize> = order.iter().map(|&k| self.ground[k]).collect();
        self.f.increments_from(&self.base, &global, out);
    }

    /// Restriction to the local subset `keep`.
    pub fn restrict(&self, keep: &[bool]) -> Minor<'a> {
        let ground = self
            .ground
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(&g, _)| g)
            .collect();
        Minor {
            f: self.f,
            base: self.base.clone(),
            ground,
            base_value: self.base_value,
        }
    }

    /// Contraction by the local subset `taken`: the remaining elements, with `taken` added to the base.
    pub fn contract(&self, taken: &[bool]) -> Minor<'a> {
        let base = self.lift(taken);
        let ground = self
            .ground
            .iter()
            .zip(taken)
            .filter(|(_, &k)| !k)
            .map(|(&g, _)| g)
            .collect();
        Minor::new(self.f, base, ground)
    }
}
