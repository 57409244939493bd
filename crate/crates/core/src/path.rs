//! Agglomerative regularization paths λ ↦ prox_{λf}(z) and the condition that
//! makes them agglomerative.
//!
//! Along the path each constant block A_i has value mean(z on A_i) − λ·t_i/|A_i|,
//! with t_i the increment of F over the blocks above it. The tracker advances λ
//! to the next collision of neighbouring blocks in the current order. Colliding
//! blocks merge when their union is inseparable for the function contracted by
//! the blocks above them; otherwise they are independent and simply swap places,
//! which leaves every block's value unchanged.

use crate::error::{check_dim, guard, Error, Result};
use crate::lattice::OrderedPartition;
use crate::lovasz::decreasing_order;
use crate::prox::{certify_lattice, extract_lattice, LATTICE_REL_TOL};
use crate::setfn::{is_inseparable_in, SetFunction, SubsetMask, VALUE_TOL};

/// Collisions closer than this (relative to the scale of λ) are simultaneous.
pub const EVENT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct MergeEvent {
    pub lambda: f64,
    /// Ids of the merged blocks (upper first) and of the block they form. Element i
    /// starts as block i; merged blocks get ids p, p + 1, … in merge order.
    pub upper: usize,
    pub lower: usize,
    pub merged: usize,
}

/// An interval of λ on which w(λ) is affine.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSegment {
    pub lambda_start: f64,
    /// `f64::INFINITY` for the last segment.
    pub lambda_end: f64,
    pub block_ids: Vec<usize>,
    pub blocks: Vec<Vec<usize>>,
    pub means: Vec<f64>,
    /// d v_i / dλ = −t_i/|A_i|.
    pub slopes: Vec<f64>,
}

impl PathSegment {
    pub fn values_at(&self, lambda: f64) -> Vec<f64> {
        self.means
            .iter()
            .zip(&self.slopes)
            .map(|(m, s)| m + lambda * s)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathResult {
    pub p: usize,
    /// Increasing λ > 0 at which blocks merge.
    pub breakpoints: Vec<f64>,
    pub merges: Vec<MergeEvent>,
    pub segments: Vec<PathSegment>,
}

impl PathResult {
    pub fn segment_at(&self, lambda: f64) -> &PathSegment {
        self.segments
            .iter()
            .find(|s| lambda <= s.lambda_end)
            .unwrap_or_else(|| self.segments.last().expect("path has a segment"))
    }

    /// w(λ) assembled from the affine block values.
    pub fn evaluate(&self, lambda: f64) -> Vec<f64> {
        let seg = self.segment_at(lambda);
        let v = seg.values_at(lambda);
        let mut w = vec![0.0; self.p];
        for (block, val) in seg.blocks.iter().zip(v) {
            for &e in block {
                w[e] = val;
            }
        }
        w
    }

    /// Number of blocks at λ.
    pub fn block_count(&self, lambda: f64) -> usize {
        self.segment_at(lambda).blocks.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathOptions {
    /// Certify the lattice inside every segment.
    pub certify: bool,
    /// Tolerance for the base-polyhedron part of certification.
    pub certify_tol: f64,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self {
            certify: true,
            certify_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug)]
struct Block {
    id: usize,
    members: Vec<usize>,
    zsum: f64,
    t: f64,
}

impl Block {
    fn mean(&self) -> f64 {
        self.zsum / self.members.len() as f64
    }

    fn slope(&self) -> f64 {
        -self.t / self.members.len() as f64
    }

    fn value(&self, lambda: f64) -> f64 {
        self.mean() + lambda * self.slope()
    }
}

fn recompute_t(f: &SetFunction, blocks: &mut [Block], from: usize) {
    let p = f.size();
    let mut prefix = vec![false; p];
    for b in &blocks[..from] {
        for &e in &b.members {
            prefix[e] = true;
        }
    }
    let mut prev = f.value(&prefix);
    for b in &mut blocks[from..] {
        for &e in &b.members {
            prefix[e] = true;
        }
        let cur = f.value(&prefix);
        b.t = cur - prev;
        prev = cur;
    }
}

fn snapshot(blocks: &[Block], start: f64, end: f64) -> PathSegment {
    PathSegment {
        lambda_start: start,
        lambda_end: end,
        block_ids: blocks.iter().map(|b| b.id).collect(),
        blocks: blocks.iter().map(|b| b.members.clone()).collect(),
        means: blocks.iter().map(Block::mean).collect(),
        slopes: blocks.iter().map(Block::slope).collect(),
    }
}

/// Tracks the agglomerative path from λ = 0 until a single block remains.
pub fn prox_path_agglomerative(
    f: &SetFunction,
    z: &[f64],
    options: PathOptions,
) -> Result<PathResult> {
    check_dim(f.size(), z.len())?;
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("z has non-finite entries".into()));
    }
    let p = f.size();
    let order = decreasing_order(z);
    let mut blocks: Vec<Block> = order
        .iter()
        .map(|&i| Block {
            id: i,
            members: vec![i],
            zsum: z[i],
            t: 0.0,
        })
        .collect();
    recompute_t(f, &mut blocks, 0);
    let mut next_id = p;
    let mut lambda = 0.0f64;
    let mut seg_start = 0.0f64;
    let mut raw_segments: Vec<PathSegment> = Vec::new();
    let mut merges = Vec::new();
    let max_events = 4 * p * p + 16;
    let mut events = 0;

    loop {
        // Earliest collision among neighbours.
        let mut best: Option<(f64, usize)> = None;
        for i in 0..blocks.len().saturating_sub(1) {
            let (a, b) = (&blocks[i], &blocks[i + 1]);
            let d = a.value(lambda) - b.value(lambda);
            let rate = a.slope() - b.slope();
            let scale = 1.0 + a.mean().abs().max(b.mean().abs());
            let at = if d <= EVENT_TOL * scale {
                if rate < 0.0 || (rate == 0.0 && d < -EVENT_TOL * scale) {
                    lambda
                } else {
                    continue;
                }
            } else if rate < 0.0 {
                lambda + d / -rate
            } else {
                continue;
            };
            if best.is_none_or(|(bl, _)| at < bl - EVENT_TOL * (1.0 + at.abs())) {
                best = Some((at, i));
            }
        }
        let Some((at, i)) = best else {
            raw_segments.push(snapshot(&blocks, seg_start, f64::INFINITY));
            break;
        };
        events += 1;
        if events > max_events {
            return Err(Error::Numerical(format!(
                "path tracking did not terminate after {max_events} events"
            )));
        }
        if at > seg_start {
            raw_segments.push(snapshot(&blocks, seg_start, at));
            seg_start = at;
        }
        lambda = at;

        let mut base = vec![false; p];
        for b in &blocks[..i] {
            for &e in &b.members {
                base[e] = true;
            }
        }
        let mut union = blocks[i].members.clone();
        union.extend_from_slice(&blocks[i + 1].members);
        if is_inseparable_in(f, &base, &union)? {
            let lower = blocks.remove(i + 1);
            let upper = &mut blocks[i];
            merges.push(MergeEvent {
                lambda,
                upper: upper.id,
                lower: lower.id,
                merged: next_id,
            });
            upper.id = next_id;
            next_id += 1;
            upper.members.extend(lower.members);
            upper.members.sort_unstable();
            upper.zsum += lower.zsum;
            upper.t += lower.t;
        } else {
            blocks.swap(i, i + 1);
            recompute_t(f, &mut blocks, i);
        }
    }

    // Crossings do not change any block value; fold segments with equal blocks.
    let mut segments: Vec<PathSegment> = Vec::new();
    for seg in raw_segments {
        match segments.last_mut() {
            Some(last) if same_blocks(last, &seg) => last.lambda_end = seg.lambda_end,
            _ => segments.push(seg),
        }
    }
    let mut breakpoints: Vec<f64> = Vec::new();
    for m in &merges {
        if m.lambda > 0.0
            && breakpoints
                .last()
                .is_none_or(|&b| m.lambda - b > EVENT_TOL * (1.0 + b))
        {
            breakpoints.push(m.lambda);
        }
    }
    let result = PathResult {
        p,
        breakpoints,
        merges,
        segments,
    };
    if options.certify {
        certify_path(f, z, &result, options.certify_tol)?;
    }
    Ok(result)
}

fn same_blocks(a: &PathSegment, b: &PathSegment) -> bool {
    let mut x = a.blocks.clone();
    let mut y = b.blocks.clone();
    x.sort();
    y.sort();
    x == y
}

/// Certifies every segment: block order at an interior point, dual membership in
/// B(F) at both finite ends. The dual is affine in 1/λ on a segment, so membership
/// at the ends extends to the whole segment.
pub fn certify_path(f: &SetFunction, z: &[f64], path: &PathResult, tol: f64) -> Result<()> {
    let ztol = LATTICE_REL_TOL * z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let fail = |lambda: f64, order_ok: bool, base_ok: bool| {
        Error::CertificationFailed(format!(
            "path lattice at lambda = {lambda} fails the optimality conditions \
             (order_ok = {order_ok}, base_ok = {base_ok}); the function is not agglomerative here"
        ))
    };
    for seg in &path.segments {
        let lambda = if seg.lambda_end.is_finite() {
            if seg.lambda_end <= seg.lambda_start {
                continue;
            }
            0.5 * (seg.lambda_start + seg.lambda_end)
        } else {
            seg.lambda_start + 1.0
        };
        let w = path.evaluate(lambda);
        let lattice = extract_lattice(&w, ztol);
        let cert = certify_lattice(f, z, lambda, &lattice, tol)?;
        if !(cert.order_ok && cert.base_ok) {
            return Err(fail(lambda, cert.order_ok, cert.base_ok));
        }
        for end in [seg.lambda_start, seg.lambda_end] {
            if end > 0.0 && end.is_finite() {
                let cert = certify_lattice(f, z, end, &lattice, tol)?;
                if !cert.base_ok {
                    return Err(fail(end, true, false));
                }
            }
        }
    }
    Ok(())
}

/// F(B ∪ C) − F(B) − (|C|/|A|)·(F(B ∪ A) − F(B)).
pub fn agglo_margin(
    f: &SetFunction,
    a: &SubsetMask,
    b: &SubsetMask,
    c: &SubsetMask,
) -> Result<f64> {
    check_dim(f.size(), a.len())?;
    check_dim(f.size(), b.len())?;
    check_dim(f.size(), c.len())?;
    let na = a.count();
    if na == 0 {
        return Err(Error::InvalidArgument("A must be nonempty".into()));
    }
    let fb = f.eval(b)?;
    let fbc = f.eval(&b.union(c))?;
    let fba = f.eval(&b.union(a))?;
    Ok(fbc - fb - (c.count() as f64 / na as f64) * (fba - fb))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggloReport {
    pub holds: bool,
    /// (A, B, C) attaining the worst margin.
    pub witness: Option<(SubsetMask, SubsetMask, SubsetMask)>,
    pub worst_margin: f64,
}

pub const MAX_AGGLO_P: usize = 12;

/// Minimum of the agglomerativity margin over disjoint A, B with A inseparable
/// for D ↦ F(B ∪ D) − F(B), and nonempty C ⊊ A.
pub fn check_agglo_condition(f: &SetFunction) -> Result<AggloReport> {
    let p = f.size();
    guard("check_agglo_condition", MAX_AGGLO_P, p)?;
    let t = f.tabulate()?;
    let full = (1usize << p) - 1;
    let mut worst = f64::INFINITY;
    let mut witness = None;
    for b in 0..=full {
        let rest = full ^ b;
        let fb = t[b];
        let mut a = rest;
        while a > 0 {
            let na = a.count_ones() as f64;
            let ga = t[b | a] - fb;
            let mut local_worst = f64::INFINITY;
            let mut local_c = 0usize;
            let mut separable = false;
            // Proper nonempty submasks C of A.
            let mut c = (a - 1) & a;
            while c > 0 {
                let gc = t[b | c] - fb;
                let gd = t[b | (a ^ c)] - fb;
                if (gc + gd - ga).abs() <= VALUE_TOL {
                    separable = true;
                    break;
                }
                let margin = gc - (c.count_ones() as f64 / na) * ga;
                if margin < local_worst {
                    local_worst = margin;
                    local_c = c;
                }
                c = (c - 1) & a;
            }
            if !separable && local_worst < worst {
                worst = local_worst;
                witness = Some((
                    SubsetMask::from_bits(p, a as u64),
                    SubsetMask::from_bits(p, b as u64),
                    SubsetMask::from_bits(p, local_c as u64),
                ));
            }
            a = (a - 1) & rest;
        }
    }
    Ok(AggloReport {
        holds: worst >= -VALUE_TOL,
        witness,
        worst_margin: worst,
    })
}

/// Lattice of the path at λ, as extracted from w(λ).
pub fn lattice_at(path: &PathResult, z: &[f64], lambda: f64) -> OrderedPartition {
    let ztol = LATTICE_REL_TOL * z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    extract_lattice(&path.evaluate(lambda), ztol)
}
