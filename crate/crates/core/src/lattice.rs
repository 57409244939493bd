//! Ordered partitions: disjoint blocks covering V together with a strict partial
//! order saying which blocks carry larger values.
//!
//! Blocks are indexed in a topological order with higher-valued blocks first:
//! a relation `(i, j)` means A_i ≻ A_j and always has i < j. The up-sets of the
//! poset (unions of blocks closed under taking higher blocks) are the level sets
//! the partition allows.

use crate::error::{guard, Error, Result};
use crate::setfn::SubsetMask;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderedPartition {
    p: usize,
    blocks: Vec<Vec<usize>>,
    relations: Vec<(usize, usize)>,
}

/// Largest number of up-sets enumerated by [`OrderedPartition::up_sets`].
pub const MAX_UP_SETS: usize = 1 << 20;

impl OrderedPartition {
    /// Validates that the blocks partition {0, …, p−1} and that `relations` is
    /// acyclic and consistent with the block indexing. The relation is stored as given;
    /// use [`closure`](Self::closure) for the full order.
    pub fn new(p: usize, blocks: Vec<Vec<usize>>, relations: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = vec![false; p];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidArgument(format!("block {b} is empty")));
            }
            for &i in block {
                if i >= p {
                    return Err(Error::InvalidArgument(format!(
                        "element {i} outside ground set of size {p}"
                    )));
                }
                if seen[i] {
                    return Err(Error::InvalidArgument(format!(
                        "element {i} appears in more than one block"
                    )));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|&s| !s) {
            return Err(Error::InvalidArgument(format!(
                "element {i} is in no block"
            )));
        }
        let m = blocks.len();
        for &(i, j) in &relations {
            if i >= m || j >= m {
                return Err(Error::InvalidArgument(format!(
                    "relation ({i}, {j}) refers to a missing block"
                )));
            }
            if i >= j {
                return Err(Error::InvalidArgument(format!(
                    "relation ({i}, {j}) is not compatible with the higher-first block indexing"
                )));
            }
        }
        let blocks = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        let mut relations = relations;
        relations.sort_unstable();
        relations.dedup();
        Ok(Self {
            p,
            blocks,
            relations,
        })
    }

    /// Blocks in a chain A_0 ≻ A_1 ≻ … .
    pub fn total(p: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let rel = (1..blocks.len()).map(|j| (j - 1, j)).collect();
        Self::new(p, blocks, rel)
    }

    /// The single block V.
    pub fn trivial(p: usize) -> Self {
        Self {
            p,
            blocks: vec![(0..p).collect()],
            relations: Vec::new(),
        }
    }

    /// Singletons ordered by index.
    pub fn singletons(p: usize) -> Self {
        Self {
            p,
            blocks: (0..p).map(|i| vec![i]).collect(),
            relations: (1..p).map(|j| (j - 1, j)).collect(),
        }
    }

    pub fn ground_size(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block(&self, j: usize) -> &[usize] {
        &self.blocks[j]
    }

    pub fn relations(&self) -> &[(usize, usize)] {
        &self.relations
    }

    pub fn block_mask(&self, j: usize) -> SubsetMask {
        let mut m = SubsetMask::empty(self.p);
        for &i in &self.blocks[j] {
            m.set(i, true);
        }
        m
    }

    /// `out[i]` = index of the block containing element i.
    pub fn block_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.p];
        for (b, block) in self.blocks.iter().enumerate() {
            for &i in block {
                out[i] = b;
            }
        }
        out
    }

    /// Transitive closure as an m×m matrix: `c[i][j]` iff A_i ≻ A_j.
    pub fn closure(&self) -> Vec<Vec<bool>> {
        let m = self.blocks.len();
        let mut c = vec![vec![false; m]; m];
        for &(i, j) in &self.relations {
            c[i][j] = true;
        }
        // Relations go from lower to higher indices, so one backward sweep closes them.
        for j in (0..m).rev() {
            for i in (0..j).rev() {
                if c[i][j] {
                    let (head, tail) = c.split_at_mut(j);
                    for (dst, &src) in head[i][j + 1..].iter_mut().zip(&tail[0][j + 1..]) {
                        *dst |= src;
                    }
                }
            }
        }
        c
    }

    /// Whether every pair of blocks is comparable.
    pub fn is_total(&self) -> bool {
        let c = self.closure();
        let m = self.blocks.len();
        (0..m).all(|i| (i + 1..m).all(|j| c[i][j]))
    }

    /// Union of all blocks strictly above block j.
    pub fn ancestors_mask(&self, j: usize) -> Vec<bool> {
        let c = self.closure();
        let mut m = vec![false; self.p];
        for (i, row) in c.iter().enumerate() {
            if row[j] {
                for &e in &self.blocks[i] {
                    m[e] = true;
                }
            }
        }
        m
    }

    /// Union of blocks 0..j (the prefix preceding block j in index order).
    pub fn prefix_mask(&self, j: usize) -> Vec<bool> {
        let mut m = vec![false; self.p];
        for block in &self.blocks[..j] {
            for &e in block {
                m[e] = true;
            }
        }
        m
    }

    /// All up-sets of the poset as block-membership vectors, including ∅ and all blocks.
    pub fn up_sets(&self) -> Result<Vec<Vec<bool>>> {
        let m = self.blocks.len();
        let c = self.closure();
        let mut out = Vec::new();
        let mut current = vec![false; m];
        // Decide blocks in index order; block j may be included only if all its ancestors are.
        fn rec(
            j: usize,
            c: &[Vec<bool>],
            current: &mut Vec<bool>,
            out: &mut Vec<Vec<bool>>,
        ) -> Result<()> {
            let m = current.len();
            if j == m {
                guard("up-set enumeration", MAX_UP_SETS, out.len() + 1)?;
                out.push(current.clone());
                return Ok(());
            }
            rec(j + 1, c, current, out)?;
            if (0..j).all(|i| !c[i][j] || current[i]) {
                current[j] = true;
                rec(j + 1, c, current, out)?;
                current[j] = false;
            }
            Ok(())
        }
        rec(0, &c, &mut current, &mut out)?;
        Ok(out)
    }

    /// Element mask of a union of blocks.
    pub fn union_mask(&self, blocks: &[bool]) -> Vec<bool> {
        let mut m = vec![false; self.p];
        for (b, &inc) in blocks.iter().enumerate() {
            if inc {
                for &e in &self.blocks[b] {
                    m[e] = true;
                }
            }
        }
        m
    }

    /// The blocks as a sorted list of sorted index lists, ignoring order.
    pub fn unordered_key(&self) -> Vec<Vec<usize>> {
        let mut key = self.blocks.clone();
        key.sort();
        key
    }

    /// Assembles a vector constant on blocks.
    pub fn assemble(&self, values: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.p];
        for (b, block) in self.blocks.iter().enumerate() {
            for &e in block {
                w[e] = values[b];
            }
        }
        w
    }

    /// Same blocks with a different relation.
    pub fn with_relations(&self, relations: Vec<(usize, usize)>) -> Result<Self> {
        Self::new(self.p, self.blocks.clone(), relations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(OrderedPartition::new(3, vec![vec![0], vec![1]], vec![]).is_err());
        assert!(OrderedPartition::new(2, vec![vec![0, 1], vec![1]], vec![]).is_err());
        assert!(OrderedPartition::new(2, vec![vec![0], vec![1]], vec![(1, 0)]).is_err());
        assert!(OrderedPartition::new(2, vec![vec![0], vec![1]], vec![(0, 1)]).is_ok());
    }

    #[test]
    fn closure_and_up_sets_of_chain() {
        let part = OrderedPartition::singletons(3);
        let c = part.closure();
        assert!(c[0][2]);
        let ups = part.up_sets().unwrap();
        assert_eq!(ups.len(), 4);
    }

    #[test]
    fn up_sets_of_antichain() {
        let part = OrderedPartition::new(3, vec![vec![0], vec![1], vec![2]], vec![]).unwrap();
        assert_eq!(part.up_sets().unwrap().len(), 8);
        assert!(!part.is_total());
    }

    #[test]
    fn up_sets_of_diamond() {
        // 0 ≻ 1, 0 ≻ 2, 1 ≻ 3, 2 ≻ 3: ∅, {0}, {0,1}, {0,2}, {0,1,2}, all.
        let part = OrderedPartition::new(
            4,
            vec![vec![0], vec![1], vec![2], vec![3]],
            vec![(0, 1), (0, 2), (1, 3), (2, 3)],
        )
        .unwrap();
        assert_eq!(part.up_sets().unwrap().len(), 6);
        assert_eq!(part.ancestors_mask(3), vec![true, true, true, false]);
    }

    #[test]
    fn assemble_and_keys() {
        let part = OrderedPartition::total(3, vec![vec![2, 0], vec![1]]).unwrap();
        assert_eq!(part.block(0), &[0, 2]);
        assert_eq!(part.assemble(&[5.0, 1.0]), vec![5.0, 1.0, 5.0]);
        assert_eq!(part.block_of(), vec![0, 1, 0]);
    }
}
