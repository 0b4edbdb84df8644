//! Non-crossing partitions of `{1..r}`: enumeration, refinement order,
//! Kreweras complement and the Möbius function to the top element.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Default cap on the ground-set size handled by enumeration.
pub const DEFAULT_R_MAX: usize = 16;

/// A non-crossing partition in canonical form: blocks sorted internally and
/// ordered by their minima. Points are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NCPartition {
    r: usize,
    blocks: Vec<Vec<usize>>,
}

impl NCPartition {
    /// Validates and canonicalizes `blocks` as a non-crossing partition of `{1..r}`.
    pub fn new(r: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let blocks = canonical_blocks(r, blocks)?;
        if !crossing_free(&blocks, r) {
            return domain(format!("blocks {blocks:?} are crossing"));
        }
        Ok(Self { r, blocks })
    }

    fn from_canonical(r: usize, blocks: Vec<Vec<usize>>) -> Self {
        Self { r, blocks }
    }

    /// The minimum `0_r`: all singletons.
    pub fn singletons(r: usize) -> Self {
        Self::from_canonical(r, (1..=r).map(|i| vec![i]).collect())
    }

    /// The maximum `1_r`: one block.
    pub fn one_block(r: usize) -> Self {
        Self::from_canonical(r, vec![(1..=r).collect()])
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().map(Vec::len)
    }

    /// `block_index()[i-1]` is the index of the block containing point `i`.
    pub fn block_index(&self) -> Vec<usize> {
        let mut idx = vec![0; self.r];
        for (b, block) in self.blocks.iter().enumerate() {
            for &i in block {
                idx[i - 1] = b;
            }
        }
        idx
    }
}

impl fmt::Display for NCPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, block) in self.blocks.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            f.write_str("{")?;
            for (j, i) in block.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{i}")?;
            }
            f.write_str("}")?;
        }
        f.write_str("}")
    }
}

fn canonical_blocks(r: usize, mut blocks: Vec<Vec<usize>>) -> Result<Vec<Vec<usize>>> {
    if r == 0 {
        return domain("ground set must be nonempty");
    }
    let mut seen = vec![false; r];
    for block in &mut blocks {
        if block.is_empty() {
            return domain("empty block");
        }
        block.sort_unstable();
        for &i in block.iter() {
            if i == 0 || i > r {
                return domain(format!("point {i} outside 1..{r}"));
            }
            if seen[i - 1] {
                return domain(format!("point {i} appears twice"));
            }
            seen[i - 1] = true;
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return domain(format!("point {} not covered", missing + 1));
    }
    blocks.sort_unstable_by_key(|b| b[0]);
    Ok(blocks)
}

fn crossing_free(blocks: &[Vec<usize>], r: usize) -> bool {
    let mut owner = vec![0usize; r + 1];
    for (b, block) in blocks.iter().enumerate() {
        for &i in block {
            owner[i] = b;
        }
    }
    // a < b < c < d with a,c in one block and b,d in another.
    for a in 1..=r {
        for b in a + 1..=r {
            if owner[b] == owner[a] {
                continue;
            }
            for c in b + 1..=r {
                if owner[c] != owner[a] {
                    continue;
                }
                for d in c + 1..=r {
                    if owner[d] == owner[b] {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// True iff `blocks` (a partition of `{1..r}`) has no crossing quadruple.
pub fn is_noncrossing(r: usize, blocks: &[Vec<usize>]) -> Result<bool> {
    let canonical = canonical_blocks(r, blocks.to_vec())?;
    Ok(crossing_free(&canonical, r))
}

/// All non-crossing partitions of `{1..r}` with the default cap.
pub fn enumerate_nc(r: usize) -> Result<Arc<Vec<NCPartition>>> {
    enumerate_nc_capped(r, DEFAULT_R_MAX)
}

/// All of `NC(r)`, lexicographically ordered by canonical block form.
/// Tables are memoized per `r`.
pub fn enumerate_nc_capped(r: usize, r_max: usize) -> Result<Arc<Vec<NCPartition>>> {
    if r == 0 || r > r_max {
        return domain(format!("r = {r} outside 1..={r_max}"));
    }
    static TABLES: OnceLock<Mutex<HashMap<usize, Arc<Vec<NCPartition>>>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(table) = tables.lock().expect("nc table lock").get(&r) {
        return Ok(Arc::clone(table));
    }
    let points: Vec<usize> = (1..=r).collect();
    let mut all: Vec<NCPartition> = partitions_of_interval(&points)
        .into_iter()
        .map(|mut blocks| {
            blocks.sort_unstable_by_key(|b| b[0]);
            NCPartition::from_canonical(r, blocks)
        })
        .collect();
    all.sort_unstable();
    let table = Arc::new(all);
    tables
        .lock()
        .expect("nc table lock")
        .entry(r)
        .or_insert_with(|| Arc::clone(&table));
    Ok(table)
}

/// Non-crossing partitions of a run of consecutive points.
fn partitions_of_interval(points: &[usize]) -> Vec<Vec<Vec<usize>>> {
    if points.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    extend_first_block(vec![points[0]], &points[1..], Vec::new(), &mut out);
    out
}

/// Grows the block of the first point; each skipped gap is partitioned
/// independently, which is exactly the non-crossing condition.
fn extend_first_block(
    block: Vec<usize>,
    rest: &[usize],
    done: Vec<Vec<usize>>,
    out: &mut Vec<Vec<Vec<usize>>>,
) {
    // Close the block: the tail is an independent interval.
    for tail in partitions_of_interval(rest) {
        let mut blocks = done.clone();
        blocks.push(block.clone());
        blocks.extend(tail);
        out.push(blocks);
    }
    for j in 0..rest.len() {
        let mut next_block = block.clone();
        next_block.push(rest[j]);
        for gap in partitions_of_interval(&rest[..j]) {
            let mut next_done = done.clone();
            next_done.extend(gap);
            extend_first_block(next_block.clone(), &rest[j + 1..], next_done, out);
        }
    }
}

/// Refinement order: every block of `sigma` lies inside a block of `pi`.
pub fn leq(sigma: &NCPartition, pi: &NCPartition) -> Result<bool> {
    if sigma.r != pi.r {
        return domain(format!("size mismatch: {} vs {}", sigma.r, pi.r));
    }
    let owner = pi.block_index();
    Ok(sigma
        .blocks
        .iter()
        .all(|block| block.iter().all(|&i| owner[i - 1] == owner[block[0] - 1])))
}

/// Kreweras complement `K(π) = π⁻¹ γ`, with `γ = (1 2 … r)` and π read as
/// the permutation cycling each block in increasing order.
pub fn kreweras(pi: &NCPartition) -> NCPartition {
    let r = pi.r;
    let mut inverse = vec![0usize; r + 1];
    for block in &pi.blocks {
        for (k, &i) in block.iter().enumerate() {
            let next = block[(k + 1) % block.len()];
            inverse[next] = i;
        }
    }
    let complement = |i: usize| inverse[i % r + 1];
    let mut visited = vec![false; r + 1];
    let mut blocks = Vec::new();
    for start in 1..=r {
        if visited[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut i = start;
        while !visited[i] {
            visited[i] = true;
            cycle.push(i);
            i = complement(i);
        }
        cycle.sort_unstable();
        blocks.push(cycle);
    }
    blocks.sort_unstable_by_key(|b| b[0]);
    NCPartition::from_canonical(r, blocks)
}

/// Catalan number `C_k`.
pub fn catalan(k: usize) -> u64 {
    let mut c: u64 = 1;
    for i in 0..k as u64 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    c
}

/// `μ(π, 1_r)` as the product over blocks `V` of `K(π)` of `(−1)^{|V|−1} C_{|V|−1}`.
pub fn moebius_to_top(pi: &NCPartition) -> i64 {
    kreweras(pi)
        .block_sizes()
        .map(|size| {
            let c = catalan(size - 1) as i64;
            if size % 2 == 1 {
                c
            } else {
                -c
            }
        })
        .product()
}

/// Validates a user-supplied block list and returns its canonical form.
pub fn parse_partition(r: usize, blocks: Vec<Vec<usize>>) -> Result<NCPartition> {
    NCPartition::new(r, blocks).map_err(|e| match e {
        Error::Domain(msg) => Error::Domain(format!("invalid partition: {msg}")),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(r: usize, blocks: &[&[usize]]) -> NCPartition {
        NCPartition::new(r, blocks.iter().map(|b| b.to_vec()).collect()).unwrap()
    }

    #[test]
    fn small_counts() {
        assert_eq!(enumerate_nc(1).unwrap().len(), 1);
        assert_eq!(enumerate_nc(3).unwrap().len(), 5);
        let nc4 = enumerate_nc(4).unwrap();
        assert_eq!(nc4.len(), 14);
        assert!(nc4
            .iter()
            .all(|x| x.blocks() != [vec![1, 3], vec![2, 4]].as_slice()));
    }

    #[test]
    fn enumeration_is_sorted_and_unique() {
        let nc = enumerate_nc(6).unwrap();
        assert!(nc.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(enumerate_nc(0).is_err());
        assert!(enumerate_nc(17).is_err());
        assert!(enumerate_nc_capped(5, 4).is_err());
    }

    #[test]
    fn noncrossing_examples() {
        assert!(is_noncrossing(4, &[vec![1, 2], vec![3, 4]]).unwrap());
        assert!(!is_noncrossing(4, &[vec![1, 3], vec![2, 4]]).unwrap());
        assert!(is_noncrossing(4, &[vec![1, 4], vec![2, 3]]).unwrap());
        assert!(is_noncrossing(4, &[vec![1, 2], vec![2, 3, 4]]).is_err());
        assert!(is_noncrossing(4, &[vec![1, 2]]).is_err());
    }

    #[test]
    fn order_examples() {
        let pi = p(3, &[&[1, 3], &[2]]);
        assert!(leq(&NCPartition::singletons(3), &pi).unwrap());
        assert!(leq(&pi, &pi).unwrap());
        assert!(!leq(&p(3, &[&[1, 2], &[3]]), &pi).unwrap());
        assert!(leq(&pi, &NCPartition::singletons(4)).is_err());
    }

    #[test]
    fn kreweras_extremes() {
        for r in 1..=6 {
            assert_eq!(kreweras(&NCPartition::singletons(r)), NCPartition::one_block(r));
            assert_eq!(kreweras(&NCPartition::one_block(r)), NCPartition::singletons(r));
        }
    }

    #[test]
    fn moebius_examples() {
        assert_eq!(moebius_to_top(&NCPartition::one_block(5)), 1);
        assert_eq!(moebius_to_top(&NCPartition::singletons(3)), 2);
        assert_eq!(moebius_to_top(&NCPartition::singletons(4)), -5);
    }

    #[test]
    fn catalan_values() {
        let expected = [1, 1, 2, 5, 14, 42, 132, 429, 1430, 4862, 16796];
        for (k, &c) in expected.iter().enumerate() {
            assert_eq!(catalan(k), c);
        }
        assert_eq!(catalan(16), 35_357_670);
    }
}
