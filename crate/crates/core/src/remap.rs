//! Subgrid-to-process remapping.
//!
//! After repartitioning, the new subgrids must be placed on processes. The
//! similarity matrix `S` records how much data each old part contributes to
//! each new subgrid; placing subgrid `j` on process `perm[j]` retains
//! `F = sum_j S[perm[j]][j]` of it in place. Maximizing `F` is equivalent
//! to minimizing the total migrated volume `TotalV = sum(S) - F`.
//!
//! [`remap_greedy`] is the usual sub-optimal heuristic: accept entries in
//! decreasing order while rows and columns are unclaimed. It never does
//! worse than keeping the identity placement, and never worse than half the
//! optimum. [`remap_exact`] solves the assignment exactly for small part
//! counts and serves as the quality oracle.

use crate::error::{Error, Result};
use crate::rtree::PartitionAssignment;

/// Migration-volume matrix: `entries[i][j]` is the weight owned by old part
/// `i` and assigned to new subgrid `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    entries: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    /// Wrap a square nonnegative matrix.
    pub fn new(entries: Vec<Vec<f64>>) -> Result<SimilarityMatrix> {
        let p = entries.len();
        if p == 0 {
            return Err(Error::InvalidArgument("similarity matrix is empty".into()));
        }
        for row in &entries {
            if row.len() != p {
                return Err(Error::InvalidArgument(format!(
                    "similarity matrix must be square ({p} x {p})"
                )));
            }
            if row.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
                return Err(Error::InvalidArgument(
                    "similarity entries must be finite and nonnegative".into(),
                ));
            }
        }
        Ok(SimilarityMatrix { entries })
    }

    pub fn p(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, old_part: usize, new_part: usize) -> f64 {
        self.entries[old_part][new_part]
    }

    /// Sum of all entries: the total weight being redistributed.
    pub fn total(&self) -> f64 {
        self.entries.iter().flatten().sum()
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.entries[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> f64 {
        self.entries.iter().map(|row| row[j]).sum()
    }
}

/// Build the similarity matrix of two assignments over the same elements.
/// Entry `(i, j)` accumulates the weights of elements with old part `i` and
/// new part `j`; elements are visited in ascending id order.
pub fn build_similarity<W>(
    old: &PartitionAssignment,
    new: &PartitionAssignment,
    weights: W,
) -> Result<SimilarityMatrix>
where
    W: Fn(usize) -> f64,
{
    if old.p() != new.p() {
        return Err(Error::InvalidArgument(format!(
            "part counts differ: old {} vs new {}",
            old.p(),
            new.p()
        )));
    }
    if old.len() != new.len() {
        return Err(Error::InvalidArgument(
            "old and new assignments cover different element sets".into(),
        ));
    }
    let p = old.p();
    let mut entries = vec![vec![0.0; p]; p];
    for (id, old_part) in old.iter() {
        let new_part = new.part_of(id).ok_or_else(|| {
            Error::InvalidArgument(format!("element {id} missing from the new assignment"))
        })?;
        entries[old_part][new_part] += weights(id);
    }
    SimilarityMatrix::new(entries)
}

fn check_permutation(s: &SimilarityMatrix, perm: &[usize]) -> Result<()> {
    let p = s.p();
    if perm.len() != p {
        return Err(Error::InvalidArgument(format!(
            "permutation length {} does not match matrix size {p}",
            perm.len()
        )));
    }
    let mut seen = vec![false; p];
    for &v in perm {
        if v >= p || seen[v] {
            return Err(Error::InvalidArgument(
                "mapping is not a permutation".into(),
            ));
        }
        seen[v] = true;
    }
    Ok(())
}

/// Retained weight `F = sum_j S[perm[j]][j]` of placing subgrid `j` on
/// process `perm[j]`.
pub fn cost_f(s: &SimilarityMatrix, perm: &[usize]) -> Result<f64> {
    check_permutation(s, perm)?;
    Ok(perm.iter().enumerate().map(|(j, &i)| s.get(i, j)).sum())
}

/// Greedy placement: scan entries by descending value (ties by ascending
/// old part, then subgrid) and accept while both sides are unclaimed;
/// unmatched pairs are filled in ascending order. The identity placement is
/// returned instead whenever it retains strictly more.
pub fn remap_greedy(s: &SimilarityMatrix) -> Result<Vec<usize>> {
    let p = s.p();
    let mut order: Vec<(usize, usize)> = (0..p).flat_map(|i| (0..p).map(move |j| (i, j))).collect();
    order.sort_by(|&(i1, j1), &(i2, j2)| {
        s.get(i2, j2)
            .total_cmp(&s.get(i1, j1))
            .then(i1.cmp(&i2))
            .then(j1.cmp(&j2))
    });

    let mut process_of = vec![usize::MAX; p];
    let mut process_used = vec![false; p];
    let mut assigned = 0;
    for (i, j) in order {
        if assigned == p {
            break;
        }
        if !process_used[i] && process_of[j] == usize::MAX {
            process_of[j] = i;
            process_used[i] = true;
            assigned += 1;
        }
    }
    let mut free: Vec<usize> = (0..p).filter(|&i| !process_used[i]).collect();
    free.reverse();
    for slot in process_of.iter_mut() {
        if *slot == usize::MAX {
            *slot = free
                .pop()
                .expect("counts of unmatched rows and columns agree");
        }
    }

    let identity: Vec<usize> = (0..p).collect();
    if cost_f(s, &identity)? > cost_f(s, &process_of)? {
        Ok(identity)
    } else {
        Ok(process_of)
    }
}

/// Maximum part count [`remap_exact`] accepts.
pub const EXACT_LIMIT: usize = 10;

/// Exact F-maximizing placement by dynamic programming over process
/// subsets; `O(2^p * p)` states, guarded to `p <= 10`. Ties resolve to the
/// smallest process index column by column, so a diagonal-dominant matrix
/// yields the identity.
pub fn remap_exact(s: &SimilarityMatrix) -> Result<Vec<usize>> {
    let p = s.p();
    if p > EXACT_LIMIT {
        return Err(Error::Unsupported(format!(
            "exact remapping is limited to p <= {EXACT_LIMIT}, got {p}"
        )));
    }
    let full = 1usize << p;
    // best[mask] = max F over the first popcount(mask) subgrids using the
    // process set `mask`
    let mut best = vec![f64::NEG_INFINITY; full];
    best[0] = 0.0;
    for mask in 0..full {
        if best[mask] == f64::NEG_INFINITY {
            continue;
        }
        let j = mask.count_ones() as usize;
        if j == p {
            continue;
        }
        for i in 0..p {
            let bit = 1 << i;
            if mask & bit == 0 {
                let candidate = best[mask] + s.get(i, j);
                if candidate > best[mask | bit] {
                    best[mask | bit] = candidate;
                }
            }
        }
    }

    // reconstruct column by column, preferring the smallest process index
    let mut perm = vec![0usize; p];
    let mut mask = full - 1;
    for j in (0..p).rev() {
        for i in 0..p {
            let bit = 1 << i;
            if mask & bit != 0 && best[mask ^ bit] + s.get(i, j) == best[mask] {
                perm[j] = i;
                mask ^= bit;
                break;
            }
        }
    }
    Ok(perm)
}

/// Migration volumes of a placement: `TotalV` is the weight that moves at
/// all; `MaxV` is the largest per-process traffic, counting both the data a
/// process sends away and the data it receives.
pub fn migration_stats(s: &SimilarityMatrix, perm: &[usize]) -> Result<(f64, f64)> {
    check_permutation(s, perm)?;
    let retained = cost_f(s, perm)?;
    let totalv = s.total() - retained;
    let mut maxv = 0.0f64;
    for (j, &q) in perm.iter().enumerate() {
        // process q hosts subgrid j
        let kept = s.get(q, j);
        let send = s.row_sum(q) - kept;
        let recv = s.col_sum(j) - kept;
        maxv = maxv.max(send + recv);
    }
    Ok((totalv, maxv))
}
