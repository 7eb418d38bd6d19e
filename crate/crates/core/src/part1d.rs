//! Generalized multi-section partitioning of weighted keys on `[0, 1)`.
//!
//! Given items with keys in the unit interval, find `p - 1` cut points so
//! the p half-open intervals carry (approximately) equal weight. The search
//! generalizes bisection: every cut keeps its own bounding box, each
//! iteration subdivides every active box into `k` equal subintervals, bins
//! item weights into the union of all subintervals in one pass, and shrinks
//! each box to the subinterval containing its target cumulative weight
//! `W * i / p`. A box is resolved once it contains fewer than two distinct
//! keys (or once its contained weight drops to `tol * W`); cuts are then
//! snapped onto item keys, so atomic items are never split and the result
//! with `tol = 0` is exact.
//!
//! Items whose key equals a cut value are ordered by `(key, owner)` and the
//! tied group is split by the same prefix-weight interval rule the
//! refinement-tree partitioner uses, which keeps part weights within one
//! maximum item weight of the ideal `W / p`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::mesh::ElementId;
use crate::rtree::PartitionAssignment;
use crate::sfc::SfcKey;

/// A partitionable item: a key on the unit interval, its weight, and the
/// element it stands for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedKey {
    pub key: f64,
    pub weight: f64,
    pub owner: ElementId,
}

/// The `p - 1` nondecreasing cut points; part `i` is `[a_i, a_{i+1})` with
/// `a_0 = 0` and `a_p = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutSet {
    pub cuts: Vec<f64>,
}

/// Search parameters. `k` is the subdivision arity per iteration, `tol`
/// (as a fraction of the total weight) allows stopping a box early, and
/// `max_iter` caps the iteration count.
#[derive(Debug, Clone, Copy)]
pub struct Part1dParams {
    pub k: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for Part1dParams {
    fn default() -> Self {
        Part1dParams {
            k: 4,
            tol: 0.0,
            max_iter: 64,
        }
    }
}

/// Diagnostics of one search run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Part1dStats {
    pub iterations: usize,
}

/// Convert curve keys to unit-interval items (`key / 2^(3 * order)`).
pub fn keys_to_items(keys: &[(ElementId, SfcKey, f64)], order: u32) -> Vec<WeightedKey> {
    let denom = (1u128 << (3 * order)) as f64;
    keys.iter()
        .map(|&(owner, key, weight)| WeightedKey {
            key: key as f64 / denom,
            weight,
            owner,
        })
        .collect()
}

/// Total weight of items with key strictly below `x`. Items must be sorted
/// by `(key, owner)`; exact for integer-valued weights.
pub fn cumulative_weight(items: &[WeightedKey], x: f64) -> f64 {
    debug_assert!(items
        .windows(2)
        .all(|w| (w[0].key, w[0].owner) <= (w[1].key, w[1].owner)));
    items
        .iter()
        .take_while(|item| item.key < x)
        .map(|item| item.weight)
        .sum()
}

/// Multi-section partition of `items` into `p` weight-balanced parts.
pub fn partition_1d(
    items: &[WeightedKey],
    p: usize,
    params: &Part1dParams,
) -> Result<(CutSet, PartitionAssignment)> {
    let (cuts, assignment, _) = partition_1d_with_stats(items, p, params)?;
    Ok((cuts, assignment))
}

struct SortedItems {
    keys: Vec<f64>,
    owners: Vec<ElementId>,
    /// prefix[j] = total weight of the first j items; prefix[n] = W.
    prefix: Vec<f64>,
}

impl SortedItems {
    fn build(items: &[WeightedKey]) -> Result<SortedItems> {
        for (i, item) in items.iter().enumerate() {
            if !(item.key >= 0.0 && item.key < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "item {i}: key {} is outside [0, 1)",
                    item.key
                )));
            }
            if !(item.weight.is_finite() && item.weight >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "item {i}: weight {} is negative or non-finite",
                    item.weight
                )));
            }
        }
        let mut order: Vec<usize> = (0..items.len()).collect();
        order.sort_by(|&a, &b| {
            items[a]
                .key
                .total_cmp(&items[b].key)
                .then(items[a].owner.cmp(&items[b].owner))
        });
        let mut keys = Vec::with_capacity(items.len());
        let mut owners = Vec::with_capacity(items.len());
        let mut prefix = Vec::with_capacity(items.len() + 1);
        let mut running = 0.0;
        prefix.push(0.0);
        for &idx in &order {
            keys.push(items[idx].key);
            owners.push(items[idx].owner);
            running += items[idx].weight;
            prefix.push(running);
        }
        Ok(SortedItems {
            keys,
            owners,
            prefix,
        })
    }

    fn total(&self) -> f64 {
        *self.prefix.last().unwrap()
    }

    /// Number of keys strictly below `x`.
    fn rank(&self, x: f64) -> usize {
        self.keys.partition_point(|&key| key < x)
    }
}

struct CutBox {
    lo: f64,
    hi: f64,
    resolved: bool,
}

/// `cumulative * p <= total * i`, i.e. the prefix has not passed the target
/// quantile `W * i / p`. Cross-multiplied so it is exact for integer
/// weights.
fn at_or_below_target(cumulative: f64, total: f64, p: usize, i: usize) -> bool {
    cumulative * p as f64 <= total * i as f64
}

/// As [`partition_1d`], also reporting how many subdivision iterations the
/// search used.
pub fn partition_1d_with_stats(
    items: &[WeightedKey],
    p: usize,
    params: &Part1dParams,
) -> Result<(CutSet, PartitionAssignment, Part1dStats)> {
    if p < 1 {
        return Err(Error::InvalidArgument("part count must be >= 1".into()));
    }
    if params.k < 2 {
        return Err(Error::InvalidArgument(
            "subdivision arity k must be >= 2".into(),
        ));
    }
    if items.is_empty() {
        return Err(Error::InvalidArgument("no items to partition".into()));
    }
    let sorted = SortedItems::build(items)?;
    let total = sorted.total();
    if total <= 0.0 {
        return Err(Error::DegenerateInput(
            "total item weight is zero; partitioning needs a positive total".into(),
        ));
    }

    if p == 1 {
        let parts = sorted.owners.iter().map(|&o| (o, 0)).collect();
        return Ok((
            CutSet { cuts: Vec::new() },
            PartitionAssignment::new(1, parts)?,
            Part1dStats { iterations: 0 },
        ));
    }

    let resolved_at_creation = |lo: f64, hi: f64| -> bool {
        let r0 = sorted.rank(lo);
        let r1 = sorted.rank(hi);
        r1 == r0
            || sorted.keys[r0] == sorted.keys[r1 - 1]
            || sorted.prefix[r1] - sorted.prefix[r0] <= params.tol * total
    };

    let mut boxes: Vec<CutBox> = (1..p)
        .map(|_| CutBox {
            lo: 0.0,
            hi: 1.0,
            resolved: resolved_at_creation(0.0, 1.0),
        })
        .collect();

    let mut iterations = 0;
    while iterations < params.max_iter && boxes.iter().any(|b| !b.resolved) {
        iterations += 1;

        // union of all active subinterval boundaries, deduplicated
        let mut bounds: Vec<f64> = Vec::new();
        for b in boxes.iter().filter(|b| !b.resolved) {
            for t in 0..=params.k {
                bounds.push(subdivision_point(b.lo, b.hi, t, params.k));
            }
        }
        bounds.sort_unstable_by(f64::total_cmp);
        bounds.dedup_by(|a, b| a.total_cmp(b).is_eq());

        // one pass over the items: weight below the first boundary plus the
        // weight landing in each slot [bounds[t], bounds[t+1])
        let mut below_first = 0.0;
        let mut slot_weight = vec![0.0; bounds.len().saturating_sub(1)];
        for (j, &key) in sorted.keys.iter().enumerate() {
            let w = sorted.prefix[j + 1] - sorted.prefix[j];
            let pos = bounds.partition_point(|&b| b <= key);
            if pos == 0 {
                below_first += w;
            } else if pos - 1 < slot_weight.len() {
                slot_weight[pos - 1] += w;
            }
            // keys at or above the last boundary do not matter for any box
        }
        // cumulative weight at every boundary
        let mut cum_at = Vec::with_capacity(bounds.len());
        let mut running = below_first;
        for t in 0..bounds.len() {
            cum_at.push(running);
            if t < slot_weight.len() {
                running += slot_weight[t];
            }
        }
        let cum_of = |x: f64| -> f64 {
            let idx = bounds
                .binary_search_by(|b| b.total_cmp(&x))
                .expect("subdivision point missing from the boundary union");
            cum_at[idx]
        };

        for (cut, b) in boxes.iter_mut().enumerate() {
            if b.resolved {
                continue;
            }
            let i = cut + 1;
            // largest subinterval whose lower boundary has not passed the
            // target; the upper boundary keeps the target reachable
            let mut chosen = 0;
            for t in (0..params.k).rev() {
                let lower = subdivision_point(b.lo, b.hi, t, params.k);
                if at_or_below_target(cum_of(lower), total, p, i) {
                    chosen = t;
                    break;
                }
            }
            let lo = subdivision_point(b.lo, b.hi, chosen, params.k);
            let hi = subdivision_point(b.lo, b.hi, chosen + 1, params.k);
            b.resolved = resolved_at_creation(lo, hi);
            b.lo = lo;
            b.hi = hi;
        }
    }

    // Snap each cut onto an item key: the largest key at or below the box's
    // upper bound; if that key's whole tied group lies past the target
    // quantile (the box upper bound collided with the key exactly), step
    // down one group to the straddling atom.
    let mut cuts = Vec::with_capacity(p - 1);
    let mut boundaries = Vec::with_capacity(p - 1);
    for (cut, b) in boxes.iter().enumerate() {
        let i = cut + 1;
        let upto = sorted.keys.partition_point(|&key| key <= b.hi);
        debug_assert!(
            upto > 0,
            "target quantile is positive, some key lies below hi"
        );
        let mut j = upto - 1;
        let mut group_lo = sorted.keys.partition_point(|&key| key < sorted.keys[j]);
        if !at_or_below_target(sorted.prefix[group_lo], total, p, i) && group_lo > 0 {
            j = group_lo - 1;
            group_lo = sorted.keys.partition_point(|&key| key < sorted.keys[j]);
        }
        let a = sorted.keys[j];
        let group_hi = sorted.keys.partition_point(|&key| key <= a);
        // first sorted position belonging to part >= i: the prefix-weight
        // rule applied inside the tied group (a prefix sum exactly on the
        // target belongs to the upper part)
        let off = sorted.prefix[group_lo..=group_hi]
            .partition_point(|&s| s * (p as f64) < total * i as f64);
        let boundary = (group_lo + off).min(group_hi);
        cuts.push(a);
        boundaries.push(boundary);
    }
    debug_assert!(cuts.windows(2).all(|w| w[0] <= w[1]));
    debug_assert!(boundaries.windows(2).all(|w| w[0] <= w[1]));

    let mut parts = BTreeMap::new();
    let mut part = 0;
    for j in 0..sorted.keys.len() {
        while part < boundaries.len() && boundaries[part] <= j {
            part += 1;
        }
        parts.insert(sorted.owners[j], part);
    }
    Ok((
        CutSet { cuts },
        PartitionAssignment::new(p, parts)?,
        Part1dStats { iterations },
    ))
}

/// `t`-th of `k + 1` evenly spaced points over `[lo, hi]`, with the
/// endpoints exact.
fn subdivision_point(lo: f64, hi: f64, t: usize, k: usize) -> f64 {
    if t == 0 {
        lo
    } else if t == k {
        hi
    } else {
        lo + (hi - lo) * (t as f64 / k as f64)
    }
}
