//! Refinement-tree partitioning.
//!
//! A [`RefinementForest`] mirrors the mesh event log: one binary tree per
//! initial element, leaves are the live elements. Partitioning orders the
//! leaves depth-first (left child before right), computes weight prefix sums
//! and assigns the leaf with prefix sum `S` to part `floor(S * p / W)`, so
//! part `i` receives exactly the leaves whose prefix sums fall in
//! `[W*i/p, W*(i+1)/p)`.
//!
//! [`partition_scanned`] emulates the distributed form of the same
//! algorithm: each virtual rank owns a contiguous slice of the leaf order,
//! computes its local weight total, receives the exclusive scan of the
//! totals and finishes its local prefix sums from that offset. For
//! integer-valued weights the result is bitwise identical to
//! [`partition_serial`]; for arbitrary real weights prefix sums agree to
//! about `1e-12 * W` and assignments may differ only for leaves whose prefix
//! sum sits within that distance of a part boundary.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::mesh::{ElementId, MeshEvent, TetMesh};

#[derive(Debug, Clone, Copy)]
struct ForestNode {
    parent: Option<ElementId>,
    children: Option<(ElementId, ElementId)>,
}

/// Ordered forest of bisection trees. Node ids are element ids.
///
/// The root order is fixed at construction and never changes; it determines
/// the depth-first leaf order for the whole adaptive run.
#[derive(Debug, Clone)]
pub struct RefinementForest {
    roots: Vec<ElementId>,
    nodes: Vec<Option<ForestNode>>,
    leaf_count: usize,
}

impl RefinementForest {
    /// Forest of unrefined roots, in the given order.
    pub fn new(roots: Vec<ElementId>) -> Result<RefinementForest> {
        let max = roots.iter().copied().max().map_or(0, |m| m + 1);
        let mut nodes = vec![None; max];
        for &r in &roots {
            if nodes[r].is_some() {
                return Err(Error::InvalidArgument(format!("duplicate root id {r}")));
            }
            nodes[r] = Some(ForestNode {
                parent: None,
                children: None,
            });
        }
        Ok(RefinementForest {
            leaf_count: roots.len(),
            roots,
            nodes,
        })
    }

    /// Forest mirroring a mesh: roots are the initial elements in id order,
    /// then the mesh event log is replayed.
    pub fn from_mesh(mesh: &TetMesh) -> RefinementForest {
        let mut forest = RefinementForest::new((0..mesh.initial_count()).collect())
            .expect("initial element ids are distinct");
        for event in mesh.events() {
            forest
                .mirror_event(event)
                .expect("mesh event log is self-consistent");
        }
        forest
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    pub fn roots(&self) -> &[ElementId] {
        &self.roots
    }

    pub fn is_leaf(&self, id: ElementId) -> bool {
        matches!(
            self.nodes.get(id),
            Some(Some(node)) if node.children.is_none()
        )
    }

    fn node(&self, id: ElementId) -> Result<ForestNode> {
        self.nodes
            .get(id)
            .copied()
            .flatten()
            .ok_or_else(|| Error::Consistency(format!("node {id} is not in the forest")))
    }

    /// Apply one mesh event to the forest.
    pub fn mirror_event(&mut self, event: &MeshEvent) -> Result<()> {
        match *event {
            MeshEvent::Bisect(ev) => {
                let node = self.node(ev.parent)?;
                if node.children.is_some() {
                    return Err(Error::Consistency(format!(
                        "stale bisection event: node {} is not a leaf",
                        ev.parent
                    )));
                }
                for child in [ev.left_child, ev.right_child] {
                    if self.nodes.get(child).copied().flatten().is_some() {
                        return Err(Error::Consistency(format!(
                            "stale bisection event: child id {child} already exists"
                        )));
                    }
                }
                if self.nodes.len() <= ev.right_child {
                    self.nodes.resize(ev.right_child + 1, None);
                }
                self.nodes[ev.parent].as_mut().unwrap().children =
                    Some((ev.left_child, ev.right_child));
                for child in [ev.left_child, ev.right_child] {
                    self.nodes[child] = Some(ForestNode {
                        parent: Some(ev.parent),
                        children: None,
                    });
                }
                self.leaf_count += 1;
                Ok(())
            }
            MeshEvent::Coarsen {
                parent,
                left_child,
                right_child,
            } => {
                let node = self.node(parent)?;
                if node.children != Some((left_child, right_child)) {
                    return Err(Error::Consistency(format!(
                        "stale coarsen event for node {parent}"
                    )));
                }
                for child in [left_child, right_child] {
                    if !self.is_leaf(child) || self.node(child)?.parent != Some(parent) {
                        return Err(Error::Consistency(format!(
                            "stale coarsen event: child {child} is not a leaf of node {parent}"
                        )));
                    }
                }
                self.nodes[left_child] = None;
                self.nodes[right_child] = None;
                self.nodes[parent].as_mut().unwrap().children = None;
                self.leaf_count -= 1;
                Ok(())
            }
        }
    }

    /// Leaves in depth-first order: trees in root order, left child before
    /// right within each tree. Position indices start at 0.
    pub fn dfs_leaf_order(&self) -> Vec<ElementId> {
        let mut order = Vec::with_capacity(self.leaf_count);
        let mut stack = Vec::new();
        for &root in &self.roots {
            stack.push(root);
            while let Some(id) = stack.pop() {
                let node = self.nodes[id].expect("forest node ids are dense");
                match node.children {
                    None => order.push(id),
                    Some((l, r)) => {
                        stack.push(r);
                        stack.push(l);
                    }
                }
            }
        }
        order
    }
}

/// An element-to-part map for `p` parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionAssignment {
    p: usize,
    parts: BTreeMap<ElementId, usize>,
}

impl PartitionAssignment {
    pub fn new(p: usize, parts: BTreeMap<ElementId, usize>) -> Result<PartitionAssignment> {
        if p < 1 {
            return Err(Error::InvalidArgument("part count must be >= 1".into()));
        }
        if let Some((&id, &part)) = parts.iter().find(|(_, &part)| part >= p) {
            return Err(Error::InvalidArgument(format!(
                "element {id} assigned to part {part} out of range 0..{p}"
            )));
        }
        Ok(PartitionAssignment { p, parts })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn part_of(&self, id: ElementId) -> Option<usize> {
        self.parts.get(&id).copied()
    }

    /// `(element, part)` pairs in ascending element order.
    pub fn iter(&self) -> impl Iterator<Item = (ElementId, usize)> + '_ {
        self.parts.iter().map(|(&id, &part)| (id, part))
    }

    /// Relabel parts: part `q` becomes `perm[q]`. Used to place subgrids on
    /// processes after remapping.
    pub fn relabeled(&self, perm: &[usize]) -> Result<PartitionAssignment> {
        if perm.len() != self.p {
            return Err(Error::InvalidArgument(format!(
                "permutation length {} does not match part count {}",
                perm.len(),
                self.p
            )));
        }
        let parts = self
            .parts
            .iter()
            .map(|(&id, &part)| (id, perm[part]))
            .collect();
        PartitionAssignment::new(self.p, parts)
    }
}

/// Prefix sums `S_i` over the depth-first leaf order: `S_0 = 0`,
/// `S_i = S_{i-1} + w_{i-1}`. Exact when all weights are integer-valued.
pub fn prefix_sums<W>(forest: &RefinementForest, weights: W) -> Result<Vec<(ElementId, f64)>>
where
    W: Fn(ElementId) -> f64,
{
    let order = forest.dfs_leaf_order();
    let mut out = Vec::with_capacity(order.len());
    let mut running = 0.0;
    for id in order {
        let w = weights(id);
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "leaf {id} has negative or non-finite weight {w}"
            )));
        }
        out.push((id, running));
        running += w;
    }
    Ok(out)
}

/// Part index for a leaf with prefix sum `s`: the largest `k` with
/// `W*k <= s*p`, clamped to `p-1`. Computed with a multiply-back adjustment
/// so a prefix sum exactly on a boundary `W*i/p` lands in part `i`; exact
/// for integer-valued weights.
fn part_for(s: f64, total: f64, p: usize) -> usize {
    let target = s * p as f64;
    let mut part = ((target / total).floor() as isize).clamp(0, p as isize - 1);
    while part + 1 < p as isize && (part + 1) as f64 * total <= target {
        part += 1;
    }
    while part > 0 && part as f64 * total > target {
        part -= 1;
    }
    part as usize
}

fn check_partition_args(p: usize) -> Result<()> {
    if p < 1 {
        return Err(Error::InvalidArgument("part count must be >= 1".into()));
    }
    Ok(())
}

fn check_total(total: f64) -> Result<()> {
    if total <= 0.0 {
        return Err(Error::DegenerateInput(
            "total leaf weight is zero; partitioning needs a positive total".into(),
        ));
    }
    Ok(())
}

/// Single-traversal refinement-tree partition: leaves are assigned to parts
/// by the prefix-sum interval rule. Parts are contiguous, nondecreasing runs
/// of the depth-first leaf order.
pub fn partition_serial<W>(
    forest: &RefinementForest,
    weights: W,
    p: usize,
) -> Result<PartitionAssignment>
where
    W: Fn(ElementId) -> f64,
{
    check_partition_args(p)?;
    let sums = prefix_sums(forest, &weights)?;
    let total = match sums.last() {
        Some(&(last, s)) => s + weights(last),
        None => 0.0,
    };
    check_total(total)?;
    let parts = sums
        .into_iter()
        .map(|(id, s)| (id, part_for(s, total, p)))
        .collect();
    PartitionAssignment::new(p, parts)
}

/// Emulated-distributed refinement-tree partition over virtual ranks.
///
/// `blocks` gives each rank's leaves; concatenated they must equal the
/// depth-first leaf order exactly. Step 1 computes each rank's local weight
/// total, step 2 is an exclusive scan over rank order, step 3 finishes local
/// prefix sums from the scanned offset and applies the interval rule.
pub fn partition_scanned<W>(
    forest: &RefinementForest,
    weights: W,
    p: usize,
    blocks: &[Vec<ElementId>],
) -> Result<PartitionAssignment>
where
    W: Fn(ElementId) -> f64,
{
    check_partition_args(p)?;
    let order = forest.dfs_leaf_order();
    let flat_len: usize = blocks.iter().map(|b| b.len()).sum();
    if flat_len != order.len() || !blocks.iter().flatten().zip(&order).all(|(a, b)| a == b) {
        return Err(Error::InvalidArgument(
            "rank blocks are not a contiguous cover of the depth-first leaf order".into(),
        ));
    }

    // Step 1: local weight totals.
    let mut local_totals = Vec::with_capacity(blocks.len());
    for block in blocks {
        let mut sum = 0.0;
        for &id in block {
            let w = weights(id);
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "leaf {id} has negative or non-finite weight {w}"
                )));
            }
            sum += w;
        }
        local_totals.push(sum);
    }

    // Step 2: exclusive scan in rank order.
    let mut offsets = Vec::with_capacity(local_totals.len());
    let mut running = 0.0;
    for &t in &local_totals {
        offsets.push(running);
        running += t;
    }
    let total = running;
    check_total(total)?;

    // Step 3: local prefix sums from the scanned offset, interval rule.
    let mut parts = BTreeMap::new();
    for (block, &offset) in blocks.iter().zip(&offsets) {
        let mut s = offset;
        for &id in block {
            parts.insert(id, part_for(s, total, p));
            s += weights(id);
        }
    }
    PartitionAssignment::new(p, parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_box_mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bisect_leaf(
        forest: &mut RefinementForest,
        parent: ElementId,
        next_id: &mut ElementId,
    ) -> (ElementId, ElementId) {
        let l = *next_id;
        let r = *next_id + 1;
        *next_id += 2;
        forest
            .mirror_event(&MeshEvent::Bisect(crate::mesh::BisectionEvent {
                parent,
                left_child: l,
                right_child: r,
                cut_edge: (0, 1),
                new_vertex: 0,
            }))
            .unwrap();
        (l, r)
    }

    /// Random forest over `roots` roots with `splits` bisections of random
    /// leaves, plus unit-or-random integer weights.
    fn random_forest(
        rng: &mut ChaCha8Rng,
        roots: usize,
        splits: usize,
    ) -> (RefinementForest, Vec<f64>) {
        let mut forest = RefinementForest::new((0..roots).collect()).unwrap();
        let mut next_id = roots;
        for _ in 0..splits {
            let leaves = forest.dfs_leaf_order();
            let target = leaves[rng.random_range(0..leaves.len())];
            bisect_leaf(&mut forest, target, &mut next_id);
        }
        let weights: Vec<f64> = (0..next_id)
            .map(|_| rng.random_range(1..10) as f64)
            .collect();
        (forest, weights)
    }

    #[test]
    fn dfs_order_examples() {
        // three unrefined roots
        let forest = RefinementForest::new(vec![0, 1, 2]).unwrap();
        assert_eq!(forest.dfs_leaf_order(), vec![0, 1, 2]);

        // bisect root 0 once: [left, right, 1, 2]
        let mut forest = forest;
        let mut next = 3;
        let (l, r) = bisect_leaf(&mut forest, 0, &mut next);
        assert_eq!(forest.dfs_leaf_order(), vec![l, r, 1, 2]);

        // bisect the left child again: [left-left, left-right, right, 1, 2]
        let (ll, lr) = bisect_leaf(&mut forest, l, &mut next);
        assert_eq!(forest.dfs_leaf_order(), vec![ll, lr, r, 1, 2]);
        assert_eq!(forest.leaf_count(), 5);
    }

    #[test]
    fn prefix_sum_examples() {
        let forest = RefinementForest::new(vec![0, 1, 2, 3]).unwrap();
        let w = [1.0, 1.0, 1.0, 1.0];
        let sums = prefix_sums(&forest, |id| w[id]).unwrap();
        assert_eq!(
            sums.iter().map(|&(_, s)| s).collect::<Vec<_>>(),
            vec![0.0, 1.0, 2.0, 3.0]
        );

        let forest = RefinementForest::new(vec![0, 1, 2]).unwrap();
        let w = [2.0, 0.0, 3.0];
        let sums = prefix_sums(&forest, |id| w[id]).unwrap();
        assert_eq!(
            sums.iter().map(|&(_, s)| s).collect::<Vec<_>>(),
            vec![0.0, 2.0, 2.0]
        );
    }

    #[test]
    fn prefix_sums_restart_identity() {
        // S_i computed from S_q plus the partial sum equals the direct sum
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (forest, weights) = random_forest(&mut rng, 4, 60);
        let sums = prefix_sums(&forest, |id| weights[id]).unwrap();
        let order = forest.dfs_leaf_order();
        for _ in 0..50 {
            let i = rng.random_range(1..order.len());
            let q = rng.random_range(0..i);
            let partial: f64 = order[q..i].iter().map(|&id| weights[id]).sum();
            assert_eq!(sums[i].1, sums[q].1 + partial);
        }
    }

    #[test]
    fn negative_weight_is_rejected() {
        let forest = RefinementForest::new(vec![0, 1]).unwrap();
        let res = prefix_sums(&forest, |id| if id == 1 { -1.0 } else { 1.0 });
        assert!(matches!(res, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn partition_serial_examples() {
        let forest = RefinementForest::new(vec![0, 1, 2, 3]).unwrap();
        let parts = partition_serial(&forest, |_| 1.0, 2).unwrap();
        assert_eq!(
            (0..4)
                .map(|i| parts.part_of(i).unwrap())
                .collect::<Vec<_>>(),
            vec![0, 0, 1, 1]
        );

        let parts = partition_serial(&forest, |_| 1.0, 3).unwrap();
        assert_eq!(
            (0..4)
                .map(|i| parts.part_of(i).unwrap())
                .collect::<Vec<_>>(),
            vec![0, 0, 1, 2]
        );
    }

    #[test]
    fn partition_rejects_degenerate_inputs() {
        let forest = RefinementForest::new(vec![0, 1]).unwrap();
        assert!(matches!(
            partition_serial(&forest, |_| 1.0, 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            partition_serial(&forest, |_| 0.0, 2),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn parts_are_contiguous_monotone_and_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let roots = rng.random_range(1..6);
            let splits = rng.random_range(0..200);
            let (forest, weights) = random_forest(&mut rng, roots, splits);
            let p = rng.random_range(2..=8);
            let assignment = partition_serial(&forest, |id| weights[id], p).unwrap();
            let order = forest.dfs_leaf_order();

            // monotone nondecreasing along the DFS order (implies contiguity)
            let seq: Vec<usize> = order
                .iter()
                .map(|&id| assignment.part_of(id).unwrap())
                .collect();
            assert!(seq.windows(2).all(|w| w[0] <= w[1]));

            // balance bound against a direct scan of the prefix array
            let total: f64 = order.iter().map(|&id| weights[id]).sum();
            let wmax = order.iter().map(|&id| weights[id]).fold(0.0, f64::max);
            let mut part_weights = vec![0.0; p];
            for &id in &order {
                part_weights[assignment.part_of(id).unwrap()] += weights[id];
            }
            for &pw in &part_weights {
                assert!(pw < total / p as f64 + wmax + 1e-9);
            }
        }
    }

    #[test]
    fn boundary_prefix_goes_to_upper_part() {
        // S exactly equal to W*i/p belongs to part i
        let forest = RefinementForest::new(vec![0, 1]).unwrap();
        let parts = partition_serial(&forest, |_| 3.0, 2).unwrap();
        assert_eq!(parts.part_of(0), Some(0));
        assert_eq!(parts.part_of(1), Some(1));
    }

    #[test]
    fn scanned_single_block_equals_serial() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (forest, weights) = random_forest(&mut rng, 3, 50);
        let order = forest.dfs_leaf_order();
        let serial = partition_serial(&forest, |id| weights[id], 4).unwrap();
        let scanned = partition_scanned(&forest, |id| weights[id], 4, &[order]).unwrap();
        assert_eq!(serial, scanned);
    }

    #[test]
    fn scanned_hand_example() {
        // weights [1,1,1,1], two ranks owning two leaves each, p = 2:
        // rank 1 starts from the scanned offset 2, so leaf 2 has S = 2 and
        // the parts are [0,0,1,1].
        let forest = RefinementForest::new(vec![0, 1, 2, 3]).unwrap();
        let blocks = vec![vec![0, 1], vec![2, 3]];
        let parts = partition_scanned(&forest, |_| 1.0, 2, &blocks).unwrap();
        assert_eq!(
            (0..4)
                .map(|i| parts.part_of(i).unwrap())
                .collect::<Vec<_>>(),
            vec![0, 0, 1, 1]
        );
    }

    #[test]
    fn scanned_equals_serial_across_block_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let roots = rng.random_range(1..5);
            let splits = rng.random_range(0..150);
            let (forest, weights) = random_forest(&mut rng, roots, splits);
            let order = forest.dfs_leaf_order();
            for &v in &[1usize, 2, 3, 5, 8] {
                let blocks = split_blocks(&order, v, &mut rng);
                for &p in &[2usize, 4, 7] {
                    let serial = partition_serial(&forest, |id| weights[id], p).unwrap();
                    let scanned = partition_scanned(&forest, |id| weights[id], p, &blocks).unwrap();
                    assert_eq!(serial, scanned);
                }
            }
        }
    }

    pub(crate) fn split_blocks(
        order: &[ElementId],
        v: usize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<Vec<ElementId>> {
        // random contiguous cover with v blocks (some possibly empty)
        let mut cuts: Vec<usize> = (0..v - 1)
            .map(|_| rng.random_range(0..=order.len()))
            .collect();
        cuts.sort_unstable();
        let mut blocks = Vec::with_capacity(v);
        let mut start = 0;
        for &c in &cuts {
            blocks.push(order[start..c].to_vec());
            start = c;
        }
        blocks.push(order[start..].to_vec());
        blocks
    }

    #[test]
    fn scanned_rejects_non_cover() {
        let forest = RefinementForest::new(vec![0, 1, 2]).unwrap();
        // wrong order
        let res = partition_scanned(&forest, |_| 1.0, 2, &[vec![1, 0, 2]]);
        assert!(matches!(res, Err(Error::InvalidArgument(_))));
        // missing leaf
        let res = partition_scanned(&forest, |_| 1.0, 2, &[vec![0, 1]]);
        assert!(matches!(res, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn mirror_events_track_mesh() {
        let mut mesh = generate_box_mesh(1, 1, 1, (1.0, 1.0, 1.0)).unwrap();
        let mut forest = RefinementForest::from_mesh(&mesh);
        assert_eq!(forest.leaf_count(), 6);

        let ev = mesh.bisect(0).unwrap();
        forest.mirror_event(&MeshEvent::Bisect(ev)).unwrap();
        assert_eq!(forest.leaf_count(), 7);

        mesh.coarsen(ev.parent).unwrap();
        forest.mirror_event(mesh.events().last().unwrap()).unwrap();
        assert_eq!(forest.leaf_count(), 6);

        // replaying the full log from scratch gives the same forest
        let replayed = RefinementForest::from_mesh(&mesh);
        assert_eq!(replayed.dfs_leaf_order(), forest.dfs_leaf_order());
    }

    #[test]
    fn stale_events_are_consistency_errors() {
        let mut forest = RefinementForest::new(vec![0]).unwrap();
        let mut next = 1;
        let (l, r) = bisect_leaf(&mut forest, 0, &mut next);
        // bisecting a non-leaf
        let stale = MeshEvent::Bisect(crate::mesh::BisectionEvent {
            parent: 0,
            left_child: 10,
            right_child: 11,
            cut_edge: (0, 1),
            new_vertex: 0,
        });
        assert!(matches!(
            forest.mirror_event(&stale),
            Err(Error::Consistency(_))
        ));
        // coarsening with wrong children
        let stale = MeshEvent::Coarsen {
            parent: 0,
            left_child: r,
            right_child: l,
        };
        assert!(matches!(
            forest.mirror_event(&stale),
            Err(Error::Consistency(_))
        ));
    }
}
