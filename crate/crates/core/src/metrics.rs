//! Partition quality measurements.
//!
//! The structural proxies compared across partitioners: load imbalance,
//! interface-face count (the communication proxy), migration volumes from
//! the similarity matrix, and the face-sharing rate of consecutive leaves
//! in the depth-first order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{ElementId, TetMesh};
use crate::remap::{build_similarity, migration_stats};
use crate::rtree::PartitionAssignment;

/// One measurement of a `(mesh, assignment)` pair. Serializes to a flat
/// JSON object with exactly these field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub p: usize,
    pub part_weights: Vec<f64>,
    /// max part weight / (W / p); 1.0 is perfect balance.
    pub imbalance: f64,
    /// Interior faces whose two elements lie in different parts.
    pub interface_faces: usize,
    pub totalv: f64,
    pub maxv: f64,
    /// TotalV / total weight, 0 when no old assignment is given.
    pub migration_fraction: f64,
    /// Fraction of consecutive leaves in the depth-first order sharing a
    /// face.
    pub dfs_face_share_rate: f64,
}

/// Per-part weight totals.
pub fn part_weights<W>(assignment: &PartitionAssignment, weights: W) -> Vec<f64>
where
    W: Fn(ElementId) -> f64,
{
    let mut totals = vec![0.0; assignment.p()];
    for (id, part) in assignment.iter() {
        totals[part] += weights(id);
    }
    totals
}

/// Load imbalance: `max_i(part weight) * p / W`. Empty parts are allowed;
/// the maximum governs.
pub fn imbalance<W>(assignment: &PartitionAssignment, weights: W, p: usize) -> Result<f64>
where
    W: Fn(ElementId) -> f64,
{
    let totals = part_weights(assignment, weights);
    let total: f64 = totals.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateInput(
            "total weight is zero; imbalance is undefined".into(),
        ));
    }
    let max = totals.iter().cloned().fold(0.0, f64::max);
    Ok(max * p as f64 / total)
}

/// Number of interior faces whose two incident elements have different
/// parts.
pub fn edge_cut(mesh: &TetMesh, assignment: &PartitionAssignment) -> usize {
    mesh.interior_faces()
        .into_iter()
        .filter(|&(a, b)| assignment.part_of(a) != assignment.part_of(b))
        .count()
}

/// Fraction of consecutive pairs in `order` that share a face; 1.0 for
/// fewer than two elements.
pub fn dfs_face_share_rate(mesh: &TetMesh, order: &[ElementId]) -> f64 {
    if order.len() < 2 {
        return 1.0;
    }
    let shared = order
        .windows(2)
        .filter(|w| mesh.share_face(w[0], w[1]))
        .count();
    shared as f64 / (order.len() - 1) as f64
}

/// Assemble a full report.
///
/// Migration fields need the old (placed) assignment; `perm` is the
/// subgrid-to-process mapping applied afterwards (identity when `None`).
/// `dfs_order` is the depth-first leaf order; when `None` the ascending
/// element-id order is used, which coincides with the depth-first order for
/// an unrefined mesh.
pub fn quality_report<W>(
    mesh: &TetMesh,
    old: Option<&PartitionAssignment>,
    new: &PartitionAssignment,
    perm: Option<&[usize]>,
    weights: W,
    p: usize,
    dfs_order: Option<&[ElementId]>,
) -> Result<QualityReport>
where
    W: Fn(ElementId) -> f64,
{
    let totals = part_weights(new, &weights);
    let imbalance = imbalance(new, &weights, p)?;
    let interface_faces = edge_cut(mesh, new);

    let (totalv, maxv, migration_fraction) = match old {
        Some(old) => {
            let s = build_similarity(old, new, &weights)?;
            let identity: Vec<usize> = (0..p).collect();
            let perm = perm.unwrap_or(&identity);
            let (totalv, maxv) = migration_stats(&s, perm)?;
            (totalv, maxv, totalv / s.total())
        }
        None => (0.0, 0.0, 0.0),
    };

    let rate = match dfs_order {
        Some(order) => dfs_face_share_rate(mesh, order),
        None => {
            let order: Vec<ElementId> = mesh.live_elements().collect();
            dfs_face_share_rate(mesh, &order)
        }
    };

    Ok(QualityReport {
        p,
        part_weights: totals,
        imbalance,
        interface_faces,
        totalv,
        maxv,
        migration_fraction,
        dfs_face_share_rate: rate,
    })
}
