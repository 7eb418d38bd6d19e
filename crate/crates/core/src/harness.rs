//! Simulated adaptive-computation driver.
//!
//! [`run_scenario`] replays the classic adaptive loop — estimate, mark,
//! refine/coarsen, repartition, remap, measure — over virtual ranks, with
//! every stage deterministic: identical scenarios produce bit-identical
//! record lists. MPI collectives are replaced by sequential emulation
//! ([`scan_emulate`]); rank ownership of leaves is the previous step's
//! placement read off in depth-first order.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{generate_box_mesh, load_mesh, ElementId, MeshEvent, Point3, TetMesh};
use crate::metrics::{quality_report, QualityReport};
use crate::part1d::{keys_to_items, partition_1d, Part1dParams};
use crate::remap::{build_similarity, remap_greedy};
use crate::rtree::{partition_scanned, PartitionAssignment, RefinementForest};
use crate::sfc::{element_keys, CurveKind, NormalizeMode};

/// Where the initial mesh comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Box {
        nx: usize,
        ny: usize,
        nz: usize,
        dims: (f64, f64, f64),
    },
    File(PathBuf),
}

/// The marker field driving refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndicatorKind {
    /// Constant 1.0 everywhere: refinement is uniform.
    Uniform,
    /// A bump whose center orbits a circle of radius 2/5 in the z = 1
    /// plane as `t` goes from 0 to 1; the mesh refines near the peak.
    MovingPeak,
}

/// Which partitioner the harness runs each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionMethod {
    Rtk,
    MortonSfc,
    HilbertSfc,
}

/// A full description of one simulated run.
///
/// `seed` participates in the determinism contract and is reserved for
/// randomized indicators; the built-in indicators and the fraction-based
/// marking rule are fully deterministic, so it currently selects nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub mesh: MeshSource,
    pub indicator: IndicatorKind,
    pub steps: usize,
    pub refine_fraction: f64,
    pub coarsen_fraction: f64,
    pub p: usize,
    pub method: PartitionMethod,
    pub mode: NormalizeMode,
    pub order: u32,
    pub k: usize,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::Scenario("steps must be >= 1".into()));
        }
        if self.p < 1 {
            return Err(Error::Scenario("p must be >= 1".into()));
        }
        // refine marks and coarsen pairs are disjoint by construction, so
        // the fractions are validated independently; 1.0 means "every leaf"
        if !(0.0..=1.0).contains(&self.refine_fraction) {
            return Err(Error::Scenario("refine_fraction must be in [0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.coarsen_fraction) {
            return Err(Error::Scenario("coarsen_fraction must be in [0, 1)".into()));
        }
        if self.k < 2 {
            return Err(Error::Scenario("k must be >= 2".into()));
        }
        if !(1..=crate::sfc::MAX_ORDER).contains(&self.order) {
            return Err(Error::Scenario(format!(
                "order must be in 1..={}",
                crate::sfc::MAX_ORDER
            )));
        }
        Ok(())
    }
}

/// Marker value of `kind` at `barycenter` and normalized time `t`.
pub fn indicator_value(kind: IndicatorKind, barycenter: Point3, t: f64) -> f64 {
    match kind {
        IndicatorKind::Uniform => 1.0,
        IndicatorKind::MovingPeak => {
            let angle = 8.0 * std::f64::consts::PI * t;
            let cx = 0.5 + 0.4 * angle.sin();
            let cy = 0.5 + 0.4 * angle.cos();
            let dx = barycenter.x - cx;
            let dy = barycenter.y - cy;
            let dz = barycenter.z - 1.0;
            let r2 = dx * dx + dy * dy + dz * dz;
            ((25.0 * r2 + 0.9).recip() - 2.5).exp()
        }
    }
}

/// Exclusive prefix over per-rank values, summed sequentially in rank order
/// so the result does not depend on any internal parallelism.
pub fn scan_emulate(values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut running = 0.0;
    for &v in values {
        out.push(running);
        running += v;
    }
    out
}

/// One step of a scenario run. The timing fields are wall-clock smoke
/// numbers only; they are excluded from serialization so records are
/// byte-identical across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub element_count: usize,
    pub report: QualityReport,
    #[serde(skip)]
    pub partition_seconds: f64,
    #[serde(skip)]
    pub remap_seconds: f64,
}

impl StepRecord {
    /// The JSON-lines form emitted by the bench command.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("step record serializes")
    }
}

/// Aggregate of a record list, for summary tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub steps: usize,
    pub final_elements: usize,
    pub mean_imbalance: f64,
    pub mean_interface_faces: f64,
    pub mean_migration_fraction: f64,
}

pub fn summarize(records: &[StepRecord]) -> Summary {
    let n = records.len().max(1) as f64;
    Summary {
        steps: records.len(),
        final_elements: records.last().map_or(0, |r| r.element_count),
        mean_imbalance: records.iter().map(|r| r.report.imbalance).sum::<f64>() / n,
        mean_interface_faces: records
            .iter()
            .map(|r| r.report.interface_faces as f64)
            .sum::<f64>()
            / n,
        mean_migration_fraction: records
            .iter()
            .map(|r| r.report.migration_fraction)
            .sum::<f64>()
            / n,
    }
}

fn build_mesh(source: &MeshSource) -> Result<TetMesh> {
    match source {
        MeshSource::Box { nx, ny, nz, dims } => generate_box_mesh(*nx, *ny, *nz, *dims),
        MeshSource::File(path) => load_mesh(path).map_err(|err| match err {
            Error::Io(io) => Error::NotFound(format!("{}: {io}", path.display())),
            other => other,
        }),
    }
}

fn partition_once(
    mesh: &TetMesh,
    forest: &RefinementForest,
    scenario: &Scenario,
    blocks: &[Vec<ElementId>],
) -> Result<PartitionAssignment> {
    match scenario.method {
        PartitionMethod::Rtk => {
            let assignment = partition_scanned(forest, |id| mesh.weight(id), scenario.p, blocks)?;
            debug_assert_eq!(
                assignment,
                crate::rtree::partition_serial(forest, |id| mesh.weight(id), scenario.p)?,
                "scan emulation diverged from the serial partitioner"
            );
            Ok(assignment)
        }
        PartitionMethod::MortonSfc | PartitionMethod::HilbertSfc => {
            let kind = match scenario.method {
                PartitionMethod::MortonSfc => CurveKind::Morton,
                _ => CurveKind::Hilbert,
            };
            let keys = element_keys(mesh, scenario.mode, kind, scenario.order)?;
            let items = keys_to_items(&keys, scenario.order);
            let params = Part1dParams {
                k: scenario.k,
                ..Part1dParams::default()
            };
            let (_, assignment) = partition_1d(&items, scenario.p, &params)?;
            Ok(assignment)
        }
    }
}

/// Group the depth-first leaf order into contiguous runs of equal placement
/// labels: the virtual-rank ownership blocks.
fn ownership_blocks(
    dfs: &[ElementId],
    placement: &BTreeMap<ElementId, usize>,
) -> Vec<Vec<ElementId>> {
    let mut blocks: Vec<Vec<ElementId>> = Vec::new();
    let mut current_label: Option<usize> = None;
    for &id in dfs {
        let label = placement.get(&id).copied();
        debug_assert!(label.is_some(), "placement covers all live leaves");
        if label != current_label || blocks.is_empty() {
            blocks.push(Vec::new());
            current_label = label;
        }
        blocks.last_mut().unwrap().push(id);
    }
    blocks
}

/// Run the full adaptive loop and return one record per step.
pub fn run_scenario(scenario: &Scenario) -> Result<Vec<StepRecord>> {
    scenario.validate()?;
    let mut mesh = build_mesh(&scenario.mesh)?;
    let mut forest = RefinementForest::from_mesh(&mesh);

    // Setup placement: partition the initial mesh on a single virtual rank
    // with identity process placement; step records then measure migration
    // caused by adaptation, not by the cold start.
    let initial_blocks = vec![forest.dfs_leaf_order()];
    let mut placement: BTreeMap<ElementId, usize> =
        partition_once(&mesh, &forest, scenario, &initial_blocks)?
            .iter()
            .collect();

    let mut records = Vec::with_capacity(scenario.steps);
    for step in 0..scenario.steps {
        let t = step as f64 / scenario.steps as f64;

        // (1) indicators
        let live: Vec<ElementId> = mesh.live_elements().collect();
        let indicator: BTreeMap<ElementId, f64> = live
            .iter()
            .map(|&id| {
                (
                    id,
                    indicator_value(scenario.indicator, mesh.barycenter(id), t),
                )
            })
            .collect();

        // (2) marking: top refine_fraction leaves, ties by element id
        let refine_count = (scenario.refine_fraction * live.len() as f64).floor() as usize;
        let mut by_indicator = live.clone();
        by_indicator.sort_by(|&a, &b| indicator[&b].total_cmp(&indicator[&a]).then(a.cmp(&b)));
        let mut refine_marks: Vec<ElementId> = by_indicator[..refine_count].to_vec();
        refine_marks.sort_unstable();

        // bottom coarsen_fraction of the eligible sibling pairs; a pair is
        // eligible when both children are live and neither is marked for
        // refinement; pair score is the larger child indicator
        let marked: std::collections::BTreeSet<ElementId> = refine_marks.iter().copied().collect();
        let mut eligible: Vec<(f64, ElementId)> = Vec::new();
        for &id in &live {
            let Some(parent) = mesh.element(id).unwrap().parent() else {
                continue;
            };
            let (l, r) = mesh.element(parent).unwrap().children().unwrap();
            if id != l {
                continue; // visit each pair once, from its left child
            }
            if mesh.is_live(l) && mesh.is_live(r) && !marked.contains(&l) && !marked.contains(&r) {
                let score = indicator[&l].max(indicator[&r]);
                eligible.push((score, parent));
            }
        }
        let coarsen_count = (scenario.coarsen_fraction * eligible.len() as f64).floor() as usize;
        eligible.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut coarsen_marks: Vec<ElementId> =
            eligible[..coarsen_count].iter().map(|&(_, p)| p).collect();
        coarsen_marks.sort_unstable();

        // (3) apply events, keep forest and inherited placement in sync
        for id in refine_marks {
            let part = placement.remove(&id).expect("marked leaf is placed");
            let ev = mesh.bisect(id)?;
            forest.mirror_event(&MeshEvent::Bisect(ev))?;
            placement.insert(ev.left_child, part);
            placement.insert(ev.right_child, part);
        }
        for parent in coarsen_marks {
            let (l, r) = mesh.element(parent).unwrap().children().unwrap();
            mesh.coarsen(parent)?;
            forest.mirror_event(&MeshEvent::Coarsen {
                parent,
                left_child: l,
                right_child: r,
            })?;
            let part = placement.remove(&l).expect("left child is placed");
            placement.remove(&r);
            placement.insert(parent, part);
        }

        // (4) repartition over virtual ranks
        let dfs = forest.dfs_leaf_order();
        let blocks = ownership_blocks(&dfs, &placement);
        let partition_started = Instant::now();
        let assignment = partition_once(&mesh, &forest, scenario, &blocks)?;
        let partition_seconds = partition_started.elapsed().as_secs_f64();

        // (5) remap new subgrids onto processes
        let old = PartitionAssignment::new(scenario.p, placement.clone())?;
        let remap_started = Instant::now();
        let similarity = build_similarity(&old, &assignment, |id| mesh.weight(id))?;
        let perm = remap_greedy(&similarity)?;
        let remap_seconds = remap_started.elapsed().as_secs_f64();
        let placed = assignment.relabeled(&perm)?;

        // (6) measure
        let report = quality_report(
            &mesh,
            Some(&old),
            &assignment,
            Some(&perm),
            |id| mesh.weight(id),
            scenario.p,
            Some(&dfs),
        )?;
        records.push(StepRecord {
            step,
            element_count: mesh.live_count(),
            report,
            partition_seconds,
            remap_seconds,
        });

        placement = placed.iter().collect();
    }
    Ok(records)
}
