//! Dynamic load balancing for adaptive tetrahedral meshes.
//!
//! The crate bundles the pieces needed to keep an evolving tetrahedral mesh
//! evenly distributed over a set of processes:
//!
//! - [`mesh`] — the tetrahedral mesh itself, with bisection refinement,
//!   coarsening, synthetic generators and a plain-text file format;
//! - [`rtree`] — the refinement-tree partitioner: leaves of the bisection
//!   forest are ordered depth-first and split into parts by weight prefix
//!   sums, in serial and in an emulated-distributed (scan) form;
//! - [`sfc`] — Morton and Hilbert space-filling-curve keys with two
//!   bounding-box normalizations (aspect-preserving and per-axis stretch);
//! - [`part1d`] — a generalized multi-section partitioner for weighted keys
//!   on the unit interval;
//! - [`remap`] — similarity-matrix construction and subgrid-to-process
//!   remapping that minimizes data migration;
//! - [`metrics`] — partition quality measurements (imbalance, interface
//!   faces, migration volumes);
//! - [`harness`] — a deterministic adaptive-computation driver that replays
//!   estimate/mark/refine/partition/remap loops over virtual ranks.

pub mod error;
pub mod harness;
pub mod mesh;
pub mod metrics;
pub mod part1d;
pub mod remap;
pub mod rtree;
pub mod sfc;

pub use error::{Error, Result};
pub use mesh::{generate_box_mesh, load_mesh, save_mesh, Point3, TetMesh};
pub use metrics::QualityReport;
pub use rtree::{PartitionAssignment, RefinementForest};
pub use sfc::{CurveKind, NormalizeMode};
