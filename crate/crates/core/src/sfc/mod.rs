//! Space-filling-curve keys for mesh elements.
//!
//! Elements are keyed in three steps: the mesh bounding box is mapped into
//! the unit cube (two normalizations, see [`NormalizeMode`]), element
//! barycenters are quantized onto a `2^m` lattice, and a Morton or Hilbert
//! curve turns each lattice cell into a single integer key of `3m` bits.

mod hilbert;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Aabb, ElementId, Point3, TetMesh};

/// Maximum curve order: 3 * 21 = 63 key bits fit a u64.
pub const MAX_ORDER: u32 = 21;

/// How the mesh bounding box is mapped into the unit cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormalizeMode {
    /// Divide every axis by the single largest box length. The image keeps
    /// the domain's aspect ratio and may occupy only a slab of the unit
    /// cube; spatially close points stay close on the curve.
    PreserveAspect,
    /// Divide each axis by its own length, stretching the box onto the full
    /// unit cube and distorting elongated domains.
    StretchToUnit,
}

/// Which space-filling curve generates the keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveKind {
    /// Bit interleaving; cheap, but consecutive keys can jump across space.
    Morton,
    /// Octant state machine; consecutive keys are always face neighbors.
    Hilbert,
}

/// A curve key of `3 * order` bits.
pub type SfcKey = u64;

fn check_order(order: u32) -> Result<()> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::InvalidArgument(format!(
            "curve order must be in 1..={MAX_ORDER}, got {order}"
        )));
    }
    Ok(())
}

/// Map points inside `bbox` into `[0, 1)^3`.
///
/// Outputs are clamped to `1 - 2^(-order-1)` so quantizing at `order` bits
/// per axis never overflows the lattice. A zero-length axis collapses to
/// coordinate 0. Points outside the box by more than `1e-12 * len` are
/// rejected.
pub fn normalize(
    points: &[Point3],
    bbox: &Aabb,
    mode: NormalizeMode,
    order: u32,
) -> Result<Vec<[f64; 3]>> {
    check_order(order)?;
    let len_max = bbox.max_length();
    if len_max <= 0.0 {
        return Err(Error::DegenerateInput(
            "bounding box has zero extent on all axes".into(),
        ));
    }
    let tolerance = 1e-12 * len_max;
    let limit = 1.0 - 0.5f64.powi(order as i32 + 1);
    let mins = [bbox.min.x, bbox.min.y, bbox.min.z];
    let mut out = Vec::with_capacity(points.len());
    for (idx, p) in points.iter().enumerate() {
        let coords = [p.x, p.y, p.z];
        let mut unit = [0.0; 3];
        for axis in 0..3 {
            let len = bbox.lengths[axis];
            let offset = coords[axis] - mins[axis];
            if offset < -tolerance || offset > len + tolerance {
                return Err(Error::InvalidArgument(format!(
                    "point {idx} lies outside the bounding box on axis {axis}"
                )));
            }
            let divisor = match mode {
                NormalizeMode::PreserveAspect => len_max,
                NormalizeMode::StretchToUnit => len,
            };
            unit[axis] = if divisor > 0.0 {
                (offset / divisor).clamp(0.0, limit)
            } else {
                0.0
            };
        }
        out.push(unit);
    }
    Ok(out)
}

fn quantize(coord: [f64; 3], order: u32) -> Result<[u64; 3]> {
    let scale = (1u64 << order) as f64;
    let mut cell = [0u64; 3];
    for axis in 0..3 {
        let c = coord[axis];
        if !(0.0..1.0).contains(&c) {
            return Err(Error::InvalidArgument(format!(
                "unit coordinate {c} on axis {axis} is outside [0, 1)"
            )));
        }
        cell[axis] = (c * scale) as u64;
    }
    Ok(cell)
}

/// Morton key: quantize each axis to `order` bits and interleave them
/// most-significant level first, `(x_bit << 2) | (y_bit << 1) | z_bit`
/// within each level.
pub fn morton_key(coord: [f64; 3], order: u32) -> Result<SfcKey> {
    check_order(order)?;
    let [x, y, z] = quantize(coord, order)?;
    let mut key = 0u64;
    for level in (0..order).rev() {
        key = (key << 3) | ((x >> level) & 1) << 2 | ((y >> level) & 1) << 1 | ((z >> level) & 1);
    }
    Ok(key)
}

/// Hilbert key: quantize each axis to `order` bits and run the octant state
/// machine most-significant level first. Consecutive keys map to lattice
/// cells differing by one step along exactly one axis.
pub fn hilbert_key(coord: [f64; 3], order: u32) -> Result<SfcKey> {
    check_order(order)?;
    let [x, y, z] = quantize(coord, order)?;
    Ok(hilbert::hilbert_index(x, y, z, order))
}

/// Key every live element by its barycenter. Output is ordered by ascending
/// element id; equal keys stay as distinct entries.
pub fn element_keys(
    mesh: &TetMesh,
    mode: NormalizeMode,
    kind: CurveKind,
    order: u32,
) -> Result<Vec<(ElementId, SfcKey, f64)>> {
    let ids: Vec<ElementId> = mesh.live_elements().collect();
    if ids.is_empty() {
        return Err(Error::InvalidArgument("mesh has no live elements".into()));
    }
    let barycenters: Vec<Point3> = ids.iter().map(|&id| mesh.barycenter(id)).collect();
    let units = normalize(&barycenters, mesh.bbox(), mode, order)?;
    let mut out = Vec::with_capacity(ids.len());
    for (&id, &unit) in ids.iter().zip(&units) {
        let key = match kind {
            CurveKind::Morton => morton_key(unit, order)?,
            CurveKind::Hilbert => hilbert_key(unit, order)?,
        };
        out.push((id, key, mesh.weight(id)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_box_mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_box() -> Aabb {
        Aabb {
            min: Point3::new(0.0, 0.0, 0.0),
            lengths: [8.0, 1.0, 1.0],
        }
    }

    #[test]
    fn normalize_examples() {
        let bbox = unit_box();
        let corner = [Point3::new(8.0, 1.0, 1.0)];
        let preserved = normalize(&corner, &bbox, NormalizeMode::PreserveAspect, 21).unwrap();
        assert!((preserved[0][0] - 1.0).abs() < 1e-6);
        assert!((preserved[0][1] - 0.125).abs() < 1e-12);
        assert!((preserved[0][2] - 0.125).abs() < 1e-12);

        let stretched = normalize(&corner, &bbox, NormalizeMode::StretchToUnit, 21).unwrap();
        for c in stretched[0] {
            assert!((c - 1.0).abs() < 1e-6);
            assert!(c < 1.0);
        }

        let min_corner = [Point3::new(0.0, 0.0, 0.0)];
        for mode in [NormalizeMode::PreserveAspect, NormalizeMode::StretchToUnit] {
            assert_eq!(
                normalize(&min_corner, &bbox, mode, 21).unwrap()[0],
                [0.0; 3]
            );
        }
    }

    #[test]
    fn normalize_rejects_degenerate_and_outside() {
        let degenerate = Aabb {
            min: Point3::new(0.0, 0.0, 0.0),
            lengths: [0.0, 0.0, 0.0],
        };
        assert!(matches!(
            normalize(
                &[Point3::new(0.0, 0.0, 0.0)],
                &degenerate,
                NormalizeMode::PreserveAspect,
                21
            ),
            Err(Error::DegenerateInput(_))
        ));
        let bbox = unit_box();
        assert!(matches!(
            normalize(
                &[Point3::new(9.0, 0.0, 0.0)],
                &bbox,
                NormalizeMode::PreserveAspect,
                21
            ),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn morton_examples() {
        assert_eq!(morton_key([0.75, 0.25, 0.75], 1).unwrap(), 5);
        assert_eq!(morton_key([0.0, 0.0, 0.0], 1).unwrap(), 0);
        assert_eq!(hilbert_key([0.0, 0.0, 0.0], 4).unwrap(), 0);
    }

    #[test]
    fn keys_reject_bad_input() {
        assert!(morton_key([1.0, 0.0, 0.0], 4).is_err());
        assert!(morton_key([-0.1, 0.0, 0.0], 4).is_err());
        assert!(morton_key([0.5, 0.5, 0.5], 0).is_err());
        assert!(morton_key([0.5, 0.5, 0.5], 22).is_err());
        assert!(hilbert_key([f64::NAN, 0.0, 0.0], 4).is_err());
    }

    fn all_cells(m: u32) -> impl Iterator<Item = [f64; 3]> {
        let n = 1u64 << m;
        let step = 1.0 / n as f64;
        (0..n).flat_map(move |x| {
            (0..n).flat_map(move |y| {
                (0..n).map(move |z| {
                    [
                        (x as f64 + 0.5) * step,
                        (y as f64 + 0.5) * step,
                        (z as f64 + 0.5) * step,
                    ]
                })
            })
        })
    }

    #[test]
    fn bijectivity_small_orders() {
        for m in 1..=3u32 {
            let total = 1usize << (3 * m);
            for key_fn in [morton_key, hilbert_key] {
                let mut seen = vec![false; total];
                for c in all_cells(m) {
                    let k = key_fn(c, m).unwrap() as usize;
                    assert!(k < total);
                    assert!(!seen[k], "duplicate key {k} at order {m}");
                    seen[k] = true;
                }
            }
        }
    }

    #[test]
    fn hilbert_adjacent_morton_jumps() {
        // order 2: every consecutive Hilbert pair is a face step; Morton has
        // at least one jump
        let m = 2u32;
        let total = 1usize << (3 * m);
        let mut hilbert_cells = vec![[0u64; 3]; total];
        let mut morton_cells = vec![[0u64; 3]; total];
        let n = 1u64 << m;
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let c = [
                        (x as f64 + 0.5) / n as f64,
                        (y as f64 + 0.5) / n as f64,
                        (z as f64 + 0.5) / n as f64,
                    ];
                    hilbert_cells[hilbert_key(c, m).unwrap() as usize] = [x, y, z];
                    morton_cells[morton_key(c, m).unwrap() as usize] = [x, y, z];
                }
            }
        }
        let step = |a: [u64; 3], b: [u64; 3]| -> u64 { (0..3).map(|i| a[i].abs_diff(b[i])).sum() };
        assert!(hilbert_cells.windows(2).all(|w| step(w[0], w[1]) == 1));
        assert!(morton_cells.windows(2).any(|w| step(w[0], w[1]) > 1));
    }

    #[test]
    fn nesting_prefix_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..2000 {
            let c = [
                rng.random::<f64>(),
                rng.random::<f64>(),
                rng.random::<f64>(),
            ];
            for m in 2..=6u32 {
                assert_eq!(
                    morton_key(c, m).unwrap() >> 3,
                    morton_key(c, m - 1).unwrap()
                );
                assert_eq!(
                    hilbert_key(c, m).unwrap() >> 3,
                    hilbert_key(c, m - 1).unwrap()
                );
            }
        }
    }

    #[test]
    fn element_keys_are_translation_and_scale_invariant() {
        let base = generate_box_mesh(4, 2, 1, (2.0, 1.0, 0.5)).unwrap();
        // same lattice, translated and uniformly scaled; the factors are
        // exactly representable so the normalized coordinates match bitwise
        let scaled = {
            let vertices = base
                .vertices()
                .iter()
                .map(|p| Point3::new(2.0 * p.x + 10.0, 2.0 * p.y - 4.0, 2.0 * p.z + 0.25))
                .collect();
            let tets = base
                .live_elements()
                .map(|id| (base.element(id).unwrap().vertices, 1.0))
                .collect();
            TetMesh::from_parts(vertices, tets).unwrap()
        };
        for mode in [NormalizeMode::PreserveAspect, NormalizeMode::StretchToUnit] {
            for kind in [CurveKind::Morton, CurveKind::Hilbert] {
                let a = element_keys(&base, mode, kind, 12).unwrap();
                let b = element_keys(&scaled, mode, kind, 12).unwrap();
                let sort = |mut keys: Vec<(ElementId, SfcKey, f64)>| {
                    keys.sort_by_key(|&(id, k, _)| (k, id));
                    keys.into_iter().map(|(id, _, _)| id).collect::<Vec<_>>()
                };
                assert_eq!(sort(a), sort(b));
            }
        }
    }

    #[test]
    fn duplicate_barycenters_stay_distinct() {
        // two stacked copies of the same tet shape share no vertices but can
        // produce equal keys; both entries must remain
        let mesh = generate_box_mesh(1, 1, 1, (1.0, 1.0, 1.0)).unwrap();
        let keys =
            element_keys(&mesh, NormalizeMode::PreserveAspect, CurveKind::Morton, 2).unwrap();
        assert_eq!(keys.len(), mesh.live_count());
    }
}
