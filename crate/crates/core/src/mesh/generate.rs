//! Synthetic box meshes.

use super::{Point3, TetMesh};
use crate::error::{Error, Result};

/// The six axis permutations of the Kuhn cell split, lexicographic order.
/// Odd permutations are stored with their last two path corners swapped so
/// every tetrahedron keeps a positive signed volume.
const KUHN_PATHS: [([usize; 3], bool); 6] = [
    ([0, 1, 2], false),
    ([0, 2, 1], true),
    ([1, 0, 2], true),
    ([1, 2, 0], false),
    ([2, 0, 1], false),
    ([2, 1, 0], true),
];

/// Generate a conforming tetrahedral mesh of the box
/// `[0, dims.0] x [0, dims.1] x [0, dims.2]` with `nx * ny * nz` grid cells,
/// each split into six tetrahedra around the cell's main diagonal (the Kuhn
/// split). Identical inputs give bit-identical meshes.
///
/// Cell faces are cut along translation-invariant diagonals, so neighboring
/// cells match and the initial mesh has no hanging nodes.
pub fn generate_box_mesh(
    nx: usize,
    ny: usize,
    nz: usize,
    dims: (f64, f64, f64),
) -> Result<TetMesh> {
    if nx < 1 || ny < 1 || nz < 1 {
        return Err(Error::InvalidArgument(
            "cell counts must all be at least 1".into(),
        ));
    }
    let (dx, dy, dz) = dims;
    if !(dx.is_finite() && dy.is_finite() && dz.is_finite() && dx > 0.0 && dy > 0.0 && dz > 0.0) {
        return Err(Error::InvalidArgument(
            "box dimensions must be finite and positive".into(),
        ));
    }

    let sx = dx / nx as f64;
    let sy = dy / ny as f64;
    let sz = dz / nz as f64;
    let vid = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push(Point3::new(i as f64 * sx, j as f64 * sy, k as f64 * sz));
            }
        }
    }

    let mut tets = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                for (axes, swap) in KUHN_PATHS {
                    let mut corner = [i, j, k];
                    let mut path = [vid(i, j, k); 4];
                    for (step, &axis) in axes.iter().enumerate() {
                        corner[axis] += 1;
                        path[step + 1] = vid(corner[0], corner[1], corner[2]);
                    }
                    if swap {
                        path.swap(2, 3);
                    }
                    tets.push((path, 1.0));
                }
            }
        }
    }

    TetMesh::from_parts(vertices, tets)
}
