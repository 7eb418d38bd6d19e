//! Partition a synthetic box mesh with the refinement-tree method.

use tetpart::rtree::partition_serial;
use tetpart::{generate_box_mesh, RefinementForest, Result};

fn main() -> Result<()> {
    let mesh = generate_box_mesh(4, 4, 4, (1.0, 1.0, 1.0))?;
    let forest = RefinementForest::from_mesh(&mesh);
    let parts = partition_serial(&forest, |id| mesh.weight(id), 8)?;
    for (element, part) in parts.iter().take(3) {
        println!("element {element} -> part {part}");
    }
    Ok(())
}
