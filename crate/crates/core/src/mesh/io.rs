//! `tetmesh v1` text format.
//!
//! ```text
//! tetmesh v1
//! <nv> <nt>
//! x y z            (nv lines, one vertex each)
//! v0 v1 v2 v3 w    (nt lines, 0-based vertex indices plus element weight)
//! ```
//!
//! Lines starting with `#` and blank lines are ignored. Reals are written
//! with 17 significant digits so a save/load round trip is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Point3, TetMesh};
use crate::error::{Error, Result};

/// Serialize the live elements of a mesh.
pub fn write_mesh_string(mesh: &TetMesh) -> String {
    let mut out = String::new();
    let live: Vec<_> = mesh.live_elements().collect();
    let _ = writeln!(out, "tetmesh v1");
    let _ = writeln!(out, "{} {}", mesh.vertices().len(), live.len());
    for p in mesh.vertices() {
        let _ = writeln!(out, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
    }
    for id in live {
        let t = mesh.element(id).unwrap();
        let [a, b, c, d] = t.vertices;
        let _ = writeln!(out, "{a} {b} {c} {d} {:.16e}", t.weight);
    }
    out
}

/// Parse the `tetmesh v1` format. Errors report 1-based line numbers.
pub fn parse_mesh(text: &str) -> Result<TetMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (line, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    if header != "tetmesh v1" {
        return Err(parse_err(line, "expected header `tetmesh v1`"));
    }

    let (line, counts) = lines
        .next()
        .ok_or_else(|| parse_err(line, "missing `<nv> <nt>` count line"))?;
    let mut it = counts.split_whitespace();
    let nv: usize = parse_field(line, it.next(), "vertex count")?;
    let nt: usize = parse_field(line, it.next(), "element count")?;
    if it.next().is_some() {
        return Err(parse_err(line, "trailing data on count line"));
    }

    let mut vertices = Vec::with_capacity(nv);
    let mut last_line = line;
    for _ in 0..nv {
        let (line, text) = lines.next().ok_or_else(|| {
            parse_err(
                last_line,
                &format!("vertex count mismatch: expected {nv} vertex lines"),
            )
        })?;
        last_line = line;
        let mut it = text.split_whitespace();
        let x: f64 = parse_field(line, it.next(), "x coordinate")?;
        let y: f64 = parse_field(line, it.next(), "y coordinate")?;
        let z: f64 = parse_field(line, it.next(), "z coordinate")?;
        if it.next().is_some() {
            return Err(parse_err(line, "trailing data on vertex line"));
        }
        let p = Point3::new(x, y, z);
        if !p.is_finite() {
            return Err(parse_err(line, "non-finite coordinate"));
        }
        vertices.push(p);
    }

    let mut tets = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (line, text) = lines.next().ok_or_else(|| {
            parse_err(
                last_line,
                &format!("element count mismatch: expected {nt} element lines"),
            )
        })?;
        last_line = line;
        let mut it = text.split_whitespace();
        let mut vs = [0usize; 4];
        for (slot, name) in ["v0", "v1", "v2", "v3"].iter().enumerate() {
            let v: usize = parse_field(line, it.next(), name)?;
            if v >= nv {
                return Err(parse_err(
                    line,
                    &format!("vertex index {v} out of range (nv = {nv})"),
                ));
            }
            vs[slot] = v;
        }
        let w: f64 = parse_field(line, it.next(), "weight")?;
        if !(w.is_finite() && w >= 0.0) {
            return Err(parse_err(line, "weight must be finite and nonnegative"));
        }
        if it.next().is_some() {
            return Err(parse_err(line, "trailing data on element line"));
        }
        tets.push((vs, w));
    }

    if let Some((line, _)) = lines.next() {
        return Err(parse_err(line, "trailing data after last element"));
    }

    TetMesh::from_parts(vertices, tets)
}

pub fn load_mesh<P: AsRef<Path>>(path: P) -> Result<TetMesh> {
    let text = fs::read_to_string(path.as_ref())?;
    parse_mesh(&text)
}

pub fn save_mesh<P: AsRef<Path>>(mesh: &TetMesh, path: P) -> Result<()> {
    fs::write(path.as_ref(), write_mesh_string(mesh))?;
    Ok(())
}

fn parse_err(line: usize, msg: &str) -> Error {
    Error::Parse {
        line,
        msg: msg.to_string(),
    }
}

fn parse_field<T: std::str::FromStr>(line: usize, field: Option<&str>, name: &str) -> Result<T> {
    let raw = field.ok_or_else(|| parse_err(line, &format!("missing {name}")))?;
    raw.parse()
        .map_err(|_| parse_err(line, &format!("cannot parse {name} from `{raw}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_box_mesh;

    #[test]
    fn round_trip_is_exact() {
        let mesh = generate_box_mesh(1, 1, 1, (1.0, 1.0, 1.0)).unwrap();
        let text = write_mesh_string(&mesh);
        let back = parse_mesh(&text).unwrap();
        assert_eq!(mesh.vertices(), back.vertices());
        assert_eq!(mesh.live_count(), back.live_count());
        for (a, b) in mesh.live_elements().zip(back.live_elements()) {
            let ta = mesh.element(a).unwrap();
            let tb = back.element(b).unwrap();
            assert_eq!(ta.vertices, tb.vertices);
            assert_eq!(ta.weight.to_bits(), tb.weight.to_bits());
        }
        // and byte-for-byte after a second trip
        assert_eq!(text, write_mesh_string(&back));
    }

    #[test]
    fn round_trip_preserves_awkward_reals() {
        let mut mesh = generate_box_mesh(1, 1, 1, (1.0, 3.0, 7.0)).unwrap();
        mesh.set_weight(0, 0.1 + 0.2).unwrap();
        mesh.set_weight(1, f64::MIN_POSITIVE).unwrap();
        let back = parse_mesh(&write_mesh_string(&mesh)).unwrap();
        for (v, w) in mesh.vertices().iter().zip(back.vertices()) {
            assert_eq!(v.x.to_bits(), w.x.to_bits());
            assert_eq!(v.y.to_bits(), w.y.to_bits());
            assert_eq!(v.z.to_bits(), w.z.to_bits());
        }
        assert_eq!(back.weight(0).to_bits(), (0.1f64 + 0.2).to_bits());
        assert_eq!(back.weight(1), f64::MIN_POSITIVE);
    }

    #[test]
    fn empty_file_reports_missing_header() {
        match parse_mesh("") {
            Err(Error::Parse { line: 1, msg }) => assert!(msg.contains("missing header")),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn count_mismatch_names_the_line() {
        let text = "tetmesh v1\n4 1\n0 0 0\n1 0 0\n0 1 0\n";
        match parse_mesh(text) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 5);
                assert!(msg.contains("vertex count mismatch"), "{msg}");
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn bad_index_and_bad_float_are_rejected() {
        let base = "tetmesh v1\n4 1\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n";
        let bad_index = format!("{base}0 1 2 9 1.0\n");
        assert!(matches!(
            parse_mesh(&bad_index),
            Err(Error::Parse { line: 7, .. })
        ));
        let bad_float = "tetmesh v1\n4 1\n0 0 zero\n1 0 0\n0 1 0\n0 0 1\n0 1 2 3 1\n";
        assert!(matches!(
            parse_mesh(bad_float),
            Err(Error::Parse { line: 3, .. })
        ));
        let non_finite = "tetmesh v1\n4 1\n0 0 inf\n1 0 0\n0 1 0\n0 0 1\n0 1 2 3 1\n";
        assert!(matches!(
            parse_mesh(non_finite),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text =
            "# a mesh\n\ntetmesh v1\n# counts\n4 1\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 1 2 3 2.5\n";
        let mesh = parse_mesh(text).unwrap();
        assert_eq!(mesh.live_count(), 1);
        assert_eq!(mesh.weight(0), 2.5);
    }
}
