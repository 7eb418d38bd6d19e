//! Table-driven 3D Hilbert indexing.
//!
//! The curve is generated by an octant state machine: a state is an
//! (entry corner, axis rotation) pair, and each of the eight octant labels
//! maps to a 3-bit key digit plus the child state. The table is built once
//! from the Gray-code construction; twelve states are reachable. Correctness
//! is pinned by the exhaustive bijectivity, adjacency and nesting tests
//! rather than by matching any particular published table.

use std::sync::OnceLock;

const DIM: u32 = 3;
const OCTANTS: usize = 8;

/// One state row: per octant label, the emitted key digit and next state.
#[derive(Debug, Clone, Copy)]
struct StateRow {
    digit: [u8; OCTANTS],
    next: [u8; OCTANTS],
}

struct StateTable {
    rows: Vec<StateRow>,
    initial: u8,
}

fn gray(i: u8) -> u8 {
    i ^ (i >> 1)
}

fn gray_inverse(g: u8) -> u8 {
    let mut i = g;
    i ^= i >> 1;
    i ^= i >> 2;
    i & 0b111
}

fn trailing_ones(i: u8) -> u32 {
    (i & 0b111).trailing_ones()
}

/// Entry corner of sub-octant `w` along the order-1 curve.
fn entry(w: u8) -> u8 {
    if w == 0 {
        0
    } else {
        gray(2 * ((w - 1) / 2))
    }
}

/// Axis along which sub-octant `w` connects to its successor.
fn direction(w: u8) -> u32 {
    if w == 0 {
        0
    } else if w.is_multiple_of(2) {
        trailing_ones(w - 1) % DIM
    } else {
        trailing_ones(w) % DIM
    }
}

fn rot_right(b: u8, k: u32) -> u8 {
    let k = k % DIM;
    ((b >> k) | (b << (DIM - k))) & 0b111
}

fn rot_left(b: u8, k: u32) -> u8 {
    rot_right(b, DIM - (k % DIM))
}

fn build_table() -> StateTable {
    // states are (entry ^ rotation) pairs reachable from (0, 0)
    let mut states: Vec<(u8, u32)> = vec![(0, 0)];
    let mut rows: Vec<StateRow> = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let (e, d) = states[i];
        let mut row = StateRow {
            digit: [0; OCTANTS],
            next: [0; OCTANTS],
        };
        for label in 0..OCTANTS as u8 {
            let transformed = rot_right(label ^ e, d + 1);
            let w = gray_inverse(transformed);
            let child_e = e ^ rot_left(entry(w), d + 1);
            let child_d = (d + direction(w) + 1) % DIM;
            let child = (child_e, child_d);
            let child_idx = match states.iter().position(|&s| s == child) {
                Some(idx) => idx,
                None => {
                    states.push(child);
                    states.len() - 1
                }
            };
            row.digit[label as usize] = w;
            row.next[label as usize] = child_idx as u8;
        }
        rows.push(row);
        i += 1;
    }
    debug_assert_eq!(rows.len(), 12);
    StateTable { rows, initial: 0 }
}

fn table() -> &'static StateTable {
    static TABLE: OnceLock<StateTable> = OnceLock::new();
    TABLE.get_or_init(build_table)
}

/// Hilbert index of the lattice cell `(x, y, z)` at curve order `m`
/// (each coordinate below `2^m`). The curve starts at the origin:
/// `(0, 0, 0)` always maps to key 0.
pub fn hilbert_index(x: u64, y: u64, z: u64, order: u32) -> u64 {
    let t = table();
    let mut state = t.initial as usize;
    let mut key = 0u64;
    for level in (0..order).rev() {
        let label =
            (((x >> level) & 1) | ((y >> level) & 1) << 1 | ((z >> level) & 1) << 2) as usize;
        let row = &t.rows[state];
        key = (key << 3) | row.digit[label] as u64;
        state = row.next[label] as usize;
    }
    key
}
