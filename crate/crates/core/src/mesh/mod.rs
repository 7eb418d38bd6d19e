//! Tetrahedral mesh with bisection refinement and coarsening.
//!
//! The mesh is the substrate every partitioner acts on. Elements are
//! tetrahedra identified by a stable `ElementId`; refinement bisects a live
//! element at its longest edge into two children, coarsening collapses a
//! sibling pair back into its parent. Every mutation is appended to an event
//! log so a [`crate::rtree::RefinementForest`] can mirror the mesh exactly.
//!
//! Hanging nodes are permitted: refinement performs no closure, so a face of
//! a coarse element may be geometrically covered by two finer faces of a
//! refined neighbor. The face map keys faces by their sorted vertex triple;
//! "interior" means two live elements share the identical triple.

mod generate;
mod io;

pub use generate::generate_box_mesh;
pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh_string};

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};

/// Stable element identifier; ids are allocated densely and never reused.
pub type ElementId = usize;

/// A point in model units. All components must be finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    fn midpoint(&self, other: &Point3) -> Point3 {
        Point3::new(
            0.5 * (self.x + other.x),
            0.5 * (self.y + other.y),
            0.5 * (self.z + other.z),
        )
    }
}

/// Axis-aligned bounding box stored as min corner plus per-axis lengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub lengths: [f64; 3],
}

impl Aabb {
    /// Bounding box of a nonempty point set.
    pub fn of_points(points: &[Point3]) -> Aabb {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in points {
            for (axis, c) in [p.x, p.y, p.z].into_iter().enumerate() {
                lo[axis] = lo[axis].min(c);
                hi[axis] = hi[axis].max(c);
            }
        }
        Aabb {
            min: Point3::new(lo[0], lo[1], lo[2]),
            lengths: [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]],
        }
    }

    pub fn max_length(&self) -> f64 {
        self.lengths[0].max(self.lengths[1]).max(self.lengths[2])
    }
}

/// A tetrahedral element.
///
/// `tree_node` names the forest node this element corresponds to; ids are
/// shared between mesh and forest, so it always equals `element_id`.
#[derive(Debug, Clone)]
pub struct Tet {
    pub vertices: [usize; 4],
    pub element_id: ElementId,
    pub tree_node: ElementId,
    pub weight: f64,
    parent: Option<ElementId>,
    children: Option<(ElementId, ElementId)>,
}

impl Tet {
    pub fn parent(&self) -> Option<ElementId> {
        self.parent
    }

    /// Children created by the most recent bisection of this element, if it
    /// is currently refined.
    pub fn children(&self) -> Option<(ElementId, ElementId)> {
        self.children
    }

    /// The four faces as sorted vertex triples.
    pub fn faces(&self) -> [[usize; 3]; 4] {
        let v = self.vertices;
        [
            sorted_triple(v[1], v[2], v[3]),
            sorted_triple(v[0], v[2], v[3]),
            sorted_triple(v[0], v[1], v[3]),
            sorted_triple(v[0], v[1], v[2]),
        ]
    }
}

fn sorted_triple(a: usize, b: usize, c: usize) -> [usize; 3] {
    let mut t = [a, b, c];
    t.sort_unstable();
    t
}

/// Record of one bisection: `parent` was cut at `cut_edge` through
/// `new_vertex` into `left_child` and `right_child`.
///
/// The left child is the one containing the smaller-indexed endpoint of the
/// cut edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BisectionEvent {
    pub parent: ElementId,
    pub left_child: ElementId,
    pub right_child: ElementId,
    pub cut_edge: (usize, usize),
    pub new_vertex: usize,
}

/// One entry of the mesh event log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshEvent {
    Bisect(BisectionEvent),
    Coarsen {
        parent: ElementId,
        left_child: ElementId,
        right_child: ElementId,
    },
}

/// Incidence of a face triple: one or two elements.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct FaceIncidence {
    slots: [Option<ElementId>; 2],
}

impl FaceIncidence {
    fn add(&mut self, e: ElementId) {
        if self.slots[0].is_none() {
            self.slots[0] = Some(e);
        } else if self.slots[1].is_none() {
            self.slots[1] = Some(e);
        } else {
            unreachable!("face incidence overflow: a triple cannot bound three tets");
        }
    }

    fn remove(&mut self, e: ElementId) {
        if self.slots[0] == Some(e) {
            self.slots[0] = None;
        } else if self.slots[1] == Some(e) {
            self.slots[1] = None;
        } else {
            unreachable!("face incidence underflow");
        }
    }

    fn is_empty(&self) -> bool {
        self.slots[0].is_none() && self.slots[1].is_none()
    }

    /// Both incident elements, ordered by ascending id, when the face is
    /// interior.
    fn pair(&self) -> Option<(ElementId, ElementId)> {
        match (self.slots[0], self.slots[1]) {
            (Some(a), Some(b)) => Some((a.min(b), a.max(b))),
            _ => None,
        }
    }

    fn contains(&self, e: ElementId) -> bool {
        self.slots[0] == Some(e) || self.slots[1] == Some(e)
    }

    fn sorted(&self) -> Vec<ElementId> {
        let mut v: Vec<ElementId> = self.slots.iter().flatten().copied().collect();
        v.sort_unstable();
        v
    }
}

/// A tetrahedral mesh with an event log of refinements and coarsenings.
///
/// Mutation (`bisect`, `coarsen`) must be externally serialized; read-only
/// queries are safe from concurrent readers.
#[derive(Debug, Clone)]
pub struct TetMesh {
    vertices: Vec<Point3>,
    elements: Vec<Tet>,
    live: BTreeSet<ElementId>,
    faces: HashMap<[usize; 3], FaceIncidence>,
    edge_midpoints: HashMap<(usize, usize), usize>,
    bbox: Aabb,
    initial_count: usize,
    events: Vec<MeshEvent>,
}

impl TetMesh {
    /// Build a mesh from raw vertices and `(vertex indices, weight)` tuples.
    ///
    /// Element ids are assigned in input order starting from 0; these
    /// elements become the roots of the refinement forest.
    pub fn from_parts(vertices: Vec<Point3>, tets: Vec<([usize; 4], f64)>) -> Result<TetMesh> {
        if vertices.is_empty() || tets.is_empty() {
            return Err(Error::InvalidArgument(
                "mesh needs at least one vertex and one tetrahedron".into(),
            ));
        }
        for (i, p) in vertices.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "vertex {i} has a non-finite coordinate"
                )));
            }
        }
        let mut elements = Vec::with_capacity(tets.len());
        for (id, (vs, weight)) in tets.into_iter().enumerate() {
            for &v in &vs {
                if v >= vertices.len() {
                    return Err(Error::InvalidArgument(format!(
                        "element {id}: vertex index {v} out of range"
                    )));
                }
            }
            let mut sorted = vs;
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "element {id}: vertex indices are not distinct"
                )));
            }
            if !(weight.is_finite() && weight >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "element {id}: weight must be finite and nonnegative"
                )));
            }
            let tet = Tet {
                vertices: vs,
                element_id: id,
                tree_node: id,
                weight,
                parent: None,
                children: None,
            };
            if signed_volume(&vertices, &tet.vertices) <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "element {id}: signed volume is not strictly positive"
                )));
            }
            elements.push(tet);
        }

        let mut faces: HashMap<[usize; 3], FaceIncidence> = HashMap::new();
        for tet in &elements {
            for f in tet.faces() {
                let inc = faces.entry(f).or_default();
                if inc.pair().is_some() {
                    return Err(Error::InvalidArgument(format!(
                        "face {f:?} is shared by more than two elements"
                    )));
                }
                inc.add(tet.element_id);
            }
        }

        let bbox = Aabb::of_points(&vertices);
        let initial_count = elements.len();
        Ok(TetMesh {
            live: (0..initial_count).collect(),
            vertices,
            elements,
            faces,
            edge_midpoints: HashMap::new(),
            bbox,
            initial_count,
            events: Vec::new(),
        })
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point3 {
        self.vertices[i]
    }

    /// Number of elements in the initial mesh (the forest roots 0..n).
    pub fn initial_count(&self) -> usize {
        self.initial_count
    }

    pub fn live_count(&self) -> usize {
        self.live.len()
    }

    /// Live element ids in ascending order.
    pub fn live_elements(&self) -> impl Iterator<Item = ElementId> + '_ {
        self.live.iter().copied()
    }

    pub fn is_live(&self, id: ElementId) -> bool {
        self.live.contains(&id)
    }

    pub fn element(&self, id: ElementId) -> Option<&Tet> {
        self.elements.get(id)
    }

    pub fn weight(&self, id: ElementId) -> f64 {
        self.elements[id].weight
    }

    /// Set the user-supplied weight of a live element.
    pub fn set_weight(&mut self, id: ElementId, weight: f64) -> Result<()> {
        if !self.live.contains(&id) {
            return Err(Error::NotFound(format!("element {id} is not live")));
        }
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::InvalidArgument(
                "weight must be finite and nonnegative".into(),
            ));
        }
        self.elements[id].weight = weight;
        Ok(())
    }

    pub fn bbox(&self) -> &Aabb {
        &self.bbox
    }

    pub fn events(&self) -> &[MeshEvent] {
        &self.events
    }

    pub fn barycenter(&self, id: ElementId) -> Point3 {
        let t = &self.elements[id];
        let mut x = 0.0;
        let mut y = 0.0;
        let mut z = 0.0;
        for &v in &t.vertices {
            let p = self.vertices[v];
            x += p.x;
            y += p.y;
            z += p.z;
        }
        Point3::new(0.25 * x, 0.25 * y, 0.25 * z)
    }

    pub fn signed_volume(&self, id: ElementId) -> f64 {
        signed_volume(&self.vertices, &self.elements[id].vertices)
    }

    pub fn total_live_volume(&self) -> f64 {
        self.live.iter().map(|&id| self.signed_volume(id)).sum()
    }

    /// Bisect a live element at its longest edge.
    ///
    /// The edge with the greatest length is cut at its midpoint; ties are
    /// broken by the lexicographically smallest `(min index, max index)`
    /// vertex pair. Midpoint vertices are shared between elements bisected
    /// at the same edge. The left child is the one keeping the
    /// smaller-indexed endpoint of the cut edge.
    pub fn bisect(&mut self, element_id: ElementId) -> Result<BisectionEvent> {
        if !self.live.contains(&element_id) {
            return Err(Error::NotFound(format!(
                "element {element_id} is not a live leaf"
            )));
        }
        let parent = self.elements[element_id].clone();
        let (u, v) = self.longest_edge(&parent);

        let mid = match self.edge_midpoints.get(&(u, v)) {
            Some(&m) => m,
            None => {
                let m = self.vertices.len();
                self.vertices
                    .push(self.vertices[u].midpoint(&self.vertices[v]));
                self.edge_midpoints.insert((u, v), m);
                m
            }
        };

        let left_id = self.elements.len();
        let right_id = left_id + 1;
        let mut left_vs = parent.vertices;
        let mut right_vs = parent.vertices;
        for slot in 0..4 {
            if left_vs[slot] == v {
                left_vs[slot] = mid;
            }
            if right_vs[slot] == u {
                right_vs[slot] = mid;
            }
        }
        let child = |id: ElementId, vs: [usize; 4]| Tet {
            vertices: vs,
            element_id: id,
            tree_node: id,
            weight: parent.weight,
            parent: Some(element_id),
            children: None,
        };
        let left = child(left_id, left_vs);
        let right = child(right_id, right_vs);

        for f in parent.faces() {
            self.remove_face(f, element_id);
        }
        for f in left.faces() {
            self.faces.entry(f).or_default().add(left_id);
        }
        for f in right.faces() {
            self.faces.entry(f).or_default().add(right_id);
        }

        self.elements.push(left);
        self.elements.push(right);
        self.elements[element_id].children = Some((left_id, right_id));
        self.live.remove(&element_id);
        self.live.insert(left_id);
        self.live.insert(right_id);

        let event = BisectionEvent {
            parent: element_id,
            left_child: left_id,
            right_child: right_id,
            cut_edge: (u, v),
            new_vertex: mid,
        };
        self.events.push(MeshEvent::Bisect(event));
        Ok(event)
    }

    /// Collapse the two children of `parent_id` back into the parent.
    pub fn coarsen(&mut self, parent_id: ElementId) -> Result<()> {
        let parent = self
            .elements
            .get(parent_id)
            .ok_or_else(|| Error::NotFound(format!("element {parent_id} does not exist")))?;
        let (l, r) = parent.children().ok_or_else(|| {
            Error::Precondition(format!("element {parent_id} has no children to collapse"))
        })?;
        if !self.live.contains(&l) || !self.live.contains(&r) {
            return Err(Error::Precondition(format!(
                "children of element {parent_id} are not both live leaves"
            )));
        }

        let left_faces = self.elements[l].faces();
        let right_faces = self.elements[r].faces();
        for f in left_faces {
            self.remove_face(f, l);
        }
        for f in right_faces {
            self.remove_face(f, r);
        }
        let parent_faces = self.elements[parent_id].faces();
        for f in parent_faces {
            self.faces.entry(f).or_default().add(parent_id);
        }

        self.live.remove(&l);
        self.live.remove(&r);
        self.live.insert(parent_id);
        self.elements[parent_id].children = None;

        self.events.push(MeshEvent::Coarsen {
            parent: parent_id,
            left_child: l,
            right_child: r,
        });
        Ok(())
    }

    fn remove_face(&mut self, f: [usize; 3], e: ElementId) {
        let inc = self
            .faces
            .get_mut(&f)
            .expect("face map out of sync with elements");
        inc.remove(e);
        if inc.is_empty() {
            self.faces.remove(&f);
        }
    }

    fn longest_edge(&self, tet: &Tet) -> (usize, usize) {
        let mut best: Option<((usize, usize), f64)> = None;
        for i in 0..4 {
            for j in (i + 1)..4 {
                let a = tet.vertices[i].min(tet.vertices[j]);
                let b = tet.vertices[i].max(tet.vertices[j]);
                let pa = self.vertices[a];
                let pb = self.vertices[b];
                let dx = pa.x - pb.x;
                let dy = pa.y - pb.y;
                let dz = pa.z - pb.z;
                let len2 = dx * dx + dy * dy + dz * dz;
                let better = match best {
                    None => true,
                    Some((pair, best_len2)) => {
                        len2 > best_len2 || (len2 == best_len2 && (a, b) < pair)
                    }
                };
                if better {
                    best = Some(((a, b), len2));
                }
            }
        }
        best.unwrap().0
    }

    /// All interior faces as element pairs `(a, b)` with `a < b`, sorted.
    pub fn interior_faces(&self) -> Vec<(ElementId, ElementId)> {
        let mut pairs: Vec<(ElementId, ElementId)> =
            self.faces.values().filter_map(|inc| inc.pair()).collect();
        pairs.sort_unstable();
        pairs
    }

    /// Whether two live elements share a face triple.
    pub fn share_face(&self, a: ElementId, b: ElementId) -> bool {
        self.elements[a]
            .faces()
            .iter()
            .any(|f| self.faces.get(f).is_some_and(|inc| inc.contains(b)))
    }

    /// Deterministic snapshot of the face map: `(triple, incident ids)`
    /// sorted by triple. Used to check the incrementally maintained map
    /// against [`TetMesh::recomputed_face_snapshot`].
    pub fn face_snapshot(&self) -> Vec<([usize; 3], Vec<ElementId>)> {
        let mut out: Vec<_> = self
            .faces
            .iter()
            .map(|(f, inc)| (*f, inc.sorted()))
            .collect();
        out.sort_unstable();
        out
    }

    /// Face map rebuilt from scratch from the live elements.
    pub fn recomputed_face_snapshot(&self) -> Vec<([usize; 3], Vec<ElementId>)> {
        let mut map: HashMap<[usize; 3], Vec<ElementId>> = HashMap::new();
        for &id in &self.live {
            for f in self.elements[id].faces() {
                map.entry(f).or_default().push(id);
            }
        }
        let mut out: Vec<_> = map
            .into_iter()
            .map(|(f, mut ids)| {
                ids.sort_unstable();
                (f, ids)
            })
            .collect();
        out.sort_unstable();
        out
    }
}

fn signed_volume(vertices: &[Point3], vs: &[usize; 4]) -> f64 {
    let p0 = vertices[vs[0]];
    let a = vertices[vs[1]];
    let b = vertices[vs[2]];
    let c = vertices[vs[3]];
    let ax = a.x - p0.x;
    let ay = a.y - p0.y;
    let az = a.z - p0.z;
    let bx = b.x - p0.x;
    let by = b.y - p0.y;
    let bz = b.z - p0.z;
    let cx = c.x - p0.x;
    let cy = c.y - p0.y;
    let cz = c.z - p0.z;
    let det = ax * (by * cz - bz * cy) - ay * (bx * cz - bz * cx) + az * (bx * cy - by * cx);
    det / 6.0
}
