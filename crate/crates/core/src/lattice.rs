//! Finite subgraphs of the square lattice `Z^2`.
//!
//! A [`LatticeGraph`] is a finite vertex set `V ⊂ Z^2` together with the edge
//! set induced by nearest-neighbour adjacency (l1 distance 1). Vertices and
//! edges carry dense indices in a canonical deterministic order (coordinates
//! sorted lexicographically; edges sorted by endpoint indices), so every
//! configuration, disorder field, and sample artifact downstream can refer to
//! them positionally.
//!
//! Besides the graph itself the module knows about:
//!
//! * the *interior boundary* `∂V` (vertices of `V` with a neighbour outside
//!   `V`) and the *exterior boundary* (sites outside `V` adjacent to `V`),
//!   which is where boundary conditions live;
//! * boundary conditions for the spin model (fixed exterior spins, possibly
//!   absent) and for the random-cluster model (free, fully wired, or an
//!   arbitrary wiring partition of the interior boundary);
//! * axis-aligned [`Rectangle`]s and the planar dual-edge map used by crossing
//!   and circuit arguments.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from graph construction and lookup.
#[derive(Debug, Error)]
pub enum LatticeError {
    /// Construction parameters describe no valid region.
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    /// A referenced vertex is not part of the graph.
    #[error("vertex ({0}, {1}) is not in the graph")]
    MissingVertex(i64, i64),
    /// A boundary condition does not fit the graph it is applied to.
    #[error("invalid boundary condition: {0}")]
    InvalidBoundary(String),
    /// A serialized graph dump is malformed or inconsistent.
    #[error("invalid graph dump: {0}")]
    InvalidDump(String),
}

/// How a graph was constructed. Retained for provenance and for artifact
/// serialization; all geometry queries go through the vertex/edge tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphKind {
    /// Centered box of radius `n`: side `2n+1`.
    Box { n: u32, center: (i64, i64) },
    /// Centered annulus: box of radius `n` minus the open box of radius `m`.
    Annulus { m: u32, n: u32 },
    /// Axis-aligned rectangle of `width × height` vertices anchored at `origin`.
    Rect { origin: (i64, i64), width: u32, height: u32 },
    /// Arbitrary vertex set.
    Masked,
}

/// A finite induced subgraph of `Z^2` with canonical dense indexing.
#[derive(Debug, Clone)]
pub struct LatticeGraph {
    kind: GraphKind,
    /// Vertex coordinates, sorted lexicographically by `(x, y)`.
    vertices: Vec<(i64, i64)>,
    /// Edges as `(i, j)` with `i < j`, sorted lexicographically.
    edges: Vec<(u32, u32)>,
    /// Per vertex: `(neighbour vertex index, edge index)`, at most 4 entries.
    adjacency: Vec<Vec<(u32, u32)>>,
    /// Coordinate → index lookup.
    index: BTreeMap<(i64, i64), u32>,
    /// Indices of vertices adjacent to the complement of `V` (sorted).
    interior_boundary: Vec<u32>,
    /// Sites of `Z^2 \ V` adjacent to `V` (sorted lexicographically).
    exterior_boundary: Vec<(i64, i64)>,
    /// Per vertex: indices into `exterior_boundary` of its exterior neighbours.
    exterior_adjacency: Vec<Vec<u32>>,
}

/// Serialized form of a graph: construction tag (`n` for boxes, absent
/// otherwise) plus explicit vertex and edge tables in canonical order.
#[derive(Debug, Serialize, Deserialize)]
struct GraphDump {
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<u32>,
    vertices: Vec<(i64, i64)>,
    edges: Vec<(u32, u32)>,
}

impl LatticeGraph {
    /// Builds the graph induced by an arbitrary set of coordinates.
    ///
    /// Duplicates are merged; the empty set is rejected. This is the generic
    /// constructor behind boxes, annuli, rectangles, and ad-hoc regions `Ω`
    /// (e.g. `Λ_N ⊂ Ω ⊂ Λ_2N` domains).
    pub fn from_vertices(
        kind: GraphKind,
        coords: impl IntoIterator<Item = (i64, i64)>,
    ) -> Result<Self, LatticeError> {
        let set: BTreeSet<(i64, i64)> = coords.into_iter().collect();
        if set.is_empty() {
            return Err(LatticeError::InvalidGeometry("empty vertex set".into()));
        }
        let vertices: Vec<(i64, i64)> = set.iter().copied().collect();
        let index: BTreeMap<(i64, i64), u32> =
            vertices.iter().enumerate().map(|(i, &c)| (c, i as u32)).collect();

        // Induced nearest-neighbour edges, generated in lexicographic order of
        // (source index, target index): for each vertex, look only at the +x
        // and +y neighbours so each edge is produced once with i < j in
        // coordinate order; re-sort by index pairs for the canonical order.
        let mut edges: Vec<(u32, u32)> = Vec::new();
        for (i, &(x, y)) in vertices.iter().enumerate() {
            for nb in [(x + 1, y), (x, y + 1)] {
                if let Some(&j) = index.get(&nb) {
                    let i = i as u32;
                    edges.push((i.min(j), i.max(j)));
                }
            }
        }
        edges.sort_unstable();

        let mut adjacency = vec![Vec::new(); vertices.len()];
        for (e, &(i, j)) in edges.iter().enumerate() {
            adjacency[i as usize].push((j, e as u32));
            adjacency[j as usize].push((i, e as u32));
        }
        for a in &mut adjacency {
            a.sort_unstable();
        }

        let mut interior_boundary = Vec::new();
        let mut exterior: BTreeSet<(i64, i64)> = BTreeSet::new();
        for (i, &(x, y)) in vertices.iter().enumerate() {
            let mut outside = false;
            for nb in [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)] {
                if !index.contains_key(&nb) {
                    outside = true;
                    exterior.insert(nb);
                }
            }
            if outside {
                interior_boundary.push(i as u32);
            }
        }
        let exterior_boundary: Vec<(i64, i64)> = exterior.into_iter().collect();
        let ext_index: BTreeMap<(i64, i64), u32> =
            exterior_boundary.iter().enumerate().map(|(i, &c)| (c, i as u32)).collect();
        let mut exterior_adjacency = vec![Vec::new(); vertices.len()];
        for (i, &(x, y)) in vertices.iter().enumerate() {
            for nb in [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)] {
                if let Some(&k) = ext_index.get(&nb) {
                    exterior_adjacency[i].push(k);
                }
            }
        }

        Ok(LatticeGraph {
            kind,
            vertices,
            edges,
            adjacency,
            index,
            interior_boundary,
            exterior_boundary,
            exterior_adjacency,
        })
    }

    /// Centered box `Λ_n(center) = center + [-n, n]^2`: `(2n+1)^2` vertices and
    /// `2(2n+1)(2n)` edges. `n = 0` is the single vertex with no edges.
    pub fn build_box(n: u32, center: (i64, i64)) -> Self {
        let r = n as i64;
        let coords = (-r..=r)
            .flat_map(|dx| (-r..=r).map(move |dy| (center.0 + dx, center.1 + dy)));
        LatticeGraph::from_vertices(GraphKind::Box { n, center }, coords)
            .expect("box is nonempty")
    }

    /// Centered annulus `Λ_n \ Λ_m` (vertices at l∞ distance in `(m, n]` from
    /// the origin) with its induced edges.
    ///
    /// Requires `0 < m < n`; anything else is an invalid geometry.
    pub fn build_annulus(m: u32, n: u32) -> Result<Self, LatticeError> {
        if m == 0 || m >= n {
            return Err(LatticeError::InvalidGeometry(format!(
                "annulus requires 0 < m < n, got m = {m}, n = {n}"
            )));
        }
        let (mi, ni) = (m as i64, n as i64);
        let coords = (-ni..=ni).flat_map(|x| {
            (-ni..=ni)
                .filter(move |&y| x.abs().max(y.abs()) > mi)
                .map(move |y| (x, y))
        });
        LatticeGraph::from_vertices(GraphKind::Annulus { m, n }, coords)
    }

    /// Axis-aligned rectangle of `width × height` vertices with lower-left
    /// corner at `origin`. Both dimensions must be positive.
    pub fn build_rect(origin: (i64, i64), width: u32, height: u32) -> Result<Self, LatticeError> {
        if width == 0 || height == 0 {
            return Err(LatticeError::InvalidGeometry(format!(
                "rectangle dimensions must be positive, got {width} × {height}"
            )));
        }
        let coords = (0..width as i64)
            .flat_map(|dx| (0..height as i64).map(move |dy| (origin.0 + dx, origin.1 + dy)));
        LatticeGraph::from_vertices(
            GraphKind::Rect { origin, width, height },
            coords,
        )
    }

    /// How this graph was constructed.
    pub fn kind(&self) -> &GraphKind {
        &self.kind
    }

    /// Number of vertices.
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Number of edges.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Vertex coordinates in index order.
    pub fn vertices(&self) -> &[(i64, i64)] {
        &self.vertices
    }

    /// Edges as index pairs `(i, j)`, `i < j`, in canonical order.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Coordinate of vertex `i`.
    pub fn coord(&self, i: u32) -> (i64, i64) {
        self.vertices[i as usize]
    }

    /// Dense index of the vertex at `coord`, if present.
    pub fn vertex_index(&self, coord: (i64, i64)) -> Option<u32> {
        self.index.get(&coord).copied()
    }

    /// `(neighbour, edge)` index pairs of vertex `i` (at most four).
    pub fn neighbors(&self, i: u32) -> &[(u32, u32)] {
        &self.adjacency[i as usize]
    }

    /// Edge index between vertices `a` and `b`, if the edge exists.
    pub fn edge_between(&self, a: u32, b: u32) -> Option<u32> {
        self.adjacency[a as usize]
            .iter()
            .find(|&&(nb, _)| nb == b)
            .map(|&(_, e)| e)
    }

    /// Interior boundary `∂V`: indices of vertices adjacent to `Z^2 \ V`,
    /// sorted. For `Λ_n` with `n ≥ 1` this has `8n` elements.
    pub fn interior_boundary(&self) -> &[u32] {
        &self.interior_boundary
    }

    /// Exterior boundary: sites of `Z^2 \ V` adjacent to `V`, sorted
    /// lexicographically. Boundary spins `ξ` live here.
    pub fn exterior_boundary(&self) -> &[(i64, i64)] {
        &self.exterior_boundary
    }

    /// Indices (into [`Self::exterior_boundary`]) of the exterior neighbours of
    /// vertex `i`.
    pub fn exterior_neighbors(&self, i: u32) -> &[u32] {
        &self.exterior_adjacency[i as usize]
    }

    /// The vertex closest to the graph's bounding-box centre (l∞ metric, ties
    /// broken toward the lexicographically smallest coordinate). For odd-side
    /// centered boxes this is the origin.
    pub fn center_vertex(&self) -> u32 {
        let (xs, ys): (Vec<i64>, Vec<i64>) = self.vertices.iter().copied().unzip();
        let cx2 = xs.iter().min().unwrap() + xs.iter().max().unwrap();
        let cy2 = ys.iter().min().unwrap() + ys.iter().max().unwrap();
        let mut best = 0u32;
        let mut best_key = (i64::MAX, (i64::MAX, i64::MAX));
        for (i, &(x, y)) in self.vertices.iter().enumerate() {
            // Distance to centre in the doubled metric avoids fractions.
            let d = (2 * x - cx2).abs().max((2 * y - cy2).abs());
            let key = (d, (x, y));
            if key < best_key {
                best_key = key;
                best = i as u32;
            }
        }
        best
    }

    /// Per-vertex effective field contributed by fixed exterior spins:
    /// `b_x = Σ_{v ∈ ∂ext, v ∼ x} ξ_v`.
    pub fn boundary_field(&self, xi: &SpinBoundary) -> Vec<f64> {
        (0..self.vertex_count() as u32)
            .map(|i| {
                self.exterior_neighbors(i)
                    .iter()
                    .map(|&k| xi.value(k as usize) as f64)
                    .sum()
            })
            .collect()
    }

    /// Serializes the graph to its canonical JSON dump.
    pub fn to_json(&self) -> String {
        let n = match self.kind {
            GraphKind::Box { n, .. } => Some(n),
            _ => None,
        };
        let dump = GraphDump { n, vertices: self.vertices.clone(), edges: self.edges.clone() };
        serde_json::to_string(&dump).expect("graph dump serialization cannot fail")
    }

    /// Rebuilds a graph from a JSON dump produced by [`Self::to_json`].
    ///
    /// The vertex set is re-canonicalized and the edge table is re-derived;
    /// a dump whose edge table disagrees with the induced edges is rejected,
    /// so round-tripping is bit-identical for valid dumps.
    pub fn from_json(text: &str) -> Result<Self, LatticeError> {
        let dump: GraphDump = serde_json::from_str(text)
            .map_err(|e| LatticeError::InvalidDump(e.to_string()))?;
        let kind = match dump.n {
            Some(n) => {
                // Recover the centre from the bounding box.
                let xs: Vec<i64> = dump.vertices.iter().map(|v| v.0).collect();
                let ys: Vec<i64> = dump.vertices.iter().map(|v| v.1).collect();
                let cx = (xs.iter().min().unwrap_or(&0) + xs.iter().max().unwrap_or(&0)) / 2;
                let cy = (ys.iter().min().unwrap_or(&0) + ys.iter().max().unwrap_or(&0)) / 2;
                GraphKind::Box { n, center: (cx, cy) }
            }
            None => GraphKind::Masked,
        };
        let graph = LatticeGraph::from_vertices(kind, dump.vertices.iter().copied())?;
        if graph.vertices != dump.vertices {
            return Err(LatticeError::InvalidDump(
                "vertex table is not in canonical order".into(),
            ));
        }
        if graph.edges != dump.edges {
            return Err(LatticeError::InvalidDump(
                "edge table disagrees with induced nearest-neighbour edges".into(),
            ));
        }
        Ok(graph)
    }
}

/// Fixed exterior spins `ξ : ∂ext V → {−1, 0, +1}`, aligned with
/// [`LatticeGraph::exterior_boundary`]. `0` marks an absent boundary spin
/// (free at that site).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinBoundary {
    values: Vec<i8>,
}

impl SpinBoundary {
    /// Constant boundary condition (`+1`, `−1`, or `0` = free everywhere).
    pub fn uniform(graph: &LatticeGraph, spin: i8) -> Result<Self, LatticeError> {
        if !matches!(spin, -1 | 0 | 1) {
            return Err(LatticeError::InvalidBoundary(format!(
                "boundary spins must be in {{-1, 0, +1}}, got {spin}"
            )));
        }
        Ok(SpinBoundary { values: vec![spin; graph.exterior_boundary().len()] })
    }

    /// Boundary condition from an explicit coordinate → spin map; sites not in
    /// the map are free (0). Coordinates outside the exterior boundary are
    /// rejected.
    pub fn from_map(
        graph: &LatticeGraph,
        values: &BTreeMap<(i64, i64), i8>,
    ) -> Result<Self, LatticeError> {
        let ext = graph.exterior_boundary();
        let pos: BTreeMap<(i64, i64), usize> =
            ext.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut out = vec![0i8; ext.len()];
        for (&coord, &s) in values {
            if !matches!(s, -1 | 0 | 1) {
                return Err(LatticeError::InvalidBoundary(format!(
                    "boundary spins must be in {{-1, 0, +1}}, got {s} at {coord:?}"
                )));
            }
            match pos.get(&coord) {
                Some(&i) => out[i] = s,
                None => {
                    return Err(LatticeError::InvalidBoundary(format!(
                        "{coord:?} is not an exterior-boundary site"
                    )))
                }
            }
        }
        Ok(SpinBoundary { values: out })
    }

    /// Spin at exterior-boundary position `k`.
    pub fn value(&self, k: usize) -> i8 {
        self.values[k]
    }

    /// All values, aligned with the graph's exterior boundary.
    pub fn values(&self) -> &[i8] {
        &self.values
    }

    /// True when every boundary spin is `spin`.
    pub fn is_uniform(&self, spin: i8) -> bool {
        self.values.iter().all(|&v| v == spin)
    }
}

/// Boundary condition for a measure on a [`LatticeGraph`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundaryCondition {
    /// Spin model: fixed exterior spins (0 entries = free).
    IsingSpin(SpinBoundary),
    /// Random-cluster model: no wiring.
    FkFree,
    /// Random-cluster model: the whole interior boundary wired together.
    FkWired,
    /// Random-cluster model: disjoint groups of interior-boundary vertices,
    /// each group wired internally.
    FkPartition(Vec<Vec<u32>>),
}

impl BoundaryCondition {
    /// Checks that the condition fits `graph`: spin boundaries must be aligned
    /// with the exterior boundary, and partition groups must be nonempty,
    /// disjoint subsets of the interior boundary.
    pub fn validate(&self, graph: &LatticeGraph) -> Result<(), LatticeError> {
        match self {
            BoundaryCondition::IsingSpin(xi) => {
                if xi.values().len() != graph.exterior_boundary().len() {
                    return Err(LatticeError::InvalidBoundary(format!(
                        "boundary spin table has {} entries, exterior boundary has {}",
                        xi.values().len(),
                        graph.exterior_boundary().len()
                    )));
                }
                Ok(())
            }
            BoundaryCondition::FkFree | BoundaryCondition::FkWired => Ok(()),
            BoundaryCondition::FkPartition(groups) => {
                let boundary: BTreeSet<u32> = graph.interior_boundary().iter().copied().collect();
                let mut seen = BTreeSet::new();
                for (g, group) in groups.iter().enumerate() {
                    if group.is_empty() {
                        return Err(LatticeError::InvalidBoundary(format!(
                            "wiring group {g} is empty"
                        )));
                    }
                    for &v in group {
                        if !boundary.contains(&v) {
                            return Err(LatticeError::InvalidBoundary(format!(
                                "vertex {v} in wiring group {g} is not on the interior boundary"
                            )));
                        }
                        if !seen.insert(v) {
                            return Err(LatticeError::InvalidBoundary(format!(
                                "vertex {v} appears in more than one wiring group"
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

/// Axis-aligned rectangle `[x_min, x_max] × [y_min, y_max]` (inclusive integer
/// bounds), used to express crossing events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rectangle {
    pub x_min: i64,
    pub x_max: i64,
    pub y_min: i64,
    pub y_max: i64,
}

impl Rectangle {
    /// Builds a rectangle, rejecting empty ranges.
    pub fn new(x_min: i64, x_max: i64, y_min: i64, y_max: i64) -> Result<Self, LatticeError> {
        if x_min > x_max || y_min > y_max {
            return Err(LatticeError::InvalidGeometry(format!(
                "rectangle [{x_min}, {x_max}] × [{y_min}, {y_max}] is empty"
            )));
        }
        Ok(Rectangle { x_min, x_max, y_min, y_max })
    }

    /// True when `(x, y)` lies inside the rectangle.
    pub fn contains(&self, x: i64, y: i64) -> bool {
        self.x_min <= x && x <= self.x_max && self.y_min <= y && y <= self.y_max
    }
}

/// A vertex of the dual lattice: `(x, y)` encodes the point `(x + ½, y + ½)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DualVertex {
    pub x: i64,
    pub y: i64,
}

impl DualVertex {
    /// The encoded point as floating-point coordinates.
    pub fn as_point(&self) -> (f64, f64) {
        (self.x as f64 + 0.5, self.y as f64 + 0.5)
    }
}

/// An edge of the dual lattice, as an unordered pair of dual vertices stored in
/// sorted order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DualEdge {
    pub a: DualVertex,
    pub b: DualVertex,
}

impl DualEdge {
    fn new(a: DualVertex, b: DualVertex) -> Self {
        if a <= b {
            DualEdge { a, b }
        } else {
            DualEdge { a: b, b: a }
        }
    }
}

/// Maps a primal edge (given by its endpoint coordinates, which must be
/// nearest neighbours) to the dual edge crossing it.
///
/// The dual of the horizontal edge `{(x, y), (x+1, y)}` is the vertical dual
/// edge `{(x+½, y−½), (x+½, y+½)}`, and the dual of a vertical edge is the
/// horizontal dual edge crossing it. Together with [`primal_edge`] this map is
/// involutive: crossing back from the dual returns the original edge.
pub fn dual_edge(u: (i64, i64), v: (i64, i64)) -> Result<DualEdge, LatticeError> {
    let (u, v) = if u <= v { (u, v) } else { (v, u) };
    if v == (u.0 + 1, u.1) {
        // Horizontal primal edge.
        Ok(DualEdge::new(
            DualVertex { x: u.0, y: u.1 - 1 },
            DualVertex { x: u.0, y: u.1 },
        ))
    } else if v == (u.0, u.1 + 1) {
        // Vertical primal edge.
        Ok(DualEdge::new(
            DualVertex { x: u.0 - 1, y: u.1 },
            DualVertex { x: u.0, y: u.1 },
        ))
    } else {
        Err(LatticeError::InvalidGeometry(format!(
            "{u:?} and {v:?} are not nearest neighbours"
        )))
    }
}

/// Maps a dual edge back to the primal edge crossing it (the inverse of
/// [`dual_edge`]).
pub fn primal_edge(e: &DualEdge) -> Result<((i64, i64), (i64, i64)), LatticeError> {
    let (a, b) = (e.a, e.b);
    if b == (DualVertex { x: a.x, y: a.y + 1 }) {
        // Vertical dual edge crosses a horizontal primal edge.
        Ok(((a.x, a.y + 1), (a.x + 1, a.y + 1)))
    } else if b == (DualVertex { x: a.x + 1, y: a.y }) {
        // Horizontal dual edge crosses a vertical primal edge.
        Ok(((a.x + 1, a.y), (a.x + 1, a.y + 1)))
    } else {
        Err(LatticeError::InvalidGeometry(format!(
            "{a:?} and {b:?} are not adjacent dual vertices"
        )))
    }
}
