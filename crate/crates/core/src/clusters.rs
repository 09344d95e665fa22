//! Open-cluster decompositions and cluster-level observables for edge
//! configurations of the random-cluster model.
//!
//! The central object is [`ClusterDecomposition`]: the partition of the vertex
//! set into connected components of the open edges, *after* merging any wired
//! boundary groups. Wiring is modelled with one ghost site per group; ghosts
//! never count toward cluster sizes or field sums (cluster observables are
//! functions of the lattice vertices only).
//!
//! On top of the decomposition live:
//!
//! * [`ClusterStats`] — the scalar observables recorded per sample (cluster
//!   count, extreme and aggregate sizes, boundary-cluster size, and the
//!   field functional `F = Σ_C ln cosh(ε h_C / T)` with its quadratic and
//!   quartic comparison sums);
//! * crossing events of rectangles and their planar duals, linked by exact
//!   complementarity (`V(R)` holds iff no dual horizontal crossing does);
//! * the block coarse-graining diagnostics: per-block maximal enclosed
//!   regions (`outmost_closed_region`) and the annulus-union connectivity
//!   test (`well_connected`).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::disorder::DisorderField;
use crate::lattice::{BoundaryCondition, GraphKind, LatticeGraph, Rectangle};

/// Errors from cluster-level operations.
#[derive(Debug, Error)]
pub enum ClusterError {
    /// An edge configuration does not match the graph.
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    /// The boundary condition is not usable for a cluster decomposition.
    #[error("unsupported boundary: {0}")]
    UnsupportedBoundary(String),
    /// The graph cannot be partitioned into blocks as requested.
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    /// A numeric parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Underlying geometry error.
    #[error(transparent)]
    Geometry(#[from] crate::lattice::LatticeError),
}

/// Union-find over dense indices with union by rank and path compression.
#[derive(Debug)]
struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            // Path halving: point x at its grandparent and step.
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }

    /// Returns true when the two elements were in different components.
    fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (hi, lo) = if self.rank[ra as usize] >= self.rank[rb as usize] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[lo as usize] = hi;
        if self.rank[hi as usize] == self.rank[lo as usize] {
            self.rank[hi as usize] += 1;
        }
        true
    }
}

/// One open cluster: its lattice vertices plus wiring/boundary flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    /// Sorted vertex indices (ghost sites excluded).
    pub members: Vec<u32>,
    /// True when the cluster contains a wiring ghost (it is a boundary
    /// cluster `C*` of its wiring group).
    pub is_boundary_cluster: bool,
    /// True when the cluster intersects the interior boundary `∂V`.
    pub touches_boundary: bool,
}

impl Cluster {
    /// Number of lattice vertices in the cluster.
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// Partition of the vertex set into open clusters under a boundary wiring.
#[derive(Debug, Clone)]
pub struct ClusterDecomposition {
    /// Clusters ordered by their smallest member vertex.
    clusters: Vec<Cluster>,
    /// Vertex index → cluster position.
    cluster_of: Vec<u32>,
}

impl ClusterDecomposition {
    /// The clusters, ordered by smallest member.
    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    /// Number of clusters `κ` (each wired group's merged cluster counts once).
    pub fn kappa(&self) -> usize {
        self.clusters.len()
    }

    /// Position (in [`Self::clusters`]) of the cluster containing vertex `v`.
    pub fn cluster_index_of(&self, v: u32) -> u32 {
        self.cluster_of[v as usize]
    }

    /// True when `u` and `v` lie in the same cluster.
    pub fn connected(&self, u: u32, v: u32) -> bool {
        self.cluster_of[u as usize] == self.cluster_of[v as usize]
    }

    /// The first boundary cluster (the unique one under a fully wired
    /// boundary), if any cluster contains a ghost.
    pub fn boundary_cluster(&self) -> Option<&Cluster> {
        self.clusters.iter().find(|c| c.is_boundary_cluster)
    }
}

/// Ghost-attachment view of a boundary condition: one vertex list per ghost.
///
/// `FkWired` is a single group holding the whole interior boundary;
/// `FkPartition` keeps its groups; `FkFree` has none. Spin boundary conditions
/// have no static wiring (their ghost links are part of the sampler state) and
/// are rejected here.
fn wiring_groups(
    graph: &LatticeGraph,
    boundary: &BoundaryCondition,
) -> Result<Vec<Vec<u32>>, ClusterError> {
    boundary.validate(graph)?;
    match boundary {
        BoundaryCondition::FkFree => Ok(Vec::new()),
        BoundaryCondition::FkWired => Ok(vec![graph.interior_boundary().to_vec()]),
        BoundaryCondition::FkPartition(groups) => Ok(groups.clone()),
        BoundaryCondition::IsingSpin(_) => Err(ClusterError::UnsupportedBoundary(
            "spin boundary conditions carry no static wiring; decompose with explicit ghost links"
                .into(),
        )),
    }
}

/// Decomposes an edge configuration into open clusters under a random-cluster
/// boundary condition (`FkFree`, `FkWired`, or `FkPartition`).
pub fn decompose(
    graph: &LatticeGraph,
    omega: &[bool],
    boundary: &BoundaryCondition,
) -> Result<ClusterDecomposition, ClusterError> {
    let groups = wiring_groups(graph, boundary)?;
    decompose_with_links(graph, omega, &groups)
}

/// Decomposes with explicit ghost links: `links[g]` lists the vertices
/// currently attached to ghost `g`. This is the primitive behind both the
/// static wirings of [`decompose`] and the fluctuating boundary attachments of
/// the spin-boundary sampler.
pub fn decompose_with_links(
    graph: &LatticeGraph,
    omega: &[bool],
    links: &[Vec<u32>],
) -> Result<ClusterDecomposition, ClusterError> {
    let n = graph.vertex_count();
    if omega.len() != graph.edge_count() {
        return Err(ClusterError::InvalidConfiguration(format!(
            "edge configuration has {} entries, graph has {} edges",
            omega.len(),
            graph.edge_count()
        )));
    }
    for (g, group) in links.iter().enumerate() {
        for &v in group {
            if v as usize >= n {
                return Err(ClusterError::InvalidConfiguration(format!(
                    "ghost link {g} references vertex {v}, graph has {n} vertices"
                )));
            }
        }
    }

    let mut uf = UnionFind::new(n + links.len());
    for (e, &(i, j)) in graph.edges().iter().enumerate() {
        if omega[e] {
            uf.union(i, j);
        }
    }
    for (g, group) in links.iter().enumerate() {
        let ghost = (n + g) as u32;
        for &v in group {
            uf.union(ghost, v);
        }
    }

    // Group vertices by root, in vertex order, so clusters come out ordered by
    // smallest member and members come out sorted.
    let mut position: BTreeMap<u32, u32> = BTreeMap::new();
    let mut members: Vec<Vec<u32>> = Vec::new();
    let mut cluster_of = vec![0u32; n];
    for v in 0..n as u32 {
        let root = uf.find(v);
        let pos = *position.entry(root).or_insert_with(|| {
            members.push(Vec::new());
            (members.len() - 1) as u32
        });
        members[pos as usize].push(v);
        cluster_of[v as usize] = pos;
    }

    let mut has_ghost = vec![false; members.len()];
    for g in 0..links.len() {
        if links[g].is_empty() {
            continue;
        }
        let root = uf.find((n + g) as u32);
        // The group is attached to at least one vertex, so its root cluster
        // has lattice members and therefore a position.
        if let Some(&pos) = position.get(&root) {
            has_ghost[pos as usize] = true;
        }
    }

    let mut on_boundary = vec![false; n];
    for &v in graph.interior_boundary() {
        on_boundary[v as usize] = true;
    }

    let clusters = members
        .into_iter()
        .zip(has_ghost)
        .map(|(ms, ghost)| {
            let touches = ms.iter().any(|&v| on_boundary[v as usize]);
            Cluster { members: ms, is_boundary_cluster: ghost, touches_boundary: touches }
        })
        .collect();

    Ok(ClusterDecomposition { clusters, cluster_of })
}

/// Numerically stable `ln cosh x`.
pub fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// The cluster field functional `F(h, ω) = Σ_C ln cosh(ε h_C / T)`, summed
/// over all clusters (boundary clusters use the field sum of their lattice
/// members). Zero field strength gives exactly 0.
pub fn f_functional(
    decomposition: &ClusterDecomposition,
    field: &DisorderField,
    t: f64,
) -> Result<f64, ClusterError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(ClusterError::InvalidParameter(format!(
            "temperature must be positive and finite, got {t}"
        )));
    }
    if field.epsilon() == 0.0 {
        return Ok(0.0);
    }
    let mut f = 0.0;
    for c in &decomposition.clusters {
        let x = field.epsilon() * field.field_sum(&c.members) / t;
        f += ln_cosh(x);
    }
    Ok(f)
}

/// Scalar cluster observables of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    /// Number of clusters `κ`.
    pub kappa: u64,
    /// Largest cluster size `max_C |C|`.
    pub max_size: u64,
    /// `Σ_C |C|²` (the pair-connectivity count).
    pub sum_sq: f64,
    /// `Σ_C |C|⁴`.
    pub sum_quartic: f64,
    /// Total size of boundary (ghost-containing) clusters; 0 under free
    /// boundary conditions.
    pub boundary_size: u64,
    /// `F = Σ_C ln cosh(ε h_C / T)`.
    pub f_value: f64,
    /// Quadratic comparison sum `Σ_C (ε h_C / T)² / 2` (an upper bound for
    /// `f_value` term by term).
    pub sum_half_square: f64,
    /// Quartic comparison sum `Σ_C (ε h_C / T)⁴ / 2` (the term-wise defect of
    /// the quadratic bound is at most this).
    pub sum_half_fourth: f64,
}

/// Computes [`ClusterStats`] for a decomposition under a given field and
/// temperature.
pub fn cluster_stats(
    decomposition: &ClusterDecomposition,
    field: &DisorderField,
    t: f64,
) -> Result<ClusterStats, ClusterError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(ClusterError::InvalidParameter(format!(
            "temperature must be positive and finite, got {t}"
        )));
    }
    let mut stats = ClusterStats {
        kappa: decomposition.kappa() as u64,
        max_size: 0,
        sum_sq: 0.0,
        sum_quartic: 0.0,
        boundary_size: 0,
        f_value: 0.0,
        sum_half_square: 0.0,
        sum_half_fourth: 0.0,
    };
    for c in &decomposition.clusters {
        let s = c.size() as u64;
        stats.max_size = stats.max_size.max(s);
        let sf = s as f64;
        stats.sum_sq += sf * sf;
        stats.sum_quartic += sf * sf * sf * sf;
        if c.is_boundary_cluster {
            stats.boundary_size += s;
        }
        let x = field.epsilon() * field.field_sum(&c.members) / t;
        stats.f_value += ln_cosh(x);
        stats.sum_half_square += x * x / 2.0;
        stats.sum_half_fourth += x * x * x * x / 2.0;
    }
    if field.epsilon() == 0.0 {
        stats.f_value = 0.0; // exact, not just tiny
    }
    Ok(stats)
}

/// Crossing events of a rectangle in a configuration, and their planar duals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingEvents {
    /// Open left-right crossing of the rectangle.
    pub horizontal: bool,
    /// Open bottom-top crossing.
    pub vertical: bool,
    /// Dual-open left-right crossing of the dual rectangle (blocks `vertical`).
    pub dual_horizontal: bool,
    /// Dual-open bottom-top crossing of the dual rectangle (blocks
    /// `horizontal`).
    pub dual_vertical: bool,
}

fn check_rect_in_graph(graph: &LatticeGraph, rect: &Rectangle) -> Result<(), ClusterError> {
    for x in rect.x_min..=rect.x_max {
        for y in rect.y_min..=rect.y_max {
            if graph.vertex_index((x, y)).is_none() {
                return Err(ClusterError::Geometry(crate::lattice::LatticeError::MissingVertex(
                    x, y,
                )));
            }
        }
    }
    Ok(())
}

/// Breadth-first search over the rectangle's primal vertices using open edges
/// with both endpoints inside, from one side to the opposite side.
fn primal_crossing(
    graph: &LatticeGraph,
    omega: &[bool],
    rect: &Rectangle,
    horizontal: bool,
) -> bool {
    let start: Vec<u32> = graph
        .vertices()
        .iter()
        .enumerate()
        .filter(|&(_, &(x, y))| {
            rect.contains(x, y) && if horizontal { x == rect.x_min } else { y == rect.y_min }
        })
        .map(|(i, _)| i as u32)
        .collect();
    let target = |x: i64, y: i64| if horizontal { x == rect.x_max } else { y == rect.y_max };

    let mut seen = vec![false; graph.vertex_count()];
    let mut queue: Vec<u32> = Vec::new();
    for v in start {
        seen[v as usize] = true;
        let (x, y) = graph.coord(v);
        if target(x, y) {
            return true;
        }
        queue.push(v);
    }
    while let Some(v) = queue.pop() {
        for &(w, e) in graph.neighbors(v) {
            if seen[w as usize] || !omega[e as usize] {
                continue;
            }
            let (x, y) = graph.coord(w);
            if !rect.contains(x, y) {
                continue;
            }
            seen[w as usize] = true;
            if target(x, y) {
                return true;
            }
            queue.push(w);
        }
    }
    false
}

/// Breadth-first search over dual vertices of the dual rectangle, using dual
/// edges whose primal edges lie inside the rectangle and are closed.
///
/// `horizontal = true` looks for a left-right dual crossing (the complement of
/// the primal vertical crossing); `false` for a bottom-top dual crossing.
fn dual_crossing(graph: &LatticeGraph, omega: &[bool], rect: &Rectangle, horizontal: bool) -> bool {
    let (a, b, c, d) = (rect.x_min, rect.x_max, rect.y_min, rect.y_max);
    // Dual vertex (i, j) encodes (i + ½, j + ½).
    // Horizontal crossing: i ∈ [a−1, b], j ∈ [c, d−1]; from i = a−1 to i = b.
    // Vertical crossing:   i ∈ [a, b−1], j ∈ [c−1, d]; from j = c−1 to j = d.
    let (i_lo, i_hi, j_lo, j_hi) = if horizontal {
        (a - 1, b, c, d - 1)
    } else {
        (a, b - 1, c - 1, d)
    };
    if i_lo > i_hi || j_lo > j_hi {
        return false; // degenerate band: no dual vertices at all
    }
    let cols = (i_hi - i_lo + 1) as usize;
    let rows = (j_hi - j_lo + 1) as usize;
    let idx = |i: i64, j: i64| -> usize {
        ((i - i_lo) as usize) * rows + ((j - j_lo) as usize)
    };
    // A dual step is usable when the primal edge it crosses lies inside the
    // rectangle and is closed.
    let closed_primal = |u: (i64, i64), v: (i64, i64)| -> bool {
        if !(rect.contains(u.0, u.1) && rect.contains(v.0, v.1)) {
            return false;
        }
        let (iu, iv) = match (graph.vertex_index(u), graph.vertex_index(v)) {
            (Some(x), Some(y)) => (x, y),
            _ => return false,
        };
        match graph.edge_between(iu, iv) {
            Some(e) => !omega[e as usize],
            None => false,
        }
    };

    let mut seen = vec![false; cols * rows];
    let mut queue: Vec<(i64, i64)> = Vec::new();
    let at_target = |i: i64, j: i64| if horizontal { i == i_hi } else { j == j_hi };
    // Seed with the entry side.
    if horizontal {
        for j in j_lo..=j_hi {
            seen[idx(i_lo, j)] = true;
            if at_target(i_lo, j) {
                return true;
            }
            queue.push((i_lo, j));
        }
    } else {
        for i in i_lo..=i_hi {
            seen[idx(i, j_lo)] = true;
            if at_target(i, j_lo) {
                return true;
            }
            queue.push((i, j_lo));
        }
    }
    while let Some((i, j)) = queue.pop() {
        // Horizontal dual step (i, j) − (i±1, j) crosses the primal vertical
        // edge {(max(i,i±1), j), (max(i,i±1), j+1)}.
        // Vertical dual step (i, j) − (i, j±1) crosses the primal horizontal
        // edge {(i, max(j,j±1)), (i+1, max(j,j±1))}.
        let steps = [
            ((i + 1, j), ((i + 1, j), (i + 1, j + 1))),
            ((i - 1, j), ((i, j), (i, j + 1))),
            ((i, j + 1), ((i, j + 1), (i + 1, j + 1))),
            ((i, j - 1), ((i, j), (i + 1, j))),
        ];
        for ((ni, nj), (pu, pv)) in steps {
            if ni < i_lo || ni > i_hi || nj < j_lo || nj > j_hi {
                continue;
            }
            if seen[idx(ni, nj)] || !closed_primal(pu, pv) {
                continue;
            }
            seen[idx(ni, nj)] = true;
            if at_target(ni, nj) {
                return true;
            }
            queue.push((ni, nj));
        }
    }
    false
}

/// Evaluates the four crossing events of `rect` in the configuration `omega`.
///
/// The rectangle must lie inside the graph (every vertex present; the induced
/// edges of a full rectangle are then present automatically). The dual events
/// satisfy exact complementarity on any configuration: `vertical` holds iff
/// `dual_horizontal` does not, and `horizontal` iff `dual_vertical` does not.
pub fn crossing_events(
    graph: &LatticeGraph,
    omega: &[bool],
    rect: &Rectangle,
) -> Result<CrossingEvents, ClusterError> {
    if omega.len() != graph.edge_count() {
        return Err(ClusterError::InvalidConfiguration(format!(
            "edge configuration has {} entries, graph has {} edges",
            omega.len(),
            graph.edge_count()
        )));
    }
    check_rect_in_graph(graph, rect)?;
    Ok(CrossingEvents {
        horizontal: primal_crossing(graph, omega, rect, true),
        vertical: primal_crossing(graph, omega, rect, false),
        dual_horizontal: dual_crossing(graph, omega, rect, true),
        dual_vertical: dual_crossing(graph, omega, rect, false),
    })
}

/// Geometry of a block partition of a rectangle graph: blocks of side `4m`
/// with centered inner boxes of side `2m`.
#[derive(Debug, Clone, Copy)]
pub struct BlockPartition {
    origin: (i64, i64),
    pub m: u32,
    /// Blocks per row (x direction).
    pub blocks_x: u32,
    /// Blocks per column (y direction).
    pub blocks_y: u32,
}

impl BlockPartition {
    /// Derives the partition for `graph`, which must be a rectangle with both
    /// sides divisible by `4m`.
    pub fn new(graph: &LatticeGraph, m: u32) -> Result<Self, ClusterError> {
        if m == 0 {
            return Err(ClusterError::InvalidParameter("block scale m must be ≥ 1".into()));
        }
        let (origin, width, height) = match *graph.kind() {
            GraphKind::Rect { origin, width, height } => (origin, width, height),
            _ => {
                return Err(ClusterError::InvalidPartition(
                    "block partitions require a rectangle graph".into(),
                ))
            }
        };
        let side = 4 * m;
        if width % side != 0 || height % side != 0 {
            return Err(ClusterError::InvalidPartition(format!(
                "graph is {width} × {height}, block side 4m = {side} must divide both"
            )));
        }
        Ok(BlockPartition {
            origin,
            m,
            blocks_x: width / side,
            blocks_y: height / side,
        })
    }

    /// Total number of blocks `n`.
    pub fn block_count(&self) -> usize {
        (self.blocks_x * self.blocks_y) as usize
    }

    /// Block index containing `(x, y)` (blocks are enumerated with the x block
    /// coordinate varying slowest, matching vertex order).
    fn block_of(&self, x: i64, y: i64) -> usize {
        let side = 4 * self.m as i64;
        let bx = (x - self.origin.0) / side;
        let by = (y - self.origin.1) / side;
        (bx * self.blocks_y as i64 + by) as usize
    }

    /// True when `(x, y)` lies in the centered `2m × 2m` inner box of its
    /// block.
    fn in_inner_box(&self, x: i64, y: i64) -> bool {
        let side = 4 * self.m as i64;
        let m = self.m as i64;
        let dx = (x - self.origin.0).rem_euclid(side);
        let dy = (y - self.origin.1).rem_euclid(side);
        (m..3 * m).contains(&dx) && (m..3 * m).contains(&dy)
    }
}

/// Per-block maximal enclosed regions of a configuration.
#[derive(Debug, Clone)]
pub struct EnclosedRegions {
    /// The partition geometry the regions refer to.
    pub partition_m: u32,
    /// For each block (in block order): the maximal admissible region — the
    /// largest `Ω_i ⊆ B_i` containing the inner box whose edge boundary is
    /// fully closed — or `None` when no admissible region exists.
    pub regions: Vec<Option<Vec<u32>>>,
    /// Number of blocks with a nonempty region (`η`).
    pub eta: u32,
}

/// Computes, for every block of the `4m`-partition, the maximal region
/// `Ω_i ⊆ B_i` that contains the block's inner `2m × 2m` box and whose edge
/// boundary is entirely closed in `omega` — equivalently, `B_i` minus all open
/// clusters that exit `B_i` (admissible regions are closed under union, so
/// this union is the maximal one). Returns the regions and their count `η`.
pub fn outmost_closed_region(
    graph: &LatticeGraph,
    omega: &[bool],
    m: u32,
) -> Result<EnclosedRegions, ClusterError> {
    let part = BlockPartition::new(graph, m)?;
    if omega.len() != graph.edge_count() {
        return Err(ClusterError::InvalidConfiguration(format!(
            "edge configuration has {} entries, graph has {} edges",
            omega.len(),
            graph.edge_count()
        )));
    }
    let decomp = decompose(graph, omega, &BoundaryCondition::FkFree)?;

    // A cluster is contained in a block iff its bounding box is: blocks are
    // rectangles, so bounding-box containment equals member containment.
    let mut contained_in: Vec<Option<usize>> = Vec::with_capacity(decomp.kappa());
    for c in decomp.clusters() {
        let blocks: Vec<usize> = c
            .members
            .iter()
            .map(|&v| {
                let (x, y) = graph.coord(v);
                part.block_of(x, y)
            })
            .collect();
        let first = blocks[0];
        contained_in.push(blocks.iter().all(|&b| b == first).then_some(first));
    }

    // Candidate regions: per block, the vertices whose clusters stay inside.
    let mut regions: Vec<Vec<u32>> = vec![Vec::new(); part.block_count()];
    let mut inner_ok = vec![true; part.block_count()];
    for v in 0..graph.vertex_count() as u32 {
        let (x, y) = graph.coord(v);
        let b = part.block_of(x, y);
        match contained_in[decomp.cluster_index_of(v) as usize] {
            Some(cb) if cb == b => regions[b].push(v),
            _ => {
                // v's cluster exits its block; if v sits in an inner box the
                // block cannot have an admissible region.
                if part.in_inner_box(x, y) {
                    inner_ok[b] = false;
                }
            }
        }
    }

    let regions: Vec<Option<Vec<u32>>> = regions
        .into_iter()
        .zip(inner_ok)
        .map(|(r, ok)| (ok).then_some(r))
        .collect();
    let eta = regions.iter().filter(|r| r.is_some()).count() as u32;
    Ok(EnclosedRegions { partition_m: m, regions, eta })
}

/// Result of the annulus-union connectivity diagnostic.
#[derive(Debug, Clone)]
pub struct WellConnectedness {
    /// True when exactly one macroscopic cluster crosses the annulus union.
    pub holds: bool,
    /// Number of clusters of the annulus union whose l∞ diameter reaches the
    /// threshold (ties count).
    pub qualifying_clusters: u32,
    /// Members of the unique qualifying cluster when `holds`.
    pub main_cluster: Option<Vec<u32>>,
}

/// Tests whether the union of block annuli (each block minus its inner box)
/// contains exactly one open cluster of l∞ diameter at least `N/2`, where `N`
/// is half the shorter rectangle side (ties count). Requires the `4m` block
/// partition to exist and `m` to be even.
pub fn well_connected(
    graph: &LatticeGraph,
    omega: &[bool],
    m: u32,
) -> Result<WellConnectedness, ClusterError> {
    if m % 2 != 0 {
        return Err(ClusterError::InvalidParameter(format!(
            "annulus diagnostic requires an even block scale m, got {m}"
        )));
    }
    let part = BlockPartition::new(graph, m)?;
    if omega.len() != graph.edge_count() {
        return Err(ClusterError::InvalidConfiguration(format!(
            "edge configuration has {} entries, graph has {} edges",
            omega.len(),
            graph.edge_count()
        )));
    }
    let (width, height) = match *graph.kind() {
        GraphKind::Rect { width, height, .. } => (width, height),
        _ => unreachable!("BlockPartition::new only accepts rectangles"),
    };
    // Threshold: l∞ diameter ≥ N/2 with N = min(side)/2, i.e. 2·diam ≥ N.
    let n_param = width.min(height) as i64 / 2;

    // The annulus union: everything outside the inner boxes.
    let in_union: Vec<bool> = graph
        .vertices()
        .iter()
        .map(|&(x, y)| !part.in_inner_box(x, y))
        .collect();

    let nv = graph.vertex_count();
    let mut uf = UnionFind::new(nv);
    for (e, &(i, j)) in graph.edges().iter().enumerate() {
        if omega[e] && in_union[i as usize] && in_union[j as usize] {
            uf.union(i, j);
        }
    }
    let mut boxes: BTreeMap<u32, (i64, i64, i64, i64, Vec<u32>)> = BTreeMap::new();
    for v in 0..nv as u32 {
        if !in_union[v as usize] {
            continue;
        }
        let (x, y) = graph.coord(v);
        let root = uf.find(v);
        let entry = boxes.entry(root).or_insert((x, x, y, y, Vec::new()));
        entry.0 = entry.0.min(x);
        entry.1 = entry.1.max(x);
        entry.2 = entry.2.min(y);
        entry.3 = entry.3.max(y);
        entry.4.push(v);
    }

    let mut qualifying = 0u32;
    let mut main: Option<Vec<u32>> = None;
    for (_, (x0, x1, y0, y1, members)) in boxes {
        let diam = (x1 - x0).max(y1 - y0);
        if 2 * diam >= n_param {
            qualifying += 1;
            main = Some(members);
        }
    }
    let holds = qualifying == 1;
    Ok(WellConnectedness { holds, qualifying_clusters: qualifying, main_cluster: if holds { main } else { None } })
}
