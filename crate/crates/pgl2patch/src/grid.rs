//! Sampling grids on the two real quadric models.
//!
//! The torus model is a single N x N periodic grid on the angle chart
//! [0, pi)^2 of RP^1 x RP^1. The sphere model is a cube-sphere: six N x N
//! faces of the cube [-1,1]^3 projected radially onto the unit sphere.
//!
//! Nodes are keyed canonically: by (i mod N, j mod N) on the torus and by the
//! integer cube triple on the sphere. Two faces that share an edge produce
//! identical node keys there, so cross-face cell adjacency, edge sharing and
//! pixel Euler characteristics need no explicit gluing table.

use serde::{Deserialize, Serialize};

/// Which real quadric model a computation runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Torus,
    Sphere,
}

impl Model {
    pub fn euler_characteristic(&self) -> i64 {
        match self {
            Model::Torus => 0,
            Model::Sphere => 2,
        }
    }
}

/// Grid sizes: per-axis resolution N, identical on all faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceGrid {
    pub model: Model,
    pub n: usize,
}

pub const MIN_GRID: usize = 32;
pub const DEFAULT_GRID: usize = 256;
pub const MAX_GRID: usize = 1024;

impl TraceGrid {
    pub fn new(model: Model, n: usize) -> TraceGrid {
        assert!(n >= MIN_GRID, "grid resolution must be at least {MIN_GRID}");
        assert!(n <= MAX_GRID, "grid resolution must be at most {MAX_GRID}");
        TraceGrid { model, n }
    }

    pub fn cell_count(&self) -> usize {
        match self.model {
            Model::Torus => self.n * self.n,
            Model::Sphere => 6 * self.n * self.n,
        }
    }

    pub fn face_count(&self) -> usize {
        match self.model {
            Model::Torus => 1,
            Model::Sphere => 6,
        }
    }
}

/// Flattened cell identifier: face * N^2 + j * N + i.
pub type CellId = usize;

/// Canonical node key (packed integers).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeKey(pub u64);

/// Canonical undirected grid edge: the sorted pair of its node keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey(pub NodeKey, pub NodeKey);

impl EdgeKey {
    pub fn new(a: NodeKey, b: NodeKey) -> EdgeKey {
        if a <= b {
            EdgeKey(a, b)
        } else {
            EdgeKey(b, a)
        }
    }
}

/// Cube face description. `axis` is the fixed coordinate, `u_axis`/`v_axis`
/// the in-face coordinates; all faces are right-handed with respect to the
/// outward normal so chart orientation is globally consistent.
#[derive(Debug, Clone, Copy)]
pub struct FaceDef {
    pub axis: usize,
    pub sign: i64,
    pub u_axis: usize,
    pub v_axis: usize,
}

pub const FACES: [FaceDef; 6] = [
    // +X: u -> +Y, v -> +Z
    FaceDef { axis: 0, sign: 1, u_axis: 1, v_axis: 2 },
    // -X: u -> +Z, v -> +Y
    FaceDef { axis: 0, sign: -1, u_axis: 2, v_axis: 1 },
    // +Y: u -> +Z, v -> +X
    FaceDef { axis: 1, sign: 1, u_axis: 2, v_axis: 0 },
    // -Y: u -> +X, v -> +Z
    FaceDef { axis: 1, sign: -1, u_axis: 0, v_axis: 2 },
    // +Z: u -> +X, v -> +Y
    FaceDef { axis: 2, sign: 1, u_axis: 0, v_axis: 1 },
    // -Z: u -> +Y, v -> +X
    FaceDef { axis: 2, sign: -1, u_axis: 1, v_axis: 0 },
];

fn pack3(t: [i64; 3], n: usize) -> u64 {
    let n = n as i64;
    let mut key: u64 = 0;
    for (k, &c) in t.iter().enumerate() {
        debug_assert!((-n..=n).contains(&c));
        key |= (((c + n) as u64) & 0xffff) << (16 * k);
    }
    key
}

impl TraceGrid {
    pub fn cell(&self, face: usize, i: usize, j: usize) -> CellId {
        face * self.n * self.n + j * self.n + i
    }

    pub fn cell_face_ij(&self, cell: CellId) -> (usize, usize, usize) {
        let n2 = self.n * self.n;
        (cell / n2, cell % self.n, (cell % n2) / self.n)
    }

    /// Integer cube triple of a sphere grid node (coordinates in [-N, N]).
    pub fn sphere_node_triple(&self, face: usize, i: i64, j: i64) -> [i64; 3] {
        let n = self.n as i64;
        let f = &FACES[face];
        let mut t = [0i64; 3];
        t[f.axis] = f.sign * n;
        t[f.u_axis] = 2 * i - n;
        t[f.v_axis] = 2 * j - n;
        t
    }

    /// Canonical key of the grid node with raw (possibly out-of-range on the
    /// torus) indices.
    pub fn node_key(&self, face: usize, i: i64, j: i64) -> NodeKey {
        match self.model {
            Model::Torus => {
                let n = self.n as i64;
                let im = i.rem_euclid(n) as u64;
                let jm = j.rem_euclid(n) as u64;
                NodeKey(im | (jm << 16))
            }
            Model::Sphere => NodeKey(pack3(self.sphere_node_triple(face, i, j), self.n)),
        }
    }

    /// Unit-sphere position of a sphere node, computed from the canonical
    /// integer triple so shared nodes get bit-identical coordinates.
    pub fn sphere_node_point(&self, face: usize, i: i64, j: i64) -> [f64; 3] {
        let t = self.sphere_node_triple(face, i, j);
        normalize3([t[0] as f64, t[1] as f64, t[2] as f64])
    }

    /// Torus node angles (theta, phi) for raw indices.
    pub fn torus_node_angles(&self, i: i64, j: i64) -> (f64, f64) {
        let h = std::f64::consts::PI / self.n as f64;
        (i as f64 * h, j as f64 * h)
    }

    /// Corner raw indices of a cell in cyclic chart order.
    pub fn cell_corners(&self, cell: CellId) -> [(usize, i64, i64); 4] {
        let (face, i, j) = self.cell_face_ij(cell);
        let (i, j) = (i as i64, j as i64);
        [
            (face, i, j),
            (face, i + 1, j),
            (face, i + 1, j + 1),
            (face, i, j + 1),
        ]
    }

    pub fn cell_node_keys(&self, cell: CellId) -> [NodeKey; 4] {
        self.cell_corners(cell)
            .map(|(f, i, j)| self.node_key(f, i, j))
    }

    /// Edge keys of a cell, in cyclic order: bottom, right, top, left.
    pub fn cell_edge_keys(&self, cell: CellId) -> [EdgeKey; 4] {
        let k = self.cell_node_keys(cell);
        [
            EdgeKey::new(k[0], k[1]),
            EdgeKey::new(k[1], k[2]),
            EdgeKey::new(k[2], k[3]),
            EdgeKey::new(k[3], k[0]),
        ]
    }

    /// Face-local indices of a sphere node triple on a given face, if the
    /// triple lies on that face.
    fn face_node_indices(&self, face: usize, t: [i64; 3]) -> Option<(i64, i64)> {
        let n = self.n as i64;
        let f = &FACES[face];
        if t[f.axis] != f.sign * n {
            return None;
        }
        let i = (t[f.u_axis] + n) / 2;
        let j = (t[f.v_axis] + n) / 2;
        if (t[f.u_axis] + n) % 2 != 0 || (t[f.v_axis] + n) % 2 != 0 {
            return None;
        }
        if (0..=n).contains(&i) && (0..=n).contains(&j) {
            Some((i, j))
        } else {
            None
        }
    }

    /// Neighbor cell across the given side (0 bottom, 1 right, 2 top,
    /// 3 left). Always exists: both models are closed surfaces.
    pub fn cell_neighbor(&self, cell: CellId, side: usize) -> CellId {
        let (face, i, j) = self.cell_face_ij(cell);
        let (i, j) = (i as i64, j as i64);
        let n = self.n as i64;
        let (di, dj) = [(0, -1), (1, 0), (0, 1), (-1, 0)][side];
        let (ni, nj) = (i + di, j + dj);
        match self.model {
            Model::Torus => {
                let ni = ni.rem_euclid(n) as usize;
                let nj = nj.rem_euclid(n) as usize;
                self.cell(face, ni, nj)
            }
            Model::Sphere => {
                if (0..n).contains(&ni) && (0..n).contains(&nj) {
                    return self.cell(face, ni as usize, nj as usize);
                }
                // crossing a cube edge: find the other face carrying the
                // shared edge, then the unique in-range cell bounded by it
                let corners = self.cell_corners(cell);
                let (a, b) = match side {
                    0 => (corners[0], corners[1]),
                    1 => (corners[1], corners[2]),
                    2 => (corners[2], corners[3]),
                    _ => (corners[3], corners[0]),
                };
                let ta = self.sphere_node_triple(a.0, a.1, a.2);
                let tb = self.sphere_node_triple(b.0, b.1, b.2);
                for nf in 0..6 {
                    if nf == face {
                        continue;
                    }
                    let (pa, pb) = match (
                        self.face_node_indices(nf, ta),
                        self.face_node_indices(nf, tb),
                    ) {
                        (Some(pa), Some(pb)) => (pa, pb),
                        _ => continue,
                    };
                    // the edge pa-pb bounds two index cells; exactly one is
                    // in range on the neighbor face
                    let (i0, j0) = (pa.0.min(pb.0), pa.1.min(pb.1));
                    let candidates = if pa.0 == pb.0 {
                        [(pa.0 - 1, j0), (pa.0, j0)]
                    } else {
                        [(i0, pa.1 - 1), (i0, pa.1)]
                    };
                    for (ci, cj) in candidates {
                        if (0..n).contains(&ci) && (0..n).contains(&cj) {
                            return self.cell(nf, ci as usize, cj as usize);
                        }
                    }
                }
                unreachable!("every cube-face boundary edge has a neighbor face")
            }
        }
    }

    /// All cells incident to a node (4 generically, 3 at cube corners).
    pub fn cells_around_node(&self, face: usize, i: i64, j: i64) -> Vec<CellId> {
        let n = self.n as i64;
        let mut out = Vec::with_capacity(4);
        match self.model {
            Model::Torus => {
                for (di, dj) in [(-1, -1), (0, -1), (-1, 0), (0, 0)] {
                    let ci = (i + di).rem_euclid(n) as usize;
                    let cj = (j + dj).rem_euclid(n) as usize;
                    out.push(self.cell(face, ci, cj));
                }
            }
            Model::Sphere => {
                let t = self.sphere_node_triple(face, i, j);
                for f in 0..6 {
                    if let Some((pi, pj)) = self.face_node_indices(f, t) {
                        for (di, dj) in [(-1, -1), (0, -1), (-1, 0), (0, 0)] {
                            let (ci, cj) = (pi + di, pj + dj);
                            if (0..n).contains(&ci) && (0..n).contains(&cj) {
                                out.push(self.cell(f, ci as usize, cj as usize));
                            }
                        }
                    }
                }
                out.sort_unstable();
                out.dedup();
            }
        }
        out
    }

    /// Chart width of one grid cell (used for offset sampling distances).
    pub fn cell_width(&self) -> f64 {
        match self.model {
            Model::Torus => std::f64::consts::PI / self.n as f64,
            Model::Sphere => 2.0 / self.n as f64,
        }
    }
}

pub fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / norm, v[1] / norm, v[2] / norm]
}

/// Dominant-axis cube face of a unit vector.
pub fn face_of(n: [f64; 3]) -> usize {
    let abs = [n[0].abs(), n[1].abs(), n[2].abs()];
    let axis = if abs[0] >= abs[1] && abs[0] >= abs[2] {
        0
    } else if abs[1] >= abs[2] {
        1
    } else {
        2
    };
    match (axis, n[axis] >= 0.0) {
        (0, true) => 0,
        (0, false) => 1,
        (1, true) => 2,
        (1, false) => 3,
        (2, true) => 4,
        _ => 5,
    }
}

/// Central projection of a unit vector onto a cube face chart.
pub fn face_coords(face: usize, n: [f64; 3]) -> (f64, f64) {
    let f = &FACES[face];
    let denom = n[f.axis] * f.sign as f64;
    (n[f.u_axis] / denom, n[f.v_axis] / denom)
}

/// Cube point of face chart coordinates (before radial normalization).
pub fn face_point(face: usize, u: f64, v: f64) -> [f64; 3] {
    let f = &FACES[face];
    let mut p = [0.0; 3];
    p[f.axis] = f.sign as f64;
    p[f.u_axis] = u;
    p[f.v_axis] = v;
    p
}

/// Unit sphere point of face chart coordinates.
pub fn face_sphere_point(face: usize, u: f64, v: f64) -> [f64; 3] {
    normalize3(face_point(face, u, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashMap, HashSet};

    fn pixel_euler(grid: &TraceGrid, cells: impl Iterator<Item = CellId>) -> i64 {
        let mut nodes = HashSet::new();
        let mut edges = HashSet::new();
        let mut faces = 0i64;
        for cell in cells {
            faces += 1;
            for k in grid.cell_node_keys(cell) {
                nodes.insert(k);
            }
            for e in grid.cell_edge_keys(cell) {
                edges.insert(e);
            }
        }
        nodes.len() as i64 - edges.len() as i64 + faces
    }

    #[test]
    fn full_torus_has_euler_zero() {
        let grid = TraceGrid::new(Model::Torus, 32);
        assert_eq!(pixel_euler(&grid, 0..grid.cell_count()), 0);
    }

    #[test]
    fn full_sphere_has_euler_two() {
        let grid = TraceGrid::new(Model::Sphere, 32);
        assert_eq!(pixel_euler(&grid, 0..grid.cell_count()), 2);
    }

    #[test]
    fn sphere_edges_shared_by_exactly_two_cells() {
        let grid = TraceGrid::new(Model::Sphere, 32);
        let mut count: HashMap<EdgeKey, usize> = HashMap::new();
        for cell in 0..grid.cell_count() {
            for e in grid.cell_edge_keys(cell) {
                *count.entry(e).or_default() += 1;
            }
        }
        assert!(count.values().all(|&c| c == 2));
    }

    #[test]
    fn neighbors_share_an_edge_and_are_symmetric() {
        for model in [Model::Torus, Model::Sphere] {
            let grid = TraceGrid::new(model, 32);
            for cell in 0..grid.cell_count() {
                let my_edges: HashSet<EdgeKey> = grid.cell_edge_keys(cell).into_iter().collect();
                for side in 0..4 {
                    let nb = grid.cell_neighbor(cell, side);
                    assert_ne!(nb, cell);
                    let shared: Vec<EdgeKey> = grid
                        .cell_edge_keys(nb)
                        .into_iter()
                        .filter(|e| my_edges.contains(e))
                        .collect();
                    assert_eq!(shared.len(), 1, "neighbor shares exactly one edge");
                    // symmetry: cell appears among nb's neighbors
                    let back: Vec<CellId> =
                        (0..4).map(|s| grid.cell_neighbor(nb, s)).collect();
                    assert!(back.contains(&cell));
                }
            }
        }
    }

    #[test]
    fn cube_corner_nodes_have_three_cells() {
        let grid = TraceGrid::new(Model::Sphere, 32);
        let mut corner_count = 0;
        let mut seen = HashSet::new();
        for face in 0..6 {
            for (i, j) in [(0, 0), (32, 0), (0, 32), (32, 32)] {
                let key = grid.node_key(face, i, j);
                if !seen.insert(key) {
                    continue;
                }
                corner_count += 1;
                assert_eq!(grid.cells_around_node(face, i, j).len(), 3);
            }
        }
        assert_eq!(corner_count, 8);
    }

    #[test]
    fn interior_nodes_have_four_cells() {
        for model in [Model::Torus, Model::Sphere] {
            let grid = TraceGrid::new(model, 32);
            assert_eq!(grid.cells_around_node(0, 5, 7).len(), 4);
        }
    }

    #[test]
    fn face_charts_round_trip() {
        for face in 0..6 {
            for (u, v) in [(0.3, -0.8), (0.0, 0.0), (-0.99, 0.99)] {
                let n = face_sphere_point(face, u, v);
                assert_eq!(face_of(n), face);
                let (u2, v2) = face_coords(face, n);
                assert!((u - u2).abs() < 1e-12 && (v - v2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shared_edge_nodes_get_identical_points() {
        let grid = TraceGrid::new(Model::Sphere, 32);
        // +X face at u = max shares an edge with some other face; matching
        // keys must give bitwise equal sphere points
        let mut points: HashMap<NodeKey, [f64; 3]> = HashMap::new();
        for face in 0..6 {
            for i in 0..=32 {
                for j in 0..=32 {
                    let key = grid.node_key(face, i, j);
                    let p = grid.sphere_node_point(face, i, j);
                    if let Some(q) = points.get(&key) {
                        assert_eq!(*q, p);
                    } else {
                        points.insert(key, p);
                    }
                }
            }
        }
    }
}
