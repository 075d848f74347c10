//! A polygonal cell complex with explicit edge identifications.
//!
//! Faces are closed walks of directed edges (darts). Parallel edges and loop
//! edges are allowed, so glued surfaces can be represented exactly. The
//! complex answers the questions the assembled diagram needs: Euler
//! characteristic, the closed-surface certificate (every edge twice, every
//! vertex link a single circle), connected components, orientability and
//! genus or crosscap number.

use std::collections::BTreeMap;

use crate::error::Pgl2Error;

/// A directed edge reference: forward runs from endpoint 0 to endpoint 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dart {
    pub edge: usize,
    pub forward: bool,
}

impl Dart {
    pub fn fwd(edge: usize) -> Dart {
        Dart {
            edge,
            forward: true,
        }
    }

    pub fn rev(edge: usize) -> Dart {
        Dart {
            edge,
            forward: false,
        }
    }

    pub fn reversed(self) -> Dart {
        Dart {
            edge: self.edge,
            forward: !self.forward,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Face {
    pub walk: Vec<Dart>,
    pub piece: usize,
}

/// Polygonal complex under construction or analysis.
#[derive(Debug, Clone, Default)]
pub struct CellComplex {
    vertex_count: usize,
    edges: Vec<[usize; 2]>,
    faces: Vec<Face>,
}

impl CellComplex {
    pub fn new() -> CellComplex {
        CellComplex::default()
    }

    pub fn add_vertex(&mut self) -> usize {
        self.vertex_count += 1;
        self.vertex_count - 1
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> usize {
        assert!(a < self.vertex_count && b < self.vertex_count);
        self.edges.push([a, b]);
        self.edges.len() - 1
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn dart_tail(&self, d: Dart) -> usize {
        let e = self.edges[d.edge];
        if d.forward {
            e[0]
        } else {
            e[1]
        }
    }

    pub fn dart_head(&self, d: Dart) -> usize {
        let e = self.edges[d.edge];
        if d.forward {
            e[1]
        } else {
            e[0]
        }
    }

    /// Add a face given as a closed chain of darts.
    pub fn add_face(&mut self, walk: Vec<Dart>, piece: usize) -> Result<usize, Pgl2Error> {
        if walk.is_empty() {
            return Err(Pgl2Error::SpecViolation {
                reason: "empty face walk".into(),
            });
        }
        for k in 0..walk.len() {
            let next = walk[(k + 1) % walk.len()];
            if self.dart_head(walk[k]) != self.dart_tail(next) {
                return Err(Pgl2Error::SpecViolation {
                    reason: format!("face walk does not chain at position {k}"),
                });
            }
        }
        self.faces.push(Face { walk, piece });
        Ok(self.faces.len() - 1)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    fn edge_traversals(&self) -> Vec<Vec<(usize, bool)>> {
        let mut t: Vec<Vec<(usize, bool)>> = vec![Vec::new(); self.edges.len()];
        for (fid, face) in self.faces.iter().enumerate() {
            for d in &face.walk {
                t[d.edge].push((fid, d.forward));
            }
        }
        t
    }

    /// Closed-surface certificate, part one: every edge is traversed by
    /// exactly two face sides.
    pub fn check_edges_closed(&self) -> Result<(), Pgl2Error> {
        for (eid, t) in self.edge_traversals().iter().enumerate() {
            if t.len() != 2 {
                return Err(Pgl2Error::NonClosedSurface {
                    reason: format!("edge {eid} has {} face sides, expected 2", t.len()),
                });
            }
        }
        Ok(())
    }

    /// Closed-surface certificate, part two: the link of every vertex is a
    /// single circle. Corners of faces connect edge-ends around a vertex;
    /// the link is a circle exactly when those connections form one cycle
    /// through all edge-ends at the vertex.
    pub fn check_vertex_links(&self) -> Result<(), Pgl2Error> {
        // edge-end nodes: (edge, end) with end 0 at endpoints[0]
        let end_vertex = |edge: usize, end: usize| self.edges[edge][end];
        // adjacency between edge-ends, per corner
        let mut adj: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for face in &self.faces {
            let m = face.walk.len();
            for k in 0..m {
                let d = face.walk[k];
                let d_next = face.walk[(k + 1) % m];
                let head_end = if d.forward { 1 } else { 0 };
                let tail_end = if d_next.forward { 0 } else { 1 };
                let a = (d.edge, head_end);
                let b = (d_next.edge, tail_end);
                adj.entry(a).or_default().push(b);
                adj.entry(b).or_default().push(a);
            }
        }
        // group edge-ends by vertex
        let mut ends_at: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        for (eid, _) in self.edges.iter().enumerate() {
            for end in 0..2 {
                ends_at
                    .entry(end_vertex(eid, end))
                    .or_default()
                    .push((eid, end));
            }
        }
        for (v, ends) in &ends_at {
            for e in ends {
                let deg = adj.get(e).map_or(0, |l| l.len());
                if deg != 2 {
                    return Err(Pgl2Error::NonClosedSurface {
                        reason: format!("vertex {v}: edge-end {e:?} has {deg} corners"),
                    });
                }
            }
            // single cycle through all ends at v
            let start = ends[0];
            let mut seen = vec![start];
            let mut prev = start;
            let mut cur = adj[&start][0];
            while cur != start {
                seen.push(cur);
                let nbrs = &adj[&cur];
                let next = if nbrs[0] == prev { nbrs[1] } else { nbrs[0] };
                prev = cur;
                cur = next;
                if seen.len() > ends.len() {
                    break;
                }
            }
            if seen.len() != ends.len() {
                return Err(Pgl2Error::NonClosedSurface {
                    reason: format!(
                        "vertex {v} link splits: cycle of {} of {} edge-ends",
                        seen.len(),
                        ends.len()
                    ),
                });
            }
        }
        Ok(())
    }

    /// Connected components (by faces sharing edges) with their invariants.
    pub fn components(&self) -> Result<Vec<ComponentInfo>, Pgl2Error> {
        self.check_edges_closed()?;
        let traversals = self.edge_traversals();
        let n = self.faces.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut Vec<usize>, i: usize) -> usize {
            if p[i] != i {
                let r = find(p, p[i]);
                p[i] = r;
            }
            p[i]
        }
        for t in &traversals {
            let (f1, _) = t[0];
            let (f2, _) = t[1];
            let (r1, r2) = (find(&mut parent, f1), find(&mut parent, f2));
            if r1 != r2 {
                parent[r1] = r2;
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for f in 0..n {
            let r = find(&mut parent, f);
            groups.entry(r).or_default().push(f);
        }
        let mut out = Vec::new();
        for (_, face_ids) in groups {
            let mut edge_set = std::collections::BTreeSet::new();
            let mut vert_set = std::collections::BTreeSet::new();
            let mut pieces = std::collections::BTreeSet::new();
            for &fid in &face_ids {
                pieces.insert(self.faces[fid].piece);
                for d in &self.faces[fid].walk {
                    edge_set.insert(d.edge);
                    let e = self.edges[d.edge];
                    vert_set.insert(e[0]);
                    vert_set.insert(e[1]);
                }
            }
            let chi = vert_set.len() as i64 - edge_set.len() as i64 + face_ids.len() as i64;
            let orientable = self.component_orientable(&face_ids, &traversals);
            let genus_or_crosscaps = if orientable {
                if chi % 2 != 0 || chi > 2 {
                    return Err(Pgl2Error::NonClosedSurface {
                        reason: format!("orientable component with chi = {chi}"),
                    });
                }
                ((2 - chi) / 2) as usize
            } else {
                if chi > 2 {
                    return Err(Pgl2Error::NonClosedSurface {
                        reason: format!("component with chi = {chi} > 2"),
                    });
                }
                (2 - chi) as usize
            };
            out.push(ComponentInfo {
                face_count: face_ids.len(),
                euler_char: chi,
                orientable,
                genus_or_crosscaps,
                pieces: pieces.into_iter().collect(),
            });
        }
        Ok(out)
    }

    /// Orientability by propagating face orientations: each edge's two
    /// traversals must run in opposite directions after flips.
    fn component_orientable(
        &self,
        face_ids: &[usize],
        traversals: &[Vec<(usize, bool)>],
    ) -> bool {
        let mut flip: BTreeMap<usize, bool> = BTreeMap::new();
        let mut queue = vec![face_ids[0]];
        flip.insert(face_ids[0], false);
        // adjacency via shared edges
        let mut incident: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &fid in face_ids {
            for d in &self.faces[fid].walk {
                incident.entry(d.edge).or_default().push(fid);
            }
        }
        while let Some(fid) = queue.pop() {
            let my_flip = flip[&fid];
            for d in &self.faces[fid].walk {
                let t = &traversals[d.edge];
                let (other_fid, other_dir, my_dir) = if t[0].0 == fid && t[0].1 == d.forward {
                    (t[1].0, t[1].1, t[0].1)
                } else {
                    (t[0].0, t[0].1, t[1].1)
                };
                // compatible orientation: directions opposite after flips
                let need_flip = (my_dir == other_dir) != my_flip;
                match flip.get(&other_fid) {
                    None => {
                        flip.insert(other_fid, need_flip);
                        queue.push(other_fid);
                    }
                    Some(&f) => {
                        if f != need_flip {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

/// Per-component classification result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentInfo {
    pub face_count: usize,
    pub euler_char: i64,
    pub orientable: bool,
    pub genus_or_crosscaps: usize,
    pub pieces: Vec<usize>,
}

/// Attach a compact surface piece with the given boundary cycles, Euler
/// characteristic and orientability type, as a single polygon face with the
/// classification word: boundary cycles joined by tethers, then handle or
/// crosscap letters at the base vertex.
pub fn attach_piece(
    cx: &mut CellComplex,
    boundary: &[Vec<Dart>],
    chi: i64,
    orientable: bool,
    piece: usize,
) -> Result<usize, Pgl2Error> {
    let b = boundary.len() as i64;
    if boundary.is_empty() {
        return attach_closed_piece(cx, chi, orientable, piece);
    }
    for cycle in boundary {
        if cycle.is_empty() {
            return Err(Pgl2Error::SpecViolation {
                reason: "empty boundary cycle".into(),
            });
        }
        for k in 0..cycle.len() {
            let next = cycle[(k + 1) % cycle.len()];
            if cx.dart_head(cycle[k]) != cx.dart_tail(next) {
                return Err(Pgl2Error::SpecViolation {
                    reason: "boundary cycle does not chain".into(),
                });
            }
        }
    }
    let (handles, crosscaps) = piece_signature(chi, b, orientable)?;
    let base = cx.dart_tail(boundary[0][0]);
    let mut walk: Vec<Dart> = boundary[0].clone();
    for cycle in &boundary[1..] {
        let other_base = cx.dart_tail(cycle[0]);
        let tether = cx.add_edge(base, other_base);
        walk.push(Dart::fwd(tether));
        walk.extend(cycle.iter().copied());
        walk.push(Dart::rev(tether));
    }
    for _ in 0..handles {
        let x = cx.add_edge(base, base);
        let y = cx.add_edge(base, base);
        walk.push(Dart::fwd(x));
        walk.push(Dart::fwd(y));
        walk.push(Dart::rev(x));
        walk.push(Dart::rev(y));
    }
    for _ in 0..crosscaps {
        let z = cx.add_edge(base, base);
        walk.push(Dart::fwd(z));
        walk.push(Dart::fwd(z));
    }
    cx.add_face(walk, piece)
}

/// A closed piece (no boundary): a standalone component.
fn attach_closed_piece(
    cx: &mut CellComplex,
    chi: i64,
    orientable: bool,
    piece: usize,
) -> Result<usize, Pgl2Error> {
    if orientable && chi == 2 {
        // sphere: two monogons over one loop edge
        let v = cx.add_vertex();
        let e = cx.add_edge(v, v);
        cx.add_face(vec![Dart::fwd(e)], piece)?;
        return cx.add_face(vec![Dart::rev(e)], piece);
    }
    let (handles, crosscaps) = piece_signature(chi, 0, orientable)?;
    let base = cx.add_vertex();
    let mut walk = Vec::new();
    for _ in 0..handles {
        let x = cx.add_edge(base, base);
        let y = cx.add_edge(base, base);
        walk.extend([Dart::fwd(x), Dart::fwd(y), Dart::rev(x), Dart::rev(y)]);
    }
    for _ in 0..crosscaps {
        let z = cx.add_edge(base, base);
        walk.extend([Dart::fwd(z), Dart::fwd(z)]);
    }
    cx.add_face(walk, piece)
}

fn piece_signature(chi: i64, b: i64, orientable: bool) -> Result<(usize, usize), Pgl2Error> {
    if orientable {
        let twice_g = 2 - chi - b;
        if twice_g < 0 || twice_g % 2 != 0 {
            return Err(Pgl2Error::SpecViolation {
                reason: format!("no orientable surface with chi = {chi} and {b} boundaries"),
            });
        }
        Ok(((twice_g / 2) as usize, 0))
    } else {
        let c = 2 - chi - b;
        if c < 1 {
            return Err(Pgl2Error::SpecViolation {
                reason: format!("no non-orientable surface with chi = {chi} and {b} boundaries"),
            });
        }
        Ok((0, c as usize))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_and_classified(cx: &CellComplex) -> Vec<ComponentInfo> {
        cx.check_edges_closed().unwrap();
        cx.check_vertex_links().unwrap();
        cx.components().unwrap()
    }

    /// A circle with two edges between two fresh vertices; returns the cycle.
    fn two_edge_circle(cx: &mut CellComplex) -> Vec<Dart> {
        let v0 = cx.add_vertex();
        let v1 = cx.add_vertex();
        let e0 = cx.add_edge(v0, v1);
        let e1 = cx.add_edge(v1, v0);
        vec![Dart::fwd(e0), Dart::fwd(e1)]
    }

    #[test]
    fn standalone_sphere() {
        let mut cx = CellComplex::new();
        attach_piece(&mut cx, &[], 2, true, 0).unwrap();
        assert_eq!(cx.euler_characteristic(), 2);
        let comps = closed_and_classified(&cx);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].euler_char, 2);
        assert!(comps[0].orientable);
        assert_eq!(comps[0].genus_or_crosscaps, 0);
    }

    #[test]
    fn standalone_torus_and_projective_plane() {
        let mut cx = CellComplex::new();
        attach_piece(&mut cx, &[], 0, true, 0).unwrap();
        attach_piece(&mut cx, &[], 1, false, 1).unwrap();
        let comps = closed_and_classified(&cx);
        assert_eq!(comps.len(), 2);
        let torus = comps.iter().find(|c| c.orientable).unwrap();
        assert_eq!(torus.euler_char, 0);
        assert_eq!(torus.genus_or_crosscaps, 1);
        let rp2 = comps.iter().find(|c| !c.orientable).unwrap();
        assert_eq!(rp2.euler_char, 1);
        assert_eq!(rp2.genus_or_crosscaps, 1);
    }

    #[test]
    fn two_disks_make_a_sphere() {
        let mut cx = CellComplex::new();
        let circle = two_edge_circle(&mut cx);
        let reversed: Vec<Dart> = circle.iter().rev().map(|d| d.reversed()).collect();
        attach_piece(&mut cx, &[circle], 1, true, 0).unwrap();
        attach_piece(&mut cx, &[reversed], 1, true, 1).unwrap();
        let comps = closed_and_classified(&cx);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].euler_char, 2);
        assert!(comps[0].orientable);
    }

    #[test]
    fn moebius_plus_disk_is_projective_plane() {
        let mut cx = CellComplex::new();
        let circle = two_edge_circle(&mut cx);
        attach_piece(&mut cx, &[circle.clone()], 0, false, 0).unwrap();
        attach_piece(&mut cx, &[circle], 1, true, 1).unwrap();
        let comps = closed_and_classified(&cx);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].euler_char, 1);
        assert!(!comps[0].orientable);
        assert_eq!(comps[0].genus_or_crosscaps, 1);
    }

    #[test]
    fn two_annuli_make_a_torus_or_klein_bottle() {
        // same-direction traversals on one circle flip the gluing
        for (reverse_second, expect_orientable) in [(true, true), (false, false)] {
            let mut cx = CellComplex::new();
            let c1 = two_edge_circle(&mut cx);
            let c2 = two_edge_circle(&mut cx);
            let c1_rev: Vec<Dart> = c1.iter().rev().map(|d| d.reversed()).collect();
            let c2_rev: Vec<Dart> = c2.iter().rev().map(|d| d.reversed()).collect();
            attach_piece(&mut cx, &[c1.clone(), c2_rev], 0, true, 0).unwrap();
            let second = if reverse_second {
                vec![c1_rev, c2]
            } else {
                vec![c1, c2]
            };
            attach_piece(&mut cx, &second, 0, true, 1).unwrap();
            let comps = closed_and_classified(&cx);
            assert_eq!(comps.len(), 1);
            assert_eq!(comps[0].euler_char, 0);
            assert_eq!(comps[0].orientable, expect_orientable);
            assert_eq!(
                comps[0].genus_or_crosscaps,
                if expect_orientable { 1 } else { 2 }
            );
        }
    }

    #[test]
    fn genus_two_from_one_handle_piece_and_torus_with_hole() {
        // disk with two handles glued to a disk: genus 2, chi = -2
        let mut cx = CellComplex::new();
        let circle = two_edge_circle(&mut cx);
        let reversed: Vec<Dart> = circle.iter().rev().map(|d| d.reversed()).collect();
        attach_piece(&mut cx, &[circle], -3, true, 0).unwrap();
        attach_piece(&mut cx, &[reversed], 1, true, 1).unwrap();
        let comps = closed_and_classified(&cx);
        assert_eq!(comps[0].euler_char, -2);
        assert!(comps[0].orientable);
        assert_eq!(comps[0].genus_or_crosscaps, 2);
    }

    #[test]
    fn open_edge_fails_closedness() {
        let mut cx = CellComplex::new();
        let circle = two_edge_circle(&mut cx);
        attach_piece(&mut cx, &[circle], 1, true, 0).unwrap();
        assert!(cx.check_edges_closed().is_err());
    }

    #[test]
    fn pinched_vertex_fails_link_check() {
        // two spheres sharing a vertex: build two monogon pairs on loop
        // edges at the same vertex
        let mut cx = CellComplex::new();
        let v = cx.add_vertex();
        let e1 = cx.add_edge(v, v);
        let e2 = cx.add_edge(v, v);
        cx.add_face(vec![Dart::fwd(e1)], 0).unwrap();
        cx.add_face(vec![Dart::rev(e1)], 0).unwrap();
        cx.add_face(vec![Dart::fwd(e2)], 1).unwrap();
        cx.add_face(vec![Dart::rev(e2)], 1).unwrap();
        cx.check_edges_closed().unwrap();
        assert!(cx.check_vertex_links().is_err());
    }
}
