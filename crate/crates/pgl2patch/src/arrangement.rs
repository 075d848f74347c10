//! Signed region decomposition of the quadric complement of two consecutive
//! curve systems at a critical level.
//!
//! Regions come from a flood fill over grid cells not crossed by either
//! curve; their sign is the sign of the ratio of the two polynomials at
//! interior samples. Circles are split at intersection vertices into arcs,
//! each arc borders exactly one region per side, and region boundary walks
//! are recovered from the cyclic angular order of the four arc ends at every
//! vertex.

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bipoly::{ratio_sign, BiPoly, QuadricPoint, RatioSign};
use crate::error::Pgl2Error;
use crate::grid::{CellId, Model, TraceGrid};
use crate::tracer::{
    chart_of_point, intersect, locate_cell, point_of_chart, CurveSystem, IntersectionSet,
};

/// Region sign: the sign of f_prev / f_next on the region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Sign::Plus => "plus",
            Sign::Minus => "minus",
        }
    }
}

/// Which of the level's two curves a circle belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveSide {
    Prev,
    Next,
}

/// An intersection vertex of the two curves.
#[derive(Debug, Clone)]
pub struct ArrVertex {
    pub point: Option<QuadricPoint>,
    pub margin: f64,
    /// Arc ends in counterclockwise angular order (polynomial mode only).
    pub ends: Vec<ArcEnd>,
}

/// One end of an arc at a vertex: `outgoing` means the arc starts there.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArcEnd {
    pub arc: usize,
    pub outgoing: bool,
}

/// A circle of one of the two curves, as a cyclic sequence of arcs.
#[derive(Debug, Clone)]
pub struct ArrCircle {
    pub side: CurveSide,
    pub circle_idx: usize,
    pub class: Option<(i64, i64)>,
    /// Arc ids in cyclic order along the circle.
    pub arcs: Vec<usize>,
    /// True when the circle carries no vertex and consists of one closed arc.
    pub closed: bool,
}

/// An arc: a piece of a circle between two consecutive vertices, or a whole
/// vertex-free circle.
#[derive(Debug, Clone)]
pub struct ArrArc {
    pub circle: usize,
    pub from: Option<usize>,
    pub to: Option<usize>,
    pub left_region: usize,
    pub right_region: usize,
    /// Geometry for rendering and sampling (empty in combinatorial mode).
    pub polyline: Vec<QuadricPoint>,
}

/// A directed arc reference: forward means from `from` to `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirArc {
    pub arc: usize,
    pub forward: bool,
}

/// A connected component of the complement, with its sign and topology.
#[derive(Debug, Clone)]
pub struct Region {
    pub sign: Sign,
    pub euler_char: i64,
    pub cells: Vec<CellId>,
    /// Boundary cycles, each a closed chain of directed arcs with the
    /// region on the left.
    pub cycles: Vec<Vec<DirArc>>,
}

impl Region {
    /// Genus of the compact orientable region completion:
    /// chi = 2 - 2g - #cycles.
    pub fn genus(&self) -> Result<usize, Pgl2Error> {
        let b = self.cycles.len() as i64;
        let twice_g = 2 - self.euler_char - b;
        if twice_g < 0 || twice_g % 2 != 0 {
            return Err(Pgl2Error::SignInconsistent {
                reason: format!(
                    "region with chi = {} and {} boundary cycles is not an orientable surface",
                    self.euler_char, b
                ),
            });
        }
        Ok((twice_g / 2) as usize)
    }
}

/// The signed arrangement at one critical level.
#[derive(Debug, Clone)]
pub struct LevelArrangement {
    pub level: usize,
    pub model: Model,
    pub circles: Vec<ArrCircle>,
    pub arcs: Vec<ArrArc>,
    pub vertices: Vec<ArrVertex>,
    pub regions: Vec<Region>,
    pub intersections: Option<IntersectionSet>,
}

impl LevelArrangement {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Same geometry with every region sign interchanged: the reflection
    /// level on the other group component.
    pub fn reflect_signs(&self) -> LevelArrangement {
        let mut out = self.clone();
        for r in &mut out.regions {
            r.sign = r.sign.flip();
        }
        out
    }

    /// The arrangement Euler identity: the region characteristics and the
    /// curve 1-complex together rebuild the model surface.
    pub fn check_euler_identity(&self) -> Result<(), Pgl2Error> {
        let sum: i64 = self.regions.iter().map(|r| r.euler_char).sum();
        let expect = self.model.euler_characteristic() + self.vertices.len() as i64;
        if sum != expect {
            return Err(Pgl2Error::SignInconsistent {
                reason: format!(
                    "region Euler sum {sum} does not rebuild the model: expected {expect}"
                ),
            });
        }
        Ok(())
    }

    /// Structural validation shared by both construction paths.
    pub fn validate(&self) -> Result<(), Pgl2Error> {
        // arcs chain correctly around circles
        for (ci, circle) in self.circles.iter().enumerate() {
            if circle.closed {
                if circle.arcs.len() != 1 {
                    return Err(Pgl2Error::SpecViolation {
                        reason: "a closed circle must consist of one arc".into(),
                    });
                }
                let a = &self.arcs[circle.arcs[0]];
                if a.from.is_some() || a.to.is_some() {
                    return Err(Pgl2Error::SpecViolation {
                        reason: "closed arc with endpoints".into(),
                    });
                }
                continue;
            }
            if circle.arcs.len() % 2 != 0 {
                return Err(Pgl2Error::SignInconsistent {
                    reason: format!(
                        "circle {ci} carries an odd number of arcs ({}), sign sides cannot alternate",
                        circle.arcs.len()
                    ),
                });
            }
            for (k, &aid) in circle.arcs.iter().enumerate() {
                let next = circle.arcs[(k + 1) % circle.arcs.len()];
                let (a, b) = (&self.arcs[aid], &self.arcs[next]);
                if a.to.is_none() || a.to != b.from {
                    return Err(Pgl2Error::SpecViolation {
                        reason: format!("arcs {aid} and {next} do not chain around circle {ci}"),
                    });
                }
                if a.circle != ci {
                    return Err(Pgl2Error::SpecViolation {
                        reason: format!("arc {aid} does not belong to circle {ci}"),
                    });
                }
            }
        }
        // every vertex joins two prev ends and two next ends
        let mut incidence = vec![(0usize, 0usize); self.vertices.len()];
        for arc in &self.arcs {
            let side = self.circles[arc.circle].side;
            for v in [arc.from, arc.to].into_iter().flatten() {
                match side {
                    CurveSide::Prev => incidence[v].0 += 1,
                    CurveSide::Next => incidence[v].1 += 1,
                }
            }
        }
        for (v, &(p, n)) in incidence.iter().enumerate() {
            if p != 2 || n != 2 {
                return Err(Pgl2Error::SpecViolation {
                    reason: format!("vertex {v} has {p} prev ends and {n} next ends, expected 2+2"),
                });
            }
        }
        // each arc is used once per direction, by regions of opposite sign
        let mut usage: BTreeMap<(usize, bool), usize> = BTreeMap::new();
        for (rid, region) in self.regions.iter().enumerate() {
            for cycle in &region.cycles {
                for (k, d) in cycle.iter().enumerate() {
                    if usage.insert((d.arc, d.forward), rid).is_some() {
                        return Err(Pgl2Error::SignInconsistent {
                            reason: format!("arc {} traversed twice in direction {}", d.arc, d.forward),
                        });
                    }
                    // chain: head of d meets tail of the next
                    let next = cycle[(k + 1) % cycle.len()];
                    let head = self.dir_head(*d);
                    let tail = self.dir_tail(next);
                    if head != tail {
                        return Err(Pgl2Error::SpecViolation {
                            reason: format!("boundary cycle of region {rid} does not chain"),
                        });
                    }
                }
            }
        }
        for (aid, arc) in self.arcs.iter().enumerate() {
            let fwd = usage.get(&(aid, true)).copied();
            let bwd = usage.get(&(aid, false)).copied();
            match (fwd, bwd) {
                (Some(l), Some(r)) => {
                    if l != arc.left_region || r != arc.right_region {
                        return Err(Pgl2Error::SpecViolation {
                            reason: format!("arc {aid} side regions disagree with its cycles"),
                        });
                    }
                    if self.regions[l].sign == self.regions[r].sign {
                        return Err(Pgl2Error::SignInconsistent {
                            reason: format!("arc {aid} borders two regions of equal sign"),
                        });
                    }
                }
                _ => {
                    return Err(Pgl2Error::SpecViolation {
                        reason: format!("arc {aid} is not traversed once per direction"),
                    });
                }
            }
        }
        // regions complete: genus integrality
        for r in &self.regions {
            r.genus()?;
        }
        self.check_euler_identity()
    }

    fn dir_head(&self, d: DirArc) -> Option<usize> {
        let a = &self.arcs[d.arc];
        if d.forward {
            a.to
        } else {
            a.from
        }
    }

    fn dir_tail(&self, d: DirArc) -> Option<usize> {
        let a = &self.arcs[d.arc];
        if d.forward {
            a.from
        } else {
            a.to
        }
    }

    /// Construct from combinatorial data (already resolved into indices);
    /// runs the full structural validation.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        level: usize,
        model: Model,
        circles: Vec<ArrCircle>,
        arcs: Vec<ArrArc>,
        vertex_count: usize,
        regions: Vec<Region>,
    ) -> Result<LevelArrangement, Pgl2Error> {
        let vertices = (0..vertex_count)
            .map(|_| ArrVertex {
                point: None,
                margin: f64::INFINITY,
                ends: Vec::new(),
            })
            .collect();
        let arr = LevelArrangement {
            level,
            model,
            circles,
            arcs,
            vertices,
            regions,
            intersections: None,
        };
        arr.validate()?;
        Ok(arr)
    }
}

/// Outward march when sampling the two sides of an arc: step and cap, in
/// cell widths. The first uncrossed cell hit is the adjacent region.
const SIDE_STEP: f64 = 0.4;
const SIDE_MAX: f64 = 6.0;

/// Number of interior sample stations along an arc.
const ARC_SAMPLES: usize = 5;

/// Minimum sign samples per region (fewer if the region is smaller).
const REGION_SIGN_SAMPLES: usize = 8;

/// Largest flood component that may be absorbed as a band pocket.
const POCKET_MAX_CELLS: usize = 64;

/// Build the signed arrangement of a critical level from traced curves.
///
/// `prev` is None at the first level of an even-degree diagram, where the
/// numerator of the level ratio is a constant; `f_prev` must then be that
/// constant polynomial.
pub fn build_arrangement(
    level: usize,
    prev: Option<&CurveSystem>,
    next: &CurveSystem,
    f_prev: &BiPoly,
    f_next: &BiPoly,
    seed: u64,
) -> Result<LevelArrangement, Pgl2Error> {
    let grid = next.grid;
    let model = grid.model;

    // intersections of the two curves
    let inter = match prev {
        Some(p) => Some(intersect(p, next)?),
        None => None,
    };
    let n_vertices = inter.as_ref().map_or(0, |s| s.points.len());

    // vertices
    let vertices_data: Vec<(QuadricPoint, f64)> = inter
        .as_ref()
        .map(|s| s.points.iter().map(|p| (p.point, p.margin)).collect())
        .unwrap_or_default();

    // per-circle vertex stations: (param, vertex id)
    // prev circles first, then next circles
    let prev_circle_count = prev.map_or(0, |p| p.circles.len());
    let mut stations: Vec<Vec<(f64, usize)>> =
        vec![Vec::new(); prev_circle_count + next.circles.len()];
    if let Some(set) = &inter {
        for (vid, p) in set.points.iter().enumerate() {
            stations[p.on_a.0].push((p.on_a.1, vid));
            stations[prev_circle_count + p.on_b.0].push((p.on_b.1, vid));
        }
    }
    for s in &mut stations {
        s.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    }

    // split circles into arcs
    let mut circles: Vec<ArrCircle> = Vec::new();
    let mut arcs: Vec<ArrArc> = Vec::new();
    let mut vertex_ends: Vec<Vec<ArcEnd>> = vec![Vec::new(); n_vertices];
    let sys_iter: Vec<(CurveSide, &CurveSystem)> = match prev {
        Some(p) => vec![(CurveSide::Prev, p), (CurveSide::Next, next)],
        None => vec![(CurveSide::Next, next)],
    };
    let mut station_offset = 0;
    for (side, sys) in sys_iter {
        if side == CurveSide::Next {
            station_offset = prev_circle_count;
        }
        for (ci_local, circle) in sys.circles.iter().enumerate() {
            let my_stations = &stations[station_offset + ci_local];
            let arr_circle_id = circles.len();
            let mut arc_ids = Vec::new();
            if my_stations.is_empty() {
                let polyline: Vec<QuadricPoint> =
                    circle.points.iter().map(|tp| tp.point).collect();
                let aid = arcs.len();
                arcs.push(ArrArc {
                    circle: arr_circle_id,
                    from: None,
                    to: None,
                    left_region: usize::MAX,
                    right_region: usize::MAX,
                    polyline,
                });
                arc_ids.push(aid);
            } else {
                let m = circle.points.len();
                for k in 0..my_stations.len() {
                    let (t_a, v_a) = my_stations[k];
                    let (t_b, v_b) = my_stations[(k + 1) % my_stations.len()];
                    let mut polyline = vec![vertices_data[v_a].0];
                    // interior polyline points strictly between the params
                    let mut idx = t_a.floor() as usize + 1;
                    let end = if k + 1 == my_stations.len() {
                        t_b + m as f64
                    } else {
                        t_b
                    };
                    while (idx as f64) < end {
                        polyline.push(circle.points[idx % m].point);
                        idx += 1;
                    }
                    polyline.push(vertices_data[v_b].0);
                    let aid = arcs.len();
                    arcs.push(ArrArc {
                        circle: arr_circle_id,
                        from: Some(v_a),
                        to: Some(v_b),
                        left_region: usize::MAX,
                        right_region: usize::MAX,
                        polyline,
                    });
                    arc_ids.push(aid);
                    vertex_ends[v_a].push(ArcEnd {
                        arc: aid,
                        outgoing: true,
                    });
                    vertex_ends[v_b].push(ArcEnd {
                        arc: aid,
                        outgoing: false,
                    });
                }
            }
            circles.push(ArrCircle {
                side,
                circle_idx: ci_local,
                class: circle.class,
                arcs: arc_ids,
                closed: my_stations.is_empty(),
            });
        }
    }

    // flood fill the complement cells
    let mut crossed: BTreeSet<CellId> = next.crossed_cells.clone();
    if let Some(p) = prev {
        crossed.extend(p.crossed_cells.iter().copied());
    }
    let (cell_region, region_cells) = flood_fill(&grid, &crossed);
    if region_cells.is_empty() {
        return Err(Pgl2Error::ResolutionTooCoarse {
            reason: "no uncrossed cells: curves saturate the grid".into(),
        });
    }

    // region signs from the ratio at interior cell centers
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (level as u64).wrapping_mul(0x9e37_79b9));
    let mut signs: Vec<Sign> = Vec::with_capacity(region_cells.len());
    for cells in &region_cells {
        let mut picks: Vec<CellId> = vec![cells[0], *cells.last().unwrap()];
        for _ in 0..REGION_SIGN_SAMPLES {
            picks.push(cells[rng.gen_range(0..cells.len())]);
        }
        let mut seen: Option<Sign> = None;
        for cell in picks {
            let center = cell_center(&grid, cell);
            let s = match ratio_sign(f_prev, f_next, &center)? {
                RatioSign::Plus => Sign::Plus,
                RatioSign::Minus => Sign::Minus,
                RatioSign::OnCurve => {
                    return Err(Pgl2Error::SignInconsistent {
                        reason: "region interior sample landed on a curve".into(),
                    })
                }
            };
            match seen {
                None => seen = Some(s),
                Some(prev_sign) if prev_sign != s => {
                    return Err(Pgl2Error::SignInconsistent {
                        reason: format!("samples inside region disagree at level {level}"),
                    });
                }
                _ => {}
            }
        }
        signs.push(seen.unwrap());
    }

    // arc sides from perpendicular offset samples
    for aid in 0..arcs.len() {
        let (left, right) = arc_sides(&grid, &arcs[aid], &cell_region)?;
        arcs[aid].left_region = left;
        arcs[aid].right_region = right;
        if signs[left] == signs[right] {
            return Err(Pgl2Error::SignInconsistent {
                reason: format!("arc {aid} borders two regions of the same sign"),
            });
        }
    }

    // absorb pocket cells: tiny flood components stranded inside the curve
    // band at crossing corners. A genuine region always borders an arc when
    // any curves exist, so unreferenced components are band artifacts.
    let (signs, region_cells) = if arcs.is_empty() {
        (signs, region_cells)
    } else {
        let mut referenced = vec![false; signs.len()];
        for arc in &arcs {
            referenced[arc.left_region] = true;
            referenced[arc.right_region] = true;
        }
        for (rid, r) in referenced.iter().enumerate() {
            if !r && region_cells[rid].len() > POCKET_MAX_CELLS {
                return Err(Pgl2Error::ResolutionTooCoarse {
                    reason: format!(
                        "unreferenced region of {} cells cannot be classified",
                        region_cells[rid].len()
                    ),
                });
            }
        }
        let mut remap = vec![usize::MAX; signs.len()];
        let mut new_signs = Vec::new();
        let mut new_cells = Vec::new();
        for rid in 0..signs.len() {
            if referenced[rid] {
                remap[rid] = new_signs.len();
                new_signs.push(signs[rid]);
                new_cells.push(region_cells[rid].clone());
            }
        }
        for arc in &mut arcs {
            arc.left_region = remap[arc.left_region];
            arc.right_region = remap[arc.right_region];
        }
        (new_signs, new_cells)
    };

    // angular order of arc ends at each vertex
    let mut vertices: Vec<ArrVertex> = Vec::with_capacity(n_vertices);
    for (vid, (point, margin)) in vertices_data.iter().enumerate() {
        let mut ends = vertex_ends[vid].clone();
        if ends.len() != 4 {
            return Err(Pgl2Error::SpecViolation {
                reason: format!("vertex {vid} has {} arc ends, expected 4", ends.len()),
            });
        }
        let mut angles: Vec<(f64, ArcEnd)> = ends
            .drain(..)
            .map(|e| (end_angle(&arcs, point, e), e))
            .collect();
        angles.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        vertices.push(ArrVertex {
            point: Some(*point),
            margin: *margin,
            ends: angles.into_iter().map(|(_, e)| e).collect(),
        });
    }

    // region boundary cycles by the corner walk
    let cycles = walk_cycles(&arcs, &vertices, signs.len())?;

    // region Euler characteristics from the pixel complex
    let mut regions: Vec<Region> = Vec::new();
    for (rid, cells) in region_cells.iter().enumerate() {
        let chi = pixel_euler_characteristic(&grid, cells)?;
        regions.push(Region {
            sign: signs[rid],
            euler_char: chi,
            cells: cells.clone(),
            cycles: cycles[rid].clone(),
        });
    }

    let arr = LevelArrangement {
        level,
        model,
        circles,
        arcs,
        vertices,
        regions,
        intersections: inter,
    };
    if std::env::var("PGL2_DEBUG_ARR").is_ok() {
        for (i, r) in arr.regions.iter().enumerate() {
            eprintln!("region {i}: sign {:?} chi {} cells {} cycles {:?}", r.sign, r.euler_char, r.cells.len(), r.cycles);
        }
        for (i, a) in arr.arcs.iter().enumerate() {
            eprintln!("arc {i}: circle {} from {:?} to {:?} left {} right {}", a.circle, a.from, a.to, a.left_region, a.right_region);
        }
        for (i, c) in arr.circles.iter().enumerate() {
            eprintln!("circle {i}: side {:?} idx {} closed {} arcs {:?}", c.side, c.circle_idx, c.closed, c.arcs);
        }
        for (i, v) in arr.vertices.iter().enumerate() {
            eprintln!("vertex {i}: ends {:?}", v.ends);
        }
    }
    arr.validate()?;
    Ok(arr)
}

fn flood_fill(
    grid: &TraceGrid,
    crossed: &BTreeSet<CellId>,
) -> (BTreeMap<CellId, usize>, Vec<Vec<CellId>>) {
    let mut region_of: BTreeMap<CellId, usize> = BTreeMap::new();
    let mut regions: Vec<Vec<CellId>> = Vec::new();
    for start in 0..grid.cell_count() {
        if crossed.contains(&start) || region_of.contains_key(&start) {
            continue;
        }
        let rid = regions.len();
        let mut queue = vec![start];
        let mut cells = Vec::new();
        region_of.insert(start, rid);
        while let Some(cell) = queue.pop() {
            cells.push(cell);
            for side in 0..4 {
                let nb = grid.cell_neighbor(cell, side);
                if crossed.contains(&nb) || region_of.contains_key(&nb) {
                    continue;
                }
                region_of.insert(nb, rid);
                queue.push(nb);
            }
        }
        cells.sort_unstable();
        regions.push(cells);
    }
    (region_of, regions)
}

fn cell_center(grid: &TraceGrid, cell: CellId) -> QuadricPoint {
    let (face, i, j) = grid.cell_face_ij(cell);
    match grid.model {
        Model::Torus => {
            let h = std::f64::consts::PI / grid.n as f64;
            point_of_chart(Model::Torus, 0, (i as f64 + 0.5) * h, (j as f64 + 0.5) * h)
        }
        Model::Sphere => {
            let s = 2.0 / grid.n as f64;
            point_of_chart(
                Model::Sphere,
                face,
                -1.0 + (i as f64 + 0.5) * s,
                -1.0 + (j as f64 + 0.5) * s,
            )
        }
    }
}

/// Chart direction of the polyline at station `k`, wrapped into the chart of
/// the point at `k`.
fn polyline_dir(points: &[QuadricPoint], k: usize) -> (usize, f64, f64, [f64; 2]) {
    let (face, u, v) = chart_of_point(&points[k]);
    let next = &points[(k + 1) % points.len()];
    let (du, dv) = chart_delta(face, u, v, next);
    (face, u, v, [du, dv])
}

/// Chart-coordinate difference from (face, u, v) to a nearby point,
/// projecting the neighbor into the same chart.
fn chart_delta(face: usize, u: f64, v: f64, q: &QuadricPoint) -> (f64, f64) {
    match q {
        QuadricPoint::Torus { .. } => {
            let (_, u2, v2) = chart_of_point(q);
            let pi = std::f64::consts::PI;
            let wrap = |d: f64| d - pi * (d / pi).round();
            (wrap(u2 - u), wrap(v2 - v))
        }
        QuadricPoint::Sphere { n } => {
            let (u2, v2) = crate::grid::face_coords(face, *n);
            (u2 - u, v2 - v)
        }
    }
}

/// Determine the two side regions of an arc by offset sampling.
fn arc_sides(
    grid: &TraceGrid,
    arc: &ArrArc,
    cell_region: &BTreeMap<CellId, usize>,
) -> Result<(usize, usize), Pgl2Error> {
    let m = arc.polyline.len();
    if m < 2 {
        return Err(Pgl2Error::ResolutionTooCoarse {
            reason: "arc polyline too short to sample".into(),
        });
    }
    let width = grid.cell_width();
    let mut left: Option<usize> = None;
    let mut right: Option<usize> = None;
    // interior stations, avoiding the vertex neighborhoods
    let lo = (m as f64 * 0.2) as usize;
    let hi = ((m as f64 * 0.8) as usize).max(lo + 1).min(m - 1);
    let step = ((hi - lo) / ARC_SAMPLES).max(1);
    let mut stations: Vec<usize> = (lo..hi).step_by(step).collect();
    if stations.is_empty() {
        stations.push(m / 2);
    }
    for &k in &stations {
        let (face, u, v, d) = polyline_dir(&arc.polyline, k.min(m - 2));
        let norm = d[0].hypot(d[1]);
        if norm == 0.0 {
            continue;
        }
        // left of travel is the counterclockwise normal
        let nvec = [-d[1] / norm, d[0] / norm];
        for (slot, sgn) in [(0usize, 1.0f64), (1, -1.0)] {
            let store = if slot == 0 { &mut left } else { &mut right };
            let mut dist = SIDE_STEP;
            while dist <= SIDE_MAX {
                let p = point_of_chart(
                    grid.model,
                    face,
                    u + sgn * nvec[0] * dist * width,
                    v + sgn * nvec[1] * dist * width,
                );
                let cell = locate_cell(grid, &p);
                if let Some(&rid) = cell_region.get(&cell) {
                    match store {
                        None => *store = Some(rid),
                        Some(existing) if *existing != rid => {
                            return Err(Pgl2Error::SignInconsistent {
                                reason: "arc side samples land in different regions".into(),
                            });
                        }
                        _ => {}
                    }
                    break;
                }
                dist += SIDE_STEP;
            }
        }
    }
    match (left, right) {
        (Some(l), Some(r)) => Ok((l, r)),
        _ => Err(Pgl2Error::ResolutionTooCoarse {
            reason: "arc side sampling found no region cell".into(),
        }),
    }
}

/// Outward tangent angle of an arc end at a vertex, in the vertex chart.
fn end_angle(arcs: &[ArrArc], vertex: &QuadricPoint, end: ArcEnd) -> f64 {
    let arc = &arcs[end.arc];
    let (face, u, v) = chart_of_point(vertex);
    let m = arc.polyline.len();
    // a nearby interior point of the arc, a couple of stations in
    let depth = usize::min(2, m - 1);
    let probe_idx = if end.outgoing { depth } else { m - 1 - depth };
    let probe = &arc.polyline[probe_idx];
    let (du, dv) = chart_delta(face, u, v, probe);
    dv.atan2(du)
}

/// Recover per-region boundary cycles by the corner walk: arriving at a
/// vertex with the region on the left, the walk leaves through the
/// clockwise-adjacent arc end.
fn walk_cycles(
    arcs: &[ArrArc],
    vertices: &[ArrVertex],
    region_count: usize,
) -> Result<Vec<Vec<Vec<DirArc>>>, Pgl2Error> {
    let mut cycles: Vec<Vec<Vec<DirArc>>> = vec![Vec::new(); region_count];
    let mut used: BTreeSet<(usize, bool)> = BTreeSet::new();

    let head_of = |d: DirArc| -> Option<usize> {
        let a = &arcs[d.arc];
        if d.forward {
            a.to
        } else {
            a.from
        }
    };
    let region_on_left = |d: DirArc| -> usize {
        let a = &arcs[d.arc];
        if d.forward {
            a.left_region
        } else {
            a.right_region
        }
    };

    for start_arc in 0..arcs.len() {
        for start_fwd in [true, false] {
            let start = DirArc {
                arc: start_arc,
                forward: start_fwd,
            };
            if used.contains(&(start.arc, start.forward)) {
                continue;
            }
            let region = region_on_left(start);
            let mut cycle = Vec::new();
            let mut cur = start;
            loop {
                if !used.insert((cur.arc, cur.forward)) {
                    return Err(Pgl2Error::SignInconsistent {
                        reason: "boundary walk revisits a directed arc".into(),
                    });
                }
                cycle.push(cur);
                let next = match head_of(cur) {
                    None => cur, // closed circle: single-arc cycle
                    Some(v) => {
                        let vertex = &vertices[v];
                        // locate the incoming end of `cur` at v
                        let incoming = ArcEnd {
                            arc: cur.arc,
                            outgoing: !cur.forward,
                        };
                        let k = vertex
                            .ends
                            .iter()
                            .position(|e| *e == incoming)
                            .ok_or_else(|| Pgl2Error::SpecViolation {
                                reason: "arc end missing at its vertex".into(),
                            })?;
                        let out = vertex.ends[(k + vertex.ends.len() - 1) % vertex.ends.len()];
                        DirArc {
                            arc: out.arc,
                            forward: out.outgoing,
                        }
                    }
                };
                if head_of(cur).is_none() {
                    break; // closed circle cycle complete
                }
                if region_on_left(next) != region {
                    return Err(Pgl2Error::SignInconsistent {
                        reason: "corner walk changes region; quadrant data inconsistent".into(),
                    });
                }
                if next == start {
                    break;
                }
                cur = next;
            }
            cycles[region].push(cycle);
        }
    }
    Ok(cycles)
}

/// Euler characteristic of the closed pixel union of a region, with a
/// manifold (no-pinch) certificate.
pub fn pixel_euler_characteristic(
    grid: &TraceGrid,
    cells: &[CellId],
) -> Result<i64, Pgl2Error> {
    use crate::grid::{EdgeKey, NodeKey};
    let mut nodes: BTreeSet<NodeKey> = BTreeSet::new();
    let mut edges: BTreeSet<EdgeKey> = BTreeSet::new();
    let mut node_cells: BTreeMap<NodeKey, Vec<(CellId, [EdgeKey; 2])>> = BTreeMap::new();
    for &cell in cells {
        let keys = grid.cell_node_keys(cell);
        let cell_edges = grid.cell_edge_keys(cell);
        for (k, nk) in keys.iter().enumerate() {
            nodes.insert(*nk);
            // the two edges of this cell meeting at corner k
            let e_in = cell_edges[(k + 3) % 4];
            let e_out = cell_edges[k];
            node_cells.entry(*nk).or_default().push((cell, [e_in, e_out]));
        }
        for e in cell_edges {
            edges.insert(e);
        }
    }
    // pinch check: the region cells around each node must form one cluster
    // under sharing-an-edge-at-this-node
    for (_, incident) in node_cells.iter() {
        if incident.len() <= 1 {
            continue;
        }
        let mut cluster: Vec<usize> = (0..incident.len()).collect();
        fn find(c: &mut Vec<usize>, i: usize) -> usize {
            if c[i] != i {
                let r = find(c, c[i]);
                c[i] = r;
            }
            c[i]
        }
        for i in 0..incident.len() {
            for j in (i + 1)..incident.len() {
                let share = incident[i].1.iter().any(|e| incident[j].1.contains(e));
                if share {
                    let (ri, rj) = (find(&mut cluster, i), find(&mut cluster, j));
                    if ri != rj {
                        cluster[ri] = rj;
                    }
                }
            }
        }
        let mut roots: BTreeSet<usize> = BTreeSet::new();
        for i in 0..incident.len() {
            let r = find(&mut cluster, i);
            roots.insert(r);
        }
        if roots.len() > 1 {
            return Err(Pgl2Error::ResolutionTooCoarse {
                reason: "region pixel union pinches at a grid node".into(),
            });
        }
    }
    Ok(nodes.len() as i64 - edges.len() as i64 + cells.len() as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipoly::BiPoly;
    use crate::matrix::RealStructure;
    use crate::samples;
    use crate::tracer::trace;
    use num_complex::Complex64;

    fn torus_grid(n: usize) -> TraceGrid {
        TraceGrid::new(Model::Torus, n)
    }

    fn constant_one() -> BiPoly {
        BiPoly::constant(Complex64::new(1.0, 0.0))
    }

    #[test]
    fn whole_torus_is_one_region_when_curve_is_empty() {
        // definite (2,2) polynomial: no real locus; the single region is the
        // whole torus with chi = 0 and the sign of the constant ratio
        let f2 = samples::torus_definite(2);
        let sys = trace(&f2, RealStructure::T2, torus_grid(64)).unwrap();
        assert!(sys.circles.is_empty());
        let arr =
            build_arrangement(1, None, &sys, &constant_one(), &f2, 0).unwrap();
        assert_eq!(arr.regions.len(), 1);
        assert_eq!(arr.regions[0].sign, Sign::Plus);
        assert_eq!(arr.regions[0].euler_char, 0);
        assert!(arr.regions[0].cycles.is_empty());
        assert_eq!(arr.vertex_count(), 0);
    }

    #[test]
    fn single_circle_splits_level_into_two_regions() {
        // the diagonal alone at an even first level: two annular regions
        // separated by the (1,1)-circle twice? No: one circle of class (1,1)
        // does not separate the torus into two pieces... it does not bound.
        // The complement of a (1,1) circle on the torus is ONE annulus.
        // Use a vertex-free even curve instead: two translates of the
        // diagonal as a smooth (2,2) real locus.
        let f2 = samples::diagonal_translate(0.9).multiply(&samples::diagonal_translate(-0.9));
        let sys = trace(&f2, RealStructure::T2, torus_grid(128)).unwrap();
        assert_eq!(sys.circles.len(), 2);
        let arr = build_arrangement(1, None, &sys, &constant_one(), &f2, 0).unwrap();
        assert_eq!(arr.regions.len(), 2);
        let signs: Vec<Sign> = arr.regions.iter().map(|r| r.sign).collect();
        assert!(signs.contains(&Sign::Plus) && signs.contains(&Sign::Minus));
        // two annuli: chi = 0 each, one boundary cycle per side
        for r in &arr.regions {
            assert_eq!(r.euler_char, 0);
            assert_eq!(r.cycles.len(), 2);
        }
        arr.check_euler_identity().unwrap();
    }

    #[test]
    fn diagonal_antidiagonal_arrangement() {
        // 2 vertices, 4 arcs, 2 regions, each a disk: the Euler identity
        // fixes the region characteristics to 1 + 1 = chi(T^2) + 2
        let grid = torus_grid(128);
        let a = trace(&samples::diagonal(), RealStructure::T2, grid).unwrap();
        let b = trace(&samples::antidiagonal(), RealStructure::T2, grid).unwrap();
        let arr = build_arrangement(
            1,
            Some(&a),
            &b,
            &samples::diagonal(),
            &samples::antidiagonal(),
            0,
        )
        .unwrap();
        assert_eq!(arr.vertex_count(), 2);
        assert_eq!(arr.arcs.len(), 4);
        assert_eq!(arr.regions.len(), 2);
        let chi_sum: i64 = arr.regions.iter().map(|r| r.euler_char).sum();
        assert_eq!(chi_sum, 2);
        for r in &arr.regions {
            assert_eq!(r.euler_char, 1, "both complementary regions are disks");
        }
        // sign alternation across every arc
        for arc in &arr.arcs {
            assert_ne!(
                arr.regions[arc.left_region].sign,
                arr.regions[arc.right_region].sign
            );
        }
    }

    #[test]
    fn reflect_signs_is_an_involution_and_covers() {
        let grid = torus_grid(128);
        let a = trace(&samples::diagonal(), RealStructure::T2, grid).unwrap();
        let b = trace(&samples::antidiagonal(), RealStructure::T2, grid).unwrap();
        let arr = build_arrangement(
            1,
            Some(&a),
            &b,
            &samples::diagonal(),
            &samples::antidiagonal(),
            0,
        )
        .unwrap();
        let refl = arr.reflect_signs();
        for (r1, r2) in arr.regions.iter().zip(refl.regions.iter()) {
            assert_eq!(r1.sign, r2.sign.flip());
        }
        let back = refl.reflect_signs();
        for (r1, r2) in arr.regions.iter().zip(back.regions.iter()) {
            assert_eq!(r1.sign, r2.sign);
        }
        // plus regions of both together cover all regions exactly once
        let plus_count = arr.regions.iter().filter(|r| r.sign == Sign::Plus).count()
            + refl.regions.iter().filter(|r| r.sign == Sign::Plus).count();
        assert_eq!(plus_count, arr.regions.len());
    }

    #[test]
    fn sphere_level_with_circle_has_two_disk_regions()  {
        // a plane section circle separates the sphere into two disks
        let f1 = BiPoly::new(
            1,
            [
                ((0, 0), Complex64::new(0.3, 0.0)),
                ((1, 1), Complex64::new(-0.7, 0.0)),
                ((0, 1), Complex64::new(0.5, 0.5)),
                ((1, 0), Complex64::new(0.5, -0.5)),
            ],
        )
        .unwrap();
        let f3 = samples::sphere_definite(3);
        let grid = TraceGrid::new(Model::Sphere, 64);
        let sys1 = trace(&f1, RealStructure::S2, grid).unwrap();
        let sys3 = trace(&f3, RealStructure::S2, grid).unwrap();
        let arr = build_arrangement(1, Some(&sys1), &sys3, &f1, &f3, 0).unwrap();
        assert_eq!(arr.vertex_count(), 0);
        assert_eq!(arr.regions.len(), 2);
        for r in &arr.regions {
            assert_eq!(r.euler_char, 1);
            assert_eq!(r.cycles.len(), 1);
        }
        arr.check_euler_identity().unwrap();
    }

    #[test]
    fn four_vertex_arrangement_counts() {
        // diagonal crossed with a smoothed (3,3) product: two scaling
        // graphs cross the diagonal twice each, the translate factor never
        // does, so 4 vertices. The oracle is a sign-change count of the
        // restriction to the diagonal.
        let g = samples::perturbed_product(
            &[
                samples::scaling_graph(2.0, 0.3),
                samples::scaling_graph(0.5, 1.1),
                samples::diagonal_translate(0.8),
            ],
            0.05,
            11,
        );
        let mut sign_changes = 0;
        let steps = 4000;
        let at = |t: f64| crate::bipoly::evaluate_real(&g, &QuadricPoint::torus_angles(t, t));
        for k in 0..steps {
            let t0 = k as f64 * std::f64::consts::PI / steps as f64;
            let t1 = (k + 1) as f64 * std::f64::consts::PI / steps as f64;
            // f(t + pi, t + pi) = f(t, t) for even total degree 2b
            let (v0, v1) = (at(t0), at(t1 % std::f64::consts::PI));
            if v0 * v1 < 0.0 {
                sign_changes += 1;
            }
        }
        assert_eq!(sign_changes, 4, "oracle: 4 diagonal crossings");

        let grid = torus_grid(256);
        let a = trace(&samples::diagonal(), RealStructure::T2, grid).unwrap();
        let b = match trace(&g, RealStructure::T2, grid) {
            Ok(sys) => sys,
            Err(e) => panic!("smoothed product failed to trace: {e}"),
        };
        let arr =
            build_arrangement(1, Some(&a), &b, &samples::diagonal(), &g, 0).unwrap();
        assert_eq!(arr.vertex_count(), 4);
        arr.check_euler_identity().unwrap();
        let chi_sum: i64 = arr.regions.iter().map(|r| r.euler_char).sum();
        assert_eq!(chi_sum, 4);
    }
}
