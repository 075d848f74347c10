//! Numerical extraction of real curve loci on the quadric models.
//!
//! Curves are traced by marching squares over the model grid: corner signs
//! select crossed cells, crossings are refined along grid edges, segments
//! are paired per cell (with the center-sign rule at saddles) and walked
//! into closed polyline circles. Intersections of two curve systems are
//! refined by a two-variable Newton iteration in the local chart and
//! certified transverse through the crossing-angle sine.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::bipoly::{
    check_invariance, sphere_face_gradient, torus_gradient, value_scale, BiPoly, QuadricPoint,
    SpherePoly,
};
use crate::error::Pgl2Error;
use crate::grid::{
    face_coords, face_of, face_sphere_point, normalize3, CellId, EdgeKey, Model, TraceGrid,
};
use crate::matrix::RealStructure;

/// Node values at or below this relative size are snapped to a positive
/// epsilon so marching squares never sees an exact zero corner.
pub const SNAP_TOL: f64 = 1e-11;

/// Refinement target: |f| at every traced point, relative to the value scale.
pub const REFINE_TOL: f64 = 1e-10;

/// Smoothness certificate: minimum chart gradient norm on the traced locus,
/// relative to the coefficient scale.
pub const SMOOTH_TOL: f64 = 1e-5;

/// Minimum |sin| of the crossing angle at an intersection.
pub const TANGENCY_TOL: f64 = 1e-4;

/// Refined intersection points closer than this are a collision error;
/// closer than the dedup radius they are the same root seen twice.
pub const COLLISION_TOL: f64 = 1e-6;
pub const DEDUP_TOL: f64 = 1e-7;

/// Minimum number of polyline points for a traced circle.
pub const MIN_CIRCLE_SPAN: usize = 8;

/// A refined point of a traced curve, sitting on a grid edge.
#[derive(Debug, Clone)]
pub struct TracePoint {
    pub point: QuadricPoint,
    pub edge: EdgeKey,
}

/// One closed traced circle.
#[derive(Debug, Clone)]
pub struct Circle {
    /// Polyline vertices; the last connects back to the first.
    pub points: Vec<TracePoint>,
    /// Torus homology class (p, q) from angle winding; None on the sphere.
    pub class: Option<(i64, i64)>,
    /// Minimum normalized gradient norm along the circle.
    pub min_gradient: f64,
}

impl Circle {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Traced real locus of one polynomial on a grid.
#[derive(Debug, Clone)]
pub struct CurveSystem {
    pub poly: BiPoly,
    pub grid: TraceGrid,
    pub circles: Vec<Circle>,
    /// Cells whose corner signs change: the curve band.
    pub crossed_cells: BTreeSet<CellId>,
    /// Map from crossed cell to the circles passing through it.
    pub cell_circles: BTreeMap<CellId, Vec<usize>>,
    pub certified_smooth: bool,
}

/// Transverse intersections of two curve systems.
#[derive(Debug, Clone)]
pub struct IntersectionPoint {
    pub point: QuadricPoint,
    /// (circle index, polyline parameter) on the first system.
    pub on_a: (usize, f64),
    pub on_b: (usize, f64),
    pub margin: f64,
}

#[derive(Debug, Clone, Default)]
pub struct IntersectionSet {
    pub points: Vec<IntersectionPoint>,
    pub transversality_margin: f64,
}

impl IntersectionSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Maximal number of real transverse intersections of bidegree (a,a) and
/// (b,b) curves on the quadric.
pub fn intersection_bound(a: usize, b: usize) -> usize {
    2 * a * b
}

/// Scalar field sampled by the tracer: either the torus restriction in the
/// angle chart or the sphere restriction as a trivariate polynomial.
pub struct CurveField {
    pub poly: BiPoly,
    pub model: Model,
    sphere: Option<SpherePoly>,
    pub scale: f64,
}

impl CurveField {
    pub fn new(poly: &BiPoly, model: Model) -> CurveField {
        let sphere = match model {
            Model::Torus => None,
            Model::Sphere => Some(SpherePoly::from_bipoly(poly)),
        };
        CurveField {
            poly: poly.clone(),
            model,
            sphere,
            scale: value_scale(poly, model),
        }
    }

    /// Value in the chart of a face: (theta, phi) on the torus (face 0),
    /// cube-face coordinates on the sphere.
    pub fn value(&self, face: usize, u: f64, v: f64) -> f64 {
        match self.model {
            Model::Torus => {
                let x = [
                    num_complex::Complex64::new(u.cos(), 0.0),
                    num_complex::Complex64::new(u.sin(), 0.0),
                ];
                let y = [
                    num_complex::Complex64::new(v.cos(), 0.0),
                    num_complex::Complex64::new(v.sin(), 0.0),
                ];
                self.poly.eval_xy(x, y).re
            }
            Model::Sphere => {
                let n = face_sphere_point(face, u, v);
                self.sphere.as_ref().unwrap().eval(n).re
            }
        }
    }

    pub fn gradient(&self, face: usize, u: f64, v: f64) -> [f64; 2] {
        match self.model {
            Model::Torus => torus_gradient(&self.poly, u, v),
            Model::Sphere => sphere_face_gradient(self.sphere.as_ref().unwrap(), face, u, v),
        }
    }

    pub fn value_at(&self, p: &QuadricPoint) -> f64 {
        let (face, u, v) = chart_of_point(p);
        self.value(face, u, v)
    }
}

/// Chart coordinates of a quadric point: (face, u, v).
pub fn chart_of_point(p: &QuadricPoint) -> (usize, f64, f64) {
    match p {
        QuadricPoint::Torus { x, y } => {
            let theta = x[1].atan2(x[0]).rem_euclid(std::f64::consts::PI);
            let phi = y[1].atan2(y[0]).rem_euclid(std::f64::consts::PI);
            (0, theta, phi)
        }
        QuadricPoint::Sphere { n } => {
            let face = face_of(*n);
            let (u, v) = face_coords(face, *n);
            (face, u, v)
        }
    }
}

/// Quadric point of chart coordinates.
pub fn point_of_chart(model: Model, face: usize, u: f64, v: f64) -> QuadricPoint {
    match model {
        Model::Torus => QuadricPoint::torus_angles(u, v),
        Model::Sphere => QuadricPoint::Sphere {
            n: face_sphere_point(face, u, v),
        },
    }
}

/// Grid cell containing a quadric point.
pub fn locate_cell(grid: &TraceGrid, p: &QuadricPoint) -> CellId {
    let n = grid.n;
    match p {
        QuadricPoint::Torus { .. } => {
            let (_, theta, phi) = chart_of_point(p);
            let h = std::f64::consts::PI / n as f64;
            let i = ((theta / h).floor() as i64).rem_euclid(n as i64) as usize;
            let j = ((phi / h).floor() as i64).rem_euclid(n as i64) as usize;
            grid.cell(0, i, j)
        }
        QuadricPoint::Sphere { n: nv } => {
            let face = face_of(*nv);
            let (u, v) = face_coords(face, *nv);
            let to_idx =
                |t: f64| (((t + 1.0) / 2.0 * n as f64).floor() as i64).clamp(0, n as i64 - 1) as usize;
            grid.cell(face, to_idx(u), to_idx(v))
        }
    }
}

/// Distance between two quadric points: angle-wrapped in the chart on the
/// torus, chordal in 3-space on the sphere.
pub fn point_distance(a: &QuadricPoint, b: &QuadricPoint) -> f64 {
    match (a, b) {
        (QuadricPoint::Torus { .. }, QuadricPoint::Torus { .. }) => {
            let (_, t1, p1) = chart_of_point(a);
            let (_, t2, p2) = chart_of_point(b);
            let wrap = |d: f64| {
                let d = d.rem_euclid(std::f64::consts::PI);
                d.min(std::f64::consts::PI - d)
            };
            wrap(t1 - t2).hypot(wrap(p1 - p2))
        }
        (QuadricPoint::Sphere { n: n1 }, QuadricPoint::Sphere { n: n2 }) => (0..3)
            .map(|k| (n1[k] - n2[k]).powi(2))
            .sum::<f64>()
            .sqrt(),
        _ => f64::INFINITY,
    }
}

/// Sampled node values with snap handling and torus twist.
pub struct ValueTable {
    grid: TraceGrid,
    bidegree: usize,
    vals: Vec<f64>,
}

impl ValueTable {
    pub fn build(grid: TraceGrid, field: &CurveField) -> ValueTable {
        let snap = SNAP_TOL * field.scale;
        let n = grid.n;
        let vals: Vec<f64> = match grid.model {
            Model::Torus => {
                let h = std::f64::consts::PI / n as f64;
                let rows: Vec<Vec<f64>> = (0..n)
                    .into_par_iter()
                    .map(|j| {
                        (0..n)
                            .map(|i| {
                                let v = field.value(0, i as f64 * h, j as f64 * h);
                                if v.abs() <= snap {
                                    snap
                                } else {
                                    v
                                }
                            })
                            .collect()
                    })
                    .collect();
                rows.into_iter().flatten().collect()
            }
            Model::Sphere => {
                let rows: Vec<Vec<f64>> = (0..6 * (n + 1))
                    .into_par_iter()
                    .map(|row| {
                        let face = row / (n + 1);
                        let j = row % (n + 1);
                        (0..=n)
                            .map(|i| {
                                let p = grid.sphere_node_point(face, i as i64, j as i64);
                                let v = field.sphere.as_ref().unwrap().eval(p).re;
                                if v.abs() <= snap {
                                    snap
                                } else {
                                    v
                                }
                            })
                            .collect()
                    })
                    .collect();
                rows.into_iter().flatten().collect()
            }
        };
        ValueTable {
            grid,
            bidegree: field.poly.bidegree(),
            vals,
        }
    }

    /// Node value at raw indices, twist-corrected on the torus.
    pub fn node(&self, face: usize, i: i64, j: i64) -> f64 {
        let n = self.grid.n as i64;
        match self.grid.model {
            Model::Torus => {
                let im = i.rem_euclid(n);
                let jm = j.rem_euclid(n);
                let wraps = (i - im) / n + (j - jm) / n;
                let v = self.vals[(jm * n + im) as usize];
                if self.bidegree % 2 == 1 && wraps.rem_euclid(2) == 1 {
                    -v
                } else {
                    v
                }
            }
            Model::Sphere => {
                let stride = (n + 1) as usize;
                self.vals[face * stride * stride + j as usize * stride + i as usize]
            }
        }
    }

    /// Corner values of a cell in cyclic order.
    pub fn corners(&self, cell: CellId) -> [f64; 4] {
        self.grid
            .cell_corners(cell)
            .map(|(f, i, j)| self.node(f, i, j))
    }

    pub fn cell_is_crossed(&self, cell: CellId) -> bool {
        let c = self.corners(cell);
        let pos = c.iter().any(|&v| v > 0.0);
        let neg = c.iter().any(|&v| v < 0.0);
        pos && neg
    }
}

/// Trace the real locus of an invariant polynomial on the grid.
pub fn trace(poly: &BiPoly, rs: RealStructure, grid: TraceGrid) -> Result<CurveSystem, Pgl2Error> {
    if poly.bidegree() == 0 || poly.is_zero() {
        return Err(Pgl2Error::SpecViolation {
            reason: "a constant or zero polynomial does not define a curve".into(),
        });
    }
    if !check_invariance(poly, rs) {
        return Err(Pgl2Error::SpecViolation {
            reason: format!(
                "polynomial of bidegree {} is not invariant under {}",
                poly.bidegree(),
                rs.label()
            ),
        });
    }
    let model_for_rs = match rs {
        RealStructure::T2 => Model::Torus,
        RealStructure::S2 => Model::Sphere,
        RealStructure::Empty => {
            return Err(Pgl2Error::SpecViolation {
                reason: "the empty real structure has no real quadric to trace on".into(),
            })
        }
    };
    if model_for_rs != grid.model {
        return Err(Pgl2Error::SpecViolation {
            reason: "grid model does not match the real structure".into(),
        });
    }

    let field = CurveField::new(poly, grid.model);
    let table = ValueTable::build(grid, &field);

    // refined crossing per crossed grid edge
    let mut crossings: BTreeMap<EdgeKey, TracePoint> = BTreeMap::new();
    let mut crossed_cells: BTreeSet<CellId> = BTreeSet::new();
    let mut cell_edges: BTreeMap<CellId, Vec<EdgeKey>> = BTreeMap::new();

    for cell in 0..grid.cell_count() {
        let vals = table.corners(cell);
        let corners = grid.cell_corners(cell);
        let keys = grid.cell_node_keys(cell);
        let mut crossed_here = Vec::new();
        for side in 0..4 {
            let (a, b) = (side, (side + 1) % 4);
            if vals[a] * vals[b] < 0.0 {
                let ek = EdgeKey::new(keys[a], keys[b]);
                crossed_here.push(ek);
                crossings
                    .entry(ek)
                    .or_insert_with(|| refine_edge_crossing(&field, &grid, corners[a], corners[b], ek));
            }
        }
        if !crossed_here.is_empty() {
            crossed_cells.insert(cell);
            cell_edges.insert(cell, crossed_here);
        }
    }

    // per-cell segment pairing
    let mut pairings: BTreeMap<EdgeKey, Vec<(CellId, EdgeKey)>> = BTreeMap::new();
    for (&cell, edges) in &cell_edges {
        let segs: Vec<(EdgeKey, EdgeKey)> = match edges.len() {
            2 => vec![(edges[0], edges[1])],
            4 => saddle_pairs(&field, &grid, cell, &table),
            k => {
                return Err(Pgl2Error::ResolutionTooCoarse {
                    reason: format!("cell with {k} crossed edges"),
                })
            }
        };
        for (a, b) in segs {
            pairings.entry(a).or_default().push((cell, b));
            pairings.entry(b).or_default().push((cell, a));
        }
    }
    for (ek, p) in &pairings {
        if p.len() != 2 {
            return Err(Pgl2Error::ResolutionTooCoarse {
                reason: format!("crossing on edge {ek:?} has {} incident segments", p.len()),
            });
        }
    }

    // walk circles
    let mut visited: BTreeSet<EdgeKey> = BTreeSet::new();
    let mut circles: Vec<Circle> = Vec::new();
    let mut cell_circles: BTreeMap<CellId, Vec<usize>> = BTreeMap::new();
    let all_edges: Vec<EdgeKey> = pairings.keys().copied().collect();
    for &start in &all_edges {
        if visited.contains(&start) {
            continue;
        }
        let circle_idx = circles.len();
        let mut pts: Vec<TracePoint> = Vec::new();
        let mut cur = start;
        // enter via the first pairing of the start edge
        let mut via_cell = pairings[&start][0].0;
        loop {
            visited.insert(cur);
            pts.push(crossings[&cur].clone());
            cell_circles.entry(via_cell).or_default().push(circle_idx);
            // continue through the pairing of `cur` inside `via_cell`
            let next = pairings[&cur]
                .iter()
                .find(|(c, _)| *c == via_cell)
                .expect("entered through an incident cell")
                .1;
            // leave `next` through its other incident cell
            let (c1, _) = pairings[&next][0];
            let (c2, _) = pairings[&next][1];
            via_cell = if c1 == via_cell { c2 } else { c1 };
            cur = next;
            if cur == start {
                break;
            }
        }
        if pts.len() < MIN_CIRCLE_SPAN {
            return Err(Pgl2Error::ResolutionTooCoarse {
                reason: format!("a circle spans only {} cells", pts.len()),
            });
        }
        let class = match grid.model {
            Model::Torus => Some(torus_class(&pts)?),
            Model::Sphere => None,
        };
        let min_gradient = certify_smooth(&field, &pts)?;
        circles.push(Circle {
            points: pts,
            class,
            min_gradient,
        });
    }
    for v in cell_circles.values_mut() {
        v.sort_unstable();
        v.dedup();
    }

    check_circle_separation(&grid, &cell_circles)?;
    if grid.model == Model::Torus && !circles.is_empty() {
        check_total_class(poly.bidegree(), &circles)?;
    }

    Ok(CurveSystem {
        poly: poly.clone(),
        grid,
        circles,
        crossed_cells,
        cell_circles,
        certified_smooth: true,
    })
}

fn refine_edge_crossing(
    field: &CurveField,
    grid: &TraceGrid,
    corner_a: (usize, i64, i64),
    corner_b: (usize, i64, i64),
    edge: EdgeKey,
) -> TracePoint {
    // canonical endpoint order, independent of the asking cell
    let key_a = grid.node_key(corner_a.0, corner_a.1, corner_a.2);
    let (ca, cb) = if key_a == edge.0 {
        (corner_a, corner_b)
    } else {
        (corner_b, corner_a)
    };
    // evaluate along the raw edge coordinates: no chart reduction, so the
    // values stay continuous across the torus twist boundary
    let eval_at = |t: f64| -> (QuadricPoint, f64) {
        match grid.model {
            Model::Torus => {
                let (t0, p0) = grid.torus_node_angles(ca.1, ca.2);
                let (t1, p1) = grid.torus_node_angles(cb.1, cb.2);
                let (theta, phi) = (t0 + (t1 - t0) * t, p0 + (p1 - p0) * t);
                (
                    QuadricPoint::torus_angles(theta, phi),
                    field.value(0, theta, phi),
                )
            }
            Model::Sphere => {
                let a = grid.sphere_node_point(ca.0, ca.1, ca.2);
                let b = grid.sphere_node_point(cb.0, cb.1, cb.2);
                let p = QuadricPoint::Sphere {
                    n: normalize3([
                        a[0] + (b[0] - a[0]) * t,
                        a[1] + (b[1] - a[1]) * t,
                        a[2] + (b[2] - a[2]) * t,
                    ]),
                };
                let v = field.value_at(&p);
                (p, v)
            }
        }
    };
    let (_, mut fa) = eval_at(0.0);
    let (_, fb) = eval_at(1.0);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = (0.5, f64::INFINITY);
    if fa * fb < 0.0 {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let (_, fm) = eval_at(mid);
            if fm.abs() < best.1 {
                best = (mid, fm.abs());
            }
            if fa * fm <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
                fa = fm;
            }
        }
    } else {
        // a snapped endpoint: take the smaller |f| end
        best = if fa.abs() <= fb.abs() {
            (0.0, fa.abs())
        } else {
            (1.0, fb.abs())
        };
    }
    let (point, _) = eval_at(best.0);
    TracePoint { point, edge }
}

fn saddle_pairs(
    field: &CurveField,
    grid: &TraceGrid,
    cell: CellId,
    table: &ValueTable,
) -> Vec<(EdgeKey, EdgeKey)> {
    let keys = grid.cell_node_keys(cell);
    let edges = [
        EdgeKey::new(keys[0], keys[1]),
        EdgeKey::new(keys[1], keys[2]),
        EdgeKey::new(keys[2], keys[3]),
        EdgeKey::new(keys[3], keys[0]),
    ];
    let vals = table.corners(cell);
    let (face, i, j) = grid.cell_face_ij(cell);
    let center = match grid.model {
        Model::Torus => {
            let h = std::f64::consts::PI / grid.n as f64;
            field.value(0, (i as f64 + 0.5) * h, (j as f64 + 0.5) * h)
        }
        Model::Sphere => {
            let s = 2.0 / grid.n as f64;
            field.value(face, -1.0 + (i as f64 + 0.5) * s, -1.0 + (j as f64 + 0.5) * s)
        }
    };
    // corners alternate in sign; connect the crossings around the two
    // corners whose sign differs from the center
    if center * vals[0] >= 0.0 {
        // curve separates corners 1 and 3
        vec![(edges[0], edges[1]), (edges[2], edges[3])]
    } else {
        // curve separates corners 0 and 2
        vec![(edges[3], edges[0]), (edges[1], edges[2])]
    }
}

fn torus_class(pts: &[TracePoint]) -> Result<(i64, i64), Pgl2Error> {
    let pi = std::f64::consts::PI;
    let wrap = |d: f64| d - pi * (d / pi).round();
    let mut total = [0.0f64, 0.0f64];
    for k in 0..pts.len() {
        let (_, t1, p1) = chart_of_point(&pts[k].point);
        let (_, t2, p2) = chart_of_point(&pts[(k + 1) % pts.len()].point);
        total[0] += wrap(t2 - t1);
        total[1] += wrap(p2 - p1);
    }
    let p = (total[0] / pi).round();
    let q = (total[1] / pi).round();
    if (total[0] / pi - p).abs() > 0.05 || (total[1] / pi - q).abs() > 0.05 {
        return Err(Pgl2Error::ResolutionTooCoarse {
            reason: format!("non-integer winding ({}, {})", total[0] / pi, total[1] / pi),
        });
    }
    // the walk direction is arbitrary: normalize the class up to sign
    let (mut p, mut q) = (p as i64, q as i64);
    if p < 0 || (p == 0 && q < 0) {
        p = -p;
        q = -q;
    }
    Ok((p, q))
}

fn certify_smooth(field: &CurveField, pts: &[TracePoint]) -> Result<f64, Pgl2Error> {
    let mut min_grad = f64::INFINITY;
    for tp in pts {
        let (face, u, v) = chart_of_point(&tp.point);
        let g = field.gradient(face, u, v);
        let norm = g[0].hypot(g[1]) / field.scale;
        min_grad = min_grad.min(norm);
        let val = field.value_at(&tp.point).abs();
        if val > REFINE_TOL * field.scale * 10.0 {
            return Err(Pgl2Error::ResolutionTooCoarse {
                reason: format!("traced point off the locus: |f| = {val:.3e}"),
            });
        }
    }
    if min_grad < SMOOTH_TOL {
        return Err(Pgl2Error::SingularCurve {
            reason: format!("gradient norm {min_grad:.3e} on the traced locus"),
        });
    }
    Ok(min_grad)
}

fn check_circle_separation(
    grid: &TraceGrid,
    cell_circles: &BTreeMap<CellId, Vec<usize>>,
) -> Result<(), Pgl2Error> {
    for (&cell, ids) in cell_circles {
        if ids.len() > 1 {
            return Err(Pgl2Error::ResolutionTooCoarse {
                reason: "two circles share a grid cell".into(),
            });
        }
        // breadth-2 neighborhood must not carry a different circle
        let mut ring = vec![cell];
        for _ in 0..2 {
            let mut next = Vec::new();
            for &c in &ring {
                for side in 0..4 {
                    next.push(grid.cell_neighbor(c, side));
                }
            }
            ring.extend(next);
        }
        ring.sort_unstable();
        ring.dedup();
        for c in ring {
            if let Some(other) = cell_circles.get(&c) {
                if other.iter().any(|id| !ids.contains(id)) {
                    return Err(Pgl2Error::ResolutionTooCoarse {
                        reason: "circles closer than two grid cells".into(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Mod-2 consistency of the total homology class with the bidegree: the sum
/// of circle classes must be congruent to (b, b), which matches counting
/// sign changes along the two rulings.
fn check_total_class(bidegree: usize, circles: &[Circle]) -> Result<(), Pgl2Error> {
    let (mut p, mut q) = (0i64, 0i64);
    for c in circles {
        let (cp, cq) = c.class.unwrap();
        p += cp;
        q += cq;
    }
    let b = bidegree as i64;
    if (p - b) % 2 != 0 || (q - b) % 2 != 0 {
        return Err(Pgl2Error::ResolutionTooCoarse {
            reason: format!("total class ({p}, {q}) inconsistent with bidegree {bidegree} mod 2"),
        });
    }
    Ok(())
}

/// Refine the transverse intersections of two curve systems traced on the
/// same grid.
pub fn intersect(a: &CurveSystem, b: &CurveSystem) -> Result<IntersectionSet, Pgl2Error> {
    if a.grid != b.grid {
        return Err(Pgl2Error::SpecViolation {
            reason: "curve systems traced on different grids".into(),
        });
    }
    let grid = a.grid;
    let fa = CurveField::new(&a.poly, grid.model);
    let fb = CurveField::new(&b.poly, grid.model);

    // candidate cells: crossed by A with a B crossing within one ring
    let mut candidates: BTreeSet<CellId> = BTreeSet::new();
    for &cell in &a.crossed_cells {
        let mut near = vec![cell];
        for side in 0..4 {
            let nb = grid.cell_neighbor(cell, side);
            near.push(nb);
            for side2 in 0..4 {
                near.push(grid.cell_neighbor(nb, side2));
            }
        }
        if near.iter().any(|c| b.crossed_cells.contains(c)) {
            candidates.insert(cell);
        }
    }

    let mut found: Vec<(QuadricPoint, f64)> = Vec::new();
    for &cell in &candidates {
        if let Some((pt, margin)) = newton_intersection(&fa, &fb, &grid, cell) {
            found.push((pt, margin));
        }
    }

    // dedupe identical roots, reject near-collisions
    let mut points: Vec<(QuadricPoint, f64)> = Vec::new();
    for (pt, margin) in found {
        let mut keep = true;
        for (q, _) in &points {
            let d = point_distance(&pt, q);
            if d < DEDUP_TOL {
                keep = false;
                break;
            }
            if d < COLLISION_TOL {
                return Err(Pgl2Error::DuplicateCollision { distance: d });
            }
        }
        if keep {
            points.push((pt, margin));
        }
    }

    let mut set = IntersectionSet {
        points: Vec::new(),
        transversality_margin: f64::INFINITY,
    };
    for (pt, margin) in points {
        if margin < TANGENCY_TOL {
            return Err(Pgl2Error::TangencyDetected { margin });
        }
        let on_a = locate_on_system(a, &pt)?;
        let on_b = locate_on_system(b, &pt)?;
        set.transversality_margin = set.transversality_margin.min(margin);
        set.points.push(IntersectionPoint {
            point: pt,
            on_a,
            on_b,
            margin,
        });
    }
    if set.points.is_empty() {
        set.transversality_margin = 0.0;
    }

    let bound = intersection_bound(a.poly.bidegree(), b.poly.bidegree());
    if set.points.len() % 2 != 0 {
        return Err(Pgl2Error::ResolutionTooCoarse {
            reason: format!(
                "odd intersection count {} violates the mod-2 intersection number",
                set.points.len()
            ),
        });
    }
    if set.points.len() > bound {
        return Err(Pgl2Error::ResolutionTooCoarse {
            reason: format!("{} intersections exceed the bound {bound}", set.points.len()),
        });
    }
    // every circle must meet the partner curve evenly
    for pick in [0usize, 1] {
        let sys = if pick == 0 { a } else { b };
        let mut per_circle = vec![0usize; sys.circles.len()];
        for p in &set.points {
            let (ci, _) = if pick == 0 { p.on_a } else { p.on_b };
            per_circle[ci] += 1;
        }
        if per_circle.iter().any(|&c| c % 2 != 0) {
            return Err(Pgl2Error::ResolutionTooCoarse {
                reason: "a circle crosses the partner curve an odd number of times".into(),
            });
        }
    }
    Ok(set)
}

fn newton_intersection(
    fa: &CurveField,
    fb: &CurveField,
    grid: &TraceGrid,
    cell: CellId,
) -> Option<(QuadricPoint, f64)> {
    let (face, i, j) = grid.cell_face_ij(cell);
    let (mut u, mut v, width) = match grid.model {
        Model::Torus => {
            let h = std::f64::consts::PI / grid.n as f64;
            ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h, h)
        }
        Model::Sphere => {
            let s = 2.0 / grid.n as f64;
            (-1.0 + (i as f64 + 0.5) * s, -1.0 + (j as f64 + 0.5) * s, s)
        }
    };
    let (u0, v0) = (u, v);
    let tol_a = REFINE_TOL * fa.scale;
    let tol_b = REFINE_TOL * fb.scale;
    for _ in 0..40 {
        let va = fa.value(face, u, v);
        let vb = fb.value(face, u, v);
        let ga = fa.gradient(face, u, v);
        let gb = fb.gradient(face, u, v);
        if va.abs() <= tol_a && vb.abs() <= tol_b {
            let na = ga[0].hypot(ga[1]);
            let nb = gb[0].hypot(gb[1]);
            if na == 0.0 || nb == 0.0 {
                return None;
            }
            let margin = (ga[0] * gb[1] - ga[1] * gb[0]).abs() / (na * nb);
            // keep only roots near the starting cell; neighbors find their own
            if (u - u0).abs() > 1.5 * width || (v - v0).abs() > 1.5 * width {
                return None;
            }
            return Some((point_of_chart(grid.model, face, u, v), margin));
        }
        let det = ga[0] * gb[1] - ga[1] * gb[0];
        if det.abs() < 1e-300 {
            return None;
        }
        let mut du = (-va * gb[1] + vb * ga[1]) / det;
        let mut dv = (-vb * ga[0] + va * gb[0]) / det;
        let step = du.hypot(dv);
        let cap = 2.0 * width;
        if step > cap {
            du *= cap / step;
            dv *= cap / step;
        }
        u += du;
        v += dv;
        if (u - u0).abs() > 4.0 * width || (v - v0).abs() > 4.0 * width {
            return None;
        }
    }
    None
}

fn locate_on_system(sys: &CurveSystem, p: &QuadricPoint) -> Result<(usize, f64), Pgl2Error> {
    let mut best: Option<(usize, f64, f64)> = None;
    for (ci, circle) in sys.circles.iter().enumerate() {
        let m = circle.points.len();
        for k in 0..m {
            let a = &circle.points[k].point;
            let b = &circle.points[(k + 1) % m].point;
            let (d, t) = point_segment_distance(p, a, b);
            if best.map_or(true, |(_, _, bd)| d < bd) {
                best = Some((ci, k as f64 + t, d));
            }
        }
    }
    let (ci, param, d) = best.ok_or_else(|| Pgl2Error::SpecViolation {
        reason: "intersection located on an empty curve system".into(),
    })?;
    if d > 4.0 * sys.grid.cell_width() {
        return Err(Pgl2Error::ResolutionTooCoarse {
            reason: format!("intersection is {d:.2e} away from the traced polyline"),
        });
    }
    Ok((ci, param))
}

fn point_segment_distance(p: &QuadricPoint, a: &QuadricPoint, b: &QuadricPoint) -> (f64, f64) {
    match (a, b, p) {
        (
            QuadricPoint::Sphere { n: na },
            QuadricPoint::Sphere { n: nb },
            QuadricPoint::Sphere { n: np },
        ) => {
            let ab = [nb[0] - na[0], nb[1] - na[1], nb[2] - na[2]];
            let ap = [np[0] - na[0], np[1] - na[1], np[2] - na[2]];
            let dot = ab[0] * ap[0] + ab[1] * ap[1] + ab[2] * ap[2];
            let len2 = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
            let t = if len2 > 0.0 {
                (dot / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let closest = [na[0] + ab[0] * t, na[1] + ab[1] * t, na[2] + ab[2] * t];
            let dist = ((np[0] - closest[0]).powi(2)
                + (np[1] - closest[1]).powi(2)
                + (np[2] - closest[2]).powi(2))
            .sqrt();
            (dist, t)
        }
        _ => {
            let (_, t1, p1) = chart_of_point(a);
            let (_, t2, p2) = chart_of_point(b);
            let (_, tp, pp) = chart_of_point(p);
            let pi = std::f64::consts::PI;
            let wrap = |d: f64| d - pi * (d / pi).round();
            let ab = (wrap(t2 - t1), wrap(p2 - p1));
            let ap = (wrap(tp - t1), wrap(pp - p1));
            let len2 = ab.0 * ab.0 + ab.1 * ab.1;
            let t = if len2 > 0.0 {
                ((ap.0 * ab.0 + ap.1 * ab.1) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let dx = ap.0 - ab.0 * t;
            let dy = ap.1 - ab.1 * t;
            ((dx * dx + dy * dy).sqrt(), t)
        }
    }
}

/// Serialize traced polylines as line-delimited records, the optional debug
/// dump surface.
pub fn dump_polylines(sys: &CurveSystem) -> String {
    let mut out = String::new();
    for (ci, circle) in sys.circles.iter().enumerate() {
        for (k, tp) in circle.points.iter().enumerate() {
            let coords = match &tp.point {
                QuadricPoint::Torus { .. } => {
                    let (_, t, p) = chart_of_point(&tp.point);
                    format!("[{t:.17e},{p:.17e}]")
                }
                QuadricPoint::Sphere { n } => {
                    format!("[{:.17e},{:.17e},{:.17e}]", n[0], n[1], n[2])
                }
            };
            out.push_str(&format!(
                "{{\"circle_id\":{ci},\"t\":{k},\"coords\":{coords}}}\n"
            ));
        }
    }
    out
}
