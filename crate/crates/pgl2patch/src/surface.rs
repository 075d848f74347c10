//! Assembly of the real diagram from level arrangements, and its topology.
//!
//! The diagram is glued from: membranes (signed level regions, one sheet per
//! sign), cylinders over curve circles between consecutive levels, a join of
//! the two sheets over each top-curve circle at infinity, and the odd-degree
//! ends at level zero (a cone point on one sheet, a two-to-one circle end or
//! a projective-plane piece on the other). The Euler characteristic is
//! computed twice: from the level intersection counts, and from the glued
//! cell complex.

use serde::{Deserialize, Serialize};

use crate::arrangement::{
    build_arrangement, ArrCircle, CurveSide, LevelArrangement, Sign,
};
use crate::bipoly::{check_invariance, BiPoly, QuadricPoint};
use crate::complex::{attach_piece, CellComplex, ComponentInfo, Dart};
use crate::error::Pgl2Error;
use crate::grid::Model;
use crate::levels::LevelData;
use crate::matrix::RealStructure;
use crate::tracer::{trace, CurveSystem, TraceGrid};

/// One of the two real points of the bundle fiber over a quadric point. The
/// plus sheet carries the untwisted representative and lands in the
/// determinant-positive (torus model) or definite (sphere model) component;
/// the minus sheet is its partner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sheet {
    Plus,
    Minus,
}

impl Sheet {
    pub fn of_sign(s: Sign) -> Sheet {
        match s {
            Sign::Plus => Sheet::Plus,
            Sign::Minus => Sheet::Minus,
        }
    }

    pub fn other(self) -> Sheet {
        match self {
            Sheet::Plus => Sheet::Minus,
            Sheet::Minus => Sheet::Plus,
        }
    }
}

/// Convention constants for the odd-degree level-zero ends: the cone point
/// caps the plus sheet (the definite side's end), the circle end or
/// projective-plane piece closes the minus sheet.
pub const CONE_SHEET: Sheet = Sheet::Plus;
pub const CIRCLE_END_SHEET: Sheet = Sheet::Minus;

/// Diagram construction data: traced curves with their polynomials.
#[derive(Debug)]
pub struct DiagramSpec {
    pub degree: usize,
    pub rs: RealStructure,
    pub levels: LevelData,
    /// Constant numerator of the first even level (bidegree 0).
    pub constant: BiPoly,
    pub polys: Vec<BiPoly>,
    pub curves: Vec<CurveSystem>,
}

/// Expected bidegree sequence for a degree: 2, 4, ..., 2k (even) or
/// 1, 3, ..., 2k+1 (odd).
pub fn bidegree_sequence(degree: usize) -> Vec<usize> {
    let k = degree / 2;
    if degree % 2 == 0 {
        (1..=k).map(|i| 2 * i).collect()
    } else {
        (0..=k).map(|i| 2 * i + 1).collect()
    }
}

impl DiagramSpec {
    /// Trace all curves of a polynomial family on one grid and bundle the
    /// diagram data. Fails on any certification error at this resolution.
    pub fn from_polynomials(
        degree: usize,
        rs: RealStructure,
        levels: LevelData,
        constant: BiPoly,
        polys: Vec<BiPoly>,
        grid: TraceGrid,
    ) -> Result<DiagramSpec, Pgl2Error> {
        let seq = bidegree_sequence(degree);
        if polys.len() != seq.len() {
            return Err(Pgl2Error::SpecViolation {
                reason: format!(
                    "degree {degree} needs {} curves, got {}",
                    seq.len(),
                    polys.len()
                ),
            });
        }
        for (f, &b) in polys.iter().zip(seq.iter()) {
            if f.bidegree() != b {
                return Err(Pgl2Error::SpecViolation {
                    reason: format!("expected bidegree {b}, got {}", f.bidegree()),
                });
            }
        }
        let curves: Vec<CurveSystem> = polys
            .iter()
            .map(|f| trace(f, rs, grid))
            .collect::<Result<_, _>>()?;
        let spec = DiagramSpec {
            degree,
            rs,
            levels,
            constant,
            polys,
            curves,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Structural validation: level count, bidegree sequence, invariance.
    pub fn validate(&self) -> Result<(), Pgl2Error> {
        let k = self.degree / 2;
        if self.levels.k() != k {
            return Err(Pgl2Error::SpecViolation {
                reason: format!(
                    "degree {} has {k} critical levels, got {}",
                    self.degree,
                    self.levels.k()
                ),
            });
        }
        let seq = bidegree_sequence(self.degree);
        if self.polys.len() != seq.len() || self.curves.len() != seq.len() {
            return Err(Pgl2Error::SpecViolation {
                reason: "curve count does not match the degree".into(),
            });
        }
        if self.constant.bidegree() != 0 || self.constant.is_zero() {
            return Err(Pgl2Error::SpecViolation {
                reason: "the level-one numerator must be a nonzero constant".into(),
            });
        }
        for (f, &b) in self.polys.iter().zip(seq.iter()) {
            if f.bidegree() != b {
                return Err(Pgl2Error::SpecViolation {
                    reason: format!("expected bidegree {b}, got {}", f.bidegree()),
                });
            }
            if !check_invariance(f, self.rs) {
                return Err(Pgl2Error::SpecViolation {
                    reason: format!("bidegree {b} polynomial is not {}-invariant", self.rs.label()),
                });
            }
        }
        if !check_invariance(&self.constant, self.rs) {
            return Err(Pgl2Error::SpecViolation {
                reason: "constant term is not invariant".into(),
            });
        }
        for sys in &self.curves {
            if !sys.certified_smooth {
                return Err(Pgl2Error::SpecViolation {
                    reason: "a curve lacks the smoothness certificate".into(),
                });
            }
        }
        Ok(())
    }

    /// Number of critical levels.
    pub fn k(&self) -> usize {
        self.degree / 2
    }
}

/// Assembled piece descriptor.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PieceKind {
    Membrane {
        level: usize,
        sheet: Sheet,
    },
    Cylinder {
        curve: usize,
        circle: usize,
        sheet: Sheet,
        level_lo: usize,
        /// None is the end at infinity.
        level_hi: Option<usize>,
    },
    InfinityJoin {
        curve: usize,
        circle: usize,
    },
    ConePoint {
        sheet: Sheet,
    },
    CoamoebaCircleEnd {
        sheet: Sheet,
    },
    CoamoebaRp2 {
        sheet: Sheet,
        attached: bool,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Piece {
    #[serde(flatten)]
    pub kind: PieceKind,
    pub euler_char: i64,
}

/// Gluing conventions echoed into reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Conventions {
    pub sheet_plus: String,
    pub cone_sheet: Sheet,
    pub circle_end_sheet: Sheet,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions {
            sheet_plus: "untwisted fiber point; determinant-positive / definite group component"
                .into(),
            cone_sheet: CONE_SHEET,
            circle_end_sheet: CIRCLE_END_SHEET,
        }
    }
}

/// The assembled diagram with its computed topology.
#[derive(Debug)]
pub struct PatchworkSurface {
    pub rs: RealStructure,
    pub degree: usize,
    pub pieces: Vec<Piece>,
    pub complex: CellComplex,
    pub arrangements: Vec<LevelArrangement>,
    /// Intersection count per critical level.
    pub n_per_level: Vec<i64>,
    pub euler_formula: i64,
    pub euler_complex: i64,
    /// Vertex-link certificate of the glued complex.
    pub closed_surface: bool,
    pub components: Vec<ComponentInfo>,
    pub conventions: Conventions,
}

impl PatchworkSurface {
    pub fn component_count(&self) -> usize {
        self.components.len()
    }
}

/// Euler characteristic from the level data alone: the torus model
/// contributes nothing per level beyond the intersection corrections, the
/// sphere model adds 2 per level, and odd degree adds the two coamoeba end
/// contributions summing to one.
pub fn euler_formula(rs: RealStructure, degree: usize, n_per_level: &[i64]) -> i64 {
    let n: i64 = n_per_level.iter().sum();
    let odd = degree % 2 == 1;
    match rs {
        RealStructure::T2 => (if odd { 1 } else { 0 }) - n,
        RealStructure::S2 => degree as i64 - n,
        RealStructure::Empty => {
            if odd {
                1
            } else {
                0
            }
        }
    }
}

/// The signature-side constant of the degree bounds: d (4 - d^2) / 3.
pub fn sigma(degree: usize) -> i64 {
    let d = degree as i64;
    d * (4 - d * d) / 3
}

/// One clause of the degree-bound verification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundClause {
    pub name: String,
    pub description: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub sigma: i64,
    pub euler_char: i64,
    pub clauses: Vec<BoundClause>,
    pub pass: bool,
}

/// Check the Euler characteristic against the range and parity demanded by
/// the real structure and degree.
pub fn verify_bounds(rs: RealStructure, degree: usize, chi: i64) -> BoundReport {
    let s = sigma(degree);
    let odd = degree % 2 == 1;
    let mut clauses = Vec::new();
    match rs {
        RealStructure::T2 => {
            let hi = if odd { 1 } else { 0 };
            clauses.push(BoundClause {
                name: "range".into(),
                description: format!("{s} <= chi <= {hi}"),
                pass: s <= chi && chi <= hi,
            });
            clauses.push(BoundClause {
                name: "parity".into(),
                description: format!("chi = {} is {}", chi, if odd { "odd" } else { "even" }),
                pass: (chi.rem_euclid(2) == 1) == odd,
            });
        }
        RealStructure::S2 => {
            let d = degree as i64;
            clauses.push(BoundClause {
                name: "range".into(),
                description: format!("{} <= chi <= {d}", d + s),
                pass: d + s <= chi && chi <= d,
            });
            clauses.push(BoundClause {
                name: "parity".into(),
                description: format!("chi = {chi} congruent to degree mod 2"),
                pass: chi.rem_euclid(2) == d.rem_euclid(2),
            });
        }
        RealStructure::Empty => {
            let expect = if odd { 1 } else { 0 };
            clauses.push(BoundClause {
                name: "exact".into(),
                description: format!("chi = {expect}"),
                pass: chi == expect,
            });
        }
    }
    let pass = clauses.iter().all(|c| c.pass);
    BoundReport {
        sigma: s,
        euler_char: chi,
        clauses,
        pass,
    }
}

/// Vertex and edge key spaces of the glued complex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum VKey {
    /// An intersection vertex at a level, on a sheet.
    LevelVertex(usize, usize, Sheet),
    /// Base vertex of a vertex-free interface circle at a level.
    CircleBase(usize, usize, Sheet),
    /// Vertex of a free end circle: (curve, circle, end, which).
    Free(usize, usize, End, u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EKey {
    /// An arc of a level arrangement on a sheet.
    Arc(usize, usize, Sheet),
    /// Edge of a free end circle: (curve, circle, end, which).
    Free(usize, usize, End, u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum End {
    Zero,
    Infinity,
}

struct Builder {
    cx: CellComplex,
    vkeys: std::collections::BTreeMap<VKey, usize>,
    ekeys: std::collections::BTreeMap<EKey, usize>,
}

impl Builder {
    fn new() -> Builder {
        Builder {
            cx: CellComplex::new(),
            vkeys: Default::default(),
            ekeys: Default::default(),
        }
    }

    fn vertex(&mut self, key: VKey) -> usize {
        if let Some(&v) = self.vkeys.get(&key) {
            return v;
        }
        let v = self.cx.add_vertex();
        self.vkeys.insert(key, v);
        v
    }

    /// Edge of an arrangement arc on a sheet; endpoint 0 is the arc tail.
    fn arc_edge(&mut self, arr: &LevelArrangement, level: usize, arc: usize, sheet: Sheet) -> usize {
        let key = EKey::Arc(level, arc, sheet);
        if let Some(&e) = self.ekeys.get(&key) {
            return e;
        }
        let a = &arr.arcs[arc];
        let (va, vb) = match (a.from, a.to) {
            (Some(f), Some(t)) => (
                self.vertex(VKey::LevelVertex(level, f, sheet)),
                self.vertex(VKey::LevelVertex(level, t, sheet)),
            ),
            (None, None) => {
                let base = self.vertex(VKey::CircleBase(level, a.circle, sheet));
                (base, base)
            }
            _ => unreachable!("arcs are closed or have both endpoints"),
        };
        let e = self.cx.add_edge(va, vb);
        self.ekeys.insert(key, e);
        e
    }

    /// The two-edge cell circle of a free end; returns its forward cycle.
    fn free_circle(&mut self, curve: usize, circle: usize, end: End) -> Vec<Dart> {
        let k0 = EKey::Free(curve, circle, end, 0);
        if !self.ekeys.contains_key(&k0) {
            let v0 = self.vertex(VKey::Free(curve, circle, end, 0));
            let v1 = self.vertex(VKey::Free(curve, circle, end, 1));
            let e0 = self.cx.add_edge(v0, v1);
            let e1 = self.cx.add_edge(v1, v0);
            self.ekeys.insert(k0, e0);
            self.ekeys.insert(EKey::Free(curve, circle, end, 1), e1);
        }
        vec![
            Dart::fwd(self.ekeys[&k0]),
            Dart::fwd(self.ekeys[&EKey::Free(curve, circle, end, 1)]),
        ]
    }

    /// Interface cycle of a circle at a level on a sheet: the circle's arcs
    /// in cyclic order, forward darts.
    fn interface_cycle(
        &mut self,
        arr: &LevelArrangement,
        level: usize,
        circle: &ArrCircle,
        sheet: Sheet,
    ) -> Vec<Dart> {
        circle
            .arcs
            .iter()
            .map(|&aid| Dart::fwd(self.arc_edge(arr, level, aid, sheet)))
            .collect()
    }
}

/// Assemble the diagram surface from a validated spec.
pub fn assemble(spec: &DiagramSpec, seed: u64) -> Result<PatchworkSurface, Pgl2Error> {
    spec.validate()?;
    if spec.rs == RealStructure::Empty {
        return assemble_empty_structure(spec);
    }
    let k = spec.k();
    let odd = spec.degree % 2 == 1;
    let model = match spec.rs {
        RealStructure::T2 => Model::Torus,
        RealStructure::S2 => Model::Sphere,
        RealStructure::Empty => unreachable!(),
    };

    for sys in &spec.curves {
        check_fiber_triviality(sys)?;
    }

    // level arrangements
    let mut arrangements: Vec<LevelArrangement> = Vec::with_capacity(k);
    for l in 1..=k {
        let (prev, f_prev, next, f_next) = if spec.degree % 2 == 0 {
            let prev = if l == 1 {
                None
            } else {
                Some(&spec.curves[l - 2])
            };
            let f_prev = if l == 1 {
                &spec.constant
            } else {
                &spec.polys[l - 2]
            };
            (prev, f_prev, &spec.curves[l - 1], &spec.polys[l - 1])
        } else {
            (
                Some(&spec.curves[l - 1]),
                &spec.polys[l - 1],
                &spec.curves[l],
                &spec.polys[l],
            )
        };
        arrangements.push(build_arrangement(l, prev, next, f_prev, f_next, seed)?);
    }
    let n_per_level: Vec<i64> = arrangements
        .iter()
        .map(|a| a.vertex_count() as i64)
        .collect();

    let mut b = Builder::new();
    let mut pieces: Vec<Piece> = Vec::new();

    // membranes: one piece per (level, sheet) with regions as faces
    for (idx, arr) in arrangements.iter().enumerate() {
        let level = idx + 1;
        for sheet in [Sheet::Plus, Sheet::Minus] {
            let sign = match sheet {
                Sheet::Plus => Sign::Plus,
                Sheet::Minus => Sign::Minus,
            };
            let regions: Vec<usize> = (0..arr.regions.len())
                .filter(|&r| arr.regions[r].sign == sign)
                .collect();
            if regions.is_empty() {
                continue;
            }
            let piece_id = pieces.len();
            let mut chi_total = 0;
            for &rid in &regions {
                let region = &arr.regions[rid];
                chi_total += region.euler_char;
                let cycles: Vec<Vec<Dart>> = region
                    .cycles
                    .iter()
                    .map(|cycle| {
                        cycle
                            .iter()
                            .map(|d| {
                                let e = b.arc_edge(arr, level, d.arc, sheet);
                                Dart {
                                    edge: e,
                                    forward: d.forward,
                                }
                            })
                            .collect()
                    })
                    .collect();
                attach_piece(&mut b.cx, &cycles, region.euler_char, true, piece_id)?;
            }
            pieces.push(Piece {
                kind: PieceKind::Membrane { level, sheet },
                euler_char: chi_total,
            });
        }
    }

    // cylinders per curve circle and sheet, plus the infinity joins
    for (ci, sys) in spec.curves.iter().enumerate() {
        // level interval of the cylinders over curve ci
        let (level_lo, level_hi) = if spec.degree % 2 == 0 {
            (ci + 1, ci + 2)
        } else {
            (ci, ci + 1)
        };
        for cj in 0..sys.circles.len() {
            let hi_is_infinity = level_hi > k;
            for sheet in [Sheet::Plus, Sheet::Minus] {
                let bottom = if level_lo == 0 {
                    b.free_circle(ci, cj, End::Zero)
                } else {
                    let arr = &arrangements[level_lo - 1];
                    let circle = find_interface(arr, CurveSide::Next, cj)?;
                    b.interface_cycle(arr, level_lo, &circle, sheet)
                };
                let top = if hi_is_infinity {
                    b.free_circle(ci, cj, End::Infinity)
                } else {
                    let arr = &arrangements[level_hi - 1];
                    let circle = find_interface(arr, CurveSide::Prev, cj)?;
                    b.interface_cycle(arr, level_hi, &circle, sheet)
                };
                let piece_id = pieces.len();
                attach_piece(&mut b.cx, &[bottom, top], 0, true, piece_id)?;
                pieces.push(Piece {
                    kind: PieceKind::Cylinder {
                        curve: ci,
                        circle: cj,
                        sheet,
                        level_lo,
                        level_hi: if hi_is_infinity { None } else { Some(level_hi) },
                    },
                    euler_char: 0,
                });
            }
            if hi_is_infinity {
                // the two sheet cylinders share the infinity circle cells:
                // the join is the identification itself
                pieces.push(Piece {
                    kind: PieceKind::InfinityJoin {
                        curve: ci,
                        circle: cj,
                    },
                    euler_char: 0,
                });
            }
        }
    }

    // odd-degree level-zero ends
    if odd {
        let first = &spec.curves[0];
        match (model, first.circles.len()) {
            (Model::Torus, 1) | (Model::Sphere, 1) => {
                let cone_cycle = b.free_circle(0, 0, End::Zero);
                // the cone sheet's cylinder bottom is capped by a disk
                let piece_id = pieces.len();
                attach_piece(&mut b.cx, &[cone_cycle], 1, true, piece_id)?;
                pieces.push(Piece {
                    kind: PieceKind::ConePoint { sheet: CONE_SHEET },
                    euler_char: 1,
                });
                // the other sheet closes with the two-to-one circle end
                // (torus) or the punctured projective plane (sphere); both
                // are a crosscap piece on the end circle
                let moebius_cycle = b.free_circle(0, 0, End::Zero);
                let piece_id = pieces.len();
                attach_piece(&mut b.cx, &[moebius_cycle], 0, false, piece_id)?;
                pieces.push(Piece {
                    kind: match model {
                        Model::Torus => PieceKind::CoamoebaCircleEnd {
                            sheet: CIRCLE_END_SHEET,
                        },
                        Model::Sphere => PieceKind::CoamoebaRp2 {
                            sheet: CIRCLE_END_SHEET,
                            attached: true,
                        },
                    },
                    euler_char: 0,
                });
            }
            (Model::Sphere, 0) => {
                // no cylinders reach level zero: the coamoeba contributes a
                // standalone projective plane
                let piece_id = pieces.len();
                attach_piece(&mut b.cx, &[], 1, false, piece_id)?;
                pieces.push(Piece {
                    kind: PieceKind::CoamoebaRp2 {
                        sheet: CIRCLE_END_SHEET,
                        attached: false,
                    },
                    euler_char: 1,
                });
            }
            (Model::Torus, 0) => {
                return Err(Pgl2Error::SpecViolation {
                    reason: "a (1,1) curve always has a real circle on the torus".into(),
                });
            }
            (_, m) => {
                return Err(Pgl2Error::SpecViolation {
                    reason: format!("a (1,1) curve cannot have {m} real circles"),
                });
            }
        }
    }

    finish_surface(spec, pieces, b.cx, arrangements, n_per_level)
}

/// Free-circle sharing subtlety: the cone and the circle end both close the
/// same zero-end circle of the two sheet cylinders. The cylinders themselves
/// also use per-sheet circles. Which cells belong to which sheet is resolved
/// by the builder keys; see `free_circle` call sites.
fn find_interface(
    arr: &LevelArrangement,
    side: CurveSide,
    circle_idx: usize,
) -> Result<ArrCircle, Pgl2Error> {
    arr.circles
        .iter()
        .find(|c| c.side == side && c.circle_idx == circle_idx)
        .cloned()
        .ok_or_else(|| Pgl2Error::SpecViolation {
            reason: format!("interface circle {circle_idx} missing at level {}", arr.level),
        })
}

fn assemble_empty_structure(spec: &DiagramSpec) -> Result<PatchworkSurface, Pgl2Error> {
    let mut cx = CellComplex::new();
    let mut pieces = Vec::new();
    if spec.degree % 2 == 1 {
        attach_piece(&mut cx, &[], 1, false, 0)?;
        pieces.push(Piece {
            kind: PieceKind::CoamoebaRp2 {
                sheet: CIRCLE_END_SHEET,
                attached: false,
            },
            euler_char: 1,
        });
    }
    finish_surface(spec, pieces, cx, Vec::new(), Vec::new())
}

fn finish_surface(
    spec: &DiagramSpec,
    pieces: Vec<Piece>,
    cx: CellComplex,
    arrangements: Vec<LevelArrangement>,
    n_per_level: Vec<i64>,
) -> Result<PatchworkSurface, Pgl2Error> {
    cx.check_edges_closed()?;
    let closed_surface = cx.check_vertex_links().is_ok();
    let components = if cx.face_count() > 0 {
        cx.components()?
    } else {
        Vec::new()
    };
    let euler_complex = cx.euler_characteristic();
    let ef = euler_formula(spec.rs, spec.degree, &n_per_level);
    Ok(PatchworkSurface {
        rs: spec.rs,
        degree: spec.degree,
        pieces,
        complex: cx,
        arrangements,
        n_per_level,
        euler_formula: ef,
        euler_complex,
        closed_surface,
        components,
        conventions: Conventions::default(),
    })
}

/// Per-component classification of the assembled surface.
pub fn classify(s: &PatchworkSurface) -> &[ComponentInfo] {
    &s.components
}

/// Numerical check of the design assumption that the real fiber pair admits
/// a continuous representative along every traced circle: transport the
/// rank-1 representative with sign alignment and confirm the loop closes
/// projectively over the reals.
fn check_fiber_triviality(sys: &CurveSystem) -> Result<(), Pgl2Error> {
    use crate::matrix::{Matrix2, Quotient};
    let rep = |p: &QuadricPoint| -> Matrix2 {
        match p {
            QuadricPoint::Torus { x, y } => Matrix2::from_real(
                x[0] * y[0],
                x[0] * y[1],
                x[1] * y[0],
                x[1] * y[1],
            ),
            QuadricPoint::Sphere { n } => Matrix2::new(
                num_complex::Complex64::new(1.0 + n[2], 0.0),
                num_complex::Complex64::new(n[0], -n[1]),
                num_complex::Complex64::new(n[0], n[1]),
                num_complex::Complex64::new(1.0 - n[2], 0.0),
            ),
        }
    };
    for circle in &sys.circles {
        let mut sign = 1.0;
        let first = rep(&circle.points[0].point);
        let mut prev = first;
        for tp in circle.points.iter().skip(1).chain([&circle.points[0]]) {
            let mut cur = rep(&tp.point);
            let inner: f64 = prev
                .entries()
                .iter()
                .zip(cur.entries().iter())
                .map(|(a, b)| (a.conj() * b).re)
                .sum();
            let norms = prev.max_entry_norm() * cur.max_entry_norm();
            if inner.abs() < 0.05 * norms {
                return Err(Pgl2Error::ResolutionTooCoarse {
                    reason: "fiber representative transport loses continuity".into(),
                });
            }
            if inner < 0.0 {
                sign = -sign;
                cur = cur.scale(num_complex::Complex64::new(-1.0, 0.0));
            }
            prev = cur;
        }
        // the aligned transport must close up over a real scalar
        let back = prev.scale(num_complex::Complex64::new(sign, 0.0));
        if !back.proj_eq(&first, Quotient::Real) {
            return Err(Pgl2Error::SpecViolation {
                reason: "fiber transport does not close over a real scalar".into(),
            });
        }
    }
    Ok(())
}
