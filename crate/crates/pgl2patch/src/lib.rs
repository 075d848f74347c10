//! Real loci of primitive PGL2 phase tropical surface diagrams.
//!
//! The pipeline runs in stages:
//!
//! 1. [`levels`] pins critical levels to tropical exponents.
//! 2. [`bipoly`] evaluates bidegree-(b,b) polynomials on the real quadric
//!    (torus or sphere model) and checks structure invariance.
//! 3. [`tracer`] extracts real curve circles on a [`grid`] and refines the
//!    transverse intersections of consecutive curves.
//! 4. [`arrangement`] decomposes each critical level into signed regions.
//! 5. [`surface`] assembles membranes, cylinders and end pieces into a
//!    closed cell complex ([`complex`]), computes the Euler characteristic
//!    two independent ways, classifies components, and checks the degree
//!    bounds.
//! 6. [`pipeline`] orchestrates a full run from a [`config`] file into a
//!    [`report`].

pub mod arrangement;
pub mod bipoly;
pub mod complex;
pub mod config;
pub mod error;
pub mod grid;
pub mod levels;
pub mod matrix;
pub mod pipeline;
pub mod report;
pub mod samples;
pub mod surface;
pub mod tracer;

pub use bipoly::{BiPoly, QuadricPoint, RatioSign};
pub use error::Pgl2Error;
pub use grid::{Model, TraceGrid};
pub use levels::LevelData;
pub use matrix::{Matrix2, PsiPoint, RealStructure};
// pub use surface::{DiagramSpec, PatchworkSurface};
