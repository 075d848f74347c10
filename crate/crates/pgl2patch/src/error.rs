//! Error types for the whole pipeline.

use thiserror::Error;

/// Pipeline errors. Variant names follow the failure they certify; numeric
/// payloads carry the offending quantity for diagnostics.
#[derive(Debug, Error)]
pub enum Pgl2Error {
    #[error("matrix representative is identically zero")]
    ZeroMatrix,

    #[error("level coordinate must be positive, got {alpha}")]
    NonPositiveLevel { alpha: f64 },

    #[error("base point is not on the quadric: |det| = {det_norm}")]
    DegenerateBase { det_norm: f64 },

    #[error("singular input: |det| = {det_norm}")]
    SingularInput { det_norm: f64 },

    #[error("chart parametrization degenerates at the requested point")]
    ChartSingularity,

    #[error("bidegrees {prev} and {next} differ by an odd or negative amount")]
    BidegreeMismatch { prev: usize, next: usize },

    #[error("critical levels must be strictly increasing")]
    NotSorted,

    #[error("critical levels must be positive")]
    NonPositive,

    #[error("degenerate level data: {reason}")]
    DegenerateLevels { reason: String },

    #[error("grid resolution too coarse: {reason}")]
    ResolutionTooCoarse { reason: String },

    #[error("curve fails the smoothness certificate: {reason}")]
    SingularCurve { reason: String },

    #[error("near-tangent crossing: transversality margin {margin} below threshold")]
    TangencyDetected { margin: f64 },

    #[error("two refined intersection points collide at distance {distance}")]
    DuplicateCollision { distance: f64 },

    #[error("region sign samples disagree: {reason}")]
    SignInconsistent { reason: String },

    #[error("assembled complex is not a closed surface: {reason}")]
    NonClosedSurface { reason: String },

    #[error("diagram data violates its preconditions: {reason}")]
    SpecViolation { reason: String },

    #[error("gluing orientation behavior is unspecified: {reason}")]
    OrientationUndetermined { reason: String },

    #[error("configuration error: {reason}")]
    Config { reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Pgl2Error {
    /// Stable machine-readable error kind for the CLI error record.
    pub fn kind(&self) -> &'static str {
        match self {
            Pgl2Error::ZeroMatrix => "zero_matrix",
            Pgl2Error::NonPositiveLevel { .. } => "non_positive_level",
            Pgl2Error::DegenerateBase { .. } => "degenerate_base",
            Pgl2Error::SingularInput { .. } => "singular_input",
            Pgl2Error::ChartSingularity => "chart_singularity",
            Pgl2Error::BidegreeMismatch { .. } => "bidegree_mismatch",
            Pgl2Error::NotSorted => "not_sorted",
            Pgl2Error::NonPositive => "non_positive",
            Pgl2Error::DegenerateLevels { .. } => "degenerate_levels",
            Pgl2Error::ResolutionTooCoarse { .. } => "resolution_too_coarse",
            Pgl2Error::SingularCurve { .. } => "singular_curve",
            Pgl2Error::TangencyDetected { .. } => "tangency_detected",
            Pgl2Error::DuplicateCollision { .. } => "duplicate_collision",
            Pgl2Error::SignInconsistent { .. } => "sign_inconsistent",
            Pgl2Error::NonClosedSurface { .. } => "non_closed_surface",
            Pgl2Error::SpecViolation { .. } => "spec_violation",
            Pgl2Error::OrientationUndetermined { .. } => "orientation_undetermined",
            Pgl2Error::Config { .. } => "config",
            Pgl2Error::Io(_) => "io",
            Pgl2Error::Serde(_) => "serde",
        }
    }
}
