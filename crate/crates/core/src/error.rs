//! Crate-wide error type.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building fields, training nets,
/// constructing roadmaps, or answering queries.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Caller passed something structurally invalid (dimensions, ranges, counts).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A requested allocation would exceed the configured memory guard.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// Vertex distribution could not place a single usable ball.
    #[error("roadmap construction failed: {0}")]
    ConstructionFailed(String),

    /// Training loss became non-finite.
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    TrainingDiverged { epoch: usize },

    /// Serialized model/roadmap carries an unsupported format version.
    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    /// A data file failed structural validation while loading.
    #[error("corrupt file: {0}")]
    CorruptFile(String),

    /// Could not draw a valid sample (query endpoints, free vertices) within the attempt cap.
    #[error("sampling failed: {0}")]
    SamplingFailed(String),

    /// Corridor optimizer hit its iteration cap with an infeasible iterate.
    #[error("corridor optimization stalled: residual {residual:.3e} after {iterations} iterations")]
    CorridorStalled { residual: f64, iterations: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
