use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh parameters: {0}")]
    InvalidMeshParams(String),

    /// The grading requires `a * epsilon < q`, otherwise the tangent point does not exist.
    #[error("ill-posed grading: a*epsilon = {product} must be smaller than q = {q}")]
    IllPosedGrading { product: f64, q: f64 },

    #[error("degenerate mesh: fine region has J = {j_index} < 3 intervals")]
    DegenerateMesh { j_index: usize },

    #[error("operation requires a Bakhvalov-type graded mesh")]
    NotBakhvalov,

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("singular or near-singular pivot {pivot:e} at row {row}")]
    SingularPivot { row: usize, pivot: f64 },

    #[error("matrix is not an L-matrix (row {row})")]
    NotLMatrix { row: usize },

    #[error("matrix is not inverse positive: A^-1 * 1 has component {value:e} at row {row}")]
    NotInversePositive { row: usize, value: f64 },

    #[error("barrier vector is not positive: component {index} = {value:e}")]
    NonPositiveBarrier { index: usize, value: f64 },

    #[error(
        "stability margin delta = beta/2 - 2/a = {delta} is not positive (requires a > 4/beta)"
    )]
    NonPositiveDelta { delta: f64 },

    #[error("row {row}: scaled {entry} entry {scaled:e} differs from closed form {closed_form:e}")]
    EntryMismatch {
        row: usize,
        entry: &'static str,
        scaled: f64,
        closed_form: f64,
    },

    #[error("meshes are not nested: coarse point {index} has no fine counterpart")]
    NonNestedMeshes { index: usize },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("report has no records")]
    EmptyReport,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
