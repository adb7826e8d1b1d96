//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate cell in block {block}: non-positive Jacobian at cell ({i},{j},{k})")]
    DegenerateCell { block: usize, i: i64, j: i64, k: i64 },

    #[error("degenerate face: near-zero face normal")]
    DegenerateFace,

    #[error("too many ranks: rank {rank} would own no cells in any block")]
    TooManyRanks { rank: usize },

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("surface '{0}' is not watertight: ray parity is direction-inconsistent")]
    NonWatertightSurface(String),

    #[error("orphan query at ({x:.6}, {y:.6}, {z:.6}) in block {block} (kind {kind}); no valid donor")]
    OrphanQuery { block: usize, x: f64, y: f64, z: f64, kind: String },

    #[error("transport failure: {0}")]
    TransportFailure(String),

    #[error("nonlinear solver diverged after {iters} iterations (residual history: {history:?})")]
    NonlinearDivergence { iters: usize, history: Vec<f64> },

    #[error("linear solver stalled: {0}")]
    LinearSolverStall(String),

    #[error("FSI sub-iterations diverged after {0} iterations")]
    FsiDivergence(usize),

    #[error("immersed body '{0}' spans fewer than 4 cells across; grid too coarse")]
    ResolutionTooCoarse(String),

    #[error("unknown boundary condition tag '{0}'")]
    UnknownBcTag(String),

    #[error("field layout does not match matrix columns: {0}")]
    LayoutMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}
