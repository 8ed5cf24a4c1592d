//! Crate-wide error type.
//!
//! Every fallible operation returns [`Error`].  Variants are grouped by how
//! the command-line driver maps them to exit codes: validation problems
//! (bad inputs, mismatched grids, unmet preconditions) exit with 2, solver
//! failures with 3, and budget refusals with 4.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    // ---- validation ----
    #[error("grids do not match: {0} vs {1}")]
    GridMismatch(String, String),

    #[error("form degree {degree} is invalid on a {m}-torus")]
    BadDegree { degree: usize, m: usize },

    #[error("expected a form of degree {expected}, got degree {got}")]
    WrongDegree { expected: usize, got: usize },

    #[error("matrix dimension {0} is odd; symplectic matrices have even dimension")]
    OddDimension(usize),

    #[error("matrix is {rows}x{cols}; expected square")]
    NotSquare { rows: usize, cols: usize },

    #[error("not in sp(k): skew-Hermitian residual {herm:.3e}, J-relation residual {jrel:.3e} (tol {tol:.3e})")]
    NotSpAlgebra { herm: f64, jrel: f64, tol: f64 },

    #[error("not in Sp(k): unitarity residual {unitary:.3e}, J-relation residual {jrel:.3e} (tol {tol:.3e})")]
    NotSpGroup { unitary: f64, jrel: f64, tol: f64 },

    #[error("grid n = {n} cannot resolve harmonics up to {h}: need n > {need}")]
    UnderResolved { n: usize, h: usize, need: usize },

    #[error("form is not closed: ||d sigma|| = {residual:.3e} exceeds {tol:.3e}")]
    NotClosed { residual: f64, tol: f64 },

    #[error("form has a harmonic obstruction: {detail} (magnitude {magnitude:.3e})")]
    HarmonicObstruction { detail: String, magnitude: f64 },

    #[error("form is not exact: {detail}")]
    NotExact { detail: String },

    #[error("q = {q} is below the regular-tuple threshold q_min({m}) = {q_min}")]
    QTooSmall { q: usize, m: usize, q_min: usize },

    #[error("no regular tuple found after {attempts} attempts (min singular value seen {best_sv:.3e})")]
    RegularityNotAchieved { attempts: usize, best_sv: f64 },

    #[error("solver stalled at homotopy fraction {fraction:.4}: residual {residual:.3e} (target {target:.3e}); {detail}")]
    Stalled {
        fraction: f64,
        residual: f64,
        target: f64,
        detail: String,
    },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("polynomial input invalid: {0}")]
    PolyInput(String),

    // ---- budget ----
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    // ---- io ----
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code the CLI maps this error to: 2 validation, 3 solver, 4 budget.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stalled { .. } | Error::RegularityNotAchieved { .. } => 3,
            Error::BudgetExceeded(_) => 4,
            _ => 2,
        }
    }
}
