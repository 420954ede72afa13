use crate::solver::SolveReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular point: B(Du) is undefined at Du = 0 when mu = 0 and p < 2")]
    Singular,

    #[error("contraction gate violated: alpha = 1 - (2-p) C_q = {alpha}")]
    GateViolated { alpha: f64 },

    #[error("linear solver stagnated after {iterations} iterations (relative residual {residual:.3e})")]
    LinearSolver {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("fixed-point iteration did not converge after {} iterations", .report.iterations)]
    NonConvergence { report: Box<SolveReport> },

    #[error("energy minimisation failed after {iterations} iterations: {reason}")]
    Minimizer {
        iterations: usize,
        reason: String,
        gradient_history: Vec<f64>,
    },

    #[error("continuation aborted at step {step}: {source}")]
    Continuation {
        step: usize,
        reports: Vec<SolveReport>,
        #[source]
        source: Box<Error>,
    },

    #[error("size mismatch: expected {expected} nodes, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}
