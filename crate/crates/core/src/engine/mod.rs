//! Modified nodal analysis: operating point, DC sweeps and transient.

mod lu;
mod mna;
mod newton;
mod sweep;
mod trace;
mod transient;

pub use lu::{linear_solve, DenseMatrix};
pub use mna::{Layout, Method};
pub use newton::{kcl_residual, solve_op, Homotopy, KclCheck, NewtonConfig, OperatingPoint};
pub use sweep::{dc_sweep, dc_sweep_values, SweepGrid, SweepPoint};
pub use trace::TraceSet;
pub use transient::{default_dt, transient, MAX_STEPS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("singular matrix at pivot {pivot}")]
    Singular { pivot: usize },
    #[error("matrix has {rows} rows but rhs has {rhs}")]
    Dimension { rows: usize, rhs: usize },
    #[error("no convergence{}: worst residual {residual:e} A at node '{worst_node}'", time.map(|t| format!(" at t={t:e} s")).unwrap_or_default())]
    NonConvergence { worst_node: String, residual: f64, time: Option<f64> },
    #[error("at t={time:e} s: {source}")]
    AtTime { time: f64, source: Box<EngineError> },
    #[error("{steps} time steps exceed the limit of {limit}")]
    TooManySteps { steps: u64, limit: usize },
    #[error("empty grid")]
    EmptyGrid,
    #[error("unknown source '{0}'")]
    UnknownSource(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}
