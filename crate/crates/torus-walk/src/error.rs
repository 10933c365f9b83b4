use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    Param(String),
    #[error("invalid shape: {0}")]
    Shape(String),
    #[error("outside domain: {0}")]
    Domain(String),
    #[error("loop geometry: {0}")]
    Geometry(String),
    #[error("budget exceeded: {what} needs about {needed:.3e}, cap is {cap}")]
    Budget { what: String, needed: f64, cap: u64 },
    #[error("solver did not converge (residual {residual:e} after {iterations} iterations)")]
    Solver { residual: f64, iterations: usize },
    #[error("estimation: {0}")]
    Estimation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
