use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("operator Id-K not invertible at this discretization (reciprocal condition {rcond:.3e})")]
    NotInvertible { rcond: f64 },
    #[error("linear algebra failure: {0}")]
    Linalg(String),
    #[error("kernel pair constraint violated at node {node}: {detail}")]
    Constraint { node: usize, detail: String },
    #[error("dressing overflow at z = {z}: |Re(exponent)| = {exponent:.3e}")]
    Overflow { z: Complex64, exponent: f64 },
    #[error("point {0} lies on or inside the support")]
    InsideSupport(Complex64),
    #[error("point {0} lies on the boundary of the support")]
    OnBoundary(Complex64),
    #[error("Miwa shift singular at zeta = {zeta}: pivot {pivot:.3e}")]
    MiwaSingular { zeta: Complex64, pivot: f64 },
    #[error("series did not converge (spectral radius estimate {radius:.3e})")]
    SeriesDiverged { radius: f64 },
    #[error("solve failed at t = {t:?}: {source}")]
    PathSolve {
        t: Vec<Complex64>,
        #[source]
        source: Box<Error>,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
