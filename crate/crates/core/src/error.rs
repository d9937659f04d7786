use thiserror::Error;

/// Errors raised while evaluating jets, surfaces and integrals.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("division by zero at a pole (|denominator| = {0:e})")]
    DivisionByZeroAtPole(f64),
    #[error("ambient map is singular at the evaluation point")]
    SingularAmbientPoint,
    #[error("planar reparametrization has a singular Jacobian")]
    DegenerateReparam,
    #[error("degenerate metric: det g = {0:e}")]
    DegenerateMetric(f64),
    #[error("point hits an inversion center")]
    HitsCenter,
    #[error("inversion center within {distance:e} of the surface")]
    CenterOnSurface { distance: f64 },
    #[error("no admissible inversion center found")]
    NoInversionCenter,
    #[error("parse error at offset {position}: expected {expected}")]
    ParseError { position: usize, expected: String },
    #[error("period obstruction: loop integral {re:e} + {im:e}i")]
    PeriodObstruction { re: f64, im: f64 },
    #[error("integration path passes through a pole near {0}")]
    PathThroughPole(String),
    #[error("tolerance not met (error {error:e}, value {value:e})")]
    ToleranceNotMet { value: f64, error: f64 },
    #[error("no decay detected after {rings} rings")]
    NoDecayDetected { rings: usize },
    #[error("surface is not conformal on the comparison region (residual {0:e})")]
    NotConformalOnRegion(f64),
    #[error("triple-plane fit residual {residual:e} exceeds budget {budget:e}")]
    TransitionTooCoarse { residual: f64, budget: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for GeomError {
    fn from(e: std::io::Error) -> Self {
        GeomError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, GeomError>;
