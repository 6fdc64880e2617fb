use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of range: {param} = {value} ({bound})")]
    Range {
        param: &'static str,
        value: f64,
        bound: &'static str,
    },
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("point outside series convergence window: size {size:.3e} > limit {limit:.3e}")]
    ConvergenceWindow { size: f64, limit: f64 },
    #[error("divisor {divisor:.3e} at index {index:?} is numerically resonant")]
    ResonantDivisor { index: Vec<usize>, divisor: f64 },
    #[error("input coefficient at excluded index {0:?} is nonzero")]
    IndexViolation(Vec<usize>),
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
    #[error("square-root argument 1 + r q = {0:.3e} is not positive")]
    SqrtDomain(f64),
    #[error("step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepFailure { t: f64, h: f64 },
    #[error("signal underflows inside the regression window: {0}")]
    InsufficientDecay(String),
    #[error("psi became nonpositive at H = {0:.6e}")]
    PsiNonpositive(f64),
    #[error("bracket [{lo}, {hi}] does not straddle a classification change")]
    NoBracket { lo: f64, hi: f64 },
    #[error("insufficient overlap: {0}")]
    InsufficientOverlap(String),
    #[error("quadrature error: {0}")]
    QuadratureError(String),
    #[error("monotone bracketing violated at iteration {0}")]
    BracketViolation(usize),
    #[error("estimator spread {spread:.3e} exceeds tolerance {tol:.3e}")]
    WindowTooNoisy { spread: f64, tol: f64 },
    #[error("remainder is below the integrator noise floor")]
    ResidualBelowNoise,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Validation failures are user errors; everything else is numerical.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Range { .. } | Error::Domain(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
