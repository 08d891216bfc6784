use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("expected {expected} nodal values, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("non-finite value at node {0}")]
    NonFinite(usize),

    #[error("fields are defined on different charts")]
    ChartMismatch,

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("metric is not positive definite at node {node} (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { node: usize, min_eigenvalue: f64 },

    #[error("metric decays like r^-{measured:.4}, slower than the required r^-{required:.4}")]
    SlowDecay { required: f64, measured: f64 },

    #[error("metric is not regular at the poles: {0}")]
    PoleIrregular(String),

    #[error("positivity violated at node {node}: value {value:e}")]
    Positivity { node: usize, value: f64 },

    #[error("discrete isomorphism failure at row {row}: pivot {pivot:e} (operator singular or indefinite)")]
    DiscreteIsomorphism { row: usize, pivot: f64 },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    LinearNonConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("positivity violated: Sobolev quotient may be nonpositive (min phi = {min_phi:e} at node {node})")]
    SobolevPositivity { node: usize, min_phi: f64 },

    #[error("maximum principle violated by the harmonic barrier at node {node}: v = {value:e}")]
    MaximumPrinciple { node: usize, value: f64 },

    #[error("barrier normal derivative is not positive on the boundary (min {min:e})")]
    NonPositiveNormalDerivative { min: f64 },

    #[error("rho threshold undefined for beta = {beta} <= 1 (supersolutions exist for f <= 0 only)")]
    ThresholdUndefined { beta: f64 },

    #[error("no supersolution in the barrier family: f = {f:e} >= rho = {rho:e} at boundary node {node}")]
    NoSupersolution { node: usize, f: f64, rho: f64 },

    #[error("subsolution search failed: {message}")]
    SubsolutionSearch { message: String, trace: Vec<(f64, f64)> },

    #[error("monotone iteration lost monotonicity at iteration {iteration}, node {node} (decrease {decrease:e})")]
    MonotonicityViolation {
        iteration: usize,
        node: usize,
        decrease: f64,
    },

    #[error("iterate left the sub/supersolution sandwich at iteration {iteration}, node {node} (excess {excess:e})")]
    SandwichViolation {
        iteration: usize,
        node: usize,
        excess: f64,
    },

    #[error("monotone iteration did not converge after {iterations} iterations (last update {last_update:e})")]
    IterationNonConvergence { iterations: usize, last_update: f64 },

    #[error("oracle did not converge: {0}")]
    OracleNonConvergence(String),

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("quotient undefined: {0}")]
    QuotientUndefined(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error after peeling stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
