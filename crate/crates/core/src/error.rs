use thiserror::Error;

pub type Result<T, E = SsgError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SsgError {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("algebraic loop did not converge at step {step} ({iterations} iterations)")]
    LoopDivergence { step: usize, iterations: usize },

    #[error("degenerate input/output pair: {0}")]
    DegeneratePair(String),

    #[error("point {input_id} has zero gain and cannot be inverted")]
    NonInvertiblePoint { input_id: usize },

    #[error("empty region")]
    EmptyRegion,

    #[error("unknown catalog entry `{0}`")]
    Catalog(String),

    #[error("system `{0}` is not SSG-negative imaginary")]
    NotNegativeImaginary(String),

    #[error("simulation failed for input {input_id}: {source}")]
    Input {
        input_id: usize,
        #[source]
        source: Box<SsgError>,
    },

    #[error("csv: {0}")]
    Csv(String),
}

impl SsgError {
    pub(crate) fn for_input(self, input_id: usize) -> Self {
        match self {
            e @ SsgError::Input { .. } => e,
            e => SsgError::Input {
                input_id,
                source: Box::new(e),
            },
        }
    }

    /// True when the root cause is a numerical failure (loop divergence).
    pub fn is_numerical(&self) -> bool {
        match self {
            SsgError::LoopDivergence { .. } => true,
            SsgError::Input { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
