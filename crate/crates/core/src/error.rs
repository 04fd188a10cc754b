use thiserror::Error;

/// Errors raised anywhere in the laboratory pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("degenerate immersion: area element {min_density:.3e} below threshold {threshold:.1e}")]
    ImmersionDegenerate { min_density: f64, threshold: f64 },

    #[error("orientation error: enclosed volume {0:.6e} is not positive")]
    Orientation(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("out of perturbative regime: {0}")]
    OutOfRegime(String),

    #[error("gauge optimization failed after {iterations} iterations (gradient norm {gradient_norm:.3e})")]
    OptimizationFailed {
        iterations: usize,
        gradient_norm: f64,
        best_energy: f64,
    },

    #[error("solver error: {0}")]
    Solver(String),

    #[error("conformalization failed at iteration {iteration}: defect history {history:?}")]
    ConformalizationFailed { iteration: usize, history: Vec<f64> },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("gauge error: {0}")]
    Gauge(String),

    #[error("pipeline stage `{stage}` failed: {source}")]
    Pipeline {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wrap an error with the pipeline stage it came from.
    pub fn at(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Pipeline {
            stage,
            source: Box::new(source),
        }
    }

    /// Innermost error, skipping pipeline context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Pipeline { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
