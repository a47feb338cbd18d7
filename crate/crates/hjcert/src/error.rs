use thiserror::Error;

#[derive(Debug, Error)]
pub enum HjError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("certification failure: {0}")]
    Certification(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("curve splice mismatch: endpoint gap {gap}")]
    Splice { gap: f64 },

    #[error("missing capability: {0}")]
    Capability(String),

    #[error("integration quality: Young-equality residual {residual} exceeds threshold {threshold}")]
    IntegrationQuality { residual: f64, threshold: f64 },

    #[error("solver did not converge: last sup-norm update {last_update} after {iterations} iterations")]
    NonConvergence { last_update: f64, iterations: usize },

    #[error("scheme error: {0}")]
    Scheme(String),

    #[error("construction error: {0}")]
    Construction(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HjError>;
