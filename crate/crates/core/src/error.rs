use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid branch count m = {0} (need m >= 1)")]
    InvalidBranchCount(usize),

    #[error("expected {expected} interior critical points, found {found}")]
    RootCountMismatch { expected: usize, found: usize },

    #[error("perturbation field does not vanish at the endpoints (X(-1) = {left:e}, X(1) = {right:e})")]
    EndpointNonvanishing { left: f64, right: f64 },

    #[error("perturbed map is no longer full-branch Markov: {0}")]
    MarkovBroken(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("singular at endpoint x = {0}")]
    SingularAtEndpoint(f64),

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("spectral anomaly: {0}")]
    SpectralAnomaly(String),

    #[error("H0 membership defect too large: {what} = {value:e} (tolerance {tol:e})")]
    H0DefectTooLarge {
        what: &'static str,
        value: f64,
        tol: f64,
    },

    #[error("series terms do not decay at lambda = {lambda}: {detail}")]
    NoDecay { lambda: String, detail: String },

    #[error("lambda = {lambda} hits the pole at 1/{multiplier}")]
    PoleHit { lambda: String, multiplier: f64 },

    #[error("kappa routes disagree at n = {n}: decomposition {decomposition:e}, raw {raw:e}")]
    RouteDisagreement {
        n: usize,
        decomposition: f64,
        raw: f64,
    },

    #[error("ill-conditioned Pade system (condition estimate {0:e})")]
    IllConditioned(f64),

    #[error("unsupported fixture: {0}")]
    UnsupportedFixture(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
