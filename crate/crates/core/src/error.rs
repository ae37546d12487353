use thiserror::Error;

/// Failure modes of the library operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("tail-not-resolvable: {0}")]
    TailNotResolvable(String),
    #[error("not-a-probability: total mass {0}")]
    NotAProbability(f64),
    #[error("unsupported-L: {0}")]
    UnsupportedL(String),
    #[error("horizon-exceeds-cache: need {need}, cached {cached}")]
    HorizonExceedsCache { need: usize, cached: usize },
    #[error("not-applicable: {0}")]
    NotApplicable(String),
    #[error("no-convergence: {0}")]
    NoConvergence(String),
    #[error("at-criticality: derivative undefined at h = 0")]
    AtCriticality,
    #[error("negative free energy branch not supported")]
    NegativeFreeEnergy,
    #[error("precision-exhausted: no agreement up to {bits} bits (disagreement {err:e})")]
    PrecisionExhausted { bits: u32, err: f64 },
    #[error("invalid-renewal-function: U(0) = {0}")]
    InvalidRenewalFunction(f64),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("tail-dominates: tail fraction {0:.3}")]
    TailDominates(f64),
    #[error("endpoint-singularity-unresolved: {0}")]
    EndpointSingularityUnresolved(String),
    #[error("no-sign-change on the bracket (1, e^b)")]
    NoSignChange,
    #[error("below-localization-threshold")]
    BelowLocalizationThreshold,
    #[error("hypotheses-violated: {0}")]
    HypothesesViolated(String),
    #[error("grid-unstable: relative change {0:.3}")]
    GridUnstable(f64),
    #[error("degenerate-variance: all samples identical")]
    DegenerateVariance,
    #[error("not-localized: {0}")]
    NotLocalized(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// Numerical failures as opposed to bad input or broken invariants.
    pub fn is_convergence(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence(_)
                | Error::PrecisionExhausted { .. }
                | Error::TailNotResolvable(_)
                | Error::TailDominates(_)
                | Error::EndpointSingularityUnresolved(_)
                | Error::GridUnstable(_)
                | Error::NoSignChange
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
