//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by the estimation and selection routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A mixture specification failed validation.
    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    /// An input sample failed validation (empty, non-finite, too small).
    #[error("invalid sample: {0}")]
    InvalidSample(String),

    /// A bandwidth or scale parameter that must be positive was not.
    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),

    /// A derivative order outside the supported range was requested.
    #[error("unsupported derivative order {order} (limit {limit})")]
    UnsupportedOrder { order: usize, limit: usize },

    /// A coverage parameter outside (0, 1).
    #[error("tau must lie strictly between 0 and 1, got {0}")]
    InvalidTau(f64),

    /// The requested level sits at a local extremum of the density, so the
    /// crossing structure is not stable under perturbation.
    #[error("degenerate level for tau={tau}: |f'| = {slope:e} at crossing x = {x}")]
    DegenerateLevel { tau: f64, x: f64, slope: f64 },

    /// Grid construction or coverage failure.
    #[error("evaluation grid unusable: {0}")]
    BadGrid(String),

    /// A curve holds too little mass for the requested coverage.
    #[error("curve mass {mass} is below the target coverage {target}; widen the grid")]
    InsufficientMass { mass: f64, target: f64 },

    /// Level-crossing detection failed.
    #[error("crossing detection failed: {0}")]
    CrossingDetection(String),

    /// Coefficient algebra rejected its inputs.
    #[error("invalid risk coefficients: {0}")]
    InvalidCoefficients(String),

    /// A one-dimensional minimization found no interior minimum.
    #[error("no interior minimum in [{lo}, {hi}]: {detail}")]
    NoInteriorMinimum { lo: f64, hi: f64, detail: String },

    /// A functional estimate has the wrong sign for the formula consuming it.
    #[error("psi_{r} estimate {value} has the wrong sign for stage {stage}")]
    WrongSignPsi {
        r: usize,
        value: f64,
        stage: &'static str,
    },

    /// A selector stage failed; carries the pipeline step number.
    #[error("selector step {step} failed: {source}")]
    SelectorStep {
        step: u8,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wrap an error with the selector pipeline step that raised it.
    pub fn at_step(self, step: u8) -> Error {
        Error::SelectorStep {
            step,
            source: Box::new(self),
        }
    }

    /// The selector step number attached to this error, if any.
    pub fn step(&self) -> Option<u8> {
        match self {
            Error::SelectorStep { step, .. } => Some(*step),
            _ => None,
        }
    }
}

/// Convenience result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
