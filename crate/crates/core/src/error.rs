use std::fmt;

/// Evaluation regime of the Mittag-Leffler function, carried by failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Series,
    NegativeAxisIntegral,
    Asymptotic,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Regime::Series => "series",
            Regime::NegativeAxisIntegral => "negative-axis-integral",
            Regime::Asymptotic => "asymptotic",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A parameter or input violates a documented precondition.
    #[error("invalid {name}: {reason}")]
    Validation { name: &'static str, reason: String },

    #[error("elliptic coefficient a = {value} below floor nu = {nu} at x = {x}")]
    Ellipticity { x: f64, value: f64, nu: f64 },

    #[error("mittag-leffler evaluation failed in {regime} regime at z = {re}{im:+}i: {reason}")]
    Evaluation {
        regime: Regime,
        re: f64,
        im: f64,
        reason: String,
    },

    #[error("spectral tail bound {bound:e} exceeds budget {budget:e}; increase r_max (currently {r_max})")]
    Truncation { bound: f64, budget: f64, r_max: f64 },

    #[error("quadrature did not reach tolerance: estimated error {estimate:e} > {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("singular step matrix at step {step}, node {node}: pivot {pivot:e}")]
    Singular { step: usize, node: usize, pivot: f64 },

    #[error("picard iteration stalled after {iterations} iterations (last update {last_update:e}, contraction {contraction:.3}); shrink the horizon and restart on subintervals")]
    NonConvergence {
        iterations: usize,
        last_update: f64,
        contraction: f64,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            name,
            reason: reason.into(),
        }
    }

    /// True for precondition failures, false for numerical breakdowns.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation { .. } | Error::Ellipticity { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
