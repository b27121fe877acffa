use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The fixed-point map produced a non-finite value.
    #[error("fixed-point iteration diverged at iteration {iteration}")]
    Diverged { iteration: usize, last_finite: Vec<f64> },

    /// The V equation of the noiseless recovery limit has no positive finite root.
    #[error("no finite V for alpha_eff = {alpha_eff}, rho_eff = {rho_eff}")]
    NoFiniteRoot { alpha_eff: f64, rho_eff: f64 },

    /// Coordinate descent ran out of sweeps.
    #[error("lasso did not converge in {sweeps} sweeps (KKT residual {kkt_residual:e})")]
    LassoNotConverged {
        sweeps: usize,
        kkt_residual: f64,
        last_iterate: Vec<f64>,
    },

    /// A failure inside one Monte Carlo draw, tagged with where it happened.
    #[error("realization {realization}, draw {draw}: {source}")]
    Draw {
        realization: usize,
        draw: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True when the error originates in numerics rather than in user input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Diverged { .. } | Error::NoFiniteRoot { .. } | Error::LassoNotConverged { .. } => {
                true
            }
            Error::Draw { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
