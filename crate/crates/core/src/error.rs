use thiserror::Error;

use crate::ln_device::MziDevice;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A scenario or parameter set failed validation. `key` is the dotted
    /// path of the offending entry.
    #[error("invalid configuration at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("pre-treatment did not saturate after {elapsed_s} s")]
    NotSaturated {
        elapsed_s: f64,
        /// Device state reached when the step budget ran out.
        partial: Box<MziDevice>,
    },

    #[error("target {target_m_db} dB is not reachable; saturated magnification at peak power is {reachable_m_db} dB")]
    Infeasible {
        target_m_db: f64,
        reachable_m_db: f64,
    },

    #[error("search range [{lo}, {hi}] dB does not bracket the zero-key threshold")]
    NonBracketing { lo: f64, hi: f64 },

    #[error("key rate is not monotone in M on the sampled grid near {m_db} dB")]
    NonMonotone { m_db: f64 },

    #[error("component `{component}` has no loss entry at {wavelength_nm} nm")]
    MissingWavelength {
        component: String,
        wavelength_nm: u32,
    },

    #[error("unknown coupling scheme `{0}`")]
    UnknownScheme(String),

    #[error("unknown component `{0}`")]
    UnknownComponent(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
