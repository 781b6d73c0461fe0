use thiserror::Error;

/// Errors raised by the simulator, the sweep harness and the statistics layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid value {value} for `{name}`: expected {expected}")]
    InvalidParam {
        name: &'static str,
        value: String,
        expected: &'static str,
    },

    #[error("cannot appoint an authority: no agent holds belief 0 (mode {mode})")]
    NoAuthorityCandidate { mode: String },

    #[error("graph too fragmented: largest weakly connected component covers {fraction:.3} of nodes (need at least 0.9)")]
    GraphTooFragmented { fraction: f64 },

    #[error("group `{group}` is empty")]
    EmptyGroup { group: String },

    #[error("need at least {needed} {what}, got {got}")]
    TooFew {
        what: &'static str,
        needed: usize,
        got: usize,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidParam {
            name,
            value: value.to_string(),
            expected: "a probability in [0, 1]",
        })
    }
}
