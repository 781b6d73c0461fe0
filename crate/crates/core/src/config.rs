//! JSON run configuration.
//!
//! Every key is optional and falls back to [`SimParams::default`]. Unknown
//! keys and out-of-range values are rejected with the offending key named.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::error::Error;
use crate::model::{CensorshipMode, SimParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Malformed(String),
    #[error("invalid config key `{key}` = {value}: legal range is {range}")]
    OutOfRange {
        key: String,
        value: String,
        range: String,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n_agents: Option<usize>,
    k_neighbors: Option<usize>,
    rewire_prob: Option<f64>,
    radical_fraction: Option<f64>,
    homophily: Option<f64>,
    tolerance: Option<f64>,
    mode: Option<String>,
    n_steps: Option<usize>,
    seed: Option<u64>,
}

/// Resolves a JSON document into a validated parameter set.
pub fn parse_config_str(text: &str) -> Result<SimParams, ConfigError> {
    let raw: RawConfig =
        serde_json::from_str(text).map_err(|e| ConfigError::Malformed(e.to_string()))?;
    let d = SimParams::default();
    let mode = match raw.mode {
        Some(m) => m
            .parse::<CensorshipMode>()
            .map_err(|_| ConfigError::OutOfRange {
                key: "mode".into(),
                value: format!("\"{m}\""),
                range: "one of decentralized, centralized, mixed (case-insensitive)".into(),
            })?,
        None => d.mode,
    };
    let params = SimParams {
        n_agents: raw.n_agents.unwrap_or(d.n_agents),
        k_neighbors: raw.k_neighbors.unwrap_or(d.k_neighbors),
        rewire_prob: raw.rewire_prob.unwrap_or(d.rewire_prob),
        radical_fraction: raw.radical_fraction.unwrap_or(d.radical_fraction),
        homophily: raw.homophily.unwrap_or(d.homophily),
        tolerance: raw.tolerance.unwrap_or(d.tolerance),
        mode,
        n_steps: raw.n_steps.unwrap_or(d.n_steps),
        seed: raw.seed.unwrap_or(d.seed),
    };
    params.validate().map_err(|e| match e {
        Error::InvalidParam {
            name,
            value,
            expected,
        } => ConfigError::OutOfRange {
            key: name.into(),
            value,
            range: expected.into(),
        },
        other => ConfigError::Malformed(other.to_string()),
    })?;
    Ok(params)
}

pub fn parse_config(path: &Path) -> Result<SimParams, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let p = parse_config_str("{}").unwrap();
        assert_eq!(p, SimParams::default());
        assert_eq!((p.n_agents, p.k_neighbors, p.n_steps), (100, 6, 300));
        assert_eq!((p.rewire_prob, p.radical_fraction), (0.1, 0.5));
        assert_eq!(p.mode, CensorshipMode::Decentralized);
    }

    #[test]
    fn out_of_range_names_key_and_range() {
        let err = parse_config_str(r#"{"tolerance": 1.5}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("tolerance"), "{msg}");
        assert!(msg.contains("[0, 1]"), "{msg}");
    }

    #[test]
    fn mode_is_case_insensitive() {
        let p = parse_config_str(r#"{"mode": "Mixed"}"#).unwrap();
        assert_eq!(p.mode, CensorshipMode::Mixed);
        assert!(matches!(
            parse_config_str(r#"{"mode": "anarchy"}"#),
            Err(ConfigError::OutOfRange { key, .. }) if key == "mode"
        ));
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse_config_str(r#"{"homophilly": 0.3}"#).unwrap_err();
        assert!(err.to_string().contains("homophilly"));
    }

    #[test]
    fn malformed_document_rejected() {
        assert!(matches!(
            parse_config_str("{"),
            Err(ConfigError::Malformed(_))
        ));
        assert!(matches!(
            parse_config_str("[1, 2]"),
            Err(ConfigError::Malformed(_))
        ));
        assert!(matches!(
            parse_config_str(r#"{"n_agents": -3}"#),
            Err(ConfigError::Malformed(_))
        ));
    }

    #[test]
    fn k_validated_against_population() {
        let err = parse_config_str(r#"{"n_agents": 6, "k_neighbors": 6}"#).unwrap_err();
        assert!(err.to_string().contains("k_neighbors"));
    }
}
