//! JSON run configuration with namespaced sections.
//!
//! ```json
//! { "tracker": { "proximity_threshold": 0.9 }, "refine": { "eps": 0.5 } }
//! ```
//!
//! Absent keys take their defaults; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::appearance::AppearanceConfig;
use crate::error::{Error, Result};
use crate::metrics::MetricOptions;
use crate::refine::RefineConfig;
use crate::simulate::ScenarioConfig;
use crate::tracker::TrackerConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub tracker: TrackerConfig,
    pub appearance: AppearanceConfig,
    pub refine: RefineConfig,
    pub metrics: MetricOptions,
    pub scenario: ScenarioConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.tracker.validate()?;
        self.appearance.validate()?;
        self.refine.validate()?;
        self.metrics.validate()?;
        self.scenario.validate()?;
        Ok(())
    }
}

pub fn parse_config(text: &str) -> Result<PipelineConfig> {
    let config: PipelineConfig =
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    config.validate().map_err(|e| {
        if e.is_usage() {
            Error::Config(e.to_string())
        } else {
            e
        }
    })?;
    Ok(config)
}

pub fn read_config(path: &Path) -> Result<PipelineConfig> {
    let text = super::read_to_string(path)?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_all_defaults() {
        assert_eq!(parse_config("{}").unwrap(), PipelineConfig::default());
    }

    #[test]
    fn override_one_key() {
        let c = parse_config(r#"{"tracker":{"proximity_threshold":0.8}}"#).unwrap();
        assert_eq!(c.tracker.proximity_threshold, 0.8);
        assert_eq!(
            c.tracker,
            TrackerConfig {
                proximity_threshold: 0.8,
                ..TrackerConfig::default()
            }
        );
        assert_eq!(c.refine, RefineConfig::default());
    }

    #[test]
    fn unknown_keys_are_errors() {
        let err = parse_config(r#"{"tracker":{"proximty_threshold":0.9}}"#).unwrap_err();
        assert!(
            matches!(err, Error::Config(ref m) if m.contains("proximty_threshold")),
            "{err}"
        );
        assert!(parse_config(r#"{"trackers":{}}"#).is_err());
    }

    #[test]
    fn invalid_values_are_config_errors() {
        assert!(matches!(
            parse_config(r#"{"tracker":{"conf_low":0.9,"conf_high":0.5}}"#),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            parse_config(r#"{"refine":{"eps":0}}"#),
            Err(Error::Config(_))
        ));
        assert!(matches!(parse_config("{"), Err(Error::Config(_))));
    }
}
