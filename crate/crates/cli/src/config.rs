//! Run configuration and its textual flag forms.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use envlab_core::analysis::premises::MIN_RESAMPLES;
use envlab_core::{ExperimentKind, NoiseModel};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_OUTPUT_DIR: &str = "envlab-out";
pub const OUTPUT_DIR_ENV: &str = "ENVLAB_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Text,
}

impl FromStr for ReportFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "text" => Ok(ReportFormat::Text),
            other => Err(CliError::Config(format!("unknown report format `{other}`"))),
        }
    }
}

/// `none`, `shot`, or `shot+jitter=<rad>`.
pub fn parse_noise(s: &str) -> Result<NoiseModel> {
    let noise = match s {
        "none" => NoiseModel::none(),
        "shot" => NoiseModel::default(),
        other => {
            let rad = other
                .strip_prefix("shot+jitter=")
                .ok_or_else(|| CliError::Config(format!("unknown noise model `{other}`")))?;
            let unitary_jitter: f64 = rad
                .parse()
                .map_err(|_| CliError::Config(format!("invalid jitter `{rad}`")))?;
            NoiseModel {
                unitary_jitter,
                ..NoiseModel::default()
            }
        }
    };
    noise.validate()?;
    Ok(noise)
}

/// Inverse of [`parse_noise`] for models it can produce.
pub fn noise_flag(noise: &NoiseModel) -> String {
    match (noise.shot_noise, noise.unitary_jitter) {
        (false, _) => "none".into(),
        (true, 0.0) => "shot".into(),
        (true, j) => format!("shot+jitter={j}"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Serial,
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub shots_per_setting: u64,
    pub noise: NoiseModel,
    pub seed: u64,
    /// Bootstrap replicates per Bhattacharyya coefficient.
    pub resamples: usize,
    pub output_dir: PathBuf,
    pub report_formats: BTreeSet<ReportFormat>,
}

impl RunConfig {
    pub fn new(experiment: ExperimentKind, seed: u64, output_dir: impl Into<PathBuf>) -> RunConfig {
        RunConfig {
            experiment,
            shots_per_setting: 10_000,
            noise: NoiseModel::default(),
            seed,
            resamples: envlab_core::analysis::premises::DEFAULT_RESAMPLES,
            output_dir: output_dir.into(),
            report_formats: [ReportFormat::Json, ReportFormat::Csv].into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots_per_setting < 1 {
            return Err(CliError::Config(
                "shots per setting must be at least 1".into(),
            ));
        }
        if self.resamples < MIN_RESAMPLES {
            return Err(CliError::Config(format!(
                "at least {MIN_RESAMPLES} bootstrap resamples are required"
            )));
        }
        if self.report_formats.is_empty() {
            return Err(CliError::Config("no report format selected".into()));
        }
        self.noise
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
            ReportFormat::Text => "text",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_flags_round_trip() {
        for flag in ["none", "shot", "shot+jitter=0.01"] {
            assert_eq!(noise_flag(&parse_noise(flag).unwrap()), flag);
        }
        assert!(!parse_noise("none").unwrap().shot_noise);
        assert_eq!(
            parse_noise("shot+jitter=0.25").unwrap().unitary_jitter,
            0.25
        );
    }

    #[test]
    fn bad_noise_is_rejected() {
        assert!(parse_noise("poisson").is_err());
        assert!(parse_noise("shot+jitter=abc").is_err());
        assert!(parse_noise("shot+jitter=-1").is_err());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::new(ExperimentKind::Local, 1, "out");
        assert!(c.validate().is_ok());
        c.shots_per_setting = 0;
        assert!(c.validate().is_err());
        c.shots_per_setting = 1;
        c.resamples = 10;
        assert!(c.validate().is_err());
        c.resamples = 100;
        c.report_formats.clear();
        assert!(c.validate().is_err());
    }

    #[test]
    fn serializes_with_lowercase_formats() {
        let c = RunConfig::new(ExperimentKind::Nonlocal, 7, "out");
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["experiment"], "nonlocal");
        assert_eq!(v["report_formats"], serde_json::json!(["json", "csv"]));
        let back: RunConfig = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
    }
}
