//! Premise report assembly and serialization.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::companion::{companion_metrics, CompanionMetrics, LabeledEstimate};
use super::premises::{
    bhattacharyya_with_uncertainty, conditional_frequencies, verdicts, ConditionalTable,
    Thresholds, Verdicts, DEFAULT_RESAMPLES,
};
use crate::error::{Error, Result};
use crate::experiment::{ExperimentKind, SwapConfig};
use crate::measurement::{CountTable, ProjectorMode};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// All count records of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: ExperimentKind,
    pub tables: Vec<CountTable>,
}

impl RunRecord {
    pub fn find(&self, config: SwapConfig, mode: ProjectorMode) -> Result<&CountTable> {
        self.tables
            .iter()
            .find(|t| t.mode == mode && t.provenance.swap_config == Some(config))
            .ok_or_else(|| {
                Error::MissingConfiguration(format!("{}/{}/{}", self.experiment, config, mode))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub resamples: usize,
    /// Bootstrap seed; the k-th metric uses `seed + k`.
    pub seed: u64,
    pub thresholds: Thresholds,
    /// Bootstrap replicates for the companion metrics; `None` skips them.
    pub companion_resamples: Option<usize>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            resamples: DEFAULT_RESAMPLES,
            seed: 0,
            thresholds: Thresholds::default(),
            companion_resamples: Some(DEFAULT_COMPANION_RESAMPLES),
        }
    }
}

pub const DEFAULT_COMPANION_RESAMPLES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PremiseOneMetric {
    pub value: f64,
    pub sigma: f64,
    /// 1 − B, reported alongside B.
    pub one_minus_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lineage {
    pub metric: String,
    /// CountTable keys (`experiment/config/mode`) the metric was computed from.
    pub inputs: Vec<String>,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PremiseReport {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub thresholds: Thresholds,
    pub b_premise1: PremiseOneMetric,
    pub b_premise2: Vec<LabeledEstimate>,
    pub premise3: ConditionalTable,
    pub companion: Option<CompanionMetrics>,
    pub verdicts: Verdicts,
    pub lineage: Vec<Lineage>,
    /// Inline copy of the configuration that produced the run, if supplied.
    pub run_config: Option<serde_json::Value>,
}

const PREMISE2_LABELS: [(&str, SwapConfig); 3] = [
    ("vs_system_swapped", SwapConfig::SYSTEM_SWAPPED),
    ("vs_environment_swapped", SwapConfig::ENVIRONMENT_SWAPPED),
    ("vs_twice_swapped", SwapConfig::TWICE_SWAPPED),
];

pub fn premise_report(record: &RunRecord, opts: &ReportOptions) -> Result<PremiseReport> {
    use ProjectorMode::*;
    let mut lineage = Vec::new();
    let count_lineage = |metric: &str, inputs: &[&CountTable]| Lineage {
        metric: metric.into(),
        inputs: inputs.iter().map(|t| t.key()).collect(),
        source: "count_table".into(),
    };

    let full_original = record.find(SwapConfig::ORIGINAL, FullJoint36)?;
    let full_twice = record.find(SwapConfig::TWICE_SWAPPED, FullJoint36)?;
    let p1 = bhattacharyya_with_uncertainty(full_original, full_twice, opts.resamples, opts.seed)?;
    lineage.push(count_lineage("b_premise1", &[full_original, full_twice]));

    let reduced_original = record.find(SwapConfig::ORIGINAL, ReducedSingle6)?;
    let mut p2 = Vec::new();
    let mut p2_labeled = Vec::new();
    for (k, (label, config)) in PREMISE2_LABELS.iter().enumerate() {
        let other = record.find(*config, ReducedSingle6)?;
        let e = bhattacharyya_with_uncertainty(
            reduced_original,
            other,
            opts.resamples,
            opts.seed.wrapping_add(1 + k as u64),
        )?;
        lineage.push(count_lineage(
            &format!("b_premise2/{label}"),
            &[reduced_original, other],
        ));
        p2.push(e);
        p2_labeled.push(LabeledEstimate {
            label: label.to_string(),
            value: e.value,
            sigma: e.sigma,
        });
    }

    let conditional = record.find(SwapConfig::ORIGINAL, ConditionalCircular4)?;
    let p3 = conditional_frequencies(conditional)?;
    lineage.push(count_lineage("premise3", &[conditional]));

    let verdicts = verdicts(&p1, &p2, &p3, &opts.thresholds)?;

    let companion = match opts.companion_resamples {
        None => None,
        Some(resamples) => {
            let swapped: Vec<(String, &CountTable)> = SwapConfig::ALL[1..]
                .iter()
                .map(|c| Ok((c.to_string(), record.find(*c, FullJoint36)?)))
                .collect::<Result<_>>()?;
            let reduced: Vec<(String, &CountTable)> = SwapConfig::ALL
                .iter()
                .map(|c| Ok((c.to_string(), record.find(*c, ReducedSingle6)?)))
                .collect::<Result<_>>()?;
            let metrics = companion_metrics(
                full_original,
                &swapped,
                &reduced,
                resamples,
                opts.seed.wrapping_add(100),
            )?;
            let mut inputs = vec![full_original];
            inputs.extend(swapped.iter().map(|s| s.1));
            inputs.extend(reduced.iter().map(|s| s.1));
            let mut entry = count_lineage("companion", &inputs);
            entry.source = "count_table → max_likelihood reconstruction".into();
            lineage.push(entry);
            Some(metrics)
        }
    };

    Ok(PremiseReport {
        schema_version: REPORT_SCHEMA_VERSION,
        experiment: record.experiment,
        thresholds: opts.thresholds,
        b_premise1: PremiseOneMetric {
            value: p1.value,
            sigma: p1.sigma,
            one_minus_value: 1.0 - p1.value,
        },
        b_premise2: p2_labeled,
        premise3: p3,
        companion,
        verdicts,
        lineage,
        run_config: None,
    })
}

impl PremiseReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<PremiseReport> {
        let report: PremiseReport = serde_json::from_str(text)?;
        if report.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "unsupported report schema version {}",
                report.schema_version
            )));
        }
        Ok(report)
    }

    /// Flat summary, one row per metric: `metric,label,value,sigma,pass`.
    /// Companion rows have an empty `pass` column.
    pub fn summary_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["experiment", "metric", "label", "value", "sigma", "pass"])?;
        let exp = self.experiment.to_string();
        let mut row = |metric: &str, label: &str, value: f64, sigma: f64, pass: Option<bool>| {
            w.write_record([
                exp.as_str(),
                metric,
                label,
                &value.to_string(),
                &sigma.to_string(),
                &pass.map(|p| p.to_string()).unwrap_or_default(),
            ])
        };
        let t = &self.thresholds;
        let p1 = &self.b_premise1;
        row(
            "b_premise1",
            "original_vs_twice_swapped",
            p1.value,
            p1.sigma,
            Some(self.verdicts.premise1),
        )?;
        row(
            "one_minus_b_premise1",
            "original_vs_twice_swapped",
            p1.one_minus_value,
            p1.sigma,
            None,
        )?;
        for e in &self.b_premise2 {
            row(
                "b_premise2",
                &e.label,
                e.value,
                e.sigma,
                Some(t.passes(e.value, e.sigma)),
            )?;
        }
        for c in &self.premise3.cells {
            let correlated = (c.sam == "R" && c.oam == "+1") || (c.sam == "L" && c.oam == "-1");
            let pass = correlated.then(|| t.passes(c.value, c.sigma));
            row(
                "premise3",
                &format!("P({}|{})", c.sam, c.oam),
                c.value,
                c.sigma,
                pass,
            )?;
        }
        if let Some(comp) = &self.companion {
            for e in &comp.fidelities {
                row("fidelity_to_original", &e.label, e.value, e.sigma, None)?;
            }
            for e in &comp.purities {
                row("reduced_purity", &e.label, e.value, e.sigma, None)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn save(&self, json_path: impl AsRef<Path>, csv_path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(json_path, self.to_json()?)?;
        std::fs::write(csv_path, self.summary_csv()?)?;
        Ok(())
    }
}
