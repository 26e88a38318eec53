//! End-to-end simulated acquisition and report assembly.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use envlab_core::analysis::report::DEFAULT_COMPANION_RESAMPLES;
use envlab_core::analysis::{premise_report, PremiseReport, ReportOptions, RunRecord, Thresholds};
use envlab_core::experiment::{prepare, SwapOperators};
use envlab_core::measurement::{simulate_counts, tomography_projectors};
use envlab_core::optics::phase_gate;
use envlab_core::state::density_of;
use envlab_core::tomography::{
    linear_inversion, mle_reconstruct, save_density_json, ReconstructionOptions,
};
use envlab_core::{CountTable, DensityMatrix, ExperimentKind, ProjectorMode, SwapConfig};
use rayon::prelude::*;

use crate::config::{Execution, ReportFormat, RunConfig};
use crate::error::Result;

/// One simulated acquisition: a swap configuration measured in one mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Job {
    pub config: SwapConfig,
    pub mode: ProjectorMode,
    /// Position in [`jobs`]; fixes the table seed.
    pub slot: u64,
}

/// Full and reduced records for every swap configuration, then the
/// conditional record of the original state.
pub fn jobs() -> Vec<Job> {
    let mut out = Vec::new();
    for config in SwapConfig::ALL {
        for mode in [ProjectorMode::FullJoint36, ProjectorMode::ReducedSingle6] {
            out.push(Job {
                config,
                mode,
                slot: out.len() as u64,
            });
        }
    }
    out.push(Job {
        config: SwapConfig::ORIGINAL,
        mode: ProjectorMode::ConditionalCircular4,
        slot: out.len() as u64,
    });
    out
}

/// Seeds of different runs never collide for fewer than 16 tables.
pub fn table_seed(seed: u64, slot: u64) -> u64 {
    seed.wrapping_mul(16).wrapping_add(slot)
}

fn map_ordered<T, U, F>(items: &[T], execution: Execution, f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync + Send,
{
    match execution {
        Execution::Serial => items.iter().map(f).collect(),
        Execution::Parallel => items.par_iter().map(f).collect(),
    }
}

/// The environment swap replaced by a π phase gate; the twice-swapped
/// state then differs from the original.
pub fn corrupted_operators(kind: ExperimentKind) -> Result<SwapOperators> {
    let mut ops = SwapOperators::for_kind(kind)?;
    let env = kind.space().select(&[kind.environment_id()])?;
    ops.environment = phase_gate(&env, std::f64::consts::PI)?;
    Ok(ops)
}

pub fn acquire(config: &RunConfig, execution: Execution) -> Result<RunRecord> {
    acquire_with(
        config,
        &SwapOperators::for_kind(config.experiment)?,
        execution,
    )
}

pub fn acquire_with(
    config: &RunConfig,
    operators: &SwapOperators,
    execution: Execution,
) -> Result<RunRecord> {
    let kind = config.experiment;
    let psi = prepare(kind)?;
    let tables = map_ordered(&jobs(), execution, |job| {
        let mut rho = density_of(&operators.apply(&psi, job.config)?)?;
        if job.mode == ProjectorMode::ReducedSingle6 {
            rho = rho.partial_trace(&[kind.system_id()])?;
        }
        let set = tomography_projectors(job.mode, rho.space())?;
        let counts = simulate_counts(
            &rho,
            &set,
            config.shots_per_setting,
            &config.noise,
            table_seed(config.seed, job.slot),
        )?;
        Ok(counts.with_provenance(kind, job.config))
    })?;
    Ok(RunRecord {
        experiment: kind,
        tables,
    })
}

pub fn report_options(config: &RunConfig) -> ReportOptions {
    ReportOptions {
        resamples: config.resamples,
        seed: config.seed,
        thresholds: Thresholds::default(),
        companion_resamples: Some(DEFAULT_COMPANION_RESAMPLES),
    }
}

pub fn build_report(
    config: &RunConfig,
    record: &RunRecord,
    opts: &ReportOptions,
) -> Result<PremiseReport> {
    let mut report = premise_report(record, opts)?;
    report.run_config = Some(serde_json::to_value(config)?);
    Ok(report)
}

/// Maximum-likelihood estimate, falling back to the best iterate when the
/// iteration budget runs out.
pub fn mle_or_best(table: &CountTable) -> Result<DensityMatrix> {
    let set = table.projector_set()?;
    match mle_reconstruct(table, &set, &ReconstructionOptions::default()) {
        Ok(out) => Ok(out.state),
        Err(envlab_core::Error::ConvergenceFailure { best, .. }) => Ok(*best),
        Err(e) => Err(e.into()),
    }
}

pub fn file_stem(table: &CountTable) -> String {
    table.key().replace('/', "_")
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: PremiseReport,
    pub record: RunRecord,
    /// Every file written, in write order.
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.report.verdicts.all_pass()
    }
}

pub fn run_experiment(config: &RunConfig, execution: Execution) -> Result<RunOutcome> {
    config.validate()?;
    let record = acquire(config, execution)?;
    let report = build_report(config, &record, &report_options(config))?;
    let files = write_artifacts(config, &record, &report, execution)?;
    Ok(RunOutcome {
        report,
        record,
        files,
    })
}

fn write_artifacts(
    config: &RunConfig,
    record: &RunRecord,
    report: &PremiseReport,
    execution: Execution,
) -> Result<Vec<PathBuf>> {
    let root = &config.output_dir;
    let counts_dir = root.join("counts");
    let density_dir = root.join("densities");
    fs::create_dir_all(&counts_dir)?;
    fs::create_dir_all(&density_dir)?;
    let mut files = Vec::new();

    for table in &record.tables {
        let path = counts_dir.join(format!("{}.csv", file_stem(table)));
        table.save_csv(&path)?;
        files.push(path);
    }

    let tomographic: Vec<&CountTable> = record
        .tables
        .iter()
        .filter(|t| t.mode != ProjectorMode::ConditionalCircular4)
        .collect();
    let estimates = map_ordered(&tomographic, execution, |t| {
        let set = t.projector_set()?;
        Ok((linear_inversion(*t, &set)?, mle_or_best(t)?))
    })?;
    for (table, (li, mle)) in tomographic.iter().zip(&estimates) {
        let stem = file_stem(table);
        for (suffix, rho) in [("linear_inversion", li), ("max_likelihood", mle)] {
            let path = density_dir.join(format!("{stem}.{suffix}.json"));
            save_density_json(rho, &path)?;
            files.push(path);
        }
    }

    for format in &config.report_formats {
        let (name, text) = match format {
            ReportFormat::Json => ("report.json", report.to_json()?),
            ReportFormat::Csv => ("report.csv", report.summary_csv()?),
            ReportFormat::Text => ("report.txt", render_text(report)),
        };
        let path = root.join(name);
        fs::write(&path, text)?;
        files.push(path);
    }
    Ok(files)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Plain-text summary of a report.
pub fn render_text(report: &PremiseReport) -> String {
    let mut s = String::new();
    let v = &report.verdicts;
    let p1 = &report.b_premise1;
    let _ = writeln!(s, "experiment: {}", report.experiment);
    let _ = writeln!(
        s,
        "premise I    {}  B = {:.6} ± {:.6}  (1 − B = {:.3e})",
        verdict(v.premise1),
        p1.value,
        p1.sigma,
        p1.one_minus_value
    );
    let _ = writeln!(s, "premise II   {}", verdict(v.premise2));
    for e in &report.b_premise2 {
        let _ = writeln!(s, "  {:<24} B = {:.6} ± {:.6}", e.label, e.value, e.sigma);
    }
    let _ = writeln!(s, "premise III  {}", verdict(v.premise3));
    for c in &report.premise3.cells {
        let _ = writeln!(
            s,
            "  P({}|{}) = {:.6} ± {:.6}",
            c.sam, c.oam, c.value, c.sigma
        );
    }
    if let Some(comp) = &report.companion {
        let _ = writeln!(s, "companion ({}, not used for verdicts)", comp.estimator);
        for e in &comp.fidelities {
            let _ = writeln!(
                s,
                "  fidelity {:<20} {:.6} ± {:.6}",
                e.label, e.value, e.sigma
            );
        }
        for e in &comp.purities {
            let _ = writeln!(
                s,
                "  purity   {:<20} {:.6} ± {:.6}",
                e.label, e.value, e.sigma
            );
        }
    }
    let _ = writeln!(s, "overall: {}", verdict(v.all_pass()));
    s
}
