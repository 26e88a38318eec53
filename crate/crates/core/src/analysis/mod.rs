//! Statistical comparison of count records and the premise report.
//!
//! Verdicts come from [`premises`], which sees nothing but [`CountTable`]s.
//! Reconstruction-based fidelities and purities live in [`companion`] and
//! are reported next to the verdicts without influencing them.
//!
//! [`CountTable`]: crate::measurement::CountTable

pub mod companion;
pub mod premises;
pub mod report;

pub use companion::{fidelity, purity, CompanionMetrics, LabeledEstimate};
pub use premises::{
    bhattacharyya, bhattacharyya_with_uncertainty, conditional_frequencies, verdicts,
    ConditionalTable, Estimate, Thresholds, Verdicts,
};
pub use report::{premise_report, PremiseReport, ReportOptions, RunRecord};

/// Identifiers that must not appear in the verdict code path.
pub const FIREWALL_FORBIDDEN: [&str; 9] = [
    "born",
    "simulate_counts",
    "tomography",
    "DensityMatrix",
    "Ket",
    "linear_inversion",
    "mle_",
    "companion",
    "fidelity",
];

/// Source of the verdict code path, for the firewall audit.
pub const PREMISES_SOURCE: &str = include_str!("premises.rs");

/// Forbidden identifiers found in the non-test part of `source`.
pub fn firewall_violations(source: &str) -> Vec<&'static str> {
    let body = source.split("#[cfg(test)]").next().unwrap_or(source);
    FIREWALL_FORBIDDEN
        .iter()
        .copied()
        .filter(|needle| body.contains(needle))
        .collect()
}
