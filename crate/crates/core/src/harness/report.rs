use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AuditRunConfig;
use crate::error::{Error, Result};
use crate::oracle::{Method, RegretEstimate};

pub const REPORT_FORMAT_VERSION: u64 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub sample: u64,
    #[serde(flatten)]
    pub estimate: RegretEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub samples: usize,
    /// Mean over samples of the per-sample max over bidders (and items, for
    /// `item`).
    pub mean_regret: f64,
    pub total_mech_evals: u64,
    pub total_gradient_steps: u64,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub format_version: u64,
    pub config: AuditRunConfig,
    pub summaries: Vec<MethodSummary>,
    /// Ordered by sample, bidder, method.
    pub records: Vec<AuditRecord>,
    pub wall_seconds: f64,
}

impl AuditReport {
    pub(crate) fn assemble(config: AuditRunConfig, records: Vec<AuditRecord>, wall_seconds: f64) -> Self {
        let summaries = config
            .methods
            .iter()
            .map(|&method| summarize(&config, &records, method))
            .collect();
        AuditReport { format_version: REPORT_FORMAT_VERSION, config, summaries, records, wall_seconds }
    }

    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    pub fn records_for(&self, method: Method) -> impl Iterator<Item = &AuditRecord> {
        self.records.iter().filter(move |r| r.estimate.method == method)
    }

    /// Per-sample max over bidders for one method, in sample order.
    pub fn per_sample_max(&self, method: Method) -> Vec<f64> {
        per_sample_max(self.config.samples, &self.records, method)
    }

    /// Estimate for `(sample, bidder, method)`; for `item`, the first item.
    pub fn estimate(&self, sample: u64, bidder: usize, method: Method) -> Option<&RegretEstimate> {
        self.records
            .iter()
            .find(|r| r.sample == sample && r.estimate.bidder == bidder && r.estimate.method == method)
            .map(|r| &r.estimate)
    }

    pub fn total_mech_evals(&self) -> u64 {
        self.summaries.iter().map(|s| s.total_mech_evals).sum()
    }

    /// Zero every wall-clock field.
    pub fn strip_timings(&mut self) {
        self.wall_seconds = 0.0;
        self.summaries.iter_mut().for_each(|s| s.wall_seconds = 0.0);
        self.records.iter_mut().for_each(|r| r.estimate.wall_seconds = 0.0);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Recompute every summary from the records; errors on any disagreement.
    pub fn check_consistency(&self) -> Result<()> {
        for s in &self.summaries {
            let expect = summarize(&self.config, &self.records, s.method);
            if (expect.mean_regret - s.mean_regret).abs() > 1e-12
                || expect.total_mech_evals != s.total_mech_evals
                || expect.total_gradient_steps != s.total_gradient_steps
                || expect.samples != s.samples
            {
                return Err(Error::input(format!("summary for `{}` disagrees with records", s.method)));
            }
        }
        Ok(())
    }
}

fn per_sample_max(samples: usize, records: &[AuditRecord], method: Method) -> Vec<f64> {
    let mut best = vec![0.0f64; samples];
    for r in records.iter().filter(|r| r.estimate.method == method) {
        if let Some(slot) = best.get_mut(r.sample as usize) {
            *slot = slot.max(r.estimate.value);
        }
    }
    best
}

fn summarize(config: &AuditRunConfig, records: &[AuditRecord], method: Method) -> MethodSummary {
    let maxima = per_sample_max(config.samples, records, method);
    let mine = records.iter().filter(|r| r.estimate.method == method);
    let (evals, steps, secs) = mine.fold((0u64, 0u64, 0.0f64), |(e, g, w), r| {
        (e + r.estimate.mech_evals, g + r.estimate.gradient_steps, w + r.estimate.wall_seconds)
    });
    let samples = records
        .iter()
        .filter(|r| r.estimate.method == method)
        .map(|r| r.sample)
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    MethodSummary {
        method,
        samples,
        mean_regret: maxima.iter().sum::<f64>() / maxima.len().max(1) as f64,
        total_mech_evals: evals,
        total_gradient_steps: steps,
        wall_seconds: secs,
    }
}

pub fn write_report(report: &AuditReport, path: &Path) -> Result<()> {
    if report.config.samples == 0 || report.records.is_empty() {
        return Err(Error::input("refusing to write a report with zero samples"));
    }
    std::fs::write(path, report.to_json()).map_err(|source| Error::Io {
        stage: "write report",
        path: path.to_owned(),
        source,
    })
}

/// Read a report; the version is checked before the body is decoded.
pub fn read_report(path: &Path) -> Result<AuditReport> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        stage: "read report",
        path: path.to_owned(),
        source,
    })?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|source| Error::Parse { what: "report", source })?;
    let found = value.get("format_version").and_then(serde_json::Value::as_u64);
    if found != Some(REPORT_FORMAT_VERSION) {
        return Err(Error::UnsupportedVersion { found: found.unwrap_or(0), expected: REPORT_FORMAT_VERSION });
    }
    serde_json::from_value(value).map_err(|source| Error::Parse { what: "report", source })
}
