use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{run_audit_with, threads_from_env, AuditRunConfig};
use crate::error::{Error, Result};
use crate::mechanism::Mechanism;
use crate::oracle::Method;

/// One `(L, R)` cell of a restart/step sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "L")]
    pub restarts: usize,
    #[serde(rename = "R")]
    pub steps: usize,
    pub mean_regret: f64,
    pub mech_evals: u64,
    pub gradient_steps: u64,
    pub wall_seconds: f64,
}

pub fn run_sweep(base: &AuditRunConfig, l_values: &[usize], r_values: &[usize]) -> Result<Vec<SweepRow>> {
    base.validate()?;
    let mech = base.mechanism.load(base.setting)?;
    run_sweep_with(base, mech.as_ref(), l_values, r_values, threads_from_env())
}

/// Random-restart PGA over the grid of `(L, R)` pairs, `L` outer.
///
/// Every cell reuses the base seed, so cells see the same profiles and, for a
/// fixed `R`, a larger `L` extends the smaller run's starts. Only the `pga`
/// method is run.
pub fn run_sweep_with(
    base: &AuditRunConfig,
    mech: &dyn Mechanism,
    l_values: &[usize],
    r_values: &[usize],
    threads: usize,
) -> Result<Vec<SweepRow>> {
    if !base.methods.contains(&Method::Pga) {
        return Err(Error::config("sweep requires the `pga` method"));
    }
    if l_values.is_empty() || r_values.is_empty() {
        return Err(Error::config("sweep needs at least one L and one R value"));
    }
    let mut rows = Vec::with_capacity(l_values.len() * r_values.len());
    for &restarts in l_values {
        for &steps in r_values {
            let mut cfg = base.clone();
            cfg.methods = [Method::Pga].into();
            cfg.pga.restarts = restarts;
            cfg.pga.steps = steps;
            cfg.output = None;
            let report = run_audit_with(&cfg, mech, threads)?;
            let s = report.summary(Method::Pga).expect("pga requested");
            rows.push(SweepRow {
                restarts,
                steps,
                mean_regret: s.mean_regret,
                mech_evals: s.total_mech_evals,
                gradient_steps: s.total_gradient_steps,
                wall_seconds: report.wall_seconds,
            });
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        stage: "write sweep",
        path: path.to_owned(),
        source,
    })?;
    let mut writer = csv::Writer::from_writer(file);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(|source| Error::Io { stage: "write sweep", path: path.to_owned(), source })?;
    Ok(())
}
