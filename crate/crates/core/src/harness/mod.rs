//! Audit runs: sampling, orchestration, sweeps and report files.

mod report;
mod sampling;
mod sweep;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::{
    generate_neural_spec, AuctionSetting, FirstPrice, Mechanism, NeuralMechanism, NeuralMechanismSpec,
    SecondPrice,
};
use crate::optimizer::{guided_refinement, random_restart_pga, PgaConfig, PortfolioConfig};
use crate::oracle::{
    exhaustive_regret_with, item_regret, item_wise_regret, lower_bound_regret, GridSpec, Method,
    ExhaustiveOptions, RegretEstimate, DEFAULT_GRID_Q,
};
use crate::rng::{child_seed, Domain};

pub use report::{read_report, write_report, AuditRecord, AuditReport, MethodSummary, REPORT_FORMAT_VERSION};
pub use sampling::{context_mean, sample_valuations, ValuationDistribution, CONTEXT_LEVELS, DEFAULT_CONTEXT_STD};
pub use sweep::{run_sweep, run_sweep_with, write_sweep_csv, SweepRow};

/// Environment variable capping the worker count; `0` or unset means auto.
pub const THREADS_ENV: &str = "REGRET_AUDIT_THREADS";

pub const DEFAULT_SAMPLES: usize = 1000;

pub const DEFAULT_HIDDEN_WIDTH: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MechanismSource {
    SecondPrice,
    FirstPrice,
    /// Generated from a seed on the fly.
    Neural { hidden_width: usize, seed: u64 },
    /// A serialized [`NeuralMechanismSpec`].
    SpecFile { path: PathBuf },
}

impl MechanismSource {
    /// Parse `second-price`, `first-price`, `neural:SEED[:HIDDEN]`, or a path.
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "second-price" | "second_price" => return Ok(MechanismSource::SecondPrice),
            "first-price" | "first_price" => return Ok(MechanismSource::FirstPrice),
            _ => {}
        }
        if let Some(rest) = text.strip_prefix("neural:") {
            let mut parts = rest.split(':');
            let seed = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::config(format!("bad neural seed in `{text}`")))?;
            let hidden_width = match parts.next() {
                Some(h) => h.parse().map_err(|_| Error::config(format!("bad hidden width in `{text}`")))?,
                None => DEFAULT_HIDDEN_WIDTH,
            };
            return Ok(MechanismSource::Neural { hidden_width, seed });
        }
        Ok(MechanismSource::SpecFile { path: PathBuf::from(text) })
    }

    pub fn describe(&self) -> String {
        match self {
            MechanismSource::SecondPrice => "second-price".into(),
            MechanismSource::FirstPrice => "first-price".into(),
            MechanismSource::Neural { hidden_width, seed } => format!("neural:{seed}:{hidden_width}"),
            MechanismSource::SpecFile { path } => path.display().to_string(),
        }
    }

    pub fn load(&self, setting: AuctionSetting) -> Result<Box<dyn Mechanism>> {
        let fail = |reason: String| Error::MechanismLoad { source_name: self.describe(), reason };
        Ok(match self {
            MechanismSource::SecondPrice => Box::new(SecondPrice::new(setting)),
            MechanismSource::FirstPrice => Box::new(FirstPrice::new(setting)),
            MechanismSource::Neural { hidden_width, seed } => {
                let spec = generate_neural_spec(setting, *hidden_width, *seed).map_err(|e| fail(e.to_string()))?;
                Box::new(NeuralMechanism::new(spec).map_err(|e| fail(e.to_string()))?)
            }
            MechanismSource::SpecFile { path } => {
                let spec = NeuralMechanismSpec::load(path).map_err(|e| match e {
                    io @ Error::Io { .. } => io,
                    other => fail(other.to_string()),
                })?;
                if spec.setting != setting {
                    return Err(fail(format!("spec is {} but the run is {setting}", spec.setting)));
                }
                Box::new(NeuralMechanism::new(spec).map_err(|e| fail(e.to_string()))?)
            }
        })
    }
}

/// Everything needed to reproduce one audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRunConfig {
    pub setting: AuctionSetting,
    pub mechanism: MechanismSource,
    pub distribution: ValuationDistribution,
    pub grid: GridSpec,
    /// Grid for the per-item phase of guided refinement; `None` reuses `grid`.
    #[serde(default)]
    pub guided_grid_q: Option<usize>,
    pub methods: BTreeSet<Method>,
    pub pga: PgaConfig,
    pub portfolio: PortfolioConfig,
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub exhaustive: ExhaustiveOptions,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl AuditRunConfig {
    pub fn new(setting: AuctionSetting, mechanism: MechanismSource) -> Self {
        AuditRunConfig {
            setting,
            mechanism,
            distribution: ValuationDistribution::Uniform01,
            grid: GridSpec { q: DEFAULT_GRID_Q, style: Default::default() },
            guided_grid_q: None,
            methods: [Method::LowerBound, Method::ItemWise, Method::Guided].into(),
            pga: PgaConfig::regretnet(),
            portfolio: PortfolioConfig::default(),
            samples: DEFAULT_SAMPLES,
            seed: 0,
            exhaustive: ExhaustiveOptions::default(),
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.setting.validate().map_err(|e| Error::config(e.to_string()))?;
        if self.samples == 0 {
            return Err(Error::config("samples must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::config("at least one method is required"));
        }
        if self.grid.q == 0 || self.guided_grid_q == Some(0) {
            return Err(Error::config("grid q must be at least 1"));
        }
        self.distribution.validate(self.setting)?;
        if self.methods.contains(&Method::Pga) {
            self.pga.validate()?;
        }
        if self.methods.contains(&Method::Guided) {
            self.portfolio.validate()?;
        }
        if self.methods.contains(&Method::Exhaustive) {
            let rows = self.exhaustive.worst_case_rows(&self.grid, self.setting.items);
            if rows > self.exhaustive.budget as u128 {
                return Err(Error::BudgetExceeded { required: rows, budget: self.exhaustive.budget });
            }
        }
        Ok(())
    }

    fn guided_grid(&self) -> GridSpec {
        match self.guided_grid_q {
            Some(q) => GridSpec { q, style: self.grid.style },
            None => self.grid,
        }
    }
}

/// Worker count from [`THREADS_ENV`]; `0` means let rayon decide.
pub fn threads_from_env() -> usize {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(0)
}

/// Load the configured mechanism, run the audit with the worker count from
/// the environment, and write the report when `cfg.output` is set.
pub fn run_audit(cfg: &AuditRunConfig) -> Result<AuditReport> {
    cfg.validate()?;
    let mech = cfg.mechanism.load(cfg.setting)?;
    let report = run_audit_with(cfg, mech.as_ref(), threads_from_env())?;
    if let Some(path) = &cfg.output {
        write_report(&report, path)?;
    }
    Ok(report)
}

fn estimate(
    cfg: &AuditRunConfig,
    mech: &dyn Mechanism,
    profile: &crate::mechanism::BidProfile,
    sample: u64,
    bidder: usize,
    method: Method,
) -> Result<Vec<RegretEstimate>> {
    let seed = child_seed(cfg.seed, Domain::PerBidder, &[sample, bidder as u64]);
    Ok(match method {
        Method::Exhaustive => vec![exhaustive_regret_with(mech, profile, bidder, &cfg.grid, &cfg.exhaustive)?],
        Method::Item => (0..cfg.setting.items)
            .map(|j| item_regret(mech, profile, bidder, j, &cfg.grid))
            .collect::<Result<_>>()?,
        Method::LowerBound => vec![lower_bound_regret(mech, profile, bidder, &cfg.grid)?],
        Method::ItemWise => vec![item_wise_regret(mech, profile, bidder, &cfg.grid)?],
        Method::Pga => vec![random_restart_pga(mech, profile, bidder, &cfg.pga, seed)?],
        Method::Guided => vec![guided_refinement(
            mech,
            profile,
            bidder,
            &cfg.guided_grid(),
            &cfg.portfolio,
            seed,
        )?],
    })
}

/// Run an audit against an already constructed mechanism on `threads`
/// workers (`0` = auto). Output is identical for every thread count apart
/// from wall-clock fields.
pub fn run_audit_with(cfg: &AuditRunConfig, mech: &dyn Mechanism, threads: usize) -> Result<AuditReport> {
    cfg.validate()?;
    if mech.setting() != cfg.setting {
        return Err(Error::config(format!(
            "mechanism is {} but the run is {}",
            mech.setting(),
            cfg.setting
        )));
    }
    if !mech.is_pure() {
        return Err(Error::config("only pure mechanisms can be audited"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    let started = Instant::now();
    let per_sample: Vec<Vec<AuditRecord>> = pool.install(|| {
        (0..cfg.samples as u64)
            .into_par_iter()
            .map(|sample| {
                let profile = sample_valuations(&cfg.distribution, cfg.setting, sample, cfg.seed)?;
                let mut records = Vec::new();
                for bidder in 0..cfg.setting.bidders {
                    for &method in &cfg.methods {
                        for estimate in estimate(cfg, mech, &profile, sample, bidder, method)? {
                            records.push(AuditRecord { sample, estimate });
                        }
                    }
                }
                Ok(records)
            })
            .collect::<Result<_>>()
    })?;
    let records: Vec<AuditRecord> = per_sample.into_iter().flatten().collect();
    Ok(AuditReport::assemble(cfg.clone(), records, started.elapsed().as_secs_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_parsing() {
        assert_eq!(MechanismSource::parse("second-price").unwrap(), MechanismSource::SecondPrice);
        assert_eq!(MechanismSource::parse("first-price").unwrap(), MechanismSource::FirstPrice);
        assert_eq!(
            MechanismSource::parse("neural:42").unwrap(),
            MechanismSource::Neural { hidden_width: 16, seed: 42 }
        );
        assert_eq!(
            MechanismSource::parse("neural:7:4").unwrap(),
            MechanismSource::Neural { hidden_width: 4, seed: 7 }
        );
        assert!(MechanismSource::parse("neural:x").is_err());
        assert!(matches!(MechanismSource::parse("w.json").unwrap(), MechanismSource::SpecFile { .. }));
    }

    #[test]
    fn missing_spec_file_is_io() {
        let src = MechanismSource::SpecFile { path: "/nonexistent/spec.json".into() };
        assert!(matches!(src.load(AuctionSetting::new(2, 2).unwrap()), Err(Error::Io { .. })));
    }

    #[test]
    fn config_validation() {
        let setting = AuctionSetting::new(2, 5).unwrap();
        let mut cfg = AuditRunConfig::new(setting, MechanismSource::FirstPrice);
        cfg.validate().unwrap();
        cfg.methods.clear();
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        cfg.methods.insert(Method::Exhaustive);
        cfg.grid = GridSpec::new(100).unwrap();
        assert!(matches!(cfg.validate(), Err(Error::BudgetExceeded { .. })));
        cfg.grid = GridSpec::new(20).unwrap();
        cfg.validate().unwrap();
        cfg.samples = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn setting_mismatch_rejected() {
        let cfg = AuditRunConfig::new(AuctionSetting::new(2, 2).unwrap(), MechanismSource::SecondPrice);
        let mech = SecondPrice::new(AuctionSetting::new(3, 2).unwrap());
        assert!(run_audit_with(&cfg, &mech, 1).is_err());
    }
}
