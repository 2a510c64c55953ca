use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::{AuctionSetting, BidProfile};
use crate::rng::{child_rng, Domain};

/// Contexts range over `1..=CONTEXT_LEVELS`.
pub const CONTEXT_LEVELS: u32 = 10;

pub const DEFAULT_CONTEXT_STD: f64 = 0.05;

/// Distribution of truthful valuation profiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValuationDistribution {
    /// Every `v_ij` i.i.d. uniform on `[0, 1]`.
    Uniform01,
    /// `v_ij ~ N(((x_i + y_j) mod 10 + 1) / 11, std)` truncated to `[0, 1]`.
    /// Contexts left as `None` are drawn uniformly from `1..=10` per sample.
    TruncatedNormalContext {
        #[serde(default)]
        x_contexts: Option<Vec<u32>>,
        #[serde(default)]
        y_contexts: Option<Vec<u32>>,
        std: f64,
    },
}

impl ValuationDistribution {
    pub fn contextual() -> Self {
        ValuationDistribution::TruncatedNormalContext {
            x_contexts: None,
            y_contexts: None,
            std: DEFAULT_CONTEXT_STD,
        }
    }

    pub fn validate(&self, setting: AuctionSetting) -> Result<()> {
        let ValuationDistribution::TruncatedNormalContext { x_contexts, y_contexts, std } = self else {
            return Ok(());
        };
        if !(*std > 0.0 && std.is_finite()) {
            return Err(Error::config(format!("context std must be positive, got {std}")));
        }
        let check = |name: &str, ctx: &Option<Vec<u32>>, len: usize| -> Result<()> {
            if let Some(ctx) = ctx {
                if ctx.len() != len {
                    return Err(Error::config(format!("{name} needs {len} entries, got {}", ctx.len())));
                }
                if let Some(bad) = ctx.iter().find(|c| !(1..=CONTEXT_LEVELS).contains(c)) {
                    return Err(Error::config(format!("{name} entry {bad} outside 1..={CONTEXT_LEVELS}")));
                }
            }
            Ok(())
        };
        check("x_contexts", x_contexts, setting.bidders)?;
        check("y_contexts", y_contexts, setting.items)
    }
}

/// Location parameter of the contextual normal for cell `(x, y)`.
pub fn context_mean(x: u32, y: u32) -> f64 {
    ((x + y) % CONTEXT_LEVELS + 1) as f64 / 11.0
}

/// Draw the truthful profile for `sample_index`.
///
/// Each sample reads its own child stream, so profiles do not depend on the
/// order or number of other samples drawn. Truncated normals are sampled by
/// redrawing until the value lands in `[0, 1]`.
pub fn sample_valuations(
    dist: &ValuationDistribution,
    setting: AuctionSetting,
    sample_index: u64,
    seed: u64,
) -> Result<BidProfile> {
    setting.validate()?;
    dist.validate(setting)?;
    let mut rng = child_rng(seed, Domain::Valuations, &[sample_index]);
    let values = match dist {
        ValuationDistribution::Uniform01 => (0..setting.cells()).map(|_| rng.random::<f64>()).collect(),
        ValuationDistribution::TruncatedNormalContext { x_contexts, y_contexts, std } => {
            let mut ctx_rng = child_rng(seed, Domain::Contexts, &[sample_index]);
            let mut draw_contexts = |fixed: &Option<Vec<u32>>, len: usize| -> Vec<u32> {
                match fixed {
                    Some(c) => c.clone(),
                    None => (0..len).map(|_| ctx_rng.random_range(1..=CONTEXT_LEVELS)).collect(),
                }
            };
            let xs = draw_contexts(x_contexts, setting.bidders);
            let ys = draw_contexts(y_contexts, setting.items);
            let mut values = Vec::with_capacity(setting.cells());
            for &x in &xs {
                for &y in &ys {
                    let normal = Normal::new(context_mean(x, y), *std).expect("std validated");
                    let v = loop {
                        let z = normal.sample(&mut rng);
                        if (0.0..=1.0).contains(&z) {
                            break z;
                        }
                    };
                    values.push(v);
                }
            }
            values
        }
    };
    BidProfile::new(setting, values)
}
