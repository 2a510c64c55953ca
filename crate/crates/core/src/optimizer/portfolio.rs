use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::PgaConfig;
use crate::error::{Error, Result};
use crate::mechanism::BidProfile;
use crate::rng::{child_rng, Domain};

/// Shape of the guided-refinement initialization portfolio,
/// `K = 1 + m + 3k` candidates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PortfolioConfig {
    /// Size of each randomized group.
    pub k: usize,
    pub sigma_opt: f64,
    pub sigma_truth: f64,
    /// Ascent settings; `restarts` is ignored.
    pub refine: PgaConfig,
}

impl PortfolioConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |s: f64| s >= 0.0 && s.is_finite();
        if !ok(self.sigma_opt) || !ok(self.sigma_truth) {
            return Err(Error::config("portfolio sigmas must be finite and nonnegative"));
        }
        if !(self.refine.gamma > 0.0 && self.refine.gamma.is_finite()) || self.refine.steps == 0 {
            return Err(Error::config("refinement needs gamma > 0 and at least one step"));
        }
        Ok(())
    }

    /// Deterministic priors only: `k = 0`.
    pub fn deterministic() -> Self {
        PortfolioConfig {
            k: 0,
            sigma_opt: 0.0,
            sigma_truth: 0.0,
            refine: PgaConfig { gamma: 0.1, restarts: 1, steps: 200 },
        }
    }

    /// Wide randomized portfolio for mechanisms with rugged misreport
    /// landscapes: `k = 80`, `sigma = 0.6`.
    pub fn randomized() -> Self {
        PortfolioConfig { k: 80, sigma_opt: 0.6, sigma_truth: 0.6, ..Self::deterministic() }
    }

    pub fn size(&self, items: usize) -> usize {
        1 + items + 3 * self.k
    }
}

impl Default for PortfolioConfig {
    fn default() -> Self {
        Self::deterministic()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateLabel {
    Combinatorial,
    SingleItem(usize),
    PerturbedCombinatorial,
    PerturbedTruthful,
    GlobalRandom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub label: CandidateLabel,
    pub bid: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Portfolio {
    pub candidates: Vec<Candidate>,
}

impl Portfolio {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn count(&self, pred: impl Fn(&CandidateLabel) -> bool) -> usize {
        self.candidates.iter().filter(|c| pred(&c.label)).count()
    }
}

fn gaussian_around(center: &[f64], sigma: f64, seed: u64, domain: Domain, index: usize) -> Vec<f64> {
    let mut rng = child_rng(seed, domain, &[index as u64]);
    let noise = Normal::new(0.0, sigma).expect("sigma validated");
    center
        .iter()
        .map(|c| (c + noise.sample(&mut rng)).clamp(0.0, 1.0))
        .collect()
}

/// Assemble the five candidate groups for one bidder.
///
/// `item_argmaxes[j]` is the best grid value found for item `j` alone. Gaussian
/// draws are clamped into the box, not rejected.
pub fn build_portfolio(
    profile: &BidProfile,
    bidder: usize,
    item_argmaxes: &[f64],
    cfg: &PortfolioConfig,
    seed: u64,
) -> Result<Portfolio> {
    cfg.validate()?;
    profile.check_bidder(bidder)?;
    let m = profile.setting().items;
    if item_argmaxes.len() != m || item_argmaxes.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::input("item argmaxes must be a length-m vector in [0, 1]"));
    }
    let truthful = profile.row(bidder);
    let mut candidates = Vec::with_capacity(cfg.size(m));

    candidates.push(Candidate { label: CandidateLabel::Combinatorial, bid: item_argmaxes.to_vec() });
    for (j, &best) in item_argmaxes.iter().enumerate() {
        let mut bid = truthful.to_vec();
        bid[j] = best;
        candidates.push(Candidate { label: CandidateLabel::SingleItem(j), bid });
    }
    for l in 0..cfg.k {
        let bid = gaussian_around(item_argmaxes, cfg.sigma_opt, seed, Domain::PerturbedCombinatorial, l);
        candidates.push(Candidate { label: CandidateLabel::PerturbedCombinatorial, bid });
    }
    for l in 0..cfg.k {
        let bid = gaussian_around(truthful, cfg.sigma_truth, seed, Domain::PerturbedTruthful, l);
        candidates.push(Candidate { label: CandidateLabel::PerturbedTruthful, bid });
    }
    for l in 0..cfg.k {
        let mut rng = child_rng(seed, Domain::GlobalRandom, &[l as u64]);
        let bid = (0..m).map(|_| rng.random::<f64>()).collect();
        candidates.push(Candidate { label: CandidateLabel::GlobalRandom, bid });
    }
    Ok(Portfolio { candidates })
}
