use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::{utility, utility_and_gradient_fast, BidProfile, Mechanism};
use crate::oracle::{Incumbent, Method, RegretEstimate};
use crate::rng::{child_rng, Domain};

/// Step size, restart count and steps per restart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PgaConfig {
    pub gamma: f64,
    /// Random initializations (`L`).
    pub restarts: usize,
    /// Ascent steps per candidate (`R`).
    pub steps: usize,
}

impl PgaConfig {
    pub fn new(gamma: f64, restarts: usize, steps: usize) -> Result<Self> {
        let cfg = PgaConfig { gamma, restarts, steps };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::config(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.restarts == 0 || self.steps == 0 {
            return Err(Error::config("restarts and steps must be at least 1"));
        }
        Ok(())
    }

    pub fn regretnet() -> Self {
        PgaConfig { gamma: 0.1, restarts: 1000, steps: 2000 }
    }

    pub fn algnet() -> Self {
        PgaConfig { gamma: 0.001, restarts: 300, steps: 300 }
    }

    pub fn regretformer() -> Self {
        PgaConfig { gamma: 0.1, restarts: 1, steps: 1000 }
    }

    pub fn citransnet() -> Self {
        PgaConfig { gamma: 0.001, restarts: 100, steps: 200 }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "regretnet" => Some(Self::regretnet()),
            "algnet" => Some(Self::algnet()),
            "regretformer" => Some(Self::regretformer()),
            "citransnet" => Some(Self::citransnet()),
            _ => None,
        }
    }
}

/// Result of one ascent trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct PgaOutcome {
    pub best_bid: Vec<f64>,
    pub best_utility: f64,
    pub mech_evals: u64,
    pub gradient_steps: u64,
    /// A non-finite gradient stopped the trajectory early.
    pub aborted: bool,
}

/// Projected gradient ascent on one bidder's own row, others fixed.
///
/// Returns the best iterate over the whole trajectory, start included, so the
/// result never falls below the starting utility. Each step costs one utility
/// and gradient evaluation; the last iterate gets one extra utility evaluation.
pub fn pga_single(
    mech: &dyn Mechanism,
    profile: &BidProfile,
    bidder: usize,
    start: &[f64],
    gamma: f64,
    steps: usize,
) -> Result<PgaOutcome> {
    if profile.setting() != mech.setting() {
        return Err(Error::input("profile does not match mechanism setting"));
    }
    profile.check_bidder(bidder)?;
    let m = profile.setting().items;
    if start.len() != m || start.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::input("start must be a length-m vector in [0, 1]"));
    }
    Ok(ascend(mech, profile, bidder, start, gamma, steps))
}

pub(crate) fn ascend(
    mech: &dyn Mechanism,
    profile: &BidProfile,
    bidder: usize,
    start: &[f64],
    gamma: f64,
    steps: usize,
) -> PgaOutcome {
    let valuation = profile.row(bidder).to_vec();
    let mut bids = profile.clone();
    let mut x = start.to_vec();
    let mut best: Option<Incumbent> = None;
    let mut evals = 0;
    let mut taken = 0;
    let mut aborted = false;

    let offer = |best: &mut Option<Incumbent>, u: f64, x: &[f64]| match best {
        None => *best = Some(Incumbent::new(u, x.to_vec())),
        Some(inc) => inc.offer(u, x),
    };

    for _ in 0..steps {
        bids.row_mut(bidder).copy_from_slice(&x);
        let eval = utility_and_gradient_fast(mech, &valuation, &bids, bidder);
        evals += eval.evals;
        taken += 1;
        offer(&mut best, eval.utility, &x);
        if eval.gradient.iter().any(|g| !g.is_finite()) {
            aborted = true;
            break;
        }
        for (xj, gj) in x.iter_mut().zip(&eval.gradient) {
            *xj = (*xj + gamma * gj).clamp(0.0, 1.0);
        }
    }
    if !aborted {
        bids.row_mut(bidder).copy_from_slice(&x);
        mech.counter().bump();
        evals += 1;
        let u = mech.evaluate(&bids).utility(&valuation, bidder);
        offer(&mut best, u, &x);
    }
    let best = best.expect("at least one iterate");
    PgaOutcome {
        best_bid: best.point,
        best_utility: best.utility,
        mech_evals: evals,
        gradient_steps: taken,
        aborted,
    }
}

/// Reduce candidate outcomes with the deterministic max / lexicographic rule.
pub(crate) struct Reduced {
    pub best: Option<Incumbent>,
    pub mech_evals: u64,
    pub gradient_steps: u64,
    pub aborted: u64,
}

impl Reduced {
    fn empty() -> Self {
        Reduced { best: None, mech_evals: 0, gradient_steps: 0, aborted: 0 }
    }

    fn from_outcome(o: PgaOutcome) -> Self {
        Reduced {
            best: Some(Incumbent::new(o.best_utility, o.best_bid)),
            mech_evals: o.mech_evals,
            gradient_steps: o.gradient_steps,
            aborted: o.aborted as u64,
        }
    }

    fn merge(self, other: Reduced) -> Reduced {
        let best = match (self.best, other.best) {
            (Some(a), Some(b)) => Some(a.merge(b)),
            (a, b) => a.or(b),
        };
        Reduced {
            best,
            mech_evals: self.mech_evals + other.mech_evals,
            gradient_steps: self.gradient_steps + other.gradient_steps,
            aborted: self.aborted + other.aborted,
        }
    }
}

pub(crate) fn run_candidates(
    mech: &dyn Mechanism,
    profile: &BidProfile,
    bidder: usize,
    starts: &[Vec<f64>],
    gamma: f64,
    steps: usize,
) -> Reduced {
    starts
        .par_iter()
        .map(|s| Reduced::from_outcome(ascend(mech, profile, bidder, s, gamma, steps)))
        .reduce(Reduced::empty, Reduced::merge)
}

/// Convert the best candidate utility into a regret estimate.
pub(crate) fn finish(
    method: Method,
    profile: &BidProfile,
    bidder: usize,
    truthful_utility: f64,
    reduced: Reduced,
    extra_evals: u64,
    started: Instant,
) -> RegretEstimate {
    let truthful = profile.row(bidder).to_vec();
    let (value, misreport) = match reduced.best {
        Some(inc) if inc.utility > truthful_utility => (inc.utility - truthful_utility, inc.point),
        _ => (0.0, truthful),
    };
    RegretEstimate {
        method,
        bidder,
        value,
        best_misreport: Some(misreport),
        mech_evals: reduced.mech_evals + extra_evals,
        gradient_steps: reduced.gradient_steps,
        aborted_candidates: reduced.aborted,
        wall_seconds: started.elapsed().as_secs_f64(),
    }
}

/// Start `index` of the random-restart optimizer. Starts are drawn per index
/// so a run with more restarts extends, rather than reshuffles, a shorter one.
pub(crate) fn restart_start(seed: u64, index: usize, items: usize) -> Vec<f64> {
    let mut rng = child_rng(seed, Domain::RestartStart, &[index as u64]);
    (0..items).map(|_| rng.random::<f64>()).collect()
}

/// The standard evaluator: `L` uniform random starts, `R` ascent steps each,
/// best final utility wins.
pub fn random_restart_pga(
    mech: &dyn Mechanism,
    profile: &BidProfile,
    bidder: usize,
    cfg: &PgaConfig,
    seed: u64,
) -> Result<RegretEstimate> {
    cfg.validate()?;
    let started = Instant::now();
    let truthful_utility = utility(mech, profile.row(bidder), profile, bidder)?;
    let m = profile.setting().items;
    let starts: Vec<Vec<f64>> = (0..cfg.restarts).map(|l| restart_start(seed, l, m)).collect();
    let reduced = run_candidates(mech, profile, bidder, &starts, cfg.gamma, cfg.steps);
    Ok(finish(Method::Pga, profile, bidder, truthful_utility, reduced, 1, started))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::{AuctionSetting, ConstantMechanism, FirstPrice, SecondPrice};

    fn s(n: usize, m: usize) -> AuctionSetting {
        AuctionSetting::new(n, m).unwrap()
    }

    #[test]
    fn presets_match_published_configs() {
        assert_eq!(PgaConfig::regretnet(), PgaConfig { gamma: 0.1, restarts: 1000, steps: 2000 });
        assert_eq!(PgaConfig::algnet(), PgaConfig { gamma: 0.001, restarts: 300, steps: 300 });
        assert_eq!(PgaConfig::regretformer(), PgaConfig { gamma: 0.1, restarts: 1, steps: 1000 });
        assert_eq!(PgaConfig::citransnet(), PgaConfig { gamma: 0.001, restarts: 100, steps: 200 });
        assert!(PgaConfig::preset("nope").is_none());
    }

    #[test]
    fn config_validation() {
        assert!(PgaConfig::new(0.0, 1, 1).is_err());
        assert!(PgaConfig::new(0.1, 0, 1).is_err());
        assert!(PgaConfig::new(0.1, 1, 0).is_err());
        assert!(PgaConfig::new(f64::NAN, 1, 1).is_err());
    }

    #[test]
    fn constant_mechanism_stays_at_start() {
        let mech = ConstantMechanism::uniform(s(2, 2));
        let profile = BidProfile::new(s(2, 2), vec![0.4, 0.6, 0.2, 0.9]).unwrap();
        let out = pga_single(&mech, &profile, 0, &[0.3, 0.8], 0.1, 10).unwrap();
        assert_eq!(out.best_bid, vec![0.3, 0.8]);
        assert_eq!(out.best_utility, 0.5 * 0.4 + 0.5 * 0.6);
        // analytic: 1 per step + final utility
        assert_eq!(out.mech_evals, 11);
        assert_eq!(out.gradient_steps, 10);
    }

    #[test]
    fn finite_difference_step_cost() {
        let mech = FirstPrice::new(s(2, 3));
        let profile = BidProfile::new(s(2, 3), vec![0.4, 0.6, 0.2, 0.9, 0.1, 0.5]).unwrap();
        let out = pga_single(&mech, &profile, 0, &[0.4, 0.6, 0.2], 0.1, 4).unwrap();
        assert_eq!(out.mech_evals, 4 * (2 * 3 + 1) + 1);
        assert_eq!(mech.evaluations(), out.mech_evals);
    }

    #[test]
    fn start_validation() {
        let mech = SecondPrice::new(s(2, 2));
        let profile = BidProfile::zeros(s(2, 2));
        assert!(pga_single(&mech, &profile, 0, &[0.1], 0.1, 1).is_err());
        assert!(pga_single(&mech, &profile, 0, &[0.1, 1.5], 0.1, 1).is_err());
        assert!(pga_single(&mech, &profile, 3, &[0.1, 0.1], 0.1, 1).is_err());
    }

    #[test]
    fn second_price_truthful_start_gains_nothing() {
        let mech = SecondPrice::new(s(2, 2));
        let profile = BidProfile::new(s(2, 2), vec![0.7, 0.3, 0.5, 0.6]).unwrap();
        let truthful = utility(&mech, &[0.7, 0.3], &profile, 0).unwrap();
        let out = pga_single(&mech, &profile, 0, &[0.7, 0.3], 0.1, 50).unwrap();
        assert!(out.best_utility <= truthful);
        let est = random_restart_pga(&mech, &profile, 0, &PgaConfig::new(0.1, 8, 30).unwrap(), 3).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.best_misreport, Some(vec![0.7, 0.3]));
    }

    #[test]
    fn restart_starts_are_nested() {
        let a: Vec<_> = (0..5).map(|l| restart_start(11, l, 3)).collect();
        let b: Vec<_> = (0..9).map(|l| restart_start(11, l, 3)).collect();
        assert_eq!(a[..], b[..5]);
    }
}
