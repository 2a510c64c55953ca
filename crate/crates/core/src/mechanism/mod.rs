//! Auction data model and the mechanism interface.
//!
//! Bids and valuations live in `[0, 1]` per item. A mechanism maps a full bid
//! profile to an allocation matrix and a payment vector; bidder utilities are
//! additive: `u_i(v_i, b) = sum_j v_ij * g_ij(b) - p_i(b)`.

mod builtin;
mod neural;

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use builtin::{ConstantMechanism, FirstPrice, SecondPrice};
pub use neural::{generate_neural_spec, load_neural_mechanism, NeuralMechanism, NeuralMechanismSpec};

/// Step of the central finite-difference fallback.
pub const FD_STEP: f64 = 1e-5;

/// Slack allowed on per-item allocation sums.
pub const ALLOCATION_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AuctionSetting {
    #[serde(rename = "n")]
    pub bidders: usize,
    #[serde(rename = "m")]
    pub items: usize,
}

impl AuctionSetting {
    pub fn new(bidders: usize, items: usize) -> Result<Self> {
        let setting = AuctionSetting { bidders, items };
        setting.validate()?;
        Ok(setting)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bidders == 0 || self.items == 0 {
            return Err(Error::input(format!(
                "setting needs at least one bidder and one item, got {}x{}",
                self.bidders, self.items
            )));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.bidders * self.items
    }
}

impl std::fmt::Display for AuctionSetting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.bidders, self.items)
    }
}

/// Reported (or truthful) per-bidder per-item values, row-major `n x m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BidProfile {
    setting: AuctionSetting,
    values: Vec<f64>,
}

fn check_unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

impl BidProfile {
    pub fn new(setting: AuctionSetting, values: Vec<f64>) -> Result<Self> {
        setting.validate()?;
        if values.len() != setting.cells() {
            return Err(Error::input(format!(
                "bid profile for {setting} needs {} values, got {}",
                setting.cells(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|x| !check_unit(**x)) {
            return Err(Error::input(format!("bid {bad} outside [0, 1]")));
        }
        Ok(BidProfile { setting, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::input("ragged bid rows"));
        }
        BidProfile::new(AuctionSetting::new(n, m)?, rows.concat())
    }

    pub fn zeros(setting: AuctionSetting) -> Self {
        BidProfile { setting, values: vec![0.0; setting.cells()] }
    }

    pub fn setting(&self) -> AuctionSetting {
        self.setting
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, bidder: usize, item: usize) -> f64 {
        self.values[bidder * self.setting.items + item]
    }

    pub fn row(&self, bidder: usize) -> &[f64] {
        let m = self.setting.items;
        &self.values[bidder * m..(bidder + 1) * m]
    }

    /// Replace one bidder's row. Entries must lie in `[0, 1]`.
    pub fn set_row(&mut self, bidder: usize, row: &[f64]) -> Result<()> {
        self.check_bidder(bidder)?;
        if row.len() != self.setting.items {
            return Err(Error::input(format!(
                "row has {} entries, setting has {} items",
                row.len(),
                self.setting.items
            )));
        }
        if let Some(bad) = row.iter().find(|x| !check_unit(**x)) {
            return Err(Error::input(format!("bid {bad} outside [0, 1]")));
        }
        self.row_mut(bidder).copy_from_slice(row);
        Ok(())
    }

    pub fn with_row(&self, bidder: usize, row: &[f64]) -> Result<Self> {
        let mut out = self.clone();
        out.set_row(bidder, row)?;
        Ok(out)
    }

    /// Callers must keep entries in `[0, 1]`.
    pub(crate) fn row_mut(&mut self, bidder: usize) -> &mut [f64] {
        let m = self.setting.items;
        &mut self.values[bidder * m..(bidder + 1) * m]
    }

    pub(crate) fn set_unchecked(&mut self, bidder: usize, item: usize, value: f64) {
        let m = self.setting.items;
        self.values[bidder * m + item] = value;
    }

    pub(crate) fn check_bidder(&self, bidder: usize) -> Result<()> {
        if bidder >= self.setting.bidders {
            return Err(Error::input(format!(
                "bidder {bidder} out of range for {}",
                self.setting
            )));
        }
        Ok(())
    }
}

/// `g_ij`: probability (or fraction) that bidder `i` receives item `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllocationMatrix {
    setting: AuctionSetting,
    probs: Vec<f64>,
}

impl AllocationMatrix {
    pub fn new(setting: AuctionSetting, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != setting.cells() {
            return Err(Error::input("allocation has wrong dimensions"));
        }
        let out = AllocationMatrix { setting, probs };
        out.check()?;
        Ok(out)
    }

    pub(crate) fn from_raw(setting: AuctionSetting, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), setting.cells());
        AllocationMatrix { setting, probs }
    }

    pub fn get(&self, bidder: usize, item: usize) -> f64 {
        self.probs[bidder * self.setting.items + item]
    }

    pub fn row(&self, bidder: usize) -> &[f64] {
        let m = self.setting.items;
        &self.probs[bidder * m..(bidder + 1) * m]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Entry range and per-item feasibility.
    pub fn check(&self) -> Result<()> {
        if let Some(bad) = self.probs.iter().find(|x| !check_unit(**x)) {
            return Err(Error::input(format!("allocation entry {bad} outside [0, 1]")));
        }
        for j in 0..self.setting.items {
            let total: f64 = (0..self.setting.bidders).map(|i| self.get(i, j)).sum();
            if total > 1.0 + ALLOCATION_SLACK {
                return Err(Error::input(format!("item {j} over-allocated: {total}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaymentVector(Vec<f64>);

impl PaymentVector {
    pub fn new(pay: Vec<f64>) -> Result<Self> {
        if let Some(bad) = pay.iter().find(|x| x.is_nan() || **x < 0.0) {
            return Err(Error::input(format!("negative or NaN payment {bad}")));
        }
        Ok(PaymentVector(pay))
    }

    pub(crate) fn from_raw(pay: Vec<f64>) -> Self {
        PaymentVector(pay)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, bidder: usize) -> f64 {
        self.0[bidder]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub allocation: AllocationMatrix,
    pub payments: PaymentVector,
}

impl Outcome {
    /// Additive utility of `bidder` with valuations `valuation_row`.
    pub fn utility(&self, valuation_row: &[f64], bidder: usize) -> f64 {
        let value: f64 = valuation_row
            .iter()
            .zip(self.allocation.row(bidder))
            .map(|(v, g)| v * g)
            .sum();
        value - self.payments.get(bidder)
    }
}

/// Lock-free evaluation counter shared by concurrent workers.
#[derive(Debug, Default)]
pub struct EvalCounter(AtomicU64);

impl EvalCounter {
    pub fn bump(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.0.store(0, Ordering::Relaxed);
    }
}

/// Utility and gradient with respect to the bidder's own bid row.
#[derive(Clone, Debug, PartialEq)]
pub struct UtilityGradient {
    pub utility: f64,
    pub gradient: Vec<f64>,
    /// Mechanism evaluations spent producing this value.
    pub evals: u64,
}

/// The subject under audit.
///
/// Implementations must be pure: identical bids give bitwise-identical
/// outcomes. Use [`run_mechanism`] rather than [`Mechanism::evaluate`] so the
/// evaluation counter stays accurate.
pub trait Mechanism: Send + Sync {
    fn setting(&self) -> AuctionSetting;

    fn name(&self) -> String;

    /// Raw forward pass. Does not touch the counter.
    fn evaluate(&self, bids: &BidProfile) -> Outcome;

    fn counter(&self) -> &EvalCounter;

    fn is_pure(&self) -> bool {
        true
    }

    /// Allocation and payment decompose per item.
    fn is_separable(&self) -> bool {
        false
    }

    fn has_analytic_gradient(&self) -> bool {
        false
    }

    /// Closed-form utility and own-row gradient, one forward/backward pass.
    ///
    /// The utility must be bitwise equal to `evaluate(bids).utility(..)`.
    /// Does not touch the counter.
    fn analytic_utility_gradient(
        &self,
        _valuation_row: &[f64],
        _bids: &BidProfile,
        _bidder: usize,
    ) -> Option<(f64, Vec<f64>)> {
        None
    }

    fn evaluations(&self) -> u64 {
        self.counter().get()
    }
}

fn check_call(mech: &dyn Mechanism, bids: &BidProfile) -> Result<()> {
    if bids.setting() != mech.setting() {
        return Err(Error::input(format!(
            "bids are {} but mechanism `{}` expects {}",
            bids.setting(),
            mech.name(),
            mech.setting()
        )));
    }
    Ok(())
}

fn check_valuation(valuation_row: &[f64], bids: &BidProfile, bidder: usize) -> Result<()> {
    bids.check_bidder(bidder)?;
    if valuation_row.len() != bids.setting().items {
        return Err(Error::input(format!(
            "valuation row has {} entries, setting has {} items",
            valuation_row.len(),
            bids.setting().items
        )));
    }
    if let Some(bad) = valuation_row.iter().find(|x| !check_unit(**x)) {
        return Err(Error::input(format!("valuation {bad} outside [0, 1]")));
    }
    Ok(())
}

/// Run the mechanism once, counting the evaluation.
pub fn run_mechanism(mech: &dyn Mechanism, bids: &BidProfile) -> Result<Outcome> {
    check_call(mech, bids)?;
    mech.counter().bump();
    Ok(mech.evaluate(bids))
}

pub fn utility(
    mech: &dyn Mechanism,
    valuation_row: &[f64],
    bids: &BidProfile,
    bidder: usize,
) -> Result<f64> {
    check_valuation(valuation_row, bids, bidder)?;
    Ok(run_mechanism(mech, bids)?.utility(valuation_row, bidder))
}

/// Unchecked counted utility for hot loops whose inputs were validated once.
pub(crate) fn utility_fast(
    mech: &dyn Mechanism,
    valuation_row: &[f64],
    bids: &BidProfile,
    bidder: usize,
) -> f64 {
    mech.counter().bump();
    mech.evaluate(bids).utility(valuation_row, bidder)
}

/// Gradient of the bidder's utility with respect to its own bid row.
pub fn utility_gradient(
    mech: &dyn Mechanism,
    valuation_row: &[f64],
    bids: &BidProfile,
    bidder: usize,
) -> Result<Vec<f64>> {
    Ok(utility_and_gradient(mech, valuation_row, bids, bidder)?.gradient)
}

/// Utility and own-row gradient. Analytic when the mechanism offers it
/// (1 evaluation), otherwise central differences (2m + 1 evaluations).
pub fn utility_and_gradient(
    mech: &dyn Mechanism,
    valuation_row: &[f64],
    bids: &BidProfile,
    bidder: usize,
) -> Result<UtilityGradient> {
    check_call(mech, bids)?;
    check_valuation(valuation_row, bids, bidder)?;
    Ok(utility_and_gradient_fast(mech, valuation_row, bids, bidder))
}

pub(crate) fn utility_and_gradient_fast(
    mech: &dyn Mechanism,
    valuation_row: &[f64],
    bids: &BidProfile,
    bidder: usize,
) -> UtilityGradient {
    if mech.has_analytic_gradient() {
        if let Some((utility, gradient)) = mech.analytic_utility_gradient(valuation_row, bids, bidder)
        {
            mech.counter().bump();
            return UtilityGradient { utility, gradient, evals: 1 };
        }
    }
    let utility = utility_fast(mech, valuation_row, bids, bidder);
    let gradient = finite_difference_gradient(mech, valuation_row, bids, bidder);
    let evals = 1 + 2 * bids.setting().items as u64;
    UtilityGradient { utility, gradient, evals }
}

/// Central differences with probes clamped to `[0, 1]`; one-sided at the
/// boundary.
pub fn finite_difference_gradient(
    mech: &dyn Mechanism,
    valuation_row: &[f64],
    bids: &BidProfile,
    bidder: usize,
) -> Vec<f64> {
    let m = bids.setting().items;
    let mut probe = bids.clone();
    (0..m)
        .map(|j| {
            let x = bids.get(bidder, j);
            let hi = (x + FD_STEP).min(1.0);
            let lo = (x - FD_STEP).max(0.0);
            probe.set_unchecked(bidder, j, hi);
            let up = utility_fast(mech, valuation_row, &probe, bidder);
            probe.set_unchecked(bidder, j, lo);
            let down = utility_fast(mech, valuation_row, &probe, bidder);
            probe.set_unchecked(bidder, j, x);
            (up - down) / (hi - lo)
        })
        .collect()
}
