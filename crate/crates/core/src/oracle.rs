//! Grid regret estimators.
//!
//! All estimators hold the other bidders at their truthful reports and scan a
//! discretized misreport space for one bidder:
//!
//! - [`exhaustive_regret`] scans the full product grid, `(q+1)^m` rows plus
//!   the truthful coordinates;
//! - [`item_regret`] scans one coordinate with the rest truthful;
//! - [`lower_bound_regret`] is the max of the per-item regrets;
//! - [`item_wise_regret`] is their sum.
//!
//! The truthful value is always part of every scan, so every estimate is
//! nonnegative. A misreport is only reported when it strictly beats the
//! truthful utility; otherwise the truthful report is returned. Ties among
//! strictly better misreports go to the lexicographically smallest one.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::{utility, utility_fast, BidProfile, Mechanism};

/// Default guardrail on exhaustive evaluations per bidder.
pub const DEFAULT_EXHAUSTIVE_BUDGET: u64 = 100_000_000;

/// Default subdivision count (precision 1e-3).
pub const DEFAULT_GRID_Q: usize = 1000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridStyle {
    /// `{t/q : t = 0..=q}`, `q + 1` points.
    #[default]
    Inclusive,
    /// `{t/q : t = 1..=q}`, `q` points; zero excluded.
    OpenLeft,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub q: usize,
    #[serde(default)]
    pub style: GridStyle,
}

impl GridSpec {
    pub fn new(q: usize) -> Result<Self> {
        Self::with_style(q, GridStyle::Inclusive)
    }

    pub fn with_style(q: usize, style: GridStyle) -> Result<Self> {
        if q == 0 {
            return Err(Error::input("grid needs q >= 1"));
        }
        Ok(GridSpec { q, style })
    }

    fn first_index(&self) -> usize {
        match self.style {
            GridStyle::Inclusive => 0,
            GridStyle::OpenLeft => 1,
        }
    }

    pub fn len(&self) -> usize {
        self.q + 1 - self.first_index()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The `k`-th point, `k < len()`.
    pub fn point(&self, k: usize) -> f64 {
        (k + self.first_index()) as f64 / self.q as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    /// Whether `x` is bitwise one of the grid points.
    pub fn contains(&self, x: f64) -> bool {
        let t = (x * self.q as f64).round();
        if !(t >= self.first_index() as f64 && t <= self.q as f64) {
            return false;
        }
        (t as usize) as f64 / self.q as f64 == x
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exhaustive,
    Item,
    LowerBound,
    ItemWise,
    Pga,
    Guided,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Exhaustive => "exhaustive",
            Method::Item => "item",
            Method::LowerBound => "lower_bound",
            Method::ItemWise => "item_wise",
            Method::Pga => "pga",
            Method::Guided => "guided",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "exhaustive" => Method::Exhaustive,
            "item" => Method::Item,
            "lower_bound" | "lower-bound" => Method::LowerBound,
            "item_wise" | "item-wise" => Method::ItemWise,
            "pga" => Method::Pga,
            "guided" => Method::Guided,
            other => return Err(Error::config(format!("unknown method `{other}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretEstimate {
    pub method: Method,
    pub bidder: usize,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_misreport: Option<Vec<f64>>,
    pub mech_evals: u64,
    /// Gradient evaluations (zero for grid methods).
    #[serde(default)]
    pub gradient_steps: u64,
    /// Optimizer candidates stopped early on a non-finite gradient.
    #[serde(default)]
    pub aborted_candidates: u64,
    pub wall_seconds: f64,
}

/// Strict "better than" under max-utility, lexicographically smallest tie-break.
pub(crate) fn improves(utility: f64, point: &[f64], best_utility: f64, best_point: &[f64]) -> bool {
    match utility.partial_cmp(&best_utility) {
        Some(Ordering::Greater) => true,
        Some(Ordering::Equal) => lex_less(point, best_point),
        _ => best_utility.is_nan() && !utility.is_nan(),
    }
}

pub(crate) fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => {}
        }
    }
    false
}

/// Best `(utility, misreport)` under the crate's deterministic tie rule.
#[derive(Clone, Debug)]
pub(crate) struct Incumbent {
    pub utility: f64,
    pub point: Vec<f64>,
}

impl Incumbent {
    pub fn new(utility: f64, point: Vec<f64>) -> Self {
        Incumbent { utility, point }
    }

    pub fn offer(&mut self, utility: f64, point: &[f64]) {
        if improves(utility, point, self.utility, &self.point) {
            self.utility = utility;
            self.point.clear();
            self.point.extend_from_slice(point);
        }
    }

    pub fn merge(mut self, other: Incumbent) -> Incumbent {
        self.offer(other.utility, &other.point);
        self
    }
}

fn validate(mech: &dyn Mechanism, profile: &BidProfile, bidder: usize) -> Result<()> {
    if profile.setting() != mech.setting() {
        return Err(Error::input(format!(
            "profile is {} but mechanism expects {}",
            profile.setting(),
            mech.setting()
        )));
    }
    profile.check_bidder(bidder)
}

/// How the truthful report enters the exhaustive scan.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthfulScan {
    /// Each coordinate scans `grid ∪ {v_ij}`. Every single-item deviation
    /// scanned by [`item_regret`] is then part of the product, so the
    /// per-item estimators are bounded by the exhaustive value exactly.
    #[default]
    Coordinates,
    /// The plain grid product plus the whole truthful row.
    Row,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExhaustiveOptions {
    /// Maximum scanned rows per bidder.
    pub budget: u64,
    #[serde(default)]
    pub truthful: TruthfulScan,
}

impl Default for ExhaustiveOptions {
    fn default() -> Self {
        ExhaustiveOptions { budget: DEFAULT_EXHAUSTIVE_BUDGET, truthful: TruthfulScan::default() }
    }
}

impl ExhaustiveOptions {
    /// Largest scan any profile can need under these options.
    pub fn worst_case_rows(&self, grid: &GridSpec, items: usize) -> u128 {
        let base = grid.len() as u128;
        match self.truthful {
            TruthfulScan::Coordinates => (base + 1).checked_pow(items as u32).unwrap_or(u128::MAX),
            TruthfulScan::Row => base.checked_pow(items as u32).map_or(u128::MAX, |r| r + 1),
        }
    }
}

/// Per-coordinate candidate values, each sorted ascending.
fn coordinate_candidates(grid: &GridSpec, truthful: &[f64], mode: TruthfulScan) -> Vec<Vec<f64>> {
    let points = grid.points();
    truthful
        .iter()
        .map(|&v| {
            let mut c = points.clone();
            if mode == TruthfulScan::Coordinates && !grid.contains(v) {
                let at = c.partition_point(|&p| p < v);
                c.insert(at, v);
            }
            c
        })
        .collect()
}

/// Rows scanned by [`exhaustive_regret_with`] for this truthful row, not
/// counting the separate truthful-utility evaluation.
pub fn exhaustive_scan_rows(grid: &GridSpec, truthful: &[f64], mode: TruthfulScan) -> u128 {
    let product = coordinate_candidates(grid, truthful, mode)
        .iter()
        .try_fold(1u128, |acc, c| acc.checked_mul(c.len() as u128))
        .unwrap_or(u128::MAX);
    let appended = mode == TruthfulScan::Row && !truthful.iter().all(|&x| grid.contains(x));
    product.saturating_add(appended as u128)
}

/// Exhaustive joint regret, default options.
pub fn exhaustive_regret(
    mech: &dyn Mechanism,
    profile: &BidProfile,
    bidder: usize,
    grid: &GridSpec,
) -> Result<RegretEstimate> {
    exhaustive_regret_with(mech, profile, bidder, grid, &ExhaustiveOptions::default())
}

/// Exhaustive joint regret over the product of per-coordinate candidates.
///
/// Costs one truthful evaluation plus [`exhaustive_scan_rows`]. The scan is
/// split across rayon workers and reduced with the order-independent tie rule,
/// so results do not depend on the thread count.
pub fn exhaustive_regret_with(
    mech: &dyn Mechanism,
    profile: &BidProfile,
    bidder: usize,
    grid: &GridSpec,
    options: &ExhaustiveOptions,
) -> Result<RegretEstimate> {
    validate(mech, profile, bidder)?;
    let m = profile.setting().items;
    let truthful = profile.row(bidder).to_vec();
    let required = exhaustive_scan_rows(grid, &truthful, options.truthful);
    if required > options.budget as u128 {
        return Err(Error::BudgetExceeded { required, budget: options.budget });
    }
    let started = Instant::now();
    let truthful_utility = utility(mech, &truthful, profile, bidder)?;
    let candidates = coordinate_candidates(grid, &truthful, options.truthful);
    let product: usize = candidates.iter().map(Vec::len).product();

    // mixed radix, first coordinate most significant: index order is
    // lexicographic order of the decoded rows
    let decode = |mut index: usize, out: &mut [f64]| {
        for (slot, values) in out.iter_mut().zip(&candidates).rev() {
            *slot = values[index % values.len()];
            index /= values.len();
        }
    };

    let scanned = (0..product)
        .into_par_iter()
        .with_min_len(256)
        .fold(
            || (profile.clone(), vec![0.0f64; m], None::<Incumbent>),
            |(mut bids, mut row, best): (BidProfile, Vec<f64>, Option<Incumbent>), index| {
                decode(index, &mut row);
                bids.row_mut(bidder).copy_from_slice(&row);
                let u = utility_fast(mech, &truthful, &bids, bidder);
                let best = match best {
                    None => Incumbent::new(u, row.clone()),
                    Some(mut inc) => {
                        inc.offer(u, &row);
                        inc
                    }
                };
                (bids, row, Some(best))
            },
        )
        .filter_map(|(_, _, best)| best)
        .reduce_with(Incumbent::merge)
        .expect("grid is nonempty");

    let mut evals = product as u64 + 1;
    let mut best = scanned;
    if options.truthful == TruthfulScan::Row && !truthful.iter().all(|&x| grid.contains(x)) {
        let u = utility_fast(mech, &truthful, profile, bidder);
        evals += 1;
        best.offer(u, &truthful);
    }
    if best.utility.is_nan() || best.utility <= truthful_utility {
        best = Incumbent::new(truthful_utility, truthful);
    }

    Ok(RegretEstimate {
        method: Method::Exhaustive,
        bidder,
        value: (best.utility - truthful_utility).max(0.0),
        best_misreport: Some(best.point),
        mech_evals: evals,
        gradient_steps: 0,
        aborted_candidates: 0,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Best single-coordinate deviation for one item.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ItemScan {
    pub best_utility: f64,
    pub best_value: f64,
    pub evals: u64,
}

/// Scan coordinate `(bidder, item)` over the grid plus its truthful value.
/// Does not evaluate the truthful profile itself; `truthful_utility` is the
/// caller's.
pub(crate) fn scan_item(
    mech: &dyn Mechanism,
    profile: &BidProfile,
    bidder: usize,
    item: usize,
    grid: &GridSpec,
    truthful_utility: f64,
) -> ItemScan {
    let truthful = profile.row(bidder);
    let mut bids = profile.clone();
    let mut best: Option<Incumbent> = None;
    let mut consider = |x: f64, bids: &mut BidProfile| {
        bids.set_unchecked(bidder, item, x);
        let u = utility_fast(mech, truthful, bids, bidder);
        match best.as_mut() {
            None => best = Some(Incumbent::new(u, vec![x])),
            Some(inc) => inc.offer(u, &[x]),
        }
    };
    for k in 0..grid.len() {
        consider(grid.point(k), &mut bids);
    }
    let mut evals = grid.len() as u64;
    let own = truthful[item];
    if !grid.contains(own) {
        consider(own, &mut bids);
        evals += 1;
    }
    let best = best.expect("grid is nonempty");
    if best.utility > truthful_utility {
        ItemScan { best_utility: best.utility, best_value: best.point[0], evals }
    } else {
        ItemScan { best_utility: truthful_utility, best_value: own, evals }
    }
}

/// All per-item scans for a bidder, sharing one truthful evaluation.
pub(crate) struct ItemScans {
    pub truthful_utility: f64,
    pub scans: Vec<ItemScan>,
    pub evals: u64,
}

impl ItemScans {
    pub fn gain(&self, item: usize) -> f64 {
        (self.scans[item].best_utility - self.truthful_utility).max(0.0)
    }

    pub fn argmaxes(&self) -> Vec<f64> {
        self.scans.iter().map(|s| s.best_value).collect()
    }
}

pub(crate) fn scan_all_items(
    mech: &dyn Mechanism,
    profile: &BidProfile,
    bidder: usize,
    grid: &GridSpec,
) -> Result<ItemScans> {
    validate(mech, profile, bidder)?;
    let truthful_utility = utility(mech, profile.row(bidder), profile, bidder)?;
    let scans: Vec<ItemScan> = (0..profile.setting().items)
        .map(|j| scan_item(mech, profile, bidder, j, grid, truthful_utility))
        .collect();
    let evals = 1 + scans.iter().map(|s| s.evals).sum::<u64>();
    Ok(ItemScans { truthful_utility, scans, evals })
}

/// Regret restricted to deviations on one item, everything else truthful.
pub fn item_regret(
    mech: &dyn Mechanism,
    profile: &BidProfile,
    bidder: usize,
    item: usize,
    grid: &GridSpec,
) -> Result<RegretEstimate> {
    validate(mech, profile, bidder)?;
    if item >= profile.setting().items {
        return Err(Error::input(format!("item {item} out of range for {}", profile.setting())));
    }
    let started = Instant::now();
    let truthful_utility = utility(mech, profile.row(bidder), profile, bidder)?;
    let scan = scan_item(mech, profile, bidder, item, grid, truthful_utility);
    let mut misreport = profile.row(bidder).to_vec();
    misreport[item] = scan.best_value;
    Ok(RegretEstimate {
        method: Method::Item,
        bidder,
        value: (scan.best_utility - truthful_utility).max(0.0),
        best_misreport: Some(misreport),
        mech_evals: scan.evals + 1,
        gradient_steps: 0,
        aborted_candidates: 0,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Max over items of the per-item regret; never exceeds the joint regret.
pub fn lower_bound_regret(
    mech: &dyn Mechanism,
    profile: &BidProfile,
    bidder: usize,
    grid: &GridSpec,
) -> Result<RegretEstimate> {
    let started = Instant::now();
    let scans = scan_all_items(mech, profile, bidder, grid)?;
    let (value, misreport) = lower_bound_from_scans(profile, bidder, &scans);
    Ok(RegretEstimate {
        method: Method::LowerBound,
        bidder,
        value,
        best_misreport: Some(misreport),
        mech_evals: scans.evals,
        gradient_steps: 0,
        aborted_candidates: 0,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

pub(crate) fn lower_bound_from_scans(profile: &BidProfile, bidder: usize, scans: &ItemScans) -> (f64, Vec<f64>) {
    let truthful = profile.row(bidder);
    let mut best = Incumbent::new(scans.gain(0), {
        let mut r = truthful.to_vec();
        r[0] = scans.scans[0].best_value;
        r
    });
    for j in 1..scans.scans.len() {
        let mut r = truthful.to_vec();
        r[j] = scans.scans[j].best_value;
        best.offer(scans.gain(j), &r);
    }
    (best.utility, best.point)
}

/// Sum over items of the per-item regret. A proxy, not a bound: it is at most
/// `m` times the joint regret.
pub fn item_wise_regret(
    mech: &dyn Mechanism,
    profile: &BidProfile,
    bidder: usize,
    grid: &GridSpec,
) -> Result<RegretEstimate> {
    let started = Instant::now();
    let scans = scan_all_items(mech, profile, bidder, grid)?;
    let value = (0..scans.scans.len()).map(|j| scans.gain(j)).sum();
    Ok(RegretEstimate {
        method: Method::ItemWise,
        bidder,
        value,
        best_misreport: None,
        mech_evals: scans.evals,
        gradient_steps: 0,
        aborted_candidates: 0,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Run the requested grid methods for every bidder.
///
/// Results are ordered by bidder, then method. `item` reports one estimate per
/// `(bidder, item)`. Optimizer methods are handled by the harness and rejected
/// here.
pub fn audit_all_bidders(
    mech: &dyn Mechanism,
    profile: &BidProfile,
    grid: &GridSpec,
    methods: &BTreeSet<Method>,
) -> Result<Vec<RegretEstimate>> {
    audit_all_bidders_with(mech, profile, grid, methods, &ExhaustiveOptions::default())
}

pub fn audit_all_bidders_with(
    mech: &dyn Mechanism,
    profile: &BidProfile,
    grid: &GridSpec,
    methods: &BTreeSet<Method>,
    exhaustive: &ExhaustiveOptions,
) -> Result<Vec<RegretEstimate>> {
    let mut out = Vec::new();
    for bidder in 0..profile.setting().bidders {
        for method in methods {
            match method {
                Method::Exhaustive => {
                    out.push(exhaustive_regret_with(mech, profile, bidder, grid, exhaustive)?)
                }
                Method::Item => {
                    for item in 0..profile.setting().items {
                        out.push(item_regret(mech, profile, bidder, item, grid)?);
                    }
                }
                Method::LowerBound => out.push(lower_bound_regret(mech, profile, bidder, grid)?),
                Method::ItemWise => out.push(item_wise_regret(mech, profile, bidder, grid)?),
                Method::Pga | Method::Guided => {
                    return Err(Error::config(format!(
                        "`{method}` is an optimizer method, not a grid estimator"
                    )))
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::{AuctionSetting, FirstPrice, SecondPrice};

    fn s(n: usize, m: usize) -> AuctionSetting {
        AuctionSetting::new(n, m).unwrap()
    }

    #[test]
    fn grid_points_inclusive() {
        let g = GridSpec::new(10).unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 11);
        assert_eq!(pts[0], 0.0);
        assert_eq!(pts[10], 1.0);
        for w in pts.windows(2) {
            assert!(w[1] > w[0]);
            assert!((w[1] - w[0] - 0.1).abs() < 1e-15);
        }
        assert!(g.contains(0.3));
        assert!(g.contains(1.0));
        assert!(!g.contains(0.35));
    }

    #[test]
    fn grid_points_open_left() {
        let g = GridSpec::with_style(4, GridStyle::OpenLeft).unwrap();
        assert_eq!(g.points(), vec![0.25, 0.5, 0.75, 1.0]);
        assert!(!g.contains(0.0));
        assert!(GridSpec::new(0).is_err());
    }

    #[test]
    fn first_price_single_item_example() {
        // 11 grid bids; winning at 0.3 (tie, lower index) yields 0.8 - 0.3
        let mech = FirstPrice::new(s(2, 1));
        let profile = BidProfile::from_rows(&[vec![0.8], vec![0.3]]).unwrap();
        let grid = GridSpec::new(10).unwrap();
        let est = exhaustive_regret(&mech, &profile, 0, &grid).unwrap();
        assert!((est.value - 0.5).abs() < 1e-12);
        assert_eq!(est.best_misreport, Some(vec![0.3]));
        // truthful 0.8 is on grid: 11 + 1
        assert_eq!(est.mech_evals, 12);
    }

    #[test]
    fn first_price_two_items_per_item_and_sum() {
        let mech = FirstPrice::new(s(2, 2));
        let profile = BidProfile::from_rows(&[vec![0.8, 0.5], vec![0.3, 0.1]]).unwrap();
        let grid = GridSpec::new(10).unwrap();
        let r0 = item_regret(&mech, &profile, 0, 0, &grid).unwrap();
        let r1 = item_regret(&mech, &profile, 0, 1, &grid).unwrap();
        assert!((r0.value - 0.5).abs() < 1e-12);
        assert!((r1.value - 0.4).abs() < 1e-12);
        assert_eq!(r0.best_misreport, Some(vec![0.3, 0.5]));
        let lb = lower_bound_regret(&mech, &profile, 0, &grid).unwrap();
        assert!((lb.value - 0.5).abs() < 1e-12);
        assert_eq!(lb.best_misreport, Some(vec![0.3, 0.5]));
        let iw = item_wise_regret(&mech, &profile, 0, &grid).unwrap();
        assert!((iw.value - 0.9).abs() < 1e-12);
        let ex = exhaustive_regret(&mech, &profile, 0, &grid).unwrap();
        assert!((ex.value - 0.9).abs() < 1e-12);
        assert_eq!(ex.best_misreport, Some(vec![0.3, 0.1]));
    }

    #[test]
    fn second_price_is_zero_everywhere() {
        let mech = SecondPrice::new(s(3, 2));
        let profile = BidProfile::new(s(3, 2), vec![0.83, 0.12, 0.45, 0.67, 0.91, 0.05]).unwrap();
        let grid = GridSpec::new(20).unwrap();
        for bidder in 0..3 {
            let ex = exhaustive_regret(&mech, &profile, bidder, &grid).unwrap();
            assert_eq!(ex.value, 0.0);
            for est in [
                lower_bound_regret(&mech, &profile, bidder, &grid).unwrap(),
                item_wise_regret(&mech, &profile, bidder, &grid).unwrap(),
                item_regret(&mech, &profile, bidder, 1, &grid).unwrap(),
            ] {
                assert_eq!(est.value, 0.0, "{:?}", est.method);
            }
        }
    }

    #[test]
    fn zero_regret_reports_truthful_row() {
        // every losing bid ties the truthful utility; truthful wins ties
        let mech = SecondPrice::new(s(2, 2));
        let profile = BidProfile::from_rows(&[vec![0.2, 0.77], vec![0.6, 0.1]]).unwrap();
        let grid = GridSpec::new(10).unwrap();
        for bidder in 0..2 {
            let truthful = profile.row(bidder).to_vec();
            let est = exhaustive_regret(&mech, &profile, bidder, &grid).unwrap();
            assert_eq!(est.value, 0.0);
            assert_eq!(est.best_misreport, Some(truthful.clone()));
            let lb = lower_bound_regret(&mech, &profile, bidder, &grid).unwrap();
            assert_eq!(lb.best_misreport, Some(truthful));
        }
    }

    #[test]
    fn budget_exceeded_names_required_count() {
        let mech = FirstPrice::new(s(2, 5));
        let profile = BidProfile::zeros(s(2, 5));
        let grid = GridSpec::new(100).unwrap();
        let err = exhaustive_regret(&mech, &profile, 0, &grid).unwrap_err();
        match err {
            Error::BudgetExceeded { required, budget } => {
                assert_eq!(required, 101u128.pow(5));
                assert_eq!(budget, DEFAULT_EXHAUSTIVE_BUDGET);
            }
            other => panic!("unexpected {other}"),
        }
        assert!(err_to_string_names_count(&mech, &profile, &grid));
    }

    fn err_to_string_names_count(mech: &FirstPrice, profile: &BidProfile, grid: &GridSpec) -> bool {
        let msg = exhaustive_regret(mech, profile, 0, grid).unwrap_err().to_string();
        msg.contains(&101u128.pow(5).to_string())
    }

    #[test]
    fn eval_counts_off_grid_truthful() {
        let mech = FirstPrice::new(s(2, 2));
        let profile = BidProfile::new(s(2, 2), vec![0.81, 0.47, 0.33, 0.12]).unwrap();
        let grid = GridSpec::new(10).unwrap();
        let before = mech.evaluations();
        let ex = exhaustive_regret(&mech, &profile, 0, &grid).unwrap();
        // both truthful coordinates off grid: 12 candidates each, + truthful eval
        assert_eq!(ex.mech_evals, 12 * 12 + 1);
        assert_eq!(mech.evaluations() - before, ex.mech_evals);
        let row = ExhaustiveOptions { truthful: TruthfulScan::Row, ..Default::default() };
        let ex_row = exhaustive_regret_with(&mech, &profile, 0, &grid, &row).unwrap();
        assert_eq!(ex_row.mech_evals, 121 + 1 + 1);
        assert_eq!(mech.evaluations() - before, 145 + 123);
        let it = item_regret(&mech, &profile, 0, 1, &grid).unwrap();
        assert_eq!(it.mech_evals, 11 + 1 + 1);
        let iw = item_wise_regret(&mech, &profile, 0, &grid).unwrap();
        assert_eq!(iw.mech_evals, 2 * 12 + 1);
        let lb = lower_bound_regret(&mech, &profile, 0, &grid).unwrap();
        assert_eq!(lb.mech_evals, 2 * 12 + 1);
        assert_eq!(mech.evaluations() - before, 145 + 123 + 13 + 25 + 25);
    }

    #[test]
    fn eval_counts_on_grid_truthful() {
        let mech = FirstPrice::new(s(2, 2));
        let profile = BidProfile::new(s(2, 2), vec![0.8, 0.4, 0.3, 0.1]).unwrap();
        let grid = GridSpec::new(10).unwrap();
        assert_eq!(exhaustive_regret(&mech, &profile, 0, &grid).unwrap().mech_evals, 122);
        assert_eq!(item_wise_regret(&mech, &profile, 0, &grid).unwrap().mech_evals, 2 * 11 + 1);
    }

    #[test]
    fn audit_all_bidders_counts_and_empty() {
        let mech = FirstPrice::new(s(2, 2));
        let profile = BidProfile::new(s(2, 2), vec![0.81, 0.47, 0.33, 0.12]).unwrap();
        let grid = GridSpec::new(10).unwrap();
        let iw = audit_all_bidders(&mech, &profile, &grid, &[Method::ItemWise].into()).unwrap();
        assert_eq!(iw.iter().map(|e| e.mech_evals).sum::<u64>(), 50);
        let exhaustive: BTreeSet<Method> = [Method::Exhaustive].into();
        let row = ExhaustiveOptions { truthful: TruthfulScan::Row, ..Default::default() };
        let ex = audit_all_bidders_with(&mech, &profile, &grid, &exhaustive, &row).unwrap();
        assert_eq!(ex.iter().map(|e| e.mech_evals).sum::<u64>(), 246);
        let ex = audit_all_bidders(&mech, &profile, &grid, &exhaustive).unwrap();
        assert_eq!(ex.iter().map(|e| e.mech_evals).sum::<u64>(), 2 * (144 + 1));
        let on = BidProfile::new(s(2, 2), vec![0.8, 0.4, 0.3, 0.1]).unwrap();
        for opts in [row, ExhaustiveOptions::default()] {
            let ex = audit_all_bidders_with(&mech, &on, &grid, &exhaustive, &opts).unwrap();
            assert_eq!(ex.iter().map(|e| e.mech_evals).sum::<u64>(), 244);
        }
        assert!(audit_all_bidders(&mech, &profile, &grid, &BTreeSet::new()).unwrap().is_empty());
        assert!(audit_all_bidders(&mech, &profile, &grid, &[Method::Pga].into()).is_err());
    }

    #[test]
    fn coordinate_candidates_stay_sorted() {
        let grid = GridSpec::new(4).unwrap();
        let c = coordinate_candidates(&grid, &[0.3, 0.5, 1.0], TruthfulScan::Coordinates);
        assert_eq!(c[0], vec![0.0, 0.25, 0.3, 0.5, 0.75, 1.0]);
        assert_eq!(c[1], grid.points());
        assert_eq!(c[2], grid.points());
        assert_eq!(exhaustive_scan_rows(&grid, &[0.3, 0.5], TruthfulScan::Coordinates), 30);
        assert_eq!(exhaustive_scan_rows(&grid, &[0.3, 0.5], TruthfulScan::Row), 26);
        assert_eq!(exhaustive_scan_rows(&grid, &[0.25, 0.5], TruthfulScan::Row), 25);
    }

    #[test]
    fn item_out_of_range() {
        let mech = FirstPrice::new(s(2, 2));
        let profile = BidProfile::zeros(s(2, 2));
        let grid = GridSpec::new(4).unwrap();
        assert!(item_regret(&mech, &profile, 0, 2, &grid).is_err());
        assert!(lower_bound_regret(&mech, &profile, 2, &grid).is_err());
    }

    #[test]
    fn tie_rule_prefers_lexicographically_smaller() {
        assert!(improves(1.0, &[0.1, 0.9], 1.0, &[0.2, 0.0]));
        assert!(!improves(1.0, &[0.2, 0.0], 1.0, &[0.1, 0.9]));
        assert!(improves(1.1, &[0.9], 1.0, &[0.1]));
        assert!(!improves(f64::NAN, &[0.0], 1.0, &[0.1]));
        let a = Incumbent::new(1.0, vec![0.5]).merge(Incumbent::new(1.0, vec![0.4]));
        let b = Incumbent::new(1.0, vec![0.4]).merge(Incumbent::new(1.0, vec![0.5]));
        assert_eq!(a.point, b.point);
    }
}
