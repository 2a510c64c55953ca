//! Ex-post regret estimation for auditing the incentive compatibility of
//! multi-item auction mechanisms with additive valuations.
//!
//! The crate is split into four layers:
//!
//! - [`mechanism`]: the auction data model, the [`Mechanism`] trait, and the
//!   built-in subjects (per-item second-price, per-item first-price and a
//!   fixed-weight softmax network).
//! - [`oracle`]: grid estimators. Exhaustive joint search, per-item regret,
//!   the max-over-items lower bound and the summed item-wise proxy.
//! - [`optimizer`]: continuous misreport search. Random-restart projected
//!   gradient ascent and item-wise guided refinement from a structured
//!   initialization portfolio.
//! - [`harness`]: valuation sampling, audit runs, sweeps and report files.

pub mod error;
pub mod harness;
pub mod mechanism;
pub mod optimizer;
pub mod oracle;
pub mod rng;

pub use error::{Error, Result};
pub use harness::{
    read_report, run_audit, run_audit_with, run_sweep, sample_valuations, write_report,
    write_sweep_csv, AuditRecord, AuditReport, AuditRunConfig, MechanismSource, MethodSummary,
    SweepRow, ValuationDistribution,
};
pub use mechanism::{
    run_mechanism, utility, utility_gradient, AllocationMatrix, AuctionSetting, BidProfile,
    ConstantMechanism, FirstPrice, Mechanism, NeuralMechanism, NeuralMechanismSpec, Outcome,
    PaymentVector, SecondPrice,
};
pub use optimizer::{
    build_portfolio, guided_refinement, pga_single, random_restart_pga, Candidate,
    CandidateLabel, PgaConfig, PgaOutcome, Portfolio, PortfolioConfig,
};
pub use oracle::{
    audit_all_bidders, audit_all_bidders_with, exhaustive_regret, exhaustive_regret_with,
    exhaustive_scan_rows, item_regret, item_wise_regret, lower_bound_regret, ExhaustiveOptions,
    GridSpec, GridStyle, Method, RegretEstimate, TruthfulScan, DEFAULT_EXHAUSTIVE_BUDGET,
};
