//! Continuous misreport search by projected gradient ascent.

mod guided;
mod pga;
mod portfolio;

pub use guided::guided_refinement;
pub use pga::{pga_single, random_restart_pga, PgaConfig, PgaOutcome};
pub use portfolio::{build_portfolio, Candidate, CandidateLabel, Portfolio, PortfolioConfig};
