//! Fixtures shared by the estimator benchmarks.

use regret_audit_core::harness::ValuationDistribution;
use regret_audit_core::mechanism::generate_neural_spec;
use regret_audit_core::{sample_valuations, AuctionSetting, BidProfile, NeuralMechanism};

/// Seeded neural subject plus one uniform truthful profile.
pub fn neural_fixture(bidders: usize, items: usize, seed: u64) -> (NeuralMechanism, BidProfile) {
    let setting = AuctionSetting::new(bidders, items).expect("valid setting");
    let spec = generate_neural_spec(setting, 16, seed).expect("spec");
    let mech = NeuralMechanism::new(spec).expect("mechanism");
    let profile = sample_valuations(&ValuationDistribution::Uniform01, setting, 0, seed).expect("profile");
    (mech, profile)
}
