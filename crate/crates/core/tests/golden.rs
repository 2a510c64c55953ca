//! Frozen outputs of the seeded neural mechanism. Set `REGRET_AUDIT_BLESS=1`
//! to rewrite the files after an intentional change to the forward pass.

use std::path::PathBuf;

use regret_audit_core::mechanism::generate_neural_spec;
use regret_audit_core::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct ForwardGolden {
    profile: Vec<f64>,
    allocation: Vec<f64>,
    payments: Vec<f64>,
    utilities: Vec<f64>,
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct OracleGolden {
    q: usize,
    regret: Vec<f64>,
    best_misreport: Vec<Vec<f64>>,
    mech_evals: Vec<u64>,
}

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn check<T>(name: &str, actual: &T)
where
    T: Serialize + for<'de> Deserialize<'de> + PartialEq + std::fmt::Debug,
{
    let path = golden_path(name);
    if std::env::var_os("REGRET_AUDIT_BLESS").is_some() {
        std::fs::write(&path, serde_json::to_string_pretty(actual).unwrap() + "\n").unwrap();
        return;
    }
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let frozen: T = serde_json::from_str(&text).unwrap();
    assert_eq!(&frozen, actual, "{name} drifted");
}

fn fixture() -> (NeuralMechanism, BidProfile) {
    let setting = AuctionSetting::new(2, 2).unwrap();
    let mech = NeuralMechanism::new(generate_neural_spec(setting, 16, 42).unwrap()).unwrap();
    let profile = sample_valuations(&ValuationDistribution::Uniform01, setting, 0, 7).unwrap();
    (mech, profile)
}

#[test]
fn neural_forward_pass_matches_golden() {
    let (mech, profile) = fixture();
    let outcome = run_mechanism(&mech, &profile).unwrap();
    let utilities = (0..2).map(|i| utility(&mech, profile.row(i), &profile, i).unwrap()).collect();
    check(
        "neural_s42_2x2_forward.json",
        &ForwardGolden {
            profile: profile.values().to_vec(),
            allocation: outcome.allocation.probs().to_vec(),
            payments: outcome.payments.as_slice().to_vec(),
            utilities,
        },
    );
}

#[test]
fn neural_exhaustive_oracle_matches_golden() {
    let (mech, profile) = fixture();
    let grid = GridSpec::new(50).unwrap();
    let estimates: Vec<_> = (0..2).map(|i| exhaustive_regret(&mech, &profile, i, &grid).unwrap()).collect();
    check(
        "neural_s42_2x2_exhaustive_q50.json",
        &OracleGolden {
            q: 50,
            regret: estimates.iter().map(|e| e.value).collect(),
            best_misreport: estimates.iter().map(|e| e.best_misreport.clone().unwrap()).collect(),
            mech_evals: estimates.iter().map(|e| e.mech_evals).collect(),
        },
    );
}
