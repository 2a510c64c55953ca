//! Fixed-weight feedforward allocation/payment network.
//!
//! One tanh hidden layer over the flattened bids feeds two heads:
//!
//! - allocation scores reshaped to `(n + 1) x m` and softmaxed per item
//!   column, row `n` being the "unallocated" dummy;
//! - payment logits `z`, with `p_i = sigmoid(z_i) * sum_j g_ij * b_ij`.
//!
//! The payment is a fraction of the reported allocated value, so payments are
//! nonnegative and allocations feasible by construction.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AllocationMatrix, AuctionSetting, BidProfile, EvalCounter, Mechanism, Outcome, PaymentVector};
use crate::error::{Error, Result};
use crate::rng::{child_rng, Domain};

pub const SPEC_FORMAT_VERSION: u64 = 1;

/// Serialized weights. Matrices are row-major nested arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeuralMechanismSpec {
    pub format_version: u64,
    pub setting: AuctionSetting,
    pub hidden_width: usize,
    /// `(n*m) x hidden`
    pub weights_in: Vec<Vec<f64>>,
    pub bias_in: Vec<f64>,
    /// `hidden x ((n+1)*m)`
    pub weights_alloc: Vec<Vec<f64>>,
    pub bias_alloc: Vec<f64>,
    /// `hidden x n`
    pub weights_pay: Vec<Vec<f64>>,
    pub bias_pay: Vec<f64>,
}

fn check_matrix(name: &str, mat: &[Vec<f64>], rows: usize, cols: usize) -> Result<()> {
    if mat.len() != rows {
        return Err(Error::InvalidSpec(format!("{name} has {} rows, expected {rows}", mat.len())));
    }
    for (r, row) in mat.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::InvalidSpec(format!(
                "{name} row {r} has {} columns, expected {cols}",
                row.len()
            )));
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpec(format!("{name} row {r} has a non-finite entry")));
        }
    }
    Ok(())
}

fn check_vector(name: &str, v: &[f64], len: usize) -> Result<()> {
    if v.len() != len {
        return Err(Error::InvalidSpec(format!("{name} has length {}, expected {len}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidSpec(format!("{name} has a non-finite entry")));
    }
    Ok(())
}

impl NeuralMechanismSpec {
    pub fn validate(&self) -> Result<()> {
        if self.format_version != SPEC_FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: self.format_version,
                expected: SPEC_FORMAT_VERSION,
            });
        }
        self.setting
            .validate()
            .map_err(|e| Error::InvalidSpec(e.to_string()))?;
        if self.hidden_width == 0 {
            return Err(Error::InvalidSpec("hidden_width must be at least 1".into()));
        }
        let AuctionSetting { bidders: n, items: m } = self.setting;
        let h = self.hidden_width;
        check_matrix("weights_in", &self.weights_in, n * m, h)?;
        check_vector("bias_in", &self.bias_in, h)?;
        check_matrix("weights_alloc", &self.weights_alloc, h, (n + 1) * m)?;
        check_vector("bias_alloc", &self.bias_alloc, (n + 1) * m)?;
        check_matrix("weights_pay", &self.weights_pay, h, n)?;
        check_vector("bias_pay", &self.bias_pay, n)?;
        Ok(())
    }

    /// All-zero weights: uniform allocation, half of reported allocated value
    /// as payment.
    pub fn zeros(setting: AuctionSetting, hidden_width: usize) -> Self {
        let AuctionSetting { bidders: n, items: m } = setting;
        let h = hidden_width;
        NeuralMechanismSpec {
            format_version: SPEC_FORMAT_VERSION,
            setting,
            hidden_width,
            weights_in: vec![vec![0.0; h]; n * m],
            bias_in: vec![0.0; h],
            weights_alloc: vec![vec![0.0; (n + 1) * m]; h],
            bias_alloc: vec![0.0; (n + 1) * m],
            weights_pay: vec![vec![0.0; n]; h],
            bias_pay: vec![0.0; n],
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|source| Error::Parse { what: "mechanism spec", source })?;
        let found = value.get("format_version").and_then(serde_json::Value::as_u64);
        if found != Some(SPEC_FORMAT_VERSION) {
            return Err(Error::UnsupportedVersion {
                found: found.unwrap_or(0),
                expected: SPEC_FORMAT_VERSION,
            });
        }
        let spec: NeuralMechanismSpec =
            serde_json::from_value(value).map_err(|source| Error::Parse { what: "mechanism spec", source })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|source| Error::Io {
            stage: "write mechanism spec",
            path: path.to_owned(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            stage: "read mechanism spec",
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }
}

/// Weights i.i.d. uniform in `[-1, 1]`, drawn in field order from the
/// `NeuralWeights` stream of `seed`.
pub fn generate_neural_spec(setting: AuctionSetting, hidden_width: usize, seed: u64) -> Result<NeuralMechanismSpec> {
    setting.validate()?;
    if hidden_width == 0 {
        return Err(Error::input("hidden_width must be at least 1"));
    }
    let mut rng = child_rng(seed, Domain::NeuralWeights, &[]);
    let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect() };
    let AuctionSetting { bidders: n, items: m } = setting;
    let h = hidden_width;
    let weights_in = (0..n * m).map(|_| draw(h)).collect();
    let bias_in = draw(h);
    let weights_alloc = (0..h).map(|_| draw((n + 1) * m)).collect();
    let bias_alloc = draw((n + 1) * m);
    let weights_pay = (0..h).map(|_| draw(n)).collect();
    let bias_pay = draw(n);
    Ok(NeuralMechanismSpec {
        format_version: SPEC_FORMAT_VERSION,
        setting,
        hidden_width,
        weights_in,
        bias_in,
        weights_alloc,
        bias_alloc,
        weights_pay,
        bias_pay,
    })
}

pub fn load_neural_mechanism(spec: NeuralMechanismSpec) -> Result<NeuralMechanism> {
    NeuralMechanism::new(spec)
}

#[derive(Debug)]
pub struct NeuralMechanism {
    spec: NeuralMechanismSpec,
    // flattened row-major copies of the spec matrices
    w_in: Vec<f64>,
    w_alloc: Vec<f64>,
    w_pay: Vec<f64>,
    counter: EvalCounter,
}

struct Forward {
    hidden: Vec<f64>,
    payment_logits: Vec<f64>,
    outcome: Outcome,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl NeuralMechanism {
    pub fn new(spec: NeuralMechanismSpec) -> Result<Self> {
        spec.validate()?;
        Ok(NeuralMechanism {
            w_in: spec.weights_in.concat(),
            w_alloc: spec.weights_alloc.concat(),
            w_pay: spec.weights_pay.concat(),
            spec,
            counter: EvalCounter::default(),
        })
    }

    pub fn spec(&self) -> &NeuralMechanismSpec {
        &self.spec
    }

    fn forward(&self, bids: &BidProfile) -> Forward {
        let AuctionSetting { bidders: n, items: m } = self.spec.setting;
        let h = self.spec.hidden_width;
        let out_alloc = (n + 1) * m;

        let mut hidden = self.spec.bias_in.clone();
        for (r, &x) in bids.values().iter().enumerate() {
            let w = &self.w_in[r * h..(r + 1) * h];
            for (acc, wk) in hidden.iter_mut().zip(w) {
                *acc += x * wk;
            }
        }
        hidden.iter_mut().for_each(|a| *a = a.tanh());

        let mut scores = self.spec.bias_alloc.clone();
        let mut logits = self.spec.bias_pay.clone();
        for (k, &hk) in hidden.iter().enumerate() {
            let wa = &self.w_alloc[k * out_alloc..(k + 1) * out_alloc];
            for (acc, w) in scores.iter_mut().zip(wa) {
                *acc += hk * w;
            }
            let wp = &self.w_pay[k * n..(k + 1) * n];
            for (acc, w) in logits.iter_mut().zip(wp) {
                *acc += hk * w;
            }
        }

        let mut probs = vec![0.0; n * m];
        for j in 0..m {
            let peak = (0..=n).map(|i| scores[i * m + j]).fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = (0..=n).map(|i| (scores[i * m + j] - peak).exp()).collect();
            let total: f64 = exps.iter().sum();
            for i in 0..n {
                probs[i * m + j] = exps[i] / total;
            }
        }

        let pay = (0..n)
            .map(|i| {
                let reported: f64 = (0..m).map(|j| probs[i * m + j] * bids.get(i, j)).sum();
                sigmoid(logits[i]) * reported
            })
            .collect();

        Forward {
            hidden,
            payment_logits: logits,
            outcome: Outcome {
                allocation: AllocationMatrix::from_raw(self.spec.setting, probs),
                payments: PaymentVector::from_raw(pay),
            },
        }
    }
}

impl Mechanism for NeuralMechanism {
    fn setting(&self) -> AuctionSetting {
        self.spec.setting
    }

    fn name(&self) -> String {
        format!("neural-{}-h{}", self.spec.setting, self.spec.hidden_width)
    }

    fn evaluate(&self, bids: &BidProfile) -> Outcome {
        self.forward(bids).outcome
    }

    fn counter(&self) -> &EvalCounter {
        &self.counter
    }

    fn has_analytic_gradient(&self) -> bool {
        true
    }

    fn analytic_utility_gradient(
        &self,
        valuation_row: &[f64],
        bids: &BidProfile,
        bidder: usize,
    ) -> Option<(f64, Vec<f64>)> {
        let AuctionSetting { bidders: n, items: m } = self.spec.setting;
        let h = self.spec.hidden_width;
        let out_alloc = (n + 1) * m;
        let fwd = self.forward(bids);
        let utility = fwd.outcome.utility(valuation_row, bidder);
        let g = fwd.outcome.allocation.probs();
        let own = bids.row(bidder);

        // u = sum_j v_j g_kj - s(z_k) * sum_j g_kj b_kj
        let frac = sigmoid(fwd.payment_logits[bidder]);
        let reported: f64 = (0..m).map(|j| g[bidder * m + j] * own[j]).sum();
        let d_logit = -frac * (1.0 - frac) * reported;

        // softmax backward per item column; only row `bidder` has a nonzero
        // upstream gradient, dummy row included in the normalizer
        let mut d_scores = vec![0.0; out_alloc];
        for j in 0..m {
            let gk = g[bidder * m + j];
            let upstream = valuation_row[j] - frac * own[j];
            // d g_kj / d s_ij = g_kj (1[i=k] - g_ij); dummy row i = n uses its own share
            let dummy = 1.0 - (0..n).map(|i| g[i * m + j]).sum::<f64>();
            for i in 0..=n {
                let gi = if i < n { g[i * m + j] } else { dummy };
                let indicator = if i == bidder { 1.0 } else { 0.0 };
                d_scores[i * m + j] = upstream * gk * (indicator - gi);
            }
        }

        let mut d_pre = vec![0.0; h];
        for (k, dk) in d_pre.iter_mut().enumerate() {
            let wa = &self.w_alloc[k * out_alloc..(k + 1) * out_alloc];
            let dh: f64 = wa.iter().zip(&d_scores).map(|(w, d)| w * d).sum::<f64>()
                + self.w_pay[k * n + bidder] * d_logit;
            let hk = fwd.hidden[k];
            *dk = dh * (1.0 - hk * hk);
        }

        let gradient = (0..m)
            .map(|j| {
                let r = bidder * m + j;
                let through_net: f64 = self.w_in[r * h..(r + 1) * h]
                    .iter()
                    .zip(&d_pre)
                    .map(|(w, d)| w * d)
                    .sum();
                through_net - frac * g[r]
            })
            .collect();
        Some((utility, gradient))
    }
}
