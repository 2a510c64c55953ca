use super::{AllocationMatrix, AuctionSetting, BidProfile, EvalCounter, Mechanism, Outcome, PaymentVector};

/// Highest bid per item, ties to the lowest bidder index.
fn item_winner(bids: &BidProfile, item: usize) -> usize {
    let mut winner = 0;
    for i in 1..bids.setting().bidders {
        if bids.get(i, item) > bids.get(winner, item) {
            winner = i;
        }
    }
    winner
}

/// Per-item second-price auction. Dominant-strategy truthful, so its regret
/// is exactly zero.
#[derive(Debug)]
pub struct SecondPrice {
    setting: AuctionSetting,
    counter: EvalCounter,
}

impl SecondPrice {
    pub fn new(setting: AuctionSetting) -> Self {
        SecondPrice { setting, counter: EvalCounter::default() }
    }
}

impl Mechanism for SecondPrice {
    fn setting(&self) -> AuctionSetting {
        self.setting
    }

    fn name(&self) -> String {
        "second-price".into()
    }

    fn evaluate(&self, bids: &BidProfile) -> Outcome {
        let AuctionSetting { bidders: n, items: m } = self.setting;
        let mut probs = vec![0.0; n * m];
        let mut pay = vec![0.0; n];
        for j in 0..m {
            let w = item_winner(bids, j);
            probs[w * m + j] = 1.0;
            let price = (0..n)
                .filter(|&i| i != w)
                .map(|i| bids.get(i, j))
                .fold(0.0, f64::max);
            pay[w] += price;
        }
        Outcome {
            allocation: AllocationMatrix::from_raw(self.setting, probs),
            payments: PaymentVector::from_raw(pay),
        }
    }

    fn counter(&self) -> &EvalCounter {
        &self.counter
    }

    fn is_separable(&self) -> bool {
        true
    }
}

/// Per-item first-price auction: the winner pays its own bid.
#[derive(Debug)]
pub struct FirstPrice {
    setting: AuctionSetting,
    counter: EvalCounter,
}

impl FirstPrice {
    pub fn new(setting: AuctionSetting) -> Self {
        FirstPrice { setting, counter: EvalCounter::default() }
    }
}

impl Mechanism for FirstPrice {
    fn setting(&self) -> AuctionSetting {
        self.setting
    }

    fn name(&self) -> String {
        "first-price".into()
    }

    fn evaluate(&self, bids: &BidProfile) -> Outcome {
        let AuctionSetting { bidders: n, items: m } = self.setting;
        let mut probs = vec![0.0; n * m];
        let mut pay = vec![0.0; n];
        for j in 0..m {
            let w = item_winner(bids, j);
            probs[w * m + j] = 1.0;
            pay[w] += bids.get(w, j);
        }
        Outcome {
            allocation: AllocationMatrix::from_raw(self.setting, probs),
            payments: PaymentVector::from_raw(pay),
        }
    }

    fn counter(&self) -> &EvalCounter {
        &self.counter
    }

    fn is_separable(&self) -> bool {
        true
    }
}

/// Ignores the bids entirely. Useful as a zero-gradient fixture.
#[derive(Debug)]
pub struct ConstantMechanism {
    setting: AuctionSetting,
    allocation: Vec<f64>,
    payments: Vec<f64>,
    counter: EvalCounter,
}

impl ConstantMechanism {
    pub fn new(allocation: AllocationMatrix, payments: PaymentVector) -> Self {
        ConstantMechanism {
            setting: allocation.setting,
            allocation: allocation.probs,
            payments: payments.0,
            counter: EvalCounter::default(),
        }
    }

    /// Every item split evenly among bidders, no payments.
    pub fn uniform(setting: AuctionSetting) -> Self {
        let share = 1.0 / setting.bidders as f64;
        ConstantMechanism {
            setting,
            allocation: vec![share; setting.cells()],
            payments: vec![0.0; setting.bidders],
            counter: EvalCounter::default(),
        }
    }
}

impl Mechanism for ConstantMechanism {
    fn setting(&self) -> AuctionSetting {
        self.setting
    }

    fn name(&self) -> String {
        "constant".into()
    }

    fn evaluate(&self, _bids: &BidProfile) -> Outcome {
        Outcome {
            allocation: AllocationMatrix::from_raw(self.setting, self.allocation.clone()),
            payments: PaymentVector::from_raw(self.payments.clone()),
        }
    }

    fn counter(&self) -> &EvalCounter {
        &self.counter
    }

    fn is_separable(&self) -> bool {
        true
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
        let u = self.evaluate(bids).utility(valuation_row, bidder);
        Some((u, vec![0.0; self.setting.items]))
    }
}
