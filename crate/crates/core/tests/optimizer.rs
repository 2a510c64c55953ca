use regret_audit_core::mechanism::generate_neural_spec;
use regret_audit_core::*;

#[test]
fn guided_matches_converged_pga_at_a_fraction_of_the_steps() {
    let setting = AuctionSetting::new(2, 2).unwrap();
    let mech = NeuralMechanism::new(generate_neural_spec(setting, 16, 42).unwrap()).unwrap();
    let grid = GridSpec::new(1000).unwrap();
    let portfolio = PortfolioConfig { refine: PgaConfig::new(0.1, 1, 200).unwrap(), ..PortfolioConfig::deterministic() };
    let reference = PgaConfig::new(0.1, 1000, 2000).unwrap();
    for sample in 0..3 {
        let p = sample_valuations(&ValuationDistribution::Uniform01, setting, sample, 7).unwrap();
        for bidder in 0..2 {
            let guided = guided_refinement(&mech, &p, bidder, &grid, &portfolio, sample).unwrap();
            let converged = random_restart_pga(&mech, &p, bidder, &reference, sample).unwrap();
            let tolerance = (0.02 * converged.value).max(2e-3);
            assert!(
                (guided.value - converged.value).abs() <= tolerance,
                "sample {sample} bidder {bidder}: guided {} converged {}",
                guided.value,
                converged.value
            );
            assert!(guided.gradient_steps * 20 < converged.gradient_steps);
        }
    }
}

#[test]
fn guided_never_falls_below_the_per_item_grid_optimum() {
    let setting = AuctionSetting::new(3, 4).unwrap();
    let mech = NeuralMechanism::new(generate_neural_spec(setting, 16, 9).unwrap()).unwrap();
    let grid = GridSpec::new(40).unwrap();
    let portfolio = PortfolioConfig { k: 5, sigma_opt: 0.6, sigma_truth: 0.6, refine: PgaConfig::new(0.1, 1, 25).unwrap() };
    for sample in 0..10 {
        let p = sample_valuations(&ValuationDistribution::contextual(), setting, sample, 3).unwrap();
        for bidder in 0..3 {
            let lb = lower_bound_regret(&mech, &p, bidder, &grid).unwrap();
            let guided = guided_refinement(&mech, &p, bidder, &grid, &portfolio, sample).unwrap();
            assert!(guided.value >= lb.value);
            let misreport = guided.best_misreport.unwrap();
            let u = utility(&mech, p.row(bidder), &p.with_row(bidder, &misreport).unwrap(), bidder).unwrap();
            let truthful = utility(&mech, p.row(bidder), &p, bidder).unwrap();
            assert_eq!((u - truthful).max(0.0), guided.value, "reported misreport reproduces the value");
        }
    }
}
