//! Exact wrong-acceptance probabilities on tiny electorates, next to the
//! Monte Carlo estimate of the same quantity.

use diffsum::sampling::Truth;
use diffsum::simulator::{exhaustive_error_oracle, run_simulation, RuleConfig, SimulationConfig};

fn main() -> diffsum::Result<()> {
    println!(" n  {:<34} {:<12} sim (50k trials)", "rule", "exact");
    for n in [6u64, 8, 10, 12] {
        for rule in [RuleConfig::diffsum_c(1), RuleConfig::diffsum_c(2).sample_leader(), RuleConfig::bravo(0.25, 0.9)] {
            let exact = exhaustive_error_oracle(n, &Truth::tie(), &rule, 2)?;
            let config = SimulationConfig::new(n, Truth::tie(), rule)
                .with_trials(50_000)
                .with_seed(1)
                .with_initial_sample_size(2);
            let sim = run_simulation(&config)?;
            let label = format!("{} {}", rule.name(), sim.rule_params());
            println!(
                "{n:>2}  {label:<34} {:>5}/{:<6} {:.4}",
                exact.numerator, exact.denominator, sim.wrong_acceptance_rate
            );
        }
    }
    Ok(())
}
