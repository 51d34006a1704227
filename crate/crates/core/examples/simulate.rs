//! Monte Carlo runs for DiffSum and BRAVO on a 50,000-ballot electorate
//! with a 20% margin, then on a tie.

use diffsum::sampling::Truth;
use diffsum::simulator::{run_simulation, write_reports_csv, RuleConfig, SimulationConfig};

fn main() -> diffsum::Result<()> {
    let trials = 2_000;
    let mut reports = Vec::new();
    for truth in [Truth::margin(0.20), Truth::tie()] {
        for rule in [RuleConfig::diffsum_c(7), RuleConfig::diffsum_c(5), RuleConfig::bravo(0.10, 0.60)] {
            let config = SimulationConfig::new(50_000, truth, rule).with_trials(trials).with_seed(2024);
            reports.push(run_simulation(&config)?.without_timing());
        }
    }
    write_reports_csv(&reports, std::io::stdout().lock()).expect("stdout");
    Ok(())
}
