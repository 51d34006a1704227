//! Measures the wrong-acceptance rate on tied electorates for every delta
//! and compares it with the tabulated maximum error rate.

use diffsum::simulator::{monotonicity_violations, reproduce_delta_table, write_delta_table_csv};

fn main() -> diffsum::Result<()> {
    let trials: u64 = std::env::args().nth(1).map_or(1_000, |s| s.parse().expect("trials"));
    let rows = reproduce_delta_table(&[1_000, 10_000], &[0, 1, 2, 3, 4], trials, 2024)?;
    write_delta_table_csv(&rows, std::io::stdout().lock()).expect("stdout");
    let violations = monotonicity_violations(&rows);
    if !violations.is_empty() {
        eprintln!("rates rising with delta: {violations:?}");
    }
    Ok(())
}
