//! Derives the audit constant for an electorate and estimates how many
//! ballots DiffSum and BRAVO will examine.
//!
//!     cargo run --example plan_audit -- 50000 0.20

use diffsum::audit::{choose_c, decimal_digits, expected_stop_size, max_error_rate};
use diffsum::bravo::bravo_expected_size;

fn main() -> diffsum::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: u64 = args.next().map_or(50_000, |s| s.parse().expect("n"));
    let margin: f64 = args.next().map_or(0.20, |s| s.parse().expect("margin"));

    println!("n = {n}, d = {}, margin = {margin}", decimal_digits(n)?);
    println!("delta  c  risk   DiffSum  BRAVO");
    for delta in 0..=4 {
        let c = choose_c(n, delta)?;
        let risk = max_error_rate(delta)?;
        println!(
            "{delta:>5} {c:>2}  {:>3.0}%  {:>7.1}  {:>5.1}",
            risk * 100.0,
            expected_stop_size(c, margin)?,
            bravo_expected_size(risk, margin)?
        );
    }
    Ok(())
}
