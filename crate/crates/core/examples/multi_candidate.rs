//! With more than two candidates the rule compares the two strongest.

use diffsum::audit::{evaluate, reduce_to_pair, AuditParams, TallySnapshot};

fn main() -> diffsum::Result<()> {
    let params = AuditParams::new(120_000, vec!["Ortiz".into(), "Lee".into(), "Novak".into()], 1)?;
    let tallies = [
        TallySnapshot::from_counts([("Ortiz", 30), ("Lee", 22), ("Novak", 8)], 2),
        TallySnapshot::from_counts([("Ortiz", 61), ("Lee", 25), ("Novak", 20)], 3),
        TallySnapshot::from_counts([("Ortiz", 12), ("Lee", 12), ("Novak", 3)], 0),
    ];
    println!("c = {}", params.c());
    for tally in &tallies {
        let pair = reduce_to_pair(tally)?;
        println!(
            "{:?} invalid={} -> leader {} a={} b={}: {}",
            tally.counts,
            tally.invalid(),
            pair.winner,
            pair.a,
            pair.b,
            evaluate(tally, &params)?
        );
    }
    Ok(())
}
