//! Walks a ballot sequence through the stopping rule one interpretation at
//! a time and reports where it stops.

use diffsum::audit::{evaluate, AuditParams, DiffSumStatistic, Interpretation, TallySnapshot};

fn main() -> diffsum::Result<()> {
    let params = AuditParams::new(50_000, vec!["A".into(), "B".into()], 2)?;
    let c = params.c();
    let mut tally = TallySnapshot::empty(params.candidates());

    // four B ballots up front, then a run of A
    let ballots = std::iter::repeat_n("B", 4).chain(std::iter::repeat_n("A", 30));
    for label in ballots {
        tally.record(&Interpretation::candidate(label))?;
        let (a, b) = (tally.count("A"), tally.count("B"));
        let s = DiffSumStatistic::new(a, b, c);
        let decision = evaluate(&tally, &params)?;
        println!(
            "{:>2}: a={a:>2} b={b}  (a-b)^2={:>3}  c(a+b)={:>3}  {decision}",
            tally.total_drawn, s.statistic, s.threshold
        );
        if decision.is_terminal() {
            break;
        }
    }
    // The library evaluates from the first ballot; a live session holds the
    // verdict back until the initial sample of 24 is read.
    Ok(())
}
