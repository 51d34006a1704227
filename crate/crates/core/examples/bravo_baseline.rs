//! The BRAVO sequential probability ratio test, run on the same ballots a
//! DiffSum audit would see.

use diffsum::audit::diffsum_stop_condition;
use diffsum::bravo::{bravo_decision, bravo_update, BallotFor, BravoParams, BravoState};
use diffsum::sampling::SeededRng;

fn main() -> diffsum::Result<()> {
    let params = BravoParams::new(0.10, 0.60)?;
    println!(
        "ln(2p) = {:.4}, ln(2(1-p)) = {:.4}, threshold ln(1/alpha) = {:.4}",
        params.winner_increment(),
        params.loser_increment(),
        params.log_threshold()
    );

    // A with-replacement stream where 60% of ballots favour A.
    let mut rng = SeededRng::new(7, 0);
    let mut state = BravoState::new();
    let (mut a, mut b) = (0, 0);
    let mut diffsum_stop = None;
    loop {
        let ballot = if rng.below(10) < 6 { BallotFor::Winner } else { BallotFor::Loser };
        match ballot {
            BallotFor::Winner => a += 1,
            _ => b += 1,
        }
        state = bravo_update(state, ballot, &params);
        if diffsum_stop.is_none() && diffsum_stop_condition(a, b, 7) {
            diffsum_stop = Some(state.ballots_seen);
        }
        let decision = bravo_decision(&state, &params, &"A".to_string());
        if decision.is_terminal() {
            println!("BRAVO: {decision} after {} ballots (log T = {:.3})", state.ballots_seen, state.log_statistic);
            break;
        }
    }
    match diffsum_stop {
        Some(k) => println!("DiffSum c=7 would have stopped after {k}"),
        None => println!("DiffSum c=7 had not stopped yet"),
    }
    Ok(())
}
