//! Writes a session's event log as JSON lines, then rebuilds the session
//! from the file alone.
//!
//!     cargo run --example replay_log -- path/to/session.jsonl

use diffsum::audit::Interpretation;
use diffsum::sampling::{BallotManifest, EscalationSchedule, SeededRng};
use diffsum::service::build_params;
use diffsum::session::{read_log, replay, write_events, AuditSession};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = match std::env::args().nth(1) {
        Some(p) => std::path::PathBuf::from(p),
        None => {
            let path = std::env::temp_dir().join("diffsum-replay-example.jsonl");
            let manifest = BallotManifest::from_ids((0..2_000).map(|i| format!("b{i}")))?;
            let params = build_params(2_000, vec!["A".into(), "B".into()], Some(1), None, None, None)?;
            let mut s = AuditSession::create(
                params,
                &manifest,
                &SeededRng::new(3, 0),
                EscalationSchedule::FixedStep { step: 5 },
            )?;
            for i in 0..30 {
                let ballot = s.pending()[0].clone();
                s.record_interpretation(&ballot, Interpretation::candidate(if i % 3 == 0 { "B" } else { "A" }))?;
            }
            write_events(s.events(), std::fs::File::create(&path)?)?;
            path
        }
    };
    let events = read_log(&path)?;
    let session = replay(&events)?;
    let v = session.status_view();
    println!("{}: {} events, status {}", path.display(), events.len(), v.status);
    println!("counts {:?}, (a-b)^2 = {}, c(a+b) = {}, decision {}", v.counts, v.statistic, v.threshold, v.decision);
    println!("pending {}", v.pending.join(" "));
    Ok(())
}
