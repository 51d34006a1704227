//! A live audit session: plan draws, record what the auditors read, and
//! watch the statistic approach its threshold.

use diffsum::audit::Interpretation;
use diffsum::sampling::{BallotManifest, SeededRng};
use diffsum::service::build_params;
use diffsum::session::{AuditSession, DEFAULT_LIVE_SCHEDULE};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let manifest = BallotManifest::from_ids((0..50_000).map(|i| format!("p{:02}-{:05}", i % 40, i)))?;
    let params = build_params(50_000, vec!["A".into(), "B".into()], Some(2), None, None, None)?;
    let mut session = AuditSession::create(params, &manifest, &SeededRng::new(2024, 0), DEFAULT_LIVE_SCHEDULE)?;
    println!(
        "session {} with c = {}, risk bound {:?}",
        session.id(),
        session.params().c(),
        session.params().risk_bound()
    );
    println!("retrieve: {}", session.pending().join(" "));

    // Pretend the paper ballots read 1 in 6 for B.
    let mut read = 0;
    while session.status().name() == "open" {
        let ballot = session.pending()[0].clone();
        let label = if read % 6 == 5 { "B" } else { "A" };
        read += 1;
        let decision = session.record_interpretation(&ballot, Interpretation::candidate(label))?;
        let v = session.status_view();
        println!("{ballot} {label}: {}/{}  {decision}", v.statistic, v.threshold);
    }
    println!("{} events logged", session.events().len());
    Ok(())
}
