use std::fs::OpenOptions;
use std::io::Write;

use diffsum::audit::{AuditParams, Decision, Interpretation};
use diffsum::sampling::{BallotManifest, EscalationSchedule, SeededRng};
use diffsum::session::{read_log, replay, AuditSession, EventKind, SessionError, SessionStore};
use proptest::prelude::*;

fn manifest(n: usize) -> BallotManifest {
    BallotManifest::from_ids((0..n).map(|i| format!("b{i:03}"))).unwrap()
}

#[derive(Debug, Clone)]
enum Op {
    Interpret { pick: usize, label: u8 },
    Draws,
    Close,
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        12 => (any::<usize>(), 0u8..3).prop_map(|(pick, label)| Op::Interpret { pick, label }),
        2 => Just(Op::Draws),
        1 => Just(Op::Close),
    ]
}

fn label(k: u8) -> Interpretation {
    match k {
        0 => Interpretation::candidate("A"),
        1 => Interpretation::candidate("B"),
        _ => Interpretation::Invalid,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn live_state_equals_replay(
        n in 30usize..120,
        seed: u64,
        step in 1u64..15,
        ops in prop::collection::vec(op(), 1..150),
    ) {
        let params = AuditParams::new(n as u64, vec!["A".into(), "B".into()], 0).unwrap();
        let schedule = EscalationSchedule::FixedStep { step };
        let mut s = AuditSession::create_with_id("p", params, &manifest(n), &SeededRng::new(seed, 0), schedule).unwrap();
        let mut decided: Option<Decision> = None;
        for op in ops {
            let _ = match op {
                Op::Interpret { pick, label: k } => {
                    let planned = s.planned();
                    let ballot = planned[pick % planned.len()].clone();
                    s.record_interpretation_at(&ballot, label(k), 0).map(|_| ())
                }
                Op::Draws => s.next_draws().map(|_| ()),
                Op::Close => s.close("done"),
            };
            if let Some(d) = &decided {
                prop_assert_eq!(s.decision(), d);
            } else if s.decision().is_terminal() {
                decided = Some(s.decision().clone());
            }
            let r = replay(s.events()).unwrap();
            prop_assert_eq!(r.status_view(), s.status_view());
            let t = s.tally();
            prop_assert_eq!(t.candidate_total() + t.invalid(), t.total_drawn);
        }
        // planned draws are one fixed permutation prefix of the manifest
        let mut seen = std::collections::HashSet::new();
        prop_assert!(s.planned().iter().all(|id| seen.insert(id.clone())));
        let fresh = AuditSession::create_with_id(
            "q",
            AuditParams::new(n as u64, vec!["A".into(), "B".into()], 0).unwrap(),
            &manifest(n),
            &SeededRng::new(seed, 0),
            EscalationSchedule::PerBallot,
        )
        .unwrap();
        let k = fresh.planned().len().min(s.planned().len());
        prop_assert_eq!(&fresh.planned()[..k], &s.planned()[..k]);
    }
}

#[test]
fn store_recovers_after_torn_write() {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let params = AuditParams::new(50_000, vec!["A".into(), "B".into()], 2).unwrap();
    let created = store
        .create(params, &manifest(50_000), &SeededRng::new(1, 0), EscalationSchedule::FixedStep { step: 10 })
        .unwrap();
    let id = created.session_id;
    for (i, ballot) in created.planned_draws.iter().enumerate().take(10) {
        let l = if i < 2 { "B" } else { "A" };
        store.update(&id, |s| s.record_interpretation(ballot, Interpretation::candidate(l))).unwrap();
    }
    let before = store.read(&id, |s| s.status_view()).unwrap();
    drop(store);

    // A crash mid-append leaves half a line behind.
    let path = dir.path().join(format!("{id}.jsonl"));
    OpenOptions::new().append(true).open(&path).unwrap().write_all(b"{\"seq\":12,\"type\":\"interp").unwrap();
    match SessionStore::open(dir.path()) {
        Err(SessionError::CorruptLog { seq, .. }) => assert_eq!(seq, 12),
        other => panic!("expected corrupt log, got {:?}", other.map(|s| s.session_ids())),
    }

    // Dropping the torn tail restores the last complete state.
    let text = std::fs::read_to_string(&path).unwrap();
    let cut = text.rfind('\n').unwrap() + 1;
    std::fs::write(&path, &text[..cut]).unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    assert_eq!(store.read(&id, |s| s.status_view()).unwrap(), before);
}

#[test]
fn decision_is_durable_and_replayable() {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let params = AuditParams::new(50_000, vec!["A".into(), "B".into()], 2).unwrap();
    let created = store
        .create(params, &manifest(50_000), &SeededRng::new(5, 0), EscalationSchedule::FixedStep { step: 10 })
        .unwrap();
    let id = created.session_id;
    let mut last = Decision::Continue;
    for (i, ballot) in created.planned_draws.iter().enumerate() {
        let l = if i % 6 == 0 { "B" } else { "A" };
        last = store.update(&id, |s| s.record_interpretation(ballot, Interpretation::candidate(l))).unwrap();
    }
    assert_eq!(last, Decision::AcceptOutcome { winner: "A".into() });
    let events = read_log(dir.path().join(format!("{id}.jsonl"))).unwrap();
    assert!(matches!(events.last().unwrap().kind, EventKind::DecisionReached { .. }));
    assert_eq!(replay(&events).unwrap().decision(), &last);
}
