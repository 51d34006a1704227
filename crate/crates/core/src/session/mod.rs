//! Event-sourced state of a live audit.
//!
//! Every mutation is expressed as an [`AuditEvent`] and goes through one
//! `apply` path, which is also what [`replay`] uses. A session rebuilt from
//! its log is therefore indistinguishable from the live one.

mod event;
mod log;
mod store;

use std::collections::HashMap;
use std::time::{SystemTime, UNIX_EPOCH};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audit::{
    evaluate, reduce_to_pair, AuditParams, CandidateId, Decision, DiffSumStatistic, Interpretation, TallySnapshot,
};
use crate::error::Error;
use crate::sampling::{next_sample_size, BallotManifest, EscalationSchedule, PermutationStream, RngSpec, SeededRng};

pub use event::{AuditEvent, EventKind};
pub use log::{parse_events, read_log, write_events, EventLog};
pub use store::{CreatedSession, SessionStore, LOG_EXTENSION};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error(transparent)]
    Invalid(#[from] Error),

    #[error("ballot {0:?} is not among the planned draws")]
    UnknownBallot(String),

    #[error("ballot {0:?} already has an interpretation")]
    DuplicateInterpretation(String),

    #[error("session is {0}, not open")]
    NotOpen(&'static str),

    #[error("no session {0:?}")]
    UnknownSession(String),

    #[error("corrupt log at sequence {seq}: {reason}")]
    CorruptLog { seq: u64, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::Invalid(e) => e.code(),
            SessionError::UnknownBallot(_) => "unknown_ballot",
            SessionError::DuplicateInterpretation(_) => "duplicate_interpretation",
            SessionError::NotOpen(_) => "session_not_open",
            SessionError::UnknownSession(_) => "unknown_session",
            SessionError::CorruptLog { .. } => "corrupt_log",
            SessionError::Io(_) => "io_error",
        }
    }

    fn corrupt(seq: u64, reason: impl Into<String>) -> Self {
        SessionError::CorruptLog { seq, reason: reason.into() }
    }
}

impl From<std::io::Error> for SessionError {
    fn from(e: std::io::Error) -> Self {
        SessionError::Io(e.to_string())
    }
}

pub type SessionResult<T> = std::result::Result<T, SessionError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum SessionStatus {
    Open,
    Decided {
        decision: Decision,
    },
    /// A closed session keeps any decision it had reached.
    Closed {
        reason: String,
        decision: Option<Decision>,
    },
}

impl SessionStatus {
    pub fn name(&self) -> &'static str {
        match self {
            SessionStatus::Open => "open",
            SessionStatus::Decided { .. } => "decided",
            SessionStatus::Closed { .. } => "closed",
        }
    }
}

/// Schedule used for live sessions when none is given: ballots are
/// retrieved in batches of ten, while the rule is still evaluated after
/// every interpretation.
pub const DEFAULT_LIVE_SCHEDULE: EscalationSchedule = EscalationSchedule::FixedStep { step: 10 };

#[derive(Debug, Clone)]
pub struct AuditSession {
    id: String,
    params: AuditParams,
    manifest: BallotManifest,
    manifest_digest: String,
    rng: RngSpec,
    schedule: EscalationSchedule,
    permutation: PermutationStream,
    planned: Vec<String>,
    planned_index: HashMap<String, usize>,
    interpretations: Vec<Option<Interpretation>>,
    tally: TallySnapshot,
    current: Decision,
    status: SessionStatus,
    events: Vec<AuditEvent>,
}

/// One planned draw and how it was read so far.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawnBallot {
    pub ballot_id: String,
    /// A candidate id, `invalid`, or `pending`.
    pub interpretation: String,
}

/// Everything a client needs to render the audit's progress.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusView {
    pub session_id: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_reason: Option<String>,
    pub n: u64,
    pub d: u32,
    pub delta: Option<u32>,
    pub c: u64,
    pub risk_bound: Option<f64>,
    pub candidates: Vec<CandidateId>,
    pub schedule: EscalationSchedule,
    pub counts: IndexMap<CandidateId, u64>,
    pub invalid: u64,
    pub total_drawn: u64,
    pub leader: Option<CandidateId>,
    pub a: u64,
    pub b: u64,
    /// `(a - b)^2`
    pub statistic: u128,
    /// `c * (a + b)`
    pub threshold: u128,
    pub planned_total: u64,
    pub pending: Vec<String>,
    pub drawn: Vec<DrawnBallot>,
    pub cutover_threshold: f64,
    /// `total_drawn / (cutover_fraction * n)`
    pub cutover_progress: f64,
    pub decision: Decision,
    pub last_seq: u64,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

impl AuditSession {
    /// Opens a session with a fresh random id.
    pub fn create(
        params: AuditParams,
        manifest: &BallotManifest,
        rng: &SeededRng,
        schedule: EscalationSchedule,
    ) -> SessionResult<Self> {
        Self::create_with_id(uuid::Uuid::new_v4().to_string(), params, manifest, rng, schedule)
    }

    /// Opens a session and plans the initial sample.
    pub fn create_with_id(
        id: impl Into<String>,
        params: AuditParams,
        manifest: &BallotManifest,
        rng: &SeededRng,
        schedule: EscalationSchedule,
    ) -> SessionResult<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::param("session id must not be empty").into());
        }
        if manifest.len() as u64 != params.n() {
            return Err(
                Error::param(format!("manifest lists {} ballots but n = {}", manifest.len(), params.n())).into()
            );
        }
        schedule.validate()?;
        let created = EventKind::SessionCreated {
            session_id: id,
            params,
            manifest_digest: manifest.digest(),
            seed: RngSpec::from(rng),
            schedule,
            ballot_ids: manifest.ballot_ids().map(String::from).collect(),
        };
        let mut session = Self::from_created(AuditEvent { seq: 0, kind: created })?;
        let initial = session.params.initial_sample_size() as usize;
        let ids = session.peek_draws(initial);
        session.push(EventKind::DrawPlanned { ballot_ids: ids })?;
        Ok(session)
    }

    fn from_created(event: AuditEvent) -> SessionResult<Self> {
        let seq = event.seq;
        let EventKind::SessionCreated { session_id, params, manifest_digest, seed, schedule, ballot_ids } = &event.kind
        else {
            return Err(SessionError::corrupt(seq, "log must start with session_created"));
        };
        let manifest = BallotManifest::from_ids(ballot_ids.iter().cloned())
            .map_err(|e| SessionError::corrupt(seq, e.to_string()))?;
        if manifest.digest() != *manifest_digest {
            return Err(SessionError::corrupt(seq, "manifest digest mismatch"));
        }
        if manifest.len() as u64 != params.n() {
            return Err(SessionError::corrupt(seq, "manifest size differs from n"));
        }
        schedule.validate().map_err(|e| SessionError::corrupt(seq, e.to_string()))?;
        Ok(Self {
            id: session_id.clone(),
            params: params.clone(),
            permutation: PermutationStream::new(manifest.len(), SeededRng::from(*seed)),
            manifest,
            manifest_digest: manifest_digest.clone(),
            rng: *seed,
            schedule: *schedule,
            planned: Vec::new(),
            planned_index: HashMap::new(),
            interpretations: Vec::new(),
            tally: TallySnapshot::empty(params.candidates()),
            current: Decision::Continue,
            status: SessionStatus::Open,
            events: vec![event],
        })
    }

    /// The next `k` ballots of the session's permutation, without consuming them.
    fn peek_draws(&self, k: usize) -> Vec<String> {
        let k = k.min(self.permutation.remaining());
        self.permutation.clone().take(k).map(|i| self.manifest.entries()[i].ballot_id.clone()).collect()
    }

    /// Validates and appends one event.
    fn push(&mut self, kind: EventKind) -> SessionResult<()> {
        let seq = self.events.len() as u64;
        self.apply(seq, &kind)?;
        self.events.push(AuditEvent { seq, kind });
        Ok(())
    }

    fn apply(&mut self, seq: u64, kind: &EventKind) -> SessionResult<()> {
        let corrupt = |reason: String| SessionError::corrupt(seq, reason);
        match kind {
            EventKind::SessionCreated { .. } => return Err(corrupt("duplicate session_created".into())),
            EventKind::DrawPlanned { ballot_ids } => {
                if self.status != SessionStatus::Open {
                    return Err(corrupt("draw planned on a session that is not open".into()));
                }
                if ballot_ids.is_empty() {
                    return Err(corrupt("empty draw".into()));
                }
                if self.pending_count() > 0 {
                    return Err(corrupt("draw planned while earlier draws are pending".into()));
                }
                if ballot_ids.len() > self.permutation.remaining() {
                    return Err(corrupt("draw exceeds the manifest".into()));
                }
                let expected = self.peek_draws(ballot_ids.len());
                if &expected != ballot_ids {
                    return Err(corrupt("planned ballots do not follow the session permutation".into()));
                }
                for id in ballot_ids {
                    self.permutation.next();
                    self.planned_index.insert(id.clone(), self.planned.len());
                    self.planned.push(id.clone());
                    self.interpretations.push(None);
                }
            }
            EventKind::InterpretationRecorded { ballot_id, interpretation, .. } => {
                // Duplicates are reported before the session state, so a
                // retried final interpretation reads as a duplicate.
                let &idx =
                    self.planned_index.get(ballot_id).ok_or_else(|| SessionError::UnknownBallot(ballot_id.clone()))?;
                if self.interpretations[idx].is_some() {
                    return Err(SessionError::DuplicateInterpretation(ballot_id.clone()));
                }
                if self.status != SessionStatus::Open {
                    return Err(SessionError::NotOpen(self.status.name()));
                }
                if let Interpretation::Candidate(c) = interpretation {
                    if !self.params.is_candidate(c) {
                        return Err(Error::param(format!("{c:?} is not a candidate in this audit")).into());
                    }
                }
                let mut tally = self.tally.clone();
                tally.record(interpretation)?;
                let decision = decide(&tally, &self.params)?;
                self.tally = tally;
                self.interpretations[idx] = Some(interpretation.clone());
                self.current = decision;
            }
            EventKind::DecisionReached { decision } => {
                if self.status != SessionStatus::Open {
                    return Err(corrupt("decision reached on a session that is not open".into()));
                }
                if !decision.is_terminal() || *decision != self.current {
                    return Err(corrupt(format!(
                        "recorded decision {decision} differs from the tally's {}",
                        self.current
                    )));
                }
                self.status = SessionStatus::Decided { decision: decision.clone() };
            }
            EventKind::SessionClosed { reason } => {
                let decision = match &self.status {
                    SessionStatus::Open => None,
                    SessionStatus::Decided { decision } => Some(decision.clone()),
                    SessionStatus::Closed { .. } => return Err(corrupt("session closed twice".into())),
                };
                self.status = SessionStatus::Closed { reason: reason.clone(), decision };
            }
        }
        Ok(())
    }

    /// Records how one planned ballot was read and re-evaluates the audit.
    ///
    /// On a terminal decision the session becomes decided. Otherwise, once
    /// every planned ballot has been read, the next batch is planned.
    pub fn record_interpretation(
        &mut self,
        ballot_id: &str,
        interpretation: Interpretation,
    ) -> SessionResult<Decision> {
        self.record_interpretation_at(ballot_id, interpretation, now_ms())
    }

    pub fn record_interpretation_at(
        &mut self,
        ballot_id: &str,
        interpretation: Interpretation,
        timestamp_ms: u64,
    ) -> SessionResult<Decision> {
        self.push(EventKind::InterpretationRecorded {
            ballot_id: ballot_id.to_string(),
            interpretation,
            timestamp_ms,
        })?;
        self.settle()?;
        Ok(self.current.clone())
    }

    /// Appends whatever follows from the current state: a decision event
    /// for a terminal verdict, or the next draw when nothing is pending.
    /// A no-op on a consistent session; after [`replay`] of a log cut off
    /// between the events of one operation it completes that operation.
    pub fn settle(&mut self) -> SessionResult<()> {
        if self.status != SessionStatus::Open {
            return Ok(());
        }
        if self.current.is_terminal() {
            return self.push(EventKind::DecisionReached { decision: self.current.clone() });
        }
        if self.pending_count() == 0 && self.tally.total_drawn > 0 {
            self.plan_next_batch()?;
        }
        Ok(())
    }

    fn plan_next_batch(&mut self) -> SessionResult<Vec<String>> {
        let current = self.planned.len() as u64;
        let n = self.params.n();
        if current >= n {
            return Ok(Vec::new());
        }
        let next = next_sample_size(&self.schedule, current, n)?;
        let ids = self.peek_draws((next - current) as usize);
        self.push(EventKind::DrawPlanned { ballot_ids: ids.clone() })?;
        Ok(ids)
    }

    /// The ballots to retrieve next: the pending planned ballots, or a new
    /// batch when none are pending. Repeating the call returns the same ids.
    pub fn next_draws(&mut self) -> SessionResult<Vec<String>> {
        if self.status != SessionStatus::Open {
            return Err(SessionError::NotOpen(self.status.name()));
        }
        let pending = self.pending();
        if !pending.is_empty() {
            return Ok(pending);
        }
        self.plan_next_batch()
    }

    /// Closes the session. Closing a closed session is a no-op.
    pub fn close(&mut self, reason: impl Into<String>) -> SessionResult<()> {
        if matches!(self.status, SessionStatus::Closed { .. }) {
            return Ok(());
        }
        self.push(EventKind::SessionClosed { reason: reason.into() })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn params(&self) -> &AuditParams {
        &self.params
    }

    pub fn manifest_digest(&self) -> &str {
        &self.manifest_digest
    }

    pub fn rng(&self) -> RngSpec {
        self.rng
    }

    pub fn schedule(&self) -> EscalationSchedule {
        self.schedule
    }

    pub fn status(&self) -> &SessionStatus {
        &self.status
    }

    pub fn tally(&self) -> &TallySnapshot {
        &self.tally
    }

    pub fn events(&self) -> &[AuditEvent] {
        &self.events
    }

    pub fn planned(&self) -> &[String] {
        &self.planned
    }

    /// The standing decision: the recorded one once decided, otherwise the
    /// current evaluation of the tally.
    pub fn decision(&self) -> &Decision {
        match &self.status {
            SessionStatus::Decided { decision } => decision,
            SessionStatus::Closed { decision: Some(decision), .. } => decision,
            _ => &self.current,
        }
    }

    fn pending_count(&self) -> usize {
        self.interpretations.iter().filter(|i| i.is_none()).count()
    }

    pub fn pending(&self) -> Vec<String> {
        self.planned.iter().zip(&self.interpretations).filter(|(_, i)| i.is_none()).map(|(id, _)| id.clone()).collect()
    }

    pub fn status_view(&self) -> StatusView {
        let pair = reduce_to_pair(&self.tally).expect("params require two candidates");
        let stat = DiffSumStatistic::new(pair.a, pair.b, self.params.c());
        let cutover_threshold = self.params.cutover_threshold();
        StatusView {
            session_id: self.id.clone(),
            status: self.status.name().to_string(),
            closed_reason: match &self.status {
                SessionStatus::Closed { reason, .. } => Some(reason.clone()),
                _ => None,
            },
            n: self.params.n(),
            d: self.params.d(),
            delta: self.params.delta(),
            c: self.params.c(),
            risk_bound: self.params.risk_bound(),
            candidates: self.params.candidates().to_vec(),
            schedule: self.schedule,
            counts: self.tally.counts.clone(),
            invalid: self.tally.invalid(),
            total_drawn: self.tally.total_drawn,
            leader: (pair.a > 0).then_some(pair.winner),
            a: pair.a,
            b: pair.b,
            statistic: stat.statistic,
            threshold: stat.threshold,
            planned_total: self.planned.len() as u64,
            pending: self.pending(),
            drawn: self
                .planned
                .iter()
                .zip(&self.interpretations)
                .map(|(id, i)| DrawnBallot {
                    ballot_id: id.clone(),
                    interpretation: i.as_ref().map_or_else(|| "pending".to_string(), |i| i.to_string()),
                })
                .collect(),
            cutover_threshold,
            cutover_progress: self.tally.total_drawn as f64 / cutover_threshold,
            decision: self.decision().clone(),
            last_seq: self.events.len() as u64 - 1,
        }
    }
}

/// [`evaluate`], except that nothing but a full count can end the audit
/// before the initial sample has been read.
fn decide(tally: &TallySnapshot, params: &AuditParams) -> crate::Result<Decision> {
    let decision = evaluate(tally, params)?;
    if tally.total_drawn < params.initial_sample_size() && !matches!(decision, Decision::FullCountComplete { .. }) {
        return Ok(Decision::Continue);
    }
    Ok(decision)
}

/// Rebuilds a session from its event log. Sequence numbers must run
/// contiguously from 0 and every event must be a valid transition.
pub fn replay(events: &[AuditEvent]) -> SessionResult<AuditSession> {
    let (first, rest) = events.split_first().ok_or_else(|| SessionError::corrupt(0, "empty log"))?;
    if first.seq != 0 {
        return Err(SessionError::corrupt(0, format!("first event has sequence {}", first.seq)));
    }
    let mut session = AuditSession::from_created(first.clone())?;
    for event in rest {
        let expected = session.events.len() as u64;
        if event.seq != expected {
            return Err(SessionError::corrupt(expected, format!("expected sequence {expected}, found {}", event.seq)));
        }
        session.apply(event.seq, &event.kind).map_err(|e| match e {
            SessionError::CorruptLog { .. } => e,
            other => SessionError::corrupt(event.seq, other.to_string()),
        })?;
        session.events.push(event.clone());
    }
    Ok(session)
}
