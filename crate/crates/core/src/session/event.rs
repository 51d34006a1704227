use serde::{Deserialize, Serialize};

use crate::audit::{AuditParams, Decision, Interpretation};
use crate::sampling::{EscalationSchedule, RngSpec};

/// One entry of a session's append-only log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEvent {
    pub seq: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    /// Carries the full ballot-id list so a log alone is enough to rebuild
    /// the session; `manifest_digest` detects a substituted manifest.
    SessionCreated {
        session_id: String,
        params: AuditParams,
        manifest_digest: String,
        seed: RngSpec,
        schedule: EscalationSchedule,
        ballot_ids: Vec<String>,
    },
    DrawPlanned {
        ballot_ids: Vec<String>,
    },
    InterpretationRecorded {
        ballot_id: String,
        interpretation: Interpretation,
        timestamp_ms: u64,
    },
    DecisionReached {
        decision: Decision,
    },
    SessionClosed {
        reason: String,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::SessionCreated { .. } => "session_created",
            EventKind::DrawPlanned { .. } => "draw_planned",
            EventKind::InterpretationRecorded { .. } => "interpretation_recorded",
            EventKind::DecisionReached { .. } => "decision_reached",
            EventKind::SessionClosed { .. } => "session_closed",
        }
    }

    /// Events after which the log is synced to disk.
    pub fn is_durable_point(&self) -> bool {
        matches!(self, EventKind::DecisionReached { .. } | EventKind::SessionClosed { .. })
    }
}
