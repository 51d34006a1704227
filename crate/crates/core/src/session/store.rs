use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use super::{read_log, replay, AuditSession, EventLog, SessionError, SessionResult};
use crate::audit::AuditParams;
use crate::sampling::{BallotManifest, EscalationSchedule, SeededRng};

pub const LOG_EXTENSION: &str = "jsonl";

struct LiveSession {
    session: AuditSession,
    log: EventLog,
}

/// Summary returned when a session is opened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreatedSession {
    pub session_id: String,
    pub planned_draws: Vec<String>,
    pub n: u64,
    pub d: u32,
    pub delta: Option<u32>,
    pub c: u64,
    pub risk_bound: Option<f64>,
}

/// Sessions persisted as one JSON-lines log per session in a directory.
///
/// Each session sits behind its own mutex, so writes to one session are
/// serialized while different sessions proceed independently. Every
/// mutation's new events reach the log before the call returns.
pub struct SessionStore {
    dir: PathBuf,
    sessions: RwLock<HashMap<String, Arc<Mutex<LiveSession>>>>,
}

impl SessionStore {
    /// Opens `dir`, creating it if needed, and restores every session log
    /// found there.
    pub fn open(dir: impl Into<PathBuf>) -> SessionResult<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        let mut sessions = HashMap::new();
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == LOG_EXTENSION))
            .collect();
        paths.sort();
        for path in paths {
            let live = Self::restore(&path)?;
            tracing::info!(session = live.session.id(), path = %path.display(), "restored session");
            sessions.insert(live.session.id().to_string(), Arc::new(Mutex::new(live)));
        }
        Ok(Self { dir, sessions: RwLock::new(sessions) })
    }

    fn restore(path: &Path) -> SessionResult<LiveSession> {
        let events = read_log(path)?;
        let mut session = replay(&events)?;
        let before = session.events().len();
        session.settle()?;
        let mut log = EventLog::open_append(path)?;
        log.append(&session.events()[before..])?;
        Ok(LiveSession { session, log })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn log_path(&self, session_id: &str) -> PathBuf {
        self.dir.join(format!("{session_id}.{LOG_EXTENSION}"))
    }

    pub fn create(
        &self,
        params: AuditParams,
        manifest: &BallotManifest,
        rng: &SeededRng,
        schedule: EscalationSchedule,
    ) -> SessionResult<CreatedSession> {
        let session = AuditSession::create(params, manifest, rng, schedule)?;
        let mut log = EventLog::create(self.log_path(session.id()))?;
        log.append(session.events())?;
        let created = CreatedSession {
            session_id: session.id().to_string(),
            planned_draws: session.pending(),
            n: session.params().n(),
            d: session.params().d(),
            delta: session.params().delta(),
            c: session.params().c(),
            risk_bound: session.params().risk_bound(),
        };
        self.sessions
            .write()
            .expect("session map poisoned")
            .insert(created.session_id.clone(), Arc::new(Mutex::new(LiveSession { session, log })));
        Ok(created)
    }

    fn get(&self, id: &str) -> SessionResult<Arc<Mutex<LiveSession>>> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownSession(id.to_string()))
    }

    /// Runs a mutation and persists the events it produced. Operations leave
    /// the session untouched when they fail; if persisting fails, the
    /// session is reloaded from its log.
    pub fn update<R>(&self, id: &str, op: impl FnOnce(&mut AuditSession) -> SessionResult<R>) -> SessionResult<R> {
        let entry = self.get(id)?;
        let mut live = entry.lock().expect("session poisoned");
        let before = live.session.events().len();
        let result = op(&mut live.session)?;
        let LiveSession { session, log } = &mut *live;
        if let Err(e) = log.append(&session.events()[before..]) {
            tracing::error!(session = id, error = %e, "log append failed; reloading");
            let path = log.path().to_path_buf();
            *live = Self::restore(&path)?;
            return Err(e.into());
        }
        Ok(result)
    }

    /// Reads a consistent snapshot of one session.
    pub fn read<R>(&self, id: &str, f: impl FnOnce(&AuditSession) -> R) -> SessionResult<R> {
        let entry = self.get(id)?;
        let live = entry.lock().expect("session poisoned");
        Ok(f(&live.session))
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().expect("session map poisoned").keys().cloned().collect();
        ids.sort();
        ids
    }

    /// Syncs every log to disk.
    pub fn flush_all(&self) -> SessionResult<()> {
        for entry in self.sessions.read().expect("session map poisoned").values() {
            entry.lock().expect("session poisoned").log.sync()?;
        }
        Ok(())
    }
}
