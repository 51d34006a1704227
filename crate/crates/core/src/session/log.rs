use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use super::{AuditEvent, SessionError, SessionResult};

/// Serializes events as JSON lines.
pub fn write_events<W: Write>(events: &[AuditEvent], mut writer: W) -> std::io::Result<()> {
    for event in events {
        serde_json::to_writer(&mut writer, event)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Parses a JSON-lines event log. Blank lines are skipped.
pub fn parse_events<R: BufRead>(reader: R) -> SessionResult<Vec<AuditEvent>> {
    let mut events = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event: AuditEvent = serde_json::from_str(&line).map_err(|e| SessionError::CorruptLog {
            seq: events.len() as u64,
            reason: format!("unparseable event: {e}"),
        })?;
        events.push(event);
    }
    Ok(events)
}

pub fn read_log(path: impl AsRef<Path>) -> SessionResult<Vec<AuditEvent>> {
    parse_events(BufReader::new(File::open(path)?))
}

/// An append-only session log on disk.
#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
}

impl EventLog {
    /// Creates a new log; fails if the file exists.
    pub fn create(path: impl Into<PathBuf>) -> std::io::Result<Self> {
        let path = path.into();
        let file = OpenOptions::new().append(true).create_new(true).open(&path)?;
        Ok(Self { path, file })
    }

    pub fn open_append(path: impl Into<PathBuf>) -> std::io::Result<Self> {
        let path = path.into();
        let file = OpenOptions::new().append(true).open(&path)?;
        Ok(Self { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends `events` in a single write, syncing to disk when one of them
    /// is a decision or a close.
    pub fn append(&mut self, events: &[AuditEvent]) -> std::io::Result<()> {
        if events.is_empty() {
            return Ok(());
        }
        let mut buf = Vec::new();
        write_events(events, &mut buf)?;
        self.file.write_all(&buf)?;
        self.file.flush()?;
        if events.iter().any(|e| e.kind.is_durable_point()) {
            self.file.sync_data()?;
        }
        Ok(())
    }

    pub fn sync(&self) -> std::io::Result<()> {
        self.file.sync_all()
    }
}
