//! On-disk session persistence.
//!
//! Each session lives in `sessions/{id}/` under the data directory as an
//! append-only `events.jsonl` plus an occasional `snapshot.json`. Events are
//! fsynced before a mutation is acknowledged; snapshots only shorten
//! recovery and are written atomically (temp file, then rename).

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use semfeat_core::teach::{Action, Event, TeachingSession};
use semfeat_core::Corpus;

use crate::error::{AppError, Result};

pub const CORPUS_FILE: &str = "corpus.jsonl";
const SESSIONS: &str = "sessions";
const EVENTS: &str = "events.jsonl";
const SNAPSHOT: &str = "snapshot.json";
const MAX_ID_LEN: usize = 128;

/// Session ids double as directory names.
pub fn validate_session_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id.len() <= MAX_ID_LEN
        && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_');
    if ok {
        Ok(())
    } else {
        Err(AppError::BadRequest(format!(
            "session id {id:?} must be 1-{MAX_ID_LEN} characters of [A-Za-z0-9_-]"
        )))
    }
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
    snapshot_every: u64,
}

impl Store {
    /// Opens (creating if needed) a data directory and checks that it is
    /// writable.
    pub fn open(root: impl Into<PathBuf>, snapshot_every: u64) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(root.join(SESSIONS))?;
        let probe = root.join(".write-probe");
        File::create(&probe)?;
        fs::remove_file(&probe)?;
        Ok(Store {
            root,
            snapshot_every: snapshot_every.max(1),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.root.join(CORPUS_FILE)
    }

    fn dir(&self, id: &str) -> PathBuf {
        self.root.join(SESSIONS).join(id)
    }

    pub fn events_path(&self, id: &str) -> PathBuf {
        self.dir(id).join(EVENTS)
    }

    pub fn snapshot_path(&self, id: &str) -> PathBuf {
        self.dir(id).join(SNAPSHOT)
    }

    pub fn exists(&self, id: &str) -> bool {
        validate_session_id(id).is_ok() && self.events_path(id).is_file()
    }

    pub fn session_ids(&self) -> Result<Vec<String>> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(self.root.join(SESSIONS))? {
            let name = entry?.file_name().to_string_lossy().into_owned();
            if self.exists(&name) {
                ids.push(name);
            }
        }
        ids.sort();
        Ok(ids)
    }

    /// Persists a freshly created session. Fails if the id is taken.
    pub fn create(&self, session: &TeachingSession) -> Result<()> {
        validate_session_id(&session.id)?;
        let dir = self.dir(&session.id);
        fs::create_dir_all(&dir)?;
        sync_dir(&self.root.join(SESSIONS))?;
        // Creating the log exclusively is what claims the id.
        let mut file = match OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(self.events_path(&session.id))
        {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                return Err(AppError::SessionExists(session.id.clone()));
            }
            Err(e) => return Err(e.into()),
        };
        file.write_all(&encode(&session.events)?)?;
        file.sync_data()?;
        sync_dir(&dir)?;
        Ok(())
    }

    /// Appends events durably.
    pub fn append(&self, id: &str, events: &[Event]) -> Result<()> {
        if events.is_empty() {
            return Ok(());
        }
        let mut file = OpenOptions::new().append(true).open(self.events_path(id))?;
        file.write_all(&encode(events)?)?;
        file.sync_data()?;
        Ok(())
    }

    pub fn write_snapshot(&self, session: &TeachingSession) -> Result<()> {
        let path = self.snapshot_path(&session.id);
        let tmp = path.with_extension("json.tmp");
        let mut file = File::create(&tmp)?;
        file.write_all(session.snapshot()?.as_bytes())?;
        file.sync_all()?;
        fs::rename(&tmp, &path)?;
        sync_dir(&self.dir(&session.id))?;
        Ok(())
    }

    /// Writes the events a mutation added (those from `from_seq` on), and a
    /// snapshot when one is due. Only the event append decides success; a
    /// failed snapshot is reported on stderr and retried next time.
    pub fn persist(&self, session: &TeachingSession, from_seq: u64) -> Result<()> {
        let new = &session.events[from_seq as usize..];
        self.append(&session.id, new)?;
        let due = new.iter().any(|e| {
            (e.seq + 1) % self.snapshot_every == 0
                || matches!(
                    e.action,
                    Action::TrainContext { .. } | Action::Retrain { .. }
                )
        });
        if due {
            if let Err(e) = self.write_snapshot(session) {
                eprintln!("warning: snapshot of session {:?} failed: {e}", session.id);
            }
        }
        Ok(())
    }

    /// Recovers a session: the latest snapshot, then the events logged
    /// after it. A torn final log line (an append cut short by a crash,
    /// never acknowledged) is discarded and trimmed from the file.
    pub fn load(&self, corpus: &Corpus, id: &str) -> Result<TeachingSession> {
        if !self.exists(id) {
            return Err(AppError::UnknownSession(id.to_string()));
        }
        let events = self.read_log(id)?;
        let snapshot = match fs::read_to_string(self.snapshot_path(id)) {
            Ok(json) => match TeachingSession::from_snapshot(&json) {
                Ok(s) => Some(s),
                Err(e) => {
                    eprintln!("warning: ignoring unreadable snapshot of {id:?}: {e}");
                    None
                }
            },
            Err(e) if e.kind() == io::ErrorKind::NotFound => None,
            Err(e) => return Err(e.into()),
        };
        let base = snapshot.filter(|s| {
            let n = s.events.len();
            n <= events.len() && s.events[..] == events[..n]
        });
        let session = match base {
            Some(mut s) => {
                for e in events[s.events.len()..].iter().cloned() {
                    s.apply(corpus, e)?;
                }
                s
            }
            None => TeachingSession::replay(corpus, events)?,
        };
        if session.id != id {
            return Err(AppError::BadRequest(format!(
                "log of {id:?} belongs to session {:?}",
                session.id
            )));
        }
        Ok(session)
    }

    fn read_log(&self, id: &str) -> Result<Vec<Event>> {
        let path = self.events_path(id);
        let bytes = fs::read(&path)?;
        let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        if complete < bytes.len() {
            eprintln!(
                "warning: dropping {} bytes of torn log tail in {}",
                bytes.len() - complete,
                path.display()
            );
            let file = OpenOptions::new().write(true).open(&path)?;
            file.set_len(complete as u64)?;
            file.sync_data()?;
        }
        let mut events = Vec::new();
        for (n, line) in bytes[..complete].split(|&b| b == b'\n').enumerate() {
            if line.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            let event = serde_json::from_slice(line).map_err(|e| {
                AppError::Core(semfeat_core::Error::MalformedRecord {
                    line: n + 1,
                    message: format!("{}: {e}", path.display()),
                })
            })?;
            events.push(event);
        }
        Ok(events)
    }
}

fn encode(events: &[Event]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for e in events {
        serde_json::to_writer(&mut buf, e)?;
        buf.push(b'\n');
    }
    Ok(buf)
}

fn sync_dir(dir: &Path) -> io::Result<()> {
    // Makes creates and renames durable. Platforms that cannot open a
    // directory for syncing skip it.
    match File::open(dir) {
        Ok(d) => d.sync_all(),
        Err(_) => Ok(()),
    }
}
