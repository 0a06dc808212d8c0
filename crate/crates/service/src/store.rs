//! In-memory sessions backed by one append-only JSONL file per session.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use asg_core::TaskKind;
use serde::{Deserialize, Serialize};

use crate::session::{HistoryEntry, Session, Status};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Created {
        id: String,
        task: TaskKind,
        model_id: String,
        seed: u64,
        created_ms: u64,
        request_id: Option<String>,
    },
    Entry(HistoryEntry),
    Status {
        status: Status,
        at_ms: u64,
        request_id: Option<String>,
    },
}

impl Event {
    /// Folds an event into `session`, creating it on `Created`.
    pub fn apply(self, session: &mut Option<Session>) {
        match (self, session) {
            (Event::Created { id, task, model_id, seed, created_ms, request_id }, s @ None) => {
                *s = Some(Session {
                    id,
                    task,
                    model_id,
                    seed,
                    status: Status::Active,
                    created_ms,
                    updated_ms: created_ms,
                    history: Vec::new(),
                    satisfied_request: None,
                    create_request: request_id,
                });
            }
            (Event::Entry(e), Some(s)) => {
                s.updated_ms = e.at_ms;
                s.history.push(e);
            }
            (Event::Status { status, at_ms, request_id }, Some(s)) => {
                s.status = status;
                if status == Status::Satisfied {
                    s.updated_ms = at_ms;
                    s.satisfied_request = request_id;
                }
            }
            (e, _) => log::warn!("ignoring out-of-order session event {e:?}"),
        }
    }
}

pub type SessionHandle = Arc<tokio::sync::Mutex<Session>>;

#[derive(Default)]
pub struct Store {
    dir: Option<PathBuf>,
    sessions: Mutex<HashMap<String, SessionHandle>>,
    by_request: Mutex<HashMap<String, String>>,
}

impl Store {
    /// Opens `dir` (created if missing) and loads every session in it.
    /// Without a directory sessions live in memory only.
    pub fn open(dir: Option<&Path>) -> std::io::Result<Self> {
        let store = Store { dir: dir.map(Path::to_path_buf), ..Default::default() };
        let Some(dir) = dir else { return Ok(store) };
        std::fs::create_dir_all(dir)?;
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        for path in paths {
            match load_session(&path) {
                Ok(Some(s)) if !s.history.is_empty() => store.put(s),
                Ok(_) => log::warn!("{}: no usable session", path.display()),
                Err(e) => log::warn!("{}: {e}", path.display()),
            }
        }
        Ok(store)
    }

    fn put(&self, s: Session) {
        if let Some(r) = &s.create_request {
            self.by_request.lock().unwrap().insert(r.clone(), s.id.clone());
        }
        self.sessions.lock().unwrap().insert(s.id.clone(), Arc::new(tokio::sync::Mutex::new(s)));
    }

    /// Persists the events that built `s` and registers it.
    pub fn create(&self, s: Session, events: &[Event]) -> std::io::Result<()> {
        for e in events {
            self.append(&s.id, e)?;
        }
        self.put(s);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<SessionHandle> {
        self.sessions.lock().unwrap().get(id).cloned()
    }

    pub fn by_request(&self, request_id: &str) -> Option<SessionHandle> {
        let id = self.by_request.lock().unwrap().get(request_id).cloned()?;
        self.get(&id)
    }

    pub fn handles(&self) -> Vec<SessionHandle> {
        self.sessions.lock().unwrap().values().cloned().collect()
    }

    pub fn append(&self, id: &str, event: &Event) -> std::io::Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let mut line = serde_json::to_string(event).map_err(std::io::Error::other)?;
        line.push('\n');
        let mut f = std::fs::OpenOptions::new().create(true).append(true).open(dir.join(format!("{id}.jsonl")))?;
        f.write_all(line.as_bytes())?;
        f.flush()
    }
}

/// Rebuilds a session from its event log. A torn final line is ignored.
pub fn load_session(path: &Path) -> std::io::Result<Option<Session>> {
    let mut session = None;
    for (i, line) in BufReader::new(std::fs::File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Event>(&line) {
            Ok(e) => e.apply(&mut session),
            Err(e) => log::warn!("{}:{}: {e}", path.display(), i + 1),
        }
    }
    Ok(session)
}
