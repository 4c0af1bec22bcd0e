use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use super::engine::{EventRecord, Journal, Session, Snapshot};
use crate::{Error, Result};

const EVENTS_FILE: &str = "events.jsonl";
const SNAPSHOT_FILE: &str = "snapshot.json";

/// Directory of sessions, one subdirectory per session id holding an
/// append-only JSON-lines event log and an optional snapshot.
#[derive(Debug, Clone)]
pub struct FileStore {
    root: PathBuf,
}

impl FileStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn dir(&self, session_id: &str) -> Result<PathBuf> {
        let ok = !session_id.is_empty()
            && session_id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if !ok {
            return Err(Error::Domain(format!("session id {session_id:?} is not a safe file name")));
        }
        Ok(self.root.join(session_id))
    }

    pub fn exists(&self, session_id: &str) -> bool {
        self.dir(session_id).is_ok_and(|d| d.join(EVENTS_FILE).exists())
    }

    /// Journal appending to the session's event log.
    pub fn journal(&self, session_id: &str) -> Result<FileJournal> {
        let dir = self.dir(session_id)?;
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(FileJournal { dir })
    }

    pub fn load_events(&self, session_id: &str) -> Result<Vec<EventRecord>> {
        let path = self.dir(session_id)?.join(EVENTS_FILE);
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let lines: Vec<String> = BufReader::new(file)
            .lines()
            .collect::<std::io::Result<_>>()
            .map_err(|e| Error::io(&path, e))?;
        let mut events = Vec::with_capacity(lines.len());
        for (i, line) in lines.iter().enumerate() {
            match serde_json::from_str(line) {
                Ok(r) => events.push(r),
                // A torn final line is a write that was never acknowledged.
                Err(_) if i + 1 == lines.len() => break,
                Err(e) => {
                    return Err(Error::Parse(format!("{}:{}: {e}", path.display(), i + 1)));
                }
            }
        }
        Ok(events)
    }

    /// Reloads a session from its snapshot and event log.
    pub fn load(&self, session_id: &str) -> Result<Session> {
        let events = self.load_events(session_id)?;
        let snap_path = self.dir(session_id)?.join(SNAPSHOT_FILE);
        let snapshot = fs::read_to_string(&snap_path)
            .ok()
            .and_then(|t| serde_json::from_str::<Snapshot>(&t).ok());
        match snapshot {
            Some(s) => Session::from_snapshot(s, events),
            None => Session::replay(events),
        }
    }

    /// Ids of all stored sessions, sorted.
    pub fn list(&self) -> Result<Vec<String>> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.root).map_err(|e| Error::io(&self.root, e))? {
            let entry = entry.map_err(|e| Error::io(&self.root, e))?;
            if entry.path().join(EVENTS_FILE).exists() {
                ids.push(entry.file_name().to_string_lossy().into_owned());
            }
        }
        ids.sort();
        Ok(ids)
    }
}

/// Appends events with an fsync before returning.
#[derive(Debug, Clone)]
pub struct FileJournal {
    dir: PathBuf,
}

impl Journal for FileJournal {
    fn append(&mut self, records: &[EventRecord]) -> Result<()> {
        let path = self.dir.join(EVENTS_FILE);
        let mut buf = Vec::new();
        for r in records {
            serde_json::to_writer(&mut buf, r)?;
            buf.push(b'\n');
        }
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        f.write_all(&buf).map_err(|e| Error::io(&path, e))?;
        f.sync_data().map_err(|e| Error::io(&path, e))
    }

    fn snapshot(&mut self, snapshot: &Snapshot) -> Result<()> {
        let path = self.dir.join(SNAPSHOT_FILE);
        let tmp = self.dir.join("snapshot.json.tmp");
        let text = serde_json::to_vec(snapshot)?;
        let mut f = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(&text).map_err(|e| Error::io(&tmp, e))?;
        f.sync_data().map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }
}
