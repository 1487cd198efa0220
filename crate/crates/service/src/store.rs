//! In-memory session store with LRU eviction and an optional JSON snapshot.

use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use glyphplan_core::session::{Session, SessionState};
use indexmap::IndexMap;
use thiserror::Error;

/// One stored session. `edit` serializes commands; `state` is replaced
/// wholesale after each command so readers never see a partial edit.
pub struct SessionSlot {
    pub edit: Mutex<()>,
    pub state: RwLock<Session>,
}

impl SessionSlot {
    fn new(session: Session) -> Self {
        Self { edit: Mutex::new(()), state: RwLock::new(session) }
    }

    pub fn snapshot(&self) -> Session {
        self.state.read().expect("session lock poisoned").clone()
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("session store capacity must be positive")]
    ZeroCapacity,
    #[error("snapshot {path}: {message}")]
    Snapshot { path: String, message: String },
}

pub struct SessionStore {
    capacity: usize,
    // Least recently used first.
    slots: Mutex<IndexMap<String, Arc<SessionSlot>>>,
    snapshot: Option<PathBuf>,
    snapshot_lock: Mutex<()>,
}

impl SessionStore {
    pub fn new(capacity: usize, snapshot: Option<PathBuf>) -> Result<Self, StoreError> {
        if capacity == 0 {
            return Err(StoreError::ZeroCapacity);
        }
        let store = Self { capacity, slots: Mutex::new(IndexMap::new()), snapshot, snapshot_lock: Mutex::new(()) };
        if let Some(path) = store.snapshot.clone() {
            if path.exists() {
                for session in load_snapshot(&path)? {
                    store.insert(session);
                }
            }
        }
        Ok(store)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.slots.lock().expect("store lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stores `session`, evicting the least recently used one at capacity.
    pub fn insert(&self, session: Session) -> Arc<SessionSlot> {
        let id = session.id().to_string();
        let slot = Arc::new(SessionSlot::new(session));
        let mut slots = self.slots.lock().expect("store lock poisoned");
        slots.shift_remove(&id);
        while slots.len() >= self.capacity {
            slots.shift_remove_index(0);
        }
        slots.insert(id, slot.clone());
        slot
    }

    /// Looks up a session and marks it most recently used.
    pub fn get(&self, id: &str) -> Option<Arc<SessionSlot>> {
        let mut slots = self.slots.lock().expect("store lock poisoned");
        let index = slots.get_index_of(id)?;
        let last = slots.len() - 1;
        slots.move_index(index, last);
        slots.get(id).cloned()
    }

    /// Writes every session to the snapshot file, if one is configured.
    /// The file is replaced atomically.
    pub fn persist(&self) -> Result<(), StoreError> {
        let Some(path) = &self.snapshot else {
            return Ok(());
        };
        let _guard = self.snapshot_lock.lock().expect("snapshot lock poisoned");
        let slots: Vec<Arc<SessionSlot>> = self.slots.lock().expect("store lock poisoned").values().cloned().collect();
        let snapshot_error = |message: String| StoreError::Snapshot { path: path.display().to_string(), message };
        let states = slots
            .iter()
            .map(|s| s.snapshot().to_state().map_err(|e| snapshot_error(e.to_string())))
            .collect::<Result<Vec<SessionState>, _>>()?;
        let json = serde_json::to_string(&states).map_err(|e| snapshot_error(e.to_string()))?;
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, json).map_err(|e| snapshot_error(e.to_string()))?;
        std::fs::rename(&tmp, path).map_err(|e| snapshot_error(e.to_string()))
    }
}

fn load_snapshot(path: &Path) -> Result<Vec<Session>, StoreError> {
    let snapshot_error = |message: String| StoreError::Snapshot { path: path.display().to_string(), message };
    let text = std::fs::read_to_string(path).map_err(|e| snapshot_error(e.to_string()))?;
    let states: Vec<SessionState> = serde_json::from_str(&text).map_err(|e| snapshot_error(e.to_string()))?;
    states.iter().map(|s| Session::from_state(s).map_err(snapshot_error)).collect()
}
