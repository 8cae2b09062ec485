use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use vdconf_core::Session;

struct Slot {
    session: Session,
    last_used: Instant,
    /// Responses served so far; lets clients order snapshots.
    sequence: u64,
    evicted: bool,
}

/// Live sessions keyed by random token. Requests on one session are
/// serialized by its own lock; different sessions proceed in parallel.
pub struct SessionRegistry {
    sessions: Mutex<HashMap<String, Arc<Mutex<Slot>>>>,
    ttl: Duration,
}

impl SessionRegistry {
    pub fn new(ttl: Duration) -> Self {
        SessionRegistry {
            sessions: Mutex::new(HashMap::new()),
            ttl,
        }
    }

    pub fn insert(&self, session: Session) -> String {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let slot = Slot {
            session,
            last_used: Instant::now(),
            sequence: 0,
            evicted: false,
        };
        self.sessions
            .lock()
            .unwrap()
            .insert(id.clone(), Arc::new(Mutex::new(slot)));
        id
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Runs `f` under the session's lock with the next sequence number.
    /// `None` if the session does not exist (or was just evicted).
    pub fn with_session<R>(&self, id: &str, f: impl FnOnce(&mut Session, u64) -> R) -> Option<R> {
        let slot = self.sessions.lock().unwrap().get(id).cloned()?;
        let mut slot = slot.lock().unwrap();
        if slot.evicted {
            return None;
        }
        slot.last_used = Instant::now();
        slot.sequence += 1;
        let seq = slot.sequence;
        Some(f(&mut slot.session, seq))
    }

    pub fn remove(&self, id: &str) -> bool {
        let removed = self.sessions.lock().unwrap().remove(id);
        match removed {
            Some(slot) => {
                slot.lock().unwrap().evicted = true;
                true
            }
            None => false,
        }
    }

    /// Drops sessions idle for longer than the TTL as of `now`. Sessions
    /// currently serving a request are skipped.
    pub fn evict_idle(&self, now: Instant) -> usize {
        let mut sessions = self.sessions.lock().unwrap();
        let before = sessions.len();
        sessions.retain(|_, slot| {
            let Ok(mut slot) = slot.try_lock() else {
                return true;
            };
            if now.saturating_duration_since(slot.last_used) > self.ttl {
                slot.evicted = true;
                false
            } else {
                true
            }
        });
        before - sessions.len()
    }
}
