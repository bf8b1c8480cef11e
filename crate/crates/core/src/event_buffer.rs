//! Recent pointer events, queried for deictic slot filling.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::page_model::ElementRole;

pub const DEFAULT_CAPACITY: usize = 256;
pub const DEFAULT_WINDOW_MS: i64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointerKind {
    Hover,
    Click,
}

/// One hover or click on a bound element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointerEvent {
    pub ts: i64,
    pub uuid: String,
    pub role: ElementRole,
    pub table_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub col_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_text: Option<String>,
    pub kind: PointerKind,
}

impl PointerEvent {
    /// Checks the per-role field requirements.
    pub fn validate(&self) -> Result<(), String> {
        match self.role {
            ElementRole::Cell
                if self.row_index.is_none() || self.col_index.is_none() || self.value_text.is_none() =>
            {
                Err("cell events need row_index, col_index and value_text".into())
            }
            ElementRole::Header if self.col_index.is_none() => Err("header events need col_index".into()),
            ElementRole::Row if self.row_index.is_none() => Err("row events need row_index".into()),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
struct Stored {
    seq: u64,
    event: PointerEvent,
}

/// Bounded buffer ordered by `(ts, arrival)`; the oldest arrival is evicted first.
///
/// A session owns its buffer exclusively: the receiver pushes and the parser
/// reads through the same serialized message loop, so no locking is needed.
#[derive(Debug, Clone)]
pub struct EventBuffer {
    events: VecDeque<Stored>,
    capacity: usize,
    window_ms: i64,
    next_seq: u64,
}

impl Default for EventBuffer {
    fn default() -> Self {
        Self::new(DEFAULT_CAPACITY, DEFAULT_WINDOW_MS)
    }
}

impl EventBuffer {
    pub fn new(capacity: usize, window_ms: i64) -> Self {
        assert!(capacity > 0, "buffer capacity must be positive");
        Self {
            events: VecDeque::with_capacity(capacity),
            capacity,
            window_ms,
            next_seq: 0,
        }
    }

    pub fn with_window(window_ms: i64) -> Self {
        Self::new(DEFAULT_CAPACITY, window_ms)
    }

    pub fn window_ms(&self) -> i64 {
        self.window_ms
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn clear(&mut self) {
        self.events.clear();
    }

    pub fn iter(&self) -> impl Iterator<Item = &PointerEvent> {
        self.events.iter().map(|s| &s.event)
    }

    /// Appends an event that the caller has already checked against its manifest.
    pub fn push_event(&mut self, event: PointerEvent) {
        if self.events.len() == self.capacity {
            self.events.pop_front();
        }
        self.events.push_back(Stored {
            seq: self.next_seq,
            event,
        });
        self.next_seq += 1;
    }

    /// Newest event (by timestamp, then arrival) passing every filter and no
    /// older than `max_age_ms` at `now`.
    pub fn most_recent(
        &self,
        roles: Option<&[ElementRole]>,
        table_id: Option<&str>,
        max_age_ms: i64,
        now: i64,
    ) -> Option<&PointerEvent> {
        self.events
            .iter()
            .filter(|s| roles.is_none_or(|r| r.contains(&s.event.role)))
            .filter(|s| table_id.is_none_or(|t| s.event.table_id == t))
            .filter(|s| now - s.event.ts <= max_age_ms)
            .max_by_key(|s| (s.event.ts, s.seq))
            .map(|s| &s.event)
    }

    /// [`most_recent`](Self::most_recent) with the buffer's own window.
    pub fn latest(&self, roles: &[ElementRole], table_id: Option<&str>, now: i64) -> Option<&PointerEvent> {
        self.most_recent(Some(roles), table_id, self.window_ms, now)
    }

    /// Drops events older than the window.
    pub fn prune(&mut self, now: i64) {
        let window = self.window_ms;
        self.events.retain(|s| now - s.event.ts <= window);
    }
}
