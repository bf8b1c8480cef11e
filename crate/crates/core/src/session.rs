//! Per-connection state and the parse, resolve, execute, respond pipeline.

use std::collections::VecDeque;

use crate::command::{
    build_command, resolve_columns, resolve_deixis, select_table, ColumnResolution, Command, CommandError,
    Grammar, DEFAULT_WAKE_WORD,
};
use crate::engine::{execute, Outcome};
use crate::event_buffer::{EventBuffer, PointerEvent, DEFAULT_WINDOW_MS};
use crate::ids::IdGen;
use crate::page_model::{
    build_binding_manifest, parse_page_with, rebind_snapshot, BindingManifest, PageModel, PageSnapshot,
};
use crate::protocol::{ClientMessage, ServerMessage};
use crate::responder::{
    compose_clarification, compose_disambiguation, respond, speak_command_error, speak_engine_error, Response,
    HELP_TEXT,
};
use crate::vocabulary::{resolve_column, ResolutionResult, SharedDictionary};

/// At most this many clarification prompts are outstanding per session.
pub const MAX_OUTSTANDING_CLARIFICATIONS: usize = 3;

/// Settings shared by every session of one engine.
#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub deixis_window_ms: i64,
    pub wake_word: String,
    pub dictionary: SharedDictionary,
    /// Seed for element identifiers; `None` draws from the OS.
    pub id_seed: Option<u64>,
}

impl EngineConfig {
    pub fn new(dictionary: SharedDictionary) -> Self {
        Self {
            deixis_window_ms: DEFAULT_WINDOW_MS,
            wake_word: DEFAULT_WAKE_WORD.to_string(),
            dictionary,
            id_seed: None,
        }
    }
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self::new(SharedDictionary::default())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PendingClarification {
    pub prompt_id: String,
    pub table_id: String,
    pub column: usize,
    pub raw_label: String,
    pub prompt: String,
}

/// Everything produced for one utterance.
#[derive(Debug, Clone)]
pub struct UtteranceResult {
    pub response: Response,
    pub command: Option<Command>,
    pub outcome: Option<Outcome>,
    pub error: Option<CommandError>,
}

impl UtteranceResult {
    fn spoken(text: impl Into<String>) -> Self {
        Self {
            response: Response::speech(text),
            command: None,
            outcome: None,
            error: None,
        }
    }

    fn failed(err: CommandError) -> Self {
        Self {
            response: Response::speech(speak_command_error(&err)),
            command: None,
            outcome: None,
            error: Some(err),
        }
    }
}

pub struct Session {
    session_id: String,
    config: EngineConfig,
    grammar: Grammar,
    ids: IdGen,
    model: Option<PageModel>,
    manifest: Option<BindingManifest>,
    buffer: EventBuffer,
    outstanding: VecDeque<PendingClarification>,
    backlog: VecDeque<PendingClarification>,
    seq: u64,
    snapshots: u64,
    prompts: u64,
}

impl Session {
    pub fn new(session_id: impl Into<String>, config: EngineConfig) -> Self {
        let ids = match config.id_seed {
            Some(seed) => IdGen::seeded(seed),
            None => IdGen::from_entropy(),
        };
        Self {
            session_id: session_id.into(),
            grammar: Grammar::new(&config.wake_word),
            buffer: EventBuffer::with_window(config.deixis_window_ms),
            config,
            ids,
            model: None,
            manifest: None,
            outstanding: VecDeque::new(),
            backlog: VecDeque::new(),
            seq: 0,
            snapshots: 0,
            prompts: 0,
        }
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn model(&self) -> Option<&PageModel> {
        self.model.as_ref()
    }

    pub fn manifest(&self) -> Option<&BindingManifest> {
        self.manifest.as_ref()
    }

    pub fn buffer(&self) -> &EventBuffer {
        &self.buffer
    }

    pub fn outstanding_clarifications(&self) -> impl Iterator<Item = &PendingClarification> {
        self.outstanding.iter()
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// Processes one inbound message; replies carry its sequence number.
    pub fn handle(&mut self, message: ClientMessage, now: i64) -> Vec<ServerMessage> {
        self.seq += 1;
        let seq = self.seq;
        match message {
            ClientMessage::Register { url, html } => self.handle_register(&url, &html, now, seq),
            ClientMessage::Mutation { html } => self.handle_mutation(&html, now, seq),
            ClientMessage::Pointer(event) => {
                self.handle_pointer(event);
                Vec::new()
            }
            ClientMessage::Utterance { text, ts } => {
                let result = self.handle_utterance(&text, ts.unwrap_or(now));
                let r = result.response;
                vec![ServerMessage::Response {
                    speech: r.speech,
                    page_html: r.page_html,
                    patch: r.patch,
                    command: result.command.map(|c| c.to_json()),
                    seq,
                }]
            }
        }
    }

    /// Replies to input that could not be decoded, keeping the sequence in step.
    pub fn reject(&mut self, reason: &str) -> ServerMessage {
        self.seq += 1;
        ServerMessage::Response {
            speech: format!("I couldn't read that message: {reason}"),
            page_html: None,
            patch: None,
            command: None,
            seq: self.seq,
        }
    }

    fn next_snapshot_id(&mut self) -> String {
        self.snapshots += 1;
        format!("{}-s{}", self.session_id, self.snapshots)
    }

    fn response(speech: String, seq: u64) -> ServerMessage {
        ServerMessage::Response {
            speech,
            page_html: None,
            patch: None,
            command: None,
            seq,
        }
    }

    pub fn handle_register(&mut self, url: &str, html: &str, now: i64, seq: u64) -> Vec<ServerMessage> {
        let id = self.next_snapshot_id();
        let snapshot = match PageSnapshot::new(&id, url, html, now) {
            Ok(s) => s,
            Err(e) => return vec![Self::response(format!("I couldn't register that page: {e}."), seq)],
        };
        self.buffer.clear();
        self.outstanding.clear();
        self.backlog.clear();
        let mut model = parse_page_with(&snapshot, &mut self.ids);
        self.resolve_vocabulary(&mut model);
        let manifest = build_binding_manifest(&model);
        let no_tables = model.tables.is_empty();

        self.model = Some(model);
        self.manifest = Some(manifest.clone());

        let mut out = vec![ServerMessage::Manifest {
            snapshot_id: manifest.snapshot_id,
            entries: manifest.entries,
            seq,
        }];
        if no_tables {
            out.push(Self::response("I don't see a table on this page.".to_string(), seq));
        }
        out.extend(self.queue_clarifications(seq));
        out
    }

    pub fn handle_mutation(&mut self, html: &str, now: i64, seq: u64) -> Vec<ServerMessage> {
        let Some(url) = self.model.as_ref().map(|m| m.url.clone()) else {
            return vec![Self::response("Register the page before sending changes.".to_string(), seq)];
        };
        let id = self.next_snapshot_id();
        let snapshot = match PageSnapshot::new(&id, &url, html, now) {
            Ok(s) => s,
            Err(e) => return vec![Self::response(format!("I couldn't read that change: {e}."), seq)],
        };
        let old = self.model.take().expect("model present");
        let (mut model, manifest) = rebind_snapshot(&old, &snapshot, &mut self.ids);
        self.resolve_vocabulary(&mut model);
        let previous = self.manifest.take().unwrap_or_default();
        let diff = previous.diff(&manifest);

        let known = &manifest;
        let retained: Vec<PointerEvent> = self
            .buffer
            .iter()
            .filter(|e| known.contains_uuid(&e.uuid))
            .cloned()
            .collect();
        self.buffer.clear();
        for e in retained {
            self.buffer.push_event(e);
        }

        self.outstanding.retain(|p| still_unresolved(&model, p));
        self.backlog.retain(|p| still_unresolved(&model, p));
        self.model = Some(model);
        self.manifest = Some(manifest.clone());

        let mut out = vec![ServerMessage::ManifestDiff {
            snapshot_id: manifest.snapshot_id,
            add: diff.add,
            remove: diff.remove,
            seq,
        }];
        out.extend(self.queue_clarifications(seq));
        out
    }

    /// Buffers a pointer event if it names an element of the current manifest.
    pub fn handle_pointer(&mut self, event: PointerEvent) -> bool {
        let Some(manifest) = &self.manifest else {
            return false;
        };
        if event.validate().is_err() {
            return false;
        }
        let bound = manifest.entries.iter().any(|m| {
            m.uuid == event.uuid
                && m.role == event.role
                && m.table_id == event.table_id
                && (m.row_index.is_none() || m.row_index == event.row_index)
                && (m.col_index.is_none() || m.col_index == event.col_index)
        });
        if bound {
            self.buffer.push_event(event);
        } else {
            log::debug!("dropping pointer event for unbound element {}", event.uuid);
        }
        bound
    }

    pub fn handle_utterance(&mut self, text: &str, now: i64) -> UtteranceResult {
        let trimmed = text.trim().trim_end_matches(['.', '?', '!']);
        if trimmed.eq_ignore_ascii_case("help") {
            return UtteranceResult::spoken(HELP_TEXT);
        }
        let Some(model) = self.model.as_ref() else {
            return UtteranceResult::spoken("Open a page with a table first.");
        };
        let intent = match self.grammar.classify(text) {
            Ok((intent, _)) => intent,
            Err(e) => return UtteranceResult::failed(e),
        };
        let frame = self.grammar.extract(text, intent);
        let Some(table) = select_table(model, &self.buffer, now) else {
            return UtteranceResult::failed(CommandError::NoTable);
        };

        let dictionary = self.config.dictionary.snapshot();
        let frame = match resolve_columns(frame, table, &dictionary, &model.host) {
            Ok(ColumnResolution::Ready(f)) => f,
            Ok(ColumnResolution::Clarify(u)) => {
                let names: Vec<String> = u.candidates.iter().map(|c| c.1.clone()).collect();
                let mut r = UtteranceResult::spoken(compose_disambiguation(&u.term, &names));
                r.outcome = Some(Outcome::NeedsClarification {
                    prompt_id: format!("term:{}", u.term),
                });
                return r;
            }
            Err(e) => return UtteranceResult::failed(e),
        };
        let frame = match resolve_deixis(frame, table, &self.buffer, now) {
            Ok(f) => f,
            Err(e) => return UtteranceResult::failed(e),
        };
        let command = match build_command(&frame, &table.table_id) {
            Ok(c) => c,
            Err(e) => return UtteranceResult::failed(e),
        };
        let host = model.host.clone();
        let outcome = match execute(&command, table, &self.config.dictionary, &host) {
            Ok(o) => o,
            Err(e) => {
                return UtteranceResult {
                    response: Response::speech(speak_engine_error(&e)),
                    command: Some(command),
                    outcome: None,
                    error: None,
                }
            }
        };

        let mut response = respond(&outcome);
        if let Outcome::Ack { .. } = outcome {
            let mut model = self.model.take().expect("model present");
            self.resolve_vocabulary(&mut model);
            self.outstanding.retain(|p| still_unresolved(&model, p));
            self.backlog.retain(|p| still_unresolved(&model, p));
            self.model = Some(model);
            if let Some(ServerMessage::Clarification { prompt_id, prompt, .. }) =
                self.queue_clarifications(self.seq).into_iter().next()
            {
                response.clarification = Some(crate::responder::Clarification { prompt_id, prompt });
            }
        }
        UtteranceResult {
            response,
            command: Some(command),
            outcome: Some(outcome),
            error: None,
        }
    }

    /// Sets each column's term from the dictionary and hints, queueing
    /// prompts for labels that stay unresolved.
    fn resolve_vocabulary(&mut self, model: &mut PageModel) {
        let host = model.host.clone();
        let mut pending = Vec::new();
        self.config.dictionary.read(|dict| {
            for table in &mut model.tables {
                for col in &mut table.columns {
                    match resolve_column(col, dict, &host) {
                        ResolutionResult::Resolved { term, .. } => col.resolved_term = Some(term),
                        other => {
                            col.resolved_term = None;
                            let candidates = match other {
                                ResolutionResult::Ambiguous { candidates } => {
                                    candidates.into_iter().map(|c| c.0).collect()
                                }
                                _ => Vec::new(),
                            };
                            pending.push((table.table_id.clone(), col.index, col.raw_label.clone(), candidates));
                        }
                    }
                }
            }
        });
        for (table_id, column, raw_label, candidates) in pending {
            let known = self
                .outstanding
                .iter()
                .chain(self.backlog.iter())
                .any(|p| p.raw_label == raw_label);
            if known || raw_label.trim().is_empty() {
                continue;
            }
            self.prompts += 1;
            self.backlog.push_back(PendingClarification {
                prompt_id: format!("{}-p{}", self.session_id, self.prompts),
                table_id,
                column,
                prompt: compose_clarification(&raw_label, &candidates),
                raw_label,
            });
        }
    }

    /// Moves backlog prompts into the outstanding queue while there is room.
    fn queue_clarifications(&mut self, seq: u64) -> Vec<ServerMessage> {
        let mut out = Vec::new();
        while self.outstanding.len() < MAX_OUTSTANDING_CLARIFICATIONS {
            let Some(p) = self.backlog.pop_front() else { break };
            out.push(ServerMessage::Clarification {
                prompt_id: p.prompt_id.clone(),
                prompt: p.prompt.clone(),
                seq,
            });
            self.outstanding.push_back(p);
        }
        out
    }
}

fn still_unresolved(model: &PageModel, p: &PendingClarification) -> bool {
    model
        .tables
        .iter()
        .flat_map(|t| t.columns.iter())
        .any(|c| c.raw_label == p.raw_label && c.resolved_term.is_none())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::command::Slot;
    use crate::event_buffer::PointerKind;
    use crate::page_model::ElementRole;

    const PAGE: &str = r#"<table><thead><tr><th>NAME</th><th title="Appearances">APP</th><th>A</th><th>GS</th><th>XR</th><th>QQ</th></tr></thead>
        <tbody><tr><td>Ann</td><td>35</td><td>2</td><td>1</td><td>1</td><td>1</td></tr>
        <tr><td>Bea</td><td>40</td><td>5</td><td>1</td><td>1</td><td>1</td></tr></tbody></table>"#;

    fn session() -> Session {
        Session::new(
            "t",
            EngineConfig {
                id_seed: Some(11),
                ..EngineConfig::default()
            },
        )
    }

    fn register(s: &mut Session, html: &str) -> Vec<ServerMessage> {
        s.handle(
            ClientMessage::Register {
                url: "http://stats.example.org/team".into(),
                html: html.into(),
            },
            0,
        )
    }

    fn header_event(s: &Session, col: usize, ts: i64) -> PointerEvent {
        let t = &s.model().unwrap().tables[0];
        PointerEvent {
            ts,
            uuid: t.columns[col].header_uuid.clone(),
            role: ElementRole::Header,
            table_id: t.table_id.clone(),
            row_index: None,
            col_index: Some(col),
            value_text: None,
            kind: PointerKind::Hover,
        }
    }

    #[test]
    fn queue_caps_at_three() {
        let mut s = session();
        let out = register(&mut s, PAGE);
        let prompts = out
            .iter()
            .filter(|m| matches!(m, ServerMessage::Clarification { .. }))
            .count();
        assert_eq!(prompts, 3);
        assert_eq!(s.outstanding_clarifications().count(), 3);
        assert_eq!(s.backlog.len(), 1);
        assert!(out.iter().all(|m| m.seq() == 1));
    }

    #[test]
    fn define_frees_a_slot() {
        let mut s = session();
        register(&mut s, PAGE);
        let e = header_event(&s, 2, 100);
        assert!(s.handle_pointer(e));
        let r = s.handle_utterance("assign attribute assists to this column", 200);
        assert_eq!(r.response.speech, "Okay — I'll call that column assists.");
        assert!(r.response.clarification.is_some());
        assert_eq!(s.outstanding_clarifications().count(), 3);
        assert!(s.backlog.is_empty());
        assert!(s.outstanding_clarifications().all(|p| p.raw_label != "A"));
        let r = s.handle_utterance("what is the average assists", 300);
        assert_eq!(r.response.speech, "The average assists is 3.5.");
    }

    #[test]
    fn unbound_pointer_is_dropped() {
        let mut s = session();
        register(&mut s, PAGE);
        let mut e = header_event(&s, 1, 0);
        e.uuid = "nope".into();
        assert!(!s.handle_pointer(e));
        let mut e = header_event(&s, 1, 0);
        e.role = ElementRole::Row;
        assert!(!s.handle_pointer(e));
        assert!(s.buffer().is_empty());
    }

    #[test]
    fn utterance_before_register() {
        let mut s = session();
        let out = s.handle(ClientMessage::Utterance { text: "sort by app".into(), ts: None }, 0);
        assert!(matches!(&out[0], ServerMessage::Response { speech, seq: 1, .. } if speech.contains("Open a page")));
    }

    #[test]
    fn stale_pointing_is_explained() {
        let mut s = session();
        register(&mut s, PAGE);
        let r = s.handle_utterance("sort by this column", 0);
        assert_eq!(r.error, Some(CommandError::StaleDeixis { slot: Slot::Column }));
        assert!(r.response.speech.contains("Point at it"));
    }

    #[test]
    fn page_without_tables() {
        let mut s = session();
        let out = register(&mut s, "<p>hello</p>");
        assert!(matches!(&out[0], ServerMessage::Manifest { entries, .. } if entries.is_empty()));
        assert!(matches!(&out[1], ServerMessage::Response { speech, .. } if speech.contains("don't see a table")));
    }

    #[test]
    fn mutation_keeps_live_events_only() {
        let mut s = session();
        register(&mut s, PAGE);
        let e = header_event(&s, 1, 0);
        s.handle_pointer(e);
        let out = s.handle(ClientMessage::Mutation { html: "<p>gone</p>".into() }, 10);
        let ServerMessage::ManifestDiff { add, remove, .. } = &out[0] else { panic!() };
        assert!(add.is_empty());
        assert_eq!(remove.len(), 1 + 6 + 2 + 12);
        assert!(s.buffer().is_empty());
        assert_eq!(s.outstanding_clarifications().count(), 0);
    }

    #[test]
    fn help_lists_intents() {
        let mut s = session();
        assert_eq!(s.handle_utterance("help", 0).response.speech, HELP_TEXT);
    }

    #[test]
    fn unknown_text_gets_help() {
        let mut s = session();
        register(&mut s, PAGE);
        let r = s.handle_utterance("launch the rockets", 0);
        assert!(matches!(r.error, Some(CommandError::NotUnderstood { .. })));
        assert!(r.response.speech.starts_with("Sorry"));
    }
}
