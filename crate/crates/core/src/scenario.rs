//! Scripted multimodal sessions: pointing and utterances against a fixture page.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::engine::Outcome;
use crate::event_buffer::{PointerEvent, PointerKind};
use crate::page_model::ElementRole;
use crate::protocol::{ClientMessage, ServerMessage};
use crate::session::{EngineConfig, Session, UtteranceResult};

/// Simulated time between consecutive steps.
pub const STEP_MS: i64 = 100;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub page: PathBuf,
    #[serde(default)]
    pub url: Option<String>,
    #[serde(default)]
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellTarget {
    #[serde(default)]
    pub table: usize,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeaderTarget {
    #[serde(default)]
    pub table: usize,
    pub col: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowTarget {
    #[serde(default)]
    pub table: usize,
    pub row: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffCounts {
    pub add: usize,
    pub remove: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Point(CellTarget),
    PointHeader(HeaderTarget),
    PointRow(RowTarget),
    Say(String),
    /// Advances the simulated clock instead of the usual step interval.
    WaitMs(i64),
    Mutate(PathBuf),
    ExpectSpeech(String),
    ExpectRows(usize),
    ExpectCommand(serde_json::Value),
    ExpectClarifications(usize),
    ExpectDiff(DiffCounts),
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario {path}: {source}")]
    Malformed {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| ScenarioError::Malformed {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct ScenarioReport {
    pub transcript: Vec<String>,
    pub failures: Vec<String>,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn transcript_text(&self) -> String {
        let mut s = self.transcript.join("\n");
        s.push('\n');
        s
    }
}

/// Drives one in-process session with a synthetic clock.
pub struct ScenarioRunner {
    session: Session,
    base_dir: PathBuf,
    clock: i64,
    last: Option<UtteranceResult>,
    last_diff: Option<(usize, usize)>,
    report: ScenarioReport,
}

fn read(path: &Path) -> Result<String, ScenarioError> {
    std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl ScenarioRunner {
    /// Registers the scenario page. Paths resolve against `base_dir`.
    pub fn start(scenario: &Scenario, base_dir: &Path, config: EngineConfig) -> Result<Self, ScenarioError> {
        let page = base_dir.join(&scenario.page);
        let html = read(&page)?;
        let name = scenario
            .page
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let url = scenario.url.clone().unwrap_or_else(|| format!("http://localhost/{name}"));
        let mut config = config;
        config.id_seed.get_or_insert(0);
        let mut runner = Self {
            session: Session::new("scenario", config),
            base_dir: base_dir.to_path_buf(),
            clock: 0,
            last: None,
            last_diff: None,
            report: ScenarioReport::default(),
        };
        let out = runner.session.handle(ClientMessage::Register { url, html }, runner.clock);
        runner.clock += STEP_MS;
        for m in out {
            match m {
                ServerMessage::Manifest { entries, .. } => runner
                    .report
                    .transcript
                    .push(format!("register {} ({} bound elements)", scenario.page.display(), entries.len())),
                other => runner.log_message(other),
            }
        }
        Ok(runner)
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn clock(&self) -> i64 {
        self.clock
    }

    pub fn last(&self) -> Option<&UtteranceResult> {
        self.last.as_ref()
    }

    pub fn report(&self) -> &ScenarioReport {
        &self.report
    }

    pub fn into_report(self) -> ScenarioReport {
        self.report
    }

    fn log_message(&mut self, m: ServerMessage) {
        match m {
            ServerMessage::Clarification { prompt, .. } => self.report.transcript.push(format!("  ? {prompt}")),
            ServerMessage::Response { speech, .. } => self.report.transcript.push(format!("  < {speech}")),
            _ => {}
        }
    }

    fn fail(&mut self, index: usize, message: String) {
        let line = format!("FAIL step {}: {message}", index + 1);
        self.report.transcript.push(line.clone());
        self.report.failures.push(line);
    }

    fn pass(&mut self, what: String) {
        self.report.transcript.push(format!("  ok {what}"));
    }

    fn pointer(&mut self, index: usize, table: usize, role: ElementRole, row: Option<usize>, col: Option<usize>) {
        let found = self.session.model().and_then(|m| m.tables.get(table)).and_then(|t| {
            let (uuid, value) = match role {
                ElementRole::Cell => {
                    let c = t.rows.get(row?)?.get(col?)?;
                    (c.uuid.clone(), Some(c.raw_text.clone()))
                }
                ElementRole::Header => (t.columns.get(col?)?.header_uuid.clone(), None),
                ElementRole::Row => (t.row_bindings.get(row?)?.uuid.clone(), None),
                ElementRole::Table => (t.table_uuid.clone(), None),
            };
            Some((t.table_id.clone(), uuid, value))
        });
        let Some((table_id, uuid, value_text)) = found else {
            self.fail(index, format!("no {role:?} at table {table} row {row:?} col {col:?}"));
            return;
        };
        let describe = match &value_text {
            Some(v) => format!("point {table_id} row {} col {} {v:?}", row.unwrap_or(0), col.unwrap_or(0)),
            None => match role {
                ElementRole::Header => format!("point {table_id} header {}", col.unwrap_or(0)),
                _ => format!("point {table_id} row {}", row.unwrap_or(0)),
            },
        };
        self.report.transcript.push(describe);
        self.session.handle(
            ClientMessage::Pointer(PointerEvent {
                ts: self.clock,
                uuid,
                role,
                table_id,
                row_index: row,
                col_index: col,
                value_text,
                kind: PointerKind::Hover,
            }),
            self.clock,
        );
    }

    /// Executes step `index` of a scenario.
    pub fn step(&mut self, index: usize, step: &Step) -> Result<(), ScenarioError> {
        match step {
            Step::Point(t) => self.pointer(index, t.table, ElementRole::Cell, Some(t.row), Some(t.col)),
            Step::PointHeader(t) => self.pointer(index, t.table, ElementRole::Header, None, Some(t.col)),
            Step::PointRow(t) => self.pointer(index, t.table, ElementRole::Row, Some(t.row), None),
            Step::Say(text) => {
                self.report.transcript.push(format!("> {text}"));
                let result = self.session.handle_utterance(text, self.clock);
                self.report.transcript.push(format!("  < {}", result.response.speech));
                if let Some(c) = &result.command {
                    self.report.transcript.push(format!("  command {}", c.to_canonical_string()));
                }
                if let Some(c) = &result.response.clarification {
                    self.report.transcript.push(format!("  ? {}", c.prompt));
                }
                self.last = Some(result);
            }
            Step::WaitMs(ms) => {
                self.clock += ms;
                self.report.transcript.push(format!("wait {ms} ms"));
                return Ok(());
            }
            Step::Mutate(path) => {
                let html = read(&self.base_dir.join(path))?;
                let out = self.session.handle(ClientMessage::Mutation { html }, self.clock);
                for m in out {
                    match m {
                        ServerMessage::ManifestDiff { add, remove, .. } => {
                            self.report.transcript.push(format!(
                                "mutate {} (+{} -{})",
                                path.display(),
                                add.len(),
                                remove.len()
                            ));
                            self.last_diff = Some((add.len(), remove.len()));
                        }
                        other => self.log_message(other),
                    }
                }
            }
            Step::ExpectSpeech(want) => {
                let got = self.last.as_ref().map(|r| r.response.speech.clone());
                if got.as_deref() == Some(want.as_str()) {
                    self.pass(format!("speech {want:?}"));
                } else {
                    self.fail(index, format!("expected speech {want:?}, got {got:?}"));
                }
            }
            Step::ExpectRows(want) => {
                let got = match self.last.as_ref().and_then(|r| r.outcome.as_ref()) {
                    Some(Outcome::ResultTable(rt)) => Some(rt.rows.len()),
                    _ => None,
                };
                if got == Some(*want) {
                    self.pass(format!("{want} rows"));
                } else {
                    self.fail(index, format!("expected {want} result rows, got {got:?}"));
                }
            }
            Step::ExpectCommand(want) => {
                let got = self.last.as_ref().and_then(|r| r.command.as_ref()).map(|c| c.to_json());
                if got.as_ref() == Some(want) {
                    self.pass(format!("command {want}"));
                } else {
                    let got = got.map(|g| g.to_string()).unwrap_or_else(|| "no command".into());
                    self.fail(index, format!("expected command {want}, got {got}"));
                }
            }
            Step::ExpectClarifications(want) => {
                let got = self.session.outstanding_clarifications().count();
                if got == *want {
                    self.pass(format!("{want} pending clarifications"));
                } else {
                    self.fail(index, format!("expected {want} pending clarifications, got {got}"));
                }
            }
            Step::ExpectDiff(want) => {
                if self.last_diff == Some((want.add, want.remove)) {
                    self.pass(format!("diff +{} -{}", want.add, want.remove));
                } else {
                    self.fail(
                        index,
                        format!("expected diff +{} -{}, got {:?}", want.add, want.remove, self.last_diff),
                    );
                }
            }
        }
        self.clock += STEP_MS;
        Ok(())
    }
}

/// Runs every step, collecting failures rather than stopping at the first.
pub fn run_scenario(scenario: &Scenario, base_dir: &Path, config: EngineConfig) -> Result<ScenarioReport, ScenarioError> {
    let mut runner = ScenarioRunner::start(scenario, base_dir, config)?;
    for (i, step) in scenario.steps.iter().enumerate() {
        runner.step(i, step)?;
    }
    Ok(runner.into_report())
}
