//! Session state as a fold over an append-only event log.
//!
//! Each event records its outcome, so [`SessionState::restore`] rebuilds a
//! session without calling any backend. [`SessionState::reexecute`] instead
//! recomputes every outcome with the given backends and fails on the first
//! one that differs from the record.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::model::{doc_from_value, doc_to_value, ParseMode, SlideDoc, Status};
use crate::orchestrator::{apply_user_labels, branch, refine, BranchFailure, OrchestratorError, RefineOptions, RefinementTrace};
use crate::roles::{contribute, review, Contributor, HeuristicConfig, HeuristicContributor, HeuristicReviewer, RemoteClient, RemoteContributor, RemoteReviewer, Reviewer, RoleError};

mod canonical {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(doc: &SlideDoc, s: S) -> Result<S::Ok, S::Error> {
        doc_to_value(doc).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SlideDoc, D::Error> {
        let v = Value::deserialize(d)?;
        doc_from_value(&v, ParseMode::Strict).map_err(serde::de::Error::custom)
    }
}

mod trace_value {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &RefinementTrace, s: S) -> Result<S::Ok, S::Error> {
        t.to_value().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<RefinementTrace, D::Error> {
        let v = Value::deserialize(d)?;
        RefinementTrace::from_value(&v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRecord {
    pub branch_id: String,
    pub variant: u64,
    #[serde(with = "canonical")]
    pub doc: SlideDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Created {
        session_id: String,
        #[serde(with = "canonical")]
        doc: SlideDoc,
    },
    Branched {
        n: usize,
        seed: u64,
        branches: Vec<BranchRecord>,
        failures: Vec<BranchFailure>,
    },
    Selected {
        branch_id: String,
        #[serde(with = "canonical")]
        doc: SlideDoc,
    },
    Labeled {
        element_ids: Vec<String>,
        #[serde(with = "canonical")]
        doc: SlideDoc,
    },
    Reviewed {
        flagged: Vec<String>,
    },
    Refined {
        #[serde(with = "trace_value")]
        trace: RefinementTrace,
    },
}

impl Event {
    pub fn name(&self) -> &'static str {
        match self {
            Event::Created { .. } => "created",
            Event::Branched { .. } => "branched",
            Event::Selected { .. } => "selected",
            Event::Labeled { .. } => "labeled",
            Event::Reviewed { .. } => "reviewed",
            Event::Refined { .. } => "refined",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionError {
    #[error("unknown element ids: {}", .0.join(", "))]
    UnknownIds(Vec<String>),
    #[error("unknown branch {0:?}")]
    UnknownBranch(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("slide needs {tokens} tokens, over the {budget} budget")]
    Budget { tokens: usize, budget: usize },
    #[error("backend failed: {message}")]
    Backend { message: String, raw: Option<String> },
    #[error("event log: {0}")]
    Log(String),
}

impl From<RoleError> for SessionError {
    fn from(e: RoleError) -> Self {
        match e {
            RoleError::Budget { tokens, budget, .. } => SessionError::Budget { tokens, budget },
            other => SessionError::Backend {
                message: other.to_string(),
                raw: other.raw().map(str::to_string),
            },
        }
    }
}

impl From<OrchestratorError> for SessionError {
    fn from(e: OrchestratorError) -> Self {
        match e {
            OrchestratorError::UnknownIds(ids) => SessionError::UnknownIds(ids),
            OrchestratorError::NoBranches => SessionError::BadRequest("n must be at least 1".into()),
            OrchestratorError::AllBranchesFailed(failures) => SessionError::Backend {
                message: format!("all {} branches failed", failures.len()),
                raw: failures.iter().find_map(|f| f.raw.clone()),
            },
        }
    }
}

/// Reviewer and contributors a session calls. User-labeled elements go to
/// `label_contributor`, which should also change elements it finds nothing
/// wrong with.
#[derive(Clone)]
pub struct Backends {
    pub reviewer: Arc<dyn Reviewer>,
    pub contributor: Arc<dyn Contributor>,
    pub label_contributor: Arc<dyn Contributor>,
}

impl Backends {
    pub fn heuristic(cfg: &HeuristicConfig) -> Self {
        Backends {
            reviewer: Arc::new(HeuristicReviewer::new(cfg.clone())),
            contributor: Arc::new(HeuristicContributor::new(cfg.clone())),
            label_contributor: Arc::new(HeuristicContributor::new(HeuristicConfig {
                restyle_undiagnosed: true,
                ..cfg.clone()
            })),
        }
    }

    pub fn remote(client: Arc<RemoteClient>) -> Self {
        Backends {
            reviewer: Arc::new(RemoteReviewer(client.clone())),
            contributor: Arc::new(RemoteContributor(client.clone())),
            label_contributor: Arc::new(RemoteContributor(client)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    pub session_id: String,
    pub parent: SlideDoc,
    pub current: SlideDoc,
    pub branches: Vec<BranchRecord>,
    pub traces: Vec<RefinementTrace>,
    pub history: Vec<Event>,
}

impl SessionState {
    pub fn new(session_id: impl Into<String>, doc: &SlideDoc) -> (SessionState, Event) {
        let doc = doc.with_status(Status::Final);
        let session_id = session_id.into();
        let event = Event::Created {
            session_id: session_id.clone(),
            doc: doc.clone(),
        };
        let state = SessionState {
            session_id,
            parent: doc.clone(),
            current: doc,
            branches: Vec::new(),
            traces: Vec::new(),
            history: vec![event.clone()],
        };
        (state, event)
    }

    fn branch_count(&self) -> u64 {
        self.history.iter().filter(|e| matches!(e, Event::Branched { .. })).count() as u64
    }

    pub fn branch(&self, b: &Backends, n: usize, seed: Option<u64>) -> Result<Event, SessionError> {
        let seed = seed.unwrap_or_else(|| self.branch_count());
        let set = branch(&self.current, b.contributor.as_ref(), n, seed)?;
        Ok(Event::Branched {
            n,
            seed,
            branches: set
                .branches
                .into_iter()
                .map(|br| BranchRecord {
                    branch_id: br.branch_id,
                    variant: br.variant,
                    doc: br.doc,
                })
                .collect(),
            failures: set.failures,
        })
    }

    pub fn select(&self, branch_id: &str) -> Result<Event, SessionError> {
        let br = self
            .branches
            .iter()
            .find(|b| b.branch_id == branch_id)
            .ok_or_else(|| SessionError::UnknownBranch(branch_id.to_string()))?;
        Ok(Event::Selected {
            branch_id: br.branch_id.clone(),
            doc: br.doc.clone(),
        })
    }

    pub fn label(&self, b: &Backends, element_ids: &[String]) -> Result<Event, SessionError> {
        let labeled = apply_user_labels(&self.current, element_ids)?;
        let doc = contribute(b.label_contributor.as_ref(), &labeled)?;
        Ok(Event::Labeled {
            element_ids: element_ids.to_vec(),
            doc,
        })
    }

    pub fn review(&self, b: &Backends) -> Result<Event, SessionError> {
        let labeled = review(b.reviewer.as_ref(), &self.current)?;
        Ok(Event::Reviewed {
            flagged: labeled.tentative_ids().into_iter().collect(),
        })
    }

    pub fn refine(&self, b: &Backends, opts: &RefineOptions) -> Result<Event, SessionError> {
        let trace = refine(&self.current, b.reviewer.as_ref(), b.contributor.as_ref(), opts);
        if let Some(message) = &trace.error {
            return Err(SessionError::Backend {
                message: message.clone(),
                raw: None,
            });
        }
        Ok(Event::Refined { trace })
    }

    /// Folds one recorded event into the state.
    pub fn apply(&mut self, event: Event) -> Result<(), SessionError> {
        match &event {
            Event::Created { .. } => return Err(SessionError::Log("second created event".into())),
            Event::Branched { branches, .. } => self.branches = branches.clone(),
            Event::Selected { branch_id, doc } => {
                if !self.branches.iter().any(|b| &b.branch_id == branch_id) {
                    return Err(SessionError::UnknownBranch(branch_id.clone()));
                }
                self.current = doc.clone();
            }
            Event::Labeled { doc, .. } => self.current = doc.clone(),
            Event::Reviewed { .. } => {}
            Event::Refined { trace } => {
                self.current = trace.final_doc().with_status(Status::Final);
                self.traces.push(trace.clone());
            }
        }
        self.history.push(event);
        Ok(())
    }

    fn from_created(events: &[Event]) -> Result<SessionState, SessionError> {
        match events.first() {
            Some(Event::Created { session_id, doc }) => Ok(SessionState::new(session_id.clone(), doc).0),
            _ => Err(SessionError::Log("log does not start with a created event".into())),
        }
    }

    /// Rebuilds a session from recorded outcomes.
    pub fn restore(events: &[Event]) -> Result<SessionState, SessionError> {
        let mut state = Self::from_created(events)?;
        for e in &events[1..] {
            state.apply(e.clone())?;
        }
        Ok(state)
    }

    /// Rebuilds a session by recomputing each recorded action.
    pub fn reexecute(events: &[Event], b: &Backends) -> Result<SessionState, SessionError> {
        let mut state = Self::from_created(events)?;
        for (seq, recorded) in events.iter().enumerate().skip(1) {
            let computed = match recorded {
                Event::Created { .. } => return Err(SessionError::Log("second created event".into())),
                Event::Branched { n, seed, .. } => state.branch(b, *n, Some(*seed))?,
                Event::Selected { branch_id, .. } => state.select(branch_id)?,
                Event::Labeled { element_ids, .. } => state.label(b, element_ids)?,
                Event::Reviewed { .. } => state.review(b)?,
                Event::Refined { trace } => state.refine(b, &trace.options)?,
            };
            if &computed != recorded {
                return Err(SessionError::Log(format!("event {seq} ({}) did not reproduce", recorded.name())));
            }
            state.apply(computed)?;
        }
        Ok(state)
    }

    pub fn history_values(&self) -> Vec<Value> {
        self.history
            .iter()
            .enumerate()
            .map(|(seq, e)| json!({"seq": seq, "event": e}))
            .collect()
    }
}

/// Appends `event` as one JSON line and syncs it to disk.
pub fn append_event(file: &mut File, seq: usize, event: &Event) -> std::io::Result<()> {
    let line = serde_json::to_string(&json!({"seq": seq, "event": event}))?;
    file.write_all(line.as_bytes())?;
    file.write_all(b"\n")?;
    file.sync_data()
}

pub fn open_log(path: &Path) -> std::io::Result<File> {
    OpenOptions::new().create(true).append(true).open(path)
}

/// Reads an event log. A torn final line from an interrupted write is
/// dropped; any other bad line is an error.
pub fn read_events(path: &Path) -> Result<Vec<Event>, SessionError> {
    let file = File::open(path).map_err(|e| SessionError::Log(format!("{}: {e}", path.display())))?;
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(|e| SessionError::Log(e.to_string()))?;
    let mut events = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        #[derive(Deserialize)]
        struct Line {
            seq: usize,
            event: Event,
        }
        match serde_json::from_str::<Line>(line) {
            Ok(l) if l.seq == events.len() => events.push(l.event),
            Ok(l) => return Err(SessionError::Log(format!("line {}: seq {} out of order", i + 1, l.seq))),
            Err(e) if i + 1 == lines.len() => log::warn!("{}: dropping torn last line: {e}", path.display()),
            Err(e) => return Err(SessionError::Log(format!("line {}: {e}", i + 1))),
        }
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    fn doc() -> SlideDoc {
        let mut d = SlideDoc::new("s", DEFAULT_CANVAS.0, DEFAULT_CANVAS.1);
        d.elements.push(
            Element::auto_shape("title", ShapeName::rectangle(), Geometry::new(600_000, 400_000, 6_000_000, 900_000))
                .with_fill(Fill::solid(Color::from_rgb(30, 60, 120)))
                .with_text(TextFrame::single(TextRun::new("Quarterly", "Lato", 32.0, Color::white()))),
        );
        d.elements.push(
            Element::auto_shape("body", ShapeName::rectangle(), Geometry::new(600_000, 1_600_000, 6_000_000, 3_000_000))
                .with_fill(Fill::solid(Color::white()))
                .with_text(TextFrame::single(TextRun::new("Revenue grew", "Arial", 18.0, Color::black()))),
        );
        d
    }

    #[test]
    fn restore_and_reexecute_agree_with_live_state() {
        let b = Backends::heuristic(&HeuristicConfig::default());
        let (mut s, _) = SessionState::new("x", &doc());
        let e = s.branch(&b, 2, None).unwrap();
        s.apply(e).unwrap();
        let e = s.select("b1").unwrap();
        s.apply(e).unwrap();
        let e = s.label(&b, &["body".to_string()]).unwrap();
        s.apply(e).unwrap();
        let e = s.review(&b).unwrap();
        s.apply(e).unwrap();

        let text: Vec<String> = s.history.iter().map(|e| serde_json::to_string(e).unwrap()).collect();
        let events: Vec<Event> = text.iter().map(|t| serde_json::from_str(t).unwrap()).collect();
        assert_eq!(events, s.history);
        assert_eq!(SessionState::restore(&events).unwrap(), s);
        assert_eq!(SessionState::reexecute(&events, &b).unwrap(), s);
    }

    #[test]
    fn reexecute_detects_a_tampered_outcome() {
        let b = Backends::heuristic(&HeuristicConfig::default());
        let (mut s, _) = SessionState::new("x", &doc());
        let e = s.label(&b, &["title".to_string()]).unwrap();
        s.apply(e).unwrap();
        let mut events = s.history.clone();
        if let Event::Labeled { doc, .. } = &mut events[1] {
            doc.elements[0].position.x += 1;
        }
        assert!(SessionState::restore(&events).is_ok());
        assert!(matches!(SessionState::reexecute(&events, &b), Err(SessionError::Log(_))));
    }

    #[test]
    fn select_requires_a_known_branch() {
        let (s, _) = SessionState::new("x", &doc());
        assert_eq!(s.select("b0"), Err(SessionError::UnknownBranch("b0".into())));
    }
}
