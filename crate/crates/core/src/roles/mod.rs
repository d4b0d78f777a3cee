//! Reviewer and contributor roles.
//!
//! A reviewer marks elements TENTATIVE without touching anything else. A
//! contributor rewrites TENTATIVE elements and returns an all-FINAL slide.
//! Each role has three backends: an oracle driven by the perturbation log,
//! a deterministic rule-based heuristic and a remote chat-completions model.

pub mod heuristic;
pub mod oracle;
pub mod prompt;
pub mod remote;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{diff, Change, SlideDoc, Status};

pub use heuristic::{HeuristicConfig, HeuristicContributor, HeuristicReviewer};
pub use oracle::{OracleContributor, OracleReviewer};
pub use prompt::{format_prompt, parse_response, Message};
pub use remote::{RemoteClient, RemoteContributor, RemoteModelConfig, RemoteReviewer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Reviewer,
    Contributor,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Reviewer => "reviewer",
            Role::Contributor => "contributor",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Oracle,
    Heuristic,
    Remote,
}

impl BackendKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "oracle" => Some(BackendKind::Oracle),
            "heuristic" => Some(BackendKind::Heuristic),
            "remote" => Some(BackendKind::Remote),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum RoleError {
    #[error("slide {source_id:?} needs {tokens} tokens, over the {budget} budget")]
    Budget {
        source_id: String,
        tokens: usize,
        budget: usize,
    },
    #[error("{role} reply could not be parsed: {message}")]
    Irreparable { role: Role, message: String, raw: String },
    #[error("remote request failed: {message}")]
    Transport { message: String, raw: Option<String> },
    #[error("backend broke the role contract: {0}")]
    Contract(String),
}

impl RoleError {
    /// The raw model output or response body, when there was one.
    pub fn raw(&self) -> Option<&str> {
        match self {
            RoleError::Irreparable { raw, .. } => Some(raw),
            RoleError::Transport { raw, .. } => raw.as_deref(),
            _ => None,
        }
    }
}

pub trait Reviewer: Send + Sync {
    /// Labels `doc`, whose incoming statuses are already all FINAL.
    fn label(&self, doc: &SlideDoc) -> Result<SlideDoc, RoleError>;
}

pub trait Contributor: Send + Sync {
    /// Revises the TENTATIVE elements of `doc`. `variant` 0 is the default
    /// behavior; other values ask for an alternative design.
    fn revise(&self, doc: &SlideDoc, variant: u64) -> Result<SlideDoc, RoleError>;
}

/// Runs a reviewer with prior statuses cleared and checks it only set statuses.
pub fn review(backend: &dyn Reviewer, doc: &SlideDoc) -> Result<SlideDoc, RoleError> {
    let input = doc.with_status(Status::Final);
    let out = backend.label(&input)?;
    let changes = diff(&input, &out);
    if let Some(bad) = changes.iter().find(|d| !d.is_status_only()) {
        return Err(RoleError::Contract(format!("reviewer changed {} ({:?})", bad.id, bad.change)));
    }
    Ok(out)
}

/// Runs a contributor. Input without TENTATIVE elements is returned as is.
pub fn contribute(backend: &dyn Contributor, doc: &SlideDoc) -> Result<SlideDoc, RoleError> {
    contribute_variant(backend, doc, 0)
}

pub fn contribute_variant(backend: &dyn Contributor, doc: &SlideDoc, variant: u64) -> Result<SlideDoc, RoleError> {
    if !doc.has_tentative() {
        return Ok(doc.clone());
    }
    let out = backend.revise(doc, variant)?;
    if let Some(e) = out.elements.iter().find(|e| e.status == Status::Tentative) {
        return Err(RoleError::Contract(format!("contributor left {} TENTATIVE", e.id)));
    }
    Ok(out)
}

/// Ids whose design differs between `before` and `after`, ignoring status.
/// Removed ids count as changed.
pub fn touched_ids(before: &SlideDoc, after: &SlideDoc) -> Vec<String> {
    diff(before, after)
        .into_iter()
        .filter(|d| match &d.change {
            Change::Modified(_) => !d.is_status_only(),
            _ => true,
        })
        .map(|d| d.id)
        .collect()
}
