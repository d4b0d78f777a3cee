//! Supervised training pairs and batch dataset generation.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::model::{to_json, SlideDoc, Status};
use crate::roles::prompt::{system_prompt, user_content, Message};
use crate::roles::{Role, RoleError};

use super::{perturb, PerturbConfig, PerturbError, PerturbationKind, PerturbationLog};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub source_id: String,
    /// System, user and assistant messages.
    pub reviewer: Vec<Message>,
    pub contributor: Vec<Message>,
    pub log: PerturbationLog,
}

impl TrainingPair {
    pub fn to_value(&self, slide_index: usize) -> Value {
        json!({
            "source_id": self.source_id,
            "slide_index": slide_index,
            "reviewer": {"messages": self.reviewer},
            "contributor": {"messages": self.contributor},
            "log": self.log.to_value(),
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error(transparent)]
    Perturb(#[from] PerturbError),
    #[error("slide {source_id:?} needs {tokens} tokens, over the {budget} budget")]
    Budget {
        source_id: String,
        tokens: usize,
        budget: usize,
    },
    #[error("{0}")]
    Format(String),
    #[error("writing dataset failed: {0}")]
    Io(#[from] io::Error),
}

impl From<RoleError> for DatasetError {
    fn from(e: RoleError) -> Self {
        match e {
            RoleError::Budget {
                source_id,
                tokens,
                budget,
            } => DatasetError::Budget {
                source_id,
                tokens,
                budget,
            },
            other => DatasetError::Format(other.to_string()),
        }
    }
}

/// Builds the reviewer and contributor samples for one slide.
pub fn make_training_pair(doc: &SlideDoc, config: &PerturbConfig) -> Result<TrainingPair, DatasetError> {
    let original = doc.with_status(Status::Final);
    let (perturbed, log) = perturb(&original, config)?;
    let labeled = perturbed.with_flags(&log.flawed_ids());
    let json = |d: &SlideDoc| to_json(d).map_err(|e| DatasetError::Format(e.to_string()));

    let reviewer = vec![
        Message::new("system", system_prompt(Role::Reviewer)),
        Message::new("user", user_content(Role::Reviewer, &perturbed)?),
        Message::new("assistant", json(&labeled)?),
    ];
    let contributor = vec![
        Message::new("system", system_prompt(Role::Contributor)),
        Message::new("user", user_content(Role::Contributor, &labeled)?),
        Message::new("assistant", json(&original)?),
    ];
    Ok(TrainingPair {
        source_id: doc.source_id.clone(),
        reviewer,
        contributor,
        log,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlideFailure {
    pub slide_index: usize,
    pub source_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub seed: u64,
    pub severity: f64,
    pub slides_seen: usize,
    pub total: usize,
    pub entries: usize,
    pub per_kind: BTreeMap<PerturbationKind, usize>,
    pub failures: Vec<SlideFailure>,
}

/// Writes one JSON line per slide to `out`. Slide `i` is perturbed with
/// seed `config.seed ^ i`, so output does not depend on scheduling.
pub fn batch_generate<I, W>(source: I, config: &PerturbConfig, out: &mut W) -> Result<Manifest, DatasetError>
where
    I: IntoIterator<Item = SlideDoc>,
    W: Write,
{
    config.validate()?;
    let slides: Vec<SlideDoc> = source.into_iter().collect();
    let results: Vec<Result<TrainingPair, DatasetError>> = slides
        .par_iter()
        .enumerate()
        .map(|(i, doc)| {
            let cfg = PerturbConfig {
                seed: config.seed ^ i as u64,
                ..config.clone()
            };
            make_training_pair(doc, &cfg)
        })
        .collect();

    let mut manifest = Manifest {
        seed: config.seed,
        severity: config.severity,
        slides_seen: slides.len(),
        total: 0,
        entries: 0,
        per_kind: PerturbationKind::ALL.into_iter().map(|k| (k, 0)).collect(),
        failures: Vec::new(),
    };
    for (i, result) in results.into_iter().enumerate() {
        match result {
            Ok(pair) => {
                serde_json::to_writer(&mut *out, &pair.to_value(i)).map_err(io::Error::from)?;
                out.write_all(b"\n")?;
                manifest.total += 1;
                manifest.entries += pair.log.entries.len();
                for e in &pair.log.entries {
                    *manifest.per_kind.entry(e.kind).or_default() += 1;
                }
            }
            Err(e) => {
                log::warn!("slide {i} ({}) skipped: {e}", slides[i].source_id);
                manifest.failures.push(SlideFailure {
                    slide_index: i,
                    source_id: slides[i].source_id.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    out.flush()?;
    Ok(manifest)
}
