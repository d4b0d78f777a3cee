//! Review/contribute loop, branching and user labeling.
//!
//! One iteration is one labeling followed by one contributor pass. The
//! first labeling marks every element TENTATIVE (unless disabled); later
//! labelings come from the reviewer. A clean labeling ends the loop: on
//! the very first iteration nothing is counted, afterwards the clean review
//! counts as the confirming iteration and repeats the last snapshot.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::model::{doc_from_value, doc_to_value, CodecError, ParseMode, SlideDoc, Status};
use crate::roles::{contribute_variant, review, Contributor, RoleError, Reviewer};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineOptions {
    pub max_iterations: usize,
    pub early_stop: bool,
    pub initial_all_tentative: bool,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            max_iterations: 5,
            early_stop: true,
            initial_all_tentative: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIterations,
    BackendError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    /// Every element marked TENTATIVE.
    Initial,
    Reviewer,
    User,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementTrace {
    pub options: RefineOptions,
    /// Index 0 is the input, then one snapshot per iteration.
    pub snapshots: Vec<SlideDoc>,
    pub flagged_sets: Vec<BTreeSet<String>>,
    pub label_sources: Vec<LabelSource>,
    pub stop_reason: StopReason,
    pub iterations_used: usize,
    pub error: Option<String>,
}

impl RefinementTrace {
    pub fn final_doc(&self) -> &SlideDoc {
        self.snapshots.last().expect("trace always holds the input")
    }

    pub fn to_value(&self) -> Value {
        json!({
            "options": self.options,
            "snapshots": self.snapshots.iter().map(doc_to_value).collect::<Vec<_>>(),
            "flagged_sets": self.flagged_sets,
            "label_sources": self.label_sources,
            "stop_reason": self.stop_reason,
            "iterations_used": self.iterations_used,
            "error": self.error,
        })
    }

    pub fn to_json(&self) -> String {
        self.to_value().to_string()
    }

    pub fn from_value(v: &Value) -> Result<Self, CodecError> {
        fn get<T: DeserializeOwned>(v: &Value, key: &str) -> Result<T, CodecError> {
            serde_json::from_value(v.get(key).cloned().unwrap_or(Value::Null)).map_err(|e| CodecError::Schema {
                path: key.to_string(),
                message: e.to_string(),
            })
        }
        let raw: Vec<Value> = get(v, "snapshots")?;
        let snapshots = raw
            .iter()
            .map(|d| doc_from_value(d, ParseMode::Strict))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RefinementTrace {
            options: get(v, "options")?,
            snapshots,
            flagged_sets: get(v, "flagged_sets")?,
            label_sources: get(v, "label_sources")?,
            stop_reason: get(v, "stop_reason")?,
            iterations_used: get(v, "iterations_used")?,
            error: get(v, "error")?,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, CodecError> {
        let v: Value = serde_json::from_str(text).map_err(|e| CodecError::Syntax {
            offset: 0,
            message: e.to_string(),
        })?;
        Self::from_value(&v)
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum OrchestratorError {
    #[error("branch count must be at least 1")]
    NoBranches,
    #[error("every branch failed: {}", .0.first().map(|e| e.error.as_str()).unwrap_or(""))]
    AllBranchesFailed(Vec<BranchFailure>),
    #[error("unknown element ids: {}", .0.join(", "))]
    UnknownIds(Vec<String>),
}

/// Refines `doc` until the reviewer is satisfied or the iteration cap is hit.
/// Backend errors end the run and are recorded in the trace.
pub fn refine(
    doc: &SlideDoc,
    reviewer: &dyn Reviewer,
    contributor: &dyn Contributor,
    opts: &RefineOptions,
) -> RefinementTrace {
    let input = doc.with_status(Status::Final);
    let mut trace = RefinementTrace {
        options: opts.clone(),
        snapshots: vec![input.clone()],
        flagged_sets: Vec::new(),
        label_sources: Vec::new(),
        stop_reason: StopReason::MaxIterations,
        iterations_used: 0,
        error: None,
    };
    let fail = |trace: &mut RefinementTrace, e: RoleError| {
        trace.stop_reason = StopReason::BackendError;
        trace.error = Some(e.to_string());
    };

    let mut current = input;
    for i in 1..=opts.max_iterations.max(1) {
        let (labeled, source) = if i == 1 && opts.initial_all_tentative {
            (current.with_status(Status::Tentative), LabelSource::Initial)
        } else {
            match review(reviewer, &current) {
                Ok(l) => (l, LabelSource::Reviewer),
                Err(e) => {
                    fail(&mut trace, e);
                    return trace;
                }
            }
        };
        let flags = labeled.tentative_ids();
        let clean = flags.is_empty();
        trace.flagged_sets.push(flags);
        trace.label_sources.push(source);

        if clean {
            if i == 1 {
                trace.stop_reason = StopReason::Converged;
                return trace;
            }
            trace.snapshots.push(current.clone());
            trace.iterations_used = i;
            if opts.early_stop {
                trace.stop_reason = StopReason::Converged;
                return trace;
            }
            continue;
        }

        match contribute_variant(contributor, &labeled, 0) {
            Ok(revised) => {
                trace.snapshots.push(revised.clone());
                trace.iterations_used = i;
                current = revised;
            }
            Err(e) => {
                fail(&mut trace, e);
                return trace;
            }
        }
    }
    if trace.flagged_sets.last().is_some_and(BTreeSet::is_empty) {
        trace.stop_reason = StopReason::Converged;
    }
    trace
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub branch_id: String,
    pub variant: u64,
    pub doc: SlideDoc,
    pub trace: RefinementTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchFailure {
    pub branch_id: String,
    pub variant: u64,
    pub error: String,
    /// Raw backend reply, when there was one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchSet {
    pub parent: SlideDoc,
    pub branches: Vec<Branch>,
    pub failures: Vec<BranchFailure>,
}

impl BranchSet {
    pub fn get(&self, branch_id: &str) -> Option<&Branch> {
        self.branches.iter().find(|b| b.branch_id == branch_id)
    }
}

/// Variant passed to the contributor for branch `i`. Branch 0 is the
/// default design; the others are distinct and depend on `seed`.
pub fn branch_variant(seed: u64, i: usize) -> u64 {
    if i == 0 {
        0
    } else {
        seed.wrapping_mul(16).wrapping_add(i as u64).max(1)
    }
}

/// Runs `n` independent contributor passes on the all-TENTATIVE parent.
pub fn branch(doc: &SlideDoc, contributor: &dyn Contributor, n: usize, seed: u64) -> Result<BranchSet, OrchestratorError> {
    if n == 0 {
        return Err(OrchestratorError::NoBranches);
    }
    let parent = doc.with_status(Status::Final);
    let labeled = parent.with_status(Status::Tentative);
    let results: Vec<(String, u64, Result<SlideDoc, RoleError>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let variant = branch_variant(seed, i);
            (format!("b{i}"), variant, contribute_variant(contributor, &labeled, variant))
        })
        .collect();

    let mut set = BranchSet {
        parent: parent.clone(),
        branches: Vec::new(),
        failures: Vec::new(),
    };
    for (branch_id, variant, result) in results {
        match result {
            Ok(out) => {
                let trace = RefinementTrace {
                    options: RefineOptions {
                        max_iterations: 1,
                        ..RefineOptions::default()
                    },
                    snapshots: vec![parent.clone(), out.clone()],
                    flagged_sets: vec![labeled.tentative_ids()],
                    label_sources: vec![LabelSource::Initial],
                    stop_reason: StopReason::MaxIterations,
                    iterations_used: 1,
                    error: None,
                };
                set.branches.push(Branch {
                    branch_id,
                    variant,
                    doc: out,
                    trace,
                });
            }
            Err(e) => set.failures.push(BranchFailure {
                branch_id,
                variant,
                error: e.to_string(),
                raw: e.raw().map(str::to_string),
            }),
        }
    }
    if set.branches.is_empty() {
        return Err(OrchestratorError::AllBranchesFailed(set.failures));
    }
    Ok(set)
}

/// Marks exactly `ids` TENTATIVE.
pub fn apply_user_labels(doc: &SlideDoc, ids: &[String]) -> Result<SlideDoc, OrchestratorError> {
    let missing: Vec<String> = ids.iter().filter(|id| doc.element(id).is_none()).cloned().collect();
    if !missing.is_empty() {
        return Err(OrchestratorError::UnknownIds(missing));
    }
    Ok(doc.with_flags(ids))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceHistogram {
    /// Iterations used to converge, mapped to the number of runs.
    pub counts: BTreeMap<usize, usize>,
    pub converged: usize,
    pub not_converged: usize,
    /// Share of runs that did not converge; 0 for no runs.
    pub not_converged_fraction: f64,
}

pub fn convergence_histogram<'a>(traces: impl IntoIterator<Item = &'a RefinementTrace>) -> ConvergenceHistogram {
    let mut h = ConvergenceHistogram {
        counts: BTreeMap::new(),
        converged: 0,
        not_converged: 0,
        not_converged_fraction: 0.0,
    };
    for t in traces {
        if t.stop_reason == StopReason::Converged {
            *h.counts.entry(t.iterations_used).or_default() += 1;
            h.converged += 1;
        } else {
            h.not_converged += 1;
        }
    }
    let total = h.converged + h.not_converged;
    if total > 0 {
        h.not_converged_fraction = h.not_converged as f64 / total as f64;
    }
    h
}
