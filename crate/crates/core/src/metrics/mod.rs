//! Reviewer accuracy, contributor responsiveness and judgement bundles.
//!
//! Flags on unperturbed elements have no category. They are pooled into one
//! false-positive count that is shared across categories in proportion to
//! each category's support, so `precision` for category c is
//! `tp_c / (tp_c + fp * support_c / total_support)`. `precision_all_fp`
//! charges the whole pool to every category, and `overall.precision`
//! ignores categories altogether.

pub mod judge;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::SlideDoc;
use crate::orchestrator::{ConvergenceHistogram, LabelSource, RefinementTrace};
use crate::perturb::{Category, PerturbationKind, PerturbationLog};

pub use judge::{
    export_judgement, load_mappings, read_verdicts, win_rate, JudgeError, JudgementBundle, Mapping, Side, Verdict, VerdictLine,
    WinRate,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("labeled doc and log disagree: {0}")]
    Consistency(String),
}

fn ratio(num: usize, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num as f64 / den)
}

/// Additive confusion counts for one or more slides.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewerCounts {
    pub true_positives: BTreeMap<Category, usize>,
    pub support: BTreeMap<Category, usize>,
    /// Flagged elements with no log entry.
    pub false_positives: usize,
    pub flagged: usize,
}

impl ReviewerCounts {
    pub fn merge(&mut self, other: &ReviewerCounts) {
        for (c, n) in &other.true_positives {
            *self.true_positives.entry(*c).or_default() += n;
        }
        for (c, n) in &other.support {
            *self.support.entry(*c).or_default() += n;
        }
        self.false_positives += other.false_positives;
        self.flagged += other.flagged;
    }

    fn tp(&self, c: Category) -> usize {
        self.true_positives.get(&c).copied().unwrap_or(0)
    }

    fn sup(&self, c: Category) -> usize {
        self.support.get(&c).copied().unwrap_or(0)
    }

    pub fn metrics(&self) -> ReviewerMetrics {
        let total_support: usize = self.support.values().sum();
        let total_tp: usize = self.true_positives.values().sum();
        let mut per_category = BTreeMap::new();
        for c in Category::ALL {
            let (tp, support) = (self.tp(c), self.sup(c));
            let share = if total_support == 0 {
                0.0
            } else {
                self.false_positives as f64 * support as f64 / total_support as f64
            };
            let defined = support > 0;
            per_category.insert(
                c,
                CategoryScore {
                    precision: if defined { ratio(tp, tp as f64 + share) } else { None },
                    precision_all_fp: if defined {
                        ratio(tp, (tp + self.false_positives) as f64)
                    } else {
                        None
                    },
                    recall: ratio(tp, support as f64),
                    true_positives: tp,
                    support,
                },
            );
        }
        let mean = |f: fn(&CategoryScore) -> Option<f64>| {
            let vals: Vec<f64> = per_category.values().filter_map(f).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        };
        ReviewerMetrics {
            macro_precision: mean(|s| s.precision),
            macro_recall: mean(|s| s.recall),
            overall: Overall {
                precision: ratio(total_tp, (total_tp + self.false_positives) as f64),
                recall: ratio(total_tp, total_support as f64),
                false_positives: self.false_positives,
                flagged: self.flagged,
            },
            per_category,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub precision: Option<f64>,
    pub precision_all_fp: Option<f64>,
    pub recall: Option<f64>,
    pub true_positives: usize,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overall {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub false_positives: usize,
    pub flagged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewerMetrics {
    pub per_category: BTreeMap<Category, CategoryScore>,
    pub overall: Overall,
    pub macro_precision: Option<f64>,
    pub macro_recall: Option<f64>,
}

/// Checks that `labeled` is the perturbed doc the log describes.
fn check_consistency(labeled: &SlideDoc, log: &PerturbationLog) -> Result<(), MetricsError> {
    for e in &log.entries {
        let present = labeled.element(&e.element_id).is_some();
        match (e.kind, present) {
            (PerturbationKind::ShapeRemoval, true) => {
                return Err(MetricsError::Consistency(format!("removed element {:?} is present", e.element_id)))
            }
            (PerturbationKind::ShapeRemoval, false) => {}
            (_, false) => {
                return Err(MetricsError::Consistency(format!(
                    "logged element {:?} is missing",
                    e.element_id
                )))
            }
            (_, true) => {}
        }
    }
    Ok(())
}

pub fn reviewer_counts(labeled: &SlideDoc, log: &PerturbationLog) -> Result<ReviewerCounts, MetricsError> {
    check_consistency(labeled, log)?;
    let flagged = labeled.tentative_ids();
    let mut counts = ReviewerCounts {
        true_positives: Category::ALL.into_iter().map(|c| (c, 0)).collect(),
        support: Category::ALL.into_iter().map(|c| (c, 0)).collect(),
        false_positives: 0,
        flagged: flagged.len(),
    };
    let mut logged = BTreeSet::new();
    for e in log.entries.iter().filter(|e| e.kind != PerturbationKind::ShapeRemoval) {
        if !logged.insert(e.element_id.as_str()) {
            continue;
        }
        let c = e.kind.category();
        *counts.support.entry(c).or_default() += 1;
        if flagged.contains(&e.element_id) {
            *counts.true_positives.entry(c).or_default() += 1;
        }
    }
    counts.false_positives = flagged.iter().filter(|id| !logged.contains(id.as_str())).count();
    Ok(counts)
}

pub fn reviewer_metrics(labeled: &SlideDoc, log: &PerturbationLog) -> Result<ReviewerMetrics, MetricsError> {
    Ok(reviewer_counts(labeled, log)?.metrics())
}

/// Flagged/altered counts, keyed by category when a log is available.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponsivenessCounts {
    pub flagged: BTreeMap<Category, usize>,
    pub altered: BTreeMap<Category, usize>,
    /// Flags without a category (no log, or no log entry).
    pub uncategorized_flagged: usize,
    pub uncategorized_altered: usize,
}

impl ResponsivenessCounts {
    pub fn merge(&mut self, other: &ResponsivenessCounts) {
        for (c, n) in &other.flagged {
            *self.flagged.entry(*c).or_default() += n;
        }
        for (c, n) in &other.altered {
            *self.altered.entry(*c).or_default() += n;
        }
        self.uncategorized_flagged += other.uncategorized_flagged;
        self.uncategorized_altered += other.uncategorized_altered;
    }

    pub fn metrics(&self) -> Responsiveness {
        let get = |m: &BTreeMap<Category, usize>, c| m.get(&c).copied().unwrap_or(0);
        let per_category = Category::ALL
            .into_iter()
            .map(|c| (c, ratio(get(&self.altered, c), get(&self.flagged, c) as f64)))
            .collect();
        let flagged = self.flagged.values().sum::<usize>() + self.uncategorized_flagged;
        let altered = self.altered.values().sum::<usize>() + self.uncategorized_altered;
        Responsiveness {
            per_category,
            uncategorized: ratio(self.uncategorized_altered, self.uncategorized_flagged as f64),
            overall: ratio(altered, flagged as f64),
            flagged,
            altered,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Responsiveness {
    pub per_category: BTreeMap<Category, Option<f64>>,
    pub uncategorized: Option<f64>,
    pub overall: Option<f64>,
    pub flagged: usize,
    pub altered: usize,
}

/// A TENTATIVE element counts as altered when its design changed or it was
/// removed.
pub fn responsiveness_counts(labeled_in: &SlideDoc, revised: &SlideDoc, log: Option<&PerturbationLog>) -> ResponsivenessCounts {
    let mut counts = ResponsivenessCounts::default();
    if log.is_some() {
        for c in Category::ALL {
            counts.flagged.insert(c, 0);
            counts.altered.insert(c, 0);
        }
    }
    for e in labeled_in.elements.iter().filter(|e| e.status == crate::model::Status::Tentative) {
        let altered = revised.element(&e.id).map_or(true, |r| !r.same_design(e));
        match log.and_then(|l| l.entry_for(&e.id)) {
            Some(entry) => {
                let c = entry.kind.category();
                *counts.flagged.entry(c).or_default() += 1;
                if altered {
                    *counts.altered.entry(c).or_default() += 1;
                }
            }
            None => {
                counts.uncategorized_flagged += 1;
                if altered {
                    counts.uncategorized_altered += 1;
                }
            }
        }
    }
    counts
}

pub fn responsiveness(labeled_in: &SlideDoc, revised: &SlideDoc, log: Option<&PerturbationLog>) -> Responsiveness {
    responsiveness_counts(labeled_in, revised, log).metrics()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub slides: usize,
    pub reviewer: ReviewerMetrics,
    pub responsiveness: Responsiveness,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceHistogram>,
}

impl MetricsReport {
    pub fn from_counts(slides: usize, reviewer: &ReviewerCounts, resp: &ResponsivenessCounts) -> Self {
        MetricsReport {
            slides,
            reviewer: reviewer.metrics(),
            responsiveness: resp.metrics(),
            convergence: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text table: one row per flaw category with reviewer precision
    /// and recall and contributor responsiveness.
    pub fn table(&self) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
        let mut s = String::new();
        let _ = writeln!(s, "{:<18} | {:^21} | {:^14}", "", "Reviewer", "Contributor");
        let _ = writeln!(s, "{:<18} | {:>9} {:>11} | {:>14} | {:>7}", "Design flaws", "Precision", "Recall", "Responsiveness", "Support");
        let _ = writeln!(s, "{}", "-".repeat(70));
        for c in Category::ALL {
            let score = &self.reviewer.per_category[&c];
            let _ = writeln!(
                s,
                "{:<18} | {:>9} {:>11} | {:>14} | {:>7}",
                c.title(),
                cell(score.precision),
                cell(score.recall),
                cell(self.responsiveness.per_category.get(&c).copied().flatten()),
                score.support
            );
        }
        let _ = writeln!(s, "{}", "-".repeat(70));
        let _ = writeln!(
            s,
            "{:<18} | {:>9} {:>11} | {:>14} | {:>7}",
            "Overall",
            cell(self.reviewer.overall.precision),
            cell(self.reviewer.overall.recall),
            cell(self.responsiveness.overall),
            self.reviewer.per_category.values().map(|s| s.support).sum::<usize>()
        );
        let _ = writeln!(
            s,
            "{:<18} | {:>9} {:>11} |",
            "Macro",
            cell(self.reviewer.macro_precision),
            cell(self.reviewer.macro_recall)
        );
        let _ = writeln!(s, "slides: {}, uncategorized flags: {}", self.slides, self.reviewer.overall.false_positives);
        if let Some(h) = &self.convergence {
            let dist: Vec<String> = h.counts.iter().map(|(k, v)| format!("{k}:{v}")).collect();
            let _ = writeln!(
                s,
                "iterations: {} (not converged: {})",
                dist.join(" "),
                h.not_converged
            );
        }
        s
    }
}

/// Counts recovered from one refinement trace of a perturbed draft.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceCounts {
    /// Present when the first labeling of the draft came from the reviewer.
    pub reviewer: Option<ReviewerCounts>,
    pub responsiveness: ResponsivenessCounts,
}

/// Scores the trace's first labeling against `log` and every contributor
/// pass for responsiveness.
pub fn trace_counts(trace: &RefinementTrace, log: &PerturbationLog) -> Result<TraceCounts, MetricsError> {
    let reviewer = match trace.label_sources.first() {
        Some(LabelSource::Reviewer) => Some(reviewer_counts(&trace.snapshots[0].with_flags(&trace.flagged_sets[0]), log)?),
        _ => None,
    };
    let mut responsiveness = ResponsivenessCounts::default();
    for (k, flags) in trace.flagged_sets.iter().enumerate() {
        if flags.is_empty() {
            continue;
        }
        let (Some(input), Some(revised)) = (trace.snapshots.get(k), trace.snapshots.get(k + 1)) else {
            break;
        };
        responsiveness.merge(&responsiveness_counts(&input.with_flags(flags), revised, Some(log)));
    }
    Ok(TraceCounts {
        reviewer,
        responsiveness,
    })
}
