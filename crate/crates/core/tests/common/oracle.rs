//! Independent recounts used to check the metrics module.

use std::collections::BTreeMap;

use proptest::prelude::*;
use slideloop::model::*;
use slideloop::perturb::{perturb, Category, PerturbConfig, PerturbationKind, PerturbationLog};

use super::{arb_doc_with, GenOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cell {
    TruePositive(Category),
    FalseNegative(Category),
    FalsePositive,
    TrueNegative,
}

/// One confusion-matrix cell per element of the labeled doc.
pub fn confusion(labeled: &SlideDoc, log: &PerturbationLog) -> Vec<Cell> {
    labeled
        .elements
        .iter()
        .map(|e| {
            let cat = log
                .entries
                .iter()
                .find(|x| x.element_id == e.id && x.kind != PerturbationKind::ShapeRemoval)
                .map(|x| x.kind.category());
            match (e.status == Status::Tentative, cat) {
                (true, Some(c)) => Cell::TruePositive(c),
                (false, Some(c)) => Cell::FalseNegative(c),
                (true, None) => Cell::FalsePositive,
                (false, None) => Cell::TrueNegative,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReviewerRecount {
    pub tp: BTreeMap<Category, usize>,
    pub support: BTreeMap<Category, usize>,
    pub fp: usize,
    pub precision: BTreeMap<Category, Option<f64>>,
    pub recall: BTreeMap<Category, Option<f64>>,
}

pub fn recount_reviewer(labeled: &SlideDoc, log: &PerturbationLog) -> ReviewerRecount {
    let cells = confusion(labeled, log);
    let count = |want: Cell| cells.iter().filter(|c| **c == want).count();
    let fp = count(Cell::FalsePositive);
    let mut r = ReviewerRecount {
        tp: BTreeMap::new(),
        support: BTreeMap::new(),
        fp,
        precision: BTreeMap::new(),
        recall: BTreeMap::new(),
    };
    for c in Category::ALL {
        let tp = count(Cell::TruePositive(c));
        r.tp.insert(c, tp);
        r.support.insert(c, tp + count(Cell::FalseNegative(c)));
    }
    let total: usize = r.support.values().sum();
    for c in Category::ALL {
        let (tp, sc) = (r.tp[&c], r.support[&c]);
        let recall = (sc > 0).then(|| tp as f64 / sc as f64);
        let precision = if sc == 0 {
            None
        } else {
            let den = tp as f64 + fp as f64 * sc as f64 / total as f64;
            (den > 0.0).then(|| tp as f64 / den)
        };
        r.recall.insert(c, recall);
        r.precision.insert(c, precision);
    }
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponsivenessRecount {
    pub per_category: BTreeMap<Category, Option<f64>>,
    pub overall: Option<f64>,
}

/// Counts a flagged element as altered when the structural diff reports a
/// design change or a removal for it.
pub fn recount_responsiveness(labeled_in: &SlideDoc, revised: &SlideDoc, log: &PerturbationLog) -> ResponsivenessRecount {
    let changes = diff(labeled_in, revised);
    let mut tally: BTreeMap<Option<Category>, (usize, usize)> = BTreeMap::new();
    for e in labeled_in.elements.iter().filter(|e| e.status == Status::Tentative) {
        let altered = changes.iter().any(|d| d.id == e.id && !d.design_fields().is_empty());
        let cat = log.entry_for(&e.id).map(|x| x.kind.category());
        let t = tally.entry(cat).or_default();
        t.0 += 1;
        t.1 += usize::from(altered);
    }
    let frac = |(f, a): (usize, usize)| (f > 0).then(|| a as f64 / f as f64);
    let flagged: usize = tally.values().map(|t| t.0).sum();
    let altered: usize = tally.values().map(|t| t.1).sum();
    ResponsivenessRecount {
        per_category: Category::ALL
            .into_iter()
            .map(|c| (c, frac(tally.get(&Some(c)).copied().unwrap_or_default())))
            .collect(),
        overall: frac((flagged, altered)),
    }
}

/// What a synthetic contributor does to one element.
#[derive(Debug, Clone, Copy)]
pub enum Edit {
    Keep,
    Move,
    Remove,
    StatusOnly,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub labeled: SlideDoc,
    pub log: PerturbationLog,
    pub revised: SlideDoc,
}

fn arb_edit() -> impl Strategy<Value = Edit> {
    prop_oneof![Just(Edit::Keep), Just(Edit::Move), Just(Edit::Remove), Just(Edit::StatusOnly)]
}

/// A perturbed doc, a random flag set over it and a random revision.
pub fn arb_instance() -> impl Strategy<Value = Instance> {
    let opts = GenOptions {
        max_elements: 6,
        allow_tentative: false,
        ..GenOptions::default()
    };
    (
        arb_doc_with(opts),
        any::<u64>(),
        (1u32..=10).prop_map(|k| k as f64 / 10.0),
        prop::collection::vec(any::<bool>(), 12),
        prop::collection::vec(arb_edit(), 12),
        any::<bool>(),
    )
        .prop_map(|(doc, seed, severity, flags, edits, add)| {
            let (draft, log) = perturb(&doc, &PerturbConfig::new(seed, severity)).expect("valid config");
            let mut labeled = draft.clone();
            for (e, f) in labeled.elements.iter_mut().zip(flags.iter().cycle()) {
                if *f {
                    e.status = Status::Tentative;
                }
            }
            let mut revised = labeled.clone();
            let mut keep = Vec::new();
            for (e, edit) in revised.elements.iter_mut().zip(edits.iter().cycle()) {
                match edit {
                    Edit::Keep => keep.push(true),
                    Edit::Move => {
                        e.position.x += 1;
                        keep.push(true)
                    }
                    Edit::Remove => keep.push(false),
                    Edit::StatusOnly => {
                        e.status = Status::Final;
                        keep.push(true)
                    }
                }
            }
            let mut it = keep.into_iter();
            revised.elements.retain(|_| it.next().unwrap());
            if add {
                let id = revised.fresh_id(labeled.ids());
                revised.elements.push(Element::auto_shape(id, ShapeName::rectangle(), Geometry::new(0, 0, 100, 100)));
            }
            Instance { labeled, log, revised }
        })
}
