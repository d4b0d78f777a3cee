//! Seeded draft simulation.
//!
//! [`perturb`] picks `round(severity * n)` elements of a finished slide and
//! applies one flaw to each, recording a [`PerturbationLog`] that is enough
//! to undo every step ([`reverse_replay`]) and to score reviewers exactly.

mod dataset;

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::model::{
    element_from_value, element_to_value, validate, Alignment, CodecError, Color, Element, Fill, FillMode, ParseMode,
    SlideDoc, Violation,
};
use crate::pptx::{hsl_to_rgb, rgb_to_hsl};

pub use dataset::{batch_generate, make_training_pair, DatasetError, Manifest, SlideFailure, TrainingPair};

/// Fonts a rough draft falls back to.
pub const DEFAULT_FONTS: [&str; 3] = ["Arial", "Roboto", "Calibri"];
/// Font size, in points, given to reset text.
pub const DEFAULT_FONT_SIZE: f64 = 18.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    ShapeRemoval,
    ShapeDuplication,
    PositionShift,
    ColorAlteration,
    TextAttributeReset,
    FillReset,
}

impl PerturbationKind {
    pub const ALL: [PerturbationKind; 6] = [
        PerturbationKind::ShapeRemoval,
        PerturbationKind::ShapeDuplication,
        PerturbationKind::PositionShift,
        PerturbationKind::ColorAlteration,
        PerturbationKind::TextAttributeReset,
        PerturbationKind::FillReset,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PerturbationKind::ShapeRemoval => "shape_removal",
            PerturbationKind::ShapeDuplication => "shape_duplication",
            PerturbationKind::PositionShift => "position_shift",
            PerturbationKind::ColorAlteration => "color_alteration",
            PerturbationKind::TextAttributeReset => "text_attribute_reset",
            PerturbationKind::FillReset => "fill_reset",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn category(self) -> Category {
        match self {
            PerturbationKind::PositionShift => Category::ShapePlacement,
            PerturbationKind::ShapeRemoval | PerturbationKind::ShapeDuplication => Category::ShapeRemoval,
            PerturbationKind::ColorAlteration | PerturbationKind::FillReset => Category::ColorAttributes,
            PerturbationKind::TextAttributeReset => Category::TextAttributes,
        }
    }
}

impl fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Flaw families used when scoring reviewers and contributors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    ShapePlacement,
    ShapeRemoval,
    ColorAttributes,
    TextAttributes,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::ShapePlacement,
        Category::ShapeRemoval,
        Category::ColorAttributes,
        Category::TextAttributes,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::ShapePlacement => "shape_placement",
            Category::ShapeRemoval => "shape_removal",
            Category::ColorAttributes => "color_attributes",
            Category::TextAttributes => "text_attributes",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Category::ShapePlacement => "Shape Placement",
            Category::ShapeRemoval => "Shape Removal",
            Category::ColorAttributes => "Color Attributes",
            Category::TextAttributes => "Text Attributes",
        }
    }
}

/// Distribution parameters for each kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Magnitudes {
    /// Position shift bounds as fractions of the canvas dimension.
    pub shift_min: f64,
    pub shift_max: f64,
    /// Duplicate offset bounds as fractions of the element's own extent.
    pub duplicate_offset_min: f64,
    pub duplicate_offset_max: f64,
    /// Chance that a color alteration resets to black text on white
    /// instead of rotating to a random hue.
    pub color_default_probability: f64,
}

impl Default for Magnitudes {
    fn default() -> Self {
        Magnitudes {
            shift_min: 0.02,
            shift_max: 0.10,
            duplicate_offset_min: 0.01,
            duplicate_offset_max: 0.02,
            color_default_probability: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbConfig {
    pub seed: u64,
    pub severity: f64,
    pub enabled_kinds: BTreeSet<PerturbationKind>,
    pub magnitudes: Magnitudes,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        PerturbConfig {
            seed: 0,
            severity: 0.3,
            enabled_kinds: PerturbationKind::ALL.into_iter().collect(),
            magnitudes: Magnitudes::default(),
        }
    }
}

impl PerturbConfig {
    pub fn new(seed: u64, severity: f64) -> Self {
        PerturbConfig {
            seed,
            severity,
            ..Self::default()
        }
    }

    pub fn with_kinds(mut self, kinds: impl IntoIterator<Item = PerturbationKind>) -> Self {
        self.enabled_kinds = kinds.into_iter().collect();
        self
    }

    pub fn validate(&self) -> Result<(), PerturbError> {
        let bad = |msg: String| Err(PerturbError::Config(msg));
        let unit = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        let m = &self.magnitudes;
        if !unit(self.severity) {
            return bad(format!("severity {} outside [0,1]", self.severity));
        }
        if self.severity > 0.0 && self.enabled_kinds.is_empty() {
            return bad("no perturbation kinds enabled".into());
        }
        if !(unit(m.shift_min) && unit(m.shift_max) && m.shift_min <= m.shift_max) {
            return bad(format!("shift range [{}, {}] is not an ordered sub-range of [0,1]", m.shift_min, m.shift_max));
        }
        if !(unit(m.duplicate_offset_min) && unit(m.duplicate_offset_max) && m.duplicate_offset_min <= m.duplicate_offset_max)
        {
            return bad(format!(
                "duplicate offset range [{}, {}] is not an ordered sub-range of [0,1]",
                m.duplicate_offset_min, m.duplicate_offset_max
            ));
        }
        if !unit(m.color_default_probability) {
            return bad(format!("color default probability {} outside [0,1]", m.color_default_probability));
        }
        Ok(())
    }
}

/// One applied flaw. `index` is the z-position the element had (removal) or
/// received (duplication) when the step ran.
#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    pub element_id: String,
    pub kind: PerturbationKind,
    pub index: usize,
    /// Element before the step; `None` for a duplication.
    pub original: Option<Element>,
    /// Element after the step; `None` for a removal.
    pub applied: Option<Element>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PerturbationLog {
    pub seed: u64,
    pub severity: f64,
    pub entries: Vec<LogEntry>,
    pub warnings: Vec<String>,
    /// Chosen elements no enabled kind could be applied to.
    pub exempt: Vec<String>,
}

impl PerturbationLog {
    /// Ids that are present in the perturbed doc and carry a flaw.
    pub fn flawed_ids(&self) -> BTreeSet<String> {
        self.entries
            .iter()
            .filter(|e| e.kind != PerturbationKind::ShapeRemoval)
            .map(|e| e.element_id.clone())
            .collect()
    }

    pub fn entry_for(&self, id: &str) -> Option<&LogEntry> {
        self.entries
            .iter()
            .find(|e| e.element_id == id && e.kind != PerturbationKind::ShapeRemoval)
    }

    pub fn count(&self, kind: PerturbationKind) -> usize {
        self.entries.iter().filter(|e| e.kind == kind).count()
    }

    pub fn to_value(&self) -> Value {
        let entries: Vec<Value> = self
            .entries
            .iter()
            .map(|e| {
                json!({
                    "element_id": e.element_id,
                    "kind": e.kind.as_str(),
                    "index": e.index,
                    "original": e.original.as_ref().map(element_to_value),
                    "applied": e.applied.as_ref().map(element_to_value),
                })
            })
            .collect();
        json!({
            "seed": self.seed,
            "severity": self.severity,
            "entries": entries,
            "warnings": self.warnings,
            "exempt": self.exempt,
        })
    }

    pub fn to_json(&self) -> String {
        self.to_value().to_string()
    }

    pub fn from_value(v: &Value) -> Result<Self, CodecError> {
        let schema = |path: &str, message: &str| CodecError::Schema {
            path: path.to_string(),
            message: message.to_string(),
        };
        let obj = v.as_object().ok_or_else(|| schema("", "log must be an object"))?;
        let seed = obj.get("seed").and_then(Value::as_u64).ok_or_else(|| schema("seed", "expected u64"))?;
        let severity = obj
            .get("severity")
            .and_then(Value::as_f64)
            .ok_or_else(|| schema("severity", "expected number"))?;
        let strings = |key: &str| -> Result<Vec<String>, CodecError> {
            match obj.get(key) {
                None => Ok(Vec::new()),
                Some(Value::Array(a)) => a
                    .iter()
                    .map(|s| s.as_str().map(str::to_string).ok_or_else(|| schema(key, "expected strings")))
                    .collect(),
                Some(_) => Err(schema(key, "expected array")),
            }
        };
        let mut entries = Vec::new();
        let raw = obj
            .get("entries")
            .and_then(Value::as_array)
            .ok_or_else(|| schema("entries", "expected array"))?;
        for (i, e) in raw.iter().enumerate() {
            let path = |k: &str| format!("entries[{i}].{k}");
            let field = |k: &str| e.get(k).ok_or_else(|| schema(&path(k), "missing"));
            let element_id = field("element_id")?
                .as_str()
                .ok_or_else(|| schema(&path("element_id"), "expected string"))?
                .to_string();
            let kind = field("kind")?
                .as_str()
                .and_then(PerturbationKind::parse)
                .ok_or_else(|| schema(&path("kind"), "unknown perturbation kind"))?;
            let index = field("index")?
                .as_u64()
                .ok_or_else(|| schema(&path("index"), "expected index"))? as usize;
            let snapshot = |k: &str| -> Result<Option<Element>, CodecError> {
                match e.get(k) {
                    None | Some(Value::Null) => Ok(None),
                    Some(v) => element_from_value(v, ParseMode::Tolerant).map(Some).map_err(|err| match err {
                        CodecError::Schema { path: p, message } => CodecError::Schema {
                            path: format!("{}.{p}", path(k)),
                            message,
                        },
                        other => other,
                    }),
                }
            };
            entries.push(LogEntry {
                element_id,
                kind,
                index,
                original: snapshot("original")?,
                applied: snapshot("applied")?,
            });
        }
        Ok(PerturbationLog {
            seed,
            severity,
            entries,
            warnings: strings("warnings")?,
            exempt: strings("exempt")?,
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

#[derive(Debug, thiserror::Error)]
pub enum PerturbError {
    #[error("invalid perturbation config: {0}")]
    Config(String),
    #[error("input slide is invalid: {}", .0.first().map(|v| v.to_string()).unwrap_or_default())]
    InvalidDoc(Vec<Violation>),
    #[error("log does not match the document: {0}")]
    Replay(String),
}

/// Applies seeded flaws to `doc`. The result is a pure function of its inputs.
pub fn perturb(doc: &SlideDoc, config: &PerturbConfig) -> Result<(SlideDoc, PerturbationLog), PerturbError> {
    config.validate()?;
    let violations = validate(doc);
    if !violations.is_empty() {
        return Err(PerturbError::InvalidDoc(violations));
    }

    let mut log = PerturbationLog {
        seed: config.seed,
        severity: config.severity,
        ..Default::default()
    };
    let mut out = doc.clone();
    if config.severity == 0.0 {
        return Ok((out, log));
    }
    let n = doc.elements.len();
    if n == 0 {
        log.warnings
            .push(format!("slide {:?} has no elements; nothing to perturb", doc.source_id));
        return Ok((out, log));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let k = ((config.severity * n as f64).round() as usize).clamp(1, n);
    let mut chosen = rand::seq::index::sample(&mut rng, n, k).into_vec();
    chosen.sort_unstable();
    let chosen: Vec<String> = chosen.into_iter().map(|i| doc.elements[i].id.clone()).collect();
    let reserved: Vec<&str> = doc.ids().collect();

    for id in chosen {
        let kinds: Vec<PerturbationKind> = config
            .enabled_kinds
            .iter()
            .copied()
            .filter(|&kind| applicable(&out, &id, kind))
            .collect();
        let Some(&kind) = kinds.choose(&mut rng) else {
            log.exempt.push(id);
            continue;
        };
        let entry = apply(&mut out, &id, kind, config, &reserved, &mut rng);
        log.entries.push(entry);
    }
    Ok((out, log))
}

fn applicable(doc: &SlideDoc, id: &str, kind: PerturbationKind) -> bool {
    let Some(e) = doc.element(id) else {
        return false;
    };
    let auto = e.is_auto_shape();
    match kind {
        PerturbationKind::PositionShift => true,
        PerturbationKind::ShapeRemoval => {
            auto && (!e.has_text() || doc.elements.iter().filter(|o| o.has_text()).count() > 1)
        }
        PerturbationKind::ShapeDuplication | PerturbationKind::FillReset => auto,
        PerturbationKind::ColorAlteration => auto && (!e.fill.colors.is_empty() || e.has_text()),
        PerturbationKind::TextAttributeReset => e.has_text(),
    }
}

fn apply(
    doc: &mut SlideDoc,
    id: &str,
    kind: PerturbationKind,
    config: &PerturbConfig,
    reserved: &[&str],
    rng: &mut ChaCha8Rng,
) -> LogEntry {
    let index = doc.index_of(id).expect("chosen element exists");
    let original = doc.elements[index].clone();
    let m = &config.magnitudes;
    match kind {
        PerturbationKind::ShapeRemoval => {
            doc.elements.remove(index);
            LogEntry {
                element_id: id.to_string(),
                kind,
                index,
                original: Some(original),
                applied: None,
            }
        }
        PerturbationKind::ShapeDuplication => {
            let mut copy = original.clone();
            copy.id = doc.fresh_id(reserved.iter().copied());
            let dx = signed_fraction(rng, m.duplicate_offset_min, m.duplicate_offset_max, false) * original.position.width as f64;
            let dy =
                signed_fraction(rng, m.duplicate_offset_min, m.duplicate_offset_max, false) * original.position.height as f64;
            copy.position.x += nudge(dx);
            copy.position.y += nudge(dy);
            doc.elements.insert(index + 1, copy.clone());
            LogEntry {
                element_id: copy.id.clone(),
                kind,
                index: index + 1,
                original: None,
                applied: Some(copy),
            }
        }
        _ => {
            let changed = match kind {
                PerturbationKind::PositionShift => shift(&original, doc, m, rng),
                PerturbationKind::ColorAlteration => recolor(&original, m, rng),
                PerturbationKind::TextAttributeReset => reset_text(&original, rng),
                PerturbationKind::FillReset => reset_fill(&original),
                PerturbationKind::ShapeRemoval | PerturbationKind::ShapeDuplication => unreachable!(),
            };
            doc.elements[index] = changed.clone();
            LogEntry {
                element_id: id.to_string(),
                kind,
                index,
                original: Some(original),
                applied: Some(changed),
            }
        }
    }
}

fn signed_fraction(rng: &mut ChaCha8Rng, lo: f64, hi: f64, signed: bool) -> f64 {
    let v = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
    if signed && rng.gen_bool(0.5) {
        -v
    } else {
        v
    }
}

/// Rounds an EMU offset, never to zero.
fn nudge(v: f64) -> i64 {
    let r = v.round() as i64;
    if r != 0 {
        r
    } else if v < 0.0 {
        -1
    } else {
        1
    }
}

fn shift(e: &Element, doc: &SlideDoc, m: &Magnitudes, rng: &mut ChaCha8Rng) -> Element {
    let mut out = e.clone();
    let axis = rng.gen_range(0..3);
    if axis != 1 {
        out.position.x += nudge(signed_fraction(rng, m.shift_min, m.shift_max, true) * doc.canvas_width as f64);
    }
    if axis != 0 {
        out.position.y += nudge(signed_fraction(rng, m.shift_min, m.shift_max, true) * doc.canvas_height as f64);
    }
    out
}

fn map_colors(e: &Element, fill: impl Fn(&Color) -> Color, text: impl Fn(&Color) -> Color) -> Element {
    let mut out = e.clone();
    for c in &mut out.fill.colors {
        *c = fill(c);
    }
    if let Some(t) = &mut out.text {
        for r in &mut t.runs {
            r.color = text(&r.color);
        }
    }
    out
}

fn with_hue(c: &Color, hue: f64) -> Color {
    let (_, mut s, mut l) = rgb_to_hsl(c.channels().unwrap_or((0, 0, 0)));
    if s < 0.1 {
        s = 0.6;
        l = 0.5;
    }
    let (r, g, b) = hsl_to_rgb(hue, s, l);
    Color::from_rgb(r, g, b).with_alpha(c.alpha)
}

fn recolor(e: &Element, m: &Magnitudes, rng: &mut ChaCha8Rng) -> Element {
    if rng.gen_bool(m.color_default_probability) {
        let reset = map_colors(
            e,
            |c| Color::white().with_alpha(c.alpha),
            |c| Color::black().with_alpha(c.alpha),
        );
        if !reset.same_design(e) {
            return reset;
        }
    }
    let hue = rng.gen_range(0.0..360.0);
    let mut candidate = e.clone();
    for step in 0..3 {
        let h = (hue + 120.0 * step as f64) % 360.0;
        candidate = map_colors(e, |c| with_hue(c, h), |c| with_hue(c, h));
        if !candidate.same_design(e) {
            break;
        }
    }
    candidate
}

fn reset_text(e: &Element, rng: &mut ChaCha8Rng) -> Element {
    let mut out = e.clone();
    let Some(text) = &mut out.text else {
        return out;
    };
    let used: BTreeSet<&str> = e
        .text
        .iter()
        .flat_map(|t| t.runs.iter().map(|r| r.font_name.as_str()))
        .collect();
    let mut pool: Vec<&str> = DEFAULT_FONTS.iter().copied().filter(|f| !used.contains(f)).collect();
    if pool.is_empty() {
        let first = text.runs[0].font_name.clone();
        pool = DEFAULT_FONTS.iter().copied().filter(|f| *f != first).collect();
    }
    let font = *pool.choose(rng).expect("at least two default fonts");
    for r in &mut text.runs {
        r.font_name = font.to_string();
        r.font_size = DEFAULT_FONT_SIZE;
    }
    text.alignment = Alignment::Left;
    text.line_spacing = 1.0;
    out
}

fn reset_fill(e: &Element) -> Element {
    let white = Fill::solid(Color::white());
    let mut out = e.clone();
    out.fill = if e.fill == white { Fill::none() } else { white };
    out
}

/// Undoes `log` on `perturbed`, newest entry first.
pub fn reverse_replay(perturbed: &SlideDoc, log: &PerturbationLog) -> Result<SlideDoc, PerturbError> {
    let mut doc = perturbed.clone();
    for entry in log.entries.iter().rev() {
        match entry.kind {
            PerturbationKind::ShapeRemoval => {
                let original = entry
                    .original
                    .clone()
                    .ok_or_else(|| PerturbError::Replay(format!("removal of {} has no snapshot", entry.element_id)))?;
                if entry.index > doc.elements.len() || doc.element(&original.id).is_some() {
                    return Err(PerturbError::Replay(format!(
                        "cannot re-insert {} at {}",
                        entry.element_id, entry.index
                    )));
                }
                doc.elements.insert(entry.index, original);
            }
            PerturbationKind::ShapeDuplication => {
                let i = doc
                    .index_of(&entry.element_id)
                    .ok_or_else(|| PerturbError::Replay(format!("duplicate {} is missing", entry.element_id)))?;
                doc.elements.remove(i);
            }
            _ => {
                let original = entry
                    .original
                    .clone()
                    .ok_or_else(|| PerturbError::Replay(format!("entry for {} has no snapshot", entry.element_id)))?;
                let slot = doc
                    .element_mut(&entry.element_id)
                    .ok_or_else(|| PerturbError::Replay(format!("element {} is missing", entry.element_id)))?;
                *slot = original;
            }
        }
    }
    Ok(doc)
}

/// True when a fill is plain white or absent, the look of an unstyled draft.
pub fn is_default_fill(fill: &Fill) -> bool {
    match fill.mode {
        FillMode::None => true,
        FillMode::Solid => fill.colors.iter().all(Color::is_white),
        _ => false,
    }
}
