use std::collections::HashMap;

use serde::Serialize;

use super::{Color, FillMode, ShapeKind, SlideDoc};

/// Which invariant a [`Violation`] breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    CanvasSize,
    EmptyId,
    DuplicateId,
    NegativeExtent,
    NonFiniteRotation,
    PlaceholderText,
    SolidColorCount,
    GradientColorCount,
    PatternColorCount,
    NoneFillColors,
    Transparency,
    ColorFormat,
    ColorAlpha,
    EmptyTextFrame,
    EmptyRun,
    FontName,
    FontSize,
    LineSpacing,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Offending element ids; empty for slide-level rules.
    pub element_ids: Vec<String>,
    pub rule: Rule,
    pub detail: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.element_ids.is_empty() {
            write!(f, "{:?}: {}", self.rule, self.detail)
        } else {
            write!(f, "[{}] {:?}: {}", self.element_ids.join(", "), self.rule, self.detail)
        }
    }
}

fn fraction_ok(v: f64) -> bool {
    v.is_finite() && (0.0..=1.0).contains(&v)
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, element_ids: Vec<String>, rule: Rule, detail: String) {
        self.0.push(Violation {
            element_ids,
            rule,
            detail,
        });
    }

    fn color(&mut self, id: &str, c: &Color, what: &str) {
        if !c.is_well_formed() {
            self.push(vec![id.to_string()], Rule::ColorFormat, format!("{what} rgb {:?} is not RRGGBB", c.rgb));
        }
        if !fraction_ok(c.alpha) {
            self.push(vec![id.to_string()], Rule::ColorAlpha, format!("{what} alpha {} outside [0,1]", c.alpha));
        }
    }
}

/// Checks every model invariant. An empty result means the document is valid.
pub fn validate(doc: &SlideDoc) -> Vec<Violation> {
    let mut out = Collector(Vec::new());

    if doc.canvas_width <= 0 || doc.canvas_height <= 0 {
        out.push(
            vec![],
            Rule::CanvasSize,
            format!("canvas {}x{} must be positive", doc.canvas_width, doc.canvas_height),
        );
    }

    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (i, e) in doc.elements.iter().enumerate() {
        if e.id.is_empty() {
            out.push(vec![], Rule::EmptyId, format!("element at index {i} has an empty id"));
        }
        if let Some(first) = seen.insert(e.id.as_str(), i) {
            out.push(
                vec![e.id.clone(), e.id.clone()],
                Rule::DuplicateId,
                format!("elements at index {first} and {i} share id {:?}", e.id),
            );
        }
    }

    for e in &doc.elements {
        let id = || vec![e.id.clone()];
        let g = &e.position;
        if g.width < 0 || g.height < 0 {
            out.push(id(), Rule::NegativeExtent, format!("extent {}x{}", g.width, g.height));
        }
        if !g.rotation.is_finite() {
            out.push(id(), Rule::NonFiniteRotation, "rotation is not finite".into());
        }
        if matches!(e.kind, ShapeKind::Placeholder(_)) && e.text.is_some() {
            out.push(id(), Rule::PlaceholderText, "media placeholders cannot carry text".into());
        }

        let n = e.fill.colors.len();
        match e.fill.mode {
            FillMode::Solid if n != 1 => {
                out.push(id(), Rule::SolidColorCount, format!("solid fill needs exactly 1 color, has {n}"))
            }
            FillMode::Gradient if n < 2 => out.push(
                id(),
                Rule::GradientColorCount,
                format!("gradient fill needs at least 2 colors, has {n}"),
            ),
            FillMode::Pattern if !(1..=2).contains(&n) => out.push(
                id(),
                Rule::PatternColorCount,
                format!("pattern fill needs 1 or 2 colors, has {n}"),
            ),
            FillMode::None if n != 0 => {
                out.push(id(), Rule::NoneFillColors, format!("fill mode none carries {n} colors"))
            }
            _ => {}
        }
        if !fraction_ok(e.fill.transparency) {
            out.push(id(), Rule::Transparency, format!("transparency {} outside [0,1]", e.fill.transparency));
        }
        for c in &e.fill.colors {
            out.color(&e.id, c, "fill");
        }

        if let Some(text) = &e.text {
            if text.runs.is_empty() {
                out.push(id(), Rule::EmptyTextFrame, "text frame has no runs".into());
            }
            if text.runs.len() > 1 && text.runs.iter().any(|r| r.text.is_empty()) {
                out.push(id(), Rule::EmptyRun, "empty run text is only allowed for a sole run".into());
            }
            for r in &text.runs {
                if r.font_name.trim().is_empty() {
                    out.push(id(), Rule::FontName, "run has an empty font name".into());
                }
                if !(r.font_size.is_finite() && r.font_size > 0.0) {
                    out.push(id(), Rule::FontSize, format!("font size {} must be > 0", r.font_size));
                }
                out.color(&e.id, &r.color, "text");
            }
            if !(text.line_spacing.is_finite() && text.line_spacing > 0.0) {
                out.push(id(), Rule::LineSpacing, format!("line spacing {} must be > 0", text.line_spacing));
            }
        }
    }
    out.0
}
