//! Deterministic rule-based backends.
//!
//! Rules, checked in order for every element:
//!
//! 1. the element extends beyond the canvas;
//! 2. a run uses a default font while another element uses a non-default one;
//! 3. the element nearly duplicates an earlier one (same kind and text,
//!    geometry IoU above a threshold);
//! 4. plain black-on-white coloring on a slide that has its own palette;
//! 5. an edge sits near a dominant alignment line but not on it. A line is
//!    dominant when at least two other elements share it.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::model::{Alignment, Color, Element, FillMode, SlideDoc, Status};
use crate::perturb::DEFAULT_FONTS;
use crate::pptx::{hsl_to_rgb, rgb_to_hsl};

use super::{Contributor, RoleError, Reviewer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeuristicConfig {
    /// Font used when a slide has no non-default font to borrow.
    pub house_font: String,
    /// How far from a dominant line an edge counts as "near", as a fraction
    /// of canvas width.
    pub near_fraction: f64,
    /// Edges closer than this fraction of canvas width are the same line.
    pub tolerance_fraction: f64,
    pub duplicate_iou: f64,
    pub grid_columns: u32,
    /// Restyle flagged elements no rule explains (snap to grid, then
    /// permute palette) instead of leaving them as they are.
    pub restyle_undiagnosed: bool,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            house_font: "Georgia".into(),
            near_fraction: 0.02,
            tolerance_fraction: 0.005,
            duplicate_iou: 0.9,
            grid_columns: 8,
            restyle_undiagnosed: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    Left,
    Right,
    Top,
    Bottom,
}

impl Edge {
    const ALL: [Edge; 4] = [Edge::Left, Edge::Right, Edge::Top, Edge::Bottom];

    fn of(self, e: &Element) -> i64 {
        let g = &e.position;
        match self {
            Edge::Left => g.x,
            Edge::Right => g.right(),
            Edge::Top => g.y,
            Edge::Bottom => g.bottom(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Finding {
    OffCanvas,
    DefaultFont,
    NearDuplicate { of: String },
    DefaultColors,
    Misaligned { edge: Edge, line: i64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnosis {
    pub id: String,
    pub findings: Vec<Finding>,
}

fn is_default_font(name: &str) -> bool {
    DEFAULT_FONTS.contains(&name)
}

fn is_plain(c: &Color) -> bool {
    c.is_black() || c.is_white()
}

fn colors_of(e: &Element) -> impl Iterator<Item = &Color> {
    e.fill
        .colors
        .iter()
        .chain(e.text.iter().flat_map(|t| t.runs.iter().map(|r| &r.color)))
}

fn fonts_of(e: &Element) -> impl Iterator<Item = &str> {
    e.text.iter().flat_map(|t| t.runs.iter().map(|r| r.font_name.as_str()))
}

/// Non-plain colors by descending frequency, ties broken by value.
pub fn palette(doc: &SlideDoc) -> Vec<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for c in doc.elements.iter().flat_map(colors_of).filter(|c| !is_plain(c)) {
        *counts.entry(c.rgb.as_str()).or_default() += 1;
    }
    let mut v: Vec<(&str, usize)> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    v.into_iter().map(|(c, _)| c.to_string()).collect()
}

/// Most frequent non-default font, ties broken by name.
pub fn dominant_font(doc: &SlideDoc) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for f in doc.elements.iter().flat_map(fonts_of).filter(|f| !is_default_font(f)) {
        *counts.entry(f).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(a.0)))
        .map(|(f, _)| f.to_string())
}

/// Runs every rule and returns the findings for each flagged element, in
/// document order.
pub fn diagnose(doc: &SlideDoc, cfg: &HeuristicConfig) -> Vec<Diagnosis> {
    let (cw, ch) = (doc.canvas_width, doc.canvas_height);
    let tol = (cfg.tolerance_fraction * cw as f64).round() as i64;
    let near = (cfg.near_fraction * cw as f64).round() as i64;
    let mut out = Vec::new();

    for (i, e) in doc.elements.iter().enumerate() {
        let others = || doc.elements.iter().enumerate().filter(move |(j, _)| *j != i).map(|(_, o)| o);
        let mut findings = Vec::new();
        let g = &e.position;

        if g.x < 0 || g.y < 0 || g.right() > cw || g.bottom() > ch {
            findings.push(Finding::OffCanvas);
        }

        if fonts_of(e).any(is_default_font) && others().flat_map(fonts_of).any(|f| !is_default_font(f)) {
            findings.push(Finding::DefaultFont);
        }

        if let Some(first) = doc.elements[..i].iter().find(|o| {
            o.kind == e.kind
                && o.has_text() == e.has_text()
                && o.plain_text() == e.plain_text()
                && o.position.iou(&e.position) > cfg.duplicate_iou
        }) {
            findings.push(Finding::NearDuplicate { of: first.id.clone() });
        }

        let white_fill = e.fill.mode != FillMode::None && e.fill.colors.iter().all(Color::is_white);
        let black_text = e
            .text
            .as_ref()
            .map_or(true, |t| t.runs.iter().any(|r| r.color.is_black()));
        if white_fill && black_text && others().flat_map(colors_of).any(|c| !is_plain(c)) {
            findings.push(Finding::DefaultColors);
        }

        for edge in Edge::ALL {
            let v = edge.of(e);
            let values: Vec<i64> = others().map(|o| edge.of(o)).collect();
            if values.iter().any(|o| (o - v).abs() <= tol) {
                continue;
            }
            let line = values
                .iter()
                .copied()
                .filter(|&l| values.iter().filter(|&&o| (o - l).abs() <= tol).count() >= 2)
                .filter(|&l| (l - v).abs() <= near)
                .min_by_key(|&l| ((l - v).abs(), l));
            if let Some(line) = line {
                findings.push(Finding::Misaligned { edge, line });
            }
        }

        if !findings.is_empty() {
            out.push(Diagnosis {
                id: e.id.clone(),
                findings,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Default)]
pub struct HeuristicReviewer {
    pub config: HeuristicConfig,
}

impl HeuristicReviewer {
    pub fn new(config: HeuristicConfig) -> Self {
        HeuristicReviewer { config }
    }
}

impl Reviewer for HeuristicReviewer {
    fn label(&self, doc: &SlideDoc) -> Result<SlideDoc, RoleError> {
        let ids: Vec<String> = diagnose(doc, &self.config).into_iter().map(|d| d.id).collect();
        Ok(doc.with_flags(&ids))
    }
}

#[derive(Debug, Clone, Default)]
pub struct HeuristicContributor {
    pub config: HeuristicConfig,
}

impl HeuristicContributor {
    pub fn new(config: HeuristicConfig) -> Self {
        HeuristicContributor { config }
    }
}

/// Parameters of one design alternative.
struct Style {
    columns: i64,
    palette_shift: usize,
}

impl Style {
    fn for_variant(variant: u64, cfg: &HeuristicConfig) -> Style {
        if variant == 0 {
            Style {
                columns: cfg.grid_columns.max(1) as i64,
                palette_shift: 0,
            }
        } else {
            Style {
                columns: 5 + (variant % 12) as i64,
                palette_shift: variant as usize,
            }
        }
    }
}

fn luminance(c: &Color) -> f64 {
    let (r, g, b) = c.channels().unwrap_or((0, 0, 0));
    (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64) / 255.0
}

fn clamp_into(e: &mut Element, cw: i64, ch: i64) {
    let g = &mut e.position;
    g.width = g.width.min(cw);
    g.height = g.height.min(ch);
    g.x = g.x.clamp(0, cw - g.width);
    g.y = g.y.clamp(0, ch - g.height);
}

fn snap(v: i64, pitch: i64) -> i64 {
    if pitch <= 0 {
        return v;
    }
    ((v as f64 / pitch as f64).round() as i64) * pitch
}

fn permute_palette(e: &mut Element, palette: &[String], shift: usize) {
    if palette.len() < 2 || shift % palette.len() == 0 {
        return;
    }
    for c in &mut e.fill.colors {
        if let Some(k) = palette.iter().position(|p| *p == c.rgb) {
            c.rgb = palette[(k + shift) % palette.len()].clone();
        }
    }
}

impl HeuristicContributor {
    fn restyle(&self, e: &mut Element, doc: &SlideDoc, palette: &[String], style: &Style) {
        let (cw, ch) = (doc.canvas_width, doc.canvas_height);
        let before = e.clone();
        let pitch_x = cw / style.columns;
        let rows = ((style.columns as f64 * ch as f64 / cw as f64).round() as i64).max(1);
        let pitch_y = ch / rows;
        e.position.x = snap(e.position.x, pitch_x);
        e.position.y = snap(e.position.y, pitch_y);
        if e.position.right() > cw || e.position.bottom() > ch {
            clamp_into(e, cw, ch);
        }
        permute_palette(e, palette, style.palette_shift);
        if e.same_design(&before) {
            permute_palette(e, palette, 1);
        }
        if e.same_design(&before) {
            for c in &mut e.fill.colors {
                if let Some(rgb) = c.channels() {
                    let (h, s, l) = rgb_to_hsl(rgb);
                    let (r, g, b) = if s < 0.1 {
                        hsl_to_rgb(h, s, if l > 0.5 { l - 0.15 } else { l + 0.15 })
                    } else {
                        hsl_to_rgb((h + 30.0) % 360.0, s, l)
                    };
                    *c = Color::from_rgb(r, g, b).with_alpha(c.alpha);
                }
            }
        }
        if e.same_design(&before) {
            if let Some(t) = &mut e.text {
                t.alignment = if t.alignment == Alignment::Center {
                    Alignment::Left
                } else {
                    Alignment::Center
                };
            }
        }
        if e.same_design(&before) {
            let step = (pitch_x / 2).max(1);
            e.position.x = if e.position.right() + step <= cw {
                e.position.x + step
            } else {
                (e.position.x - step).max(0)
            };
        }
    }

    fn fix(&self, e: &mut Element, findings: &[Finding], doc: &SlideDoc, palette: &[String], font: &str, style: &Style) {
        let (cw, ch) = (doc.canvas_width, doc.canvas_height);
        for f in findings {
            match f {
                Finding::OffCanvas => clamp_into(e, cw, ch),
                Finding::DefaultFont => {
                    if let Some(t) = &mut e.text {
                        for r in &mut t.runs {
                            if is_default_font(&r.font_name) {
                                r.font_name = font.to_string();
                            }
                        }
                    }
                }
                Finding::NearDuplicate { .. } => {}
                Finding::DefaultColors => {
                    let Some(rgb) = palette.get(style.palette_shift % palette.len().max(1)) else {
                        continue;
                    };
                    let fill = Color::parse(rgb).expect("palette colors are well formed");
                    let dark = luminance(&fill) < 0.5;
                    for c in &mut e.fill.colors {
                        *c = fill.clone().with_alpha(c.alpha);
                    }
                    if let Some(t) = &mut e.text {
                        for r in &mut t.runs {
                            if dark && r.color.is_black() {
                                r.color = Color::white().with_alpha(r.color.alpha);
                            }
                        }
                    }
                }
                Finding::Misaligned { edge, line } => {
                    let g = &mut e.position;
                    match edge {
                        Edge::Left => g.x = *line,
                        Edge::Top => g.y = *line,
                        Edge::Right if *line > g.x => g.width = line - g.x,
                        Edge::Right => g.x = line - g.width,
                        Edge::Bottom if *line > g.y => g.height = line - g.y,
                        Edge::Bottom => g.y = line - g.height,
                    }
                }
            }
        }
    }
}

impl Contributor for HeuristicContributor {
    fn revise(&self, doc: &SlideDoc, variant: u64) -> Result<SlideDoc, RoleError> {
        let cfg = &self.config;
        let plain = doc.with_status(Status::Final);
        let findings: HashMap<String, Vec<Finding>> =
            diagnose(&plain, cfg).into_iter().map(|d| (d.id, d.findings)).collect();
        let palette = palette(doc);
        let font = dominant_font(doc).unwrap_or_else(|| cfg.house_font.clone());
        let style = Style::for_variant(variant, cfg);

        let mut dropped = BTreeSet::new();
        let mut out = plain.clone();
        for (e, labeled) in out.elements.iter_mut().zip(&doc.elements) {
            if labeled.status != Status::Tentative {
                continue;
            }
            let found = findings.get(&e.id).map(Vec::as_slice).unwrap_or(&[]);
            if found.iter().any(|f| matches!(f, Finding::NearDuplicate { .. })) {
                dropped.insert(e.id.clone());
                continue;
            }
            self.fix(e, found, &plain, &palette, &font, &style);
            if variant != 0 || (found.is_empty() && cfg.restyle_undiagnosed) {
                self.restyle(e, &plain, &palette, &style);
            }
        }
        out.elements.retain(|e| !dropped.contains(&e.id));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;
    use crate::roles::{contribute, review, touched_ids};

    fn card(id: &str, x: i64) -> Element {
        Element::auto_shape(id, ShapeName::rectangle(), Geometry::new(x, 2_000_000, 3_000_000, 2_000_000))
            .with_fill(Fill::solid(Color::parse("1F4E79").unwrap()))
            .with_text(TextFrame::single(TextRun::new(id, "Georgia", 20.0, Color::white())))
    }

    fn column() -> SlideDoc {
        let mut doc = SlideDoc::new("col", DEFAULT_CANVAS.0, DEFAULT_CANVAS.1);
        for (i, y) in [500_000, 1_500_000, 2_500_000, 3_500_000].into_iter().enumerate() {
            let mut e = card(&format!("e{i}"), 1_000_000);
            e.position.y = y;
            e.position.height = 800_000;
            doc.elements.push(e);
        }
        doc
    }

    #[test]
    fn clean_column_has_no_findings() {
        assert!(diagnose(&column(), &HeuristicConfig::default()).is_empty());
    }

    #[test]
    fn nudged_element_is_misaligned_and_snapped_back() {
        let mut doc = column();
        doc.elements[2].position.x += 90_000;
        let labeled = review(&HeuristicReviewer::default(), &doc).unwrap();
        assert_eq!(labeled.tentative_ids().into_iter().collect::<Vec<_>>(), vec!["e2".to_string()]);
        let fixed = contribute(&HeuristicContributor::default(), &labeled).unwrap();
        assert_eq!(touched_ids(&doc, &fixed), vec!["e2".to_string()]);
        assert_eq!(fixed, column());
    }

    #[test]
    fn default_font_takes_dominant_font() {
        let mut doc = column();
        doc.elements[1].text.as_mut().unwrap().runs[0].font_name = "Arial".into();
        let d = diagnose(&doc, &HeuristicConfig::default());
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].findings, vec![Finding::DefaultFont]);
        let fixed = contribute(&HeuristicContributor::default(), &doc.with_flags([&"e1".to_string()])).unwrap();
        assert_eq!(fixed, column());
    }

    #[test]
    fn duplicate_is_dropped() {
        let mut doc = column();
        let mut dup = doc.elements[0].clone();
        dup.id = "e9".into();
        dup.position.x += 20_000;
        dup.position.y += 10_000;
        doc.elements.insert(1, dup);
        let labeled = review(&HeuristicReviewer::default(), &doc).unwrap();
        assert!(labeled.tentative_ids().contains("e9"));
        let fixed = contribute(&HeuristicContributor::default(), &labeled).unwrap();
        assert!(fixed.element("e9").is_none());
    }

    #[test]
    fn white_box_takes_the_palette() {
        let mut doc = column();
        doc.elements[3].fill = Fill::solid(Color::white());
        doc.elements[3].text.as_mut().unwrap().runs[0].color = Color::black();
        let d = diagnose(&doc, &HeuristicConfig::default());
        assert_eq!(d[0].findings, vec![Finding::DefaultColors]);
        let fixed = contribute(&HeuristicContributor::default(), &doc.with_flags([&"e3".to_string()])).unwrap();
        assert_eq!(fixed.elements[3].fill, Fill::solid(Color::parse("1F4E79").unwrap()));
        assert!(fixed.elements[3].text.as_ref().unwrap().runs[0].color.is_white());
    }

    #[test]
    fn off_canvas_is_clamped() {
        let mut doc = column();
        doc.elements[0].position.x = -200_000;
        let d = diagnose(&doc, &HeuristicConfig::default());
        assert_eq!(d[0].findings[0], Finding::OffCanvas);
        let fixed = contribute(&HeuristicContributor::default(), &doc.with_flags([&"e0".to_string()])).unwrap();
        assert_eq!(fixed.elements[0].position.x, 0);
    }

    #[test]
    fn variants_differ_and_are_stable() {
        let doc = column().with_status(Status::Tentative);
        let c = HeuristicContributor::default();
        let a = contribute_v(&c, &doc, 3);
        let b = contribute_v(&c, &doc, 4);
        assert_ne!(a, b);
        assert_eq!(a, contribute_v(&c, &doc, 3));
    }

    fn contribute_v(c: &HeuristicContributor, doc: &SlideDoc, v: u64) -> SlideDoc {
        crate::roles::contribute_variant(c, doc, v).unwrap()
    }
}
