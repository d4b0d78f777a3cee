//! Slide data model and its canonical JSON wire format.
//!
//! A [`SlideDoc`] is an ordered list of design elements on a fixed-size
//! canvas. Geometry is integer EMU (914,400 per inch) so pptx ingest is
//! lossless. Element order is z-order, back to front.

mod diff;
mod json;
mod registry;
mod tokens;
mod validate;

use std::collections::BTreeSet;
use std::fmt;

pub use diff::{diff, Change, ElementDiff, SLIDE_DIFF_ID};
pub use json::{
    deck_from_json, deck_to_json, doc_from_value, doc_to_value, element_from_value, element_to_value, from_json, from_json_with, to_json, CodecError, ParseMode,
    SCHEMA_JSON, SCHEMA_VERSION,
};
pub use registry::{ShapeName, REGISTRY_SIZE};
pub use tokens::{estimate_token_length, TOKEN_BUDGET};
pub use validate::{validate, Rule, Violation};

/// EMU per inch.
pub const EMU_PER_INCH: i64 = 914_400;
/// EMU per pixel at 96 dpi.
pub const EMU_PER_PX: i64 = 9_525;

/// Widescreen 16:9 canvas used when a deck does not say otherwise.
pub const DEFAULT_CANVAS: (i64, i64) = (12_192_000, 6_858_000);

#[derive(Debug, Clone, PartialEq)]
pub struct SlideDoc {
    pub source_id: String,
    pub canvas_width: i64,
    pub canvas_height: i64,
    pub elements: Vec<Element>,
}

impl SlideDoc {
    pub fn new(source_id: impl Into<String>, canvas_width: i64, canvas_height: i64) -> Self {
        Self {
            source_id: source_id.into(),
            canvas_width,
            canvas_height,
            elements: Vec::new(),
        }
    }

    pub fn element(&self, id: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.id == id)
    }

    pub fn element_mut(&mut self, id: &str) -> Option<&mut Element> {
        self.elements.iter_mut().find(|e| e.id == id)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.elements.iter().position(|e| e.id == id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.elements.iter().map(|e| e.id.as_str())
    }

    pub fn tentative_ids(&self) -> BTreeSet<String> {
        self.elements
            .iter()
            .filter(|e| e.status == Status::Tentative)
            .map(|e| e.id.clone())
            .collect()
    }

    pub fn has_tentative(&self) -> bool {
        self.elements.iter().any(|e| e.status == Status::Tentative)
    }

    /// Copy of the document with every element set to `status`.
    pub fn with_status(&self, status: Status) -> SlideDoc {
        let mut doc = self.clone();
        for e in &mut doc.elements {
            e.status = status;
        }
        doc
    }

    /// Copy with exactly `ids` marked TENTATIVE and everything else FINAL.
    /// Ids not present in the document are ignored.
    pub fn with_flags<'a, I>(&self, ids: I) -> SlideDoc
    where
        I: IntoIterator<Item = &'a String>,
    {
        let flagged: BTreeSet<&str> = ids.into_iter().map(String::as_str).collect();
        let mut doc = self.clone();
        for e in &mut doc.elements {
            e.status = if flagged.contains(e.id.as_str()) {
                Status::Tentative
            } else {
                Status::Final
            };
        }
        doc
    }

    /// Returns an id of the form `e{n}` not used by this document or `reserved`.
    pub fn fresh_id<'a>(&self, reserved: impl IntoIterator<Item = &'a str>) -> String {
        let mut max = None::<u64>;
        let reserved: Vec<&str> = reserved.into_iter().collect();
        for id in self.ids().chain(reserved.iter().copied()) {
            if let Some(n) = id.strip_prefix('e').and_then(|s| s.parse::<u64>().ok()) {
                max = Some(max.map_or(n, |m| m.max(n)));
            }
        }
        let mut next = max.map_or(0, |m| m + 1);
        loop {
            let candidate = format!("e{next}");
            if self.element(&candidate).is_none() && !reserved.contains(&candidate.as_str()) {
                return candidate;
            }
            next += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub id: String,
    pub kind: ShapeKind,
    pub position: Geometry,
    pub fill: Fill,
    pub text: Option<TextFrame>,
    pub status: Status,
}

impl Element {
    pub fn auto_shape(id: impl Into<String>, name: ShapeName, position: Geometry) -> Self {
        Self {
            id: id.into(),
            kind: ShapeKind::AutoShape(name),
            position,
            fill: Fill::none(),
            text: None,
            status: Status::Final,
        }
    }

    pub fn placeholder(id: impl Into<String>, media: MediaKind, position: Geometry) -> Self {
        Self {
            id: id.into(),
            kind: ShapeKind::Placeholder(media),
            position,
            fill: Fill::none(),
            text: None,
            status: Status::Final,
        }
    }

    pub fn with_fill(mut self, fill: Fill) -> Self {
        self.fill = fill;
        self
    }

    pub fn with_text(mut self, text: TextFrame) -> Self {
        self.text = Some(text);
        self
    }

    pub fn is_auto_shape(&self) -> bool {
        matches!(self.kind, ShapeKind::AutoShape(_))
    }

    pub fn has_text(&self) -> bool {
        self.text.is_some()
    }

    /// Concatenated text of all runs, or empty.
    pub fn plain_text(&self) -> String {
        self.text
            .as_ref()
            .map(|t| t.runs.iter().map(|r| r.text.as_str()).collect())
            .unwrap_or_default()
    }

    /// Equality that ignores the status tag.
    pub fn same_design(&self, other: &Element) -> bool {
        self.id == other.id
            && self.kind == other.kind
            && self.position == other.position
            && self.fill == other.fill
            && self.text == other.text
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeKind {
    AutoShape(ShapeName),
    Placeholder(MediaKind),
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeKind::AutoShape(n) => write!(f, "{n}"),
            ShapeKind::Placeholder(m) => write!(f, "{}_placeholder", m.as_str()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MediaKind {
    Image,
    Video,
}

impl MediaKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MediaKind::Image => "image",
            MediaKind::Video => "video",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "image" => Some(MediaKind::Image),
            "video" => Some(MediaKind::Video),
            _ => None,
        }
    }
}

/// Position and extent in EMU, measured from the canvas top-left.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Geometry {
    pub x: i64,
    pub y: i64,
    pub width: i64,
    pub height: i64,
    /// Clockwise rotation in degrees.
    pub rotation: f64,
}

impl Geometry {
    pub fn new(x: i64, y: i64, width: i64, height: i64) -> Self {
        Self {
            x,
            y,
            width,
            height,
            rotation: 0.0,
        }
    }

    pub fn right(&self) -> i64 {
        self.x + self.width
    }

    pub fn bottom(&self) -> i64 {
        self.y + self.height
    }

    /// Intersection-over-union of the axis-aligned boxes. Degenerate boxes
    /// (zero union area) score 1 when identical and 0 otherwise.
    pub fn iou(&self, other: &Geometry) -> f64 {
        let ix = (self.right().min(other.right()) - self.x.max(other.x)).max(0) as f64;
        let iy = (self.bottom().min(other.bottom()) - self.y.max(other.y)).max(0) as f64;
        let inter = ix * iy;
        let union = (self.width as f64 * self.height as f64)
            + (other.width as f64 * other.height as f64)
            - inter;
        if union <= 0.0 {
            let same = self.x == other.x
                && self.y == other.y
                && self.width == other.width
                && self.height == other.height;
            return if same { 1.0 } else { 0.0 };
        }
        inter / union
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FillMode {
    Solid,
    Gradient,
    Pattern,
    None,
}

impl FillMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FillMode::Solid => "solid",
            FillMode::Gradient => "gradient",
            FillMode::Pattern => "pattern",
            FillMode::None => "none",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "solid" => Some(FillMode::Solid),
            "gradient" => Some(FillMode::Gradient),
            "pattern" => Some(FillMode::Pattern),
            "none" => Some(FillMode::None),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fill {
    pub mode: FillMode,
    /// One color for solid, two or more gradient stops, foreground then
    /// background for pattern, none for `none`.
    pub colors: Vec<Color>,
    pub transparency: f64,
}

impl Fill {
    pub fn none() -> Self {
        Self {
            mode: FillMode::None,
            colors: Vec::new(),
            transparency: 0.0,
        }
    }

    pub fn solid(color: Color) -> Self {
        Self {
            mode: FillMode::Solid,
            colors: vec![color],
            transparency: 0.0,
        }
    }

    pub fn gradient(colors: Vec<Color>) -> Self {
        Self {
            mode: FillMode::Gradient,
            colors,
            transparency: 0.0,
        }
    }

    pub fn pattern(foreground: Color, background: Color) -> Self {
        Self {
            mode: FillMode::Pattern,
            colors: vec![foreground, background],
            transparency: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Color {
    /// Six uppercase hex digits, `RRGGBB`.
    pub rgb: String,
    pub alpha: f64,
}

impl Color {
    /// Parses `RRGGBB` (case-insensitive, optional leading `#`).
    pub fn parse(s: &str) -> Option<Self> {
        let hex = s.strip_prefix('#').unwrap_or(s);
        if hex.len() == 6 && hex.bytes().all(|b| b.is_ascii_hexdigit()) {
            Some(Self {
                rgb: hex.to_ascii_uppercase(),
                alpha: 1.0,
            })
        } else {
            None
        }
    }

    pub fn from_rgb(r: u8, g: u8, b: u8) -> Self {
        Self {
            rgb: format!("{r:02X}{g:02X}{b:02X}"),
            alpha: 1.0,
        }
    }

    pub fn black() -> Self {
        Self::from_rgb(0, 0, 0)
    }

    pub fn white() -> Self {
        Self::from_rgb(255, 255, 255)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn is_well_formed(&self) -> bool {
        self.rgb.len() == 6 && self.rgb.bytes().all(|b| matches!(b, b'0'..=b'9' | b'A'..=b'F'))
    }

    /// Channel values, or `None` if `rgb` is malformed.
    pub fn channels(&self) -> Option<(u8, u8, u8)> {
        if !self.is_well_formed() {
            return None;
        }
        let v = u32::from_str_radix(&self.rgb, 16).ok()?;
        Some(((v >> 16) as u8, (v >> 8) as u8, v as u8))
    }

    pub fn is_black(&self) -> bool {
        self.rgb == "000000"
    }

    pub fn is_white(&self) -> bool {
        self.rgb == "FFFFFF"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Alignment {
    Left,
    Center,
    Right,
    Justify,
}

impl Alignment {
    pub fn as_str(self) -> &'static str {
        match self {
            Alignment::Left => "left",
            Alignment::Center => "center",
            Alignment::Right => "right",
            Alignment::Justify => "justify",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "left" => Some(Alignment::Left),
            "center" => Some(Alignment::Center),
            "right" => Some(Alignment::Right),
            "justify" => Some(Alignment::Justify),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextRun {
    pub text: String,
    pub font_name: String,
    /// Points.
    pub font_size: f64,
    pub color: Color,
}

impl TextRun {
    pub fn new(text: impl Into<String>, font_name: impl Into<String>, font_size: f64, color: Color) -> Self {
        Self {
            text: text.into(),
            font_name: font_name.into(),
            font_size,
            color,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextFrame {
    pub runs: Vec<TextRun>,
    /// Line spacing multiplier, 1.0 = single.
    pub line_spacing: f64,
    pub alignment: Alignment,
}

impl TextFrame {
    pub fn single(run: TextRun) -> Self {
        Self {
            runs: vec![run],
            line_spacing: 1.0,
            alignment: Alignment::Left,
        }
    }
}

/// Per-element review status. FINAL unless a reviewer flagged the element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Status {
    #[default]
    Final,
    Tentative,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Final => "FINAL",
            Status::Tentative => "TENTATIVE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "FINAL" => Some(Status::Final),
            "TENTATIVE" => Some(Status::Tentative),
            _ => None,
        }
    }
}

/// A deck: ordered slides plus light metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Deck {
    pub title: String,
    pub slides: Vec<SlideDoc>,
}

impl Deck {
    pub fn slide_count(&self) -> usize {
        self.slides.len()
    }
}
