//! Canonical JSON codec for [`SlideDoc`].
//!
//! The writer is deterministic: compact output, keys in the order fixed by
//! `resources/slidedoc.schema.json`, integer EMU, defaults omitted (rotation
//! 0, transparency 0, alpha 1). Statuses are written only when at least one
//! element is TENTATIVE, in which case every element carries one.
//!
//! The strict reader accepts exactly that key order (whitespace is free).
//! The tolerant reader is meant for model output: keys in any order, unknown
//! keys ignored, trailing commas dropped, integral floats accepted for EMU,
//! and loose spellings of colors and status tags.

use serde_json::{Map, Number, Value};

use super::validate::{validate, Violation};
use super::{
    Alignment, Color, Deck, Element, Fill, FillMode, Geometry, MediaKind, ShapeKind, ShapeName, SlideDoc,
    Status, TextFrame, TextRun,
};

/// Version tag of the wire format described by [`SCHEMA_JSON`].
pub const SCHEMA_VERSION: &str = "slidedoc/1";

/// The shipped JSON Schema document for the wire format.
pub const SCHEMA_JSON: &str = include_str!("../../resources/slidedoc.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    #[default]
    Strict,
    Tolerant,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CodecError {
    #[error("malformed JSON at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("element {element_id:?} uses shape {name:?}, which is outside the supported shape set")]
    Scope { element_id: String, name: String },
    #[error("document violates {} invariant(s): {}", .0.len(), join_violations(.0))]
    Invalid(Vec<Violation>),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

const DOC_KEYS: &[&str] = &["source_id", "canvas_width", "canvas_height", "elements"];
const ELEMENT_KEYS: &[&str] = &["id", "kind", "position", "fill", "text", "status"];
const KIND_KEYS: &[&str] = &["auto_shape", "placeholder"];
const POSITION_KEYS: &[&str] = &["x", "y", "width", "height", "rotation"];
const FILL_KEYS: &[&str] = &["mode", "colors", "transparency"];
const COLOR_KEYS: &[&str] = &["rgb", "alpha"];
const TEXT_KEYS: &[&str] = &["runs", "line_spacing", "alignment"];
const RUN_KEYS: &[&str] = &["text", "font_name", "font_size", "color"];

// ---------------------------------------------------------------- writing

fn float(v: f64) -> Value {
    Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

fn color_value(c: &Color) -> Value {
    let mut m = Map::new();
    m.insert("rgb".into(), Value::String(c.rgb.clone()));
    if c.alpha != 1.0 {
        m.insert("alpha".into(), float(c.alpha));
    }
    Value::Object(m)
}

fn element_value(e: &Element, write_status: bool) -> Value {
    let mut m = Map::new();
    m.insert("id".into(), Value::String(e.id.clone()));

    let mut kind = Map::new();
    match e.kind {
        ShapeKind::AutoShape(name) => kind.insert("auto_shape".into(), Value::String(name.as_str().into())),
        ShapeKind::Placeholder(media) => kind.insert("placeholder".into(), Value::String(media.as_str().into())),
    };
    m.insert("kind".into(), Value::Object(kind));

    let g = &e.position;
    let mut pos = Map::new();
    pos.insert("x".into(), g.x.into());
    pos.insert("y".into(), g.y.into());
    pos.insert("width".into(), g.width.into());
    pos.insert("height".into(), g.height.into());
    if g.rotation != 0.0 {
        pos.insert("rotation".into(), float(g.rotation));
    }
    m.insert("position".into(), Value::Object(pos));

    let mut fill = Map::new();
    fill.insert("mode".into(), Value::String(e.fill.mode.as_str().into()));
    if !e.fill.colors.is_empty() {
        fill.insert("colors".into(), Value::Array(e.fill.colors.iter().map(color_value).collect()));
    }
    if e.fill.transparency != 0.0 {
        fill.insert("transparency".into(), float(e.fill.transparency));
    }
    m.insert("fill".into(), Value::Object(fill));

    if let Some(t) = &e.text {
        let runs = t
            .runs
            .iter()
            .map(|r| {
                let mut rm = Map::new();
                rm.insert("text".into(), Value::String(r.text.clone()));
                rm.insert("font_name".into(), Value::String(r.font_name.clone()));
                rm.insert("font_size".into(), float(r.font_size));
                rm.insert("color".into(), color_value(&r.color));
                Value::Object(rm)
            })
            .collect();
        let mut tm = Map::new();
        tm.insert("runs".into(), Value::Array(runs));
        tm.insert("line_spacing".into(), float(t.line_spacing));
        tm.insert("alignment".into(), Value::String(t.alignment.as_str().into()));
        m.insert("text".into(), Value::Object(tm));
    }

    if write_status {
        m.insert("status".into(), Value::String(e.status.as_str().into()));
    }
    Value::Object(m)
}

/// Canonical JSON value of a document. Does not validate.
pub fn doc_to_value(doc: &SlideDoc) -> Value {
    let write_status = doc.has_tentative();
    let mut m = Map::new();
    m.insert("source_id".into(), Value::String(doc.source_id.clone()));
    m.insert("canvas_width".into(), doc.canvas_width.into());
    m.insert("canvas_height".into(), doc.canvas_height.into());
    m.insert(
        "elements".into(),
        Value::Array(doc.elements.iter().map(|e| element_value(e, write_status)).collect()),
    );
    Value::Object(m)
}

/// Canonical JSON value of one element. The status is always written.
pub fn element_to_value(e: &Element) -> Value {
    element_value(e, true)
}

/// Serializes a valid document to canonical JSON text.
pub fn to_json(doc: &SlideDoc) -> Result<String, CodecError> {
    let violations = validate(doc);
    if !violations.is_empty() {
        return Err(CodecError::Invalid(violations));
    }
    Ok(serde_json::to_string(&doc_to_value(doc)).expect("serializing a Value cannot fail"))
}

// ---------------------------------------------------------------- reading

/// Strict parse of canonical JSON text.
pub fn from_json(text: &str) -> Result<SlideDoc, CodecError> {
    from_json_with(text, ParseMode::Strict)
}

pub fn from_json_with(text: &str, mode: ParseMode) -> Result<SlideDoc, CodecError> {
    let cleaned;
    let input = match mode {
        ParseMode::Strict => text,
        ParseMode::Tolerant => {
            cleaned = strip_trailing_commas(text.trim_start_matches('\u{feff}'));
            &cleaned
        }
    };
    let value: Value = serde_json::from_str(input).map_err(|e| CodecError::Syntax {
        offset: byte_offset(input, e.line(), e.column()),
        message: e.to_string(),
    })?;
    let doc = doc_from_value(&value, mode)?;
    let violations = validate(&doc);
    if !violations.is_empty() {
        return Err(CodecError::Invalid(violations));
    }
    Ok(doc)
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

/// Removes commas that directly precede `}` or `]`, ignoring string contents.
fn strip_trailing_commas(text: &str) -> String {
    let bytes = text.as_bytes();
    let mut out = String::with_capacity(text.len());
    let mut in_string = false;
    let mut escaped = false;
    for (i, ch) in text.char_indices() {
        if in_string {
            out.push(ch);
            if escaped {
                escaped = false;
            } else if ch == '\\' {
                escaped = true;
            } else if ch == '"' {
                in_string = false;
            }
            continue;
        }
        match ch {
            '"' => {
                in_string = true;
                out.push(ch);
            }
            ',' => {
                let next = bytes[i + 1..].iter().find(|b| !b.is_ascii_whitespace());
                if !matches!(next, Some(b'}') | Some(b']')) {
                    out.push(ch);
                }
            }
            _ => out.push(ch),
        }
    }
    out
}

struct Reader {
    mode: ParseMode,
}

type Res<T> = Result<T, CodecError>;

fn schema(path: &str, message: impl Into<String>) -> CodecError {
    CodecError::Schema {
        path: path.to_string(),
        message: message.into(),
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

impl Reader {
    fn strict(&self) -> bool {
        self.mode == ParseMode::Strict
    }

    /// Returns the object after checking its keys against `allowed`.
    fn object<'v>(&self, v: &'v Value, path: &str, allowed: &[&str]) -> Res<&'v Map<String, Value>> {
        let map = v.as_object().ok_or_else(|| schema(path, "expected an object"))?;
        if self.strict() {
            let mut last = None;
            for key in map.keys() {
                let idx = allowed
                    .iter()
                    .position(|k| k == key)
                    .ok_or_else(|| schema(&join(path, key), "unknown key"))?;
                if last.is_some_and(|l| idx <= l) {
                    return Err(schema(&join(path, key), "key out of canonical order"));
                }
                last = Some(idx);
            }
        }
        Ok(map)
    }

    fn required<'v>(&self, map: &'v Map<String, Value>, path: &str, key: &str) -> Res<&'v Value> {
        map.get(key).ok_or_else(|| schema(&join(path, key), "missing required key"))
    }

    fn string(&self, v: &Value, path: &str) -> Res<String> {
        v.as_str().map(str::to_string).ok_or_else(|| schema(path, "expected a string"))
    }

    fn emu(&self, v: &Value, path: &str) -> Res<i64> {
        if let Some(i) = v.as_i64() {
            return Ok(i);
        }
        if !self.strict() {
            if let Some(f) = v.as_f64() {
                if f.fract() == 0.0 && f.abs() < 9.0e15 {
                    return Ok(f as i64);
                }
            }
        }
        Err(schema(path, "expected an integer EMU value"))
    }

    fn number(&self, v: &Value, path: &str) -> Res<f64> {
        v.as_f64().ok_or_else(|| schema(path, "expected a number"))
    }

    fn doc(&self, v: &Value) -> Res<SlideDoc> {
        let map = self.object(v, "", DOC_KEYS)?;
        let source_id = self.string(self.required(map, "", "source_id")?, "source_id")?;
        let canvas_width = self.emu(self.required(map, "", "canvas_width")?, "canvas_width")?;
        let canvas_height = self.emu(self.required(map, "", "canvas_height")?, "canvas_height")?;
        let list = self
            .required(map, "", "elements")?
            .as_array()
            .ok_or_else(|| schema("elements", "expected an array"))?;
        let elements = list
            .iter()
            .enumerate()
            .map(|(i, e)| self.element(e, &format!("elements[{i}]")))
            .collect::<Res<Vec<_>>>()?;
        Ok(SlideDoc {
            source_id,
            canvas_width,
            canvas_height,
            elements,
        })
    }

    fn element(&self, v: &Value, path: &str) -> Res<Element> {
        let map = self.object(v, path, ELEMENT_KEYS)?;
        let id = self.string(self.required(map, path, "id")?, &join(path, "id"))?;
        let kind = self.kind(self.required(map, path, "kind")?, &join(path, "kind"), &id)?;
        let position = self.position(self.required(map, path, "position")?, &join(path, "position"))?;
        let fill = self.fill(self.required(map, path, "fill")?, &join(path, "fill"))?;
        let text = match map.get("text") {
            None | Some(Value::Null) => None,
            Some(t) => Some(self.text(t, &join(path, "text"))?),
        };
        let status = match map.get("status") {
            None => Status::Final,
            Some(s) => {
                let p = join(path, "status");
                let raw = self.string(s, &p)?;
                let parsed = if self.strict() {
                    Status::parse(&raw)
                } else {
                    Status::parse(&raw.to_ascii_uppercase())
                };
                parsed.ok_or_else(|| schema(&p, format!("unknown status {raw:?}")))?
            }
        };
        Ok(Element {
            id,
            kind,
            position,
            fill,
            text,
            status,
        })
    }

    fn kind(&self, v: &Value, path: &str, element_id: &str) -> Res<ShapeKind> {
        let shape = |name: &str| {
            ShapeName::parse(name).map(ShapeKind::AutoShape).ok_or_else(|| CodecError::Scope {
                element_id: element_id.to_string(),
                name: name.to_string(),
            })
        };
        if let (false, Some(s)) = (self.strict(), v.as_str()) {
            return match MediaKind::parse(s) {
                Some(m) => Ok(ShapeKind::Placeholder(m)),
                None => shape(s),
            };
        }
        let map = self.object(v, path, KIND_KEYS)?;
        let present: Vec<&str> = KIND_KEYS.iter().copied().filter(|k| map.contains_key(*k)).collect();
        match present.as_slice() {
            ["auto_shape"] => {
                let p = join(path, "auto_shape");
                shape(&self.string(&map["auto_shape"], &p)?)
            }
            ["placeholder"] => {
                let p = join(path, "placeholder");
                let raw = self.string(&map["placeholder"], &p)?;
                MediaKind::parse(&raw)
                    .map(ShapeKind::Placeholder)
                    .ok_or_else(|| schema(&p, format!("unknown media kind {raw:?}")))
            }
            _ => Err(schema(path, "kind needs exactly one of auto_shape or placeholder")),
        }
    }

    fn position(&self, v: &Value, path: &str) -> Res<Geometry> {
        let map = self.object(v, path, POSITION_KEYS)?;
        let get = |k: &str| self.emu(self.required(map, path, k)?, &join(path, k));
        let rotation = match map.get("rotation") {
            None => 0.0,
            Some(r) => self.number(r, &join(path, "rotation"))?,
        };
        Ok(Geometry {
            x: get("x")?,
            y: get("y")?,
            width: get("width")?,
            height: get("height")?,
            rotation,
        })
    }

    fn fill(&self, v: &Value, path: &str) -> Res<Fill> {
        let map = self.object(v, path, FILL_KEYS)?;
        let mode_path = join(path, "mode");
        let raw = self.string(self.required(map, path, "mode")?, &mode_path)?;
        let mode = FillMode::parse(&raw).ok_or_else(|| schema(&mode_path, format!("unknown fill mode {raw:?}")))?;
        let colors = match map.get("colors") {
            None => Vec::new(),
            Some(list) => {
                let p = join(path, "colors");
                list.as_array()
                    .ok_or_else(|| schema(&p, "expected an array"))?
                    .iter()
                    .enumerate()
                    .map(|(i, c)| self.color(c, &format!("{p}[{i}]")))
                    .collect::<Res<Vec<_>>>()?
            }
        };
        let transparency = match map.get("transparency") {
            None => 0.0,
            Some(t) => self.number(t, &join(path, "transparency"))?,
        };
        Ok(Fill {
            mode,
            colors,
            transparency,
        })
    }

    fn color(&self, v: &Value, path: &str) -> Res<Color> {
        if let (false, Some(s)) = (self.strict(), v.as_str()) {
            return Color::parse(s).ok_or_else(|| schema(path, format!("bad color {s:?}")));
        }
        let map = self.object(v, path, COLOR_KEYS)?;
        let p = join(path, "rgb");
        let rgb = self.string(self.required(map, path, "rgb")?, &p)?;
        let rgb = if self.strict() {
            rgb
        } else {
            Color::parse(&rgb).map(|c| c.rgb).unwrap_or(rgb)
        };
        let alpha = match map.get("alpha") {
            None => 1.0,
            Some(a) => self.number(a, &join(path, "alpha"))?,
        };
        Ok(Color { rgb, alpha })
    }

    fn text(&self, v: &Value, path: &str) -> Res<TextFrame> {
        let map = self.object(v, path, TEXT_KEYS)?;
        let runs_path = join(path, "runs");
        let runs = self
            .required(map, path, "runs")?
            .as_array()
            .ok_or_else(|| schema(&runs_path, "expected an array"))?
            .iter()
            .enumerate()
            .map(|(i, r)| self.run(r, &format!("{runs_path}[{i}]")))
            .collect::<Res<Vec<_>>>()?;
        let line_spacing = self.number(self.required(map, path, "line_spacing")?, &join(path, "line_spacing"))?;
        let ap = join(path, "alignment");
        let raw = self.string(self.required(map, path, "alignment")?, &ap)?;
        let alignment = Alignment::parse(&raw).ok_or_else(|| schema(&ap, format!("unknown alignment {raw:?}")))?;
        Ok(TextFrame {
            runs,
            line_spacing,
            alignment,
        })
    }

    fn run(&self, v: &Value, path: &str) -> Res<TextRun> {
        let map = self.object(v, path, RUN_KEYS)?;
        Ok(TextRun {
            text: self.string(self.required(map, path, "text")?, &join(path, "text"))?,
            font_name: self.string(self.required(map, path, "font_name")?, &join(path, "font_name"))?,
            font_size: self.number(self.required(map, path, "font_size")?, &join(path, "font_size"))?,
            color: self.color(self.required(map, path, "color")?, &join(path, "color"))?,
        })
    }
}

/// Converts an already-parsed JSON value. Does not run invariant validation.
pub fn doc_from_value(value: &Value, mode: ParseMode) -> Result<SlideDoc, CodecError> {
    Reader { mode }.doc(value)
}

/// Parses one element object; field paths in errors are relative to it.
pub fn element_from_value(value: &Value, mode: ParseMode) -> Result<Element, CodecError> {
    Reader { mode }.element(value, "")
}

/// Deck file text: `{"title": .., "slides": [doc, ..]}` with canonical docs.
pub fn deck_to_json(deck: &Deck) -> Result<String, CodecError> {
    for (i, slide) in deck.slides.iter().enumerate() {
        let violations = validate(slide);
        if !violations.is_empty() {
            return Err(schema(&format!("slides[{i}]"), join_violations(&violations)));
        }
    }
    let mut m = Map::new();
    m.insert("title".into(), Value::String(deck.title.clone()));
    m.insert("slides".into(), Value::Array(deck.slides.iter().map(doc_to_value).collect()));
    Ok(serde_json::to_string(&Value::Object(m)).expect("serializing a Value cannot fail"))
}

/// Reads a deck file. A bare slide document is accepted as a one-slide deck.
pub fn deck_from_json(text: &str, mode: ParseMode) -> Result<Deck, CodecError> {
    let value: Value = serde_json::from_str(text.trim_start_matches('\u{feff}')).map_err(|e| CodecError::Syntax {
        offset: byte_offset(text, e.line(), e.column()),
        message: e.to_string(),
    })?;
    let checked = |doc: SlideDoc, path: String| {
        let violations = validate(&doc);
        if violations.is_empty() {
            Ok(doc)
        } else {
            Err(schema(&path, join_violations(&violations)))
        }
    };
    if value.get("elements").is_some() {
        let doc = checked(doc_from_value(&value, mode)?, String::new())?;
        return Ok(Deck {
            title: doc.source_id.clone(),
            slides: vec![doc],
        });
    }
    let title = match value.get("title") {
        None => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(schema("title", "expected string")),
    };
    let slides = value
        .get("slides")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("slides", "expected an array of slide documents"))?;
    let slides = slides
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let path = format!("slides[{i}]");
            let doc = doc_from_value(v, mode).map_err(|e| match e {
                CodecError::Schema { path: inner, message } => schema(&join(&path, &inner), message),
                other => other,
            })?;
            checked(doc, path)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Deck { title, slides })
}
