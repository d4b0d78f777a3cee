//! SVG preview renderer.
//!
//! The root `<svg>` has one background rect, one `<g>` per element in
//! z-order and, when highlighting, one dashed outline per TENTATIVE element.
//! Text is wrapped at the frame width with a fixed average glyph width, so
//! line breaks are approximate.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::{Alignment, Color, Element, FillMode, ShapeKind, SlideDoc, Status, TextFrame, EMU_PER_INCH};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderOptions {
    pub pixels_per_inch: f64,
    pub highlight_tentative: bool,
    /// Background color, `RRGGBB`.
    pub background: String,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            pixels_per_inch: 96.0,
            highlight_tentative: false,
            background: "FFFFFF".into(),
        }
    }
}

impl RenderOptions {
    pub fn highlighted() -> Self {
        RenderOptions {
            highlight_tentative: true,
            ..Self::default()
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("svg could not be rasterized: {0}")]
    Raster(String),
}

/// Rasterizes `render_svg` output to PNG bytes using the system fonts.
pub fn render_png(doc: &SlideDoc, opts: &RenderOptions) -> Result<Vec<u8>, RenderError> {
    use resvg::{tiny_skia, usvg};
    use std::sync::{Arc, OnceLock};

    static FONTS: OnceLock<Arc<usvg::fontdb::Database>> = OnceLock::new();
    let fonts = FONTS.get_or_init(|| {
        let mut db = usvg::fontdb::Database::new();
        db.load_system_fonts();
        Arc::new(db)
    });
    let svg = render_svg(doc, opts);
    let options = usvg::Options {
        fontdb: fonts.clone(),
        ..usvg::Options::default()
    };
    let tree = usvg::Tree::from_str(&svg, &options).map_err(|e| RenderError::Raster(e.to_string()))?;
    let size = tree.size().to_int_size();
    let mut pixmap = tiny_skia::Pixmap::new(size.width().max(1), size.height().max(1))
        .ok_or_else(|| RenderError::Raster("zero-sized canvas".into()))?;
    resvg::render(&tree, tiny_skia::Transform::identity(), &mut pixmap.as_mut());
    pixmap.encode_png().map_err(|e| RenderError::Raster(e.to_string()))
}

/// Average glyph advance as a fraction of the font size.
const GLYPH_WIDTH: f64 = 0.5;
const LINE_HEIGHT: f64 = 1.2;
/// Text frame inset, in inches.
const INSET: f64 = 0.1;

fn num(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\t' | '\n' | '\r' => out.push(' '),
            c if (c as u32) < 0x20 || c == '\u{FFFE}' || c == '\u{FFFF}' => {}
            c => out.push(c),
        }
    }
    out
}

fn hex(c: &Color) -> String {
    if c.is_well_formed() {
        format!("#{}", c.rgb)
    } else {
        "#000000".into()
    }
}

struct Px(f64);

impl Px {
    fn of(&self, emu: i64) -> f64 {
        emu as f64 * self.0 / EMU_PER_INCH as f64
    }
}

/// Renders `doc` to a standalone SVG document.
pub fn render_svg(doc: &SlideDoc, opts: &RenderOptions) -> String {
    let ppi = if opts.pixels_per_inch > 0.0 && opts.pixels_per_inch.is_finite() {
        opts.pixels_per_inch
    } else {
        96.0
    };
    let px = Px(ppi);
    let (w, h) = (px.of(doc.canvas_width), px.of(doc.canvas_height));
    let background = Color::parse(&opts.background).unwrap_or_else(Color::white);

    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" data-source="{src}">"#,
        w = num(w),
        h = num(h),
        src = esc(&doc.source_id)
    );
    let _ = write!(
        s,
        r#"<rect id="background" x="0" y="0" width="{}" height="{}" fill="{}"/>"#,
        num(w),
        num(h),
        hex(&background)
    );
    for (i, e) in doc.elements.iter().enumerate() {
        element(&mut s, e, i, &px);
    }
    if opts.highlight_tentative {
        for e in doc.elements.iter().filter(|e| e.status == Status::Tentative) {
            let g = &e.position;
            let _ = write!(
                s,
                r##"<rect class="tentative-outline" data-for="{}" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#E4572E" stroke-width="2" stroke-dasharray="6 4"{}/>"##,
                esc(&e.id),
                num(px.of(g.x)),
                num(px.of(g.y)),
                num(px.of(g.width)),
                num(px.of(g.height)),
                rotation(e, &px)
            );
        }
    }
    s.push_str("</svg>");
    s
}

fn rotation(e: &Element, px: &Px) -> String {
    let g = &e.position;
    if g.rotation == 0.0 || !g.rotation.is_finite() {
        return String::new();
    }
    let cx = px.of(g.x) + px.of(g.width) / 2.0;
    let cy = px.of(g.y) + px.of(g.height) / 2.0;
    format!(r#" transform="rotate({} {} {})""#, num(g.rotation), num(cx), num(cy))
}

fn element(s: &mut String, e: &Element, index: usize, px: &Px) {
    let g = &e.position;
    let (x, y, w, h) = (px.of(g.x), px.of(g.y), px.of(g.width), px.of(g.height));
    let _ = write!(
        s,
        r#"<g id="{}" data-index="{index}" data-kind="{}" data-status="{}"{}>"#,
        esc(&e.id),
        esc(&e.kind.to_string()),
        e.status.as_str(),
        rotation(e, px)
    );

    let paint_id = format!("paint-{index}");
    let fill_attr = paint(s, e, &paint_id);
    match e.kind {
        ShapeKind::Placeholder(media) => {
            let _ = write!(
                s,
                r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#D9DEE4" stroke="#8A94A0" stroke-width="1"/>"##,
                num(x),
                num(y),
                num(w),
                num(h)
            );
            let label = if media.as_str() == "video" { "video" } else { "image" };
            let _ = write!(
                s,
                r##"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="14" fill="#5B6570">{label}</text>"##,
                num(x + w / 2.0),
                num(y + h / 2.0)
            );
        }
        ShapeKind::AutoShape(name) => {
            let line_color = e.fill.colors.first().map(hex).unwrap_or_else(|| "#000000".into());
            s.push_str(&shape(name.as_str(), x, y, w, h, &fill_attr, &line_color));
        }
    }
    if let Some(t) = &e.text {
        text(s, t, x, y, w, h, px);
    }
    s.push_str("</g>");
}

/// Writes any paint server the fill needs and returns the fill attributes.
fn paint(s: &mut String, e: &Element, id: &str) -> String {
    let f = &e.fill;
    let opacity = |c: &Color| {
        let o = (c.alpha * (1.0 - f.transparency)).clamp(0.0, 1.0);
        if o < 1.0 {
            format!(r#" fill-opacity="{}""#, num(o))
        } else {
            String::new()
        }
    };
    match (f.mode, f.colors.as_slice()) {
        (FillMode::None, _) | (_, []) => r#"fill="none""#.into(),
        (FillMode::Solid, [c, ..]) => format!(r#"fill="{}"{}"#, hex(c), opacity(c)),
        (FillMode::Gradient, [first, .., last]) => {
            let _ = write!(
                s,
                r#"<defs><linearGradient id="{id}" x1="0" y1="0" x2="1" y2="0"><stop offset="0" stop-color="{}"/><stop offset="1" stop-color="{}"/></linearGradient></defs>"#,
                hex(first),
                hex(last)
            );
            format!(r#"fill="url(#{id})"{}"#, opacity(first))
        }
        (FillMode::Pattern, [fg, rest @ ..]) => {
            let bg = rest.first().map(hex).unwrap_or_else(|| "#FFFFFF".into());
            let _ = write!(
                s,
                r#"<defs><pattern id="{id}" width="8" height="8" patternUnits="userSpaceOnUse"><rect width="8" height="8" fill="{bg}"/><path d="M0 8L8 0M-2 2L2 -2M6 10L10 6" stroke="{}" stroke-width="2"/></pattern></defs>"#,
                hex(fg)
            );
            format!(r#"fill="url(#{id})"{}"#, opacity(fg))
        }
        (_, [c, ..]) => format!(r#"fill="{}"{}"#, hex(c), opacity(c)),
    }
}

fn polygon(points: &[(f64, f64)], fill: &str) -> String {
    let pts: Vec<String> = points.iter().map(|(x, y)| format!("{},{}", num(*x), num(*y))).collect();
    format!(r#"<polygon points="{}" {fill}/>"#, pts.join(" "))
}

/// Point on a shape's box, given as fractions of width and height.
fn at(x: f64, y: f64, w: f64, h: f64) -> impl Fn(f64, f64) -> (f64, f64) {
    move |fx, fy| (x + fx * w, y + fy * h)
}

fn regular(n: usize, x: f64, y: f64, w: f64, h: f64, phase: f64) -> Vec<(f64, f64)> {
    (0..n)
        .map(|k| {
            let a = phase + k as f64 * std::f64::consts::TAU / n as f64;
            (x + w / 2.0 * (1.0 + a.cos()), y + h / 2.0 * (1.0 + a.sin()))
        })
        .collect()
}

fn shape(name: &str, x: f64, y: f64, w: f64, h: f64, fill: &str, line: &str) -> String {
    let p = at(x, y, w, h);
    let rect = |rx: f64| {
        format!(
            r#"<rect x="{}" y="{}" width="{}" height="{}"{} {fill}/>"#,
            num(x),
            num(y),
            num(w),
            num(h),
            if rx > 0.0 {
                format!(r#" rx="{}""#, num(rx))
            } else {
                String::new()
            }
        )
    };
    let ellipse = || {
        format!(
            r#"<ellipse cx="{}" cy="{}" rx="{}" ry="{}" {fill}/>"#,
            num(x + w / 2.0),
            num(y + h / 2.0),
            num(w / 2.0),
            num(h / 2.0)
        )
    };
    let path = |d: String, rule: &str| format!(r#"<path d="{d}"{rule} {fill}/>"#);
    let short = w.min(h);
    match name {
        "rectangle" => rect(0.0),
        "rounded_rectangle" | "round_corner_rectangle" => rect(short * 0.167),
        "can" => rect(short * 0.25),
        "oval" | "circle" | "cloud" | "heart" => ellipse(),
        "line" | "straight_connector" | "elbow_connector" => format!(
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{line}" stroke-width="1.5"/>"#,
            num(x),
            num(y),
            num(x + w),
            num(y + h)
        ),
        "snip_rectangle" => polygon(&[p(0.0, 0.0), p(0.8, 0.0), p(1.0, 0.2), p(1.0, 1.0), p(0.0, 1.0)], fill),
        "trapezoid" => polygon(&[p(0.25, 0.0), p(0.75, 0.0), p(1.0, 1.0), p(0.0, 1.0)], fill),
        "parallelogram" => polygon(&[p(0.25, 0.0), p(1.0, 0.0), p(0.75, 1.0), p(0.0, 1.0)], fill),
        "diamond" => polygon(&[p(0.5, 0.0), p(1.0, 0.5), p(0.5, 1.0), p(0.0, 0.5)], fill),
        "triangle" => polygon(&[p(0.5, 0.0), p(1.0, 1.0), p(0.0, 1.0)], fill),
        "right_triangle" => polygon(&[p(0.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)], fill),
        "pentagon" => polygon(&regular(5, x, y, w, h, -std::f64::consts::FRAC_PI_2), fill),
        "hexagon" => polygon(&[p(0.25, 0.0), p(0.75, 0.0), p(1.0, 0.5), p(0.75, 1.0), p(0.25, 1.0), p(0.0, 0.5)], fill),
        "octagon" => polygon(
            &[p(0.3, 0.0), p(0.7, 0.0), p(1.0, 0.3), p(1.0, 0.7), p(0.7, 1.0), p(0.3, 1.0), p(0.0, 0.7), p(0.0, 0.3)],
            fill,
        ),
        "arrow" => polygon(
            &[p(0.0, 0.25), p(0.6, 0.25), p(0.6, 0.0), p(1.0, 0.5), p(0.6, 1.0), p(0.6, 0.75), p(0.0, 0.75)],
            fill,
        ),
        "left_arrow" => polygon(
            &[p(1.0, 0.25), p(0.4, 0.25), p(0.4, 0.0), p(0.0, 0.5), p(0.4, 1.0), p(0.4, 0.75), p(1.0, 0.75)],
            fill,
        ),
        "up_arrow" => polygon(
            &[p(0.25, 1.0), p(0.25, 0.4), p(0.0, 0.4), p(0.5, 0.0), p(1.0, 0.4), p(0.75, 0.4), p(0.75, 1.0)],
            fill,
        ),
        "down_arrow" => polygon(
            &[p(0.25, 0.0), p(0.25, 0.6), p(0.0, 0.6), p(0.5, 1.0), p(1.0, 0.6), p(0.75, 0.6), p(0.75, 0.0)],
            fill,
        ),
        "left_right_arrow" => polygon(
            &[
                p(0.0, 0.5),
                p(0.2, 0.0),
                p(0.2, 0.25),
                p(0.8, 0.25),
                p(0.8, 0.0),
                p(1.0, 0.5),
                p(0.8, 1.0),
                p(0.8, 0.75),
                p(0.2, 0.75),
                p(0.2, 1.0),
            ],
            fill,
        ),
        "chevron" => polygon(&[p(0.0, 0.0), p(0.75, 0.0), p(1.0, 0.5), p(0.75, 1.0), p(0.0, 1.0), p(0.25, 0.5)], fill),
        "home_plate" => polygon(&[p(0.0, 0.0), p(0.75, 0.0), p(1.0, 0.5), p(0.75, 1.0), p(0.0, 1.0)], fill),
        "star" => {
            let outer = regular(5, x, y, w, h, -std::f64::consts::FRAC_PI_2);
            let inner = regular(5, x + w * 0.31, y + h * 0.31, w * 0.38, h * 0.38, -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI / 5.0);
            let pts: Vec<(f64, f64)> = outer.into_iter().zip(inner).flat_map(|(a, b)| [a, b]).collect();
            polygon(&pts, fill)
        }
        "plus" => polygon(
            &[
                p(0.33, 0.0),
                p(0.67, 0.0),
                p(0.67, 0.33),
                p(1.0, 0.33),
                p(1.0, 0.67),
                p(0.67, 0.67),
                p(0.67, 1.0),
                p(0.33, 1.0),
                p(0.33, 0.67),
                p(0.0, 0.67),
                p(0.0, 0.33),
                p(0.33, 0.33),
            ],
            fill,
        ),
        "cube" => polygon(&[p(0.0, 0.25), p(0.25, 0.0), p(1.0, 0.0), p(1.0, 0.75), p(0.75, 1.0), p(0.0, 1.0)], fill),
        "frame" => {
            let t = short * 0.125;
            path(
                format!(
                    "M{} {}h{}v{}h{}ZM{} {}v{}h{}v{}Z",
                    num(x),
                    num(y),
                    num(w),
                    num(h),
                    num(-w),
                    num(x + t),
                    num(y + t),
                    num(h - 2.0 * t),
                    num(w - 2.0 * t),
                    num(-(h - 2.0 * t))
                ),
                r#" fill-rule="evenodd""#,
            )
        }
        "donut" => {
            let (cx, cy, rx, ry) = (x + w / 2.0, y + h / 2.0, w / 2.0, h / 2.0);
            let (ix, iy) = (rx * 0.5, ry * 0.5);
            path(
                format!(
                    "M{} {}a{} {} 0 1 0 {} 0a{} {} 0 1 0 {} 0ZM{} {}a{} {} 0 1 0 {} 0a{} {} 0 1 0 {} 0Z",
                    num(cx - rx),
                    num(cy),
                    num(rx),
                    num(ry),
                    num(2.0 * rx),
                    num(rx),
                    num(ry),
                    num(-2.0 * rx),
                    num(cx - ix),
                    num(cy),
                    num(ix),
                    num(iy),
                    num(2.0 * ix),
                    num(ix),
                    num(iy),
                    num(-2.0 * ix)
                ),
                r#" fill-rule="evenodd""#,
            )
        }
        "arc" => format!(
            r#"<path d="M{} {}A{} {} 0 0 1 {} {}" fill="none" stroke="{line}" stroke-width="1.5"/>"#,
            num(x + w / 2.0),
            num(y),
            num(w / 2.0),
            num(h / 2.0),
            num(x + w),
            num(y + h / 2.0)
        ),
        "block_arc" => {
            let (cx, cy, rx, ry) = (x + w / 2.0, y + h / 2.0, w / 2.0, h / 2.0);
            path(
                format!(
                    "M{} {}A{} {} 0 0 1 {} {}L{} {}A{} {} 0 0 0 {} {}Z",
                    num(cx - rx),
                    num(cy),
                    num(rx),
                    num(ry),
                    num(cx + rx),
                    num(cy),
                    num(cx + rx * 0.5),
                    num(cy),
                    num(rx * 0.5),
                    num(ry * 0.5),
                    num(cx - rx * 0.5),
                    num(cy)
                ),
                "",
            )
        }
        _ => rect(0.0),
    }
}

struct Piece<'a> {
    text: String,
    run: &'a crate::model::TextRun,
}

fn text(s: &mut String, t: &TextFrame, x: f64, y: f64, w: f64, h: f64, px: &Px) {
    let inset = INSET * px.0;
    let avail = (w - 2.0 * inset).max(1.0);
    let size = |r: &crate::model::TextRun| r.font_size * px.0 / 72.0;

    // Split runs into paragraphs of word pieces, then greedily fill lines.
    let mut paragraphs: Vec<Vec<Piece>> = vec![Vec::new()];
    for r in &t.runs {
        for (k, part) in r.text.split('\n').enumerate() {
            if k > 0 {
                paragraphs.push(Vec::new());
            }
            for word in part.split_inclusive(' ') {
                paragraphs.last_mut().unwrap().push(Piece {
                    text: word.to_string(),
                    run: r,
                });
            }
        }
    }
    let mut lines: Vec<Vec<Piece>> = Vec::new();
    for para in paragraphs {
        let mut line: Vec<Piece> = Vec::new();
        let mut used = 0.0;
        for piece in para {
            let width = piece.text.chars().count() as f64 * GLYPH_WIDTH * size(piece.run);
            if !line.is_empty() && used + width > avail {
                lines.push(std::mem::take(&mut line));
                used = 0.0;
            }
            used += width;
            line.push(piece);
        }
        lines.push(line);
    }

    let (anchor, ax) = match t.alignment {
        Alignment::Left | Alignment::Justify => ("start", x + inset),
        Alignment::Center => ("middle", x + w / 2.0),
        Alignment::Right => ("end", x + w - inset),
    };
    let first = t.runs.first();
    let _ = write!(
        s,
        r#"<text x="{}" y="{}" text-anchor="{anchor}" font-family="{}" font-size="{}" fill="{}" xml:space="preserve">"#,
        num(ax),
        num(y + inset),
        esc(first.map_or("sans-serif", |r| r.font_name.as_str())),
        num(first.map_or(12.0, size)),
        first.map_or_else(|| "#000000".into(), |r| hex(&r.color))
    );
    let mut baseline = y + inset;
    for line in &lines {
        let tallest = line.iter().map(|p| size(p.run)).fold(0.0, f64::max);
        let tallest = if tallest > 0.0 { tallest } else { first.map_or(12.0, size) };
        baseline += tallest * LINE_HEIGHT * t.line_spacing;
        if baseline > y + h + tallest * 2.0 && h > 0.0 {
            break;
        }
        let _ = write!(s, r#"<tspan x="{}" y="{}">"#, num(ax), num(baseline));
        for p in line {
            let opacity = if p.run.color.alpha < 1.0 {
                format!(r#" fill-opacity="{}""#, num(p.run.color.alpha))
            } else {
                String::new()
            };
            let _ = write!(
                s,
                r#"<tspan font-family="{}" font-size="{}" fill="{}"{opacity}>{}</tspan>"#,
                esc(&p.run.font_name),
                num(size(p.run)),
                hex(&p.run.color),
                esc(&p.text)
            );
        }
        s.push_str("</tspan>");
    }
    s.push_str("</text>");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    fn top_level(svg: &str) -> Vec<(String, Option<String>)> {
        let doc = roxmltree::Document::parse(svg).expect("valid xml");
        doc.root_element()
            .children()
            .filter(|n| n.is_element())
            .map(|n| (n.tag_name().name().to_string(), n.attribute("id").map(str::to_string)))
            .collect()
    }

    #[test]
    fn empty_doc_is_just_background() {
        let doc = SlideDoc::new("e", DEFAULT_CANVAS.0, DEFAULT_CANVAS.1);
        let svg = render_svg(&doc, &RenderOptions::default());
        assert_eq!(top_level(&svg), vec![("rect".into(), Some("background".into()))]);
        assert!(svg.contains(r#"width="1280" height="720""#));
    }

    #[test]
    fn one_inch_square_at_96_dpi() {
        let mut doc = SlideDoc::new("r", DEFAULT_CANVAS.0, DEFAULT_CANVAS.1);
        doc.elements.push(
            Element::auto_shape("e0", ShapeName::rectangle(), Geometry::new(914_400, 914_400, 914_400, 914_400))
                .with_fill(Fill::solid(Color::from_rgb(255, 0, 0))),
        );
        let svg = render_svg(&doc, &RenderOptions::default());
        assert!(svg.contains(r##"<rect x="96" y="96" width="96" height="96" fill="#FF0000"/>"##), "{svg}");
    }

    #[test]
    fn every_shape_renders_valid_xml() {
        let mut doc = SlideDoc::new("all <&>", DEFAULT_CANVAS.0, DEFAULT_CANVAS.1);
        for (i, name) in ShapeName::all().enumerate() {
            let mut e = Element::auto_shape(
                format!("e{i}"),
                name,
                Geometry {
                    rotation: 10.0 * i as f64,
                    ..Geometry::new(i as i64 * 300_000, 100_000, 1_000_000, 700_000)
                },
            );
            e.fill = match i % 4 {
                0 => Fill::solid(Color::from_rgb(1, 2, 3).with_alpha(0.5)),
                1 => Fill::gradient(vec![Color::white(), Color::black(), Color::from_rgb(9, 9, 9)]),
                2 => Fill::pattern(Color::black(), Color::white()),
                _ => Fill::none(),
            };
            e.text = Some(TextFrame::single(TextRun::new("a \"quoted\" <b> & long words\nnext", "Lato", 14.0, Color::black())));
            doc.elements.push(e);
        }
        doc.elements.push(Element::placeholder("media", MediaKind::Video, Geometry::new(0, 0, 10, 10)));
        let svg = render_svg(&doc, &RenderOptions::default());
        assert_eq!(top_level(&svg).len(), doc.elements.len() + 1);
    }

    #[test]
    fn png_has_canvas_size() {
        let mut doc = SlideDoc::new("p", 914_400, 457_200);
        doc.elements.push(
            Element::auto_shape("e0", ShapeName::rectangle(), Geometry::new(0, 0, 457_200, 457_200))
                .with_text(TextFrame::single(TextRun::new("hi", "Arial", 12.0, Color::black()))),
        );
        let png = render_png(&doc, &RenderOptions::default()).unwrap();
        assert_eq!(&png[1..4], b"PNG");
        let w = u32::from_be_bytes(png[16..20].try_into().unwrap());
        let h = u32::from_be_bytes(png[20..24].try_into().unwrap());
        assert_eq!((w, h), (96, 48));
    }

    #[test]
    fn highlight_adds_one_overlay_per_tentative_element() {
        let mut doc = SlideDoc::new("h", DEFAULT_CANVAS.0, DEFAULT_CANVAS.1);
        for i in 0..3 {
            doc.elements.push(Element::auto_shape(format!("e{i}"), ShapeName::rectangle(), Geometry::new(0, 0, 5, 5)));
        }
        let doc = doc.with_flags([&"e1".to_string()]);
        let svg = render_svg(&doc, &RenderOptions::highlighted());
        assert_eq!(svg.matches("stroke-dasharray").count(), 1);
        assert_eq!(top_level(&svg).len(), 5);
        assert_eq!(render_svg(&doc, &RenderOptions::default()).matches("stroke-dasharray").count(), 0);
    }
}
