use std::collections::HashMap;
use std::io::{Cursor, Read};

use rayon::prelude::*;
use roxmltree::{Document, Node};

use super::theme::{a_child, Theme};
use super::{IngestError, IngestReport, Skip, SkipReason};
use crate::model::{
    Alignment, Color, Deck, Element, Fill, FillMode, Geometry, MediaKind, ShapeKind, ShapeName, SlideDoc,
    TextFrame, TextRun, DEFAULT_CANVAS,
};

const MAX_PART_BYTES: u64 = 64 << 20;
const REL_SLIDE: &str = "/slide";
const REL_LAYOUT: &str = "/slideLayout";
const REL_MASTER: &str = "/slideMaster";
const REL_THEME: &str = "/theme";

struct Package {
    archive: zip::ZipArchive<Cursor<Vec<u8>>>,
}

impl Package {
    fn part(&mut self, name: &str) -> Option<String> {
        let file = self.archive.by_name(name).ok()?;
        let mut out = String::new();
        file.take(MAX_PART_BYTES).read_to_string(&mut out).ok()?;
        Some(out)
    }

    /// `(id, type, absolute target)` for each relationship of `part`.
    fn rels(&mut self, part: &str) -> Vec<(String, String, String)> {
        let (dir, file) = part.rsplit_once('/').unwrap_or(("", part));
        let rels_name = if dir.is_empty() {
            format!("_rels/{file}.rels")
        } else {
            format!("{dir}/_rels/{file}.rels")
        };
        let Some(xml) = self.part(&rels_name) else {
            return Vec::new();
        };
        let Ok(doc) = Document::parse(&xml) else {
            return Vec::new();
        };
        doc.descendants()
            .filter(|n| n.has_tag_name("Relationship"))
            .filter(|n| n.attribute("TargetMode") != Some("External"))
            .filter_map(|n| {
                let target = n.attribute("Target")?;
                Some((
                    n.attribute("Id")?.to_string(),
                    n.attribute("Type").unwrap_or_default().to_string(),
                    resolve_target(dir, target),
                ))
            })
            .collect()
    }

    fn rel_of_type(&mut self, part: &str, suffix: &str) -> Option<String> {
        self.rels(part)
            .into_iter()
            .find(|(_, ty, _)| ty.ends_with(suffix))
            .map(|(_, _, t)| t)
    }
}

fn resolve_target(base_dir: &str, target: &str) -> String {
    if let Some(abs) = target.strip_prefix('/') {
        return abs.to_string();
    }
    let mut parts: Vec<&str> = base_dir.split('/').filter(|s| !s.is_empty()).collect();
    for seg in target.split('/') {
        match seg {
            "" | "." => {}
            ".." => {
                parts.pop();
            }
            s => parts.push(s),
        }
    }
    parts.join("/")
}

/// Text defaults accumulated through the style hierarchy.
#[derive(Debug, Clone, Default)]
struct TextStyle {
    font: Option<String>,
    size: Option<f64>,
    color: Option<Color>,
    align: Option<Alignment>,
    spacing: Option<f64>,
}

impl TextStyle {
    /// Overlays a paragraph-properties node (`a:lvl1pPr` or `a:pPr`).
    fn overlay_ppr(&mut self, ppr: Node, theme: &Theme) {
        if let Some(a) = ppr.attribute("algn").and_then(parse_align) {
            self.align = Some(a);
        }
        if let Some(pct) = a_child(ppr, "lnSpc")
            .and_then(|l| a_child(l, "spcPct"))
            .and_then(|p| p.attribute("val"))
            .and_then(|v| v.parse::<f64>().ok())
        {
            if pct > 0.0 {
                self.spacing = Some(pct / 100_000.0);
            }
        }
        if let Some(def) = a_child(ppr, "defRPr") {
            self.overlay_rpr(def, theme);
        }
    }

    /// Overlays run properties (`a:rPr`, `a:defRPr`, `a:endParaRPr`).
    fn overlay_rpr(&mut self, rpr: Node, theme: &Theme) {
        if let Some(sz) = rpr.attribute("sz").and_then(|v| v.parse::<f64>().ok()) {
            if sz > 0.0 {
                self.size = Some(sz / 100.0);
            }
        }
        if let Some(face) = a_child(rpr, "latin").and_then(|l| l.attribute("typeface")) {
            if !face.trim().is_empty() {
                self.font = Some(theme.font(face));
            }
        }
        if let Some(fill) = a_child(rpr, "solidFill") {
            if let Some(c) = theme.color_in(fill, None) {
                self.color = Some(c);
            }
        }
    }

    fn overlay_lst_style(&mut self, owner: Node, theme: &Theme) {
        if let Some(lvl1) = owner
            .descendants()
            .find(|n| n.has_tag_name((super::theme::NS_A, "lstStyle")))
            .and_then(|l| a_child(l, "lvl1pPr"))
        {
            self.overlay_ppr(lvl1, theme);
        }
    }
}

fn parse_align(v: &str) -> Option<Alignment> {
    match v {
        "l" => Some(Alignment::Left),
        "ctr" => Some(Alignment::Center),
        "r" => Some(Alignment::Right),
        "just" | "dist" | "justLow" | "thaiDist" => Some(Alignment::Justify),
        _ => None,
    }
}

fn p_child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.is_element() && c.tag_name().name() == name)
}

fn p_path<'a, 'i>(node: Node<'a, 'i>, path: &[&str]) -> Option<Node<'a, 'i>> {
    path.iter().try_fold(node, |n, name| p_child(n, name))
}

#[derive(Debug, Clone)]
struct PlaceholderDef {
    ty: String,
    idx: Option<String>,
    geometry: Option<Geometry>,
    style: TextStyle,
}

fn is_title(ty: &str) -> bool {
    matches!(ty, "title" | "ctrTitle")
}

fn ph_of(sp: Node) -> Option<(String, Option<String>)> {
    let nv = sp.children().find(|c| c.is_element() && c.tag_name().name().starts_with("nv"))?;
    let ph = p_path(nv, &["nvPr", "ph"])?;
    Some((
        ph.attribute("type").unwrap_or("body").to_string(),
        ph.attribute("idx").map(str::to_string),
    ))
}

/// Placeholder shapes of a layout or master, in document order.
fn placeholder_defs(xml: &str, theme: &Theme) -> Vec<PlaceholderDef> {
    let Ok(doc) = Document::parse(xml) else {
        return Vec::new();
    };
    doc.descendants()
        .filter(|n| n.tag_name().name() == "sp")
        .filter_map(|sp| {
            let (ty, idx) = ph_of(sp)?;
            let geometry = p_child(sp, "spPr").and_then(|sp_pr| a_child(sp_pr, "xfrm")).and_then(read_xfrm);
            let mut style = TextStyle::default();
            if let Some(body) = p_child(sp, "txBody") {
                style.overlay_lst_style(body, theme);
            }
            Some(PlaceholderDef { ty, idx, geometry, style })
        })
        .collect()
}

fn find_placeholder<'d>(defs: &'d [PlaceholderDef], ty: &str, idx: Option<&str>) -> Option<&'d PlaceholderDef> {
    if let Some(idx) = idx {
        if let Some(d) = defs.iter().find(|d| d.idx.as_deref() == Some(idx)) {
            return Some(d);
        }
    }
    fn family(t: &str) -> &str {
        if is_title(t) {
            "title"
        } else if t == "subTitle" || t == "obj" {
            "body"
        } else {
            t
        }
    }
    defs.iter()
        .find(|d| d.ty == ty)
        .or_else(|| defs.iter().find(|d| family(&d.ty) == family(ty)))
}

#[derive(Debug, Clone, Default)]
struct MasterInfo {
    placeholders: Vec<PlaceholderDef>,
    title: TextStyle,
    body: TextStyle,
}

#[derive(Debug, Clone, Default)]
struct LayoutInfo {
    placeholders: Vec<PlaceholderDef>,
    master: Option<String>,
}

struct SlideContext<'a> {
    theme: &'a Theme,
    base: &'a TextStyle,
    layout: Option<&'a LayoutInfo>,
    master: Option<&'a MasterInfo>,
}

/// `x' = sx * x + tx` per axis, mapping a group's child space to the slide.
#[derive(Debug, Clone, Copy)]
struct Affine {
    sx: f64,
    tx: f64,
    sy: f64,
    ty: f64,
}

impl Affine {
    const IDENTITY: Affine = Affine {
        sx: 1.0,
        tx: 0.0,
        sy: 1.0,
        ty: 0.0,
    };

    fn apply(&self, g: Geometry) -> Geometry {
        Geometry {
            x: (self.sx * g.x as f64 + self.tx).round() as i64,
            y: (self.sy * g.y as f64 + self.ty).round() as i64,
            width: (self.sx * g.width as f64).round() as i64,
            height: (self.sy * g.height as f64).round() as i64,
            rotation: g.rotation,
        }
    }

    fn then_group(&self, xfrm: Node) -> Affine {
        let pt = |name: &str, ax: &str, ay: &str| {
            a_child(xfrm, name).map(|n| {
                let get = |a: &str| n.attribute(a).and_then(|v| v.parse::<f64>().ok()).unwrap_or(0.0);
                (get(ax), get(ay))
            })
        };
        let (ox, oy) = pt("off", "x", "y").unwrap_or((0.0, 0.0));
        let (ex, ey) = pt("ext", "cx", "cy").unwrap_or((0.0, 0.0));
        let (cox, coy) = pt("chOff", "x", "y").unwrap_or((ox, oy));
        let (cex, cey) = pt("chExt", "cx", "cy").unwrap_or((ex, ey));
        let kx = if cex > 0.0 { ex / cex } else { 1.0 };
        let ky = if cey > 0.0 { ey / cey } else { 1.0 };
        // child → group parent space, then through self
        Affine {
            sx: self.sx * kx,
            tx: self.sx * (ox - cox * kx) + self.tx,
            sy: self.sy * ky,
            ty: self.sy * (oy - coy * ky) + self.ty,
        }
    }
}

fn read_xfrm(xfrm: Node) -> Option<Geometry> {
    let off = a_child(xfrm, "off");
    let ext = a_child(xfrm, "ext")?;
    let int = |n: Option<Node>, a: &str| {
        n.and_then(|n| n.attribute(a))
            .and_then(|v| v.parse::<f64>().ok())
            .map(|v| v.round() as i64)
            .unwrap_or(0)
    };
    let rot = xfrm
        .attribute("rot")
        .and_then(|v| v.parse::<f64>().ok())
        .map(|r| r / 60_000.0)
        .unwrap_or(0.0);
    Some(Geometry {
        x: int(off, "x"),
        y: int(off, "y"),
        width: int(Some(ext), "cx").max(0),
        height: int(Some(ext), "cy").max(0),
        rotation: if rot.is_finite() { rot } else { 0.0 },
    })
}

struct SlideOutput {
    doc: SlideDoc,
    skipped: Vec<Skip>,
}

struct Walker<'a> {
    ctx: &'a SlideContext<'a>,
    slide_index: usize,
    elements: Vec<Element>,
    skipped: Vec<Skip>,
}

impl Walker<'_> {
    fn skip(&mut self, reason: SkipReason, detail: impl Into<String>) {
        self.skipped.push(Skip {
            slide_index: self.slide_index,
            reason,
            detail: detail.into(),
        });
    }

    fn push(&mut self, kind: ShapeKind, position: Geometry, fill: Fill, text: Option<TextFrame>) {
        let id = format!("e{}", self.elements.len());
        self.elements.push(Element {
            id,
            kind,
            position,
            fill,
            text,
            status: Default::default(),
        });
    }

    fn walk(&mut self, tree: Node, xf: Affine) {
        for child in tree.children().filter(|n| n.is_element()) {
            match child.tag_name().name() {
                "sp" => self.shape(child, xf, false),
                "cxnSp" => self.shape(child, xf, true),
                "pic" => self.picture(child, xf),
                "grpSp" => {
                    let inner = p_path(child, &["grpSpPr"])
                        .and_then(|g| a_child(g, "xfrm"))
                        .map(|x| xf.then_group(x))
                        .unwrap_or(xf);
                    self.walk(child, inner);
                }
                "graphicFrame" => {
                    let uri = child
                        .descendants()
                        .find(|n| n.tag_name().name() == "graphicData")
                        .and_then(|n| n.attribute("uri"))
                        .unwrap_or_default();
                    if uri.ends_with("/table") {
                        self.skip(SkipReason::Table, "table");
                    } else if uri.ends_with("/chart") || uri.contains("chart") {
                        self.skip(SkipReason::Chart, "chart");
                    } else {
                        self.skip(SkipReason::UnsupportedShape, format!("graphic frame {uri}"));
                    }
                }
                "AlternateContent" => {
                    let branch = p_child(child, "Fallback").or_else(|| p_child(child, "Choice"));
                    if let Some(b) = branch {
                        self.walk(b, xf);
                    }
                }
                "contentPart" => self.skip(SkipReason::UnsupportedShape, "content part"),
                _ => {}
            }
        }
    }

    fn shape(&mut self, sp: Node, xf: Affine, connector: bool) {
        let theme = self.ctx.theme;
        let ph = ph_of(sp);
        let sp_pr = p_child(sp, "spPr");

        let (layout_ph, master_ph) = match &ph {
            Some((ty, idx)) => (
                self.ctx
                    .layout
                    .and_then(|l| find_placeholder(&l.placeholders, ty, idx.as_deref())),
                self.ctx
                    .master
                    .and_then(|m| find_placeholder(&m.placeholders, ty, None)),
            ),
            None => (None, None),
        };

        if let Some((ty, _)) = &ph {
            match ty.as_str() {
                "pic" => return self.media_placeholder(sp, xf, MediaKind::Image, layout_ph, master_ph),
                "media" => return self.media_placeholder(sp, xf, MediaKind::Video, layout_ph, master_ph),
                "chart" => return self.skip(SkipReason::Chart, "empty chart placeholder"),
                "tbl" => return self.skip(SkipReason::Table, "empty table placeholder"),
                "clipArt" | "dgm" | "obj" => {
                    return self.skip(SkipReason::UnsupportedShape, format!("{ty} placeholder"))
                }
                _ => {}
            }
        }

        let name = match sp_pr {
            Some(p) if a_child(p, "custGeom").is_some() => {
                return self.skip(SkipReason::UnsupportedShape, "custom geometry");
            }
            Some(p) => match a_child(p, "prstGeom").and_then(|g| g.attribute("prst")) {
                Some(prst) => match ShapeName::from_preset(prst) {
                    Some(n) => n,
                    None => return self.skip(SkipReason::UnsupportedShape, format!("preset {prst}")),
                },
                None if connector => ShapeName::parse("straight_connector").unwrap(),
                None => ShapeName::rectangle(),
            },
            None => ShapeName::rectangle(),
        };

        let geometry = sp_pr
            .and_then(|p| a_child(p, "xfrm"))
            .and_then(read_xfrm)
            .or_else(|| layout_ph.and_then(|d| d.geometry))
            .or_else(|| master_ph.and_then(|d| d.geometry));
        let Some(geometry) = geometry else {
            return self.skip(SkipReason::Other, "shape without geometry");
        };

        let style_ref = p_child(sp, "style");
        let fill = self.fill(sp_pr, style_ref);

        let mut style = self.ctx.base.clone();
        if let Some((ty, _)) = &ph {
            if let Some(m) = self.ctx.master {
                let s = if is_title(ty) { &m.title } else { &m.body };
                merge(&mut style, s);
            }
            for d in [master_ph, layout_ph].into_iter().flatten() {
                merge(&mut style, &d.style);
            }
        }
        if let Some(font_ref) = style_ref.and_then(|s| a_child(s, "fontRef")) {
            match font_ref.attribute("idx") {
                Some("major") => style.font = Some(theme.major_font.clone()),
                Some("minor") => style.font = Some(theme.minor_font.clone()),
                _ => {}
            }
            if let Some(c) = theme.color_in(font_ref, None) {
                style.color = Some(c);
            }
        }
        let text = p_child(sp, "txBody").and_then(|body| text_frame(body, &style, theme));

        self.push(ShapeKind::AutoShape(name), xf.apply(geometry), fill, text);
    }

    fn media_placeholder(
        &mut self,
        sp: Node,
        xf: Affine,
        media: MediaKind,
        layout_ph: Option<&PlaceholderDef>,
        master_ph: Option<&PlaceholderDef>,
    ) {
        let geometry = p_child(sp, "spPr")
            .and_then(|p| a_child(p, "xfrm"))
            .and_then(read_xfrm)
            .or_else(|| layout_ph.and_then(|d| d.geometry))
            .or_else(|| master_ph.and_then(|d| d.geometry));
        match geometry {
            Some(g) => self.push(ShapeKind::Placeholder(media), xf.apply(g), Fill::none(), None),
            None => self.skip(SkipReason::Other, "placeholder without geometry"),
        }
    }

    fn picture(&mut self, pic: Node, xf: Affine) {
        let nv_pr = p_path(pic, &["nvPicPr", "nvPr"]);
        let has = |name: &str| nv_pr.is_some_and(|n| a_child(n, name).is_some());
        let media = if has("videoFile") || has("quickTimeFile") {
            MediaKind::Video
        } else if has("audioFile") || has("audioCd") || has("wavAudioFile") {
            return self.skip(SkipReason::UnsupportedShape, "audio");
        } else {
            MediaKind::Image
        };
        let Some(geometry) = p_child(pic, "spPr").and_then(|p| a_child(p, "xfrm")).and_then(read_xfrm) else {
            return self.skip(SkipReason::Other, "picture without geometry");
        };
        self.push(ShapeKind::Placeholder(media), xf.apply(geometry), Fill::none(), None);
        self.skip(SkipReason::MediaPayloadDropped, format!("{} payload", media.as_str()));
    }

    fn fill(&self, sp_pr: Option<Node>, style_ref: Option<Node>) -> Fill {
        let theme = self.ctx.theme;
        let explicit = sp_pr.and_then(|p| {
            p.children().filter(|n| n.is_element()).find(|n| {
                matches!(
                    n.tag_name().name(),
                    "noFill" | "solidFill" | "gradFill" | "pattFill" | "blipFill" | "grpFill"
                )
            })
        });
        let Some(node) = explicit else {
            let from_style = style_ref
                .and_then(|s| a_child(s, "fillRef"))
                .filter(|r| r.attribute("idx").is_some_and(|i| i != "0"))
                .and_then(|r| theme.color_in(r, None));
            return from_style.map(solid_from).unwrap_or_else(Fill::none);
        };
        match node.tag_name().name() {
            "solidFill" => theme.color_in(node, None).map(solid_from).unwrap_or_else(Fill::none),
            "gradFill" => {
                let mut stops: Vec<(f64, Color)> = a_child(node, "gsLst")
                    .map(|l| {
                        l.children()
                            .filter(|n| n.tag_name().name() == "gs")
                            .filter_map(|gs| {
                                let pos = gs.attribute("pos").and_then(|v| v.parse().ok()).unwrap_or(0.0);
                                theme.color_in(gs, None).map(|c| (pos, c))
                            })
                            .collect()
                    })
                    .unwrap_or_default();
                stops.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut colors: Vec<Color> = stops.into_iter().map(|(_, c)| c).collect();
                match colors.len() {
                    0 => Fill::none(),
                    1 => solid_from(colors.remove(0)),
                    _ => Fill::gradient(colors),
                }
            }
            "pattFill" => {
                let fg = a_child(node, "fgClr")
                    .and_then(|n| theme.color_in(n, None))
                    .unwrap_or_else(Color::black);
                let mut colors = vec![fg];
                if let Some(bg) = a_child(node, "bgClr").and_then(|n| theme.color_in(n, None)) {
                    colors.push(bg);
                }
                Fill {
                    mode: FillMode::Pattern,
                    colors,
                    transparency: 0.0,
                }
            }
            _ => Fill::none(),
        }
    }
}

/// Solid fills carry opacity as `transparency`; the color itself is opaque.
fn solid_from(c: Color) -> Fill {
    let transparency = round6(1.0 - c.alpha);
    Fill {
        transparency,
        ..Fill::solid(c.with_alpha(1.0))
    }
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

fn merge(into: &mut TextStyle, from: &TextStyle) {
    if from.font.is_some() {
        into.font.clone_from(&from.font);
    }
    if from.size.is_some() {
        into.size = from.size;
    }
    if from.color.is_some() {
        into.color.clone_from(&from.color);
    }
    if from.align.is_some() {
        into.align = from.align;
    }
    if from.spacing.is_some() {
        into.spacing = from.spacing;
    }
}

/// Paragraphs are joined with `\n`, carried as a prefix on the first run of
/// the following paragraph. Empty runs are dropped unless every run is empty.
fn text_frame(body: Node, inherited: &TextStyle, theme: &Theme) -> Option<TextFrame> {
    let mut style = inherited.clone();
    style.overlay_lst_style(body, theme);

    let mut runs: Vec<TextRun> = Vec::new();
    let mut saw_empty_run: Option<TextRun> = None;
    let mut pending = String::new();
    let mut frame_para: Option<TextStyle> = None;
    let mut first_para = true;

    let resolve = |s: &TextStyle| TextRun {
        text: String::new(),
        font_name: s.font.clone().unwrap_or_else(|| theme.minor_font.clone()),
        font_size: s.size.unwrap_or(18.0),
        color: s.color.clone().unwrap_or_else(Color::black),
    };

    for p in body.children().filter(|n| n.tag_name().name() == "p") {
        if !first_para {
            pending.push('\n');
        }
        first_para = false;
        let mut para = style.clone();
        if let Some(ppr) = a_child(p, "pPr") {
            para.overlay_ppr(ppr, theme);
        }
        for r in p.children().filter(|n| n.is_element()) {
            match r.tag_name().name() {
                "r" | "fld" => {
                    let mut rs = para.clone();
                    if let Some(rpr) = a_child(r, "rPr") {
                        rs.overlay_rpr(rpr, theme);
                    }
                    let t = a_child(r, "t").and_then(|t| t.text()).unwrap_or_default();
                    let mut run = resolve(&rs);
                    if t.is_empty() {
                        saw_empty_run.get_or_insert(run);
                        continue;
                    }
                    run.text = std::mem::take(&mut pending) + t;
                    if frame_para.is_none() {
                        frame_para = Some(para.clone());
                    }
                    runs.push(run);
                }
                "br" => pending.push('\n'),
                _ => {}
            }
        }
    }

    if runs.is_empty() {
        let run = saw_empty_run?;
        let mut frame = TextFrame::single(run);
        frame.alignment = style.align.unwrap_or(Alignment::Left);
        frame.line_spacing = style.spacing.unwrap_or(1.0);
        return Some(frame);
    }
    let para = frame_para.unwrap_or(style);
    Some(TextFrame {
        runs,
        line_spacing: para.spacing.unwrap_or(1.0),
        alignment: para.align.unwrap_or(Alignment::Left),
    })
}

fn parse_slide(xml: &str, slide_index: usize, source_id: String, canvas: (i64, i64), ctx: &SlideContext) -> SlideOutput {
    let mut out = SlideOutput {
        doc: SlideDoc::new(source_id, canvas.0, canvas.1),
        skipped: Vec::new(),
    };
    let doc = match Document::parse(xml) {
        Ok(d) => d,
        Err(e) => {
            out.skipped.push(Skip {
                slide_index,
                reason: SkipReason::Other,
                detail: format!("malformed slide xml: {e}"),
            });
            return out;
        }
    };
    let Some(tree) = p_path(doc.root_element(), &["cSld", "spTree"]) else {
        return out;
    };
    let mut walker = Walker {
        ctx,
        slide_index,
        elements: Vec::new(),
        skipped: Vec::new(),
    };
    walker.walk(tree, Affine::IDENTITY);
    out.doc.elements = walker.elements;
    out.skipped = walker.skipped;
    out
}

fn deck_title(pkg: &mut Package) -> String {
    let Some(xml) = pkg.part("docProps/core.xml") else {
        return String::new();
    };
    Document::parse(&xml)
        .ok()
        .and_then(|d| {
            d.descendants()
                .find(|n| n.tag_name().name() == "title")
                .and_then(|n| n.text().map(str::to_string))
        })
        .unwrap_or_default()
}

fn master_info(xml: &str, theme: &mut Theme) -> MasterInfo {
    let mut info = MasterInfo::default();
    let Ok(doc) = Document::parse(xml) else {
        return info;
    };
    if let Some(map) = p_child(doc.root_element(), "clrMap") {
        theme.set_clr_map(map);
    }
    let styles = p_child(doc.root_element(), "txStyles");
    for (name, slot) in [("titleStyle", &mut info.title), ("bodyStyle", &mut info.body)] {
        if let Some(lvl1) = styles.and_then(|s| p_child(s, name)).and_then(|s| a_child(s, "lvl1pPr")) {
            slot.overlay_ppr(lvl1, theme);
        }
    }
    info.placeholders = placeholder_defs(xml, theme);
    info
}

/// Parses a `.pptx` archive into slides.
///
/// Only a missing or unreadable archive or presentation part is fatal. A
/// slide whose XML does not parse is kept as an empty slide and reported.
pub fn load_pptx(bytes: &[u8]) -> Result<(Deck, IngestReport), IngestError> {
    let archive = zip::ZipArchive::new(Cursor::new(bytes.to_vec()))
        .map_err(|e| IngestError::NotAnArchive(e.to_string()))?;
    let mut pkg = Package { archive };

    let pres_name = pkg
        .rel_of_type("", "/officeDocument")
        .unwrap_or_else(|| "ppt/presentation.xml".to_string());
    let pres_xml = pkg.part(&pres_name).ok_or(IngestError::MissingPresentationPart)?;
    let pres = Document::parse(&pres_xml).map_err(|e| IngestError::MalformedPresentation(e.to_string()))?;
    let root = pres.root_element();

    let canvas = p_child(root, "sldSz")
        .and_then(|s| {
            let cx = s.attribute("cx")?.parse::<i64>().ok()?;
            let cy = s.attribute("cy")?.parse::<i64>().ok()?;
            (cx > 0 && cy > 0).then_some((cx, cy))
        })
        .unwrap_or(DEFAULT_CANVAS);

    let pres_rels = pkg.rels(&pres_name);
    let target_of = |rid: &str| {
        pres_rels
            .iter()
            .find(|(id, ty, _)| id == rid && ty.ends_with(REL_SLIDE))
            .map(|(_, _, t)| t.clone())
    };
    let slide_parts: Vec<Option<String>> = p_child(root, "sldIdLst")
        .map(|l| {
            l.children()
                .filter(|n| n.tag_name().name() == "sldId")
                .map(|n| {
                    n.attributes()
                        .find(|a| a.name() == "id" && a.namespace().is_some())
                        .and_then(|a| target_of(a.value()))
                })
                .collect()
        })
        .unwrap_or_default();

    let mut theme = pres_rels
        .iter()
        .find(|(_, ty, _)| ty.ends_with(REL_THEME))
        .map(|(_, _, t)| t.clone())
        .and_then(|t| pkg.part(&t))
        .and_then(|xml| Theme::parse(&xml))
        .unwrap_or_default();

    // Layouts and masters referenced by the slides, parsed once.
    let mut slide_layouts: Vec<Option<String>> = Vec::new();
    let mut layouts: HashMap<String, LayoutInfo> = HashMap::new();
    let mut master_xml: HashMap<String, String> = HashMap::new();
    for part in &slide_parts {
        let layout = part.as_ref().and_then(|p| pkg.rel_of_type(p, REL_LAYOUT));
        if let Some(l) = &layout {
            if !layouts.contains_key(l) {
                let master = pkg.rel_of_type(l, REL_MASTER);
                if let Some(m) = &master {
                    if !master_xml.contains_key(m) {
                        if let Some(xml) = pkg.part(m) {
                            master_xml.insert(m.clone(), xml);
                        }
                    }
                }
                let xml = pkg.part(l).unwrap_or_default();
                layouts.insert(
                    l.clone(),
                    LayoutInfo {
                        placeholders: placeholder_defs(&xml, &theme),
                        master,
                    },
                );
            }
        }
        slide_layouts.push(layout);
    }
    let mut masters: HashMap<String, MasterInfo> = HashMap::new();
    let mut names: Vec<&String> = master_xml.keys().collect();
    names.sort();
    for name in names {
        masters.insert(name.clone(), master_info(&master_xml[name], &mut theme));
    }

    let mut base = TextStyle::default();
    if let Some(lvl1) = p_child(root, "defaultTextStyle").and_then(|d| a_child(d, "lvl1pPr")) {
        base.overlay_ppr(lvl1, &theme);
    }

    let slide_xml: Vec<Option<String>> = slide_parts
        .iter()
        .map(|p| p.as_ref().and_then(|p| pkg.part(p)))
        .collect();

    let outputs: Vec<SlideOutput> = slide_xml
        .par_iter()
        .enumerate()
        .map(|(i, xml)| {
            let layout = slide_layouts[i].as_ref().and_then(|l| layouts.get(l));
            let ctx = SlideContext {
                theme: &theme,
                base: &base,
                layout,
                master: layout.and_then(|l| l.master.as_ref()).and_then(|m| masters.get(m)),
            };
            let source_id = slide_parts[i]
                .as_deref()
                .and_then(|p| p.rsplit('/').next())
                .map(|f| f.trim_end_matches(".xml").to_string())
                .unwrap_or_else(|| format!("slide{}", i + 1));
            match xml {
                Some(xml) => parse_slide(xml, i, source_id, canvas, &ctx),
                None => SlideOutput {
                    doc: SlideDoc::new(source_id, canvas.0, canvas.1),
                    skipped: vec![Skip {
                        slide_index: i,
                        reason: SkipReason::Other,
                        detail: "slide part missing".into(),
                    }],
                },
            }
        })
        .collect();

    let mut report = IngestReport::default();
    let mut slides = Vec::with_capacity(outputs.len());
    for out in outputs {
        report.parsed_elements += out.doc.elements.len();
        report.skipped.extend(out.skipped);
        slides.push(out.doc);
    }
    let deck = Deck {
        title: deck_title(&mut pkg),
        slides,
    };
    Ok((deck, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_targets() {
        assert_eq!(resolve_target("ppt/slides", "../slideLayouts/slideLayout7.xml"), "ppt/slideLayouts/slideLayout7.xml");
        assert_eq!(resolve_target("ppt", "slides/slide1.xml"), "ppt/slides/slide1.xml");
        assert_eq!(resolve_target("", "ppt/presentation.xml"), "ppt/presentation.xml");
        assert_eq!(resolve_target("ppt/slides", "/ppt/media/x.png"), "ppt/media/x.png");
    }

    #[test]
    fn nested_group_transform() {
        let xml = format!(
            r#"<g xmlns:a="{}"><a:xfrm><a:off x="1000" y="2000"/><a:ext cx="200" cy="100"/><a:chOff x="0" y="0"/><a:chExt cx="100" cy="100"/></a:xfrm></g>"#,
            super::super::theme::NS_A
        );
        let doc = Document::parse(&xml).unwrap();
        let xfrm = a_child(doc.root_element(), "xfrm").unwrap();
        let outer = Affine::IDENTITY.then_group(xfrm);
        let g = outer.apply(Geometry::new(50, 50, 10, 10));
        assert_eq!((g.x, g.y, g.width, g.height), (1100, 2050, 20, 10));
        let inner = outer.then_group(xfrm);
        let g = inner.apply(Geometry::new(0, 0, 10, 10));
        assert_eq!((g.x, g.y, g.width, g.height), (3000, 4000, 40, 10));
    }

    #[test]
    fn garbage_is_not_an_archive() {
        assert!(matches!(load_pptx(b"hello"), Err(IngestError::NotAnArchive(_))));
        assert!(matches!(load_pptx(&[]), Err(IngestError::NotAnArchive(_))));
    }
}
