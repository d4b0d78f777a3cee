use std::fmt::Write as _;
use std::io::{Cursor, Write};

use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipWriter};

use super::ExportError;
use crate::model::{validate, Alignment, Color, Deck, Element, Fill, FillMode, MediaKind, ShapeKind, DEFAULT_CANVAS};

const NS: &str = r#"xmlns:a="http://schemas.openxmlformats.org/drawingml/2006/main" xmlns:r="http://schemas.openxmlformats.org/officeDocument/2006/relationships" xmlns:p="http://schemas.openxmlformats.org/presentationml/2006/main""#;
const DECL: &str = r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>"#;
const REL_NS: &str = "http://schemas.openxmlformats.org/officeDocument/2006/relationships";
const PML_CT: &str = "application/vnd.openxmlformats-officedocument.presentationml";
const EMPTY_GROUP: &str = r#"<p:nvGrpSpPr><p:cNvPr id="1" name=""/><p:cNvGrpSpPr/><p:nvPr/></p:nvGrpSpPr><p:grpSpPr><a:xfrm><a:off x="0" y="0"/><a:ext cx="0" cy="0"/><a:chOff x="0" y="0"/><a:chExt cx="0" cy="0"/></a:xfrm></p:grpSpPr>"#;

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            // not representable in XML 1.0
            c if (c as u32) < 0x20 && !matches!(c, '\t' | '\n' | '\r') => {}
            '\u{FFFE}' | '\u{FFFF}' => {}
            c => out.push(c),
        }
    }
    out
}

fn color_xml(c: &Color, alpha: f64) -> String {
    let alpha = (alpha.clamp(0.0, 1.0) * 100_000.0).round() as i64;
    if alpha >= 100_000 {
        format!(r#"<a:srgbClr val="{}"/>"#, c.rgb)
    } else {
        format!(r#"<a:srgbClr val="{}"><a:alpha val="{alpha}"/></a:srgbClr>"#, c.rgb)
    }
}

fn fill_xml(fill: &Fill) -> String {
    let opacity = 1.0 - fill.transparency;
    match fill.mode {
        FillMode::None => "<a:noFill/>".into(),
        FillMode::Solid => format!("<a:solidFill>{}</a:solidFill>", color_xml(&fill.colors[0], fill.colors[0].alpha * opacity)),
        FillMode::Gradient => {
            let n = fill.colors.len();
            let mut stops = String::new();
            for (i, c) in fill.colors.iter().enumerate() {
                let pos = if n > 1 { i * 100_000 / (n - 1) } else { 0 };
                let _ = write!(stops, r#"<a:gs pos="{pos}">{}</a:gs>"#, color_xml(c, c.alpha * opacity));
            }
            format!(r#"<a:gradFill rotWithShape="1"><a:gsLst>{stops}</a:gsLst><a:lin ang="0" scaled="0"/></a:gradFill>"#)
        }
        FillMode::Pattern => {
            let fg = &fill.colors[0];
            let mut s = format!(r#"<a:pattFill prst="pct50"><a:fgClr>{}</a:fgClr>"#, color_xml(fg, fg.alpha * opacity));
            if let Some(bg) = fill.colors.get(1) {
                let _ = write!(s, "<a:bgClr>{}</a:bgClr>", color_xml(bg, bg.alpha * opacity));
            }
            s.push_str("</a:pattFill>");
            s
        }
    }
}

fn xfrm_xml(e: &Element) -> String {
    let g = &e.position;
    let rot = (g.rotation * 60_000.0).round() as i64;
    let rot_attr = if rot != 0 { format!(r#" rot="{rot}""#) } else { String::new() };
    format!(
        r#"<a:xfrm{rot_attr}><a:off x="{}" y="{}"/><a:ext cx="{}" cy="{}"/></a:xfrm>"#,
        g.x, g.y, g.width, g.height
    )
}

fn algn(a: Alignment) -> &'static str {
    match a {
        Alignment::Left => "l",
        Alignment::Center => "ctr",
        Alignment::Right => "r",
        Alignment::Justify => "just",
    }
}

fn text_xml(e: &Element) -> String {
    let Some(t) = &e.text else {
        return String::new();
    };
    let spacing = (t.line_spacing * 100_000.0).round() as i64;
    let ppr = format!(
        r#"<a:pPr algn="{}"><a:lnSpc><a:spcPct val="{spacing}"/></a:lnSpc></a:pPr>"#,
        algn(t.alignment)
    );
    let run_xml = |text: &str, r: &crate::model::TextRun| {
        let sz = (r.font_size * 100.0).round() as i64;
        format!(
            r#"<a:r><a:rPr lang="en-US" sz="{sz}" dirty="0"><a:solidFill>{}</a:solidFill><a:latin typeface="{}"/></a:rPr><a:t>{}</a:t></a:r>"#,
            color_xml(&r.color, r.color.alpha),
            esc(&r.font_name),
            esc(text)
        )
    };

    let mut paragraphs: Vec<String> = vec![String::new()];
    if t.runs.len() == 1 && t.runs[0].text.is_empty() {
        paragraphs[0] = run_xml("", &t.runs[0]);
    } else {
        for r in &t.runs {
            for (k, seg) in r.text.split('\n').enumerate() {
                if k > 0 {
                    paragraphs.push(String::new());
                }
                if !seg.is_empty() {
                    paragraphs.last_mut().unwrap().push_str(&run_xml(seg, r));
                }
            }
        }
    }
    let mut body = String::from(r#"<p:txBody><a:bodyPr wrap="square" rtlCol="0"/><a:lstStyle/>"#);
    for p in paragraphs {
        let _ = write!(body, "<a:p>{ppr}{p}</a:p>");
    }
    body.push_str("</p:txBody>");
    body
}

fn shape_xml(e: &Element, shape_id: usize, video_rel: Option<&str>) -> String {
    let name = esc(&e.id);
    match e.kind {
        ShapeKind::AutoShape(shape) => {
            let line = if shape.is_linear() {
                let c = e
                    .fill
                    .colors
                    .first()
                    .map(|c| color_xml(c, 1.0))
                    .unwrap_or_else(|| color_xml(&Color::black(), 1.0));
                format!(r#"<a:ln w="12700"><a:solidFill>{c}</a:solidFill></a:ln>"#)
            } else {
                String::new()
            };
            format!(
                r#"<p:sp><p:nvSpPr><p:cNvPr id="{shape_id}" name="{name}"/><p:cNvSpPr/><p:nvPr/></p:nvSpPr><p:spPr>{}<a:prstGeom prst="{}"><a:avLst/></a:prstGeom>{}{line}</p:spPr>{}</p:sp>"#,
                xfrm_xml(e),
                shape.preset(),
                fill_xml(&e.fill),
                text_xml(e)
            )
        }
        ShapeKind::Placeholder(media) => {
            let nv_pr = match (media, video_rel) {
                (MediaKind::Video, Some(rid)) => format!(r#"<p:nvPr><a:videoFile r:link="{rid}"/></p:nvPr>"#),
                _ => "<p:nvPr/>".to_string(),
            };
            format!(
                r#"<p:pic><p:nvPicPr><p:cNvPr id="{shape_id}" name="{name}"/><p:cNvPicPr><a:picLocks noChangeAspect="1"/></p:cNvPicPr>{nv_pr}</p:nvPicPr><p:blipFill><a:blip/><a:stretch><a:fillRect/></a:stretch></p:blipFill><p:spPr>{}<a:prstGeom prst="rect"><a:avLst/></a:prstGeom></p:spPr></p:pic>"#,
                xfrm_xml(e)
            )
        }
    }
}

fn slide_parts(doc: &crate::model::SlideDoc) -> (String, String) {
    let mut rels = format!(
        r#"{DECL}<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships"><Relationship Id="rId1" Type="{REL_NS}/slideLayout" Target="../slideLayouts/slideLayout1.xml"/>"#
    );
    let mut shapes = String::new();
    let mut next_rel = 2;
    for (i, e) in doc.elements.iter().enumerate() {
        let video_rel = if e.kind == ShapeKind::Placeholder(MediaKind::Video) {
            let rid = format!("rId{next_rel}");
            next_rel += 1;
            let _ = write!(
                rels,
                r#"<Relationship Id="{rid}" Type="{REL_NS}/video" Target="NULL" TargetMode="External"/>"#
            );
            Some(rid)
        } else {
            None
        };
        shapes.push_str(&shape_xml(e, i + 2, video_rel.as_deref()));
    }
    rels.push_str("</Relationships>");
    let slide = format!(
        r#"{DECL}<p:sld {NS}><p:cSld><p:spTree>{EMPTY_GROUP}{shapes}</p:spTree></p:cSld><p:clrMapOvr><a:masterClrMapping/></p:clrMapOvr></p:sld>"#
    );
    (slide, rels)
}

const THEME: &str = r#"<a:theme xmlns:a="http://schemas.openxmlformats.org/drawingml/2006/main" name="Plain"><a:themeElements><a:clrScheme name="Plain"><a:dk1><a:srgbClr val="000000"/></a:dk1><a:lt1><a:srgbClr val="FFFFFF"/></a:lt1><a:dk2><a:srgbClr val="1F497D"/></a:dk2><a:lt2><a:srgbClr val="EEECE1"/></a:lt2><a:accent1><a:srgbClr val="4F81BD"/></a:accent1><a:accent2><a:srgbClr val="C0504D"/></a:accent2><a:accent3><a:srgbClr val="9BBB59"/></a:accent3><a:accent4><a:srgbClr val="8064A2"/></a:accent4><a:accent5><a:srgbClr val="4BACC6"/></a:accent5><a:accent6><a:srgbClr val="F79646"/></a:accent6><a:hlink><a:srgbClr val="0000FF"/></a:hlink><a:folHlink><a:srgbClr val="800080"/></a:folHlink></a:clrScheme><a:fontScheme name="Plain"><a:majorFont><a:latin typeface="Calibri"/><a:ea typeface=""/><a:cs typeface=""/></a:majorFont><a:minorFont><a:latin typeface="Calibri"/><a:ea typeface=""/><a:cs typeface=""/></a:minorFont></a:fontScheme><a:fmtScheme name="Plain"><a:fillStyleLst><a:solidFill><a:schemeClr val="phClr"/></a:solidFill><a:solidFill><a:schemeClr val="phClr"/></a:solidFill><a:solidFill><a:schemeClr val="phClr"/></a:solidFill></a:fillStyleLst><a:lnStyleLst><a:ln w="9525"><a:solidFill><a:schemeClr val="phClr"/></a:solidFill></a:ln><a:ln w="25400"><a:solidFill><a:schemeClr val="phClr"/></a:solidFill></a:ln><a:ln w="38100"><a:solidFill><a:schemeClr val="phClr"/></a:solidFill></a:ln></a:lnStyleLst><a:effectStyleLst><a:effectStyle><a:effectLst/></a:effectStyle><a:effectStyle><a:effectLst/></a:effectStyle><a:effectStyle><a:effectLst/></a:effectStyle></a:effectStyleLst><a:bgFillStyleLst><a:solidFill><a:schemeClr val="phClr"/></a:solidFill><a:solidFill><a:schemeClr val="phClr"/></a:solidFill><a:solidFill><a:schemeClr val="phClr"/></a:solidFill></a:bgFillStyleLst></a:fmtScheme></a:themeElements></a:theme>"#;

fn master_xml() -> String {
    let lvl = r#"<a:lvl1pPr><a:defRPr sz="1800"><a:solidFill><a:schemeClr val="tx1"/></a:solidFill><a:latin typeface="+mn-lt"/></a:defRPr></a:lvl1pPr>"#;
    format!(
        r#"{DECL}<p:sldMaster {NS}><p:cSld><p:bg><p:bgRef idx="1001"><a:schemeClr val="bg1"/></p:bgRef></p:bg><p:spTree>{EMPTY_GROUP}</p:spTree></p:cSld><p:clrMap bg1="lt1" tx1="dk1" bg2="lt2" tx2="dk2" accent1="accent1" accent2="accent2" accent3="accent3" accent4="accent4" accent5="accent5" accent6="accent6" hlink="hlink" folHlink="folHlink"/><p:sldLayoutIdLst><p:sldLayoutId id="2147483649" r:id="rId1"/></p:sldLayoutIdLst><p:txStyles><p:titleStyle>{lvl}</p:titleStyle><p:bodyStyle>{lvl}</p:bodyStyle><p:otherStyle>{lvl}</p:otherStyle></p:txStyles></p:sldMaster>"#
    )
}

fn rels_xml(entries: &[(String, String, String)]) -> String {
    let mut s = format!(r#"{DECL}<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">"#);
    for (id, ty, target) in entries {
        let _ = write!(s, r#"<Relationship Id="{id}" Type="{ty}" Target="{target}"/>"#);
    }
    s.push_str("</Relationships>");
    s
}

/// Writes `deck` as a minimal `.pptx` archive.
///
/// Every slide must validate and share one canvas size, since a package
/// has a single slide size. Output bytes are deterministic.
pub fn export_pptx(deck: &Deck) -> Result<Vec<u8>, ExportError> {
    let canvas = deck
        .slides
        .first()
        .map(|s| (s.canvas_width, s.canvas_height))
        .unwrap_or(DEFAULT_CANVAS);
    for (index, s) in deck.slides.iter().enumerate() {
        let violations = validate(s);
        if !violations.is_empty() {
            return Err(ExportError::Invalid { index, violations });
        }
        let found = (s.canvas_width, s.canvas_height);
        if found != canvas {
            return Err(ExportError::MixedCanvas {
                index,
                expected: canvas,
                found,
            });
        }
    }

    let n = deck.slides.len();
    let mut parts: Vec<(String, String)> = Vec::new();

    let mut ct = format!(
        r#"{DECL}<Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types"><Default Extension="rels" ContentType="application/vnd.openxmlformats-package.relationships+xml"/><Default Extension="xml" ContentType="application/xml"/><Override PartName="/ppt/presentation.xml" ContentType="{PML_CT}.presentation.main+xml"/><Override PartName="/ppt/slideMasters/slideMaster1.xml" ContentType="{PML_CT}.slideMaster+xml"/><Override PartName="/ppt/slideLayouts/slideLayout1.xml" ContentType="{PML_CT}.slideLayout+xml"/><Override PartName="/ppt/theme/theme1.xml" ContentType="application/vnd.openxmlformats-officedocument.theme+xml"/><Override PartName="/ppt/presProps.xml" ContentType="{PML_CT}.presProps+xml"/><Override PartName="/docProps/core.xml" ContentType="application/vnd.openxmlformats-package.core-properties+xml"/>"#
    );
    for i in 1..=n {
        let _ = write!(ct, r#"<Override PartName="/ppt/slides/slide{i}.xml" ContentType="{PML_CT}.slide+xml"/>"#);
    }
    ct.push_str("</Types>");
    parts.push(("[Content_Types].xml".into(), ct));

    parts.push((
        "_rels/.rels".into(),
        rels_xml(&[
            ("rId1".into(), format!("{REL_NS}/officeDocument"), "ppt/presentation.xml".into()),
            (
                "rId2".into(),
                "http://schemas.openxmlformats.org/package/2006/relationships/metadata/core-properties".into(),
                "docProps/core.xml".into(),
            ),
        ]),
    ));
    parts.push((
        "docProps/core.xml".into(),
        format!(
            r#"{DECL}<cp:coreProperties xmlns:cp="http://schemas.openxmlformats.org/package/2006/metadata/core-properties" xmlns:dc="http://purl.org/dc/elements/1.1/"><dc:title>{}</dc:title></cp:coreProperties>"#,
            esc(&deck.title)
        ),
    ));

    let mut pres_rels = vec![
        ("rId1".to_string(), format!("{REL_NS}/slideMaster"), "slideMasters/slideMaster1.xml".to_string()),
        ("rId2".to_string(), format!("{REL_NS}/theme"), "theme/theme1.xml".to_string()),
        ("rId3".to_string(), format!("{REL_NS}/presProps"), "presProps.xml".to_string()),
    ];
    let mut sld_ids = String::new();
    for i in 0..n {
        let rid = format!("rId{}", i + 4);
        let _ = write!(sld_ids, r#"<p:sldId id="{}" r:id="{rid}"/>"#, 256 + i);
        pres_rels.push((rid, format!("{REL_NS}/slide"), format!("slides/slide{}.xml", i + 1)));
    }
    let sld_id_lst = if n > 0 {
        format!("<p:sldIdLst>{sld_ids}</p:sldIdLst>")
    } else {
        String::new()
    };
    parts.push((
        "ppt/presentation.xml".into(),
        format!(
            r#"{DECL}<p:presentation {NS} saveSubsetFonts="1"><p:sldMasterIdLst><p:sldMasterId id="2147483648" r:id="rId1"/></p:sldMasterIdLst>{sld_id_lst}<p:sldSz cx="{}" cy="{}"/><p:notesSz cx="6858000" cy="9144000"/></p:presentation>"#,
            canvas.0, canvas.1
        ),
    ));
    parts.push(("ppt/_rels/presentation.xml.rels".into(), rels_xml(&pres_rels)));
    parts.push((
        "ppt/presProps.xml".into(),
        format!(r#"{DECL}<p:presentationPr {NS}/>"#),
    ));
    parts.push(("ppt/theme/theme1.xml".into(), format!("{DECL}{THEME}")));
    parts.push(("ppt/slideMasters/slideMaster1.xml".into(), master_xml()));
    parts.push((
        "ppt/slideMasters/_rels/slideMaster1.xml.rels".into(),
        rels_xml(&[
            ("rId1".into(), format!("{REL_NS}/slideLayout"), "../slideLayouts/slideLayout1.xml".into()),
            ("rId2".into(), format!("{REL_NS}/theme"), "../theme/theme1.xml".into()),
        ]),
    ));
    parts.push((
        "ppt/slideLayouts/slideLayout1.xml".into(),
        format!(
            r#"{DECL}<p:sldLayout {NS} type="blank" preserve="1"><p:cSld name="Blank"><p:spTree>{EMPTY_GROUP}</p:spTree></p:cSld><p:clrMapOvr><a:masterClrMapping/></p:clrMapOvr></p:sldLayout>"#
        ),
    ));
    parts.push((
        "ppt/slideLayouts/_rels/slideLayout1.xml.rels".into(),
        rels_xml(&[(
            "rId1".into(),
            format!("{REL_NS}/slideMaster"),
            "../slideMasters/slideMaster1.xml".into(),
        )]),
    ));
    for (i, s) in deck.slides.iter().enumerate() {
        let (slide, rels) = slide_parts(s);
        parts.push((format!("ppt/slides/slide{}.xml", i + 1), slide));
        parts.push((format!("ppt/slides/_rels/slide{}.xml.rels", i + 1), rels));
    }

    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    let opts = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Deflated)
        .last_modified_time(DateTime::default());
    for (name, body) in parts {
        zip.start_file(name, opts).map_err(|e| ExportError::Zip(e.to_string()))?;
        zip.write_all(body.as_bytes()).map_err(|e| ExportError::Zip(e.to_string()))?;
    }
    let cursor = zip.finish().map_err(|e| ExportError::Zip(e.to_string()))?;
    Ok(cursor.into_inner())
}
