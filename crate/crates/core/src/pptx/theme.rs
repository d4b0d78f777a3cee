//! Theme palette, font scheme and DrawingML color resolution.

use std::collections::HashMap;

use roxmltree::Node;

use crate::model::Color;

pub(crate) const NS_A: &str = "http://schemas.openxmlformats.org/drawingml/2006/main";

/// Office 2007 default palette, used when a deck ships no theme part.
const OFFICE_SCHEME: [(&str, &str); 12] = [
    ("dk1", "000000"),
    ("lt1", "FFFFFF"),
    ("dk2", "1F497D"),
    ("lt2", "EEECE1"),
    ("accent1", "4F81BD"),
    ("accent2", "C0504D"),
    ("accent3", "9BBB59"),
    ("accent4", "8064A2"),
    ("accent5", "4BACC6"),
    ("accent6", "F79646"),
    ("hlink", "0000FF"),
    ("folHlink", "800080"),
];

#[derive(Debug, Clone)]
pub(crate) struct Theme {
    scheme: HashMap<String, (u8, u8, u8)>,
    /// Scheme aliases (`tx1` → `dk1`, ...) from the master's color map.
    clr_map: HashMap<String, String>,
    pub major_font: String,
    pub minor_font: String,
}

impl Default for Theme {
    fn default() -> Self {
        let scheme = OFFICE_SCHEME
            .iter()
            .map(|(k, v)| (k.to_string(), hex_rgb(v).unwrap()))
            .collect();
        let clr_map = [("tx1", "dk1"), ("tx2", "dk2"), ("bg1", "lt1"), ("bg2", "lt2")]
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Theme {
            scheme,
            clr_map,
            major_font: "Calibri".into(),
            minor_font: "Calibri".into(),
        }
    }
}

fn hex_rgb(s: &str) -> Option<(u8, u8, u8)> {
    Color::parse(s).and_then(|c| c.channels())
}

pub(crate) fn a_child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children()
        .find(|c| c.is_element() && c.tag_name().name() == name && c.tag_name().namespace() == Some(NS_A))
}

impl Theme {
    /// Reads `a:theme`. Missing pieces keep their Office defaults.
    pub fn parse(xml: &str) -> Option<Theme> {
        let doc = roxmltree::Document::parse(xml).ok()?;
        let mut theme = Theme::default();
        for node in doc.descendants().filter(|n| n.is_element()) {
            match node.tag_name().name() {
                "clrScheme" => {
                    for slot in node.children().filter(|n| n.is_element()) {
                        let rgb = slot.children().filter(|n| n.is_element()).find_map(|c| {
                            match c.tag_name().name() {
                                "srgbClr" => c.attribute("val").and_then(hex_rgb),
                                "sysClr" => c.attribute("lastClr").and_then(hex_rgb),
                                _ => None,
                            }
                        });
                        if let Some(rgb) = rgb {
                            theme.scheme.insert(slot.tag_name().name().to_string(), rgb);
                        }
                    }
                }
                "majorFont" | "minorFont" => {
                    if let Some(face) = a_child(node, "latin").and_then(|l| l.attribute("typeface")) {
                        if !face.is_empty() {
                            if node.tag_name().name() == "majorFont" {
                                theme.major_font = face.to_string();
                            } else {
                                theme.minor_font = face.to_string();
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        Some(theme)
    }

    /// Applies a master `p:clrMap` element's aliases.
    pub fn set_clr_map(&mut self, clr_map: Node) {
        for attr in clr_map.attributes() {
            self.clr_map.insert(attr.name().to_string(), attr.value().to_string());
        }
    }

    fn scheme_rgb(&self, name: &str) -> Option<(u8, u8, u8)> {
        let slot = self.clr_map.get(name).map(String::as_str).unwrap_or(name);
        self.scheme.get(slot).copied()
    }

    /// Resolves `+mj-lt` / `+mn-lt` theme font references.
    pub fn font(&self, typeface: &str) -> String {
        match typeface {
            "+mj-lt" | "+mj-ea" | "+mj-cs" => self.major_font.clone(),
            "+mn-lt" | "+mn-ea" | "+mn-cs" => self.minor_font.clone(),
            other => other.to_string(),
        }
    }

    /// Resolves the first color child of `parent` (`srgbClr`, `schemeClr`,
    /// `sysClr`, `prstClr`, `scrgbClr`, `hslClr`) with its modifiers applied.
    /// `phClr` resolves to `placeholder` when given.
    pub fn color_in(&self, parent: Node, placeholder: Option<&Color>) -> Option<Color> {
        parent
            .children()
            .filter(|n| n.is_element())
            .find_map(|n| self.color(n, placeholder))
    }

    pub fn color(&self, node: Node, placeholder: Option<&Color>) -> Option<Color> {
        let base = match node.tag_name().name() {
            "srgbClr" => node.attribute("val").and_then(hex_rgb)?,
            "sysClr" => node.attribute("lastClr").and_then(hex_rgb).unwrap_or((0, 0, 0)),
            "schemeClr" => match node.attribute("val")? {
                "phClr" => placeholder.and_then(|c| c.channels()).unwrap_or((0, 0, 0)),
                name => self.scheme_rgb(name).unwrap_or((0, 0, 0)),
            },
            "prstClr" => preset_rgb(node.attribute("val")?),
            "scrgbClr" => {
                let pct = |a: &str| {
                    let v = node.attribute(a).and_then(|v| v.parse::<f64>().ok()).unwrap_or(0.0) / 100_000.0;
                    (linear_to_srgb(v.clamp(0.0, 1.0)) * 255.0).round() as u8
                };
                (pct("r"), pct("g"), pct("b"))
            }
            "hslClr" => {
                let get = |a: &str| node.attribute(a).and_then(|v| v.parse::<f64>().ok()).unwrap_or(0.0);
                hsl_to_rgb(get("hue") / 60_000.0, get("sat") / 100_000.0, get("lum") / 100_000.0)
            }
            _ => return None,
        };
        Some(apply_modifiers(base, node))
    }
}

fn preset_rgb(name: &str) -> (u8, u8, u8) {
    match name {
        "white" => (255, 255, 255),
        "red" => (255, 0, 0),
        "green" => (0, 128, 0),
        "lime" => (0, 255, 0),
        "blue" => (0, 0, 255),
        "yellow" => (255, 255, 0),
        "gray" | "grey" => (128, 128, 128),
        "orange" => (255, 165, 0),
        "purple" => (128, 0, 128),
        "navy" => (0, 0, 128),
        _ => (0, 0, 0),
    }
}

fn linear_to_srgb(v: f64) -> f64 {
    if v <= 0.003_130_8 {
        v * 12.92
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

fn apply_modifiers(rgb: (u8, u8, u8), node: Node) -> Color {
    let (mut h, mut s, mut l) = rgb_to_hsl(rgb);
    let mut channels = [rgb.0 as f64, rgb.1 as f64, rgb.2 as f64];
    let mut alpha = 1.0;
    let mut hsl_dirty = false;
    for m in node.children().filter(|n| n.is_element()) {
        let Some(val) = m.attribute("val").and_then(|v| v.parse::<f64>().ok()) else {
            continue;
        };
        let f = val / 100_000.0;
        match m.tag_name().name() {
            "alpha" => alpha = f.clamp(0.0, 1.0),
            "lumMod" | "lumOff" | "satMod" | "hueOff" => {
                if !hsl_dirty {
                    (h, s, l) = rgb_to_hsl((channels[0] as u8, channels[1] as u8, channels[2] as u8));
                    hsl_dirty = true;
                }
                match m.tag_name().name() {
                    "lumMod" => l *= f,
                    "lumOff" => l += f,
                    "satMod" => s *= f,
                    _ => h = (h + val / 60_000.0).rem_euclid(360.0),
                }
                l = l.clamp(0.0, 1.0);
                s = s.clamp(0.0, 1.0);
                let (r, g, b) = hsl_to_rgb(h, s, l);
                channels = [r as f64, g as f64, b as f64];
            }
            "tint" => {
                for c in &mut channels {
                    *c += (255.0 - *c) * (1.0 - f);
                }
                hsl_dirty = false;
            }
            "shade" => {
                for c in &mut channels {
                    *c *= f;
                }
                hsl_dirty = false;
            }
            _ => {}
        }
    }
    let c = |v: f64| v.round().clamp(0.0, 255.0) as u8;
    Color::from_rgb(c(channels[0]), c(channels[1]), c(channels[2])).with_alpha(alpha)
}

/// Hue in degrees, saturation and lightness in [0,1].
pub fn rgb_to_hsl((r, g, b): (u8, u8, u8)) -> (f64, f64, f64) {
    let (r, g, b) = (r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let l = (max + min) / 2.0;
    let d = max - min;
    if d == 0.0 {
        return (0.0, 0.0, l);
    }
    let s = d / (1.0 - (2.0 * l - 1.0).abs());
    let h = if max == r {
        60.0 * ((g - b) / d).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / d + 2.0)
    } else {
        60.0 * ((r - g) / d + 4.0)
    };
    (h, s, l)
}

pub fn hsl_to_rgb(h: f64, s: f64, l: f64) -> (u8, u8, u8) {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let hp = h.rem_euclid(360.0) / 60.0;
    let x = c * (1.0 - (hp.rem_euclid(2.0) - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    let q = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    (q(r), q(g), q(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(theme: &Theme, xml: &str) -> Color {
        let wrapped = format!(r#"<a:solidFill xmlns:a="{NS_A}">{xml}</a:solidFill>"#);
        let doc = roxmltree::Document::parse(&wrapped).unwrap();
        theme.color_in(doc.root_element(), None).unwrap()
    }

    #[test]
    fn scheme_colors_go_through_the_color_map() {
        let t = Theme::default();
        assert_eq!(resolve(&t, r#"<a:schemeClr val="tx1"/>"#).rgb, "000000");
        assert_eq!(resolve(&t, r#"<a:schemeClr val="bg1"/>"#).rgb, "FFFFFF");
        assert_eq!(resolve(&t, r#"<a:schemeClr val="accent1"/>"#).rgb, "4F81BD");
    }

    #[test]
    fn modifiers() {
        let t = Theme::default();
        // white at 50% luminance is mid gray
        let c = resolve(&t, r#"<a:srgbClr val="FFFFFF"><a:lumMod val="50000"/></a:srgbClr>"#);
        assert_eq!(c.rgb, "808080");
        let c = resolve(&t, r#"<a:srgbClr val="000000"><a:lumMod val="50000"/><a:lumOff val="50000"/></a:srgbClr>"#);
        assert_eq!(c.rgb, "808080");
        let c = resolve(&t, r#"<a:srgbClr val="FF0000"><a:alpha val="25000"/></a:srgbClr>"#);
        assert_eq!((c.rgb.as_str(), c.alpha), ("FF0000", 0.25));
        let c = resolve(&t, r#"<a:srgbClr val="000000"><a:tint val="75000"/></a:srgbClr>"#);
        assert_eq!(c.rgb, "404040");
    }

    #[test]
    fn hsl_round_trip() {
        for rgb in [(255, 0, 0), (31, 78, 121), (128, 128, 128), (242, 169, 0)] {
            let (h, s, l) = rgb_to_hsl(rgb);
            assert_eq!(hsl_to_rgb(h, s, l), rgb);
        }
    }

    #[test]
    fn theme_part_overrides_defaults() {
        let xml = format!(
            r#"<a:theme xmlns:a="{NS_A}"><a:themeElements><a:clrScheme name="x"><a:dk1><a:sysClr val="windowText" lastClr="111111"/></a:dk1><a:accent1><a:srgbClr val="ABCDEF"/></a:accent1></a:clrScheme><a:fontScheme name="f"><a:majorFont><a:latin typeface="Georgia"/></a:majorFont><a:minorFont><a:latin typeface="Lato"/></a:minorFont></a:fontScheme></a:themeElements></a:theme>"#
        );
        let t = Theme::parse(&xml).unwrap();
        assert_eq!(resolve(&t, r#"<a:schemeClr val="tx1"/>"#).rgb, "111111");
        assert_eq!(resolve(&t, r#"<a:schemeClr val="accent1"/>"#).rgb, "ABCDEF");
        assert_eq!(resolve(&t, r#"<a:schemeClr val="accent2"/>"#).rgb, "C0504D");
        assert_eq!(t.font("+mj-lt"), "Georgia");
        assert_eq!(t.font("+mn-lt"), "Lato");
        assert_eq!(t.font("Arial"), "Arial");
    }
}
