//! Element-level structural diff between two slides.

use serde::Serialize;

use super::{Element, SlideDoc};

/// Pseudo element id under which slide-level changes (canvas, source id) are
/// reported. Real element ids never start with `@`.
pub const SLIDE_DIFF_ID: &str = "@slide";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Change {
    Added,
    Removed,
    /// Dotted field paths that differ, e.g. `position.x` or `text.runs[0].font_name`.
    Modified(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ElementDiff {
    pub id: String,
    pub change: Change,
}

impl ElementDiff {
    /// True when the only difference is the status tag.
    pub fn is_status_only(&self) -> bool {
        matches!(&self.change, Change::Modified(f) if f.iter().all(|p| p == "status"))
    }

    /// Changed paths other than `status`. Added/removed report a single
    /// pseudo-path naming the change.
    pub fn design_fields(&self) -> Vec<&str> {
        match &self.change {
            Change::Added => vec!["<added>"],
            Change::Removed => vec!["<removed>"],
            Change::Modified(f) => f.iter().map(String::as_str).filter(|p| *p != "status").collect(),
        }
    }
}

fn element_fields(a: &Element, b: &Element) -> Vec<String> {
    let mut out = Vec::new();
    let mut check = |cond: bool, path: &str| {
        if cond {
            out.push(path.to_string());
        }
    };
    check(a.kind != b.kind, "kind");
    let (pa, pb) = (&a.position, &b.position);
    check(pa.x != pb.x, "position.x");
    check(pa.y != pb.y, "position.y");
    check(pa.width != pb.width, "position.width");
    check(pa.height != pb.height, "position.height");
    check(pa.rotation != pb.rotation, "position.rotation");
    check(a.fill.mode != b.fill.mode, "fill.mode");
    check(a.fill.colors != b.fill.colors, "fill.colors");
    check(a.fill.transparency != b.fill.transparency, "fill.transparency");
    match (&a.text, &b.text) {
        (None, None) => {}
        (Some(_), None) | (None, Some(_)) => out.push("text".into()),
        (Some(ta), Some(tb)) => {
            if ta.runs.len() != tb.runs.len() {
                out.push("text.runs".into());
            } else {
                for (i, (ra, rb)) in ta.runs.iter().zip(&tb.runs).enumerate() {
                    let mut run = |cond: bool, field: &str| {
                        if cond {
                            out.push(format!("text.runs[{i}].{field}"));
                        }
                    };
                    run(ra.text != rb.text, "text");
                    run(ra.font_name != rb.font_name, "font_name");
                    run(ra.font_size != rb.font_size, "font_size");
                    run(ra.color != rb.color, "color");
                }
            }
            if ta.line_spacing != tb.line_spacing {
                out.push("text.line_spacing".into());
            }
            if ta.alignment != tb.alignment {
                out.push("text.alignment".into());
            }
        }
    }
    if a.status != b.status {
        out.push("status".into());
    }
    out
}

/// Matches elements by id and reports what changed from `a` to `b`.
///
/// Entries come in `a` order (removed/modified) followed by additions in `b`
/// order. A relative reordering of shared elements is reported as a
/// `z_order` change on each element whose rank among shared ids moved.
/// The result is empty iff the documents are equal.
pub fn diff(a: &SlideDoc, b: &SlideDoc) -> Vec<ElementDiff> {
    let mut out = Vec::new();

    let mut slide_fields = Vec::new();
    if a.source_id != b.source_id {
        slide_fields.push("source_id".to_string());
    }
    if a.canvas_width != b.canvas_width {
        slide_fields.push("canvas_width".to_string());
    }
    if a.canvas_height != b.canvas_height {
        slide_fields.push("canvas_height".to_string());
    }
    if !slide_fields.is_empty() {
        out.push(ElementDiff {
            id: SLIDE_DIFF_ID.to_string(),
            change: Change::Modified(slide_fields),
        });
    }

    let shared_a: Vec<&str> = a.ids().filter(|id| b.element(id).is_some()).collect();
    let shared_b: Vec<&str> = b.ids().filter(|id| a.element(id).is_some()).collect();
    let rank_b = |id: &str| shared_b.iter().position(|x| *x == id);

    for ea in &a.elements {
        match b.element(&ea.id) {
            None => out.push(ElementDiff {
                id: ea.id.clone(),
                change: Change::Removed,
            }),
            Some(eb) => {
                let mut fields = element_fields(ea, eb);
                let rank_a = shared_a.iter().position(|x| *x == ea.id);
                if rank_a != rank_b(&ea.id) {
                    fields.push("z_order".into());
                }
                if !fields.is_empty() {
                    out.push(ElementDiff {
                        id: ea.id.clone(),
                        change: Change::Modified(fields),
                    });
                }
            }
        }
    }
    for eb in &b.elements {
        if a.element(&eb.id).is_none() {
            out.push(ElementDiff {
                id: eb.id.clone(),
                change: Change::Added,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    fn doc() -> SlideDoc {
        let mut d = SlideDoc::new("d", 1000, 1000);
        for i in 0..3 {
            d.elements.push(
                Element::auto_shape(format!("e{i}"), ShapeName::rectangle(), Geometry::new(i * 10, 0, 5, 5))
                    .with_text(TextFrame::single(TextRun::new("t", "Georgia", 12.0, Color::black()))),
            );
        }
        d
    }

    #[test]
    fn identity_is_empty() {
        assert!(diff(&doc(), &doc()).is_empty());
    }

    #[test]
    fn shifted_x() {
        let mut b = doc();
        b.elements[1].position.x += 7;
        assert_eq!(
            diff(&doc(), &b),
            vec![ElementDiff {
                id: "e1".into(),
                change: Change::Modified(vec!["position.x".into()])
            }]
        );
    }

    #[test]
    fn removed_and_added_are_symmetric() {
        let mut b = doc();
        b.elements.remove(2);
        let ab = diff(&doc(), &b);
        assert_eq!(ab, vec![ElementDiff { id: "e2".into(), change: Change::Removed }]);
        let ba = diff(&b, &doc());
        assert_eq!(ba, vec![ElementDiff { id: "e2".into(), change: Change::Added }]);
    }

    #[test]
    fn run_level_and_status_paths() {
        let mut b = doc();
        b.elements[0].text.as_mut().unwrap().runs[0].font_name = "Arial".into();
        b.elements[0].status = Status::Tentative;
        let d = diff(&doc(), &b);
        assert_eq!(
            d[0].change,
            Change::Modified(vec!["text.runs[0].font_name".into(), "status".into()])
        );
        assert_eq!(d[0].design_fields(), vec!["text.runs[0].font_name"]);

        let mut c = doc();
        c.elements[2].status = Status::Tentative;
        assert!(diff(&doc(), &c)[0].is_status_only());
    }

    #[test]
    fn reorder_and_canvas() {
        let mut b = doc();
        b.elements.swap(0, 1);
        b.canvas_width = 2000;
        let d = diff(&doc(), &b);
        assert_eq!(d[0].id, SLIDE_DIFF_ID);
        assert_eq!(d[1].change, Change::Modified(vec!["z_order".into()]));
        assert_eq!(d[2].change, Change::Modified(vec!["z_order".into()]));
        assert_eq!(d.len(), 3);
    }
}
