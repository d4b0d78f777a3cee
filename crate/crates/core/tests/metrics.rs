mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use slideloop::metrics::*;
use slideloop::model::*;
use slideloop::perturb::{Category, LogEntry, PerturbationKind, PerturbationLog};
use slideloop::render::{render_svg, RenderOptions};

use common::oracle::{arb_instance, recount_responsiveness, recount_reviewer};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn reviewer_metrics_match_a_confusion_matrix_recount(inst in arb_instance()) {
        let m = reviewer_metrics(&inst.labeled, &inst.log).unwrap();
        let r = recount_reviewer(&inst.labeled, &inst.log);
        prop_assert_eq!(m.overall.false_positives, r.fp);
        for c in Category::ALL {
            let s = &m.per_category[&c];
            prop_assert_eq!(s.true_positives, r.tp[&c]);
            prop_assert_eq!(s.support, r.support[&c]);
            prop_assert_eq!(s.precision, r.precision[&c], "{:?}", c);
            prop_assert_eq!(s.recall, r.recall[&c], "{:?}", c);
            for v in [s.precision, s.recall, s.precision_all_fp].into_iter().flatten() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn responsiveness_matches_a_diff_recount(inst in arb_instance()) {
        let m = responsiveness(&inst.labeled, &inst.revised, Some(&inst.log));
        let r = recount_responsiveness(&inst.labeled, &inst.revised, &inst.log);
        prop_assert_eq!(m.overall, r.overall);
        prop_assert_eq!(m.per_category, r.per_category);
    }

    #[test]
    fn merged_counts_equal_counts_of_the_union(a in arb_instance(), b in arb_instance()) {
        let mut merged = reviewer_counts(&a.labeled, &a.log).unwrap();
        merged.merge(&reviewer_counts(&b.labeled, &b.log).unwrap());
        let ra = recount_reviewer(&a.labeled, &a.log);
        let rb = recount_reviewer(&b.labeled, &b.log);
        prop_assert_eq!(merged.false_positives, ra.fp + rb.fp);
        for c in Category::ALL {
            prop_assert_eq!(merged.true_positives[&c], ra.tp[&c] + rb.tp[&c]);
            prop_assert_eq!(merged.support[&c], ra.support[&c] + rb.support[&c]);
        }
    }
}

fn card(id: &str, x: i64) -> Element {
    Element::auto_shape(id, ShapeName::rectangle(), Geometry::new(x, 500_000, 1_000_000, 800_000))
        .with_fill(Fill::solid(Color::from_rgb(20, 90, 160)))
}

fn four_cards() -> SlideDoc {
    let mut d = SlideDoc::new("cards", DEFAULT_CANVAS.0, DEFAULT_CANVAS.1);
    for (i, x) in [500_000, 2_000_000, 3_500_000, 5_000_000].into_iter().enumerate() {
        d.elements.push(card(&format!("c{i}"), x));
    }
    d
}

fn entry(doc: &SlideDoc, id: &str, kind: PerturbationKind) -> LogEntry {
    let e = doc.element(id).unwrap().clone();
    LogEntry {
        element_id: id.into(),
        kind,
        index: doc.index_of(id).unwrap(),
        original: Some(e.clone()),
        applied: Some(e),
    }
}

fn log_of(entries: Vec<LogEntry>) -> PerturbationLog {
    PerturbationLog {
        entries,
        ..PerturbationLog::default()
    }
}

fn ids(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

#[test]
fn one_of_two_color_flaws_and_one_clean_flag() {
    let d = four_cards();
    let log = log_of(vec![entry(&d, "c0", PerturbationKind::ColorAlteration), entry(&d, "c1", PerturbationKind::FillReset)]);
    let labeled = d.with_flags(&ids(&["c0", "c3"]));
    let m = reviewer_metrics(&labeled, &log).unwrap();
    let color = &m.per_category[&Category::ColorAttributes];
    assert_eq!(color.precision, Some(0.5));
    assert_eq!(color.recall, Some(0.5));
    assert_eq!(color.precision_all_fp, Some(0.5));
    assert_eq!(m.per_category[&Category::ShapePlacement].precision, None);
    assert_eq!(m.overall.precision, Some(0.5));
}

#[test]
fn a_reviewer_that_flags_nothing_has_zero_recall_and_no_precision() {
    let d = four_cards();
    let log = log_of(vec![entry(&d, "c2", PerturbationKind::PositionShift)]);
    let m = reviewer_metrics(&d, &log).unwrap();
    let s = &m.per_category[&Category::ShapePlacement];
    assert_eq!(s.recall, Some(0.0));
    assert_eq!(s.precision, None);
}

#[test]
fn false_positives_are_shared_in_proportion_to_support() {
    let d = four_cards();
    let log = log_of(vec![
        entry(&d, "c0", PerturbationKind::PositionShift),
        entry(&d, "c1", PerturbationKind::PositionShift),
        entry(&d, "c2", PerturbationKind::TextAttributeReset),
    ]);
    let labeled = d.with_flags(&ids(&["c0", "c2", "c3"]));
    let m = reviewer_metrics(&labeled, &log).unwrap();
    // one FP split 2:1 between placement and text
    assert_eq!(m.per_category[&Category::ShapePlacement].precision, Some(1.0 / (1.0 + 2.0 / 3.0)));
    assert_eq!(m.per_category[&Category::TextAttributes].precision, Some(1.0 / (1.0 + 1.0 / 3.0)));
    assert_eq!(m.per_category[&Category::ShapePlacement].precision_all_fp, Some(0.5));
}

#[test]
fn removal_recall_is_counted_over_duplicates() {
    let mut d = four_cards();
    let removed = card("gone", 7_000_000);
    let mut dup = card("c4", 520_000);
    dup.position.y += 20_000;
    d.elements.push(dup);
    let log = log_of(vec![
        LogEntry {
            element_id: "gone".into(),
            kind: PerturbationKind::ShapeRemoval,
            index: 4,
            original: Some(removed),
            applied: None,
        },
        LogEntry {
            element_id: "c4".into(),
            kind: PerturbationKind::ShapeDuplication,
            index: 4,
            original: None,
            applied: Some(d.elements[4].clone()),
        },
    ]);
    let m = reviewer_metrics(&d.with_flags(&ids(&["c4"])), &log).unwrap();
    let s = &m.per_category[&Category::ShapeRemoval];
    assert_eq!((s.support, s.recall, s.precision), (1, Some(1.0), Some(1.0)));
}

#[test]
fn a_log_for_another_doc_is_a_consistency_error() {
    let d = four_cards();
    let log = log_of(vec![LogEntry {
        element_id: "nope".into(),
        ..entry(&d, "c0", PerturbationKind::PositionShift)
    }]);
    assert!(matches!(reviewer_metrics(&d, &log), Err(MetricsError::Consistency(_))));

    let log = log_of(vec![LogEntry {
        kind: PerturbationKind::ShapeRemoval,
        applied: None,
        ..entry(&d, "c0", PerturbationKind::PositionShift)
    }]);
    assert!(matches!(reviewer_metrics(&d, &log), Err(MetricsError::Consistency(_))));
}

#[test]
fn responsiveness_examples() {
    let d = four_cards();
    let flagged = d.with_status(Status::Tentative);
    let unchanged = responsiveness(&flagged, &flagged, None);
    assert_eq!((unchanged.flagged, unchanged.overall), (4, Some(0.0)));

    let labeled = d.with_flags(&ids(&["c0", "c1", "c2"]));
    let mut revised = labeled.with_status(Status::Final);
    revised.elements[0].position.x += 10;
    revised.elements.remove(1);
    let r = responsiveness(&labeled, &revised, None);
    assert_eq!(r.overall, Some(2.0 / 3.0));
    assert_eq!(r.uncategorized, Some(2.0 / 3.0));
    assert!(r.per_category.values().all(Option::is_none));
}

// ------------------------------------------------------------ judgement

fn slide(x: i64) -> SlideDoc {
    let mut d = SlideDoc::new("j", DEFAULT_CANVAS.0, DEFAULT_CANVAS.1);
    d.elements.push(card("c0", x));
    d
}

fn read_tree(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn bundles_are_deterministic_per_seed() {
    let (draft, ours, base) = (slide(100_000), slide(500_000), slide(900_000));
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let x = export_judgement(&draft, &ours, &base, 3, a.path()).unwrap();
    let y = export_judgement(&draft, &ours, &base, 3, b.path()).unwrap();
    assert_eq!(x.mapping, y.mapping);
    let files = read_tree(&x.dir);
    assert_eq!(files, read_tree(&y.dir));
    for name in ["draft.svg", "A.svg", "B.svg", "draft.png", "A.png", "B.png", "prompt.txt", "mapping.json"] {
        assert!(files.contains_key(name), "{name}");
    }
    let ours_svg = render_svg(&ours, &RenderOptions::default());
    let ours_file = if x.mapping.a == Side::Ours { "A.svg" } else { "B.svg" };
    assert_eq!(files[ours_file], ours_svg.into_bytes());
}

#[test]
fn seeds_zero_to_nine_produce_both_orderings() {
    let dir = tempfile::tempdir().unwrap();
    let (draft, ours, base) = (slide(100_000), slide(500_000), slide(900_000));
    for seed in 0..10 {
        export_judgement(&draft, &ours, &base, seed, dir.path()).unwrap();
    }
    let mappings = load_mappings(dir.path()).unwrap();
    assert_eq!(mappings.len(), 10);
    let ours_first = mappings.values().filter(|m| m.a == Side::Ours).count();
    assert!(ours_first > 0 && ours_first < 10, "{ours_first}");
    assert!(mappings.values().all(|m| m.a != m.b));
}

#[test]
fn identical_candidates_still_make_a_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let d = slide(100_000);
    let b = export_judgement(&d, &d, &d, 0, dir.path()).unwrap();
    let files = read_tree(&b.dir);
    assert_eq!(files["A.svg"], files["B.svg"]);
}

fn verdict_lines(pairs: &[(&str, Verdict)]) -> Vec<VerdictLine> {
    pairs
        .iter()
        .map(|(id, v)| VerdictLine {
            bundle_id: id.to_string(),
            verdict: *v,
        })
        .collect()
}

fn mapping(id: &str, ours_is_a: bool) -> (String, Mapping) {
    let (a, b) = if ours_is_a { (Side::Ours, Side::Baseline) } else { (Side::Baseline, Side::Ours) };
    (
        id.to_string(),
        Mapping {
            bundle_id: id.into(),
            seed: 0,
            prompt_version: 1,
            a,
            b,
        },
    )
}

#[test]
fn win_rate_unblinds_and_is_invariant_under_relabeling() {
    let maps: BTreeMap<_, _> = [mapping("p", true), mapping("q", false), mapping("r", true), mapping("s", false)].into_iter().collect();
    let verdicts = verdict_lines(&[("p", Verdict::A), ("q", Verdict::B), ("r", Verdict::B), ("s", Verdict::Tie)]);
    let w = win_rate(&verdicts, &maps).unwrap();
    assert_eq!((w.ours, w.baseline, w.tie, w.judged), (0.5, 0.25, 0.25, 4));

    let flipped: BTreeMap<_, _> = maps.iter().map(|(k, m)| mapping(k, m.a != Side::Ours)).collect();
    let swap = |v: Verdict| match v {
        Verdict::A => Verdict::B,
        Verdict::B => Verdict::A,
        Verdict::Tie => Verdict::Tie,
    };
    let relabeled: Vec<_> = verdicts
        .iter()
        .map(|v| VerdictLine {
            bundle_id: v.bundle_id.clone(),
            verdict: swap(v.verdict),
        })
        .collect();
    assert_eq!(win_rate(&relabeled, &flipped).unwrap(), w);

    let all_ours = verdict_lines(&[("p", Verdict::A), ("q", Verdict::B)]);
    assert_eq!(win_rate(&all_ours, &maps).unwrap().ours, 1.0);

    let unknown = verdict_lines(&[("zz", Verdict::A)]);
    assert!(matches!(win_rate(&unknown, &maps), Err(JudgeError::UnknownBundle(id)) if id == "zz"));
}

#[test]
fn verdict_files_are_line_delimited_json() {
    let text = "{\"bundle_id\":\"p\",\"verdict\":\"A\"}\n\n{\"bundle_id\":\"q\",\"verdict\":\"tie\"}\n";
    let v = read_verdicts(text.as_bytes()).unwrap();
    assert_eq!(v, verdict_lines(&[("p", Verdict::A), ("q", Verdict::Tie)]));
    let bad = read_verdicts("{\"bundle_id\":\"p\",\"verdict\":\"C\"}\n".as_bytes());
    assert!(matches!(bad, Err(JudgeError::Format { line: 1, .. })));
}
