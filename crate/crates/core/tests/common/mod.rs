#![allow(dead_code)]
//! Shared proptest strategies and fixture loaders.

pub mod oracle;

use proptest::prelude::*;
use proptest::strategy::ValueTree;
use slideloop::model::*;
use slideloop::perturb::{perturb, PerturbConfig, PerturbationKind, PerturbationLog};

pub const FONTS: [&str; 6] = ["Georgia", "Lato", "Arial", "Roboto", "Calibri", "Helvetica Neue"];

#[derive(Debug, Clone, Copy)]
pub struct GenOptions {
    /// Restrict values to what survives a trip through a .pptx archive.
    pub pptx_safe: bool,
    pub max_elements: usize,
    pub allow_tentative: bool,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            pptx_safe: false,
            max_elements: 8,
            allow_tentative: true,
        }
    }
}

fn arb_rgb() -> impl Strategy<Value = String> {
    any::<[u8; 3]>().prop_map(|[r, g, b]| format!("{r:02X}{g:02X}{b:02X}"))
}

fn arb_fraction() -> impl Strategy<Value = f64> {
    prop_oneof![3 => Just(1.0), 1 => (0u32..=100).prop_map(|k| k as f64 / 100.0)]
}

pub fn arb_color() -> impl Strategy<Value = Color> {
    (arb_rgb(), arb_fraction()).prop_map(|(rgb, alpha)| Color { rgb, alpha })
}

fn opaque_color() -> impl Strategy<Value = Color> {
    arb_rgb().prop_map(|rgb| Color { rgb, alpha: 1.0 })
}

pub fn arb_fill(opts: GenOptions) -> impl Strategy<Value = Fill> {
    let transparency = prop_oneof![3 => Just(0.0), 1 => (0u32..=100).prop_map(|k| k as f64 / 100.0)];
    let pptx_safe = opts.pptx_safe;
    let solid_color = if pptx_safe { opaque_color().boxed() } else { arb_color().boxed() };
    prop_oneof![
        Just(Fill::none()),
        (solid_color, transparency.clone()).prop_map(|(c, t)| Fill { transparency: t, ..Fill::solid(c) }),
        (prop::collection::vec(arb_color(), 2..5), transparency.clone()).prop_map(move |(c, t)| Fill {
            transparency: if pptx_safe { 0.0 } else { t },
            ..Fill::gradient(c)
        }),
        (prop::collection::vec(arb_color(), 1..3), transparency).prop_map(move |(colors, t)| Fill {
            mode: FillMode::Pattern,
            colors,
            transparency: if pptx_safe { 0.0 } else { t },
        }),
    ]
}

pub fn arb_text() -> impl Strategy<Value = TextFrame> {
    let run = (
        "[A-Za-z0-9 ,.!?'\"&<>é€]{1,24}",
        prop::sample::select(FONTS.to_vec()),
        (12u32..=144).prop_map(|h| h as f64 / 2.0),
        arb_color(),
    )
        .prop_map(|(text, font, size, color)| TextRun::new(text, font, size, color));
    (
        prop::collection::vec(run, 1..4),
        prop::sample::select(vec![1.0, 1.15, 1.5, 2.0]),
        prop::sample::select(vec![Alignment::Left, Alignment::Center, Alignment::Right, Alignment::Justify]),
    )
        .prop_map(|(runs, line_spacing, alignment)| TextFrame { runs, line_spacing, alignment })
}

pub fn arb_geometry() -> impl Strategy<Value = Geometry> {
    (
        -500_000i64..12_000_000,
        -500_000i64..6_800_000,
        0i64..6_000_000,
        0i64..4_000_000,
        prop_oneof![3 => Just(0.0), 1 => (0u32..720).prop_map(|h| h as f64 / 2.0)],
    )
        .prop_map(|(x, y, width, height, rotation)| Geometry { x, y, width, height, rotation })
}

pub fn arb_element(opts: GenOptions) -> impl Strategy<Value = Element> {
    let kind = prop_oneof![
        5 => (0..REGISTRY_SIZE).prop_map(|i| ShapeKind::AutoShape(ShapeName::all().nth(i).unwrap())),
        1 => prop::sample::select(vec![MediaKind::Image, MediaKind::Video]).prop_map(ShapeKind::Placeholder),
    ];
    let status = if opts.allow_tentative {
        prop_oneof![3 => Just(Status::Final), 1 => Just(Status::Tentative)].boxed()
    } else {
        Just(Status::Final).boxed()
    };
    (kind, arb_geometry(), arb_fill(opts), prop::option::of(arb_text()), status).prop_map(
        |(kind, position, fill, text, status)| {
            let placeholder = matches!(kind, ShapeKind::Placeholder(_));
            Element {
                id: String::new(),
                kind,
                position,
                fill: if placeholder { Fill::none() } else { fill },
                text: if placeholder { None } else { text },
                status,
            }
        },
    )
}

pub fn arb_doc_with(opts: GenOptions) -> impl Strategy<Value = SlideDoc> {
    prop::collection::vec(arb_element(opts), 0..=opts.max_elements).prop_map(|mut elements| {
        for (i, e) in elements.iter_mut().enumerate() {
            e.id = format!("e{i}");
        }
        SlideDoc {
            source_id: "gen".into(),
            canvas_width: DEFAULT_CANVAS.0,
            canvas_height: DEFAULT_CANVAS.1,
            elements,
        }
    })
}

pub fn arb_doc() -> impl Strategy<Value = SlideDoc> {
    arb_doc_with(GenOptions::default())
}

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture_bytes(name: &str) -> Vec<u8> {
    std::fs::read(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// The ten-slide designed corpus, ingested.
pub fn corpus() -> Vec<SlideDoc> {
    slideloop::pptx::load_pptx(&fixture_bytes("pptx/corpus.pptx")).unwrap().0.slides
}

pub fn final_docs() -> impl Strategy<Value = SlideDoc> {
    arb_doc_with(GenOptions {
        allow_tentative: false,
        ..GenOptions::default()
    })
}

pub fn arb_config() -> impl Strategy<Value = PerturbConfig> {
    (
        any::<u64>(),
        (1u32..=10).prop_map(|k| k as f64 / 10.0),
        prop::sample::subsequence(PerturbationKind::ALL.to_vec(), 1..=6),
    )
        .prop_map(|(seed, severity, kinds)| PerturbConfig::new(seed, severity).with_kinds(kinds))
}

/// A perturbed draft, its log and a random subset of its elements flagged.
pub fn arb_flagged_draft() -> impl Strategy<Value = (SlideDoc, SlideDoc, PerturbationLog)> {
    (final_docs(), arb_config(), prop::collection::vec(any::<bool>(), 16)).prop_map(|(doc, cfg, mask)| {
        let (draft, log) = perturb(&doc, &cfg).unwrap();
        let flags: Vec<String> = draft
            .elements
            .iter()
            .zip(mask.iter().cycle())
            .filter(|(_, m)| **m)
            .map(|(e, _)| e.id.clone())
            .collect();
        let labeled = draft.with_flags(&flags);
        (doc, labeled, log)
    })
}

/// Draws `n` values from `strategy` with a fixed-seed runner.
pub fn sample<S: Strategy>(strategy: S, n: usize) -> Vec<S::Value> {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    (0..n).map(|_| strategy.new_tree(&mut runner).expect("strategy generates").current()).collect()
}
