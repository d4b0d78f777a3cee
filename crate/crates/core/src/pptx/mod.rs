//! `.pptx` ingest and export.
//!
//! The reader resolves theme colors, placeholder geometry inherited from
//! layouts and masters, and group transforms, so every element comes out
//! with literal RGB values and absolute EMU coordinates. Tables, charts and
//! other out-of-scope content are skipped and reported, never fatal.
//!
//! The writer emits a small, self-contained OOXML package (one master, one
//! blank layout, one theme) rather than patching a source archive.

mod reader;
mod theme;
mod writer;

use serde::Serialize;

pub use reader::load_pptx;
pub use writer::export_pptx;

pub(crate) use theme::{hsl_to_rgb, rgb_to_hsl};

/// Why a piece of slide content did not become an element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    UnsupportedShape,
    Table,
    Chart,
    /// A picture or video kept as a placeholder; its bytes were not carried.
    MediaPayloadDropped,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skip {
    pub slide_index: usize,
    pub reason: SkipReason,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestReport {
    pub parsed_elements: usize,
    pub skipped: Vec<Skip>,
}

impl IngestReport {
    pub fn count(&self, reason: SkipReason) -> usize {
        self.skipped.iter().filter(|s| s.reason == reason).count()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("not a zip archive: {0}")]
    NotAnArchive(String),
    #[error("missing presentation part")]
    MissingPresentationPart,
    #[error("malformed presentation part: {0}")]
    MalformedPresentation(String),
}

impl IngestError {
    pub fn kind(&self) -> &'static str {
        match self {
            IngestError::NotAnArchive(_) => "not_an_archive",
            IngestError::MissingPresentationPart => "missing_presentation_part",
            IngestError::MalformedPresentation(_) => "malformed_presentation",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("slide {index} is invalid: {}", first_violation(.violations))]
    Invalid {
        index: usize,
        violations: Vec<crate::model::Violation>,
    },
    #[error("slide {index} canvas {found:?} differs from the deck canvas {expected:?}")]
    MixedCanvas {
        index: usize,
        expected: (i64, i64),
        found: (i64, i64),
    },
    #[error("zip write failed: {0}")]
    Zip(String),
}

fn first_violation(v: &[crate::model::Violation]) -> String {
    v.first().map(|v| v.to_string()).unwrap_or_default()
}
