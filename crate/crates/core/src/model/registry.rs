//! Closed registry of the auto-shape names a slide may use.
//!
//! The table lives in `resources/shapes.txt` so it can be reviewed and
//! versioned independently of the code. Each entry pairs the name used in the
//! JSON wire format with the OOXML preset geometry it corresponds to.

use std::fmt;
use std::sync::OnceLock;

const SHAPES_TXT: &str = include_str!("../../resources/shapes.txt");

/// Number of entries in the shipped registry.
pub const REGISTRY_SIZE: usize = 34;

struct Entry {
    name: &'static str,
    preset: &'static str,
}

fn entries() -> &'static [Entry] {
    static TABLE: OnceLock<Vec<Entry>> = OnceLock::new();
    TABLE.get_or_init(|| {
        SHAPES_TXT
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|line| {
                let mut parts = line.split_whitespace();
                let name = parts.next().expect("registry line has a name");
                let preset = parts.next().expect("registry line has a preset");
                Entry { name, preset }
            })
            .collect()
    })
}

/// A validated auto-shape name. Cheap to copy; always a registry member.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ShapeName(u8);

impl ShapeName {
    /// Looks up a JSON shape name. Returns `None` for names outside the registry.
    pub fn parse(name: &str) -> Option<Self> {
        entries()
            .iter()
            .position(|e| e.name == name)
            .map(|i| ShapeName(i as u8))
    }

    /// Maps an OOXML preset geometry (`prstGeom/@prst`) to a registry name.
    pub fn from_preset(preset: &str) -> Option<Self> {
        entries()
            .iter()
            .position(|e| e.preset == preset)
            .map(|i| ShapeName(i as u8))
    }

    pub fn as_str(self) -> &'static str {
        entries()[self.0 as usize].name
    }

    /// The OOXML preset geometry the pptx writer emits for this shape.
    pub fn preset(self) -> &'static str {
        entries()[self.0 as usize].preset
    }

    pub fn all() -> impl Iterator<Item = ShapeName> {
        (0..entries().len()).map(|i| ShapeName(i as u8))
    }

    pub fn rectangle() -> Self {
        Self::parse("rectangle").expect("rectangle is registered")
    }

    /// Line-like shapes whose box may legitimately have zero width or height.
    pub fn is_linear(self) -> bool {
        matches!(self.as_str(), "line" | "straight_connector" | "elbow_connector")
    }
}

impl fmt::Debug for ShapeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ShapeName({})", self.as_str())
    }
}

impl fmt::Display for ShapeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
