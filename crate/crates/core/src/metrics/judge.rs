//! Blind pairwise-judgement bundles and win-rate aggregation.
//!
//! A bundle directory holds `draft`, `A` and `B` renders (SVG and PNG), the
//! judge prompt, and `mapping.json` recording which side is ours. Judging
//! itself happens elsewhere; verdicts come back as JSON lines.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::{doc_to_value, SlideDoc};
use crate::render::{render_png, render_svg, RenderError, RenderOptions};
use crate::roles::prompt::judge_prompt;

#[derive(Debug, thiserror::Error)]
pub enum JudgeError {
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("bundle io failed: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("unknown bundle {0:?}")]
    UnknownBundle(String),
    #[error("no verdicts")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Ours,
    Baseline,
}

/// Blinding record written as `mapping.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mapping {
    pub bundle_id: String,
    pub seed: u64,
    pub prompt_version: u32,
    #[serde(rename = "A")]
    pub a: Side,
    #[serde(rename = "B")]
    pub b: Side,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JudgementBundle {
    pub dir: PathBuf,
    pub mapping: Mapping,
    pub prompt: String,
}

fn bundle_id(draft: &SlideDoc, ours: &SlideDoc, baseline: &SlideDoc, seed: u64) -> String {
    let mut h = Sha256::new();
    for d in [draft, ours, baseline] {
        h.update(doc_to_value(d).to_string().as_bytes());
        h.update([0u8]);
    }
    h.update(seed.to_le_bytes());
    hex::encode(&h.finalize()[..8])
}

/// Writes a bundle under `out_dir/<bundle_id>/`. The A/B assignment is a
/// coin flip seeded by `seed`.
pub fn export_judgement(
    draft: &SlideDoc,
    ours: &SlideDoc,
    baseline: &SlideDoc,
    seed: u64,
    out_dir: &Path,
) -> Result<JudgementBundle, JudgeError> {
    let ours_is_a = ChaCha8Rng::seed_from_u64(seed).gen_bool(0.5);
    let (a, b) = if ours_is_a { (ours, baseline) } else { (baseline, ours) };
    let (version, prompt) = judge_prompt();
    let mapping = Mapping {
        bundle_id: bundle_id(draft, ours, baseline, seed),
        seed,
        prompt_version: version,
        a: if ours_is_a { Side::Ours } else { Side::Baseline },
        b: if ours_is_a { Side::Baseline } else { Side::Ours },
    };
    let dir = out_dir.join(&mapping.bundle_id);
    fs::create_dir_all(&dir)?;
    let opts = RenderOptions::default();
    for (name, doc) in [("draft", draft), ("A", a), ("B", b)] {
        fs::write(dir.join(format!("{name}.svg")), render_svg(doc, &opts))?;
        fs::write(dir.join(format!("{name}.png")), render_png(doc, &opts)?)?;
    }
    fs::write(dir.join("prompt.txt"), prompt)?;
    fs::write(
        dir.join("mapping.json"),
        serde_json::to_string_pretty(&mapping).expect("mapping serializes"),
    )?;
    Ok(JudgementBundle {
        dir,
        mapping,
        prompt: prompt.to_string(),
    })
}

/// Reads every `*/mapping.json` under `root`.
pub fn load_mappings(root: &Path) -> Result<BTreeMap<String, Mapping>, JudgeError> {
    let mut out = BTreeMap::new();
    let mut dirs: Vec<_> = fs::read_dir(root)?.collect::<Result<_, _>>()?;
    dirs.sort_by_key(|d| d.path());
    for entry in dirs {
        let path = entry.path().join("mapping.json");
        if !path.is_file() {
            continue;
        }
        let text = fs::read_to_string(&path)?;
        let m: Mapping = serde_json::from_str(&text).map_err(|e| JudgeError::Format {
            line: e.line(),
            message: format!("{}: {e}", path.display()),
        })?;
        out.insert(m.bundle_id.clone(), m);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    A,
    B,
    #[serde(rename = "tie")]
    Tie,
}

impl Verdict {
    /// Finds the last `Verdict: A|B|tie` line in a judge's free-text answer.
    pub fn from_judge_text(text: &str) -> Option<Verdict> {
        text.lines().rev().find_map(|line| {
            let rest = line.trim().strip_prefix("Verdict:")?.trim().trim_end_matches('.');
            match rest.to_ascii_lowercase().as_str() {
                "a" => Some(Verdict::A),
                "b" => Some(Verdict::B),
                "tie" => Some(Verdict::Tie),
                _ => None,
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictLine {
    pub bundle_id: String,
    pub verdict: Verdict,
}

pub fn read_verdicts<R: BufRead>(reader: R) -> Result<Vec<VerdictLine>, JudgeError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| JudgeError::Format {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRate {
    pub ours: f64,
    pub baseline: f64,
    pub tie: f64,
    pub judged: usize,
}

/// Unblinds each verdict through its bundle's mapping and returns the
/// preference fractions.
pub fn win_rate(verdicts: &[VerdictLine], mappings: &BTreeMap<String, Mapping>) -> Result<WinRate, JudgeError> {
    if verdicts.is_empty() {
        return Err(JudgeError::Empty);
    }
    let (mut ours, mut baseline, mut tie) = (0usize, 0usize, 0usize);
    for v in verdicts {
        let m = mappings
            .get(&v.bundle_id)
            .ok_or_else(|| JudgeError::UnknownBundle(v.bundle_id.clone()))?;
        let side = match v.verdict {
            Verdict::A => Some(m.a),
            Verdict::B => Some(m.b),
            Verdict::Tie => None,
        };
        match side {
            Some(Side::Ours) => ours += 1,
            Some(Side::Baseline) => baseline += 1,
            None => tie += 1,
        }
    }
    let n = verdicts.len() as f64;
    Ok(WinRate {
        ours: ours as f64 / n,
        baseline: baseline as f64 / n,
        tie: tie as f64 / n,
        judged: verdicts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mapping(id: &str, ours_is_a: bool) -> Mapping {
        Mapping {
            bundle_id: id.into(),
            seed: 0,
            prompt_version: 1,
            a: if ours_is_a { Side::Ours } else { Side::Baseline },
            b: if ours_is_a { Side::Baseline } else { Side::Ours },
        }
    }

    fn v(id: &str, verdict: Verdict) -> VerdictLine {
        VerdictLine {
            bundle_id: id.into(),
            verdict,
        }
    }

    #[test]
    fn two_one_one_split() {
        let maps: BTreeMap<_, _> = [("x", true), ("y", false), ("z", true), ("w", false)]
            .into_iter()
            .map(|(id, a)| (id.to_string(), mapping(id, a)))
            .collect();
        let verdicts = vec![v("x", Verdict::A), v("y", Verdict::B), v("z", Verdict::B), v("w", Verdict::Tie)];
        let r = win_rate(&verdicts, &maps).unwrap();
        assert_eq!((r.ours, r.baseline, r.tie), (0.5, 0.25, 0.25));
    }

    #[test]
    fn unknown_bundle_is_an_error() {
        let r = win_rate(&[v("nope", Verdict::A)], &BTreeMap::new());
        assert!(matches!(r, Err(JudgeError::UnknownBundle(id)) if id == "nope"));
    }

    #[test]
    fn judge_text_verdict() {
        assert_eq!(Verdict::from_judge_text("A is tidy.\nVerdict: B"), Some(Verdict::B));
        assert_eq!(Verdict::from_judge_text("Verdict: Tie."), Some(Verdict::Tie));
        assert_eq!(Verdict::from_judge_text("no decision"), None);
    }

    #[test]
    fn verdict_lines_parse() {
        let text = "{\"bundle_id\":\"a\",\"verdict\":\"A\"}\n\n{\"bundle_id\":\"b\",\"verdict\":\"tie\"}\n";
        let vs = read_verdicts(text.as_bytes()).unwrap();
        assert_eq!(vs, vec![v("a", Verdict::A), v("b", Verdict::Tie)]);
        assert!(read_verdicts("{\"bundle_id\":1}".as_bytes()).is_err());
    }
}
