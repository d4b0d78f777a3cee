//! Ground-truth backends driven by a perturbation log.

use crate::model::{SlideDoc, Status};
use crate::perturb::{reverse_replay, PerturbError, PerturbationKind, PerturbationLog};

use super::{Contributor, RoleError, Reviewer};

/// Flags every logged element that is still flawed: a modified element
/// that differs from its original, or a duplicate that is still present.
#[derive(Debug, Clone)]
pub struct OracleReviewer {
    log: PerturbationLog,
}

impl OracleReviewer {
    pub fn new(log: PerturbationLog) -> Self {
        OracleReviewer { log }
    }
}

impl Reviewer for OracleReviewer {
    fn label(&self, doc: &SlideDoc) -> Result<SlideDoc, RoleError> {
        let mut flagged = Vec::new();
        for entry in &self.log.entries {
            let Some(current) = doc.element(&entry.element_id) else {
                continue;
            };
            let still_flawed = match entry.kind {
                PerturbationKind::ShapeRemoval => false,
                PerturbationKind::ShapeDuplication => true,
                _ => entry.original.as_ref().is_some_and(|o| !o.same_design(current)),
            };
            if still_flawed {
                flagged.push(entry.element_id.clone());
            }
        }
        Ok(doc.with_flags(&flagged))
    }
}

/// Restores flagged elements to the finished slide, drops flagged elements
/// the finished slide never had and re-inserts removed ones.
#[derive(Debug, Clone)]
pub struct OracleContributor {
    original: SlideDoc,
}

impl OracleContributor {
    pub fn new(original: SlideDoc) -> Self {
        OracleContributor {
            original: original.with_status(Status::Final),
        }
    }

    pub fn from_log(perturbed: &SlideDoc, log: &PerturbationLog) -> Result<Self, PerturbError> {
        Ok(Self::new(reverse_replay(&perturbed.with_status(Status::Final), log)?))
    }

    pub fn original(&self) -> &SlideDoc {
        &self.original
    }
}

impl Contributor for OracleContributor {
    fn revise(&self, doc: &SlideDoc, _variant: u64) -> Result<SlideDoc, RoleError> {
        let mut out = doc.clone();
        out.elements.retain_mut(|e| {
            if e.status != Status::Tentative {
                return true;
            }
            match self.original.element(&e.id) {
                Some(o) => {
                    *e = o.clone();
                    true
                }
                None => false,
            }
        });
        for (i, o) in self.original.elements.iter().enumerate() {
            if out.element(&o.id).is_some() {
                continue;
            }
            let at = self.original.elements[..i]
                .iter()
                .rev()
                .find_map(|p| out.index_of(&p.id))
                .map_or(0, |j| j + 1);
            out.elements.insert(at, o.clone());
        }
        Ok(out.with_status(Status::Final))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;
    use crate::perturb::{perturb, PerturbConfig};
    use crate::roles::{contribute, review};

    fn sample() -> SlideDoc {
        let mut doc = SlideDoc::new("s", DEFAULT_CANVAS.0, DEFAULT_CANVAS.1);
        for i in 0..6 {
            let mut e = Element::auto_shape(
                format!("e{i}"),
                ShapeName::rectangle(),
                Geometry::new(i * 1_000_000, 500_000, 900_000, 900_000),
            )
            .with_fill(Fill::solid(Color::from_rgb(30 * i as u8, 80, 120)));
            if i % 2 == 0 {
                e = e.with_text(TextFrame::single(TextRun::new(format!("t{i}"), "Lato", 20.0, Color::white())));
            }
            doc.elements.push(e);
        }
        doc
    }

    #[test]
    fn oracle_pair_restores_original() {
        let doc = sample();
        for seed in 0..50 {
            let (p, log) = perturb(&doc, &PerturbConfig::new(seed, 0.7)).unwrap();
            let labeled = review(&OracleReviewer::new(log.clone()), &p).unwrap();
            assert_eq!(labeled.tentative_ids(), log.flawed_ids());
            let fixed = contribute(&OracleContributor::from_log(&p, &log).unwrap(), &labeled).unwrap();
            assert_eq!(fixed, doc, "seed {seed}");
            let again = review(&OracleReviewer::new(log), &fixed).unwrap();
            assert!(!again.has_tentative());
        }
    }

    #[test]
    fn all_tentative_pass_restores_everything() {
        let doc = sample();
        let (p, log) = perturb(&doc, &PerturbConfig::new(3, 1.0)).unwrap();
        let contributor = OracleContributor::from_log(&p, &log).unwrap();
        let out = contribute(&contributor, &p.with_status(Status::Tentative)).unwrap();
        assert_eq!(out, doc);
    }
}
