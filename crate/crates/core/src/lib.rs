//! Slide-design refinement pipeline.
//!
//! Slides are ingested from `.pptx` into a compact JSON model, rough drafts
//! are simulated by seeded perturbations, and drafts are refined by
//! alternating a reviewer (flags flawed elements as TENTATIVE) and a
//! contributor (rewrites flagged elements) until the reviewer is satisfied.

pub mod model;
pub mod orchestrator;
pub mod perturb;
pub mod pptx;
pub mod roles;
pub mod render;
pub mod metrics;
pub mod config;
pub mod service;
pub mod cli;
