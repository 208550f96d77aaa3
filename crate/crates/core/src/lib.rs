//! Risk-modulated training for learning fine-grained structure from coarse
//! labels.
//!
//! The crate bundles the pieces of a small, reproducible experiment:
//!
//! - [`losses`]: CE, partially Huberised CE, generalized CE and the
//!   uniformity loss, with closed-form logit gradients.
//! - [`objective`]: uncertainty strategies (U-Ignore, U-Zeros, U-Ones, U-RM,
//!   P-RM, PU-RM, U-Uniform) that map coarse labels to targets and losses.
//! - [`labeler`]: keyword rules that split positive reports into atypical and
//!   typical cases.
//! - [`metrics`]: AUC, the atypical-vs-typical AUC-FG, and run aggregation.
//! - [`model`]: a from-scratch MLP with Adam, checkpoints and best-checkpoint
//!   selection.
//! - [`data`]: synthetic cluster datasets, label noise and JSON-lines I/O.
//! - [`harness`]: config-driven experiments and the CSV tables they emit.

pub mod data;
pub mod error;
pub mod harness;
pub mod labeler;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod objective;

pub use error::{Error, Result};

// The guide's snippets run as doctests so the book cannot drift from the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/losses.md")]
    mod losses {}
    #[doc = include_str!("../../../book/src/strategies.md")]
    mod strategies {}
    #[doc = include_str!("../../../book/src/labeling.md")]
    mod labeling {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/findings.md")]
    mod findings {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
