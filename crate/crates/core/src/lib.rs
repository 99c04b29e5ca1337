//! Cough-audio screening pipeline.
//!
//! End-to-end, deterministic pipeline for 3-class cough screening:
//! manifest ingest and certainty filtering, WAV decoding and chunking,
//! augmentation-based class balancing with leakage-safe splits, mel/MFCC
//! feature extraction, a three-branch fusion classifier trained from
//! scratch, and a full ROC/AUC evaluation suite with demographic slices.
//!
//! The library is the primary interface; see the `examples/` directory for
//! one runnable example per capability, and the `coughscreen` binary for the
//! pipeline subcommands (`synth`, `ingest`, `split`, `featurize`, `train`,
//! `eval`, `slice`, `report`, `predict`, `selftest`).

pub mod audio;
pub mod augment;
pub mod config;
pub mod digest;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod model;
pub mod nn;
pub mod oracle;
pub mod pipeline;
pub mod rng;
pub mod selftest;
pub mod split;
pub mod train;

pub use error::{Error, Result};
