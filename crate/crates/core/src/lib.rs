//! Feature extraction, small neural models and ensembles for classifying
//! speakers from transcribed picture-description speech.
//!
//! The pipeline runs in four stages:
//!
//! ```text
//! ASR JSON + CoNLL-U ─► ingest ─► disfluency ∥ contours ─► nn / ensemble ─► harness
//! ```
//!
//! * [`ingest`] parses and validates every external input format.
//! * [`disfluency`] computes per-utterance pause, rate, filled-pause and
//!   confidence measures from word timings.
//! * [`contours`] computes sliding-window complexity measures over
//!   dependency-annotated sentences.
//! * [`nn`] holds the sequence CNN, the fusion head and logistic regression,
//!   all with hand-written gradients.
//! * [`ensemble`] implements bagged majority voting, feature fusion with
//!   frozen external embeddings, and two-stage stacking.
//! * [`harness`] runs stratified cross-validation, renders reports and
//!   generates synthetic datasets.

pub mod contours;
pub mod disfluency;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod ingest;
pub mod nn;
pub mod rng;

pub use error::{Error, Result};
pub use ingest::{Label, SessionRecord, Utterance, WordToken};
