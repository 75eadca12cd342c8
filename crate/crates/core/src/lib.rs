//! Goal-oriented knowledge curation for multi-modal clinical outcome prediction.
//!
//! The crate turns landmark-windowed patient records (labs, panel mutations,
//! medications) into three competing feature representations and benchmarks
//! them under repeated stratified cross-validation:
//!
//! * **ENF**: expert-engineered numeric features ([`features::build_enf`]).
//! * **CTE**: embeddings of long-form, knowledge-enriched modality profiles
//!   ([`profiles`], [`embedding`]).
//! * **GKC**: embeddings of schema-validated curator reports produced from the
//!   same profiles ([`curation`]).
//!
//! Classifiers, ranking metrics, and the evaluation protocol live in
//! [`learn`] and [`eval`]. [`pipeline`] wires the stages together in memory.

pub mod cache;
pub mod cohort;
pub mod curation;
pub mod digest;
pub mod embedding;
pub mod eval;
pub mod features;
pub mod http;
pub mod knowledge;
pub mod learn;
pub mod modality;
pub mod pipeline;
pub mod profiles;
pub mod retry;
pub mod seeds;

pub use modality::{layout_spans, GroupSpan, Modality, ModalitySubset};
