//! Stage-wise command line over `gkc-core`.
//!
//! Every command locks the output directory, resolves and saves the run
//! configuration, checks that earlier stages left their files, and writes
//! its own files atomically.

pub mod commands;
pub mod config;
pub mod error;
pub mod layout;

pub use commands::{
    cmd_ablate, cmd_attribute, cmd_compare, cmd_curate, cmd_embed, cmd_eval, cmd_profiles, cmd_synth, tree_digests,
    StageReport, Workspace,
};
pub use config::{CohortSource, CuratorKind, Overrides, RunConfig};
pub use error::CliError;
pub use layout::OutputLayout;
