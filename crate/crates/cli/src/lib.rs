//! Pipeline and command-line layer on top of [`spatspec_core`]: dataset
//! manifests, file formats, batch orchestration of encode / sweep / train /
//! eval runs, a synthetic dataset generator, and the `spatspec` binary's
//! argument handling.
//!
//! Everything here is deterministic by construction: commands are pure
//! functions of (manifest contents, configuration, seed), reruns produce
//! byte-identical artifacts, and output files are written to temporary
//! names and atomically renamed.

pub mod cli;
pub mod config;
pub mod encode;
pub mod error;
pub mod evalcmd;
pub mod formats;
pub mod manifest;
pub mod sweep;
pub mod synth;
pub mod traincmd;
