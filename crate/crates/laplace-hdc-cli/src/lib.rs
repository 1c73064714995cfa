//! Command-line companion to the core encoding crate: dataset ingestion,
//! run configuration, the end-to-end train/evaluate pipelines, and file
//! outputs (results CSV, model files, PGM visualizations).
//!
//! The binary target (`laplace-hdc`) is a thin argument-parsing shell over
//! this library; everything it does is callable — and tested — through
//! these modules.

pub mod config;
pub mod dataio;
pub mod pipeline;
