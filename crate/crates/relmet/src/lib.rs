//! File formats, the analysis pipeline, and report emission for the
//! `relmet` command-line tool.
//!
//! The numerics live in `reliability-core`; this crate adds everything that
//! needs an operating system: CSV/JSON ingestion and writers, `key=value`
//! configuration files, the staged pipeline that turns a dataset into a
//! report document, and the JSON / CSV / plot-table emitters. All emitted
//! output is deterministic byte-for-byte for a given dataset, configuration,
//! and tool version, independent of thread count.

pub mod config_file;
pub mod ingest;
pub mod pipeline;
pub mod plot_data;
pub mod report;
