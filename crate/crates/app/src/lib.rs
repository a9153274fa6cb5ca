//! Command-line and HTTP front ends for the synergy engine.
//!
//! `ingest` turns a match log into an [`AnalysisSnapshot`](snapshot::AnalysisSnapshot)
//! holding the log and its pair and counter matrices. Batch commands read
//! snapshots or card files and write JSON reports that embed the
//! [`RunConfig`](config::RunConfig) used. `serve` exposes a snapshot read-only
//! over HTTP for draft recommendations.

pub mod api;
pub mod cli;
pub mod config;
pub mod error;
pub mod report;
pub mod server;
pub mod snapshot;
