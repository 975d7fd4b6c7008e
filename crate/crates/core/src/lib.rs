//! Evaluation harness for generated unit tests: ingests tool reports,
//! computes the eleven quality metrics, scores candidates with a weighted
//! profile and tracks results across evaluation cycles.

pub mod cli;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod review;
pub mod scoring;
pub mod store;
