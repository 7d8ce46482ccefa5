#![forbid(unsafe_code)]
//! Temporal format profiling for web-archive corpora.
//!
//! The pipeline reads ARC/WARC files ([`warc_ingest`]), identifies each
//! payload with two signature sets ([`sig_engine`]), enriches the results with
//! creator metadata ([`extractors`]), counts them per crawl year
//! ([`profiler`]) and derives trend tables from the counts ([`analyzer`]).
//! [`corpusgen`] builds synthetic corpora with known ground truth.

pub mod analyzer;
pub mod corpusgen;
pub mod extractors;
pub mod mimetype;
pub mod profiler;
pub mod sig_engine;
pub mod warc_ingest;
