//! Core library for auditing ads.txt / sellers.json supply chains.
//!
//! The crate is organised bottom-up:
//!
//! - [`parser`]: tolerant parsers and single-file lints for both file formats.
//! - [`crawler`]: flat ads.txt crawl and breadth-first sellers.json crawl over a
//!   pluggable [`crawler::Transport`] (live HTTP or a recorded fixture tree).
//! - [`datastore`]: snapshot persistence, indexes, copied-file detection and the
//!   auxiliary domain lists (objectionable sites, ranks, verified networks).
//! - [`whois`]: registrant extraction, privacy-redaction filtering and owner
//!   normalisation.
//! - [`stats`]: two-sample Kolmogorov-Smirnov and Pearson correlation.
//! - [`pooling`]: identifier pools, dark pools and pooling statistics.
//! - [`intermediary`]: relationship graph, type mismatches and hidden intermediaries.
//! - [`analysis`] / [`tools`] / [`report`]: materialised per-snapshot analysis,
//!   the investigative lookups served over HTTP, and CSV exports.

pub mod analysis;
pub mod crawler;
pub mod datastore;
pub mod domain;
pub mod error;
pub mod intermediary;
pub mod parser;
pub mod pooling;
pub mod report;
pub mod stats;
pub mod tools;
pub mod whois;

pub use error::{Error, Result};
