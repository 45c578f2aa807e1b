//! Corpus-statistics engine and experiment-design toolkit: sentence-level
//! co-occurrence association strength, common-associate overlap between
//! words, balanced stimulus-set selection, presentation-list
//! pseudorandomization, and reduction of fixation logs to standard
//! reading-time measures.

pub mod analysis;
pub mod assoc;
pub mod config;
pub mod cooc;
pub mod corpus;
pub mod error;
pub mod eyemeasures;
pub mod lexstats;
pub mod stimgen;
pub mod tsv;

pub use config::PipelineConfig;
pub use error::{Error, Result};
