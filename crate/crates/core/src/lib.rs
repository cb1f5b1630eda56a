//! Lexicon-driven analysis of an online in-group cryptolect.
//!
//! - [`lexicon`]: the term inventory (roots, affixes, blends, category codes)
//! - [`morpho`]: tokenization and blend decomposition into lexicon-backed parses
//! - [`corpus`]: JSON Lines post archives, frequency tables, user/week grouping
//! - [`discovery`]: smoothed log-ratio ranking of candidate terms
//! - [`trajectory`]: per-user weekly usage rates and activity gaps
//!
//! The lexicon is immutable once loaded and can be shared across threads.

pub mod corpus;
pub mod discovery;
pub mod lexicon;
pub mod morpho;
pub mod synth;
pub mod trajectory;

pub use corpus::{FrequencyTable, IsoWeek, Post, Strictness};
pub use discovery::{LogRatioRow, RankParams};
pub use lexicon::{Category, CategoryStats, EntryKind, Lexicon, LexiconEntry};
pub use morpho::{Annotation, Parse, Role, Segment, Token};
pub use trajectory::{GapReport, UsageSeries};
