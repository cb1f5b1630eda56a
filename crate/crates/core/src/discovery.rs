//! Candidate term extraction: smoothed base-2 log ratio of target versus
//! background relative frequency over the most frequent target tokens.

use std::collections::{BTreeSet, HashSet};
use std::io::BufRead;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::FrequencyTable;
use crate::lexicon::{Category, EntryKind, Lexicon, LexiconEntry, LexiconError};

pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_TOP_K: usize = 1000;
pub const DEFAULT_MIN_COUNT: u64 = 5;

#[derive(Debug, Error)]
pub enum DiscoveryError {
    #[error("{0} table is empty")]
    EmptyTable(&'static str),
    #[error("alpha must be a finite non-negative number, got {0}")]
    Alpha(f64),
    #[error("top_k must be at least 1")]
    TopK,
    #[error("log ratio for {0:?} is not finite; use alpha > 0")]
    NonFinite(String),
    #[error("sheet line {line}: {message}")]
    Sheet { line: usize, message: String },
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRatioRow {
    pub token: String,
    pub target_count: u64,
    pub background_count: u64,
    pub target_rank: usize,
    pub log_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankParams {
    pub alpha: f64,
    pub top_k: usize,
    pub min_count: u64,
}

impl Default for RankParams {
    fn default() -> Self {
        RankParams {
            alpha: DEFAULT_ALPHA,
            top_k: DEFAULT_TOP_K,
            min_count: DEFAULT_MIN_COUNT,
        }
    }
}

/// `log2(((ct+a)/(nt+aV)) / ((cb+a)/(nb+aV)))`.
///
/// Evaluated as `log2(1 + (num-den)/den)` on the cross-multiplied terms so
/// near-zero ratios keep full relative precision, with the branch on the
/// sign making a target/background swap an exact negation.
pub fn smoothed_log_ratio(ct: u64, nt: u64, cb: u64, nb: u64, alpha: f64, vocab: usize) -> f64 {
    let av = alpha * vocab as f64;
    let num = (ct as f64 + alpha) * (nb as f64 + av);
    let den = (cb as f64 + alpha) * (nt as f64 + av);
    if num >= den {
        ((num - den) / den).ln_1p() / std::f64::consts::LN_2
    } else {
        -(((den - num) / num).ln_1p() / std::f64::consts::LN_2)
    }
}

pub fn log_ratio_rank(
    target: &FrequencyTable,
    background: &FrequencyTable,
    params: RankParams,
) -> Result<Vec<LogRatioRow>, DiscoveryError> {
    let RankParams {
        alpha,
        top_k,
        min_count,
    } = params;
    if target.total_tokens() == 0 {
        return Err(DiscoveryError::EmptyTable("target"));
    }
    if background.total_tokens() == 0 {
        return Err(DiscoveryError::EmptyTable("background"));
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(DiscoveryError::Alpha(alpha));
    }
    if top_k == 0 {
        return Err(DiscoveryError::TopK);
    }
    let vocab = {
        let mut v: HashSet<&str> = target.iter().map(|(t, _)| t).collect();
        v.extend(background.iter().map(|(t, _)| t));
        v.len()
    };
    let mut rows = Vec::new();
    for (rank, (token, ct)) in target.ranked().into_iter().enumerate() {
        if rows.len() == top_k {
            break;
        }
        if ct < min_count {
            continue;
        }
        let cb = background.get(token);
        let log_ratio = smoothed_log_ratio(
            ct,
            target.total_tokens(),
            cb,
            background.total_tokens(),
            alpha,
            vocab,
        );
        if !log_ratio.is_finite() {
            return Err(DiscoveryError::NonFinite(token.to_string()));
        }
        rows.push(LogRatioRow {
            token: token.to_string(),
            target_count: ct,
            background_count: cb,
            target_rank: rank + 1,
            log_ratio,
        });
    }
    rows.sort_by(|a, b| {
        b.log_ratio
            .total_cmp(&a.log_ratio)
            .then_with(|| a.token.cmp(&b.token))
    });
    Ok(rows)
}

pub fn filter_stoplist(rows: Vec<LogRatioRow>, stoplist: &BTreeSet<String>) -> Vec<LogRatioRow> {
    rows.into_iter()
        .filter(|r| !stoplist.contains(&r.token))
        .collect()
}

/// A few of the common words the term list was cleaned of.
pub fn example_stoplist() -> BTreeSet<String> {
    ["complete", "problem", "much", "boyfriend", "anime"]
        .into_iter()
        .map(String::from)
        .collect()
}

pub const RANKED_HEADER: &str = "token\ttarget_count\tbackground_count\ttarget_rank\tlog_ratio";

pub fn ranked_tsv(rows: &[LogRatioRow]) -> String {
    let mut out = format!("{RANKED_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{:.4}\n",
            r.token, r.target_count, r.background_count, r.target_rank, r.log_ratio
        ));
    }
    out
}

pub fn ranked_jsonl(rows: &[LogRatioRow]) -> String {
    rows.iter()
        .map(|r| serde_json::to_string(r).expect("row serializes") + "\n")
        .collect()
}

pub const SHEET_HEADER: &str =
    "token\ttarget_count\tbackground_count\tlog_ratio\tdefinition\tdehumanizing\tracist\tmisogynistic";

/// Blank coding sheet for manual review.
pub fn review_sheet(rows: &[LogRatioRow]) -> String {
    let mut out = format!("{SHEET_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.4}\t\t\t\t\n",
            r.token, r.target_count, r.background_count, r.log_ratio
        ));
    }
    out
}

fn flag(cell: &str) -> Option<bool> {
    match cell.trim().to_ascii_lowercase().as_str() {
        "" | "0" | "n" | "no" => Some(false),
        "x" | "1" | "y" | "yes" => Some(true),
        _ => None,
    }
}

/// Converts a completed review sheet into standalone lexicon entries. Rows
/// with no definition and no flags are treated as rejected and skipped.
pub fn import_sheet<R: BufRead>(source: R) -> Result<Lexicon, DiscoveryError> {
    let mut entries = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let bad = |message: String| DiscoveryError::Sheet {
            line: lineno,
            message,
        };
        if lineno == 1 {
            if line != SHEET_HEADER {
                return Err(bad("unexpected header".into()));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut cols: Vec<&str> = line.split('\t').collect();
        if cols.len() > 8 {
            return Err(bad(format!("expected 8 columns, found {}", cols.len())));
        }
        cols.resize(8, "");
        let definition = cols[4].trim();
        let mut categories = BTreeSet::new();
        for (cell, cat) in cols[5..].iter().zip(Category::ALL) {
            match flag(cell) {
                Some(true) => {
                    categories.insert(cat);
                }
                Some(false) => {}
                None => return Err(bad(format!("unrecognized flag {cell:?} for {cat}"))),
            }
        }
        if definition.is_empty() && categories.is_empty() {
            continue;
        }
        let mut entry = LexiconEntry::new(cols[0].trim(), EntryKind::Standalone);
        entry.definition = definition.to_string();
        entry.categories = categories;
        entry.source = "review sheet".into();
        entries.push(entry);
    }
    Ok(Lexicon::from_entries(entries)?)
}
