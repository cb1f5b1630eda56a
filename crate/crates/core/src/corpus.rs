//! Post archives: JSON Lines ingestion, token/affix frequency tables and
//! grouping by user and ISO week.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, Weekday};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::Lexicon;
use crate::morpho;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid worker count {0}")]
    Workers(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub user: String,
    pub forum: String,
    pub created_utc: i64,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<String>,
}

impl Post {
    pub fn iso_week(&self) -> IsoWeek {
        IsoWeek::from_timestamp(self.created_utc)
    }
}

/// Parses one archive line and checks the post invariants.
pub fn parse_post(line: &str) -> Result<Post, String> {
    let post: Post = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if post.id.is_empty() {
        return Err("empty id".into());
    }
    if post.created_utc < 0 {
        return Err(format!("negative created_utc {}", post.created_utc));
    }
    Ok(post)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strictness {
    /// Abort on the first malformed line.
    Strict,
    /// Drop malformed lines and count them.
    Skip,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReadTally {
    /// Non-blank lines seen.
    pub lines: usize,
    pub malformed: usize,
}

/// Streams posts from a JSON Lines source in file order. Blank lines are
/// ignored entirely.
pub struct PostReader<R> {
    source: R,
    strictness: Strictness,
    line_no: usize,
    tally: ReadTally,
    buf: String,
    done: bool,
}

impl<R: BufRead> PostReader<R> {
    pub fn new(source: R, strictness: Strictness) -> Self {
        PostReader {
            source,
            strictness,
            line_no: 0,
            tally: ReadTally::default(),
            buf: String::new(),
            done: false,
        }
    }

    pub fn tally(&self) -> ReadTally {
        self.tally
    }
}

impl<R: BufRead> Iterator for PostReader<R> {
    type Item = Result<Post, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            match self.source.read_line(&mut self.buf) {
                Ok(0) => self.done = true,
                Ok(_) => {
                    self.line_no += 1;
                    let line = self.buf.trim_end_matches(['\n', '\r']);
                    if line.trim().is_empty() {
                        continue;
                    }
                    self.tally.lines += 1;
                    match parse_post(line) {
                        Ok(post) => return Some(Ok(post)),
                        Err(message) => {
                            self.tally.malformed += 1;
                            if self.strictness == Strictness::Strict {
                                self.done = true;
                                return Some(Err(CorpusError::Malformed {
                                    line: self.line_no,
                                    message,
                                }));
                            }
                        }
                    }
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            }
        }
        None
    }
}

pub fn read_posts<R: BufRead>(source: R, strictness: Strictness) -> PostReader<R> {
    PostReader::new(source, strictness)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: HashMap<String, u64>,
    total_tokens: u64,
    doc_count: u64,
}

impl FrequencyTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts<I, S>(counts: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut t = Self::new();
        for (token, n) in counts {
            t.add_n(token.into(), n);
        }
        t
    }

    pub fn add(&mut self, token: &str) {
        if let Some(c) = self.counts.get_mut(token) {
            *c += 1;
        } else {
            self.counts.insert(token.to_string(), 1);
        }
        self.total_tokens += 1;
    }

    pub fn add_n(&mut self, token: String, n: u64) {
        if n == 0 {
            return;
        }
        *self.counts.entry(token).or_insert(0) += n;
        self.total_tokens += n;
    }

    pub fn add_doc(&mut self) {
        self.doc_count += 1;
    }

    pub fn set_doc_count(&mut self, n: u64) {
        self.doc_count = n;
    }

    pub fn get(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn doc_count(&self) -> u64 {
        self.doc_count
    }

    pub fn vocabulary_size(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// Pointwise sum; the larger table absorbs the smaller.
    pub fn merge(self, other: FrequencyTable) -> FrequencyTable {
        let (mut big, small) = if self.counts.len() >= other.counts.len() {
            (self, other)
        } else {
            (other, self)
        };
        for (k, v) in small.counts {
            *big.counts.entry(k).or_insert(0) += v;
        }
        big.total_tokens += small.total_tokens;
        big.doc_count += small.doc_count;
        big
    }

    /// Tokens by descending count, ties by token.
    pub fn ranked(&self) -> Vec<(&str, u64)> {
        let mut rows: Vec<_> = self.iter().collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        rows
    }

    /// Canonical text form: totals, then `token<TAB>count` sorted by token.
    pub fn to_canonical_tsv(&self) -> String {
        let mut rows: Vec<_> = self.iter().collect();
        rows.sort_unstable_by(|a, b| a.0.cmp(b.0));
        let mut out = format!(
            "#total_tokens\t{}\n#doc_count\t{}\ntoken\tcount\n",
            self.total_tokens, self.doc_count
        );
        for (token, n) in rows {
            out.push_str(token);
            out.push('\t');
            out.push_str(&n.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_canonical_tsv(text: &str) -> Result<Self, String> {
        let mut t = FrequencyTable::new();
        let mut declared_total = None;
        for (i, line) in text.lines().enumerate() {
            let (a, b) = line
                .split_once('\t')
                .ok_or_else(|| format!("line {}: missing tab", i + 1))?;
            let num = || b.parse::<u64>().map_err(|e| format!("line {}: {e}", i + 1));
            match a {
                "#total_tokens" => declared_total = Some(num()?),
                "#doc_count" => t.doc_count = num()?,
                "token" if b == "count" => {}
                _ => t.add_n(a.to_string(), num()?),
            }
        }
        match declared_total {
            Some(n) if n != t.total_tokens => Err(format!(
                "declared total {n} does not match counts {}",
                t.total_tokens
            )),
            _ => Ok(t),
        }
    }
}

pub fn count_tokens(post: &Post, table: &mut FrequencyTable) {
    for token in morpho::tokenize(&post.text) {
        table.add(&token.normalized);
    }
    table.add_doc();
}

/// Counts each productive affix in the best parse of every token, keyed by
/// the affix entry's surface.
pub fn count_affixes(post: &Post, lexicon: &Lexicon, table: &mut FrequencyTable) {
    for token in morpho::tokenize(&post.text) {
        if let Some(parse) = morpho::parse_token(&token, lexicon) {
            for seg in parse.affixes() {
                let entry = lexicon.entry(seg.entry.expect("affix segments carry entries"));
                if entry.productive {
                    table.add(&entry.surface);
                }
            }
        }
    }
    table.add_doc();
}

pub fn build_frequency_table<'a>(posts: impl IntoIterator<Item = &'a Post>) -> FrequencyTable {
    let mut t = FrequencyTable::new();
    for post in posts {
        count_tokens(post, &mut t);
    }
    t
}

pub fn build_affix_table<'a>(
    posts: impl IntoIterator<Item = &'a Post>,
    lexicon: &Lexicon,
) -> FrequencyTable {
    let mut t = FrequencyTable::new();
    for post in posts {
        count_affixes(post, lexicon, &mut t);
    }
    t
}

pub const BATCH_SIZE: usize = 2048;

struct Batches<'r, R> {
    reader: &'r mut PostReader<R>,
    size: usize,
}

impl<R: BufRead> Iterator for Batches<'_, R> {
    type Item = Result<Vec<Post>, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut batch = Vec::with_capacity(self.size);
        for item in self.reader.by_ref() {
            match item {
                Ok(post) => {
                    batch.push(post);
                    if batch.len() == self.size {
                        break;
                    }
                }
                Err(e) => return Some(Err(e)),
            }
        }
        (!batch.is_empty()).then_some(Ok(batch))
    }
}

/// Reads posts sequentially and counts them in `workers` threads, merging the
/// per-batch tables. The result does not depend on `workers`.
pub fn scan<R, F>(
    source: R,
    strictness: Strictness,
    workers: usize,
    count: F,
) -> Result<(FrequencyTable, ReadTally), CorpusError>
where
    R: BufRead + Send,
    F: Fn(&Post, &mut FrequencyTable) + Sync,
{
    if workers == 0 {
        return Err(CorpusError::Workers(workers));
    }
    let mut reader = PostReader::new(source, strictness);
    let table = if workers == 1 {
        let mut table = FrequencyTable::new();
        for post in reader.by_ref() {
            count(&post?, &mut table);
        }
        table
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool");
        let batches = Batches {
            reader: &mut reader,
            size: BATCH_SIZE,
        };
        pool.install(|| {
            batches
                .par_bridge()
                .map(|batch| {
                    batch.map(|posts| {
                        let mut table = FrequencyTable::new();
                        for post in &posts {
                            count(post, &mut table);
                        }
                        table
                    })
                })
                .try_reduce(FrequencyTable::new, |a, b| Ok(a.merge(b)))
        })?
    };
    Ok((table, reader.tally()))
}

/// ISO-8601 week in UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IsoWeek {
    pub year: i32,
    pub week: u32,
}

impl IsoWeek {
    pub fn from_timestamp(secs: i64) -> Self {
        let dt = DateTime::from_timestamp(secs, 0).expect("timestamp in range");
        let w = dt.iso_week();
        IsoWeek {
            year: w.year(),
            week: w.week(),
        }
    }

    pub fn monday(self) -> NaiveDate {
        NaiveDate::from_isoywd_opt(self.year, self.week, Weekday::Mon).expect("valid iso week")
    }

    /// Whole weeks from `self` to `later` (negative if `later` is earlier).
    pub fn weeks_until(self, later: IsoWeek) -> i64 {
        (later.monday() - self.monday()).num_days() / 7
    }
}

impl fmt::Display for IsoWeek {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-W{:02}", self.year, self.week)
    }
}

impl FromStr for IsoWeek {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (y, w) = s
            .split_once("-W")
            .ok_or_else(|| format!("not an ISO week: {s:?}"))?;
        let year = y.parse().map_err(|_| format!("bad year in {s:?}"))?;
        let week = w.parse().map_err(|_| format!("bad week in {s:?}"))?;
        NaiveDate::from_isoywd_opt(year, week, Weekday::Mon)
            .ok_or_else(|| format!("no such week {s:?}"))?;
        Ok(IsoWeek { year, week })
    }
}

impl Serialize for IsoWeek {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    User,
    UserWeek,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupKey {
    pub user: String,
    pub week: Option<IsoWeek>,
}

/// Groups posts ordered by user, then week. Posts keep their input order
/// within a group.
pub fn bucket_posts(
    posts: impl IntoIterator<Item = Post>,
    by: GroupBy,
) -> BTreeMap<GroupKey, Vec<Post>> {
    let mut groups: BTreeMap<GroupKey, Vec<Post>> = BTreeMap::new();
    for post in posts {
        let key = GroupKey {
            user: post.user.clone(),
            week: match by {
                GroupBy::User => None,
                GroupBy::UserWeek => Some(post.iso_week()),
            },
        };
        groups.entry(key).or_default().push(post);
    }
    groups
}
