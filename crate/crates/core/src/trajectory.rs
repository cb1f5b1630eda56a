//! Per-user weekly usage rates and break-and-rejoin detection.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{IsoWeek, Post};
use crate::lexicon::Lexicon;
use crate::morpho;

pub const DEFAULT_MIN_GAP_WEEKS: u32 = 4;

#[derive(Debug, Error, PartialEq)]
pub enum TrajectoryError {
    #[error("post {post} belongs to {found:?}, expected {expected:?}")]
    MixedUsers {
        post: String,
        expected: String,
        found: String,
    },
    #[error("min_gap_weeks must be at least 1")]
    MinGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeekBucket {
    pub iso_week: IsoWeek,
    pub posts: u64,
    pub tokens: u64,
    pub matched: u64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UsageSeries {
    pub user: String,
    /// Active weeks only, strictly increasing.
    pub buckets: Vec<WeekBucket>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    posts: u64,
    tokens: u64,
    matched: u64,
}

fn rate(matched: u64, tokens: u64) -> f64 {
    if tokens == 0 {
        0.0
    } else {
        matched as f64 / tokens as f64
    }
}

/// Streaming per-(user, week) totals. Memory grows with active user-weeks,
/// not with posts.
#[derive(Debug, Clone, Default)]
pub struct UsageAccumulator {
    cells: BTreeMap<String, BTreeMap<IsoWeek, Tally>>,
}

impl UsageAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_counts(&mut self, user: &str, week: IsoWeek, tokens: u64, matched: u64) {
        let weeks = match self.cells.get_mut(user) {
            Some(w) => w,
            None => self.cells.entry(user.to_string()).or_default(),
        };
        let cell = weeks.entry(week).or_default();
        cell.posts += 1;
        cell.tokens += tokens;
        cell.matched += matched;
    }

    pub fn add_post(&mut self, post: &Post, lexicon: &Lexicon) {
        let a = morpho::annotate(post, lexicon);
        self.add_counts(
            &post.user,
            post.iso_week(),
            a.token_count as u64,
            a.matched_count as u64,
        );
    }

    pub fn users(&self) -> impl Iterator<Item = &str> {
        self.cells.keys().map(String::as_str)
    }

    pub fn contains_user(&self, user: &str) -> bool {
        self.cells.contains_key(user)
    }

    pub fn series(&self, user: &str) -> Option<UsageSeries> {
        let weeks = self.cells.get(user)?;
        Some(UsageSeries {
            user: user.to_string(),
            buckets: weeks
                .iter()
                .map(|(&iso_week, t)| WeekBucket {
                    iso_week,
                    posts: t.posts,
                    tokens: t.tokens,
                    matched: t.matched,
                    rate: rate(t.matched, t.tokens),
                })
                .collect(),
        })
    }

    /// Every user's series, ordered by user.
    pub fn all_series(&self) -> Vec<UsageSeries> {
        self.users().filter_map(|u| self.series(u)).collect()
    }
}

/// Weekly series for one user. Every post must belong to `user`.
pub fn usage_series<'a>(
    user: &str,
    posts: impl IntoIterator<Item = &'a Post>,
    lexicon: &Lexicon,
) -> Result<UsageSeries, TrajectoryError> {
    let mut acc = UsageAccumulator::new();
    for post in posts {
        if post.user != user {
            return Err(TrajectoryError::MixedUsers {
                post: post.id.clone(),
                expected: user.to_string(),
                found: post.user.clone(),
            });
        }
        acc.add_post(post, lexicon);
    }
    Ok(acc.series(user).unwrap_or_else(|| UsageSeries {
        user: user.to_string(),
        buckets: Vec::new(),
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gap {
    pub last_active_week: IsoWeek,
    pub next_active_week: IsoWeek,
    /// Inactive weeks strictly between the two active weeks.
    pub gap_weeks: u32,
    pub pre_rate: f64,
    pub post_rate: f64,
    /// `post_rate / pre_rate`; `None` when `pre_rate` is zero.
    pub escalation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub user: String,
    pub gaps: Vec<Gap>,
}

/// Finds runs of at least `min_gap_weeks` inactive weeks between two active
/// weeks. Rates either side are token-weighted over all active weeks before
/// and after the gap.
pub fn detect_gaps(series: &UsageSeries, min_gap_weeks: u32) -> Result<GapReport, TrajectoryError> {
    if min_gap_weeks == 0 {
        return Err(TrajectoryError::MinGap);
    }
    let b = &series.buckets;
    // prefix[i] = (tokens, matched) over buckets[..i]
    let mut prefix = Vec::with_capacity(b.len() + 1);
    prefix.push((0u64, 0u64));
    for bucket in b {
        let (t, m) = *prefix.last().unwrap();
        prefix.push((t + bucket.tokens, m + bucket.matched));
    }
    let (all_t, all_m) = *prefix.last().unwrap();
    let mut gaps = Vec::new();
    for i in 1..b.len() {
        let absent = b[i - 1].iso_week.weeks_until(b[i].iso_week) - 1;
        if absent < i64::from(min_gap_weeks) {
            continue;
        }
        let (pre_t, pre_m) = prefix[i];
        let pre_rate = rate(pre_m, pre_t);
        let post_rate = rate(all_m - pre_m, all_t - pre_t);
        gaps.push(Gap {
            last_active_week: b[i - 1].iso_week,
            next_active_week: b[i].iso_week,
            gap_weeks: absent as u32,
            pre_rate,
            post_rate,
            escalation: (pre_rate > 0.0).then(|| post_rate / pre_rate),
        });
    }
    Ok(GapReport {
        user: series.user.clone(),
        gaps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesFormat {
    Csv,
    Jsonl,
}

pub const SERIES_CSV_HEADER: &str = "user,iso_week,posts,tokens,matched,rate";
pub const GAPS_CSV_HEADER: &str =
    "user,last_active_week,next_active_week,gap_weeks,pre_rate,post_rate,escalation";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Serialize)]
struct BucketRecord<'a> {
    user: &'a str,
    #[serde(flatten)]
    bucket: &'a WeekBucket,
}

#[derive(Serialize)]
struct GapRecord<'a> {
    user: &'a str,
    #[serde(flatten)]
    gap: &'a Gap,
}

/// Rows ordered as given: series by series, week by week.
pub fn export_series(series: &[UsageSeries], format: SeriesFormat) -> String {
    let mut out = String::new();
    if format == SeriesFormat::Csv {
        out.push_str(SERIES_CSV_HEADER);
        out.push('\n');
    }
    for s in series {
        for bucket in &s.buckets {
            match format {
                SeriesFormat::Csv => out.push_str(&format!(
                    "{},{},{},{},{},{:.6}\n",
                    csv_field(&s.user),
                    bucket.iso_week,
                    bucket.posts,
                    bucket.tokens,
                    bucket.matched,
                    bucket.rate
                )),
                SeriesFormat::Jsonl => {
                    let rec = BucketRecord {
                        user: &s.user,
                        bucket,
                    };
                    out.push_str(&serde_json::to_string(&rec).expect("bucket serializes"));
                    out.push('\n');
                }
            }
        }
    }
    out
}

pub fn export_gaps(reports: &[GapReport], format: SeriesFormat) -> String {
    let mut out = String::new();
    if format == SeriesFormat::Csv {
        out.push_str(GAPS_CSV_HEADER);
        out.push('\n');
    }
    for r in reports {
        for gap in &r.gaps {
            match format {
                SeriesFormat::Csv => out.push_str(&format!(
                    "{},{},{},{},{:.6},{:.6},{}\n",
                    csv_field(&r.user),
                    gap.last_active_week,
                    gap.next_active_week,
                    gap.gap_weeks,
                    gap.pre_rate,
                    gap.post_rate,
                    gap.escalation
                        .map_or_else(|| "undefined".to_string(), |e| format!("{e:.6}")),
                )),
                SeriesFormat::Jsonl => {
                    let rec = GapRecord { user: &r.user, gap };
                    out.push_str(&serde_json::to_string(&rec).expect("gap serializes"));
                    out.push('\n');
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wk(s: &str) -> IsoWeek {
        s.parse().unwrap()
    }

    fn bucket(week: &str, tokens: u64, matched: u64) -> WeekBucket {
        WeekBucket {
            iso_week: wk(week),
            posts: 1,
            tokens,
            matched,
            rate: rate(matched, tokens),
        }
    }

    fn post(user: &str, t: i64, text: &str) -> Post {
        Post {
            id: format!("{user}-{t}"),
            user: user.into(),
            forum: "f".into(),
            created_utc: t,
            text: text.into(),
            parent_id: None,
        }
    }

    #[test]
    fn single_post_rate() {
        let lex = Lexicon::seed();
        let s = usage_series("u", &[post("u", 1_578_268_800, "gymcel here")], &lex).unwrap();
        assert_eq!(s.buckets.len(), 1);
        assert_eq!((s.buckets[0].tokens, s.buckets[0].matched), (2, 1));
        assert_eq!(s.buckets[0].rate, 0.5);
    }

    #[test]
    fn no_posts_and_mixed_users() {
        let lex = Lexicon::seed();
        assert!(usage_series("u", &[], &lex).unwrap().buckets.is_empty());
        let err = usage_series("u", &[post("u", 0, ""), post("v", 0, "")], &lex).unwrap_err();
        assert!(matches!(err, TrajectoryError::MixedUsers { .. }));
    }

    #[test]
    fn empty_text_gives_zero_rate() {
        let lex = Lexicon::seed();
        let s = usage_series("u", &[post("u", 0, "")], &lex).unwrap();
        assert_eq!((s.buckets[0].tokens, s.buckets[0].rate), (0, 0.0));
    }

    #[test]
    fn gap_length() {
        let s = UsageSeries {
            user: "u".into(),
            buckets: vec![bucket("2020-W01", 10, 1), bucket("2020-W10", 10, 2)],
        };
        let r = detect_gaps(&s, 4).unwrap();
        assert_eq!(r.gaps.len(), 1);
        assert_eq!(r.gaps[0].gap_weeks, 8);
        assert_eq!(r.gaps[0].escalation, Some(2.0));
        assert!(detect_gaps(&s, 9).unwrap().gaps.is_empty());
        assert_eq!(detect_gaps(&s, 0), Err(TrajectoryError::MinGap));
    }

    #[test]
    fn gap_across_year_boundary() {
        let s = UsageSeries {
            user: "u".into(),
            buckets: vec![bucket("2020-W50", 10, 0), bucket("2021-W03", 10, 5)],
        };
        let r = detect_gaps(&s, 1).unwrap();
        // W51 W52 W53 W01 W02
        assert_eq!(r.gaps[0].gap_weeks, 5);
        assert_eq!(r.gaps[0].escalation, None);
    }

    #[test]
    fn uninterrupted_and_short_series() {
        let s = UsageSeries {
            user: "u".into(),
            buckets: (1..=6)
                .map(|w| bucket(&format!("2021-W{w:02}"), 5, 1))
                .collect(),
        };
        assert!(detect_gaps(&s, 1).unwrap().gaps.is_empty());
        let one = UsageSeries {
            user: "u".into(),
            buckets: vec![bucket("2021-W01", 5, 1)],
        };
        assert!(detect_gaps(&one, 1).unwrap().gaps.is_empty());
    }

    #[test]
    fn pre_post_rates_are_token_weighted() {
        let s = UsageSeries {
            user: "u".into(),
            buckets: vec![
                bucket("2021-W01", 90, 0),
                bucket("2021-W02", 10, 10),
                bucket("2021-W10", 100, 50),
            ],
        };
        let g = &detect_gaps(&s, 4).unwrap().gaps[0];
        assert_eq!(g.pre_rate, 0.1);
        assert_eq!(g.post_rate, 0.5);
    }

    #[test]
    fn csv_and_jsonl_export() {
        assert_eq!(
            export_series(&[], SeriesFormat::Csv),
            format!("{SERIES_CSV_HEADER}\n")
        );
        assert_eq!(export_series(&[], SeriesFormat::Jsonl), "");
        let s = UsageSeries {
            user: "a,b".into(),
            buckets: vec![bucket("2020-W02", 3, 1)],
        };
        let csv = export_series(std::slice::from_ref(&s), SeriesFormat::Csv);
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(
            csv.lines().nth(1).unwrap(),
            "\"a,b\",2020-W02,1,3,1,0.333333"
        );
        let v: serde_json::Value =
            serde_json::from_str(export_series(&[s], SeriesFormat::Jsonl).trim()).unwrap();
        assert_eq!(v["iso_week"], "2020-W02");
        assert_eq!(v["user"], "a,b");
    }

    #[test]
    fn gap_export_marks_undefined_escalation() {
        let r = GapReport {
            user: "u".into(),
            gaps: vec![Gap {
                last_active_week: wk("2020-W01"),
                next_active_week: wk("2020-W10"),
                gap_weeks: 8,
                pre_rate: 0.0,
                post_rate: 0.2,
                escalation: None,
            }],
        };
        let csv = export_gaps(std::slice::from_ref(&r), SeriesFormat::Csv);
        assert_eq!(
            csv.lines().nth(1).unwrap(),
            "u,2020-W01,2020-W10,8,0.000000,0.200000,undefined"
        );
        let v: serde_json::Value =
            serde_json::from_str(export_gaps(&[r], SeriesFormat::Jsonl).trim()).unwrap();
        assert!(v["escalation"].is_null());
    }
}
