//! Deterministic synthetic post archives for load tests and benchmarks.

use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Post;

const COMMON: &[&str] = &[
    "the",
    "a",
    "and",
    "to",
    "of",
    "i",
    "you",
    "it",
    "is",
    "that",
    "in",
    "for",
    "on",
    "this",
    "just",
    "with",
    "be",
    "my",
    "they",
    "are",
    "not",
    "have",
    "do",
    "if",
    "so",
    "but",
    "what",
    "at",
    "like",
    "all",
    "about",
    "was",
    "or",
    "can",
    "when",
    "will",
    "one",
    "get",
    "no",
    "more",
    "people",
    "time",
    "life",
    "women",
    "never",
    "even",
    "why",
    "because",
    "cope",
    "over",
    "complete",
    "problem",
    "much",
    "boyfriend",
    "anime",
    "gym",
    "height",
    "face",
    "money",
    "table",
    "cancel",
    "parcel",
    "excel",
];

const TERMS: &[&str] = &[
    "cel",
    "maxx",
    "mog",
    "mogged",
    "chad",
    "stacy",
    "normie",
    "normies",
    "toilet",
    "toilets",
    "jbw",
    "betabux",
    "betabuxxing",
    "cumskin",
    "chadrone",
    "ricecel",
    "currycel",
    "gymcel",
    "wristcel",
    "looksmaxxing",
    "heightmog",
    "moggging",
];

const STEMS: &[&str] = &[
    "taco", "bean", "rice", "wrist", "gym", "height", "skull", "status", "looks", "neet",
];
const SUFFIXES: &[&str] = &["cel", "cels", "maxxing", "mogged", "mog"];

#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub posts: usize,
    pub users: usize,
    pub seed: u64,
    /// Probability that a token is drawn from the in-group vocabulary.
    pub term_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            posts: 10_000,
            users: 100,
            seed: 7,
            term_rate: 0.08,
        }
    }
}

/// 2016-01-01T00:00:00Z
const START: i64 = 1_451_606_400;
/// Roughly eight years.
const SPAN: i64 = 8 * 365 * 86_400;

pub struct SynthPosts {
    rng: ChaCha8Rng,
    cfg: SynthConfig,
    next: usize,
}

impl Iterator for SynthPosts {
    type Item = Post;

    fn next(&mut self) -> Option<Post> {
        if self.next == self.cfg.posts {
            return None;
        }
        let rng = &mut self.rng;
        let id = self.next;
        self.next += 1;
        let words = rng.gen_range(3..16);
        let mut text = String::new();
        for i in 0..words {
            if i > 0 {
                text.push(if rng.gen_bool(0.1) { ',' } else { ' ' });
                if text.ends_with(',') {
                    text.push(' ');
                }
            }
            if rng.gen_bool(self.cfg.term_rate) {
                if rng.gen_bool(0.3) {
                    text.push_str(STEMS.choose(rng).unwrap());
                    text.push_str(SUFFIXES.choose(rng).unwrap());
                } else {
                    text.push_str(TERMS.choose(rng).unwrap());
                }
            } else {
                let w = COMMON.choose(rng).unwrap();
                if rng.gen_bool(0.05) {
                    let mut cs = w.chars();
                    if let Some(c) = cs.next() {
                        text.extend(c.to_uppercase());
                        text.push_str(cs.as_str());
                    }
                } else {
                    text.push_str(w);
                }
            }
        }
        if rng.gen_bool(0.3) {
            text.push('.');
        }
        Some(Post {
            id: format!("p{id}"),
            user: format!("user{:05}", rng.gen_range(0..self.cfg.users.max(1))),
            forum: "synthetic".into(),
            created_utc: START + rng.gen_range(0..SPAN),
            text,
            parent_id: None,
        })
    }
}

pub fn posts(cfg: SynthConfig) -> SynthPosts {
    SynthPosts {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        cfg,
        next: 0,
    }
}

/// Writes `cfg.posts` posts as JSON Lines.
pub fn write_jsonl<W: Write>(cfg: SynthConfig, mut out: W) -> io::Result<()> {
    for post in posts(cfg) {
        serde_json::to_writer(&mut out, &post)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// One scripted week of activity: `posts` posts whose texts add up to
/// `tokens` tokens, `matched` of them lexicon hits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeekScript {
    pub week_offset: u32,
    pub posts: u32,
    pub tokens: u32,
    pub matched: u32,
}

/// Monday 2020-01-06T12:00Z, inside ISO week 2020-W02.
pub const SCRIPT_EPOCH: i64 = 1_578_312_000;

/// Posts for `user` that realize `script` exactly against the seed lexicon:
/// hits are the word "gymcel", misses the word "the".
pub fn scripted_user(user: &str, script: &[WeekScript]) -> Vec<Post> {
    let mut out = Vec::new();
    for w in script {
        assert!(w.posts >= 1 && w.matched <= w.tokens);
        let mut words: Vec<&str> = Vec::with_capacity(w.tokens as usize);
        words.extend(std::iter::repeat_n("gymcel", w.matched as usize));
        words.extend(std::iter::repeat_n("the", (w.tokens - w.matched) as usize));
        let per = words.len().div_ceil(w.posts as usize).max(1);
        let mut chunks: Vec<String> = words.chunks(per).map(|c| c.join(" ")).collect();
        chunks.resize(w.posts as usize, String::new());
        for (i, text) in chunks.into_iter().enumerate() {
            out.push(Post {
                id: format!("{user}-{}-{i}", w.week_offset),
                user: user.to_string(),
                forum: "scripted".into(),
                created_utc: SCRIPT_EPOCH
                    + i64::from(w.week_offset) * 7 * 86_400
                    + i as i64 * 3_600,
                text,
                parent_id: None,
            });
        }
    }
    out
}
