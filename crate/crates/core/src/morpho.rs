//! Tokenization, normalization and blend decomposition against a [`Lexicon`].
//!
//! A token is matched in three tiers: an exact word entry (possibly after
//! inflection stripping), an affixed form whose stem is itself an entry, and
//! an affixed form with a novel stem of at least [`MIN_NOVEL_STEM`] characters
//! under a productive affix.

use std::cmp::Reverse;
use std::collections::BTreeSet;

use serde::Serialize;

use crate::corpus::Post;
use crate::lexicon::{Category, EntryId, Lexicon};

pub const MIN_NOVEL_STEM: usize = 3;
pub const MIN_INFLECTED_BASE: usize = 3;
pub const INFLECTIONS: [&str; 4] = ["s", "es", "ed", "ing"];
const MAX_SUFFIXES: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub raw: String,
    pub normalized: String,
    /// Character offsets into the source text, end exclusive.
    pub start: usize,
    pub end: usize,
    pub elongated: bool,
}

/// Splits on every character that is not a letter or digit.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut run: Option<(usize, usize)> = None; // (byte start, char start)
    let mut chars = 0;
    let mut flush = |run: &mut Option<(usize, usize)>, byte_end: usize, char_end: usize| {
        if let Some((b, c)) = run.take() {
            let raw = &text[b..byte_end];
            let (normalized, elongated) = normalize_token(raw);
            if !normalized.is_empty() {
                tokens.push(Token {
                    raw: raw.to_string(),
                    normalized,
                    start: c,
                    end: char_end,
                    elongated,
                });
            }
        }
    };
    for (byte, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            run.get_or_insert((byte, chars));
        } else {
            flush(&mut run, byte, chars);
        }
        chars += 1;
    }
    flush(&mut run, text.len(), chars);
    tokens
}

fn lowercase_alnum(raw: &str) -> impl Iterator<Item = char> + '_ {
    raw.chars()
        .flat_map(char::to_lowercase)
        .filter(|c| c.is_alphanumeric())
}

/// Collapses letter runs longer than `keep` down to `keep`.
fn collapse_runs(chars: impl Iterator<Item = char>, keep: usize) -> (String, bool) {
    let mut out = String::new();
    let mut prev = None;
    let mut run = 0;
    let mut collapsed = false;
    for c in chars {
        if Some(c) == prev && c.is_alphabetic() {
            run += 1;
        } else {
            prev = Some(c);
            run = 1;
        }
        if run <= keep {
            out.push(c);
        } else {
            collapsed = true;
        }
    }
    (out, collapsed)
}

/// Lowercases and collapses any run of three or more identical letters to
/// two. The flag reports whether a collapse happened.
pub fn normalize_token(raw: &str) -> (String, bool) {
    collapse_runs(lowercase_alnum(raw), 2)
}

/// Fallback form for elongated tokens: runs of three or more collapse to one,
/// doubled letters are left alone.
fn collapse_elongation_to_one(raw: &str) -> String {
    let chars: Vec<char> = lowercase_alnum(raw).collect();
    let mut out = String::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let mut j = i;
        while j < chars.len() && chars[j] == c {
            j += 1;
        }
        let n = j - i;
        let keep = if n >= 3 && c.is_alphabetic() { 1 } else { n };
        out.extend(std::iter::repeat_n(c, keep));
        i = j;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct InflectionCandidate {
    pub base: String,
    pub inflection: &'static str,
    pub dedoubled: bool,
}

fn is_consonant(c: char) -> bool {
    c.is_alphabetic() && !matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

/// Candidate (base, ending) splits, longest base first. Always contains the
/// unstripped token.
pub fn strip_inflection(normalized: &str) -> Vec<InflectionCandidate> {
    let mut out = vec![InflectionCandidate {
        base: normalized.to_string(),
        inflection: "",
        dedoubled: false,
    }];
    for ending in INFLECTIONS {
        let Some(base) = normalized.strip_suffix(ending) else {
            continue;
        };
        let chars: Vec<char> = base.chars().collect();
        if chars.len() < MIN_INFLECTED_BASE {
            continue;
        }
        out.push(InflectionCandidate {
            base: base.to_string(),
            inflection: ending,
            dedoubled: false,
        });
        if let [.., a, b] = chars[..] {
            if a == b && is_consonant(b) {
                out.push(InflectionCandidate {
                    base: chars[..chars.len() - 1].iter().collect(),
                    inflection: ending,
                    dedoubled: true,
                });
            }
        }
    }
    out.sort_by(|x, y| {
        Reverse(x.base.chars().count())
            .cmp(&Reverse(y.base.chars().count()))
            .then(x.dedoubled.cmp(&y.dedoubled))
            .then(x.inflection.cmp(y.inflection))
    });
    out.dedup_by(|a, b| {
        a.base == b.base && a.inflection == b.inflection && a.dedoubled == b.dedoubled
    });
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Prefix,
    Stem,
    Suffix,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Segment {
    pub text: String,
    pub role: Role,
    pub entry: Option<EntryId>,
}

/// Match tier; lower is more specific.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Specificity {
    Exact = 1,
    KnownStem = 2,
    NovelStem = 3,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parse {
    pub token: String,
    pub segments: Vec<Segment>,
    pub inflection: &'static str,
    pub dedoubled: bool,
    pub specificity: Specificity,
}

impl Parse {
    /// Re-assembles the token from segments, doubling and inflection.
    pub fn reconstruct(&self) -> String {
        let mut s: String = self.segments.iter().map(|seg| seg.text.as_str()).collect();
        if self.dedoubled {
            if let Some(last) = s.chars().last() {
                s.push(last);
            }
        }
        s.push_str(self.inflection);
        s
    }

    pub fn stem(&self) -> &Segment {
        self.segments
            .iter()
            .find(|s| s.role == Role::Stem)
            .expect("parse has a stem")
    }

    pub fn entries(&self) -> impl Iterator<Item = EntryId> + '_ {
        self.segments.iter().filter_map(|s| s.entry)
    }

    pub fn affixes(&self) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(|s| s.role != Role::Stem)
    }

    pub fn categories(&self, lexicon: &Lexicon) -> BTreeSet<Category> {
        self.entries()
            .flat_map(|id| lexicon.entry(id).categories.iter().copied())
            .collect()
    }

    /// Compact rendering such as `chad+ preet` or `looks +maxx +ing`.
    pub fn describe(&self) -> String {
        let mut parts: Vec<String> = self
            .segments
            .iter()
            .map(|s| match s.role {
                Role::Prefix => format!("{}+", s.text),
                Role::Stem => s.text.clone(),
                Role::Suffix => format!("+{}", s.text),
            })
            .collect();
        if !self.inflection.is_empty() {
            parts.push(format!("+{}", self.inflection));
        }
        parts.join(" ")
    }

    fn sort_key(&self) -> impl Ord + '_ {
        (
            self.specificity,
            self.dedoubled,
            self.affixes().count(),
            Reverse(self.token.len() - self.inflection.len()),
            Reverse(self.stem().text.chars().count()),
            self.segments
                .iter()
                .map(|s| (s.text.as_str(), s.role))
                .collect::<Vec<_>>(),
        )
    }
}

/// All parses of `normalized`, best first. Empty for blocklisted tokens and
/// anything the lexicon cannot account for.
pub fn decompose(normalized: &str, lexicon: &Lexicon) -> Vec<Parse> {
    if normalized.is_empty() || lexicon.is_blocked(normalized) {
        return Vec::new();
    }
    let mut parses = Vec::new();
    for cand in strip_inflection(normalized) {
        if lexicon.is_blocked(&cand.base) {
            continue;
        }
        let make = |segments: Vec<Segment>, specificity| Parse {
            token: normalized.to_string(),
            segments,
            inflection: cand.inflection,
            dedoubled: cand.dedoubled,
            specificity,
        };
        if let Some(id) = lexicon.lookup(&cand.base) {
            if lexicon.entry(id).kind.is_word() {
                parses.push(make(
                    vec![Segment {
                        text: cand.base.clone(),
                        role: Role::Stem,
                        entry: Some(id),
                    }],
                    Specificity::Exact,
                ));
            }
        }
        affixed_parses(&cand.base, lexicon, &mut |segments, specificity| {
            parses.push(make(segments, specificity))
        });
    }
    parses.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    parses.dedup();
    parses
}

/// Enumerates prefix? stem suffix{0,2} splits of `base` with at least one
/// affix, longest affix first at every position.
fn affixed_parses(base: &str, lexicon: &Lexicon, emit: &mut dyn FnMut(Vec<Segment>, Specificity)) {
    let mut prefix_options: Vec<Option<&crate::lexicon::AffixForm>> = vec![None];
    prefix_options.extend(
        lexicon
            .prefixes()
            .iter()
            .filter(|p| base.starts_with(p.form.as_str()))
            .map(Some),
    );
    for prefix in prefix_options {
        let rest = prefix.map_or(base, |p| &base[p.form.len()..]);
        let mut suffixes = Vec::with_capacity(MAX_SUFFIXES);
        suffix_splits(rest, lexicon, &mut suffixes, &mut |stem, suffixes| {
            if prefix.is_none() && suffixes.is_empty() {
                return;
            }
            if stem.is_empty() {
                return;
            }
            let stem_entry = lexicon.lookup(stem);
            let affix_ids = prefix
                .iter()
                .map(|p| p.entry)
                .chain(suffixes.iter().map(|s| s.entry));
            let specificity = if stem_entry.is_some() {
                Specificity::KnownStem
            } else if stem.chars().count() >= MIN_NOVEL_STEM
                && affix_ids.clone().any(|id| lexicon.entry(id).productive)
            {
                Specificity::NovelStem
            } else {
                return;
            };
            let mut segments = Vec::with_capacity(1 + suffixes.len() + 1);
            if let Some(p) = prefix {
                segments.push(Segment {
                    text: p.form.clone(),
                    role: Role::Prefix,
                    entry: Some(p.entry),
                });
            }
            segments.push(Segment {
                text: stem.to_string(),
                role: Role::Stem,
                entry: stem_entry,
            });
            // suffixes were collected outermost first
            for s in suffixes.iter().rev() {
                segments.push(Segment {
                    text: s.form.clone(),
                    role: Role::Suffix,
                    entry: Some(s.entry),
                });
            }
            emit(segments, specificity);
        });
    }
}

fn suffix_splits<'a>(
    rest: &str,
    lexicon: &'a Lexicon,
    stack: &mut Vec<&'a crate::lexicon::AffixForm>,
    visit: &mut dyn FnMut(&str, &[&'a crate::lexicon::AffixForm]),
) {
    visit(rest, stack);
    if stack.len() == MAX_SUFFIXES {
        return;
    }
    for s in lexicon.suffixes() {
        if let Some(inner) = rest.strip_suffix(s.form.as_str()) {
            if inner.is_empty() {
                continue;
            }
            stack.push(s);
            suffix_splits(inner, lexicon, stack, visit);
            stack.pop();
        }
    }
}

/// Best parse for a token, with the single-letter elongation fallback.
pub fn parse_token(token: &Token, lexicon: &Lexicon) -> Option<Parse> {
    if let Some(p) = decompose(&token.normalized, lexicon).into_iter().next() {
        return Some(p);
    }
    if token.elongated {
        let shorter = collapse_elongation_to_one(&token.raw);
        if shorter != token.normalized {
            return decompose(&shorter, lexicon).into_iter().next();
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub term: String,
    pub parse: Parse,
    pub categories: BTreeSet<Category>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub post_id: String,
    pub spans: Vec<Span>,
    pub token_count: usize,
    pub matched_count: usize,
}

pub fn annotate_text(id: &str, text: &str, lexicon: &Lexicon) -> Annotation {
    let tokens = tokenize(text);
    let spans: Vec<Span> = tokens
        .iter()
        .filter_map(|t| {
            let parse = parse_token(t, lexicon)?;
            Some(Span {
                start: t.start,
                end: t.end,
                term: t.normalized.clone(),
                categories: parse.categories(lexicon),
                parse,
            })
        })
        .collect();
    Annotation {
        post_id: id.to_string(),
        matched_count: spans.len(),
        token_count: tokens.len(),
        spans,
    }
}

pub fn annotate(post: &Post, lexicon: &Lexicon) -> Annotation {
    annotate_text(&post.id, &post.text, lexicon)
}

#[derive(Serialize)]
struct SegmentRecord<'a> {
    text: &'a str,
    role: Role,
    #[serde(skip_serializing_if = "Option::is_none")]
    entry: Option<&'a str>,
}

#[derive(Serialize)]
struct SpanRecord<'a> {
    start: usize,
    end: usize,
    term: &'a str,
    categories: &'a BTreeSet<Category>,
    segments: Vec<SegmentRecord<'a>>,
    inflection: &'a str,
}

#[derive(Serialize)]
struct AnnotationRecord<'a> {
    id: &'a str,
    spans: Vec<SpanRecord<'a>>,
    token_count: usize,
    matched_count: usize,
}

impl Annotation {
    /// One JSON object (no trailing newline) in the CLI output format.
    pub fn to_json(&self, lexicon: &Lexicon) -> String {
        let record = AnnotationRecord {
            id: &self.post_id,
            token_count: self.token_count,
            matched_count: self.matched_count,
            spans: self
                .spans
                .iter()
                .map(|s| SpanRecord {
                    start: s.start,
                    end: s.end,
                    term: &s.term,
                    categories: &s.categories,
                    inflection: s.parse.inflection,
                    segments: s
                        .parse
                        .segments
                        .iter()
                        .map(|seg| SegmentRecord {
                            text: &seg.text,
                            role: seg.role,
                            entry: seg.entry.map(|id| lexicon.entry(id).surface.as_str()),
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string(&record).expect("annotation serializes")
    }
}
