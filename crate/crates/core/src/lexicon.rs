//! Term inventory: entries, category codes, lookup indexes and the
//! ordinary-English blocklist.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

static SEED_LEXICON: &str = include_str!("../data/seed_lexicon.jsonl");
static SEED_BLOCKLIST: &str = include_str!("../data/blocklist.txt");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate surface {surface:?}")]
    DuplicateSurface { line: usize, surface: String },
    #[error("line {line}: form {form:?} collides with entry {other:?}")]
    VariantCollision {
        line: usize,
        form: String,
        other: String,
    },
    #[error("no entries")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Root,
    Prefix,
    Suffix,
    LexicalizedBlend,
    Standalone,
}

impl EntryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntryKind::Root => "root",
            EntryKind::Prefix => "prefix",
            EntryKind::Suffix => "suffix",
            EntryKind::LexicalizedBlend => "lexicalized_blend",
            EntryKind::Standalone => "standalone",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "root" => EntryKind::Root,
            "prefix" => EntryKind::Prefix,
            "suffix" => EntryKind::Suffix,
            "lexicalized_blend" => EntryKind::LexicalizedBlend,
            "standalone" => EntryKind::Standalone,
            _ => return None,
        })
    }

    pub fn is_affix(self) -> bool {
        matches!(self, EntryKind::Prefix | EntryKind::Suffix)
    }

    /// Kinds that match a whole token on their own.
    pub fn is_word(self) -> bool {
        !self.is_affix()
    }
}

impl fmt::Display for EntryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The three thematic codes. Declaration order is the reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Dehumanizing,
    Racist,
    Misogynistic,
}

impl Category {
    pub const ALL: [Category; 3] = [
        Category::Dehumanizing,
        Category::Racist,
        Category::Misogynistic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Dehumanizing => "dehumanizing",
            Category::Racist => "racist",
            Category::Misogynistic => "misogynistic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Category::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconEntry {
    pub surface: String,
    pub kind: EntryKind,
    pub definition: String,
    pub categories: BTreeSet<Category>,
    #[serde(default)]
    pub productive: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source: String,
}

impl LexiconEntry {
    pub fn new(surface: impl Into<String>, kind: EntryKind) -> Self {
        LexiconEntry {
            surface: surface.into(),
            kind,
            definition: String::new(),
            categories: BTreeSet::new(),
            productive: false,
            variants: Vec::new(),
            source: String::new(),
        }
    }

    /// Surface followed by variants.
    pub fn forms(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.surface.as_str()).chain(self.variants.iter().map(String::as_str))
    }
}

/// Index of an entry inside its [`Lexicon`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntryId(pub u32);

impl EntryId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One spelling of an affix, linked to its entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffixForm {
    pub form: String,
    pub entry: EntryId,
}

/// Immutable after construction; share freely across threads.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
    blocklist: BTreeSet<String>,
    by_form: HashMap<String, EntryId>,
    prefixes: Vec<AffixForm>,
    suffixes: Vec<AffixForm>,
}

impl PartialEq for Lexicon {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries && self.blocklist == other.blocklist
    }
}

impl Lexicon {
    /// Builds indexes over `entries`. Fails on a repeated surface or any
    /// form (surface or variant) shared between two entries. Line numbers in
    /// errors are 1-based entry positions.
    pub fn from_entries(entries: Vec<LexiconEntry>) -> Result<Self, LexiconError> {
        Self::build(entries.into_iter().enumerate().map(|(i, e)| (i + 1, e)))
    }

    fn build(
        entries: impl IntoIterator<Item = (usize, LexiconEntry)>,
    ) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::default();
        for (line, entry) in entries {
            let id = EntryId(lex.entries.len() as u32);
            if let Some(&other) = lex.by_form.get(&entry.surface) {
                let other = &lex.entries[other.index()];
                return Err(if other.surface == entry.surface {
                    LexiconError::DuplicateSurface {
                        line,
                        surface: entry.surface,
                    }
                } else {
                    LexiconError::VariantCollision {
                        line,
                        form: entry.surface.clone(),
                        other: other.surface.clone(),
                    }
                });
            }
            lex.by_form.insert(entry.surface.clone(), id);
            for variant in &entry.variants {
                if let Some(&other) = lex.by_form.get(variant) {
                    let other = lex
                        .entries
                        .get(other.index())
                        .map_or(&entry.surface, |e| &e.surface);
                    return Err(LexiconError::VariantCollision {
                        line,
                        form: variant.clone(),
                        other: other.clone(),
                    });
                }
                lex.by_form.insert(variant.clone(), id);
            }
            if entry.kind.is_affix() {
                let list = match entry.kind {
                    EntryKind::Prefix => &mut lex.prefixes,
                    _ => &mut lex.suffixes,
                };
                for form in entry.forms() {
                    list.push(AffixForm {
                        form: form.to_string(),
                        entry: id,
                    });
                }
            }
            lex.entries.push(entry);
        }
        for list in [&mut lex.prefixes, &mut lex.suffixes] {
            list.sort_by(|a, b| {
                b.form
                    .chars()
                    .count()
                    .cmp(&a.form.chars().count())
                    .then_with(|| a.form.cmp(&b.form))
            });
        }
        Ok(lex)
    }

    /// The lexicon and blocklist bundled with the crate.
    pub fn seed() -> Self {
        let mut lex = load_lexicon(SEED_LEXICON.as_bytes()).expect("bundled seed lexicon is valid");
        lex.blocklist = parse_blocklist(SEED_BLOCKLIST.as_bytes()).expect("bundled blocklist");
        lex
    }

    pub fn seed_blocklist() -> BTreeSet<String> {
        parse_blocklist(SEED_BLOCKLIST.as_bytes()).expect("bundled blocklist")
    }

    pub fn with_blocklist(mut self, blocklist: BTreeSet<String>) -> Self {
        self.blocklist = blocklist;
        self
    }

    /// Returns a new lexicon with `entry` appended.
    pub fn with_entry(&self, entry: LexiconEntry) -> Result<Self, LexiconError> {
        let mut entries = self.entries.clone();
        entries.push(entry);
        Ok(Self::from_entries(entries)?.with_blocklist(self.blocklist.clone()))
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn entry(&self, id: EntryId) -> &LexiconEntry {
        &self.entries[id.index()]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn blocklist(&self) -> &BTreeSet<String> {
        &self.blocklist
    }

    pub fn is_blocked(&self, word: &str) -> bool {
        self.blocklist.contains(word)
    }

    /// Entry owning `form` as its surface or as a variant.
    pub fn lookup(&self, form: &str) -> Option<EntryId> {
        self.by_form.get(form).copied()
    }

    /// Prefix forms, longest first.
    pub fn prefixes(&self) -> &[AffixForm] {
        &self.prefixes
    }

    /// Suffix forms, longest first.
    pub fn suffixes(&self) -> &[AffixForm] {
        &self.suffixes
    }
}

/// Reads the JSON Lines lexicon format. Blank lines are ignored.
pub fn load_lexicon<R: BufRead>(source: R) -> Result<Lexicon, LexiconError> {
    let mut entries = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let entry: LexiconEntry =
            serde_json::from_str(&line).map_err(|e| LexiconError::Malformed {
                line: lineno,
                message: e.to_string(),
            })?;
        entries.push((lineno, entry));
    }
    Lexicon::build(entries)
}

/// One entry per line, in entry order.
pub fn write_jsonl(lexicon: &Lexicon) -> String {
    let mut out = String::new();
    for entry in lexicon.entries() {
        out.push_str(&serde_json::to_string(entry).expect("entry serializes"));
        out.push('\n');
    }
    out
}

/// Plain word list: one lowercase word per line, `#` starts a comment.
pub fn parse_blocklist<R: BufRead>(source: R) -> std::io::Result<BTreeSet<String>> {
    let mut words = BTreeSet::new();
    for line in source.lines() {
        let line = line?;
        let word = line.split('#').next().unwrap_or("").trim();
        if !word.is_empty() {
            words.insert(word.to_lowercase());
        }
    }
    Ok(words)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub severity: Severity,
    pub surface: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}: {}", self.surface, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Warning)
    }

    pub fn is_clean(&self) -> bool {
        self.errors().next().is_none()
    }
}

fn is_normal_form(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(char::is_alphanumeric)
        && crate::morpho::normalize_token(s).0 == s
}

/// Checks entry-level invariants that construction does not enforce.
pub fn validate(lexicon: &Lexicon) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut push = |severity, surface: &str, message: String| {
        report.findings.push(Finding {
            severity,
            surface: surface.to_string(),
            message,
        })
    };
    for entry in lexicon.entries() {
        let s = entry.surface.as_str();
        if !is_normal_form(s) {
            push(
                Severity::Error,
                s,
                "surface must be non-empty lowercase letters/digits in normalized form".into(),
            );
        }
        if entry.productive && !entry.kind.is_affix() {
            push(
                Severity::Error,
                s,
                format!(
                    "productive is only meaningful for affixes, not {}",
                    entry.kind
                ),
            );
        }
        let mut seen = BTreeSet::new();
        for v in &entry.variants {
            if v == s {
                push(Severity::Error, s, "variant repeats the surface".into());
            } else if !seen.insert(v) {
                push(Severity::Error, s, format!("variant {v:?} listed twice"));
            }
            if !is_normal_form(v) {
                push(
                    Severity::Error,
                    s,
                    format!("variant {v:?} is not normalized"),
                );
            }
        }
        if lexicon.is_blocked(s) {
            push(Severity::Error, s, "surface is on the blocklist".into());
        }
        if entry.categories.is_empty() {
            push(Severity::Warning, s, "no category assigned".into());
        }
        if entry.productive && entry.definition.trim().is_empty() {
            push(
                Severity::Warning,
                s,
                "productive affix has no definition".into(),
            );
        }
    }
    report
}

/// A percentage held in tenths of a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Tenths(pub u32);

impl Tenths {
    /// `100 * count / total` rounded half-up to one decimal, in integers.
    pub fn percent(count: usize, total: usize) -> Self {
        let (count, total) = (count as u64, total as u64);
        Tenths(((2000 * count + total) / (2 * total)) as u32)
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 10.0
    }
}

impl fmt::Display for Tenths {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.0 / 10, self.0 % 10)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryCount {
    pub category: Category,
    pub count: usize,
    pub percent: Tenths,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryStats {
    pub total: usize,
    pub per_category: Vec<CategoryCount>,
}

impl CategoryStats {
    pub fn get(&self, category: Category) -> &CategoryCount {
        self.per_category
            .iter()
            .find(|c| c.category == category)
            .expect("every category is reported")
    }
}

impl fmt::Display for CategoryStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.per_category.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{} {} ({}%)", c.category, c.count, c.percent)?;
        }
        Ok(())
    }
}

pub fn category_stats(lexicon: &Lexicon) -> Result<CategoryStats, LexiconError> {
    let total = lexicon.len();
    if total == 0 {
        return Err(LexiconError::Empty);
    }
    let per_category = Category::ALL
        .into_iter()
        .map(|category| {
            let count = lexicon
                .entries()
                .iter()
                .filter(|e| e.categories.contains(&category))
                .count();
            CategoryCount {
                category,
                count,
                percent: Tenths::percent(count, total),
            }
        })
        .collect();
    Ok(CategoryStats {
        total,
        per_category,
    })
}

pub const TSV_HEADER: &str = "surface\tkind\tproductive\tcategories\tvariants\tdefinition";

fn tsv_cell(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

fn join_categories(categories: &BTreeSet<Category>) -> String {
    let mut names: Vec<&str> = categories.iter().map(|c| c.as_str()).collect();
    names.sort_unstable();
    names.join(",")
}

pub fn export_tsv(lexicon: &Lexicon) -> String {
    let mut out = String::from(TSV_HEADER);
    out.push('\n');
    for e in lexicon.entries() {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            tsv_cell(&e.surface),
            e.kind,
            e.productive,
            join_categories(&e.categories),
            tsv_cell(&e.variants.join(",")),
            tsv_cell(&e.definition),
        ));
    }
    out
}

fn split_list(cell: &str) -> impl Iterator<Item = &str> {
    cell.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// Reads the output of [`export_tsv`] back into entries. The `source`
/// field is not part of the TSV and comes back empty.
pub fn import_tsv<R: BufRead>(source: R) -> Result<Lexicon, LexiconError> {
    let mut entries = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if lineno == 1 {
            if line != TSV_HEADER {
                return Err(LexiconError::Malformed {
                    line: 1,
                    message: "unexpected header".into(),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let bad = |message: String| LexiconError::Malformed {
            line: lineno,
            message,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 6 {
            return Err(bad(format!("expected 6 columns, found {}", cols.len())));
        }
        let kind =
            EntryKind::parse(cols[1]).ok_or_else(|| bad(format!("unknown kind {:?}", cols[1])))?;
        let productive = cols[2]
            .parse::<bool>()
            .map_err(|_| bad(format!("bad productive flag {:?}", cols[2])))?;
        let categories = split_list(cols[3])
            .map(|c| Category::parse(c).ok_or_else(|| bad(format!("unknown category {c:?}"))))
            .collect::<Result<_, _>>()?;
        entries.push((
            lineno,
            LexiconEntry {
                surface: cols[0].to_string(),
                kind,
                definition: cols[5].to_string(),
                categories,
                productive,
                variants: split_list(cols[4]).map(str::to_string).collect(),
                source: String::new(),
            },
        ));
    }
    Lexicon::build(entries)
}
