use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use cryptolex_core::corpus::{self, read_posts, Post, Strictness, BATCH_SIZE};
use cryptolex_core::discovery::{self, RankParams};
use cryptolex_core::lexicon::{self, Lexicon};
use cryptolex_core::morpho;
use cryptolex_core::trajectory::{self, SeriesFormat, UsageAccumulator};
use cryptolex_core::FrequencyTable;
use rayon::prelude::*;

use crate::args::*;
use crate::Failure;

type Result<T> = std::result::Result<T, Failure>;

const NO_WARN_VAR: &str = "CRYPTOLEX_NO_WARN";

pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Lexicon { action } => run_lexicon(action),
        Command::Annotate(a) => run_annotate(a),
        Command::Freq(a) => run_freq(a),
        Command::Discover(a) => run_discover(a),
        Command::Trajectory(a) => run_trajectory(a),
    }
}

fn content_warning() {
    if std::env::var(NO_WARN_VAR).as_deref() != Ok("1") {
        eprintln!(
            "content warning: lexicon terms and matched text include slurs and dehumanizing, \
             racist and misogynistic language (set {NO_WARN_VAR}=1 to hide this notice)"
        );
    }
}

fn open_input(path: &Path) -> anyhow::Result<Box<dyn BufRead + Send>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let file = File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(Box::new(BufReader::with_capacity(1 << 16, file)))
}

fn open_output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot write {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_all(path: Option<&Path>, text: &str) -> Result<()> {
    let mut out = open_output(path)?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn load_lexicon(src: &LexiconSource) -> anyhow::Result<Lexicon> {
    let lex = match &src.lexicon {
        Some(path) => lexicon::load_lexicon(open_input(path)?)
            .with_context(|| format!("malformed lexicon {}", path.display()))?,
        None => Lexicon::seed(),
    };
    let blocklist = match &src.blocklist {
        Some(path) => lexicon::parse_blocklist(open_input(path)?)?,
        None => Lexicon::seed_blocklist(),
    };
    Ok(lex.with_blocklist(blocklist))
}

fn strictness(scan: &ScanArgs) -> Strictness {
    if scan.strict {
        Strictness::Strict
    } else {
        Strictness::Skip
    }
}

fn workers(scan: &ScanArgs) -> Result<usize> {
    match scan.workers {
        Some(0) => Err(Failure::Usage("--workers must be at least 1".into())),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool")
}

fn report_skipped(tally: corpus::ReadTally) {
    if tally.malformed > 0 {
        eprintln!(
            "skipped {} malformed line(s) of {}",
            tally.malformed, tally.lines
        );
    }
}

fn run_lexicon(action: LexiconAction) -> Result<ExitCode> {
    match action {
        LexiconAction::Validate(a) => {
            let lex = load_lexicon(&a.source)?;
            let report = lexicon::validate(&lex);
            for f in &report.findings {
                eprintln!("{f}");
            }
            let errors = report.errors().count();
            eprintln!(
                "{} entries, {} error(s), {} warning(s)",
                lex.len(),
                errors,
                report.warnings().count()
            );
            Ok(if errors == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        LexiconAction::Stats(a) => {
            let lex = load_lexicon(&a.source)?;
            let stats = lexicon::category_stats(&lex)?;
            eprintln!("total {}", stats.total);
            write_all(a.output.as_deref(), &format!("{stats}\n"))?;
            Ok(ExitCode::SUCCESS)
        }
        LexiconAction::Export(a) => {
            let lex = load_lexicon(&a.source)?;
            write_all(a.output.as_deref(), &lexicon::export_tsv(&lex))?;
            Ok(ExitCode::SUCCESS)
        }
        LexiconAction::ImportTsv(a) => {
            let lex = lexicon::import_tsv(open_input(&a.input)?)?;
            write_all(a.output.as_deref(), &lexicon::write_jsonl(&lex))?;
            Ok(ExitCode::SUCCESS)
        }
        LexiconAction::ImportSheet(a) => {
            let lex = discovery::import_sheet(open_input(&a.input)?)?;
            eprintln!("imported {} entries", lex.len());
            write_all(a.output.as_deref(), &lexicon::write_jsonl(&lex))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Batches of posts in file order; `--plain` turns each line into a post.
fn post_batches(
    input: Box<dyn BufRead + Send>,
    strictness: Strictness,
    plain: bool,
    mut each: impl FnMut(Vec<Post>) -> Result<()>,
) -> Result<corpus::ReadTally> {
    let mut batch = Vec::with_capacity(BATCH_SIZE);
    let tally = if plain {
        let mut lines = 0;
        for line in input.lines() {
            lines += 1;
            batch.push(Post {
                id: lines.to_string(),
                user: String::new(),
                forum: String::new(),
                created_utc: 0,
                text: line?,
                parent_id: None,
            });
            if batch.len() == BATCH_SIZE {
                each(std::mem::take(&mut batch))?;
            }
        }
        corpus::ReadTally {
            lines,
            malformed: 0,
        }
    } else {
        let mut reader = read_posts(input, strictness);
        for post in reader.by_ref() {
            batch.push(post?);
            if batch.len() == BATCH_SIZE {
                each(std::mem::take(&mut batch))?;
            }
        }
        reader.tally()
    };
    if !batch.is_empty() {
        each(batch)?;
    }
    Ok(tally)
}

fn run_annotate(a: AnnotateArgs) -> Result<ExitCode> {
    content_warning();
    let lex = load_lexicon(&a.lexicon)?;
    let pool = pool(workers(&a.scan)?);
    let input = open_input(&a.scan.input)?;
    let mut out = open_output(a.output.as_deref())?;
    let (mut posts, mut tokens, mut matched) = (0u64, 0u64, 0u64);
    let tally = post_batches(input, strictness(&a.scan), a.plain, |batch| {
        let annotations: Vec<morpho::Annotation> = pool.install(|| {
            batch
                .par_iter()
                .map(|p| morpho::annotate(p, &lex))
                .collect()
        });
        for ann in annotations {
            posts += 1;
            tokens += ann.token_count as u64;
            matched += ann.matched_count as u64;
            out.write_all(ann.to_json(&lex).as_bytes())?;
            out.write_all(b"\n")?;
        }
        Ok(())
    })?;
    out.flush()?;
    report_skipped(tally);
    let rate = if tokens == 0 {
        0.0
    } else {
        matched as f64 / tokens as f64
    };
    eprintln!("posts {posts} tokens {tokens} matched {matched} rate {rate:.6}");
    Ok(ExitCode::SUCCESS)
}

fn scan_table(
    path: &Path,
    scan: &ScanArgs,
    lex: &Lexicon,
    affixes: bool,
) -> Result<(FrequencyTable, corpus::ReadTally)> {
    let input = open_input(path)?;
    let (strictness, workers) = (strictness(scan), workers(scan)?);
    let result = if affixes {
        corpus::scan(input, strictness, workers, |p, t| {
            corpus::count_affixes(p, lex, t)
        })
    } else {
        corpus::scan(input, strictness, workers, corpus::count_tokens)
    };
    result
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Data)
}

fn run_freq(a: FreqArgs) -> Result<ExitCode> {
    let lex = load_lexicon(&a.lexicon)?;
    let (table, tally) = scan_table(&a.scan.input, &a.scan, &lex, a.affixes)?;
    report_skipped(tally);
    eprintln!(
        "{} posts, {} tokens, {} types",
        table.doc_count(),
        table.total_tokens(),
        table.vocabulary_size()
    );
    write_all(a.output.as_deref(), &table.to_canonical_tsv())?;
    Ok(ExitCode::SUCCESS)
}

fn run_discover(a: DiscoverArgs) -> Result<ExitCode> {
    if !(a.alpha.is_finite() && a.alpha > 0.0) {
        return Err(Failure::Usage(format!(
            "--alpha must be > 0, got {}",
            a.alpha
        )));
    }
    if a.top_k == 0 {
        return Err(Failure::Usage("--top-k must be at least 1".into()));
    }
    if a.min_count == 0 {
        return Err(Failure::Usage("--min-count must be at least 1".into()));
    }
    if a.format == Format::Csv {
        return Err(Failure::Usage("discover writes tsv or jsonl".into()));
    }
    let lex = load_lexicon(&a.lexicon)?;
    let stoplist = match &a.stoplist {
        Some(p) => lexicon::parse_blocklist(open_input(p)?)?,
        None => BTreeSet::new(),
    };
    let (target, t_tally) = scan_table(&a.scan.input, &a.scan, &lex, a.affixes)?;
    let (background, b_tally) = scan_table(&a.background, &a.scan, &lex, a.affixes)?;
    report_skipped(t_tally);
    report_skipped(b_tally);
    let rows = discovery::log_ratio_rank(
        &target,
        &background,
        RankParams {
            alpha: a.alpha,
            top_k: a.top_k,
            min_count: a.min_count,
        },
    )?;
    let ranked = rows.len();
    let rows = discovery::filter_stoplist(rows, &stoplist);
    eprintln!("{} candidates, {} after stoplist", ranked, rows.len());
    let text = if a.sheet {
        discovery::review_sheet(&rows)
    } else if a.format == Format::Jsonl {
        discovery::ranked_jsonl(&rows)
    } else {
        discovery::ranked_tsv(&rows)
    };
    write_all(a.output.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn run_trajectory(a: TrajectoryArgs) -> Result<ExitCode> {
    let format = match a.format {
        Format::Csv => SeriesFormat::Csv,
        Format::Jsonl => SeriesFormat::Jsonl,
        Format::Tsv => return Err(Failure::Usage("trajectory writes csv or jsonl".into())),
    };
    if a.min_gap_weeks == 0 {
        return Err(Failure::Usage("--min-gap-weeks must be at least 1".into()));
    }
    content_warning();
    let lex = load_lexicon(&a.lexicon)?;
    let pool = pool(workers(&a.scan)?);
    let input = open_input(&a.scan.input)?;
    let mut acc = UsageAccumulator::new();
    let mut seen = 0usize;
    let tally = post_batches(input, strictness(&a.scan), false, |mut batch| {
        seen += batch.len();
        if let Some(user) = &a.user {
            batch.retain(|p| &p.user == user);
        }
        let counts: Vec<(usize, usize)> = pool.install(|| {
            batch
                .par_iter()
                .map(|p| {
                    let ann = morpho::annotate(p, &lex);
                    (ann.token_count, ann.matched_count)
                })
                .collect()
        });
        for (p, (tokens, matched)) in batch.iter().zip(counts) {
            acc.add_counts(&p.user, p.iso_week(), tokens as u64, matched as u64);
        }
        Ok(())
    })?;
    report_skipped(tally);
    if seen == 0 {
        return Err(Failure::Data(anyhow!("empty corpus")));
    }
    let series = match &a.user {
        Some(user) => vec![acc
            .series(user)
            .ok_or_else(|| anyhow!("user not found: {user}"))?],
        None => acc.all_series(),
    };
    eprintln!(
        "{} user(s), {} active week(s)",
        series.len(),
        series.iter().map(|s| s.buckets.len()).sum::<usize>()
    );
    let text = if a.gaps {
        let reports = series
            .iter()
            .map(|s| trajectory::detect_gaps(s, a.min_gap_weeks))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        trajectory::export_gaps(&reports, format)
    } else {
        trajectory::export_series(&series, format)
    };
    write_all(a.output.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}
