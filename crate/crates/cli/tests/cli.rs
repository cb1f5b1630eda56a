use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use cryptolex_core::corpus::Post;
use cryptolex_core::synth::{self, scripted_user, SynthConfig, WeekScript};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/fixtures");

fn cryptolex(args: &[&str]) -> Output {
    cryptolex_stdin(args, "")
}

fn cryptolex_stdin(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_cryptolex"))
        .args(args)
        .env("CRYPTOLEX_NO_WARN", "1")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn cryptolex");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_posts(dir: &Path, name: &str, posts: &[Post]) -> PathBuf {
    let path = dir.join(name);
    let mut text = String::new();
    for p in posts {
        text.push_str(&serde_json::to_string(p).unwrap());
        text.push('\n');
    }
    fs::write(&path, text).unwrap();
    path
}

fn text_post(id: usize, text: &str) -> Post {
    Post {
        id: id.to_string(),
        user: "u".into(),
        forum: "f".into(),
        created_utc: 1_600_000_000,
        text: text.into(),
        parent_id: None,
    }
}

fn week(week_offset: u32, tokens: u32, matched: u32) -> WeekScript {
    WeekScript {
        week_offset,
        posts: 2,
        tokens,
        matched,
    }
}

#[test]
fn version_and_help() {
    let v = cryptolex(&["--version"]);
    assert_eq!(code(&v), 0);
    assert!(stdout(&v).starts_with("cryptolex "));
    let h = cryptolex(&["--help"]);
    assert_eq!(code(&h), 0);
    for sub in ["lexicon", "annotate", "freq", "discover", "trajectory"] {
        assert!(stdout(&h).contains(sub), "{sub}");
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&cryptolex(&["annotate"])), 2);
    assert_eq!(code(&cryptolex(&["frobnicate"])), 2);
    assert_eq!(code(&cryptolex(&["trajectory", "--input", "-"])), 2);
    let o = cryptolex(&[
        "discover",
        "--input",
        "-",
        "--background",
        "-",
        "--alpha",
        "0",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn stats_on_sixty_four_entry_fixture() {
    let path = format!("{FIXTURES}/fixture64.jsonl");
    let o = cryptolex(&["lexicon", "stats", "--lexicon", &path]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        stdout(&o).trim_end(),
        "dehumanizing 46 (71.9%) racist 17 (26.6%) misogynistic 17 (26.6%)"
    );
}

#[test]
fn seed_lexicon_validates() {
    let o = cryptolex(&["lexicon", "validate"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn empty_lexicon_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.jsonl");
    fs::write(&path, "").unwrap();
    let o = cryptolex(&["lexicon", "stats", "--lexicon", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no entries"));
}

#[test]
fn export_then_import_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = dir.path().join("seed.tsv");
    let o = cryptolex(&["lexicon", "export", "--output", tsv.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let o = cryptolex(&["lexicon", "import-tsv", "--input", tsv.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 15);
}

#[test]
fn review_sheet_imports_to_coded_lexicon() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("coded.jsonl");
    let sheet = format!("{FIXTURES}/sheet64.tsv");
    let o = cryptolex(&[
        "lexicon",
        "import-sheet",
        "--input",
        &sheet,
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let o = cryptolex(&["lexicon", "stats", "--lexicon", out.to_str().unwrap()]);
    assert_eq!(
        stdout(&o).trim_end(),
        "dehumanizing 46 (71.9%) racist 17 (26.6%) misogynistic 17 (26.6%)"
    );
}

#[test]
fn plain_annotation_of_example_sentence() {
    let text = "Finally, a cumskin acknowledges that JBW is a thing though the guy in the video \
                is most definitely betabuxxing or cuckmaxxing bc toilets don't voluntarily go for them.\n";
    let o = cryptolex_stdin(&["annotate", "--input", "-", "--plain"], text);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 1);
    let v: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(v["id"], "1");
    let terms: Vec<&str> = v["spans"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["term"].as_str().unwrap())
        .collect();
    assert_eq!(
        terms,
        ["cumskin", "jbw", "betabuxxing", "cuckmaxxing", "toilets"]
    );
    assert_eq!(v["matched_count"], 5);
}

#[test]
fn empty_input_gives_zero_summary() {
    let o = cryptolex_stdin(&["annotate", "--input", "-"], "");
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("posts 0 tokens 0 matched 0"), "{err}");
}

#[test]
fn strict_mode_rejects_malformed_lines() {
    let input = "{\"id\":\"1\",\"user\":\"u\",\"forum\":\"f\",\"created_utc\":0,\"text\":\"hi\"}\n{not json\n";
    assert_eq!(code(&cryptolex_stdin(&["freq", "--input", "-"], input)), 0);
    assert_eq!(
        code(&cryptolex_stdin(
            &["freq", "--input", "-", "--strict"],
            input
        )),
        1
    );
}

#[test]
fn identical_corpora_rank_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let posts: Vec<Post> = synth::posts(SynthConfig {
        posts: 300,
        ..Default::default()
    })
    .collect();
    let a = write_posts(dir.path(), "a.jsonl", &posts);
    let o = cryptolex(&[
        "discover",
        "--input",
        a.to_str().unwrap(),
        "--background",
        a.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "token\ttarget_count\tbackground_count\ttarget_rank\tlog_ratio"
    );
    let mut n = 0;
    for l in lines {
        assert!(l.ends_with("\t0.0000"), "{l}");
        n += 1;
    }
    assert!(n > 10);
}

#[test]
fn stoplist_removes_tokens() {
    let dir = tempfile::tempdir().unwrap();
    let target: Vec<Post> = (0..20)
        .map(|i| text_post(i, "complete ricecel cope the"))
        .collect();
    let background: Vec<Post> = (0..20)
        .map(|i| text_post(i, "the the cope table"))
        .collect();
    let t = write_posts(dir.path(), "t.jsonl", &target);
    let b = write_posts(dir.path(), "b.jsonl", &background);
    let stop = dir.path().join("stop.txt");
    fs::write(&stop, "# generic words\ncomplete\n").unwrap();
    let args = [
        "discover",
        "--input",
        t.to_str().unwrap(),
        "--background",
        b.to_str().unwrap(),
    ];
    let plain = stdout(&cryptolex(&args));
    assert!(plain.lines().any(|l| l.starts_with("complete\t")));
    let mut with_stop = args.to_vec();
    with_stop.extend(["--stoplist", stop.to_str().unwrap()]);
    let filtered = stdout(&cryptolex(&with_stop));
    assert!(!filtered.lines().any(|l| l.starts_with("complete\t")));
    assert!(filtered.lines().nth(1).unwrap().starts_with("ricecel\t"));
}

#[test]
fn discover_sheet_and_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let target: Vec<Post> = (0..10).map(|i| text_post(i, "ricecel cope")).collect();
    let t = write_posts(dir.path(), "t.jsonl", &target);
    let base = [
        "discover",
        "--input",
        t.to_str().unwrap(),
        "--background",
        t.to_str().unwrap(),
    ];
    let mut sheet = base.to_vec();
    sheet.push("--sheet");
    let out = stdout(&cryptolex(&sheet));
    assert!(out.starts_with("token\ttarget_count\tbackground_count\tlog_ratio\tdefinition\t"));
    let mut jsonl = base.to_vec();
    jsonl.extend(["--format", "jsonl"]);
    let out = stdout(&cryptolex(&jsonl));
    assert_eq!(out.lines().count(), 2);
    for l in out.lines() {
        serde_json::from_str::<serde_json::Value>(l).unwrap();
    }
    let mut csv = base.to_vec();
    csv.extend(["--format", "csv"]);
    assert_eq!(code(&cryptolex(&csv)), 2);
}

fn narrative(dir: &Path) -> PathBuf {
    let mut script: Vec<WeekScript> = (0..4).map(|i| week(i, 20, 1)).collect();
    script.extend((10..14).map(|i| week(i, 20, 4)));
    let mut posts = scripted_user("bob", &script);
    posts.extend(scripted_user("carol", &[week(0, 10, 1), week(1, 10, 2)]));
    posts.extend(scripted_user("dave", &[week(3, 5, 0)]));
    write_posts(dir, "narrative.jsonl", &posts)
}

#[test]
fn trajectory_gap_escalation() {
    let dir = tempfile::tempdir().unwrap();
    let input = narrative(dir.path());
    let o = cryptolex(&[
        "trajectory",
        "--input",
        input.to_str().unwrap(),
        "--user",
        "bob",
        "--gaps",
    ]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(
        lines[0],
        "user,last_active_week,next_active_week,gap_weeks,pre_rate,post_rate,escalation"
    );
    assert_eq!(lines.len(), 2);
    let cols: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&cols[..4], ["bob", "2020-W05", "2020-W12", "6"]);
    assert!((cols[6].parse::<f64>().unwrap() - 4.0).abs() < 1e-9);
}

#[test]
fn trajectory_unknown_user_and_all_users() {
    let dir = tempfile::tempdir().unwrap();
    let input = narrative(dir.path());
    let path = input.to_str().unwrap();
    let o = cryptolex(&["trajectory", "--input", path, "--user", "nobody"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("user not found"));

    let o = cryptolex(&["trajectory", "--input", path, "--all"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let users: std::collections::BTreeSet<&str> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(
        users.into_iter().collect::<Vec<_>>(),
        ["bob", "carol", "dave"]
    );
    assert_eq!(out.lines().count(), 1 + 8 + 2 + 1);

    let o = cryptolex(&["trajectory", "--input", path, "--all", "--format", "jsonl"]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        code(&cryptolex(&[
            "trajectory",
            "--input",
            path,
            "--all",
            "--format",
            "tsv"
        ])),
        2
    );
    assert_eq!(
        code(&cryptolex_stdin(
            &["trajectory", "--input", "-", "--all"],
            ""
        )),
        1
    );
}

#[test]
fn output_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let posts: Vec<Post> = synth::posts(SynthConfig {
        posts: 9_000,
        users: 40,
        ..Default::default()
    })
    .collect();
    let input = write_posts(dir.path(), "synth.jsonl", &posts);
    let path = input.to_str().unwrap();
    for cmd in [
        vec!["freq", "--input", path],
        vec!["freq", "--input", path, "--affixes"],
        vec!["annotate", "--input", path],
        vec!["trajectory", "--input", path, "--all"],
    ] {
        let runs: Vec<Vec<u8>> = ["1", "3", "8"]
            .iter()
            .map(|w| {
                let mut args = cmd.clone();
                args.extend(["--workers", w]);
                let o = cryptolex(&args);
                assert_eq!(code(&o), 0);
                o.stdout
            })
            .collect();
        assert!(!runs[0].is_empty());
        assert!(runs.windows(2).all(|w| w[0] == w[1]), "{cmd:?}");
    }
}
