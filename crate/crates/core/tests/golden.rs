use std::collections::BTreeMap;

use cryptolex_core::corpus::{build_affix_table, Post};
use cryptolex_core::lexicon::{EntryKind, Lexicon};
use cryptolex_core::morpho::{annotate_text, decompose, Specificity};

const GOLDEN: &str = include_str!("fixtures/golden_parses.tsv");

fn golden_rows() -> Vec<(&'static str, &'static str, Specificity)> {
    GOLDEN
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| {
            let cols: Vec<&str> = l.split('\t').collect();
            let tier = match cols[2] {
                "exact" => Specificity::Exact,
                "known_stem" => Specificity::KnownStem,
                "novel_stem" => Specificity::NovelStem,
                other => panic!("bad tier {other}"),
            };
            (cols[0], cols[1], tier)
        })
        .collect()
}

#[test]
fn golden_top_parses() {
    let lex = Lexicon::seed();
    let rows = golden_rows();
    assert_eq!(rows.len(), 29);
    for (token, expected, tier) in rows {
        let parses = decompose(token, &lex);
        let top = parses
            .first()
            .unwrap_or_else(|| panic!("{token}: no parse"));
        assert_eq!(top.describe(), expected, "{token}");
        assert_eq!(top.specificity, tier, "{token}");
        assert_eq!(top.reconstruct(), token);
    }
}

#[test]
fn truncation_blends_are_lexicalized() {
    let lex = Lexicon::seed();
    for token in ["chaddam", "chadrone", "chadriquez"] {
        let top = &decompose(token, &lex)[0];
        let id = top.stem().entry.unwrap();
        assert_eq!(lex.entry(id).kind, EntryKind::LexicalizedBlend);
    }
}

#[test]
fn dedoubling_recorded_for_betabuxxing() {
    let top = &decompose("betabuxxing", &Lexicon::seed())[0];
    assert!(top.dedoubled);
    assert_eq!(top.inflection, "ing");
}

#[test]
fn affix_tally_over_golden_table() {
    let lex = Lexicon::seed();
    let posts: Vec<Post> = golden_rows()
        .into_iter()
        .map(|(token, _, _)| Post {
            id: token.into(),
            user: "u".into(),
            forum: "f".into(),
            created_utc: 0,
            text: token.into(),
            parent_id: None,
        })
        .collect();
    let table = build_affix_table(&posts, &lex);
    let got: BTreeMap<&str, u64> = table.iter().collect();
    // tallied by hand from the golden table
    let expected: BTreeMap<&str, u64> = [("cel", 16), ("chad", 1), ("maxx", 3), ("mog", 5)].into();
    assert_eq!(got, expected);
}

#[test]
fn coining_thread_annotates_every_blend() {
    let lex = Lexicon::seed();
    let thread = "we should start calling latinos beancels or tacocels. we dont have a proper \
                  epiteht for latinocels yet. Sushicel, Kimchicel, Tacocel, Schwaramacel, etc. \
                  Chollocel, Burritocel, Churrocel, Spiccel";
    let a = annotate_text("t", thread, &lex);
    let terms: Vec<&str> = a.spans.iter().map(|s| s.term.as_str()).collect();
    assert_eq!(
        terms,
        [
            "beancels",
            "tacocels",
            "latinocels",
            "sushicel",
            "kimchicel",
            "tacocel",
            "schwaramacel",
            "chollocel",
            "burritocel",
            "churrocel",
            "spiccel"
        ]
    );
}

#[test]
fn elongated_mogging_sentence() {
    let lex = Lexicon::seed();
    let text = "These Chinese students at Universities are absolutely moggging the shit out of local born Ricecels.";
    let a = annotate_text("r", text, &lex);
    let terms: Vec<&str> = a.spans.iter().map(|s| s.term.as_str()).collect();
    assert_eq!(terms, ["ricecels"]);
}
