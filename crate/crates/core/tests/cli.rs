use std::path::{Path, PathBuf};

use esep::cli::{run, Record, EXIT_FALSIFIED, EXIT_OK, EXIT_PRECONDITION, EXIT_USAGE};
use esep::fixtures;
use esep::oracle::{random_model, ModelGenSpec};
use tempfile::TempDir;

fn esep(args: &[&str]) -> (i32, String) {
    run(std::iter::once("esep").chain(args.iter().copied()))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const VIOLATING_IV: &str = "Z,X,Y,p\n0,0,0,0.5\n1,0,1,0.5\n";
const CORRELATED_UC: &str = "X Y Z p\n0 0 0 0.5\n0 1 1 0.5\n";

fn margin_text(graph: esep::Dag, seed: u64) -> String {
    random_model(&ModelGenSpec::new(graph, seed)).unwrap().observed_margin().unwrap().to_text()
}

/// Parses every line as a record and checks that re-emitting reproduces it.
fn round_trip(text: &str) -> Vec<Record> {
    text.lines()
        .map(|line| {
            let r: Record = serde_json::from_str(line).unwrap_or_else(|e| panic!("{e}: {line}"));
            assert_eq!(serde_json::to_string(&r).unwrap(), line);
            let again: Record = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
            assert_eq!(again, r);
            r
        })
        .collect()
}

#[test]
fn iv_score_of_violating_table() {
    let dir = TempDir::new().unwrap();
    let t = write(&dir, "t.csv", VIOLATING_IV);
    let (code, text) = esep(&["iv", s(&t)]);
    assert_eq!(code, EXIT_FALSIFIED);
    assert!(text.starts_with("instrumental inequality score: 2.0000\n"), "{text}");
}

#[test]
fn check_exit_codes() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "iv.txt", fixtures::IV);
    let bad = write(&dir, "bad.csv", VIOLATING_IV);
    let (code, text) = esep(&["check", s(&g), s(&bad)]);
    assert_eq!(code, EXIT_FALSIFIED, "{text}");
    assert!(text.contains("INFEASIBLE"));

    let good = write(&dir, "good.csv", &margin_text(fixtures::iv_graph(), 3));
    assert_eq!(esep(&["check", s(&g), s(&good)]).0, EXIT_OK);
    assert_eq!(esep(&["check", s(&g), s(&good), "--grid", "32"]).0, EXIT_OK);

    let uc = write(&dir, "uc.txt", fixtures::UC);
    let corr = write(&dir, "corr.txt", CORRELATED_UC);
    let (code, text) = esep(&["check", s(&uc), s(&corr)]);
    assert_eq!(code, EXIT_FALSIFIED, "{text}");
    assert!(text.contains("weak form"));
}

#[test]
fn usage_and_parse_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let cyclic = write(&dir, "cyc.txt", "A -> B\nB -> A\n");
    assert_eq!(esep(&["dsep", s(&cyclic), "A=A", "B=B"]).0, EXIT_USAGE);
    assert_eq!(esep(&["dsep", "/nonexistent/graph", "A=A", "B=B"]).0, EXIT_USAGE);
    let g = write(&dir, "iv.txt", fixtures::IV);
    let t = write(&dir, "t.csv", "Z,X,Y,p\n0,0,0,0.7\n");
    assert_eq!(esep(&["check", s(&g), s(&t)]).0, EXIT_USAGE);
    assert_eq!(esep(&["esep", s(&g), "A=U", "B=Y"]).0, EXIT_USAGE);
    assert_eq!(esep(&["sweep"]).0, EXIT_USAGE);
}

#[test]
fn failed_preconditions_exit_two() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "g.txt", fixtures::IV_DIRECT);
    let t = write(&dir, "t.csv", &margin_text(fixtures::iv_direct_graph(), 1));
    // X and Y share a latent parent, so no deletion set separates them.
    let (code, text) = esep(&["bounds", s(&g), s(&t), "--x", "X=1", "--y", "Y=1", "--do", "Z=0"]);
    assert_eq!(code, EXIT_PRECONDITION, "{text}");
    assert!(text.contains("not e-separated"));
    let (code, _) = esep(&["bounds", s(&g), s(&t), "--x", "X", "--y", "Y"]);
    assert_eq!(code, EXIT_PRECONDITION);
}

#[test]
fn bounds_report_every_witness() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "g.txt", fixtures::GADGET_EFFECT);
    let t = write(&dir, "t.csv", &margin_text(fixtures::gadget_effect_graph(), 5));
    let (code, text) = esep(&["--format", "records", "bounds", s(&g), s(&t), "--x", "X=1", "--y", "Y=1"]);
    assert_eq!(code, EXIT_OK, "{text}");
    let records = round_trip(&text);
    let mut counts = std::collections::BTreeMap::new();
    for r in &records {
        let Record::Bounds(e) = r else { panic!("unexpected record {r:?}") };
        assert!(e.lower <= e.upper);
        let d: Vec<&str> = e.d.keys().collect();
        // X descends from W, so only D = {Z} admits the strengthened bound.
        assert_eq!(e.strengthened.is_some(), d == ["Z"], "{e:?}");
        *counts.entry(d.join(",")).or_insert(0) += 1;
    }
    let expected: Vec<(String, i32)> = ["W", "W,Z", "Z"].iter().map(|d| (d.to_string(), 4)).collect();
    assert_eq!(counts.into_iter().collect::<Vec<_>>(), expected);

    let (code, text) =
        esep(&["bounds", s(&g), s(&t), "--x", "X", "--y", "Y", "--acde", "--do", "Z=0", "--given", "W=1"]);
    assert_eq!(code, EXIT_OK);
    assert!(text.contains("intersection"));
}

#[test]
fn every_report_round_trips() {
    let dir = TempDir::new().unwrap();
    let iv = write(&dir, "iv.txt", fixtures::IV);
    let gadget = write(&dir, "gadget.txt", fixtures::GADGET_EFFECT);
    let bad = write(&dir, "bad.csv", VIOLATING_IV);
    let t = write(&dir, "t.csv", &margin_text(fixtures::gadget_effect_graph(), 9));
    let runs: Vec<Vec<&str>> = vec![
        vec!["dsep", s(&iv), "A=Z", "B=Y", "C=X"],
        vec!["esep", s(&iv), "A=Z", "B=Y", "D=X"],
        vec!["find", "builtin:gadget"],
        vec!["check", s(&iv), s(&bad)],
        vec!["iv", s(&bad)],
        vec!["bounds", s(&gadget), s(&t), "--x", "X", "--y", "Y", "--acde"],
        vec!["sweep", "builtin:iv", "--models", "3"],
        vec!["dsep", "builtin:missing", "A=Z", "B=Y"],
    ];
    let mut kinds = std::collections::BTreeSet::new();
    for args in runs {
        let mut full = vec!["--format", "records"];
        full.extend(args);
        let (_, text) = esep(&full);
        for r in round_trip(&text) {
            let tag = serde_json::to_value(&r).unwrap()["record"].as_str().unwrap().to_string();
            kinds.insert(tag);
        }
    }
    for kind in [
        "separation",
        "testable_pair",
        "witness",
        "check",
        "check_summary",
        "iv_score",
        "iv_bounds",
        "acde",
        "sweep",
        "error",
    ] {
        assert!(kinds.contains(kind), "no {kind} record; saw {kinds:?}");
    }
}

#[test]
fn identical_invocations_give_identical_records() {
    let a = esep(&["--format", "records", "sweep", "builtin:gadget", "--models", "6", "--seed", "42"]);
    let b = esep(&["--format", "records", "sweep", "builtin:gadget", "--models", "6", "--seed", "42"]);
    assert_eq!(a, b);
    assert_eq!(a.0, EXIT_OK);
}

#[test]
fn esep_text_output() {
    let (code, text) = esep(&["esep", "builtin:iv", "A=Z", "B=Y", "D=X"]);
    assert_eq!((code, text.as_str()), (EXIT_OK, "e-separated (both characterizations agree)\n"));
    let (code, text) = esep(&["esep", "builtin:iv", "A=Z", "B=Y"]);
    assert_eq!(code, EXIT_OK);
    assert!(text.starts_with("not e-separated (both characterizations agree)\n"));
}

#[test]
fn renormalized_tables_are_noted() {
    let dir = TempDir::new().unwrap();
    let t = write(&dir, "t.csv", "Z,X,Y,p\n0,0,0,0.5000001\n1,0,1,0.5\n");
    let (code, text) = esep(&["iv", s(&t)]);
    assert_eq!(code, EXIT_FALSIFIED);
    assert!(text.starts_with("note: table mass"));
}
