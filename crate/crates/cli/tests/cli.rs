use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn ajparse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ajparse"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn verify_fixtures() {
    let o = ajparse(&["verify", path(&data("fixtures.mrg"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(
        stdout(&o).ends_with("RESULT ok=20 fail=0\n"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn corrupted_round_trip_is_reported() {
    let o = ajparse(&["verify", "--corrupt", path(&data("fixtures.mrg"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("RESULT ok=0 fail=20"));
}

#[test]
fn malformed_entry() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.mrg");
    std::fs::write(&file, "(S (NP a) (VP b))\n(S (NP a) (VP b)\n(S c (NP d))\n").unwrap();
    let strict = ajparse(&["verify", path(&file)]);
    assert_eq!(strict.status.code(), Some(2));
    assert!(stderr(&strict).contains("entry 1"), "{}", stderr(&strict));
    let lenient = ajparse(&["verify", "--lenient", path(&file)]);
    assert_eq!(lenient.status.code(), Some(1));
    assert!(stderr(&lenient).contains("skipped entry 1"));
    assert!(stdout(&lenient).contains("RESULT ok=2 fail=1"));
}

#[test]
fn oracle_and_translation_lines() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("t.mrg");
    std::fs::write(&file, "(X (T w))\n(S (NP (T a)) (VP (T b)))\n").unwrap();
    let o = ajparse(&["oracle", path(&file)]);
    assert_eq!(
        stdout(&o),
        "attach(0,X)\nattach(0,NP) juxtapose(0,VP,S)\nRESULT ok=2 fail=0\n"
    );
    let o = ajparse(&["translate-isr", path(&file)]);
    let lines: Vec<_> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines[0], "shift pj:X reduce");
    assert_eq!(lines[1].split(' ').count(), 2 + 2 * 3);
    let o = ajparse(&["oracle", path(&data("fixtures.mrg"))]);
    assert_eq!(
        stdout(&o).lines().next().unwrap(),
        "attach(0,NP) juxtapose(0,VP,S) attach(1,NP) juxtapose(2,PP,NP) attach(3,NP) attach(4,None)"
    );
}

#[test]
fn enumerate_check() {
    let o = ajparse(&["enumerate-check", "--n-max", "3", "--vocab-size", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("coverage complete"));
    let o = ajparse(&[
        "enumerate-check",
        "--n-max",
        "3",
        "--vocab",
        "2",
        "--corrupt",
        "gamma",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("witness phi-gamma"));
    let o = ajparse(&["enumerate-check", "--n-max", "9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_parse_score() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.mrg");
    std::fs::write(
        &gold,
        "( (S (NP (NNP Arthur)) (VP (VBD saw) (NP (DT the) (NN grail))) (. .)) )\n",
    )
    .unwrap();
    let (m1, m2) = (dir.path().join("m1"), dir.path().join("m2"));
    for m in [&m1, &m2] {
        let o = ajparse(&["train", path(&gold), "--model", path(m), "--seed", "4"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stderr(&o).contains("epoch 5 "));
    }
    assert_eq!(std::fs::read(&m1).unwrap(), std::fs::read(&m2).unwrap());

    let pred = dir.path().join("pred.mrg");
    let o = ajparse(&[
        "parse",
        "--model",
        path(&m1),
        "--treebank",
        path(&gold),
        "-o",
        path(&pred),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = ajparse(&["score", path(&gold), path(&pred)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("F1 100.00"), "{}", stdout(&o));

    let text = dir.path().join("s.txt");
    std::fs::write(
        &text,
        "Arthur_NNP saw_VBD the_DT grail_NN ._.\n\nMerlin_NNP\n",
    )
    .unwrap();
    let o = ajparse(&["parse", "--model", path(&m1), "--beam", "4", path(&text)]);
    let out = stdout(&o);
    let lines: Vec<_> = out.lines().collect();
    assert_eq!(lines.len(), 3, "{out}");
    assert_eq!(
        lines[0],
        "(S (NP (NNP Arthur)) (VP (VBD saw) (NP (DT the) (NN grail))) (. .))"
    );
    assert!(lines[1].ends_with("(NNP Merlin))"), "{}", lines[1]);
}

#[test]
fn score_rejects_mismatched_corpora() {
    let o = ajparse(&[
        "score",
        path(&data("fixtures.mrg")),
        path(&data("synthetic.mrg")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gold trees but"));
}

#[test]
fn generate_is_seeded() {
    let a = ajparse(&["generate", "--count", "30", "--seed", "3"]);
    let b = ajparse(&["generate", "--count", "30", "--seed", "3"]);
    let c = ajparse(&["generate", "--count", "30", "--seed", "4"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(
        stdout(&a)
            .lines()
            .filter(|l| l.starts_with("( (S "))
            .count(),
        30
    );
}

#[test]
fn stats_reports_length_laws() {
    let o = ajparse(&["stats", path(&data("fixtures.mrg"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("RESULT ok=20 fail=0"));
}
