use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fmtprof_core::corpusgen::{expected_profile, load_manifest, CorpusSpec, RecipeEntry, Template};
use fmtprof_core::profiler::emit_to_string;

fn fmtprof(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmtprof"))
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

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_spec(dir: &Path, spec: &CorpusSpec) -> std::path::PathBuf {
    let path = dir.join("spec.json");
    fs::write(&path, spec.to_json()).unwrap();
    path
}

fn small_spec(seed: u64) -> CorpusSpec {
    CorpusSpec {
        records_per_file: 40,
        ..CorpusSpec::new(
            seed,
            vec![
                RecipeEntry::new(1999, Template::Gif89a, 30),
                RecipeEntry::new(2003, Template::Pdf, 25).producer("GPL Ghostscript 8.15"),
                RecipeEntry::new(2003, Template::Html, 20).version("4.01"),
                RecipeEntry::new(2007, Template::JpegExif, 10).software("GIMP 2.4"),
                RecipeEntry::new(2007, Template::Random, 5),
            ],
        )
    }
}

#[test]
fn profile_matches_manifest_and_summarises() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &small_spec(3));
    let corpus = dir.path().join("corpus");
    let out = fmtprof(&["gen-corpus", "--spec", p(&spec), "--output", p(&corpus)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("records: 90"));

    let tsv = dir.path().join("profile.tsv");
    let out = fmtprof(&[
        "profile",
        "--input",
        p(&corpus),
        "--output",
        p(&tsv),
        "--shards",
        "3",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let summary = stdout(&out);
    for key in [
        "records: 90",
        "broad_unidentified: 5",
        "fine_unidentified: 5",
        "records_per_second:",
    ] {
        assert!(summary.contains(key), "missing {key:?} in\n{summary}");
    }
    let manifest = load_manifest(&corpus.join("manifest.tsv")).unwrap();
    assert_eq!(
        fs::read_to_string(&tsv).unwrap(),
        emit_to_string(&expected_profile(&manifest))
    );
}

#[test]
fn profile_to_stdout_keeps_summary_off_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &small_spec(4));
    let corpus = dir.path().join("corpus");
    assert!(
        fmtprof(&["gen-corpus", "--spec", p(&spec), "--output", p(&corpus)])
            .status
            .success()
    );
    let out = fmtprof(&["profile", "--input", p(&corpus)]);
    assert!(out.status.success());
    let manifest = load_manifest(&corpus.join("manifest.tsv")).unwrap();
    assert_eq!(stdout(&out), emit_to_string(&expected_profile(&manifest)));
    assert!(stderr(&out).contains("records: 90"));
}

#[test]
fn empty_input_directory_gives_empty_profile() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let tsv = dir.path().join("out.tsv");
    let out = fmtprof(&["profile", "--input", p(&empty), "--output", p(&tsv)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read_to_string(&tsv).unwrap(), "");
    assert!(
        stderr(&out).contains("no archive files"),
        "{}",
        stderr(&out)
    );
    assert!(stdout(&out).contains("records: 0"));
}

#[test]
fn missing_signature_file_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.sig.json");
    let out = fmtprof(&[
        "profile",
        "--input",
        p(dir.path()),
        "--fine-sig",
        p(&missing),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("SchemaError"), "{}", stderr(&out));
}

#[test]
fn missing_input_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = fmtprof(&["profile", "--input", p(&dir.path().join("absent"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn swapped_signature_sets_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let fine = dir.path().join("fine.json");
    fs::write(&fine, fmtprof_core::sig_engine::shipped_fine_source()).unwrap();
    let out = fmtprof(&["profile", "--input", p(dir.path()), "--broad-sig", p(&fine)]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn corrupt_archive_is_counted_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let bogus = dir.path().join("broken.warc.gz");
    fs::write(&bogus, b"not gzip at all").unwrap();
    let tsv = dir.path().join("out.tsv");
    let out = fmtprof(&["profile", "--input", p(&bogus), "--output", p(&tsv)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(
        stdout(&out).contains("corrupt_skipped: 1"),
        "{}",
        stdout(&out)
    );
    assert_eq!(fs::read_to_string(&tsv).unwrap(), "");
}

#[test]
fn non_archive_input_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let notes = dir.path().join("notes.txt");
    fs::write(&notes, "hello").unwrap();
    let out = fmtprof(&["profile", "--input", p(&notes)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_writes_report_for_single_line() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = dir.path().join("p.tsv");
    fs::write(
        &tsv,
        "image/png\timage/png\timage/png; version=1.0\t2004\t102\n",
    )
    .unwrap();
    let report = dir.path().join("report");
    let out = fmtprof(&["analyze", "--input", p(&tsv), "--report-dir", p(&report)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("resources: 102"));
    let lifespans = fs::read_to_string(report.join("lifespans.csv")).unwrap();
    let rows: Vec<&str> = lifespans.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("image/png,2004,2004,1,"), "{lifespans}");
    assert!(report.join("MANIFEST.tsv").exists());
}

#[test]
fn analyze_names_the_malformed_line() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = dir.path().join("p.tsv");
    fs::write(
        &tsv,
        "image/png\timage/png\timage/png\t2004\t1\ntext/html\ttext/html\ttext/html\tyear\t2\n",
    )
    .unwrap();
    let out = fmtprof(&[
        "analyze",
        "--input",
        p(&tsv),
        "--report-dir",
        p(&dir.path().join("r")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn analyze_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &small_spec(8));
    let corpus = dir.path().join("corpus");
    assert!(
        fmtprof(&["gen-corpus", "--spec", p(&spec), "--output", p(&corpus)])
            .status
            .success()
    );
    let tsv = dir.path().join("p.tsv");
    assert!(
        fmtprof(&["profile", "--input", p(&corpus), "--output", p(&tsv)])
            .status
            .success()
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for r in [&a, &b] {
        let out = fmtprof(&["analyze", "--input", p(&tsv), "--report-dir", p(r)]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    assert_eq!(
        fs::read(a.join("MANIFEST.tsv")).unwrap(),
        fs::read(b.join("MANIFEST.tsv")).unwrap()
    );
}

#[test]
fn gen_corpus_is_deterministic_and_seed_overridable() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &small_spec(1));
    let digest = |out: &str, seed: &str| {
        let o = fmtprof(&[
            "gen-corpus",
            "--spec",
            p(&spec),
            "--output",
            p(&dir.path().join(out)),
            "--seed",
            seed,
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        stdout(&o)
            .lines()
            .find_map(|l| l.strip_prefix("sha256: ").map(str::to_owned))
            .unwrap()
    };
    let a = digest("a", "42");
    assert_eq!(a, digest("b", "42"));
    assert_ne!(a, digest("c", "43"));
}

#[test]
fn gen_corpus_rejects_bad_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"seed": 1, "recipe": [{"template": "wav", "count": 1, "year": 2000}]}"#,
    )
    .unwrap();
    let out = fmtprof(&[
        "gen-corpus",
        "--spec",
        p(&spec),
        "--output",
        p(&dir.path().join("c")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_lists_weak_signatures() {
    let dir = tempfile::tempdir().unwrap();
    let fine = dir.path().join("fine.json");
    fs::write(&fine, fmtprof_core::sig_engine::shipped_fine_source()).unwrap();
    let out = fmtprof(&["validate-signatures", p(&fine)]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("errors: 0"));
    assert!(text.contains("weak: pict-weak"), "{text}");
}

#[test]
fn validate_reports_priority_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cycle.json");
    fs::write(
        &path,
        r#"{"mode": "fine", "signatures": [
            {"id": "a", "mime": "x/a", "anchor": {"bof": 0}, "elements": ["0102"], "priority_over": ["b"]},
            {"id": "b", "mime": "x/b", "anchor": {"bof": 0}, "elements": ["0102"], "priority_over": ["a"]}
        ]}"#,
    )
    .unwrap();
    let out = fmtprof(&["validate-signatures", p(&path)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("CycleError"), "{}", stderr(&out));
}

/// Report digests for `fixtures/golden_profile.tsv`, recorded from a run
/// whose tables were checked by hand against the corpus recipe. Set
/// `FMTPROF_BLESS=1` to rewrite them after an intended change.
#[test]
fn analyze_matches_golden_report() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report");
    let out = fmtprof(&[
        "analyze",
        "--input",
        p(&fixtures.join("golden_profile.tsv")),
        "--report-dir",
        p(&report),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let got = fs::read_to_string(report.join("MANIFEST.tsv")).unwrap();
    let golden = fixtures.join("golden_report.MANIFEST.tsv");
    if std::env::var_os("FMTPROF_BLESS").is_some() {
        fs::write(&golden, &got).unwrap();
    }
    assert_eq!(got, fs::read_to_string(&golden).unwrap());
    let conflicts = fs::read_to_string(report.join("conflicts.csv")).unwrap();
    assert_eq!(
        conflicts,
        "broad_base,fine_base,count\nimage/jpeg,image/x-pict,4\ntext/html,text/plain,6\n"
    );
}
