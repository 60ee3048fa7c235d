mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::fixture;

fn ontomerge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ontomerge"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn wordnet() -> String {
    fixture("wordnet").display().to_string()
}

fn fx(name: &str) -> String {
    fixture(name).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn pipeline_into(out: &Path) -> Output {
    ontomerge(&[
        "--wordnet",
        &wordnet(),
        "pipeline",
        &fx("biblio.owl"),
        &fx("bibtex.owl"),
        "--provider",
        "replay",
        "--cache",
        &fx("hits.tsv"),
        "--expert",
        &fx("expert/biblio-bibtex.tsv"),
        "--out",
        p(out),
    ])
}

const OUTPUTS: [&str; 6] = [
    "merged.owl",
    "correspondences.tsv",
    "thresholds.txt",
    "overlay.tsv",
    "enrichment.txt",
    "eval.txt",
];

#[test]
fn pipeline_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(pipeline_into(a.path()).status.success());
    assert!(pipeline_into(b.path()).status.success());
    for f in OUTPUTS {
        let x = fs::read(a.path().join(f)).unwrap();
        let y = fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between runs");
    }
}

#[test]
fn pipeline_equals_the_individual_steps() {
    let whole = tempfile::tempdir().unwrap();
    let run = pipeline_into(whole.path());
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(stdout(&run).contains("P=1.000 R=1.000"));

    let steps = tempfile::tempdir().unwrap();
    let wn = wordnet();
    let merge = ontomerge(&[
        "--wordnet",
        &wn,
        "merge",
        &fx("biblio.owl"),
        &fx("bibtex.owl"),
        "--cache",
        &fx("hits.tsv"),
        "--out",
        p(steps.path()),
    ]);
    assert!(merge.status.success());
    let merged = steps.path().join("merged.owl");
    let enrich = ontomerge(&["--wordnet", &wn, "enrich", p(&merged), "--out", p(steps.path())]);
    assert!(enrich.status.success());
    let eval = ontomerge(&[
        "eval",
        p(&steps.path().join("correspondences.tsv")),
        &fx("expert/biblio-bibtex.tsv"),
        "--out",
        p(steps.path()),
    ]);
    assert!(eval.status.success());
    for f in OUTPUTS {
        let x = fs::read_to_string(whole.path().join(f)).unwrap();
        let y = fs::read_to_string(steps.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn relocated_concept_and_overlay_land_on_disk() {
    let out = tempfile::tempdir().unwrap();
    assert!(pipeline_into(out.path()).status.success());
    let merged = fs::read_to_string(out.path().join("merged.owl")).unwrap();
    let at = merged.find("rdf:ID=\"Corporate_Body\"").unwrap();
    assert!(
        merged[at..].starts_with("rdf:ID=\"Corporate_Body\">\n    <rdfs:subClassOf rdf:resource=\"#Organization\"/>")
    );
    let overlay = fs::read_to_string(out.path().join("overlay.tsv")).unwrap();
    let line = overlay.lines().find(|l| l.starts_with("corporate_body\t")).unwrap();
    assert_eq!(line.split('\t').nth(1).unwrap().split(',').count(), 2);
    let thresholds = fs::read_to_string(out.path().join("thresholds.txt")).unwrap();
    assert!(thresholds.contains("query\tCorporate Body is an Organization\t478"));
}

#[test]
fn overlay_makes_the_new_lemma_known() {
    let out = tempfile::tempdir().unwrap();
    assert!(pipeline_into(out.path()).status.success());
    let overlay = out.path().join("overlay.tsv");
    let again = tempfile::tempdir().unwrap();
    let o = ontomerge(&[
        "--wordnet",
        &wordnet(),
        "--overlay",
        p(&overlay),
        "merge",
        &fx("biblio.owl"),
        &fx("biblio.owl"),
        "--cache",
        &fx("hits.tsv"),
        "--out",
        p(again.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    // Nothing is missing any more, so no queries were needed.
    assert_eq!(fs::read_to_string(again.path().join("thresholds.txt")).unwrap(), "");
}

#[test]
fn self_merge_evaluates_perfectly() {
    let out = tempfile::tempdir().unwrap();
    let o = ontomerge(&[
        "--wordnet",
        &wordnet(),
        "pipeline",
        &fx("biblio.owl"),
        &fx("biblio.owl"),
        "--cache",
        &fx("hits.tsv"),
        "--out",
        p(out.path()),
    ]);
    assert!(o.status.success());
    let e = ontomerge(&[
        "eval",
        p(&out.path().join("correspondences.tsv")),
        &fx("expert/biblio-self.tsv"),
    ]);
    assert!(e.status.success());
    assert!(stdout(&e).contains("P=1.000 R=1.000"));
}

#[test]
fn check_reports_the_agent_person_conflict() {
    let o = ontomerge(&["--wordnet", &wordnet(), "check", &fx("biblio.owl")]);
    assert!(o.status.success());
    assert!(
        stdout(&o).lines().any(|l| l == "Person\tAgent\t>\tflip"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn resolve_prints_the_flipped_edge() {
    let o = ontomerge(&["--wordnet", &wordnet(), "resolve", &fx("biblio.owl")]);
    assert!(o.status.success());
    let text = stdout(&o);
    let at = text.find("rdf:ID=\"Agent\"").unwrap();
    assert!(text[at..].contains("<rdfs:subClassOf rdf:resource=\"#Person\"/>"));
}

#[test]
fn matrix_has_a_row_per_concept() {
    let o = ontomerge(&["--wordnet", &wordnet(), "matrix", &fx("biblio.owl"), &fx("biblio.owl")]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 13);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(ontomerge(&["merge"]).status.code(), Some(1));
    assert_eq!(ontomerge(&["--bogus"]).status.code(), Some(1));
    let no_kb = ontomerge(&["check", &fx("biblio.owl")]);
    assert_eq!(no_kb.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&no_kb.stderr).contains("--wordnet"));
    assert_eq!(ontomerge(&["--help"]).status.code(), Some(0));
}

#[test]
fn invalid_ontologies_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.owl");
    fs::write(&broken, "<rdf:RDF").unwrap();
    let o = ontomerge(&["--wordnet", &wordnet(), "check", p(&broken)]);
    assert_eq!(o.status.code(), Some(1));

    let cyclic = dir.path().join("cyclic.owl");
    fs::write(
        &cyclic,
        r##"<rdf:RDF xmlns:rdf="http://www.w3.org/1999/02/22-rdf-syntax-ns#"
            xmlns:rdfs="http://www.w3.org/2000/01/rdf-schema#"
            xmlns:owl="http://www.w3.org/2002/07/owl#">
          <owl:Class rdf:ID="A"><rdfs:subClassOf rdf:resource="#B"/></owl:Class>
          <owl:Class rdf:ID="B"><rdfs:subClassOf rdf:resource="#A"/></owl:Class>
        </rdf:RDF>"##,
    )
    .unwrap();
    let o = ontomerge(&["--wordnet", &wordnet(), "resolve", p(&cyclic)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cycle"));
}

#[test]
fn provider_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.tsv");
    fs::write(&empty, "").unwrap();
    let o = ontomerge(&[
        "--wordnet",
        &wordnet(),
        "merge",
        &fx("biblio.owl"),
        &fx("biblio.owl"),
        "--cache",
        p(&empty),
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no cached count"));

    let missing_key = Command::new(env!("CARGO_BIN_EXE_ontomerge"))
        .args([
            "--wordnet",
            &wordnet(),
            "merge",
            &fx("biblio.owl"),
            &fx("biblio.owl"),
            "--provider",
            "live",
            "--endpoint",
            "http://127.0.0.1:9/",
            "--key-env",
            "ONTOMERGE_TEST_UNSET_KEY",
            "--cache",
            p(&dir.path().join("live.tsv")),
            "--out",
            p(dir.path()),
        ])
        .env_remove("ONTOMERGE_TEST_UNSET_KEY")
        .output()
        .unwrap();
    assert_eq!(missing_key.status.code(), Some(2));
}

#[test]
fn record_writes_a_replayable_cache() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("rec.tsv");
    let o = ontomerge(&[
        "--wordnet",
        &wordnet(),
        "merge",
        &fx("biblio.owl"),
        &fx("biblio.owl"),
        "--cache",
        &fx("hits.tsv"),
        "--record",
        p(&rec),
        "--out",
        p(&dir.path().join("a")),
    ]);
    assert!(o.status.success());
    let again = ontomerge(&[
        "--wordnet",
        &wordnet(),
        "merge",
        &fx("biblio.owl"),
        &fx("biblio.owl"),
        "--cache",
        p(&rec),
        "--out",
        p(&dir.path().join("b")),
    ]);
    assert!(again.status.success());
    assert_eq!(
        fs::read(dir.path().join("a/merged.owl")).unwrap(),
        fs::read(dir.path().join("b/merged.owl")).unwrap()
    );
}
