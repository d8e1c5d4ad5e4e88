use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use topobias::classify::FssTrace;
use topobias::generators::CorpusManifest;
use topobias::io::{read_features, read_json};
use topobias::pipeline::{BiasFile, ClassificationFile, FssFile, RunConfig};

fn topobias(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topobias"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = topobias(args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn small_pipeline(dir: &Path) {
    ok(&[
        "pipeline",
        "--out",
        dir.to_str().unwrap(),
        "--per-gen",
        "12",
        "--nodes",
        "60",
        "--seed",
        "9",
    ]);
}

#[test]
fn pipeline_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    small_pipeline(&dir);

    let manifest: CorpusManifest = read_json(&dir.join("manifest.json")).unwrap();
    assert_eq!(manifest.entries.len(), 36);
    let matrix = read_features(&dir.join("features.csv")).unwrap();
    assert_eq!(matrix.rows.len(), 36);
    assert_eq!(matrix.catalogue.len(), 36);

    let bias: BiasFile = read_json(&dir.join("bias_report.json")).unwrap();
    assert_eq!(bias.report.iter().map(|r| r.subset_size).collect::<Vec<_>>(), vec![1, 2]);
    assert_eq!(bias.config.seed, 9);
    assert_eq!(bias.tool_version, topobias::TOOL_VERSION);
    assert_eq!(bias.catalogue_version, topobias::features::CATALOGUE_VERSION);

    let classification: ClassificationFile = read_json(&dir.join("classification_report.json")).unwrap();
    // three kinds on all generators, then three pairs
    assert_eq!(classification.report.analyses.len(), 6);
    for a in &classification.report.analyses {
        let scored: u64 = a.report.confusion.iter().flatten().sum();
        assert_eq!(scored as usize, if a.pair.is_some() { 24 } else { 36 });
    }

    let fss: FssFile = read_json(&dir.join("fss.json")).unwrap();
    assert!(!fss.report.steps.is_empty());

    let summary = fs::read_to_string(dir.join("summary.md")).unwrap();
    assert_eq!(summary.lines().filter(|l| l.starts_with("|---")).count(), 4);
    assert!(!summary.contains("Not run"));
}

#[test]
fn reports_reject_unknown_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    ok(&[
        "pipeline", "--out", dir.to_str().unwrap(), "--per-gen", "12", "--nodes", "40", "--stages", "gen,extract,bias",
    ]);
    let path = dir.join("bias_report.json");
    let mut value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    value["surprise"] = serde_json::json!(1);
    fs::write(&path, value.to_string()).unwrap();
    assert!(read_json::<BiasFile>(&path).is_err());
}

#[test]
fn identical_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    small_pipeline(&a);
    small_pipeline(&b);
    for file in ["features.csv", "manifest.json", "topologies/heavy-00003.csv"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    // everything except the timestamp matches in the reports
    for file in ["bias_report.json", "classification_report.json", "fss.json"] {
        let strip = |p: &Path| {
            let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(p.join(file)).unwrap()).unwrap();
            v["metadata"] = serde_json::Value::Null;
            v
        };
        assert_eq!(strip(&a), strip(&b), "{file}");
    }
}

#[test]
fn bias_without_features_names_the_missing_file() {
    let tmp = tempfile::tempdir().unwrap();
    let features = tmp.path().join("features.csv");
    let out = topobias(&[
        "bias",
        "--features",
        features.to_str().unwrap(),
        "--out",
        tmp.path().join("bias.json").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("features.csv"), "{err}");
    assert!(err.contains("extract"), "{err}");
    assert!(err.contains("bias stage"), "{err}");
}

#[test]
fn stages_run_one_at_a_time() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let p = |name: &str| d.join(name).to_str().unwrap().to_string();
    ok(&["gen", "--generators", "uniform,heavy", "--per-gen", "10", "--nodes", "50", "--seed", "4", "--out", &p("corpus")]);
    ok(&["extract", "--in", &p("corpus"), "--out", &p("features.csv")]);
    ok(&["rank", "--features", &p("features.csv"), "--subset-size", "1", "--out", &p("bias_report.json")]);
    ok(&[
        "classify", "--features", &p("features.csv"), "--kind", "gaussian,multinomial", "--k", "5", "--seed", "3",
        "--out", &p("classification_report.json"),
    ]);
    ok(&[
        "classify", "--features", &p("features.csv"), "--pair", "heavy,uniform", "--k", "5", "--out", &p("pair.json"),
    ]);
    ok(&[
        "fss", "--features", &p("features.csv"), "--mode", "fold", "--fold", "2", "--k", "5", "--max-features", "4",
        "--full-trace", "--out", &p("fss.json"),
    ]);
    ok(&["report", "--in", d.to_str().unwrap()]);

    let bias: BiasFile = read_json(&d.join("bias_report.json")).unwrap();
    assert_eq!(bias.report.len(), 1);
    assert_eq!(bias.report[0].entries.len(), 2);
    let pair: ClassificationFile = read_json(&d.join("pair.json")).unwrap();
    assert_eq!(pair.report.analyses[0].pair, Some(("heavy".into(), "uniform".into())));
    let fss: FssFile = read_json(&d.join("fss.json")).unwrap();
    let trace: &FssTrace = &fss.report;
    assert_eq!(trace.steps.len(), 4);
    assert!(fs::read_to_string(d.join("summary.md")).unwrap().contains("## Confusion matrix"));
}

#[test]
fn import_builds_a_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let file = d.join("field.csv");
    fs::write(&file, "1.5,2\n10,20\n99,0\n").unwrap();
    let corpus = d.join("corpus");
    ok(&[
        "import", "--file", file.to_str().unwrap(), "--area", "100", "--label", "field", "--headerless", "--out",
        corpus.to_str().unwrap(),
    ]);
    let manifest: CorpusManifest = read_json(&corpus.join("manifest.json")).unwrap();
    assert_eq!(manifest.entries.len(), 1);
    assert_eq!(manifest.entries[0].label, "field");

    fs::write(&file, "1,2\nabc,5\n").unwrap();
    let out = topobias(&[
        "import", "--file", file.to_str().unwrap(), "--area", "100", "--label", "other", "--headerless", "--out",
        corpus.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains(":2:"));
}

#[test]
fn dumped_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ok(&["pipeline", "--per-gen", "7", "--threads", "2", "--stages", "gen,extract", "--dump-config"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let cfg: RunConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(cfg.experiment.topologies_per_generator, 7);
    assert_eq!(cfg.threads, Some(2));
    assert_eq!(serde_json::to_string_pretty(&cfg).unwrap(), text.trim_end());

    let path = tmp.path().join("run.json");
    fs::write(&path, &text).unwrap();
    let dir = tmp.path().join("out");
    let run = Command::new(env!("CARGO_BIN_EXE_topobias"))
        .args(["pipeline", "--config", path.to_str().unwrap(), "--nodes", "30", "--out", dir.to_str().unwrap()])
        .env("TOPOBIAS_THREADS", "2")
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(read_features(&dir.join("features.csv")).unwrap().rows.len(), 21);
    assert!(!dir.join("bias_report.json").exists());
}
