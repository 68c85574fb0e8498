use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use umiclab::scorer::{load_checkpoint, save_checkpoint};

const BIN: &str = env!("CARGO_BIN_EXE_umiclab");

/// Small scorer so training runs stay fast.
const TINY: &[&str] = &["--layers", "1", "--hidden-dim", "16", "--heads", "2", "--ffn-dim", "32"];

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .env_remove("UMICLAB_CACHE")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn lines(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Synthetic corpus with train/valid captions and bundles for both.
fn corpus(images: usize, valid: usize) -> TempDir {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    let (images, valid) = (images.to_string(), valid.to_string());
    ok(
        p,
        &[
            "--seed",
            "5",
            "synth",
            "--images",
            &images,
            "--valid-images",
            &valid,
            "--dim",
            "16",
        ],
    );
    for split in ["train", "valid"] {
        let captions = format!("{split}_captions.jsonl");
        let output = format!("{split}.jsonl");
        ok(
            p,
            &[
                "--seed",
                "5",
                "gen-negatives",
                "--captions",
                &captions,
                "--features",
                "features.umf",
                "--output",
                &output,
            ],
        );
    }
    dir
}

fn train_tiny(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "--seed",
        "11",
        "train",
        "--train",
        "train.jsonl",
        "--valid",
        "valid.jsonl",
        "--features",
        "features.umf",
        "--max-steps",
        "2",
        "--eval-every",
        "1",
    ];
    args.extend_from_slice(TINY);
    args.extend_from_slice(extra);
    ok(dir, &args)
}

/// Judgments over the validation captions whose ratings are distinct, and
/// a score file holding exactly the normalized human scores.
fn judgments(dir: &Path) -> (PathBuf, PathBuf) {
    let captions: Vec<Value> = lines(&dir.join("valid_captions.jsonl"));
    let mut judg = String::new();
    let mut human = String::new();
    for (i, c) in captions.iter().enumerate() {
        let raw = 1.0 + 3.0 * (i as f64 + 0.5) / captions.len() as f64;
        let refs: Vec<&Value> = captions
            .iter()
            .filter(|r| r["image_id"] == c["image_id"] && r["caption_id"] != c["caption_id"])
            .collect();
        let rec = serde_json::json!({
            "image_id": c["image_id"], "candidate": c, "references": refs,
            "raw_scores": [raw, raw], "scale": [1.0, 4.0],
        });
        judg.push_str(&format!("{rec}\n"));
        let s = serde_json::json!({"caption_id": c["caption_id"], "metric": "Copy", "score": (raw - 1.0) / 3.0});
        human.push_str(&format!("{s}\n"));
    }
    let (j, h) = (dir.join("judg.jsonl"), dir.join("human.jsonl"));
    fs::write(&j, judg).unwrap();
    fs::write(&h, human).unwrap();
    (j, h)
}

#[test]
fn same_seed_gives_identical_bundles_and_one_per_caption() {
    let a = corpus(12, 4);
    let b = corpus(12, 4);
    for f in ["features.umf", "captions.jsonl", "train.jsonl", "valid.jsonl"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let captions = lines(&a.path().join("train_captions.jsonl")).len();
    assert_eq!(lines(&a.path().join("train.jsonl")).len(), captions);
}

#[test]
fn different_seed_changes_bundles() {
    let a = corpus(12, 4);
    ok(
        a.path(),
        &[
            "--seed",
            "6",
            "gen-negatives",
            "--captions",
            "train_captions.jsonl",
            "--features",
            "features.umf",
            "--output",
            "other.jsonl",
        ],
    );
    assert_ne!(
        fs::read(a.path().join("train.jsonl")).unwrap(),
        fs::read(a.path().join("other.jsonl")).unwrap()
    );
}

#[test]
fn missing_features_file_exits_2_naming_path() {
    let dir = corpus(8, 2);
    let out = run(
        dir.path(),
        &[
            "gen-negatives",
            "--captions",
            "captions.jsonl",
            "--features",
            "absent-features.umf",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("absent-features.umf"), "{}", stderr(&out));
}

#[test]
fn malformed_config_exits_2() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("cfg.json"), r#"{"trian": {}}"#).unwrap();
    let out = run(dir.path(), &["--config", "cfg.json", "synth"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("cfg.json"),
        r#"{"synth": {"n_images": 3, "captions_per_image": 2}}"#,
    )
    .unwrap();
    ok(dir.path(), &["--config", "cfg.json", "synth", "--images", "4"]);
    assert_eq!(lines(&dir.path().join("captions.jsonl")).len(), 8);
}

#[test]
fn similarity_cache_is_written_and_reused() {
    let dir = corpus(10, 2);
    let cache = dir.path().join("cache");
    fs::create_dir(&cache).unwrap();
    for out in ["c1.jsonl", "c2.jsonl"] {
        let status = Command::new(BIN)
            .current_dir(dir.path())
            .env("UMICLAB_CACHE", &cache)
            .args([
                "--seed",
                "5",
                "gen-negatives",
                "--captions",
                "train_captions.jsonl",
                "--features",
                "features.umf",
                "--output",
                out,
            ])
            .output()
            .unwrap()
            .status;
        assert!(status.success());
    }
    let entries: Vec<_> = fs::read_dir(&cache).unwrap().collect();
    assert_eq!(entries.len(), 1);
    let a = fs::read(dir.path().join("c1.jsonl")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("c2.jsonl")).unwrap());
    assert_eq!(a, fs::read(dir.path().join("train.jsonl")).unwrap());
}

#[test]
fn train_single_step_records_one_step_and_manifest() {
    let dir = corpus(10, 3);
    let p = dir.path();
    let mut args = vec![
        "--seed",
        "11",
        "train",
        "--train",
        "train.jsonl",
        "--valid",
        "valid.jsonl",
        "--features",
        "features.umf",
        "--max-steps",
        "1",
    ];
    args.extend_from_slice(TINY);
    ok(p, &args);
    let report = json(&p.join("train-report-seed11.json"));
    assert_eq!(report["step_losses"].as_array().unwrap().len(), 1);
    assert!(p.join("model-seed11.umck").exists());
    let manifest = json(&p.join("train.manifest.json"));
    assert_eq!(manifest["command"], "train");
    assert_eq!(manifest["seeds"], serde_json::json!([11]));
    assert_eq!(manifest["config"]["train"]["max_steps"], 1);
    assert!(manifest["inputs"]
        .as_array()
        .unwrap()
        .iter()
        .all(|f| f["sha256"].is_string()));
}

#[test]
fn repetitions_emit_one_checkpoint_per_seed() {
    let dir = corpus(10, 3);
    train_tiny(dir.path(), &["--repetitions", "2"]);
    for seed in [11, 12] {
        assert!(dir.path().join(format!("model-seed{seed}.umck")).exists());
        assert_eq!(
            json(&dir.path().join(format!("train-report-seed{seed}.json")))["seed"],
            seed
        );
    }
    let summary = json(&dir.path().join("train-summary.json"));
    assert_eq!(summary["seeds"], serde_json::json!([11, 12]));
}

#[test]
fn diverging_training_exits_3() {
    let dir = corpus(10, 3);
    let mut args = vec![
        "--seed",
        "11",
        "train",
        "--train",
        "train.jsonl",
        "--valid",
        "valid.jsonl",
        "--features",
        "features.umf",
        "--max-steps",
        "5",
        "--learning-rate",
        "1e300",
    ];
    args.extend_from_slice(TINY);
    let out = run(dir.path(), &args);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("step"), "{}", stderr(&out));
}

#[test]
fn scoring_is_repeatable_and_in_unit_interval() {
    let dir = corpus(10, 3);
    let p = dir.path();
    train_tiny(p, &[]);
    let score = |out: &str| {
        ok(
            p,
            &[
                "score",
                "--checkpoint",
                "model-seed11.umck",
                "--features",
                "features.umf",
                "--captions",
                "captions.jsonl",
                "--output",
                out,
            ],
        );
        fs::read(p.join(out)).unwrap()
    };
    let first = score("s1.jsonl");
    assert_eq!(first, score("s2.jsonl"));
    let records = lines(&p.join("s1.jsonl"));
    assert_eq!(records.len(), lines(&p.join("captions.jsonl")).len());
    for r in records {
        let s = r["score"].as_f64().unwrap();
        assert!(s > 0.0 && s < 1.0);
    }
}

#[test]
fn zero_head_checkpoint_scores_one_half() {
    let dir = corpus(8, 2);
    let p = dir.path();
    train_tiny(p, &[]);
    let mut model = load_checkpoint(p.join("model-seed11.umck")).unwrap();
    model.params.head_w.fill(0.0);
    model.params.head_b.fill(0.0);
    save_checkpoint(&model, p.join("zero.umck")).unwrap();
    ok(
        p,
        &[
            "score",
            "--checkpoint",
            "zero.umck",
            "--features",
            "features.umf",
            "--captions",
            "captions.jsonl",
        ],
    );
    for r in lines(&p.join("scores.jsonl")) {
        assert_eq!(r["score"].as_f64().unwrap(), 0.5);
    }
}

#[test]
fn scoring_without_image_features_writes_error_records_and_exits_2() {
    let dir = corpus(8, 2);
    let p = dir.path();
    train_tiny(p, &[]);
    let mut text = fs::read_to_string(p.join("valid_captions.jsonl")).unwrap();
    text.push_str(r#"{"caption_id":"ghost-0","image_id":"ghost","text":"a ghost"}"#);
    text.push('\n');
    fs::write(p.join("with-ghost.jsonl"), text).unwrap();
    let out = run(
        p,
        &[
            "score",
            "--checkpoint",
            "model-seed11.umck",
            "--features",
            "features.umf",
            "--captions",
            "with-ghost.jsonl",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("ghost-0"));
    let records = lines(&p.join("scores.jsonl"));
    let ghost = records.iter().find(|r| r["caption_id"] == "ghost-0").unwrap();
    assert!(ghost["error"].is_string() && ghost.get("score").is_none());
    assert_eq!(
        records.iter().filter(|r| r["score"].is_f64()).count(),
        records.len() - 1
    );
}

#[test]
fn human_scores_as_metric_correlate_perfectly() {
    let dir = corpus(12, 6);
    let p = dir.path();
    let (_, _) = judgments(p);
    ok(
        p,
        &[
            "eval",
            "--scores",
            "human.jsonl",
            "--data",
            "composite=judg.jsonl",
            "--data",
            "flickr8k=judg.jsonl",
        ],
    );
    let reports = json(&p.join("eval-report.json"));
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 2);
    for r in reports {
        assert_eq!(r["metric"], "Copy");
        assert_eq!(r["coefficient"].as_f64().unwrap(), 1.0);
        assert!(r["p_value"].as_f64().unwrap() < 0.01);
    }
    assert_eq!(reports[0]["dataset"], "Flickr8k");
    assert_eq!(reports[0]["variant"], "TAU_C");
    assert_eq!(reports[1]["variant"], "TAU_B");
    let table = fs::read_to_string(p.join("eval-table.md")).unwrap();
    assert!(table.contains("| Copy | 1.000* | 1.000* | - | - |"), "{table}");
}

#[test]
fn eval_with_missing_ids_exits_2_listing_them() {
    let dir = corpus(12, 6);
    let p = dir.path();
    judgments(p);
    let text = fs::read_to_string(p.join("human.jsonl")).unwrap();
    let kept: Vec<&str> = text.lines().skip(1).collect();
    fs::write(p.join("partial.jsonl"), kept.join("\n")).unwrap();
    let first: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    let out = run(
        p,
        &["eval", "--scores", "partial.jsonl", "--data", "composite=judg.jsonl"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains(first["caption_id"].as_str().unwrap()),
        "{}",
        stderr(&out)
    );
}

#[test]
fn eval_rows_are_stable_across_runs() {
    let dir = corpus(12, 6);
    let p = dir.path();
    judgments(p);
    ok(p, &["baselines", "--judgments", "judg.jsonl"]);
    let args = [
        "eval",
        "--scores",
        "baselines.jsonl",
        "--scores",
        "human.jsonl",
        "--data",
        "composite=judg.jsonl",
    ];
    ok(p, &args);
    let first = fs::read(p.join("eval-table.md")).unwrap();
    ok(p, &args);
    assert_eq!(first, fs::read(p.join("eval-table.md")).unwrap());
    let table = String::from_utf8(first).unwrap();
    let rows: Vec<&str> = table
        .lines()
        .skip(2)
        .map(|l| l.split('|').nth(1).unwrap().trim())
        .collect();
    assert_eq!(rows, ["BLEU-1", "BLEU-4", "CIDEr", "Copy", "ROUGE-L"]);
}

#[test]
fn pascal_human_choice_gives_full_accuracy() {
    let dir = corpus(12, 6);
    let p = dir.path();
    let captions = lines(&p.join("valid_captions.jsonl"));
    let mut trips = String::new();
    for chunk in captions.chunks(5) {
        let rec = serde_json::json!({
            "image_id": chunk[0]["image_id"], "references_A": &chunk[2..],
            "candidate_B": chunk[0], "candidate_C": chunk[1], "human_choice": "C",
        });
        trips.push_str(&format!("{rec}\n"));
    }
    fs::write(p.join("trip.jsonl"), trips).unwrap();
    ok(p, &["baselines", "--triplets", "trip.jsonl", "--metrics", "BLEU-1"]);
    ok(
        p,
        &[
            "eval",
            "--scores",
            "baselines.jsonl",
            "--data",
            "pascal50s=trip.jsonl",
            "--include-human",
        ],
    );
    let reports = json(&p.join("eval-report.json"));
    let human = reports
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["metric"] == "Human")
        .unwrap();
    assert_eq!(human["accuracy"].as_f64().unwrap(), 1.0);
    assert_eq!(human["n"], 6);
    assert!((human["p_value"].as_f64().unwrap() - 2.0 * 0.5f64.powi(6)).abs() < 1e-12);
}

#[test]
fn report_dist_writes_histograms_and_agreement() {
    let dir = corpus(12, 6);
    let p = dir.path();
    judgments(p);
    ok(
        p,
        &[
            "report-dist",
            "--data",
            "composite=judg.jsonl",
            "--bins",
            "5",
            "--alpha",
        ],
    );
    let csv = fs::read_to_string(p.join("Composite-histogram.csv")).unwrap();
    let counts: Vec<usize> = csv
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(counts, vec![6; 5]);
    let dist = json(&p.join("distribution.json"));
    assert!((dist[0]["outer_mass"].as_f64().unwrap() - 0.4).abs() < 1e-12);
    // Both raters give identical scores, so agreement is perfect.
    assert_eq!(json(&p.join("agreement.json"))["Composite"].as_f64().unwrap(), 1.0);
}

#[test]
fn report_dist_rejects_triplet_datasets() {
    let dir = corpus(8, 2);
    let out = run(dir.path(), &["report-dist", "--data", "pascal50s=captions.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn desk_scale_scorer_scores_a_thousand_captions_within_a_minute() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    ok(p, &["--seed", "2", "synth", "--images", "220", "--valid-images", "20"]);
    for split in ["train", "valid"] {
        let captions = format!("{split}_captions.jsonl");
        let output = format!("{split}.jsonl");
        ok(
            p,
            &[
                "--seed",
                "2",
                "gen-negatives",
                "--captions",
                &captions,
                "--features",
                "features.umf",
                "--output",
                &output,
            ],
        );
    }
    ok(
        p,
        &[
            "--seed",
            "2",
            "train",
            "--train",
            "train.jsonl",
            "--valid",
            "valid.jsonl",
            "--features",
            "features.umf",
            "--max-steps",
            "1",
        ],
    );
    let started = std::time::Instant::now();
    ok(
        p,
        &[
            "score",
            "--checkpoint",
            "model-seed2.umck",
            "--features",
            "features.umf",
            "--captions",
            "train_captions.jsonl",
        ],
    );
    let elapsed = started.elapsed().as_secs_f64();
    assert_eq!(lines(&p.join("scores.jsonl")).len(), 1000);
    assert!(elapsed < 60.0, "scoring took {elapsed:.1} s");
}
