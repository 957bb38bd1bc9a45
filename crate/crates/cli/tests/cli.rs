use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use eglpr::raster::{read_pnm, to_gray, write_ppm, RgbImage};
use serde_json::Value;

fn eglpr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eglpr")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let o = eglpr(args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

struct Fixture {
    root: PathBuf,
    weights: PathBuf,
    scenes: PathBuf,
}

/// A small corpus, a briefly trained desk model and a few scenes, built once.
fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let root = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-fixture");
        let _ = fs::remove_dir_all(&root);
        fs::create_dir_all(&root).unwrap();
        let (chars, scenes, weights) = (root.join("chars"), root.join("scenes"), root.join("model/desk.acrw"));
        ok(&["gen-dataset", "--kind", "chars", "--out", p(&chars), "--seed", "5", "--per-class", "20"]);
        ok(&["gen-dataset", "--kind", "scenes", "--out", p(&scenes), "--seed", "6", "--count", "4"]);
        ok(&["train", "--data", p(&chars), "--out", p(&weights), "--epochs", "3", "--seed", "1"]);
        Fixture { root, weights, scenes }
    })
}

#[test]
fn char_corpus_counts_and_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let out = ok(&["gen-dataset", "--kind", "chars", "--out", p(&a), "--seed", "9", "--per-class", "3"]);
    assert!(out.contains("78 character images"));
    ok(&["gen-dataset", "--kind", "chars", "--out", p(&b), "--seed", "9", "--per-class", "3"]);
    let files = dir_bytes(&a);
    assert_eq!(files.len(), 79);
    let manifest = fs::read_to_string(a.join("labels.tsv")).unwrap();
    assert_eq!(manifest.lines().count(), 78);
    for line in manifest.lines() {
        let (name, class) = line.split_once('\t').unwrap();
        assert!(a.join(name).exists());
        assert!(class.parse::<usize>().unwrap() < 26);
    }
    assert_eq!(files, dir_bytes(&b));
}

#[test]
fn scene_corpus_counts_and_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["gen-dataset", "--kind", "scenes", "--out", p(&a), "--seed", "3", "--count", "3"]);
    ok(&["gen-dataset", "--kind", "scenes", "--out", p(&b), "--seed", "3", "--count", "3"]);
    let files = dir_bytes(&a);
    assert_eq!(files.iter().filter(|(n, _)| n.ends_with(".ppm")).count(), 3);
    assert_eq!(files.iter().filter(|(n, _)| n.ends_with(".json")).count(), 3);
    let truth: Value = serde_json::from_slice(&files.iter().find(|(n, _)| n.ends_with(".json")).unwrap().1).unwrap();
    assert_eq!(truth["bbox"].as_array().unwrap().len(), 4);
    assert!(truth["digits"].is_string() && truth["letters"].is_string() && truth["chars"].is_array());
    assert_eq!(files, dir_bytes(&b));
}

#[test]
fn training_writes_metrics_and_is_reproducible() {
    let f = fixture();
    let metrics = fs::read_to_string(f.weights.with_file_name("metrics.tsv")).unwrap();
    let rows: Vec<&str> = metrics.lines().collect();
    assert_eq!(rows[0], "epoch\tloss\ttrain_acc\tval_acc");
    assert_eq!(rows.len(), 4);
    for (i, r) in rows[1..].iter().enumerate() {
        assert!(r.starts_with(&format!("{}\t", i + 1)));
        assert_eq!(r.split('\t').count(), 4);
    }
    let again = f.root.join("again/desk.acrw");
    ok(&["train", "--data", p(&f.root.join("chars")), "--out", p(&again), "--epochs", "3", "--seed", "1"]);
    assert_eq!(fs::read(&f.weights).unwrap(), fs::read(&again).unwrap());
    assert_eq!(metrics, fs::read_to_string(again.with_file_name("metrics.tsv")).unwrap());
}

#[test]
fn recognize_matches_scene_truth() {
    let f = fixture();
    for i in 0..4 {
        let img = f.scenes.join(format!("scene_{i:04}.ppm"));
        let truth: Value = serde_json::from_str(&fs::read_to_string(img.with_extension("json")).unwrap()).unwrap();
        let out = ok(&["recognize", "--image", p(&img), "--weights", p(&f.weights), "--json"]);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["image"], p(&img));
        let plate = &v["plates"][0];
        assert_eq!(plate["digits"], truth["digits"]);
        assert_eq!(plate["letters"], truth["letters"]);
        for key in ["bbox", "latin", "confidence", "chars"] {
            assert!(!plate[key].is_null(), "missing {key}");
        }
        let again = ok(&["recognize", "--image", p(&img), "--weights", p(&f.weights), "--json"]);
        assert_eq!(out, again);
    }
}

#[test]
fn blank_image_has_no_plates() {
    let f = fixture();
    let tmp = tempfile::tempdir().unwrap();
    let img = tmp.path().join("blank.ppm");
    write_ppm(&RgbImage::filled(320, 240, [128, 128, 128]), &img).unwrap();
    let v: Value = serde_json::from_str(&ok(&["recognize", "--image", p(&img), "--weights", p(&f.weights), "--json"])).unwrap();
    assert_eq!(v["plates"], Value::Array(vec![]));
    assert!(ok(&["recognize", "--image", p(&img), "--weights", p(&f.weights)]).contains("no plate"));
}

#[test]
fn locate_dumps_stages_and_candidates() {
    let f = fixture();
    let tmp = tempfile::tempdir().unwrap();
    let img = f.scenes.join("scene_0001.ppm");
    ok(&["locate", "--image", p(&img), "--inspect", p(tmp.path())]);
    let input = read_pnm(&img).unwrap().into_rgb();
    for name in [
        "stage_01_gray",
        "stage_02_edges",
        "stage_03_dilated",
        "stage_04_median",
        "stage_05_filled",
        "stage_06_eroded",
        "stage_07_lines_removed",
        "stage_08_candidates",
    ] {
        let stage = read_pnm(tmp.path().join(format!("{name}.pgm"))).unwrap().into_gray();
        assert_eq!((stage.width(), stage.height()), (input.width(), input.height()));
        if name == "stage_01_gray" {
            assert_eq!(stage, to_gray(&input));
        }
    }
    let v: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("candidates.json")).unwrap()).unwrap();
    let cands = v["candidates"].as_array().unwrap();
    assert!(!cands.is_empty());
    for c in cands {
        let b: Vec<u64> = c["bbox"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect();
        assert!(b[0] + b[2] <= input.width() as u64 && b[1] + b[3] <= input.height() as u64);
    }
}

#[test]
fn eval_writes_report() {
    let f = fixture();
    let report = f.root.join("report.json");
    let out = ok(&["eval", "--scenes", p(&f.scenes), "--weights", p(&f.weights), "--report", p(&report)]);
    assert!(out.contains("recognition rate"));
    let v: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["n_scenes"], 4);
    for key in ["recognition_rate", "false_positives", "false_negatives", "char_accuracy", "confusion", "iou", "scenes"] {
        assert!(!v[key].is_null(), "missing {key}");
    }
    assert_eq!(v["confusion"].as_array().unwrap().len(), 26);
    assert_eq!(v["recognition_rate"], 1.0);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(eglpr(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(eglpr(&["gen-dataset", "--kind", "fonts", "--out", "x"]).status.code(), Some(1));

    let cfg = tmp.path().join("bad.cfg");
    fs::write(&cfg, "locator.colour = red\n").unwrap();
    let o = eglpr(&["--config", p(&cfg), "gen-dataset", "--kind", "chars", "--out", p(&tmp.path().join("c"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key"));

    let empty = tmp.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    let o = eglpr(&["train", "--data", p(&empty), "--out", p(&tmp.path().join("w.acrw"))]);
    assert_eq!(o.status.code(), Some(2));
    let o = eglpr(&["recognize", "--image", p(&tmp.path().join("none.ppm")), "--weights", p(&tmp.path().join("none.acrw"))]);
    assert_eq!(o.status.code(), Some(2));
    fs::write(tmp.path().join("junk.acrw"), b"NOPE").unwrap();
    let o = eglpr(&["eval", "--scenes", p(&empty), "--weights", p(&tmp.path().join("junk.acrw")), "--report", "r.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_is_applied() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("app.cfg");
    fs::write(&cfg, "# tiny scenes\nsynth.scene_width = 500\nsynth.scene_height = 400\nsynth.clutter = false\n").unwrap();
    let out = tmp.path().join("s");
    ok(&["--config", p(&cfg), "gen-dataset", "--kind", "scenes", "--out", p(&out), "--count", "1"]);
    let img = read_pnm(out.join("scene_0000.ppm")).unwrap().into_rgb();
    assert_eq!((img.width(), img.height()), (500, 400));
}
