use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};

use embogen::anim::save_keyframe_animation;
use embogen::synthetic::synthetic_corpus;

fn embogen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_embogen"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_corpus(dir: &Path, n: usize, frames: u32) {
    std::fs::create_dir_all(dir).unwrap();
    for a in synthetic_corpus(1, n, frames) {
        save_keyframe_animation(&a, &dir.join(format!("{}.json", a.name))).unwrap();
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn full_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    write_corpus(&corpus, 3, 20);
    let data = tmp.path().join("data");
    let ckpt = tmp.path().join("model.json");
    let lib = tmp.path().join("lib");
    let report = tmp.path().join("report.json");

    let o = embogen(&["preprocess", "--corpus", s(&corpus), "--out", s(&data), "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("3 animations"), "{}", stdout(&o));
    assert!(stdout(&o).contains("120 examples (96 train / 24 validation)"), "{}", stdout(&o));
    let manifest = std::fs::read(data.join("manifest.json")).unwrap();

    let o = embogen(&["preprocess", "--corpus", s(&corpus), "--out", s(&data), "--seed", "3"]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(data.join("manifest.json")).unwrap(), manifest);

    let o = embogen(&["train", "--data", s(&data), "--out", s(&ckpt), "--seed", "1", "--epochs", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let log = std::fs::read_to_string(tmp.path().join("model.log.csv")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].contains("beta=0.001") && lines[0].contains("lr=0.0001"));
    assert!(lines[0].contains("epochs=1"));
    assert_eq!(lines[1], "epoch,recon,kl,total,val");

    let o = embogen(&["generate", "--ckpt", s(&ckpt), "--out", s(&lib), "--radii", "3", "--valences", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("24 animations"));
    assert_eq!(std::fs::read_dir(&lib).unwrap().count(), 25);

    let o = embogen(&["metrics", "--library", s(&lib), "--ckpt", s(&ckpt), "--out", s(&report), "--no-compare"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("amplitude: 3 "));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(v["torus"]["levels"][0]["count"], 24);
    assert!(v["sphere"].is_null());
    assert!(v["valence_effect"].as_f64().unwrap() > 0.0);
}

#[test]
fn default_generate_writes_216() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    write_corpus(&corpus, 2, 12);
    let data = tmp.path().join("data");
    let ckpt = tmp.path().join("m.json");
    let lib = tmp.path().join("lib");
    assert!(embogen(&["preprocess", "--corpus", s(&corpus), "--out", s(&data), "--seed", "1"]).status.success());
    // config file supplies the epoch count
    let config = tmp.path().join("config.json");
    std::fs::write(&config, r#"{"train": {"epochs": 1, "batch": 16}}"#).unwrap();
    let o = embogen(&["--config", s(&config), "train", "--data", s(&data), "--out", s(&ckpt), "--seed", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(std::fs::read_to_string(tmp.path().join("m.log.csv")).unwrap().starts_with("# beta=0.001 lr=0.0001 epochs=1 batch=16"));
    let o = embogen(&["generate", "--ckpt", s(&ckpt), "--out", s(&lib)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_dir(&lib).unwrap().count(), 217);

    let report = tmp.path().join("r.json");
    let o = embogen(&["metrics", "--library", s(&lib), "--ckpt", s(&ckpt), "--out", s(&report)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("amplitude: 3<4<5"));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(v["sphere"]["levels"].as_array().unwrap().len(), 3);
}

#[test]
fn usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let o = embogen(&["generate", "--ckpt", "x.json", "--out", s(tmp.path()), "--radii", "3,4", "--steps", "15"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--steps"));

    let o = embogen(&["serve", "--port", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--ckpt"));

    let o = embogen(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failures_name_the_problem() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let o = embogen(&["preprocess", "--corpus", s(&empty), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("empty corpus"));

    let corpus = tmp.path().join("corpus");
    write_corpus(&corpus, 2, 12);
    std::fs::write(
        corpus.join("broken.json"),
        r#"{"name": "b", "fps": 25, "valence": 0.5, "keyframes": [{"t": 5, "joints": {}}, {"t": 2, "joints": {}}]}"#,
    )
    .unwrap();
    let o = embogen(&["preprocess", "--corpus", s(&corpus), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("broken.json"), "{}", stderr(&o));

    let o = embogen(&["metrics", "--library", s(&empty), "--ckpt", "m.json", "--out", "r.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("manifest.json"), "{}", stderr(&o));
}

#[test]
fn serve_reports_busy_port() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    write_corpus(&corpus, 2, 12);
    let data = tmp.path().join("data");
    let ckpt = tmp.path().join("m.json");
    assert!(embogen(&["preprocess", "--corpus", s(&corpus), "--out", s(&data)]).status.success());
    assert!(embogen(&["train", "--data", s(&data), "--out", s(&ckpt), "--epochs", "1"]).status.success());

    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let o = embogen(&["serve", "--ckpt", s(&ckpt), "--port", &port]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cannot listen"), "{}", stderr(&o));
}
