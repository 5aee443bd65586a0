use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const FIT_ARTIFACTS: [&str; 10] = [
    "coarse.obj",
    "detail.obj",
    "displacement.uv",
    "displacement.png",
    "render_a.png",
    "render_b.png",
    "render_c.png",
    "render_d.png",
    "history.jsonl",
    "summary.json",
];

fn facesketch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_facesketch"))
        .args(args)
        .env_remove("FACESKETCH_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path) -> PathBuf {
    let out = dir.join("synth");
    let o = facesketch(&["synth", &format!("--out_dir={}", s(&out))]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn quick_fit(synth: &Path, out: &Path) -> Output {
    facesketch(&[
        "fit",
        "--sketch",
        s(&synth.join("sketch.png")),
        "--image",
        s(&synth.join("photo.png")),
        "--landmarks",
        s(&synth.join("landmarks.json")),
        "--basis",
        s(&synth.join("basis.s2fb")),
        "--camera.size=48",
        "--fit.iters_a=12",
        "--fit.iters_b=4",
        "--fit.iters_c=4",
        &format!("--out_dir={}", s(out)),
    ])
}

#[test]
fn fit_writes_every_artifact_and_a_parseable_summary() {
    let dir = tempfile::tempdir().unwrap();
    let syn = synth(dir.path());
    for f in ["basis.s2fb", "sketch.png", "photo.png", "landmarks.json", "truth.json"] {
        assert!(syn.join(f).is_file(), "{f}");
    }
    let out = dir.path().join("fit");
    let o = quick_fit(&syn, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in FIT_ARTIFACTS {
        assert!(out.join(f).is_file(), "{f}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["vertices"], 1002);
    assert_eq!(summary["config"]["camera.size"], "48");
    let history = std::fs::read_to_string(out.join("history.jsonl")).unwrap();
    let stages: Vec<String> = history
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["stage"].as_str().unwrap().to_owned())
        .collect();
    assert_eq!(stages.len(), 20);
    assert_eq!((stages[0].as_str(), stages[12].as_str(), stages[19].as_str()), ("coarse", "detail", "joint"));
    let initial = summary["initial_loss"]["total"].as_f64().unwrap();
    let fitted = summary["final_loss"]["total"].as_f64().unwrap();
    assert!(fitted < initial, "{fitted} >= {initial}");
}

#[test]
fn identical_fits_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let syn = synth(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(quick_fit(&syn, &a).status.success());
    assert!(quick_fit(&syn, &b).status.success());
    for f in FIT_ARTIFACTS {
        let (x, y) = (std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
        // The summary records the output directory nowhere, so every file compares.
        assert!(x == y, "{f} differs between runs");
    }
}

#[test]
fn missing_input_exits_2_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = facesketch(&["fit", "--sketch", s(&dir.path().join("nope.png")), &format!("--out_dir={}", s(&out))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.png"));
    assert!(!out.exists());
}

#[test]
fn invalid_config_value_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let syn = synth(dir.path());
    let o = facesketch(&["fit", "--sketch", s(&syn.join("sketch.png")), "--loss.pho=-1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = facesketch(&["fit", "--sketch", s(&syn.join("sketch.png")), "--no.such_key=1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flag_beats_environment_for_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let (env_dir, flag_dir) = (dir.path().join("env"), dir.path().join("flag"));
    let run = |extra: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_facesketch"))
            .arg("synth")
            .args(extra)
            .env("FACESKETCH_OUT_DIR", &env_dir)
            .output()
            .unwrap()
    };
    assert!(run(&[]).status.success());
    assert!(env_dir.join("sketch.png").is_file());
    assert!(run(&[&format!("--out_dir={}", s(&flag_dir))]).status.success());
    assert!(flag_dir.join("sketch.png").is_file());
}

#[test]
fn sketchify_is_repeatable_and_rejects_unknown_styles() {
    let dir = tempfile::tempdir().unwrap();
    let syn = synth(dir.path());
    let (a, b) = (dir.path().join("a.png"), dir.path().join("b.png"));
    for out in [&a, &b] {
        let o = facesketch(&["sketchify", "--image", s(&syn.join("photo.png")), "--out", s(out), "--style", "shading"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let flat = dir.path().join("flat.png");
    image::RgbImage::from_pixel(20, 10, image::Rgb([90, 90, 90])).save(&flat).unwrap();
    let line = dir.path().join("line.png");
    let o = facesketch(&["sketchify", "--image", s(&flat), "--out", s(&line), "--style", "line", "--size", "16"]);
    assert!(o.status.success());
    let img = image::open(&line).unwrap().to_luma8();
    assert_eq!(img.dimensions(), (16, 16));

    let o = facesketch(&["sketchify", "--image", s(&flat), "--out", s(&line), "--style", "charcoal"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn texture_selects_fuses_and_checks() {
    let dir = tempfile::tempdir().unwrap();
    let syn = synth(dir.path());
    let fit_dir = dir.path().join("fit");
    assert!(quick_fit(&syn, &fit_dir).status.success());
    let lib = dir.path().join("lib");
    std::fs::create_dir(&lib).unwrap();
    std::fs::copy(syn.join("photo.png"), lib.join("warm.png")).unwrap();
    std::fs::write(lib.join("warm.txt"), "warm\nskin\n").unwrap();
    image::RgbImage::from_pixel(8, 8, image::Rgb([40, 30, 20])).save(lib.join("dark.png")).unwrap();
    std::fs::write(lib.join("dark.txt"), "dark\n").unwrap();

    let basis = syn.join("basis.s2fb");
    let run = |out: &Path, check: bool| {
        let out_arg = format!("--out_dir={}", s(out));
        let mut args = vec!["texture", "--prompt", "Warm skin", "--library", s(&lib), "--fit-dir", s(&fit_dir)];
        args.extend(["--basis", s(&basis), "--camera.size=48", "--fit.iters_a=10", &out_arg]);
        if check {
            args.push("--check");
        }
        facesketch(&args)
    };
    let (a, b) = (dir.path().join("ta"), dir.path().join("tb"));
    let o = run(&a, true);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("envelope check: pass"));
    assert!(run(&b, false).status.success());
    for f in ["selection.json", "fusion.uv", "fusion.png", "face.obj", "face.mtl", "face.png"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let sel: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(a.join("selection.json")).unwrap()).unwrap();
    assert_eq!(sel["selected"], "warm");
    assert!(std::fs::read_to_string(a.join("face.obj")).unwrap().starts_with("mtllib face.mtl"));

    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let o = facesketch(&["texture", "--prompt", "x", "--library", s(&empty), "--fit-dir", s(&fit_dir)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn selfcheck_reports_an_injected_fault() {
    let o = facesketch(&["selfcheck", "--inject", "sh-sign"]);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("FAIL dc-band")), "{stdout}");
    assert!(stdout.lines().any(|l| l.starts_with("PASS basis-roundtrip")), "{stdout}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("dc-band"));
}
