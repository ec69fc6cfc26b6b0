use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn roicodec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roicodec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = roicodec(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, seeds: &str) {
    ok(&["synth", "--seeds", seeds, "--size", "128", "-o", p(dir)]);
}

#[test]
fn round_trip_through_files() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    synth(&corpus, "0..1");
    let img = corpus.join("synth_000.pgm");
    let prob = corpus.join("synth_000.prob.pgm");
    let gt = corpus.join("synth_000.gt.pgm");
    let jls = tmp.path().join("out.jls");
    let proc = tmp.path().join("proc.pgm");
    let dec = tmp.path().join("dec.pgm");
    let plan = tmp.path().join("plan.csv");
    let edges = tmp.path().join("edges.pgm");

    let summary = ok(&[
        "compress", p(&img), p(&prob), "-o", p(&jls), "--gamma0", "8",
        "--dump-processed", p(&proc), "--dump-plan", p(&plan), "--dump-edges", p(&edges),
    ]);
    assert!(summary.contains("n_b="), "{summary}");
    ok(&["decompress", p(&jls), "-o", p(&dec)]);
    assert_eq!(fs::read(&dec).unwrap(), fs::read(&proc).unwrap());
    assert!(fs::read_to_string(&plan).unwrap().lines().count() > 1);
    assert!(fs::read(&edges).unwrap().starts_with(b"P5"));

    let m = ok(&["metrics", p(&img), p(&dec), p(&gt)]);
    assert!(m.contains("psnr="), "{m}");
    let same = ok(&["metrics", p(&img), p(&img), p(&gt)]);
    assert!(same.contains("psnr=lossless"), "{same}");
}

#[test]
fn worker_count_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    synth(&corpus, "0..2");
    let a = tmp.path().join("a.csv");
    let b = tmp.path().join("b.csv");
    for (out, workers) in [(&a, "1"), (&b, "8")] {
        ok(&[
            "sweep", p(&corpus), "--gamma0", "1,8,64", "--compare-edges", "-o", p(out), "--workers", workers,
        ]);
    }
    let csv = fs::read(&a).unwrap();
    assert_eq!(csv, fs::read(&b).unwrap());
    assert!(String::from_utf8(csv).unwrap().contains("mean"));

    let img = corpus.join("synth_001.pgm");
    let prob = corpus.join("synth_001.prob.pgm");
    let (x, y) = (tmp.path().join("x.jls"), tmp.path().join("y.jls"));
    ok(&["compress", p(&img), p(&prob), "-o", p(&x), "--workers", "1"]);
    ok(&["compress", p(&img), p(&prob), "-o", p(&y), "--workers", "6"]);
    assert_eq!(fs::read(&x).unwrap(), fs::read(&y).unwrap());
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    synth(&corpus, "4..4");
    let img = corpus.join("synth_004.pgm");
    let prob = corpus.join("synth_004.prob.pgm");
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# lossless background\ngamma0 = 64\nno_smoothing = true\neq1 = min\n").unwrap();

    let from_cfg = tmp.path().join("cfg.pgm");
    let from_flag = tmp.path().join("flag.pgm");
    let jls = tmp.path().join("o.jls");
    ok(&["--config", p(&cfg), "compress", p(&img), p(&prob), "-o", p(&jls), "--dump-processed", p(&from_cfg)]);
    assert_eq!(fs::read(&from_cfg).unwrap(), fs::read(&img).unwrap());

    ok(&[
        "--config", p(&cfg), "compress", p(&img), p(&prob), "-o", p(&jls),
        "--gamma0", "1", "--smoothing", "--dump-processed", p(&from_flag),
    ]);
    assert_ne!(fs::read(&from_flag).unwrap(), fs::read(&img).unwrap());
}

#[test]
fn failures_exit_nonzero_with_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing.pgm");
    let out = tmp.path().join("o.jls");

    let r = roicodec(&["compress", p(&missing), p(&missing), "-o", p(&out)]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("input:"));

    let junk = tmp.path().join("junk.jls");
    fs::write(&junk, b"not a stream").unwrap();
    let r = roicodec(&["decompress", p(&junk), "-o", p(&out)]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("decode:"));

    let corpus = tmp.path().join("corpus");
    synth(&corpus, "0..0");
    let img = corpus.join("synth_000.pgm");
    let prob = corpus.join("synth_000.prob.pgm");
    let r = roicodec(&["compress", p(&img), p(&prob), "-o", p(&out), "--sigma=-1"]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("validate:"));

    let cfg = tmp.path().join("bad.cfg");
    fs::write(&cfg, "gamma = 3\n").unwrap();
    let r = roicodec(&["--config", p(&cfg), "compress", p(&img), p(&prob), "-o", p(&out)]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("config:"));

    let r = roicodec(&["sweep", p(&corpus), "--gamma0", "8", "-o", p(&tmp.path().join("s.csv"))]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("sweep:"));
}
