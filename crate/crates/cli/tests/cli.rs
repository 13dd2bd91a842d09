use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn gg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_guide-guard"))
        .args(args)
        .current_dir(dir)
        .env_remove("GG_CONFIG")
        .output()
        .expect("run guide-guard")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = gg(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn revcomp(s: &str) -> String {
    s.chars()
        .rev()
        .map(|c| match c {
            'A' => 'U',
            'U' => 'A',
            'C' => 'G',
            'G' => 'C',
            other => panic!("unexpected base {other}"),
        })
        .collect()
}

fn synth(dir: &Path, name: &str, targets: usize) -> PathBuf {
    ok(dir, &["synth", "--targets", &targets.to_string(), "-o", name]);
    dir.join(name)
}

#[test]
fn synth_output_is_byte_stable_and_blocked_by_target() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let a = std::fs::read(synth(d, "a.csv", 12)).unwrap();
    let b = std::fs::read(synth(d, "b.csv", 12)).unwrap();
    assert_eq!(a, b);
    let stdout = ok(d, &["synth", "--targets", "12"]).stdout;
    assert_eq!(stdout, a);

    ok(d, &["synth", "--targets", "8", "--guides-per-target", "10", "--noise", "0", "-o", "g.csv"]);
    let rows = rows(&d.join("g.csv"));
    assert_eq!(rows.len(), 8 * 11);
    for block in rows.chunks(11) {
        assert_eq!(block[0][0], revcomp(&block[0][1]), "block must open with the perfect match");
        assert!(block.iter().all(|r| r[1] == block[0][1]));
        assert!(block[1..].iter().all(|r| r[0] != revcomp(&r[1])));
    }

    let other = std::fs::read(synth_with_seed(d, 8)).unwrap();
    assert_ne!(other, a);
}

fn synth_with_seed(dir: &Path, seed: u64) -> PathBuf {
    ok(dir, &["synth", "--targets", "12", "--seed", &seed.to_string(), "-o", "seeded.csv"]);
    dir.join("seeded.csv")
}

#[test]
fn analyze_writes_every_table() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = synth(d, "s.csv", 20);
    let out = ok(d, &["analyze", data.to_str().unwrap(), "-o", "an", "--json"]);
    assert!(stderr(&out).contains("160 accepted, 0 rejected"));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["summary"]["records"], 160);
    assert_eq!(report["summary"]["perfect_matches"], 20);

    let bins = [("single", 23), ("consecutive2", 22), ("consecutive3", 21), ("per_base_A", 23), ("per_base_C", 23), ("per_base_G", 23), ("per_base_U", 23)];
    for (name, n) in bins {
        let text = std::fs::read_to_string(d.join("an").join(format!("{name}.csv"))).unwrap();
        assert_eq!(text.lines().next(), Some("position,mean,count"));
        assert_eq!(text.lines().count(), 1 + n, "{name}");
    }
    let pairs = std::fs::read_to_string(d.join("an/pairwise.csv")).unwrap();
    assert_eq!(pairs.lines().count(), 1 + 23 * 22 / 2);
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(d.join("an/summary.json")).unwrap()).unwrap();
    assert_eq!(summary, report["summary"]);

    let single = rows(&d.join("an/single.csv"));
    let counted: usize = single.iter().map(|r| r[2].parse::<usize>().unwrap()).sum();
    assert_eq!(counted as u64, report["summary"]["single"].as_u64().unwrap());

    let median = ok(d, &["analyze", data.to_str().unwrap(), "-o", "med", "--aggregator", "median"]);
    assert!(median.status.success());
    assert!(std::fs::read_to_string(d.join("med/single.csv")).unwrap().starts_with("position,median,count"));
}

#[test]
fn analyze_with_no_matching_records_flags_every_bin() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("perfect.csv"),
        "guide,target,efficacy,gene\n\
         ACGUACGUACGUACGUACGUACG,CGUACGUACGUACGUACGUACGU,0.5,X\n\
         AAAAAAAAAAAAAAAAAAAAAAA,UUUUUUUUUUUUUUUUUUUUUUU,0.7,X\n",
    )
    .unwrap();
    ok(d, &["analyze", "perfect.csv", "-o", "an"]);
    let single = rows(&d.join("an/single.csv"));
    assert_eq!(single.len(), 23);
    assert!(single.iter().all(|r| r[1] == "NA" && r[2] == "0"));
    assert!(rows(&d.join("an/pairwise.csv")).iter().all(|r| r[2] == "NA"));
}

#[test]
fn malformed_rows_are_skipped_or_fatal_under_strict() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("bad.csv"),
        "guide,target,efficacy,gene\n\
         ACGUACGUACGUACGUACGUACG,CGUACGUACGUACGUACGUACGU,0.5,X\n\
         ACGUACGUACGUACGUACGUACX,CGUACGUACGUACGUACGUACGU,0.5,X\n\
         ACGUACGUACGUACGUACGUAC,CGUACGUACGUACGUACGUACGU,0.5,X\n",
    )
    .unwrap();
    let lenient = ok(d, &["analyze", "bad.csv", "-o", "an"]);
    let err = stderr(&lenient);
    assert!(err.contains("1 accepted, 2 rejected"), "{err}");
    assert!(err.contains("line 3") && err.contains("line 4"), "{err}");

    let strict = gg(d, &["analyze", "bad.csv", "--strict", "-o", "an2"]);
    assert_eq!(code(&strict), 3);
    assert!(stderr(&strict).contains("line 3"));

    std::fs::write(d.join("nocol.csv"), "guide,efficacy\nACGUACGUACGUACGUACGUACG,1\n").unwrap();
    let missing = gg(d, &["analyze", "nocol.csv"]);
    assert_eq!(code(&missing), 3);
    assert!(stderr(&missing).contains("target"));
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&gg(d, &["synth", "--bogus"])), 2);
    assert_eq!(code(&gg(d, &["train", "x.csv", "--weights", "heavy"])), 2);
    std::fs::write(d.join("bad.toml"), "[training]\nepochz = 1\n").unwrap();
    let out = gg(d, &["--config", "bad.toml", "synth", "-o", "x.csv"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("epochz"));
    std::fs::write(d.join("classes.toml"), "[training]\nn_classes = 4\n").unwrap();
    assert_eq!(code(&gg(d, &["--config", "classes.toml", "synth", "-o", "x.csv"])), 2);
    assert_eq!(code(&gg(d, &["train"])), 2);
    assert_eq!(code(&gg(d, &["train", "missing.csv"])), 1);
}

#[test]
fn config_file_sets_synthesis_and_env_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("run.toml"), "[synth]\nn_targets = 4\nguides_per_target = 2\n[paths]\ndata = \"s.csv\"\n").unwrap();
    ok(d, &["--config", "run.toml", "synth", "-o", "s.csv"]);
    assert_eq!(rows(&d.join("s.csv")).len(), 12);

    let out = Command::new(env!("CARGO_BIN_EXE_guide-guard"))
        .args(["analyze", "-o", "an", "--json"])
        .current_dir(d)
        .env("GG_CONFIG", "run.toml")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["summary"]["records"], 12);
}

#[test]
fn train_screen_gate_and_bench() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = synth(d, "s.csv", 100);
    ok(d, &["train", data.to_str().unwrap(), "-o", "m.gg"]);
    assert!(d.join("m.gg.history.json").exists());
    let history: Value = serde_json::from_str(&std::fs::read_to_string(d.join("m.gg.history.json")).unwrap()).unwrap();
    let epochs = history["history"]["epochs"].as_array().unwrap();
    assert_eq!(epochs.len(), 30);
    assert!(epochs[29]["accuracy"].as_f64().unwrap() > 0.9, "{}", epochs[29]);

    let first = &rows(&data)[0];
    assert_eq!(first[0], revcomp(&first[1]));
    let out = ok(d, &["screen", "m.gg", "--guide", &first[0], "--target", &first[1], "--gate"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header, "index,guide,target,class,p0,p1,p2,p3,p4,p5,p6,p7,verdict");
    let line: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(line[12], "ACCEPT");
    let mass: f64 = line[4..12].iter().map(|p| p.parse::<f64>().unwrap()).sum();
    assert!((mass - 1.0).abs() < 1e-9);

    let dna = first[0].replace('U', "T").to_lowercase();
    let dna_out = ok(d, &["screen", "m.gg", "--guide", &dna, "--target", &first[1], "--json"]);
    let parsed: Value = serde_json::from_slice(&dna_out.stdout).unwrap();
    assert_eq!(parsed[0]["verdict"], "ACCEPT");

    let all = gg(d, &["screen", "m.gg", "--input", data.to_str().unwrap(), "--gate", "-o", "scores.csv"]);
    assert_eq!(code(&all), 5, "{}", stderr(&all));
    let again = ok(d, &["screen", "m.gg", "--input", data.to_str().unwrap(), "-o", "scores2.csv"]);
    assert!(stderr(&again).contains("screened 800 pairs"));
    assert_eq!(std::fs::read(d.join("scores.csv")).unwrap(), std::fs::read(d.join("scores2.csv")).unwrap());

    let bytes = std::fs::read(d.join("m.gg")).unwrap();
    let mut flipped = bytes.clone();
    flipped[bytes.len() / 2] ^= 0x10;
    std::fs::write(d.join("flipped.gg"), &flipped).unwrap();
    assert_eq!(code(&gg(d, &["screen", "flipped.gg", "--guide", &first[0], "--target", &first[1]])), 4);
    std::fs::write(d.join("short.gg"), &bytes[..bytes.len() - 40]).unwrap();
    assert_eq!(code(&gg(d, &["bench", "short.gg"])), 4);
    assert_eq!(code(&gg(d, &["screen", "m.gg", "--guide", "ACGU", "--target", "ACGU"])), 3);

    let bench = ok(d, &["bench", "m.gg", "--n", "200", "--json"]);
    let report: Value = serde_json::from_slice(&bench.stdout).unwrap();
    assert_eq!(report["inputs"], 200);
    assert!(report["mean_seconds"].as_f64().unwrap() > 0.0);
    assert!(report["evaluations"].as_u64().unwrap() >= 200);
}

#[test]
fn training_is_reproducible_and_encoding_flags_change_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = synth(d, "s.csv", 12);
    let data = data.to_str().unwrap();
    ok(d, &["train", data, "--epochs", "2", "-o", "a.gg"]);
    ok(d, &["train", data, "--epochs", "2", "-o", "b.gg"]);
    assert_eq!(std::fs::read(d.join("a.gg")).unwrap(), std::fs::read(d.join("b.gg")).unwrap());
    for (name, flags) in [("gc.gg", vec!["--weights", "gc-boost"]), ("none.gg", vec!["--weights", "none"]), ("cat.gg", vec!["--mode", "concat", "--no-position-emphasis"])] {
        let mut args = vec!["train", data, "--epochs", "2", "-o", name];
        args.extend(flags);
        ok(d, &args);
        assert_ne!(std::fs::read(d.join(name)).unwrap(), std::fs::read(d.join("a.gg")).unwrap(), "{name}");
    }
}

#[test]
fn evaluate_reports_subsets_and_ablation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = synth(d, "s.csv", 16);
    let out = ok(d, &["evaluate", data.to_str().unwrap(), "--k", "3", "--epochs", "2", "-o", "ev", "--ablation", "--json", "--final-model", "final.gg"]);
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["n_records"], 128);
    assert_eq!(summary["k"], 3);
    let perfect = summary["perfect_match"]["count"].as_u64().unwrap();
    let mismatch = summary["mismatch"]["count"].as_u64().unwrap();
    assert_eq!((perfect, perfect + mismatch), (16, 128));
    assert_eq!(summary["ablation"].as_array().unwrap().len(), 3);

    let report: Value = serde_json::from_str(&std::fs::read_to_string(d.join("ev/report.json")).unwrap()).unwrap();
    assert_eq!(report["predictions"].as_array().unwrap().len(), 128);
    assert_eq!(report["folds"].as_array().unwrap().len(), 3);
    let preds = rows(&d.join("ev/predictions.csv"));
    assert_eq!(preds.len(), 128);
    assert!(preds.iter().enumerate().all(|(i, r)| r[0] == i.to_string()));
    assert!(std::fs::read_to_string(d.join("ev/roc.csv")).unwrap().starts_with("fpr,tpr\n"));
    assert!(std::fs::read_to_string(d.join("ev/report.txt")).unwrap().contains("Perfect Matches"));
    assert!(std::fs::read_to_string(d.join("ev/ablation.txt")).unwrap().contains("no-position-emphasis"));
    assert!(d.join("final.gg").exists());

    let first = std::fs::read(d.join("ev/report.json")).unwrap();
    ok(d, &["evaluate", data.to_str().unwrap(), "--k", "3", "--epochs", "2", "-o", "ev2"]);
    assert_eq!(first, std::fs::read(d.join("ev2/report.json")).unwrap());
}
