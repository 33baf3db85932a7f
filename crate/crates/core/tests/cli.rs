use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mmap_birl::eval::CSV_HEADER;
use mmap_birl::observation::TrajectoryBatch;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mmap-birl"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const FOREST: &str = "seed = 3\nenvironment = \"forestworld\"\n\
    [demonstrations]\ntrajectories = 10\nhorizon = 8\nocclusion_rate = 0.2\n";

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn generate_writes_block_occluded_batch() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", FOREST);
    let stdout = ok(dir.path(), &["generate", "--config", "c.toml", "--out", "b.txt"]);
    assert_eq!(stdout.lines().count(), 2);
    assert!(stdout.starts_with("sha256:"));
    let text = fs::read_to_string(dir.path().join("b.txt")).unwrap();
    let lines: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(lines.len(), 10);
    for line in lines {
        assert_eq!(line.split_whitespace().filter(|t| *t == "#").count(), 2, "{line}");
    }
    assert!(dir.path().join("b.txt.truth").exists());
    assert!(dir.path().join("b.txt.toml").exists());
}

#[test]
fn no_occlusion_gives_no_markers() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", &FOREST.replace("occlusion_rate = 0.2", "occlusion_rate = 0.0"));
    ok(dir.path(), &["generate", "--config", "c.toml", "--out", "b.txt"]);
    let text = fs::read_to_string(dir.path().join("b.txt")).unwrap();
    assert!(!text.contains('#'));
}

#[test]
fn generate_digests_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", FOREST);
    let a = ok(dir.path(), &["generate", "--config", "c.toml", "--out", "a.txt"]);
    let b = ok(dir.path(), &["generate", "--config", "c.toml", "--out", "b.txt"]);
    let digests = |s: &str| s.lines().map(|l| l.split_whitespace().next().unwrap().to_string()).collect::<Vec<_>>();
    assert_eq!(digests(&a), digests(&b));
    let c = ok(dir.path(), &["generate", "--config", "c.toml", "--seed", "4", "--out", "c.txt"]);
    assert_ne!(digests(&a), digests(&c));
}

#[test]
fn empty_batch_is_an_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", FOREST);
    write(dir.path(), "empty.txt", "");
    let out = run(dir.path(), &["learn", "--config", "c.toml", "--out", "learned", "empty.txt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    assert!(!dir.path().join("learned").exists());

    write(dir.path(), "none.txt", "T=8 N=0 O=64\n");
    let out = run(dir.path(), &["learn", "--config", "c.toml", "--out", "learned", "none.txt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("learned").exists());
}

#[test]
fn noiseless_batch_learns_the_expert_on_visited_states() {
    let dir = tempfile::tempdir().unwrap();
    let config = "seed = 3\nenvironment = \"forestworld\"\n[demonstrations]\ntrajectories = 50\nhorizon = 20\n";
    write(dir.path(), "c.toml", config);
    ok(dir.path(), &["generate", "--config", "c.toml", "--out", "b.txt"]);
    ok(dir.path(), &["learn", "--config", "c.toml", "--out", "learned", "b.txt"]);
    let policy = fs::read_to_string(dir.path().join("learned/policy.csv")).unwrap();
    let learned: Vec<usize> = policy
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let env = mmap_birl::envs::resolve_environment("forestworld", None).unwrap();
    let expert = env.expert_policy().unwrap();
    let truth = fs::read_to_string(dir.path().join("b.txt.truth")).unwrap();
    let (truths, _, _) = mmap_birl::observation::parse_ground_truth(&truth).unwrap();
    let visited = mmap_birl::eval::visited_states(&truths, 16);
    let goal = mmap_birl::envs::forestworld::cell_index(3, 3);
    for s in (0..16).filter(|&s| visited[s] && s != goal) {
        assert_eq!(learned[s], expert.action(s), "state {s}");
    }
}

#[test]
fn methods_write_distinct_evaluable_weights() {
    let dir = tempfile::tempdir().unwrap();
    let config = FOREST.replace("environment = \"forestworld\"\n", "environment = \"forestworld\"\nnoise = 0.3\n");
    write(dir.path(), "c.toml", &config);
    ok(dir.path(), &["generate", "--config", "c.toml", "--out", "b.txt"]);
    let learn_out = run(dir.path(), &["learn", "--config", "c.toml", "--method", "mmap", "--out", "mmap", "b.txt"]);
    assert!(matches!(learn_out.status.code(), Some(0) | Some(3)));
    let learn_out = run(dir.path(), &["learn", "--config", "c.toml", "--method", "em", "--out", "em", "b.txt"]);
    assert!(matches!(learn_out.status.code(), Some(0) | Some(3)));
    let a = fs::read_to_string(dir.path().join("mmap/weights.json")).unwrap();
    let b = fs::read_to_string(dir.path().join("em/weights.json")).unwrap();
    assert_ne!(a, b);
    for (name, expected) in [("mmap", "mmap"), ("em", "em")] {
        let report = ok(dir.path(), &["evaluate", "--config", "c.toml", &format!("{name}/weights.json")]);
        let mut lines = report.lines();
        assert_eq!(lines.next(), Some("environment,method,ile"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[1], expected);
        assert!(row[2].parse::<f64>().unwrap() >= 0.0);
    }
    for file in ["reward.csv", "policy.csv", "diagnostics.jsonl", "config.toml"] {
        assert!(dir.path().join("mmap").join(file).exists(), "{file}");
    }
}

#[test]
fn true_weights_evaluate_to_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", "seed = 1\nenvironment = \"onionworld\"\n");
    let weights = r#"{"environment":"onionworld","method":"mmap","converged":true,"iterations":1,
        "weights":[1.0,-1.0,-1.0,1.0,0.1,0.1],"config":{"seed":1,"environment":"onionworld"}}"#;
    write(dir.path(), "w.json", weights);
    let report = ok(dir.path(), &["evaluate", "--config", "c.toml", "--out", "r.csv", "w.json"]);
    let mut lines = report.lines();
    assert_eq!(lines.next(), Some("environment,method,ile,tp,fp,tn,fn,precision,recall"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[2].parse::<f64>().unwrap(), 0.0);
    assert_eq!(row[7], "1.000");
    assert_eq!(row[8], "1.000");
    assert_eq!(fs::read_to_string(dir.path().join("r.csv")).unwrap(), report);
}

#[test]
fn mismatched_weights_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", "seed = 1\nenvironment = \"forestworld\"\n");
    write(
        dir.path(),
        "w.json",
        r#"{"environment":"x","method":"mmap","converged":true,"iterations":1,"weights":[1.0],"config":{"seed":1,"environment":"forestworld"}}"#,
    );
    let out = run(dir.path(), &["evaluate", "--config", "c.toml", "w.json"]);
    assert_eq!(out.status.code(), Some(1));
}

fn sweep_config(levels: &str) -> String {
    format!(
        "seed = 5\nenvironment = \"forestworld\"\nocclusion_levels = [{levels}]\nnoise_levels = [0.3]\n\
         batches = 2\ntrajectories_per_batch = 3\nhorizon = 6\nmethods = [\"mmap\"]\n"
    )
}

#[test]
fn one_cell_sweep_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "s.toml", &sweep_config("0.2"));
    let stdout = ok(dir.path(), &["sweep", "--config", "s.toml", "--out", "r.csv"]);
    assert!(stdout.contains("best occlusion=0.2 noise=0.3: mmap"));
    let csv = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], CSV_HEADER);
    assert!(lines[1].starts_with("mmap,0.2,0.3,2,"));
    assert!(lines[1].ends_with(",na,na,contiguous_block"));
    assert!(dir.path().join("r.csv.jsonl").exists());
}

#[test]
fn sweep_resumes_from_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "one.toml", &sweep_config("0.1"));
    write(dir.path(), "two.toml", &sweep_config("0.1, 0.3"));
    ok(dir.path(), &["sweep", "--config", "two.toml", "--out", "full.csv"]);
    ok(dir.path(), &["sweep", "--config", "one.toml", "--out", "part.csv"]);
    let partial = fs::read_to_string(dir.path().join("part.csv")).unwrap();
    // Poison the completed row: a resumed run must keep it verbatim.
    let poisoned = partial.replacen("mmap,0.1,0.3,2,", "mmap,0.1,0.3,2,12345", 1);
    fs::write(dir.path().join("part.csv"), &poisoned).unwrap();
    ok(dir.path(), &["sweep", "--config", "two.toml", "--out", "part.csv"]);
    let resumed = fs::read_to_string(dir.path().join("part.csv")).unwrap();
    let full = fs::read_to_string(dir.path().join("full.csv")).unwrap();
    assert!(resumed.contains("mmap,0.1,0.3,2,12345"));
    assert_eq!(resumed.lines().nth(2), full.lines().nth(2));
    assert_eq!(resumed.lines().count(), 3);
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn outputs_do_not_depend_on_job_count() {
    let mut trees = Vec::new();
    for jobs in ["1", "8", "8"] {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "c.toml", &FOREST.replace("seed = 3\n", "seed = 3\nnoise = 0.3\n"));
        write(dir.path(), "s.toml", &sweep_config("0.1, 0.2"));
        let mut stdout = ok(dir.path(), &["--jobs", jobs, "generate", "--config", "c.toml", "--out", "b.txt"]);
        for method in ["mmap", "ignore", "em"] {
            let out = run(
                dir.path(),
                &["--jobs", jobs, "learn", "--config", "c.toml", "--method", method, "--out", method, "b.txt"],
            );
            stdout.push_str(&String::from_utf8(out.stdout).unwrap());
            stdout.push_str(&ok(
                dir.path(),
                &["--jobs", jobs, "evaluate", "--config", "c.toml", &format!("{method}/weights.json")],
            ));
        }
        stdout.push_str(&ok(dir.path(), &["--jobs", jobs, "sweep", "--config", "s.toml", "--out", "r.csv"]));
        let mut files = tree(dir.path());
        files.push(("stdout".into(), stdout.into_bytes()));
        trees.push(files);
    }
    assert_eq!(trees[0], trees[1]);
    assert_eq!(trees[1], trees[2]);
    let batch = &trees[0].iter().find(|(n, _)| n == "b.txt").unwrap().1;
    let parsed = TrajectoryBatch::parse(std::str::from_utf8(batch).unwrap()).unwrap();
    assert_eq!(parsed.trajectories.len(), 10);
}

#[test]
fn bad_config_reports_the_field() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", "seed = 1\nenvironment = \"forestworld\"\n[demonstrations]\nocclusion_rate = 1.5\n");
    let out = run(dir.path(), &["generate", "--config", "c.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("demonstrations"));
    write(dir.path(), "d.toml", "environment = \"forestworld\"\n");
    let out = run(dir.path(), &["generate", "--config", "d.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}
