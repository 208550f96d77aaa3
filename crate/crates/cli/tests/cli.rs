use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = "\
[experiment]
seeds = 3 4

[synth]
negative.count = 40
typical.count = 40
atypical.count = 40
uncertain.count = 40
noise_rate = 0.1

[train]
layers = 2 4 2
iterations = 60
checkpoint_every = 20

[method.U-Ones]
strategy = U-Ones

[method.PU-RM]
strategy = PU-RM
tau = 0.3
";

fn riskmod(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riskmod"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn riskmod")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn tiny(dir: &Path) -> String {
    let path = dir.join("tiny.cfg");
    fs::write(&path, TINY).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_results_and_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    let out = stdout(&riskmod(&["run", "--config", &cfg, "--out", "res"], dir.path()));
    assert!(out.starts_with("method,metric,mean,std,per_seed\n"), "{out}");
    assert!(out.contains("PU-RM,auc_fg,"));
    let res = dir.path().join("res");
    assert_eq!(fs::read_to_string(res.join("results.csv")).unwrap(), out);
    for seed in [3, 4] {
        let run = res.join(format!("runs/PU-RM/seed-{seed}"));
        assert!(run.join("best.bin").is_file());
        assert!(run.join("ckpt-00000060.bin").is_file());
        let log = fs::read_to_string(run.join("log.csv")).unwrap();
        assert_eq!(log.lines().count(), 4, "{log}");
    }

    // the best checkpoint feeds the boundary export
    let best = res.join("runs/U-Ones/seed-3/best.bin");
    let grid = stdout(&riskmod(
        &[
            "boundary",
            "--checkpoint",
            best.to_str().unwrap(),
            "--resolution",
            "3",
            "--bounds",
            "-1,1,-2,2",
        ],
        dir.path(),
    ));
    let lines: Vec<&str> = grid.lines().collect();
    assert_eq!(lines.len(), 10, "{grid}");
    assert!(
        lines[0] == "x,y,p_pos"
            && lines[1].starts_with("-1.000000,-2.000000,")
            && lines[9].starts_with("1.000000,2.000000,"),
        "{grid}"
    );
}

#[test]
fn seed_override_replaces_the_seed_list() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    let out = stdout(&riskmod(
        &["run", "--config", &cfg, "--out", "r", "--seed-override", "9"],
        dir.path(),
    ));
    assert!(dir.path().join("r/runs/U-Ones/seed-9").is_dir());
    assert!(!dir.path().join("r/runs/U-Ones/seed-3").exists());
    // one run per method: zero spread
    assert!(
        out.lines()
            .any(|l| l.starts_with("U-Ones,auc_fg,") && l.split(',').nth(3) == Some("0.000000")),
        "{out}"
    );
}

#[test]
fn tausweep_writes_its_own_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    let out = stdout(&riskmod(
        &["tausweep", "--config", &cfg, "--out", "s", "--taus", "0.2,0.4"],
        dir.path(),
    ));
    let csv = fs::read_to_string(dir.path().join("s/tausweep.csv")).unwrap();
    assert_eq!(csv, out);
    for m in ["U-Ones,", "PU-RM@0.2,", "PU-RM@0.4,"] {
        assert!(csv.lines().any(|l| l.starts_with(m)), "{m} missing from {csv}");
    }
}

#[test]
fn losscurves_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdout(&riskmod(&["losscurves", "--taus", "0.5", "--step", "0.25"], dir.path()));
    assert_eq!(out.lines().next(), Some("s,ce,pce_0.5"));
    // s = 0 is skipped, where CE diverges
    assert_eq!(out.lines().nth(1), Some("0.250000,1.386294,1.193147"));
    assert_eq!(out.lines().count(), 5);
    assert_eq!(out.lines().last(), Some("1.000000,0.000000,0.000000"));
    riskmod(&["losscurves", "--out", "c.csv"], dir.path());
    assert!(fs::read_to_string(dir.path().join("c.csv"))
        .unwrap()
        .starts_with("s,ce,pce_0.1,"));
}

#[test]
fn label_prints_subcategory_and_hits() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdout(&riskmod(&["label", "Mild edema has improved."], dir.path()));
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("atypical"));
    assert_eq!(lines.count(), 2);
    let out = stdout(&riskmod(
        &["label", "There is consolidation in the right lung."],
        dir.path(),
    ));
    assert_eq!(out, "typical\n");
}

#[test]
fn gen_is_deterministic_and_val_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    let a = stdout(&riskmod(&["gen", "--config", &cfg], dir.path()));
    let b = stdout(&riskmod(&["gen", "--config", &cfg], dir.path()));
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 160);
    let other = stdout(&riskmod(&["gen", "--config", &cfg, "--seed-override", "5"], dir.path()));
    assert_ne!(a, other);
    let val = stdout(&riskmod(&["gen", "--config", &cfg, "--split", "val"], dir.path()));
    assert_ne!(a, val);
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["run", "--config", "missing.cfg"],
        vec!["losscurves", "--taus", "1.5"],
        vec!["boundary", "--checkpoint", "missing.bin"],
    ] {
        let o = riskmod(&args, dir.path());
        assert!(!o.status.success(), "{args:?}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.starts_with("error: "), "{args:?}: {err}");
    }
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "[train]\nlr = fast\n").unwrap();
    let o = riskmod(&["run", "--config", bad.to_str().unwrap()], dir.path());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(!o.status.success() && err.contains(":2"), "{err}");
}
