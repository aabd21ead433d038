use std::path::Path;
use std::process::{Command, Output};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_m2s-bench"))
        .args(args)
        .env_remove("M2S_WORKERS")
        .output()
        .unwrap()
}

fn small(out: &Path) -> Vec<String> {
    ["--out", out.to_str().unwrap(), "--set", "n_min=5", "--set", "n_max=5", "--set", "target_count=40"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

fn with<'a>(cmd: &'a [&'a str], common: &'a [String]) -> Vec<&'a str> {
    cmd.iter().copied().chain(common.iter().map(String::as_str)).collect()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(bench(&[]).status.code(), Some(1));
    assert_eq!(bench(&["run"]).status.code(), Some(1));
    assert_eq!(bench(&["gen", "--set", "no_such_key=1"]).status.code(), Some(1));
    assert_eq!(bench(&["gen", "--set", "n_min=9", "--set", "n_max=5"]).status.code(), Some(1));
    assert_eq!(bench(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_dataset_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bench(&["run", "--solver", "qw", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn full_pipeline_and_oracle_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let common = small(dir.path());
    let gen = bench(&with(&["gen"], &common));
    assert_eq!(gen.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&gen.stdout).contains("n=5 kept "));
    for solver in ["twosat", "classical", "qw", "aqc"] {
        let out = bench(&with(&["run", "--solver", solver, "--workers", "2"], &common));
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(bench(&with(&["analyze"], &common)).status.code(), Some(0));
    for f in ["fig2_heatmap.csv", "fig3_percentiles.csv", "fig7_scaling.csv", "summary.txt"] {
        assert!(dir.path().join("analysis").join(f).exists(), "{f}");
    }
    assert_eq!(bench(&with(&["oracle"], &common)).status.code(), Some(0));

    let manifest = std::fs::read_to_string(dir.path().join("dataset/manifest.tsv")).unwrap();
    let (id, rel) = manifest.lines().next().unwrap().split_once('\t').unwrap();
    std::fs::write(dir.path().join("dataset").join(rel), "p cnf 5 1\n1 1 0\n").unwrap();
    let out = bench(&with(&["oracle"], &common));
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains(id));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "# profile\nmaster_seed = 7\nn_max = 6\n").unwrap();
    let out = bench(&["config", "--config", path.to_str().unwrap(), "--set", "rounds=5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("master_seed = 7") && text.contains("n_max = 6") && text.contains("rounds = 5"));
    assert!(text.contains("# config_hash="));
}
