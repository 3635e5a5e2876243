use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mntris_core::ensemble::{draw_scattering_matrix, read_mnts, write_mnts, EnsembleSpec, PortPartition};
use mntris_core::models::{casc_channel, channel_gain, EvalCounter};
use mntris_core::RisConfiguration;
use serde_json::Value;

fn mntris(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mntris"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn report(args: &[&str]) -> Value {
    let out = mntris(args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_str(&stdout(&out)).unwrap()
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

#[test]
fn generate_writes_files_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("a");
    let out = mntris(&[
        "generate", "--n-ris", "100", "--target-mu", "0.5", "--count", "10", "--seed", "7", "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&out_dir.join("report.csv"));
    assert_eq!(rows.len(), 10);
    for (i, row) in rows.iter().enumerate() {
        let s = read_mnts(fs::File::open(out_dir.join(&row[1])).unwrap()).unwrap();
        assert_eq!(s.n_ris(), 100);
        assert_eq!(row[0].parse::<usize>().unwrap(), i);
        let mu: f64 = row[3].parse().unwrap();
        assert!((mu - 0.5).abs() < 0.1, "{mu}");
        assert!(row[4].parse::<f64>().unwrap() < 1.0);
    }
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "generate");
    assert_eq!(manifest["args"]["seed"], 7);
    assert_eq!(manifest["files"].as_array().unwrap().len(), 10);
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let out = mntris(&["generate", "--n-ris", "12", "--kappa", "0.8", "--count", "4", "--seed", "3", "--out", p.to_str().unwrap()]);
        assert_eq!(code(&out), 0);
        p
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["s_00000.mnts", "s_00003.mnts", "report.csv", "manifest.json"] {
        let (x, y) = (fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
        if f == "manifest.json" {
            // only the output path differs
            let (mut x, mut y): (Value, Value) = (serde_json::from_slice(&x).unwrap(), serde_json::from_slice(&y).unwrap());
            x["args"]["out"] = Value::Null;
            y["args"]["out"] = Value::Null;
            assert_eq!(x, y);
        } else {
            assert_eq!(x, y, "{f}");
        }
    }
}

#[test]
fn zero_kappa_reports_zero_coupling() {
    let dir = tempfile::tempdir().unwrap();
    let out = mntris(&["generate", "--n-ris", "16", "--kappa", "0", "--count", "5", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    for row in csv_rows(&dir.path().join("report.csv")) {
        assert_eq!(&row[3], "0.0");
    }
}

#[test]
fn generate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    // not passive for any draw
    assert_eq!(code(&mntris(&["generate", "--n-ris", "32", "--kappa", "50", "--out", d])), 3);
    assert_eq!(code(&mntris(&["generate", "--n-ris", "32", "--target-mu", "0.99", "--out", d])), 3);
    assert_eq!(code(&mntris(&["generate", "--n-ris", "0", "--kappa", "1", "--out", d])), 2);
    assert_eq!(code(&mntris(&["generate", "--n-ris", "8", "--out", d])), 2);
    assert_eq!(code(&mntris(&["generate", "--n-ris", "8", "--kappa", "-1", "--out", d])), 2);
}

#[test]
fn optimize_counts_evaluations() {
    let ds = report(&["optimize", "--method", "ds", "--m", "1", "--kappa", "0.5", "--seed", "2"]);
    assert_eq!(ds["report"]["model_evaluations"], 1);
    let ga = report(&["optimize", "--method", "ga", "--m", "64", "--kappa", "0.5", "--seed", "2"]);
    assert_eq!(ga["report"]["model_evaluations"], 640);
    assert_eq!(ga["report"]["peak_stored_configs"], 128);
}

#[test]
fn optimize_is_deterministic() {
    let args = ["optimize", "--method", "mnt-cd:random", "--n-ris", "16", "--kappa", "1", "--seed", "9"];
    let (mut a, mut b) = (report(&args), report(&args));
    a["report"]["wall_time"] = Value::Null;
    b["report"]["wall_time"] = Value::Null;
    assert_eq!(a, b);
}

#[test]
fn decoupled_mnt_cd_reaches_the_casc_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let n = 10;
    for seed in 0..5u64 {
        let spec = EnsembleSpec::new(PortPartition::siso(n).unwrap(), 0.0, seed);
        let s = draw_scattering_matrix(&spec).unwrap().with_ris_block_zeroed().unwrap();
        let path = dir.path().join(format!("s{seed}.mnts"));
        write_mnts(fs::File::create(&path).unwrap(), &s).unwrap();

        let best = (0..1u64 << n)
            .map(|k| {
                let c = RisConfiguration::from_index(n, k);
                channel_gain(&casc_channel(&s, c.loads(), &EvalCounter::new()).unwrap()).unwrap()
            })
            .fold(0.0, f64::max);
        let r = report(&["optimize", "--method", "mnt-cd:random", "--m", "0", "--matrix", path.to_str().unwrap(), "--seed", &seed.to_string()]);
        let gain = r["report"]["final_gain_mnt"].as_f64().unwrap();
        assert!((gain - best).abs() <= 1e-12 * best, "seed {seed}: {gain} vs {best}");
    }
}

#[test]
fn optimize_rejects_bad_requests() {
    assert_eq!(code(&mntris(&["optimize", "--method", "bogus", "--kappa", "1"])), 2);
    assert_eq!(code(&mntris(&["optimize", "--method", "ds", "--m", "0", "--kappa", "1"])), 2);
    assert_eq!(code(&mntris(&["optimize", "--method", "ga", "--m", "3", "--kappa", "1"])), 2);
    assert_eq!(code(&mntris(&["optimize", "--method", "ds", "--m", "4", "--kappa", "1", "--set", "nope=1"])), 2);
    assert_eq!(code(&mntris(&["optimize", "--method", "ds", "--matrix", "/nonexistent.mnts"])), 2);
}

fn tiny_sweep(dir: &Path, extra: &[&str]) -> Output {
    let out_dir = format!("output.dir={:?}", dir.to_str().unwrap());
    let mut args = vec![
        "sweep", "-q", "--set", "n_ris=6", "--set", "n_realizations=3", "--set", "m_values=[0, 4]", "--set",
        "mu_targets=[0.05, 0.3]", "--set", "n_calib=20", "--set", "record_wall_time=false", "--set", &out_dir,
    ];
    args.extend_from_slice(extra);
    mntris(&args)
}

#[test]
fn sweep_writes_results_summary_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = tiny_sweep(dir.path(), &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = csv_rows(&dir.path().join("summary.csv"));
    assert_eq!(summary.len(), 2 * 7 * 2);
    let results = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(results.starts_with(
        "mu_target,realized_mu,m,method,realization,final_gain,model_evals,init_evals,peak_configs,wall_time_us,converged,error\n"
    ));
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["n_ris"], 6);
    assert_eq!(manifest["config"]["m_values"], serde_json::json!([0, 4]));
    assert_eq!(manifest["error_cells"], 0);
}

#[test]
fn sweep_reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(code(&tiny_sweep(a.path(), &["--workers", "1"])), 0);
    assert_eq!(code(&tiny_sweep(b.path(), &["--workers", "3"])), 0);
    for f in ["results.csv", "summary.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn sweep_reads_config_files_and_reports_errored_cells() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(
        &cfg,
        "n_ris = 24\nn_realizations = 2\nm_values = [4]\nmu_targets = [0.05, 0.99]\nmethods = [\"ds\", \"mnt-cd\"]\nn_calib = 20\n\n[ga]\ngenerations = 3\n",
    )
    .unwrap();
    let out_dir = format!("output.dir={:?}", dir.path().join("out").to_str().unwrap());
    let out = mntris(&["sweep", "-q", "--config", cfg.to_str().unwrap(), "--set", &out_dir]);
    assert_eq!(code(&out), 4);
    let results = csv_rows(&dir.path().join("out/results.csv"));
    assert_eq!(results.len(), 2 * 2 * 2);
    let errored = results.iter().filter(|r| !r[11].is_empty()).count();
    assert_eq!(errored, 4);
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["ga"]["generations"], 3);
}

#[test]
fn sweep_dry_run_and_config_errors() {
    let out = mntris(&["sweep", "--dry-run"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("n_ris = 32"));
    assert!(text.contains("# total: 15000 cells over 600 realizations"));
    let full = stdout(&mntris(&["sweep", "--dry-run", "--preset", "full"]));
    assert!(full.contains("n_ris = 100"));
    assert!(full.contains("n_realizations = 1500"));
    assert_eq!(code(&mntris(&["sweep", "--dry-run", "--set", "bogus=1"])), 2);
    assert_eq!(code(&mntris(&["sweep", "--dry-run", "--set", "mu_targets=[2.0]"])), 2);
    assert_eq!(code(&mntris(&["sweep", "--dry-run", "--preset", "huge"])), 2);
    assert_eq!(code(&mntris(&["sweep", "--dry-run", "--config", "/nonexistent.toml"])), 2);
}

#[test]
fn validate_passes_and_filters() {
    let out = mntris(&["validate"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    for name in ["woodbury", "gradient", "neumann", "variance", "linearity"] {
        assert!(text.contains(&format!("PASS {name}")), "{text}");
    }
    let only = stdout(&mntris(&["validate", "--only", "gradient"]));
    assert!(only.contains("PASS gradient"));
    assert_eq!(only.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count(), 1);
    assert_eq!(code(&mntris(&["validate", "--only", "nope"])), 2);
}

#[test]
fn validate_catches_an_injected_flip_fault() {
    let out = mntris(&["validate", "--only", "woodbury,gradient", "--inject-flip-fault", "--json"]);
    assert_eq!(code(&out), 1);
    let reports: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(reports[0]["check"], "woodbury");
    assert_eq!(reports[0]["passed"], false);
    assert_eq!(reports[1]["passed"], true);
}
