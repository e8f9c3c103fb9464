//! Acceptance suite, pipeline half: trained-classifier phase curves,
//! the real-data collapse, and end-to-end determinism. The first two
//! tests share one fixture pipeline under target/acceptance; its
//! artifacts are reused across runs, so only the first invocation pays
//! the full cost.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use mbl_cli::config::{OutPaths, PipelineConfig};
use mbl_cli::pipeline;
use mbl_cli::table::read_csv;

const PREDICT_HEADER: &str = "n_sites,eps,h,mean,std,count";
const COLLAPSE_HEADER: &str = "eps,h_c,dh_c,nu,dnu,quality";

fn verdict(n: u32, name: &str, ok: bool) {
    println!("ACCEPTANCE {n} {name}: {}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "acceptance criterion {n} ({name}) failed");
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn heavy_config(out_dir: &Path) -> String {
    format!(
        r#"[pipeline]
n_sites = [8, 10, 12]
master_seed = 42
out_dir = "{out}"

[grids]
eps = [0.1, 0.3, 0.5, 0.7, 0.9]
states_per_point = 50

[dataset]
deloc_realizations = 24
mbl_realizations = 20
unlabeled_realizations = 13

[train]
max_epochs = 60
lambda_warmup_epochs = 5
stability_threshold = 0.005

[predict]
realizations = 50
"#,
        out = out_dir.display()
    )
}

/// Runs the heavy pipeline once per process (and, thanks to artifact
/// reuse, effectively once per checkout).
fn fixture() -> &'static PipelineConfig {
    static FIX: OnceLock<PipelineConfig> = OnceLock::new();
    FIX.get_or_init(|| {
        let root = workspace_root().join("target/acceptance");
        let out = root.join("out");
        std::fs::create_dir_all(&root).unwrap();
        let cfg_path = root.join("mbl.toml");
        std::fs::write(&cfg_path, heavy_config(&out)).unwrap();
        let cfg = PipelineConfig::load(&cfg_path).unwrap();
        pipeline::cmd_generate(&cfg, false).unwrap();
        pipeline::cmd_train(&cfg, false).unwrap();
        pipeline::cmd_predict(&cfg, false).unwrap();
        pipeline::cmd_collapse(&cfg, false).unwrap();
        cfg
    })
}

/// (h, mean) points at one ε from a prediction CSV, in file order
/// (ascending h).
fn curve_at_eps(path: &Path, eps: f64) -> Vec<(f64, f64)> {
    read_csv(path, PREDICT_HEADER)
        .unwrap()
        .iter()
        .filter(|row| (row[1].parse::<f64>().unwrap() - eps).abs() < 1e-9)
        .map(|row| {
            (
                row[2].parse::<f64>().unwrap(),
                row[3].parse::<f64>().unwrap(),
            )
        })
        .collect()
}

// ---------------------------------------------------------------- 5 --

#[test]
fn acceptance_5_phase_curves() {
    let cfg = fixture();
    let paths = OutPaths::new(&cfg.pipeline.out_dir);
    let mut ok = true;
    for &n in &cfg.pipeline.n_sites {
        let curve = curve_at_eps(&paths.predict_csv(n), 0.5);
        assert!(!curve.is_empty(), "no eps = 0.5 rows for N = {n}");
        for &(h, p) in &curve {
            if h <= 0.5 && p > 0.2 {
                println!("  N = {n}: p = {p:.3} at h = {h} (expected <= 0.2)");
                ok = false;
            }
            if h >= 7.0 && p < 0.8 {
                println!("  N = {n}: p = {p:.3} at h = {h} (expected >= 0.8)");
                ok = false;
            }
        }
        if n == 12 {
            let window: Vec<&(f64, f64)> = curve
                .iter()
                .filter(|(h, _)| (2.0..=4.5).contains(h))
                .collect();
            let crossings = window
                .windows(2)
                .filter(|w| (w[0].1 - 0.5) * (w[1].1 - 0.5) < 0.0)
                .count();
            println!("  N = 12: {crossings} crossing(s) of p = 0.5 in h in [2.0, 4.5]");
            if crossings != 1 {
                ok = false;
            }
        }
    }
    verdict(5, "trained classifier phase curves", ok);
}

// ---------------------------------------------------------------- 7 --

#[test]
fn acceptance_7_real_collapse() {
    let cfg = fixture();
    let paths = OutPaths::new(&cfg.pipeline.out_dir);
    let rows = read_csv(&paths.collapse_csv(), COLLAPSE_HEADER).unwrap();
    let row = rows
        .iter()
        .find(|r| (r[0].parse::<f64>().unwrap() - 0.5).abs() < 1e-9)
        .expect("no eps = 0.5 collapse row");
    let h_c: f64 = row[1].parse().unwrap();
    let dh_c: f64 = row[2].parse().unwrap();
    let nu: f64 = row[3].parse().unwrap();
    let dnu: f64 = row[4].parse().unwrap();
    println!("  h_c = {h_c:.3} ± {dh_c:.3}");
    println!("  nu = {nu:.3} ± {dnu:.3} (not asserted; larger-size studies place nu near 1.6)");
    verdict(7, "real-data collapse", (2.5..=4.5).contains(&h_c));
}

// ---------------------------------------------------------------- 8 --

fn small_config(out_dir: &Path, workers: usize) -> String {
    format!(
        r#"[pipeline]
n_sites = [4, 6]
master_seed = 11
workers = {workers}
out_dir = "{out}"

[grids]
deloc_h = [0.2, 0.5]
mbl_h = [7.0, 8.0]
unlabeled_h = [1.0, 3.0, 5.0]
eps = [0.3, 0.5, 0.7]
states_per_point = 2
predict_h = [0.2, 1.0, 3.0, 5.0, 8.0]

[dataset]
deloc_realizations = 40
mbl_realizations = 40
unlabeled_realizations = 30

[baseline]
realizations = 3

[train]
max_epochs = 6
batch_size = 16
stability_threshold = 0.0

[predict]
realizations = 5

[collapse]
h_c_min = 0.5
h_c_max = 6.0
"#,
        out = out_dir.display()
    )
}

fn run_small_pipeline(dir: &Path, workers: usize) -> Result<(), mbl_cli::CliError> {
    let cfg_path = dir.join("mbl.toml");
    std::fs::write(&cfg_path, small_config(&dir.join("out"), workers)).unwrap();
    let cfg = PipelineConfig::load(&cfg_path)?;
    pipeline::cmd_generate(&cfg, false)?;
    pipeline::cmd_baseline(&cfg, false)?;
    pipeline::cmd_train(&cfg, false)?;
    pipeline::cmd_predict(&cfg, false)?;
    pipeline::cmd_collapse(&cfg, false)?;
    pipeline::cmd_report(&cfg, false)?;
    Ok(())
}

fn csv_files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "csv") {
                out.push(path);
            }
        }
    }
    out.sort();
    out
}

fn compare_csvs(a_root: &Path, b_root: &Path) -> bool {
    let a = csv_files(a_root);
    let b = csv_files(b_root);
    let a_rel: Vec<_> = a.iter().map(|p| p.strip_prefix(a_root).unwrap()).collect();
    let b_rel: Vec<_> = b.iter().map(|p| p.strip_prefix(b_root).unwrap()).collect();
    if a_rel != b_rel || a.is_empty() {
        println!("  artifact lists differ: {a_rel:?} vs {b_rel:?}");
        return false;
    }
    let mut same = true;
    for (pa, pb) in a.iter().zip(&b) {
        if std::fs::read(pa).unwrap() != std::fs::read(pb).unwrap() {
            println!("  differs: {}", pa.strip_prefix(a_root).unwrap().display());
            same = false;
        }
    }
    same
}

#[test]
fn acceptance_8_determinism() {
    let base = tempfile::tempdir().unwrap();
    let dirs: Vec<PathBuf> = ["a", "b", "c"]
        .iter()
        .map(|s| {
            let d = base.path().join(s);
            std::fs::create_dir_all(&d).unwrap();
            d
        })
        .collect();
    run_small_pipeline(&dirs[0], 1).unwrap();
    run_small_pipeline(&dirs[1], 1).unwrap();
    run_small_pipeline(&dirs[2], 4).unwrap();
    let repeat_ok = compare_csvs(&dirs[0].join("out"), &dirs[1].join("out"));
    let worker_ok = compare_csvs(&dirs[0].join("out"), &dirs[2].join("out"));
    verdict(8, "single-worker repeatability and worker-count invariance", repeat_ok && worker_ok);
}
