//! Subcommand implementations. Every command is restartable: existing
//! artifacts are skipped unless `force` is set, and each stage reports
//! which earlier command produces a missing prerequisite.

use std::path::Path;

use mbl_core::chain::{binomial, build_hamiltonian, enumerate_basis, mix_seed, sample_disorder};
use mbl_core::dataset::{
    generation_tasks, load_records, manifest_for, manifest_path, resolve_realizations,
    run_generation_task, save_records, EigenstateRecord, GenTask, SetKind,
};
use mbl_core::nn::{load_checkpoint, predict_p_mbl, save_checkpoint, train};
use mbl_core::nn::train::log_to_csv;
use mbl_core::scaling::{collapse_fit, phase_boundary, AveragedCurve};
use mbl_core::spectrum::{eigenvalues_only, gap_ratio, SpectrumError, R_POISSON, R_WIGNER_DYSON};

use crate::config::{OutPaths, PipelineConfig};
use crate::pool::run_tasks;
use crate::svg::{render_curves, render_heatmap, Heatmap, Series};
use crate::table::{fmt_f64, parse_f64, read_csv, write_csv};
use crate::CliError;

const BASELINE_HEADER: &str = "n_sites,eps,h,r_mean,std,count";
const PREDICT_HEADER: &str = "n_sites,eps,h,mean,std,count";
const COLLAPSE_HEADER: &str = "eps,h_c,dh_c,nu,dnu,quality";

/// Seed stream tags; 0 and 1 are the labeled/unlabeled set tags used by
/// the dataset module.
const TAG_PREDICT: u64 = 2;
const TAG_BASELINE: u64 = 3;

fn master_for(cfg: &PipelineConfig, n_sites: usize) -> u64 {
    mix_seed(&[cfg.pipeline.master_seed, n_sites as u64])
}

fn mean_std(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let std = if vals.len() > 1 {
        (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))
}

pub fn cmd_generate(cfg: &PipelineConfig, force: bool) -> Result<(), CliError> {
    let paths = OutPaths::new(&cfg.pipeline.out_dir);
    let spec = cfg.grid_spec();
    ensure_dir(&paths.root.join("data"))?;
    for &n in &cfg.pipeline.n_sites {
        let counts = resolve_realizations(&spec, cfg.realizations())?;
        let master = master_for(cfg, n);
        for kind in [SetKind::Labeled, SetKind::Unlabeled] {
            let path = match kind {
                SetKind::Labeled => paths.labeled(n),
                SetKind::Unlabeled => paths.unlabeled(n),
            };
            if !force && path.exists() && manifest_path(&path).exists() {
                println!("generate: {} exists, skipping", path.display());
                continue;
            }
            let tasks = generation_tasks(&spec, counts, master, kind);
            let results = run_tasks(&tasks, cfg.pipeline.workers, |t: &GenTask| {
                run_generation_task(n, &spec, t)
            });
            let mut records = Vec::new();
            for (task, res) in tasks.iter().zip(results) {
                let task_records = res.map_err(|e| {
                    CliError::from(e).with_context(format!(
                        "N = {n}, h = {}, realization {}",
                        task.h, task.realization
                    ))
                })?;
                records.extend(task_records);
            }
            let manifest = manifest_for(n, &spec, counts, master, kind, &records);
            save_records(&path, &records, &manifest)?;
            println!(
                "generate: wrote {} ({} records)",
                path.display(),
                records.len()
            );
        }
    }
    Ok(())
}

impl CliError {
    fn with_context(self, context: String) -> CliError {
        match self {
            CliError::Config(m) => CliError::Config(format!("{context}: {m}")),
            CliError::Capacity(m) => CliError::Capacity(format!("{context}: {m}")),
            CliError::Io(m) => CliError::Io(format!("{context}: {m}")),
            CliError::Divergence(m) => CliError::Divergence(format!("{context}: {m}")),
        }
    }
}

struct BaselineTask {
    h: f64,
    seed: u64,
}

pub fn cmd_baseline(cfg: &PipelineConfig, force: bool) -> Result<(), CliError> {
    let paths = OutPaths::new(&cfg.pipeline.out_dir);
    ensure_dir(&paths.root.join("baseline"))?;
    let h_grid = &cfg.grids.predict_h;
    let eps_grid = &cfg.grids.eps;
    let window = cfg.baseline.eps_window;
    let boundary = cfg.boundary();
    for &n in &cfg.pipeline.n_sites {
        let csv_path = paths.baseline_csv(n);
        let svg_path = paths.baseline_svg(n);
        if !force && csv_path.exists() && svg_path.exists() {
            println!("baseline: {} exists, skipping", csv_path.display());
            continue;
        }
        let master = master_for(cfg, n);
        let basis = enumerate_basis(n)?;
        // samples[eps][h] = r_mean per surviving realization
        let mut samples = vec![vec![Vec::new(); h_grid.len()]; eps_grid.len()];
        for (ih, &h) in h_grid.iter().enumerate() {
            let tasks: Vec<BaselineTask> = (0..cfg.baseline.realizations)
                .map(|r| BaselineTask {
                    h,
                    seed: mix_seed(&[master, TAG_BASELINE, ih as u64, r as u64]),
                })
                .collect();
            let results = run_tasks(&tasks, cfg.pipeline.workers, |t: &BaselineTask| {
                let disorder = sample_disorder(t.h, n, t.seed)?;
                let ham = build_hamiltonian::<f64>(&basis, &disorder, boundary)?;
                let spectrum = eigenvalues_only(&ham)?;
                let mut per_eps = Vec::with_capacity(eps_grid.len());
                for &eps in eps_grid {
                    match gap_ratio(&spectrum, (eps - window, eps + window)) {
                        Ok(stat) => per_eps.push(Some(stat.r_mean)),
                        Err(
                            SpectrumError::InsufficientLevels { .. }
                            | SpectrumError::DegenerateSpectrum(_),
                        ) => per_eps.push(None),
                        Err(e) => return Err(CliError::from(e)),
                    }
                }
                Ok::<_, CliError>(per_eps)
            });
            for res in results {
                let per_eps = res.map_err(|e| {
                    e.with_context(format!("baseline N = {n}, h = {h}"))
                })?;
                for (ie, v) in per_eps.into_iter().enumerate() {
                    if let Some(r) = v {
                        samples[ie][ih].push(r);
                    }
                }
            }
        }
        let mut rows = Vec::new();
        let mut cells = Vec::new();
        for (ie, &eps) in eps_grid.iter().enumerate() {
            for (ih, &h) in h_grid.iter().enumerate() {
                let vals = &samples[ie][ih];
                if vals.is_empty() {
                    cells.push(None);
                    rows.push(vec![
                        n.to_string(),
                        fmt_f64(eps),
                        fmt_f64(h),
                        String::new(),
                        String::new(),
                        "0".into(),
                    ]);
                } else {
                    let (mean, std) = mean_std(vals);
                    cells.push(Some(mean));
                    rows.push(vec![
                        n.to_string(),
                        fmt_f64(eps),
                        fmt_f64(h),
                        fmt_f64(mean),
                        fmt_f64(std),
                        vals.len().to_string(),
                    ]);
                }
            }
        }
        write_csv(&csv_path, BASELINE_HEADER, &rows)?;
        let svg = render_heatmap(&Heatmap {
            title: &format!("gap ratio, N = {n}"),
            h: h_grid,
            eps: eps_grid,
            cells: &cells,
            v_min: R_POISSON,
            v_max: R_WIGNER_DYSON,
            boundary: &[],
        });
        std::fs::write(&svg_path, svg)?;
        println!("baseline: wrote {}", csv_path.display());
    }
    Ok(())
}

pub fn cmd_train(cfg: &PipelineConfig, force: bool) -> Result<(), CliError> {
    let paths = OutPaths::new(&cfg.pipeline.out_dir);
    ensure_dir(&paths.root.join("train"))?;
    for &n in &cfg.pipeline.n_sites {
        let ckpt = paths.checkpoint(n);
        if !force && ckpt.exists() {
            println!("train: {} exists, skipping", ckpt.display());
            continue;
        }
        let labeled_path = paths.labeled(n);
        let unlabeled_path = paths.unlabeled(n);
        for p in [&labeled_path, &unlabeled_path] {
            if !p.exists() {
                return Err(CliError::missing_artifact(p, "generate"));
            }
        }
        let (labeled, _) = load_records(&labeled_path)?;
        let (unlabeled, _) = load_records(&unlabeled_path)?;
        let train_cfg = cfg.train_config(n);
        let dim = binomial(n, n / 2);
        let mut model = train_cfg.new_model::<f32>(n, dim);
        let log = train(&mut model, &labeled, &unlabeled, &train_cfg)?;
        save_checkpoint(&model, &ckpt)?;
        std::fs::write(paths.train_log(n), log_to_csv(&log))?;
        if let Some(last) = log.last() {
            println!(
                "train: N = {n} stopped after epoch {} (loss_d {:.4}, flips {:.4})",
                last.epoch, last.loss_d, last.label_flip_fraction
            );
        }
    }
    Ok(())
}

pub fn cmd_predict(cfg: &PipelineConfig, force: bool) -> Result<(), CliError> {
    let paths = OutPaths::new(&cfg.pipeline.out_dir);
    ensure_dir(&paths.root.join("predict"))?;
    let spec = cfg.grid_spec();
    let h_grid = &cfg.grids.predict_h;
    for &n in &cfg.pipeline.n_sites {
        let csv_path = paths.predict_csv(n);
        if !force && csv_path.exists() {
            println!("predict: {} exists, skipping", csv_path.display());
            continue;
        }
        let ckpt = paths.checkpoint(n);
        if !ckpt.exists() {
            return Err(CliError::missing_artifact(&ckpt, "train"));
        }
        let mut model = load_checkpoint::<f32>(&ckpt)?;
        let master = master_for(cfg, n);
        let mut samples = vec![vec![Vec::new(); h_grid.len()]; spec.eps.len()];
        for (ih, &h) in h_grid.iter().enumerate() {
            let tasks: Vec<GenTask> = (0..cfg.predict.realizations)
                .map(|r| GenTask {
                    kind: SetKind::Unlabeled,
                    phase: None,
                    h_index: ih,
                    h,
                    realization: r,
                    seed: mix_seed(&[master, TAG_PREDICT, ih as u64, r as u64]),
                })
                .collect();
            let results = run_tasks(&tasks, cfg.pipeline.workers, |t: &GenTask| {
                run_generation_task(n, &spec, t)
            });
            for res in results {
                let records = res.map_err(|e| {
                    CliError::from(e).with_context(format!("predict N = {n}, h = {h}"))
                })?;
                // records are ε-major, states_per_point each
                for (ie, chunk) in records.chunks(spec.states_per_point).enumerate() {
                    let refs: Vec<&EigenstateRecord> = chunk.iter().collect();
                    let p = predict_p_mbl(&mut model, &refs)?;
                    let mean = p.iter().map(|&v| v as f64).sum::<f64>() / p.len() as f64;
                    samples[ie][ih].push(mean);
                }
            }
        }
        let mut rows = Vec::new();
        for (ie, &eps) in spec.eps.iter().enumerate() {
            for (ih, &h) in h_grid.iter().enumerate() {
                let vals = &samples[ie][ih];
                let (mean, std) = mean_std(vals);
                rows.push(vec![
                    n.to_string(),
                    fmt_f64(eps),
                    fmt_f64(h),
                    fmt_f64(mean),
                    fmt_f64(std),
                    vals.len().to_string(),
                ]);
            }
        }
        write_csv(&csv_path, PREDICT_HEADER, &rows)?;
        println!("predict: wrote {}", csv_path.display());
    }
    Ok(())
}

/// Averaged p_mbl curves per ε parsed back from one prediction CSV.
fn load_prediction_curves(
    path: &Path,
) -> Result<Vec<(f64, AveragedCurve)>, CliError> {
    let rows = read_csv(path, PREDICT_HEADER)?;
    let ctx = path.display().to_string();
    let mut curves: Vec<(f64, AveragedCurve)> = Vec::new();
    for row in rows {
        if row.len() != 6 {
            return Err(CliError::Io(format!("{ctx}: bad row width {}", row.len())));
        }
        let eps = parse_f64(&row[1], &ctx)?;
        let h = parse_f64(&row[2], &ctx)?;
        let mean = parse_f64(&row[3], &ctx)?;
        let std = parse_f64(&row[4], &ctx)?;
        let count: usize = row[5]
            .parse()
            .map_err(|e| CliError::Io(format!("{ctx}: {e}")))?;
        let curve = match curves.iter_mut().find(|(e, _)| (*e - eps).abs() < 1e-12) {
            Some((_, c)) => c,
            None => {
                curves.push((
                    eps,
                    AveragedCurve {
                        h: vec![],
                        mean: vec![],
                        std: vec![],
                        count: vec![],
                    },
                ));
                &mut curves.last_mut().unwrap().1
            }
        };
        curve.h.push(h);
        curve.mean.push(mean);
        curve.std.push(std);
        curve.count.push(count);
    }
    Ok(curves)
}

fn find_curve<'a>(
    curves: &'a [(f64, AveragedCurve)],
    eps: f64,
    path: &Path,
) -> Result<&'a AveragedCurve, CliError> {
    curves
        .iter()
        .find(|(e, _)| (e - eps).abs() < 1e-9)
        .map(|(_, c)| c)
        .ok_or_else(|| {
            CliError::Config(format!(
                "eps = {eps} not present in {}; add it to grids.eps and rerun `mbl predict`",
                path.display()
            ))
        })
}

pub fn cmd_collapse(cfg: &PipelineConfig, force: bool) -> Result<(), CliError> {
    let paths = OutPaths::new(&cfg.pipeline.out_dir);
    let csv_path = paths.collapse_csv();
    if !force && csv_path.exists() {
        println!("collapse: {} exists, skipping", csv_path.display());
        return Ok(());
    }
    let mut per_n = Vec::new();
    for &n in &cfg.pipeline.n_sites {
        let p = paths.predict_csv(n);
        if !p.exists() {
            return Err(CliError::missing_artifact(&p, "predict"));
        }
        per_n.push((n, p.clone(), load_prediction_curves(&p)?));
    }
    let grid = cfg.collapse_grid();
    let mut rows = Vec::new();
    for &eps in &cfg.collapse.eps {
        let mut curves = Vec::new();
        for (n, path, all) in &per_n {
            curves.push((*n, find_curve(all, eps, path)?.clone()));
        }
        let fit = collapse_fit(&curves, &grid)?;
        println!(
            "collapse: eps = {eps}: h_c = {:.3} ± {:.3}, nu = {:.3} ± {:.3} (quality {:.3e}); \
             larger-size studies place nu near 1.6",
            fit.h_c, fit.h_c_err, fit.nu, fit.nu_err, fit.quality
        );
        rows.push(vec![
            fmt_f64(eps),
            fmt_f64(fit.h_c),
            fmt_f64(fit.h_c_err),
            fmt_f64(fit.nu),
            fmt_f64(fit.nu_err),
            fmt_f64(fit.quality),
        ]);
    }
    write_csv(&csv_path, COLLAPSE_HEADER, &rows)?;
    println!("collapse: wrote {}", csv_path.display());
    Ok(())
}

pub fn cmd_report(cfg: &PipelineConfig, force: bool) -> Result<(), CliError> {
    let paths = OutPaths::new(&cfg.pipeline.out_dir);
    ensure_dir(&paths.root.join("report"))?;
    let mut per_n = Vec::new();
    for &n in &cfg.pipeline.n_sites {
        let p = paths.predict_csv(n);
        if !p.exists() {
            return Err(CliError::missing_artifact(&p, "predict"));
        }
        let curves = load_prediction_curves(&p)?;
        if curves.is_empty() {
            return Err(CliError::Io(format!(
                "{}: empty prediction set, nothing to plot",
                p.display()
            )));
        }
        per_n.push((n, p.clone(), curves));
    }

    // Fig.-2-style heatmap per N with the 0.5-crossings overlaid.
    for (n, _, curves) in &per_n {
        let heat_path = paths.report_heatmap(*n);
        if !force && heat_path.exists() {
            println!("report: {} exists, skipping", heat_path.display());
            continue;
        }
        let eps_values: Vec<f64> = curves.iter().map(|(e, _)| *e).collect();
        let h_values = curves[0].1.h.clone();
        let mut cells = Vec::with_capacity(eps_values.len() * h_values.len());
        let mut boundary = Vec::new();
        for (eps, curve) in curves {
            for &m in &curve.mean {
                cells.push(Some(m));
            }
            if let Ok(hb) = phase_boundary(curve) {
                boundary.push((hb, *eps));
            }
        }
        let svg = render_heatmap(&Heatmap {
            title: &format!("mean p_mbl, N = {n}"),
            h: &h_values,
            eps: &eps_values,
            cells: &cells,
            v_min: 0.0,
            v_max: 1.0,
            boundary: &boundary,
        });
        std::fs::write(&heat_path, svg)?;
        println!("report: wrote {}", heat_path.display());
    }

    // Fig.-3-style curve + collapsed inset per collapse ε.
    let collapse_path = paths.collapse_csv();
    if !collapse_path.exists() {
        return Err(CliError::missing_artifact(&collapse_path, "collapse"));
    }
    let collapse_rows = read_csv(&collapse_path, COLLAPSE_HEADER)?;
    for &eps in &cfg.collapse.eps {
        let fig_path = paths.report_collapse(eps);
        if !force && fig_path.exists() {
            println!("report: {} exists, skipping", fig_path.display());
            continue;
        }
        let ctx = collapse_path.display().to_string();
        let fit_row = collapse_rows
            .iter()
            .find(|r| matches!(parse_f64(&r[0], &ctx), Ok(e) if (e - eps).abs() < 1e-9))
            .ok_or_else(|| {
                CliError::Config(format!(
                    "eps = {eps} missing from {ctx}; rerun `mbl collapse`"
                ))
            })?;
        let h_c = parse_f64(&fit_row[1], &ctx)?;
        let nu = parse_f64(&fit_row[3], &ctx)?;

        let mut main_pts = Vec::new();
        let mut inset_pts = Vec::new();
        for (n, path, curves) in &per_n {
            let curve = find_curve(curves, eps, path)?;
            let factor = (*n as f64).powf(1.0 / nu);
            let main: Vec<(f64, f64, f64)> = curve
                .h
                .iter()
                .zip(curve.mean.iter().zip(&curve.std))
                .map(|(&h, (&m, &s))| (h, m, s))
                .collect();
            let inset: Vec<(f64, f64, f64)> = curve
                .h
                .iter()
                .zip(&curve.mean)
                .map(|(&h, &m)| (factor * (h - h_c), m, 0.0))
                .collect();
            main_pts.push((format!("N = {n}"), main));
            inset_pts.push(inset);
        }
        let main_series: Vec<Series> = main_pts
            .iter()
            .map(|(label, pts)| Series {
                label: label.clone(),
                points: pts,
            })
            .collect();
        let inset_series: Vec<Series> = main_pts
            .iter()
            .zip(&inset_pts)
            .map(|((label, _), pts)| Series {
                label: label.clone(),
                points: pts,
            })
            .collect();
        let svg = render_curves(
            &format!("mean p_mbl at eps = {eps} (h_c = {h_c:.2}, nu = {nu:.2})"),
            "h",
            "p_mbl",
            &main_series,
            Some(("scaled x", &inset_series)),
        );
        std::fs::write(&fig_path, svg)?;
        println!("report: wrote {}", fig_path.display());
    }
    Ok(())
}
