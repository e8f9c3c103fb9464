//! Declarative pipeline configuration: `key = value` lines grouped in
//! bracketed sections with `#` comments (TOML subset).

use std::path::{Path, PathBuf};

use serde::Deserialize;

use mbl_core::chain::Boundary;
use mbl_core::dataset::{GridSpec, Realizations};
use mbl_core::nn::TrainConfig;
use mbl_core::scaling::CollapseGrid;

use crate::CliError;

fn centi_grid(from: i64, to: i64, step: i64) -> Vec<f64> {
    (from..=to)
        .step_by(step as usize)
        .map(|k| k as f64 / 100.0)
        .collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    pub n_sites: Vec<usize>,
    pub master_seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_boundary")]
    pub boundary: String,
}

fn default_workers() -> usize {
    1
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_boundary() -> String {
    "periodic".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridsSection {
    pub deloc_h: Vec<f64>,
    pub mbl_h: Vec<f64>,
    pub unlabeled_h: Vec<f64>,
    pub eps: Vec<f64>,
    pub states_per_point: usize,
    /// h values scanned by `baseline`, `predict` and the reports.
    pub predict_h: Vec<f64>,
}

impl Default for GridsSection {
    fn default() -> Self {
        let defaults = GridSpec::default();
        // denser sampling where the 0.5-crossing is expected
        let mut predict_h = vec![0.1, 0.3, 0.5, 1.0, 1.5];
        predict_h.extend(centi_grid(200, 450, 25));
        predict_h.extend([5.0, 5.5, 6.0, 6.5, 7.0, 7.5, 8.0]);
        GridsSection {
            deloc_h: defaults.deloc_h,
            mbl_h: defaults.mbl_h,
            unlabeled_h: defaults.unlabeled_h,
            eps: defaults.eps,
            states_per_point: defaults.states_per_point,
            predict_h,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    /// Fraction of the full 50k-records-per-set target.
    pub scale: Option<f64>,
    /// Explicit per-grid-point realization counts; override `scale`.
    pub deloc_realizations: Option<usize>,
    pub mbl_realizations: Option<usize>,
    pub unlabeled_realizations: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSection {
    pub realizations: usize,
    /// Half-width of the ε window per grid value.
    pub eps_window: f64,
}

impl Default for BaselineSection {
    fn default() -> Self {
        BaselineSection {
            realizations: 20,
            eps_window: 0.05,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub mu: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub dropout_p: f64,
    pub lambda: f64,
    pub lambda_warmup_epochs: usize,
    pub stability_threshold: f64,
    pub bn_momentum: f64,
    pub bn_stabilizer: f64,
    pub adversary_enabled: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSection {
            mu: d.mu,
            batch_size: d.batch_size,
            max_epochs: d.max_epochs,
            dropout_p: d.dropout_p,
            lambda: d.lambda,
            lambda_warmup_epochs: d.lambda_warmup_epochs,
            stability_threshold: d.stability_threshold,
            bn_momentum: d.bn_momentum,
            bn_stabilizer: d.bn_stabilizer,
            adversary_enabled: d.adversary_enabled,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictSection {
    pub realizations: usize,
}

impl Default for PredictSection {
    fn default() -> Self {
        PredictSection { realizations: 50 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollapseSection {
    /// ε values to collapse; defaults to [0.5].
    pub eps: Vec<f64>,
    pub h_c_min: f64,
    pub h_c_max: f64,
    pub h_c_step: f64,
    pub nu_min: f64,
    pub nu_max: f64,
    pub nu_step: f64,
}

impl Default for CollapseSection {
    fn default() -> Self {
        let g = CollapseGrid::default();
        CollapseSection {
            eps: vec![0.5],
            h_c_min: g.h_c_min,
            h_c_max: g.h_c_max,
            h_c_step: g.h_c_step,
            nu_min: g.nu_min,
            nu_max: g.nu_max,
            nu_step: g.nu_step,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub pipeline: PipelineSection,
    #[serde(default)]
    pub grids: GridsSection,
    #[serde(default)]
    pub dataset: DatasetSection,
    #[serde(default)]
    pub baseline: BaselineSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub predict: PredictSection,
    #[serde(default)]
    pub collapse: CollapseSection,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let cfg: PipelineConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.pipeline.n_sites.is_empty() {
            return Err(CliError::Config("n_sites list is empty".into()));
        }
        if self.pipeline.workers < 1 {
            return Err(CliError::Config("workers must be >= 1".into()));
        }
        for grid in [
            (&self.grids.deloc_h, "grids.deloc_h"),
            (&self.grids.mbl_h, "grids.mbl_h"),
            (&self.grids.unlabeled_h, "grids.unlabeled_h"),
            (&self.grids.eps, "grids.eps"),
            (&self.grids.predict_h, "grids.predict_h"),
        ] {
            if grid.0.is_empty() {
                return Err(CliError::Config(format!("{} is empty", grid.1)));
            }
        }
        if !matches!(self.pipeline.boundary.as_str(), "periodic" | "open") {
            return Err(CliError::Config(format!(
                "boundary must be \"periodic\" or \"open\", got {:?}",
                self.pipeline.boundary
            )));
        }
        let has_per_point = self.dataset.deloc_realizations.is_some()
            || self.dataset.mbl_realizations.is_some()
            || self.dataset.unlabeled_realizations.is_some();
        if has_per_point
            && !(self.dataset.deloc_realizations.is_some()
                && self.dataset.mbl_realizations.is_some()
                && self.dataset.unlabeled_realizations.is_some())
        {
            return Err(CliError::Config(
                "per-point realizations must set all of deloc/mbl/unlabeled".into(),
            ));
        }
        if !has_per_point && self.dataset.scale.is_none() {
            return Err(CliError::Config(
                "dataset needs either scale or per-point realization counts".into(),
            ));
        }
        Ok(())
    }

    pub fn boundary(&self) -> Boundary {
        match self.pipeline.boundary.as_str() {
            "open" => Boundary::Open,
            _ => Boundary::Periodic,
        }
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            deloc_h: self.grids.deloc_h.clone(),
            mbl_h: self.grids.mbl_h.clone(),
            unlabeled_h: self.grids.unlabeled_h.clone(),
            eps: self.grids.eps.clone(),
            states_per_point: self.grids.states_per_point,
            boundary: self.boundary(),
        }
    }

    pub fn realizations(&self) -> Realizations {
        match (
            self.dataset.deloc_realizations,
            self.dataset.mbl_realizations,
            self.dataset.unlabeled_realizations,
        ) {
            (Some(deloc), Some(mbl), Some(unlabeled)) => Realizations::PerPoint {
                deloc,
                mbl,
                unlabeled,
            },
            _ => Realizations::Scale(self.dataset.scale.unwrap_or(0.001)),
        }
    }

    /// Training configuration for one system size; the model seed is
    /// derived from the master seed and N.
    pub fn train_config(&self, n_sites: usize) -> TrainConfig {
        TrainConfig {
            mu: self.train.mu,
            batch_size: self.train.batch_size,
            max_epochs: self.train.max_epochs,
            dropout_p: self.train.dropout_p,
            lambda: self.train.lambda,
            lambda_warmup_epochs: self.train.lambda_warmup_epochs,
            stability_threshold: self.train.stability_threshold,
            rng_seed: mbl_core::chain::mix_seed(&[
                self.pipeline.master_seed,
                4,
                n_sites as u64,
            ]),
            bn_momentum: self.train.bn_momentum,
            bn_stabilizer: self.train.bn_stabilizer,
            adversary_enabled: self.train.adversary_enabled,
        }
    }

    pub fn collapse_grid(&self) -> CollapseGrid {
        CollapseGrid {
            h_c_min: self.collapse.h_c_min,
            h_c_max: self.collapse.h_c_max,
            h_c_step: self.collapse.h_c_step,
            nu_min: self.collapse.nu_min,
            nu_max: self.collapse.nu_max,
            nu_step: self.collapse.nu_step,
        }
    }
}

/// Output artifact locations under the configured directory.
#[derive(Debug, Clone)]
pub struct OutPaths {
    pub root: PathBuf,
}

impl OutPaths {
    pub fn new(root: &Path) -> Self {
        OutPaths {
            root: root.to_path_buf(),
        }
    }

    pub fn labeled(&self, n: usize) -> PathBuf {
        self.root.join("data").join(format!("labeled_N{n}.mbls"))
    }
    pub fn unlabeled(&self, n: usize) -> PathBuf {
        self.root.join("data").join(format!("unlabeled_N{n}.mbls"))
    }
    pub fn baseline_csv(&self, n: usize) -> PathBuf {
        self.root.join("baseline").join(format!("baseline_N{n}.csv"))
    }
    pub fn baseline_svg(&self, n: usize) -> PathBuf {
        self.root.join("baseline").join(format!("baseline_N{n}.svg"))
    }
    pub fn checkpoint(&self, n: usize) -> PathBuf {
        self.root.join("train").join(format!("model_N{n}.dann"))
    }
    pub fn train_log(&self, n: usize) -> PathBuf {
        self.root.join("train").join(format!("log_N{n}.csv"))
    }
    pub fn predict_csv(&self, n: usize) -> PathBuf {
        self.root.join("predict").join(format!("pmbl_N{n}.csv"))
    }
    pub fn collapse_csv(&self) -> PathBuf {
        self.root.join("collapse").join("collapse.csv")
    }
    pub fn report_heatmap(&self, n: usize) -> PathBuf {
        self.root
            .join("report")
            .join(format!("phase_diagram_N{n}.svg"))
    }
    pub fn report_collapse(&self, eps: f64) -> PathBuf {
        self.root
            .join("report")
            .join(format!("collapse_eps{eps}.svg"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> &'static str {
        "[pipeline]\nn_sites = [8]\nmaster_seed = 7\n\n[dataset]\nscale = 0.01\n"
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg: PipelineConfig = toml::from_str(minimal()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.pipeline.workers, 1);
        assert_eq!(cfg.grids.eps.len(), 19);
        assert_eq!(cfg.grids.deloc_h.len(), 9);
        assert_eq!(cfg.grids.mbl_h.len(), 11);
        assert_eq!(cfg.grids.unlabeled_h.len(), 33);
        assert_eq!(cfg.train.batch_size, 64);
        assert_eq!(cfg.predict.realizations, 50);
        assert_eq!(cfg.collapse.eps, vec![0.5]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{}\ntypo_key = 1\n", minimal());
        assert!(toml::from_str::<PipelineConfig>(&text).is_err());
    }

    #[test]
    fn empty_grid_fails_validation() {
        let text = format!("{}\n[grids]\neps = []\n", minimal());
        let cfg: PipelineConfig = toml::from_str(&text).unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    }

    #[test]
    fn partial_per_point_counts_are_rejected() {
        let text =
            "[pipeline]\nn_sites = [8]\nmaster_seed = 7\n\n[dataset]\ndeloc_realizations = 2\n";
        let cfg: PipelineConfig = toml::from_str(text).unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    }

    #[test]
    fn train_seed_differs_per_system_size() {
        let cfg: PipelineConfig = toml::from_str(minimal()).unwrap();
        assert_ne!(cfg.train_config(8).rng_seed, cfg.train_config(10).rng_seed);
    }
}
