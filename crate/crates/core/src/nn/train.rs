//! Saddle-point training loop and inference.
//!
//! Per mini-batch the phase loss L_d is computed on the labeled half
//! only, the adversary loss L_a on labeled ∪ unlabeled with set-
//! membership targets, and the feature extractor receives
//! ∂L_d/∂θ_f − λ ∂L_a/∂θ_f through the gradient reversal layer:
//! θ_f ← θ_f − μ (∂L_d/∂θ_f − λ ∂L_a/∂θ_f).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chain::mix_seed;
use crate::dataset::{DomainTag, EigenstateRecord, Phase};
use crate::nn::layers::{cross_entropy, softmax, softmax_cross_entropy_backward};
use crate::nn::model::DannModel;
use crate::nn::tensor::Tensor;
use crate::nn::NnError;
use crate::real::Real;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// SGD learning rate μ (≥ 0; 0 freezes the model, useful for tests).
    pub mu: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub dropout_p: f64,
    /// Gradient reversal scale λ.
    pub lambda: f64,
    /// Linear warm-up of λ from 0 over this many epochs (0 = constant).
    pub lambda_warmup_epochs: usize,
    /// Stop when the fraction of unlabeled records whose predicted
    /// label changed since the previous epoch drops below this.
    pub stability_threshold: f64,
    pub rng_seed: u64,
    pub bn_momentum: f64,
    pub bn_stabilizer: f64,
    /// Disable to train plain supervised (adversary deleted).
    pub adversary_enabled: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mu: 0.01,
            batch_size: 64,
            max_epochs: 200,
            dropout_p: 0.5,
            lambda: 1.0,
            lambda_warmup_epochs: 0,
            stability_threshold: 0.001,
            rng_seed: 0,
            bn_momentum: 0.9,
            bn_stabilizer: 1e-5,
            adversary_enabled: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.mu < 0.0 || !self.mu.is_finite() {
            return Err(NnError::InvalidConfig(format!("mu = {}", self.mu)));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(NnError::InvalidConfig(format!(
                "dropout_p = {}",
                self.dropout_p
            )));
        }
        if !(0.0..=1.0).contains(&self.stability_threshold) {
            return Err(NnError::InvalidConfig(format!(
                "stability_threshold = {}",
                self.stability_threshold
            )));
        }
        if self.batch_size < 2 {
            return Err(NnError::InvalidConfig("batch_size must be >= 2".into()));
        }
        if self.max_epochs == 0 {
            return Err(NnError::InvalidConfig("max_epochs must be >= 1".into()));
        }
        Ok(())
    }

    pub fn effective_lambda(&self, epoch: usize) -> f64 {
        if self.lambda_warmup_epochs == 0 {
            self.lambda
        } else {
            self.lambda * (epoch as f64 / self.lambda_warmup_epochs as f64).min(1.0)
        }
    }

    pub fn new_model<R: Real>(&self, n_sites: usize, input_dim: usize) -> DannModel<R> {
        DannModel::new(
            n_sites,
            input_dim,
            self.dropout_p,
            self.bn_momentum,
            self.bn_stabilizer,
            self.lambda,
            self.rng_seed,
        )
    }
}

/// One line of the training log.
#[derive(Debug, Clone, Copy)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss_d: f64,
    pub loss_a: f64,
    pub label_flip_fraction: f64,
}

struct StepParts<R> {
    loss_d: R,
    loss_a: R,
    /// ∂L_d/∂f, zero on unlabeled rows.
    df_d: Tensor<R>,
    /// ∂L_a/∂f before gradient reversal.
    df_a: Tensor<R>,
}

/// Forward both heads on one combined batch and run the head backward
/// passes (head gradients are accumulated; feature gradients are not).
fn run_step<R: Real>(
    model: &mut DannModel<R>,
    x_labeled: &Tensor<R>,
    phase_labels: &[usize],
    x_unlabeled: &Tensor<R>,
) -> Result<StepParts<R>, NnError> {
    let b_lab = x_labeled.shape[0];
    let b_unl = x_unlabeled.shape[0];
    let combined = concat_batches(x_labeled, x_unlabeled)?;

    model.zero_head_grads();
    let f = model.features_forward(&combined, true)?;
    f.assert_finite("feature extractor")?;

    // phase discriminator on the labeled half
    let f_lab = take_rows(&f, 0, b_lab);
    let logits_d = model.discriminator_forward(&f_lab, true)?;
    let probs_d = softmax(&logits_d);
    let loss_d = cross_entropy(&probs_d, phase_labels)?;
    let dlogits_d = softmax_cross_entropy_backward(&probs_d, phase_labels);
    let df_d_lab = model.discriminator_backward(&dlogits_d)?;
    let df_d = pad_rows(&df_d_lab, b_lab + b_unl);

    // adversary on everything, targets = set membership
    let (loss_a, df_a) = if model.lambda() != R::zero() || b_unl > 0 {
        let domain_labels: Vec<usize> = (0..b_lab + b_unl)
            .map(|i| usize::from(i >= b_lab))
            .collect();
        let logits_a = model.adversary_forward(&f, true)?;
        let probs_a = softmax(&logits_a);
        let loss_a = cross_entropy(&probs_a, &domain_labels)?;
        let dlogits_a = softmax_cross_entropy_backward(&probs_a, &domain_labels);
        let df_a = model.adversary_backward(&dlogits_a)?;
        (loss_a, df_a)
    } else {
        (R::zero(), Tensor::zeros(&f.shape))
    };

    Ok(StepParts {
        loss_d,
        loss_a,
        df_d,
        df_a,
    })
}

fn concat_batches<R: Real>(a: &Tensor<R>, b: &Tensor<R>) -> Result<Tensor<R>, NnError> {
    if a.shape[1..] != b.shape[1..] {
        return Err(NnError::ShapeMismatch(format!(
            "concat: {:?} vs {:?}",
            a.shape, b.shape
        )));
    }
    let mut shape = a.shape.clone();
    shape[0] = a.shape[0] + b.shape[0];
    let mut data = Vec::with_capacity(a.data.len() + b.data.len());
    data.extend_from_slice(&a.data);
    data.extend_from_slice(&b.data);
    Tensor::from_data(&shape, data)
}

fn take_rows<R: Real>(t: &Tensor<R>, start: usize, count: usize) -> Tensor<R> {
    let n = t.item_len();
    let mut shape = t.shape.clone();
    shape[0] = count;
    Tensor {
        shape,
        data: t.data[start * n..(start + count) * n].to_vec(),
    }
}

fn pad_rows<R: Real>(t: &Tensor<R>, total: usize) -> Tensor<R> {
    let n = t.item_len();
    let mut shape = t.shape.clone();
    shape[0] = total;
    let mut data = vec![R::zero(); total * n];
    data[..t.data.len()].copy_from_slice(&t.data);
    Tensor { shape, data }
}

/// One SGD step on explicit batches. `adversary` switches the whole
/// adversarial branch off (plain supervised training).
pub fn train_step<R: Real>(
    model: &mut DannModel<R>,
    x_labeled: &Tensor<R>,
    phase_labels: &[usize],
    x_unlabeled: &Tensor<R>,
    mu: R,
    adversary: bool,
) -> Result<(R, R), NnError> {
    let upstream;
    let parts;
    if adversary {
        parts = run_step(model, x_labeled, phase_labels, x_unlabeled)?;
        let df_a_rev = model.grl.backward(&parts.df_a);
        upstream = parts.df_d.add(&df_a_rev)?;
    } else {
        parts = run_step_supervised(model, x_labeled, phase_labels, x_unlabeled)?;
        upstream = parts.df_d.clone();
    }
    model.zero_feature_grads();
    model.features_backward(&upstream)?;
    model.apply_feature_updates(mu);
    model.apply_discriminator_updates(mu);
    if adversary {
        model.apply_adversary_updates(mu);
    }
    Ok((parts.loss_d, parts.loss_a))
}

/// Same combined forward but with the adversary branch deleted.
fn run_step_supervised<R: Real>(
    model: &mut DannModel<R>,
    x_labeled: &Tensor<R>,
    phase_labels: &[usize],
    x_unlabeled: &Tensor<R>,
) -> Result<StepParts<R>, NnError> {
    let b_lab = x_labeled.shape[0];
    let b_unl = x_unlabeled.shape[0];
    let combined = concat_batches(x_labeled, x_unlabeled)?;
    model.zero_head_grads();
    let f = model.features_forward(&combined, true)?;
    let f_lab = take_rows(&f, 0, b_lab);
    let logits_d = model.discriminator_forward(&f_lab, true)?;
    let probs_d = softmax(&logits_d);
    let loss_d = cross_entropy(&probs_d, phase_labels)?;
    let dlogits_d = softmax_cross_entropy_backward(&probs_d, phase_labels);
    let df_d_lab = model.discriminator_backward(&dlogits_d)?;
    Ok(StepParts {
        loss_d,
        loss_a: R::zero(),
        df_d: pad_rows(&df_d_lab, b_lab + b_unl),
        df_a: Tensor::zeros(&[b_lab + b_unl, model.feature_len]),
    })
}

/// Measure ∂L_d/∂θ_f and ∂L_a/∂θ_f (before reversal) separately on one
/// batch, without updating any parameter. Used by the saddle-point
/// instrumentation tests.
pub fn measure_feature_gradients<R: Real>(
    model: &mut DannModel<R>,
    x_labeled: &Tensor<R>,
    phase_labels: &[usize],
    x_unlabeled: &Tensor<R>,
) -> Result<(Vec<R>, Vec<R>), NnError> {
    let parts = run_step(model, x_labeled, phase_labels, x_unlabeled)?;
    model.zero_feature_grads();
    model.features_backward(&parts.df_d)?;
    let g_d = model.feature_grads();
    model.zero_feature_grads();
    model.features_backward(&parts.df_a)?;
    let g_a = model.feature_grads();
    Ok((g_d, g_a))
}

/// Inference-mode p_mbl (second softmax component of the phase head)
/// for a slice of records.
pub fn predict_p_mbl<R: Real>(
    model: &mut DannModel<R>,
    records: &[&EigenstateRecord],
) -> Result<Vec<R>, NnError> {
    let mut out = Vec::with_capacity(records.len());
    for chunk in records.chunks(256.max(1)) {
        let x = model.input_from_records(chunk)?;
        let f = model.features_forward(&x, false)?;
        let logits = model.discriminator_forward(&f, false)?;
        let probs = softmax(&logits);
        probs.assert_finite("phase head")?;
        for bi in 0..chunk.len() {
            out.push(probs.row(bi)[Phase::Mbl as usize]);
        }
    }
    Ok(out)
}

fn argmax_labels<R: Real>(p_mbl: &[R]) -> Vec<u8> {
    p_mbl
        .iter()
        .map(|&p| u8::from(p > R::of(0.5)))
        .collect()
}

/// Full training loop. Returns the per-epoch log; the model is trained
/// in place.
pub fn train<R: Real>(
    model: &mut DannModel<R>,
    labeled: &[EigenstateRecord],
    unlabeled: &[EigenstateRecord],
    cfg: &TrainConfig,
) -> Result<Vec<EpochLog>, NnError> {
    cfg.validate()?;
    for r in labeled.iter().chain(unlabeled) {
        if r.n_sites as usize != model.n_sites {
            return Err(NnError::MixedSystemSizes {
                expected: model.n_sites,
                found: r.n_sites as usize,
            });
        }
    }
    let n_deloc = labeled
        .iter()
        .filter(|r| r.phase_label == Some(Phase::Delocalized))
        .count();
    let n_mbl = labeled.len() - n_deloc;
    if n_deloc == 0 || n_mbl == 0 {
        return Err(NnError::InvalidConfig(
            "labeled set must contain both phases".into(),
        ));
    }
    debug_assert!(labeled.iter().all(|r| r.domain_tag == DomainTag::Labeled));
    if labeled.len() < cfg.batch_size || unlabeled.len() < cfg.batch_size {
        return Err(NnError::InvalidConfig(format!(
            "need at least one full batch per set ({} labeled / {} unlabeled records, batch {})",
            labeled.len(),
            unlabeled.len(),
            cfg.batch_size
        )));
    }

    let unlabeled_refs: Vec<&EigenstateRecord> = unlabeled.iter().collect();
    let mut prev_labels = argmax_labels(&predict_p_mbl(model, &unlabeled_refs)?);

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(mix_seed(&[cfg.rng_seed, 3]));
    let mut lab_idx: Vec<usize> = (0..labeled.len()).collect();
    let mut unl_idx: Vec<usize> = (0..unlabeled.len()).collect();
    let mu = R::of(cfg.mu);
    let mut log = Vec::new();

    for epoch in 1..=cfg.max_epochs {
        model.set_lambda(R::of(cfg.effective_lambda(epoch)));
        lab_idx.shuffle(&mut shuffle_rng);
        unl_idx.shuffle(&mut shuffle_rng);
        let steps = (lab_idx.len().min(unl_idx.len())) / cfg.batch_size;

        let mut sum_d = 0.0;
        let mut sum_a = 0.0;
        for step in 0..steps {
            let lb = &lab_idx[step * cfg.batch_size..(step + 1) * cfg.batch_size];
            let ub = &unl_idx[step * cfg.batch_size..(step + 1) * cfg.batch_size];
            let lab_refs: Vec<&EigenstateRecord> = lb.iter().map(|&i| &labeled[i]).collect();
            let unl_refs: Vec<&EigenstateRecord> = ub.iter().map(|&i| &unlabeled[i]).collect();
            let x_lab = model.input_from_records(&lab_refs)?;
            let x_unl = model.input_from_records(&unl_refs)?;
            let phase_labels: Vec<usize> = lab_refs
                .iter()
                .map(|r| r.phase_label.expect("labeled record") as usize)
                .collect();
            let (l_d, l_a) = match train_step(
                model,
                &x_lab,
                &phase_labels,
                &x_unl,
                mu,
                cfg.adversary_enabled,
            ) {
                Ok(v) => v,
                Err(NnError::NonFinite(_)) => return Err(NnError::Divergence { epoch }),
                Err(e) => return Err(e),
            };
            if !l_d.is_finite() || !l_a.is_finite() {
                return Err(NnError::Divergence { epoch });
            }
            sum_d += l_d.as_f64();
            sum_a += l_a.as_f64();
        }

        let labels = match predict_p_mbl(model, &unlabeled_refs) {
            Ok(p) => argmax_labels(&p),
            Err(NnError::NonFinite(_)) => return Err(NnError::Divergence { epoch }),
            Err(e) => return Err(e),
        };
        let flips = labels
            .iter()
            .zip(&prev_labels)
            .filter(|(a, b)| a != b)
            .count();
        let flip_fraction = flips as f64 / labels.len() as f64;
        prev_labels = labels;

        log.push(EpochLog {
            epoch,
            loss_d: sum_d / steps.max(1) as f64,
            loss_a: sum_a / steps.max(1) as f64,
            label_flip_fraction: flip_fraction,
        });
        if flip_fraction < cfg.stability_threshold {
            break;
        }
    }
    Ok(log)
}

/// Render a training log as the CSV the pipeline persists.
pub fn log_to_csv(log: &[EpochLog]) -> String {
    let mut s = String::from("epoch,loss_d,loss_a,label_flip_fraction\n");
    for l in log {
        s.push_str(&format!(
            "{},{},{},{}\n",
            l.epoch, l.loss_d, l.loss_a, l.label_flip_fraction
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    const N_SITES: u32 = 4;
    const DIM: usize = 6;

    /// Two toy classes: a single dominant coefficient (class 1) against a
    /// flat profile (class 0), both unit-normalized.
    fn toy_record(class: u8, tagged: bool, rng: &mut ChaCha8Rng) -> EigenstateRecord {
        let mut c = vec![0.0f32; DIM];
        if class == 1 {
            let peak = rng.gen_range(0..DIM);
            for (i, v) in c.iter_mut().enumerate() {
                *v = if i == peak { 1.0 } else { rng.gen_range(-0.05..0.05) };
            }
        } else {
            for v in c.iter_mut() {
                *v = rng.gen_range(0.3..0.5);
            }
        }
        let norm = c.iter().map(|v| v * v).sum::<f32>().sqrt();
        c.iter_mut().for_each(|v| *v /= norm);
        EigenstateRecord {
            n_sites: N_SITES,
            h: if class == 1 { 7.5 } else { 0.5 },
            eps_target: 0.5,
            eps_actual: 0.5,
            energy: 0.0,
            seed: 0,
            coefficients: c,
            domain_tag: if tagged {
                DomainTag::Labeled
            } else {
                DomainTag::Unlabeled
            },
            phase_label: if tagged {
                Some(if class == 1 {
                    Phase::Mbl
                } else {
                    Phase::Delocalized
                })
            } else {
                None
            },
        }
    }

    fn toy_sets(n_per_class: usize, seed: u64) -> (Vec<EigenstateRecord>, Vec<EigenstateRecord>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut labeled = Vec::new();
        let mut unlabeled = Vec::new();
        for _ in 0..n_per_class {
            labeled.push(toy_record(0, true, &mut rng));
            labeled.push(toy_record(1, true, &mut rng));
            unlabeled.push(toy_record(0, false, &mut rng));
            unlabeled.push(toy_record(1, false, &mut rng));
        }
        (labeled, unlabeled)
    }

    fn toy_config() -> TrainConfig {
        TrainConfig {
            mu: 0.05,
            batch_size: 20,
            max_epochs: 60,
            dropout_p: 0.2,
            lambda: 0.1,
            stability_threshold: 0.0,
            rng_seed: 9,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let mut cfg = TrainConfig::default();
        cfg.mu = -1.0;
        assert!(cfg.validate().is_err());
        cfg.mu = 0.0;
        assert!(cfg.validate().is_ok());
        cfg.dropout_p = 1.0;
        assert!(cfg.validate().is_err());
        cfg.dropout_p = 0.5;
        cfg.batch_size = 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn lambda_warmup_ramps_linearly() {
        let cfg = TrainConfig {
            lambda: 1.0,
            lambda_warmup_epochs: 4,
            ..TrainConfig::default()
        };
        assert!((cfg.effective_lambda(1) - 0.25).abs() < 1e-12);
        assert!((cfg.effective_lambda(4) - 1.0).abs() < 1e-12);
        assert!((cfg.effective_lambda(40) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn toy_classes_are_learned() {
        let (labeled, unlabeled) = toy_sets(60, 1);
        let cfg = toy_config();
        let mut model: DannModel<f64> = cfg.new_model(N_SITES as usize, DIM);
        let log = train(&mut model, &labeled, &unlabeled, &cfg).unwrap();
        assert!(!log.is_empty());
        assert!(log.last().unwrap().loss_d < log[0].loss_d);

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let test: Vec<EigenstateRecord> = (0..200)
            .map(|k| toy_record((k % 2) as u8, false, &mut rng))
            .collect();
        let refs: Vec<&EigenstateRecord> = test.iter().collect();
        let p = predict_p_mbl(&mut model, &refs).unwrap();
        let correct = p
            .iter()
            .enumerate()
            .filter(|(k, &p)| (p > 0.5) == (k % 2 == 1))
            .count();
        assert!(
            correct >= 198,
            "only {correct}/200 toy records classified correctly"
        );
    }

    #[test]
    fn zero_learning_rate_freezes_the_model() {
        let (labeled, unlabeled) = toy_sets(20, 2);
        let cfg = TrainConfig {
            mu: 0.0,
            batch_size: 10,
            max_epochs: 50,
            dropout_p: 0.0,
            stability_threshold: 0.001,
            rng_seed: 5,
            ..TrainConfig::default()
        };
        let mut model: DannModel<f64> = cfg.new_model(N_SITES as usize, DIM);
        let before = model.feature_params();
        let log = train(&mut model, &labeled, &unlabeled, &cfg).unwrap();
        assert_eq!(before, model.feature_params());
        // frozen predictions cannot flip, so training stops after one epoch
        assert_eq!(log.len(), 1);
        assert_eq!(log[0].label_flip_fraction, 0.0);
    }

    #[test]
    fn zero_lambda_matches_deleted_adversary_exactly() {
        let (labeled, unlabeled) = toy_sets(20, 3);
        let base = TrainConfig {
            mu: 0.05,
            batch_size: 10,
            max_epochs: 5,
            dropout_p: 0.3,
            stability_threshold: 0.0,
            rng_seed: 4,
            ..TrainConfig::default()
        };
        let with_adv = TrainConfig {
            lambda: 0.0,
            adversary_enabled: true,
            ..base.clone()
        };
        let without_adv = TrainConfig {
            lambda: 0.0,
            adversary_enabled: false,
            ..base
        };
        let mut m1: DannModel<f64> = with_adv.new_model(N_SITES as usize, DIM);
        let mut m2: DannModel<f64> = without_adv.new_model(N_SITES as usize, DIM);
        train(&mut m1, &labeled, &unlabeled, &with_adv).unwrap();
        train(&mut m2, &labeled, &unlabeled, &without_adv).unwrap();
        // feature extractor and phase head see identical updates bit for bit
        assert_eq!(m1.feature_params(), m2.feature_params());
        assert_eq!(m1.discriminator.fc1.w, m2.discriminator.fc1.w);
        assert_eq!(m1.discriminator.fc2.w, m2.discriminator.fc2.w);
    }

    #[test]
    fn saddle_point_update_combines_both_gradients() {
        let (labeled, unlabeled) = toy_sets(10, 6);
        for &lambda in &[0.0f64, 0.5, 1.0] {
            let cfg = TrainConfig {
                dropout_p: 0.4,
                lambda,
                rng_seed: 8,
                ..TrainConfig::default()
            };
            let mut probe: DannModel<f64> = cfg.new_model(N_SITES as usize, DIM);
            let mut live = probe.clone();

            let lab_refs: Vec<&EigenstateRecord> = labeled.iter().take(8).collect();
            let unl_refs: Vec<&EigenstateRecord> = unlabeled.iter().take(8).collect();
            let x_lab = probe.input_from_records(&lab_refs).unwrap();
            let x_unl = probe.input_from_records(&unl_refs).unwrap();
            let phase_labels: Vec<usize> = lab_refs
                .iter()
                .map(|r| r.phase_label.unwrap() as usize)
                .collect();

            let (g_d, g_a) =
                measure_feature_gradients(&mut probe, &x_lab, &phase_labels, &x_unl).unwrap();
            let before = live.feature_params();
            let mu = 0.01;
            train_step(&mut live, &x_lab, &phase_labels, &x_unl, mu, true).unwrap();
            let after = live.feature_params();

            for i in 0..before.len() {
                let expected = -mu * (g_d[i] - lambda * g_a[i]);
                let actual = after[i] - before[i];
                assert!(
                    (actual - expected).abs() <= 1e-12 * (1.0 + expected.abs()),
                    "lambda {lambda}, param {i}: step {actual} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn divergence_is_reported_with_its_epoch() {
        let (labeled, unlabeled) = toy_sets(10, 7);
        let cfg = TrainConfig {
            mu: 1e12,
            batch_size: 10,
            max_epochs: 10,
            dropout_p: 0.0,
            stability_threshold: 0.0,
            rng_seed: 1,
            ..TrainConfig::default()
        };
        let mut model: DannModel<f64> = cfg.new_model(N_SITES as usize, DIM);
        match train(&mut model, &labeled, &unlabeled, &cfg) {
            Err(NnError::Divergence { epoch }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn training_requires_both_phases_and_full_batches() {
        let (mut labeled, unlabeled) = toy_sets(20, 8);
        let cfg = toy_config();
        labeled.retain(|r| r.phase_label == Some(Phase::Mbl));
        let mut model: DannModel<f64> = cfg.new_model(N_SITES as usize, DIM);
        assert!(matches!(
            train(&mut model, &labeled, &unlabeled, &cfg),
            Err(NnError::InvalidConfig(_))
        ));

        let (labeled, _) = toy_sets(20, 8);
        assert!(matches!(
            train(&mut model, &labeled, &unlabeled[..5], &cfg),
            Err(NnError::InvalidConfig(_))
        ));
    }

    #[test]
    fn log_csv_has_header_and_rows() {
        let log = vec![EpochLog {
            epoch: 1,
            loss_d: 0.5,
            loss_a: 0.7,
            label_flip_fraction: 0.25,
        }];
        let csv = log_to_csv(&log);
        assert!(csv.starts_with("epoch,loss_d,loss_a,label_flip_fraction\n"));
        assert!(csv.contains("1,0.5,0.7,0.25"));
    }
}
