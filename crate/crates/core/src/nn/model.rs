//! The adversarial model: four conv/pool/batch-norm stages feeding two
//! softmax heads (phase discriminator and set adversary) through a
//! gradient reversal layer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chain::mix_seed;
use crate::dataset::EigenstateRecord;
use crate::nn::layers::{
    BatchNorm1d, Conv1d, Dense, Dropout, GradientReversal, MaxPool3, Relu, POOL,
};
use crate::nn::tensor::Tensor;
use crate::nn::NnError;
use crate::real::Real;

pub const POOL_STAGES: usize = 4;
pub const FILTERS: usize = 4;
pub const HIDDEN: usize = 128;
/// Total coarse-graining factor of the four pool-by-3 stages.
pub const POOL_FACTOR: usize = POOL.pow(POOL_STAGES as u32); // 81

/// Smallest multiple of 81 that holds `input_dim` entries.
pub fn padded_length(input_dim: usize) -> usize {
    input_dim.div_ceil(POOL_FACTOR) * POOL_FACTOR
}

#[derive(Debug, Clone)]
pub struct ConvStage<R> {
    pub conv: Conv1d<R>,
    pub relu: Relu<R>,
    pub pool: MaxPool3<R>,
    pub bn: BatchNorm1d<R>,
}

impl<R: Real> ConvStage<R> {
    fn forward(&mut self, x: &Tensor<R>, train: bool) -> Result<Tensor<R>, NnError> {
        let x = self.conv.forward(x)?;
        let x = self.relu.forward(&x);
        let x = self.pool.forward(&x)?;
        self.bn.forward(&x, train)
    }

    fn backward(&mut self, dy: &Tensor<R>) -> Result<Tensor<R>, NnError> {
        let dy = self.bn.backward(dy)?;
        let dy = self.pool.backward(&dy);
        let dy = self.relu.backward(&dy);
        self.conv.backward(&dy)
    }

    fn zero_grads(&mut self) {
        self.conv.zero_grads();
        self.bn.zero_grads();
    }
}

#[derive(Debug, Clone)]
pub struct Head<R> {
    pub fc1: Dense<R>,
    pub relu: Relu<R>,
    pub dropout: Dropout<R>,
    pub fc2: Dense<R>,
}

impl<R: Real> Head<R> {
    fn forward(&mut self, f: &Tensor<R>, train: bool) -> Result<Tensor<R>, NnError> {
        let x = self.fc1.forward(f)?;
        let x = self.relu.forward(&x);
        let x = self.dropout.forward(&x, train);
        self.fc2.forward(&x)
    }

    fn backward(&mut self, dlogits: &Tensor<R>) -> Result<Tensor<R>, NnError> {
        let d = self.fc2.backward(dlogits)?;
        let d = self.dropout.backward(&d);
        let d = self.relu.backward(&d);
        self.fc1.backward(&d)
    }

    fn zero_grads(&mut self) {
        self.fc1.zero_grads();
        self.fc2.zero_grads();
    }
}

/// Feature extractor, phase discriminator and adversary with their
/// shared architecture bookkeeping.
#[derive(Debug, Clone)]
pub struct DannModel<R> {
    pub n_sites: usize,
    pub input_dim: usize,
    pub pad_length: usize,
    pub feature_len: usize,
    pub stages: Vec<ConvStage<R>>,
    pub discriminator: Head<R>,
    pub adversary: Head<R>,
    pub grl: GradientReversal<R>,
    pub dropout_p: f64,
    pub bn_momentum: f64,
    pub bn_stabilizer: f64,
    pub init_seed: u64,
}

impl<R: Real> DannModel<R> {
    pub fn new(
        n_sites: usize,
        input_dim: usize,
        dropout_p: f64,
        bn_momentum: f64,
        bn_stabilizer: f64,
        lambda: f64,
        seed: u64,
    ) -> Self {
        let pad_length = padded_length(input_dim);
        let feature_len = FILTERS * pad_length / POOL_FACTOR;
        let mut init_rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, 0]));
        let stages = (0..POOL_STAGES)
            .map(|s| {
                let c_in = if s == 0 { 1 } else { FILTERS };
                ConvStage {
                    conv: Conv1d::new(c_in, FILTERS, &mut init_rng),
                    relu: Relu::new(),
                    pool: MaxPool3::new(),
                    bn: BatchNorm1d::new(FILTERS, bn_momentum, bn_stabilizer),
                }
            })
            .collect();
        let mut head = |stream: u64| Head {
            fc1: Dense::new(feature_len, HIDDEN, &mut init_rng),
            relu: Relu::new(),
            dropout: Dropout::new(dropout_p, mix_seed(&[seed, stream])),
            fc2: Dense::new(HIDDEN, 2, &mut init_rng),
        };
        let discriminator = head(1);
        let adversary = head(2);
        DannModel {
            n_sites,
            input_dim,
            pad_length,
            feature_len,
            stages,
            discriminator,
            adversary,
            grl: GradientReversal::new(R::of(lambda)),
            dropout_p,
            bn_momentum,
            bn_stabilizer,
            init_seed: seed,
        }
    }

    pub fn set_lambda(&mut self, lambda: R) {
        self.grl.lambda = lambda;
    }

    pub fn lambda(&self) -> R {
        self.grl.lambda
    }

    /// Zero-padded (batch, 1, pad_length) input tensor from records.
    pub fn input_from_records(
        &self,
        records: &[&EigenstateRecord],
    ) -> Result<Tensor<R>, NnError> {
        let mut data = vec![R::zero(); records.len() * self.pad_length];
        for (bi, r) in records.iter().enumerate() {
            if r.n_sites as usize != self.n_sites || r.coefficients.len() != self.input_dim {
                return Err(NnError::MixedSystemSizes {
                    expected: self.n_sites,
                    found: r.n_sites as usize,
                });
            }
            for (i, &c) in r.coefficients.iter().enumerate() {
                data[bi * self.pad_length + i] = R::of(c as f64);
            }
        }
        Tensor::from_data(&[records.len(), 1, self.pad_length], data)
    }

    /// Shared pipeline: conv stages then flatten to (batch, feature_len).
    pub fn features_forward(&mut self, x: &Tensor<R>, train: bool) -> Result<Tensor<R>, NnError> {
        let mut t = x.clone();
        for stage in &mut self.stages {
            t = stage.forward(&t, train)?;
        }
        // flatten (batch, channels, len) -> (batch, channels*len)
        let batch = t.shape[0];
        let feat = t.item_len();
        debug_assert_eq!(feat, self.feature_len);
        Tensor::from_data(&[batch, feat], t.data)
    }

    /// Backpropagate a feature-space gradient through the conv stages,
    /// accumulating parameter gradients. Caches are left intact, so this
    /// can be called several times per forward pass.
    pub fn features_backward(&mut self, df: &Tensor<R>) -> Result<(), NnError> {
        let batch = df.shape[0];
        let last_len = self.pad_length / POOL_FACTOR;
        let mut d = Tensor::from_data(&[batch, FILTERS, last_len], df.data.clone())?;
        for stage in self.stages.iter_mut().rev() {
            d = stage.backward(&d)?;
        }
        Ok(())
    }

    pub fn discriminator_forward(
        &mut self,
        f: &Tensor<R>,
        train: bool,
    ) -> Result<Tensor<R>, NnError> {
        self.discriminator.forward(f, train)
    }

    /// Adversary sees the features through the gradient reversal layer.
    pub fn adversary_forward(&mut self, f: &Tensor<R>, train: bool) -> Result<Tensor<R>, NnError> {
        let f_rev = self.grl.forward(f);
        self.adversary.forward(&f_rev, train)
    }

    /// Head backward passes: return the gradient with respect to the
    /// features (the adversary one still *before* gradient reversal).
    pub fn discriminator_backward(&mut self, dlogits: &Tensor<R>) -> Result<Tensor<R>, NnError> {
        self.discriminator.backward(dlogits)
    }

    pub fn adversary_backward(&mut self, dlogits: &Tensor<R>) -> Result<Tensor<R>, NnError> {
        self.adversary.backward(dlogits)
    }

    pub fn zero_feature_grads(&mut self) {
        for s in &mut self.stages {
            s.zero_grads();
        }
    }

    pub fn zero_head_grads(&mut self) {
        self.discriminator.zero_grads();
        self.adversary.zero_grads();
    }

    /// Flattened copy of all feature-extractor parameters.
    pub fn feature_params(&self) -> Vec<R> {
        let mut out = Vec::new();
        for s in &self.stages {
            out.extend_from_slice(&s.conv.w);
            out.extend_from_slice(&s.conv.b);
            out.extend_from_slice(&s.bn.gamma);
            out.extend_from_slice(&s.bn.beta);
        }
        out
    }

    /// Flattened copy of the accumulated feature-extractor gradients,
    /// in the same order as [`Self::feature_params`].
    pub fn feature_grads(&self) -> Vec<R> {
        let mut out = Vec::new();
        for s in &self.stages {
            out.extend_from_slice(&s.conv.gw);
            out.extend_from_slice(&s.conv.gb);
            out.extend_from_slice(&s.bn.g_gamma);
            out.extend_from_slice(&s.bn.g_beta);
        }
        out
    }

    fn sgd(w: &mut [R], g: &[R], mu: R) {
        for (w, &g) in w.iter_mut().zip(g) {
            *w -= mu * g;
        }
    }

    pub fn apply_feature_updates(&mut self, mu: R) {
        for s in &mut self.stages {
            Self::sgd(&mut s.conv.w, &s.conv.gw, mu);
            Self::sgd(&mut s.conv.b, &s.conv.gb, mu);
            Self::sgd(&mut s.bn.gamma, &s.bn.g_gamma, mu);
            Self::sgd(&mut s.bn.beta, &s.bn.g_beta, mu);
        }
    }

    pub fn apply_discriminator_updates(&mut self, mu: R) {
        let h = &mut self.discriminator;
        Self::sgd(&mut h.fc1.w, &h.fc1.gw, mu);
        Self::sgd(&mut h.fc1.b, &h.fc1.gb, mu);
        Self::sgd(&mut h.fc2.w, &h.fc2.gw, mu);
        Self::sgd(&mut h.fc2.b, &h.fc2.gb, mu);
    }

    pub fn apply_adversary_updates(&mut self, mu: R) {
        let h = &mut self.adversary;
        Self::sgd(&mut h.fc1.w, &h.fc1.gw, mu);
        Self::sgd(&mut h.fc1.b, &h.fc1.gb, mu);
        Self::sgd(&mut h.fc2.w, &h.fc2.gw, mu);
        Self::sgd(&mut h.fc2.b, &h.fc2.gb, mu);
    }
}
