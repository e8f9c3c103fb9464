//! Network layers with hand-written forward and backward passes.
//!
//! Every backward pass is checked against central finite differences in
//! the test suite; caches are read-only during backward so gradients of
//! several losses can be taken from one forward pass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::nn::tensor::Tensor;
use crate::nn::NnError;
use crate::real::Real;

pub const KERNEL: usize = 3;
pub const POOL: usize = 3;

/// 1D convolution, kernel width 3, same-padding (one zero each side).
#[derive(Debug, Clone)]
pub struct Conv1d<R> {
    pub c_in: usize,
    pub c_out: usize,
    /// w[co][ci][k], flattened.
    pub w: Vec<R>,
    pub b: Vec<R>,
    pub gw: Vec<R>,
    pub gb: Vec<R>,
    cache_x: Option<Tensor<R>>,
}

impl<R: Real> Conv1d<R> {
    pub fn new(c_in: usize, c_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let fan_in = (c_in * KERNEL) as f64;
        let bound = 1.0 / fan_in.sqrt();
        let w = (0..c_out * c_in * KERNEL)
            .map(|_| R::of(rng.gen_range(-bound..bound)))
            .collect();
        Conv1d {
            c_in,
            c_out,
            w,
            b: vec![R::zero(); c_out],
            gw: vec![R::zero(); c_out * c_in * KERNEL],
            gb: vec![R::zero(); c_out],
            cache_x: None,
        }
    }

    pub fn zero_grads(&mut self) {
        self.gw.iter_mut().for_each(|g| *g = R::zero());
        self.gb.iter_mut().for_each(|g| *g = R::zero());
    }

    pub fn forward(&mut self, x: &Tensor<R>) -> Result<Tensor<R>, NnError> {
        if x.shape.len() != 3 || x.shape[1] != self.c_in {
            return Err(NnError::ShapeMismatch(format!(
                "conv1d expects (batch, {}, len), got {:?}",
                self.c_in, x.shape
            )));
        }
        let (batch, len) = (x.shape[0], x.shape[2]);
        let mut out = Tensor::zeros(&[batch, self.c_out, len]);
        for bi in 0..batch {
            for co in 0..self.c_out {
                let orow = &mut out.data[(bi * self.c_out + co) * len..][..len];
                orow.iter_mut().for_each(|o| *o = self.b[co]);
                for ci in 0..self.c_in {
                    let xrow = &x.data[(bi * self.c_in + ci) * len..][..len];
                    let wk = &self.w[(co * self.c_in + ci) * KERNEL..][..KERNEL];
                    // k = 0 reads x[t-1], k = 1 reads x[t], k = 2 reads x[t+1]
                    for t in 1..len {
                        orow[t] += wk[0] * xrow[t - 1];
                    }
                    for t in 0..len {
                        orow[t] += wk[1] * xrow[t];
                    }
                    for t in 0..len - 1 {
                        orow[t] += wk[2] * xrow[t + 1];
                    }
                }
            }
        }
        self.cache_x = Some(x.clone());
        Ok(out)
    }

    pub fn backward(&mut self, dy: &Tensor<R>) -> Result<Tensor<R>, NnError> {
        let x = self.cache_x.as_ref().expect("conv backward before forward");
        let (batch, len) = (x.shape[0], x.shape[2]);
        if dy.shape != [batch, self.c_out, len] {
            return Err(NnError::ShapeMismatch(format!(
                "conv1d backward got {:?}",
                dy.shape
            )));
        }
        let mut dx = Tensor::zeros(&x.shape);
        for bi in 0..batch {
            for co in 0..self.c_out {
                let drow = &dy.data[(bi * self.c_out + co) * len..][..len];
                let mut gsum = R::zero();
                for &d in drow {
                    gsum += d;
                }
                self.gb[co] += gsum;
                for ci in 0..self.c_in {
                    let xrow = &x.data[(bi * self.c_in + ci) * len..][..len];
                    let wk = &self.w[(co * self.c_in + ci) * KERNEL..][..KERNEL];
                    let gk = &mut self.gw[(co * self.c_in + ci) * KERNEL..][..KERNEL];
                    let dxrow = &mut dx.data[(bi * self.c_in + ci) * len..][..len];
                    let mut g0 = R::zero();
                    let mut g1 = R::zero();
                    let mut g2 = R::zero();
                    for t in 1..len {
                        g0 += drow[t] * xrow[t - 1];
                        dxrow[t - 1] += wk[0] * drow[t];
                    }
                    for t in 0..len {
                        g1 += drow[t] * xrow[t];
                        dxrow[t] += wk[1] * drow[t];
                    }
                    for t in 0..len - 1 {
                        g2 += drow[t] * xrow[t + 1];
                        dxrow[t + 1] += wk[2] * drow[t];
                    }
                    gk[0] += g0;
                    gk[1] += g1;
                    gk[2] += g2;
                }
            }
        }
        Ok(dx)
    }
}

/// Elementwise rectified linear unit.
#[derive(Debug, Clone, Default)]
pub struct Relu<R> {
    mask: Vec<bool>,
    _marker: std::marker::PhantomData<R>,
}

impl<R: Real> Relu<R> {
    pub fn new() -> Self {
        Relu {
            mask: Vec::new(),
            _marker: std::marker::PhantomData,
        }
    }

    pub fn forward(&mut self, x: &Tensor<R>) -> Tensor<R> {
        self.mask = x.data.iter().map(|&v| v > R::zero()).collect();
        Tensor {
            shape: x.shape.clone(),
            data: x
                .data
                .iter()
                .map(|&v| if v > R::zero() { v } else { R::zero() })
                .collect(),
        }
    }

    pub fn backward(&self, dy: &Tensor<R>) -> Tensor<R> {
        Tensor {
            shape: dy.shape.clone(),
            data: dy
                .data
                .iter()
                .zip(&self.mask)
                .map(|(&d, &m)| if m { d } else { R::zero() })
                .collect(),
        }
    }
}

/// Non-overlapping max pooling over 3 neighbors; the gradient routes to
/// the argmax (ties to the lowest index).
#[derive(Debug, Clone, Default)]
pub struct MaxPool3<R> {
    argmax: Vec<usize>,
    in_shape: Vec<usize>,
    _marker: std::marker::PhantomData<R>,
}

impl<R: Real> MaxPool3<R> {
    pub fn new() -> Self {
        MaxPool3 {
            argmax: Vec::new(),
            in_shape: Vec::new(),
            _marker: std::marker::PhantomData,
        }
    }

    pub fn forward(&mut self, x: &Tensor<R>) -> Result<Tensor<R>, NnError> {
        let len = *x.shape.last().expect("rank >= 1");
        if len % POOL != 0 {
            return Err(NnError::LengthNotDivisible(len));
        }
        let rows = x.data.len() / len;
        let out_len = len / POOL;
        let mut out = Vec::with_capacity(rows * out_len);
        self.argmax.clear();
        for r in 0..rows {
            let row = &x.data[r * len..(r + 1) * len];
            for t in 0..out_len {
                let w = &row[t * POOL..(t + 1) * POOL];
                let mut best = 0;
                for k in 1..POOL {
                    if w[k] > w[best] {
                        best = k;
                    }
                }
                self.argmax.push(r * len + t * POOL + best);
                out.push(w[best]);
            }
        }
        self.in_shape = x.shape.clone();
        let mut shape = x.shape.clone();
        *shape.last_mut().unwrap() = out_len;
        Ok(Tensor { shape, data: out })
    }

    pub fn backward(&self, dy: &Tensor<R>) -> Tensor<R> {
        let mut dx = Tensor::zeros(&self.in_shape);
        for (i, &src) in self.argmax.iter().enumerate() {
            dx.data[src] += dy.data[i];
        }
        dx
    }
}

/// Per-channel batch normalization with running statistics.
#[derive(Debug, Clone)]
pub struct BatchNorm1d<R> {
    pub channels: usize,
    pub gamma: Vec<R>,
    pub beta: Vec<R>,
    pub g_gamma: Vec<R>,
    pub g_beta: Vec<R>,
    pub running_mean: Vec<R>,
    pub running_var: Vec<R>,
    pub momentum: R,
    pub stabilizer: R,
    cache: Option<BnCache<R>>,
}

#[derive(Debug, Clone)]
struct BnCache<R> {
    x_hat: Vec<R>,
    inv_std: Vec<R>,
    shape: Vec<usize>,
}

impl<R: Real> BatchNorm1d<R> {
    pub fn new(channels: usize, momentum: f64, stabilizer: f64) -> Self {
        BatchNorm1d {
            channels,
            gamma: vec![R::one(); channels],
            beta: vec![R::zero(); channels],
            g_gamma: vec![R::zero(); channels],
            g_beta: vec![R::zero(); channels],
            running_mean: vec![R::zero(); channels],
            running_var: vec![R::one(); channels],
            momentum: R::of(momentum),
            stabilizer: R::of(stabilizer),
            cache: None,
        }
    }

    pub fn zero_grads(&mut self) {
        self.g_gamma.iter_mut().for_each(|g| *g = R::zero());
        self.g_beta.iter_mut().for_each(|g| *g = R::zero());
    }

    /// Iterate (channel, flat index) pairs of a (batch, channels, len) tensor.
    fn for_each_slot(shape: &[usize], mut f: impl FnMut(usize, usize)) {
        let (batch, channels, len) = (shape[0], shape[1], shape[2]);
        for bi in 0..batch {
            for c in 0..channels {
                let base = (bi * channels + c) * len;
                for t in 0..len {
                    f(c, base + t);
                }
            }
        }
    }

    pub fn forward(&mut self, x: &Tensor<R>, train: bool) -> Result<Tensor<R>, NnError> {
        if x.shape.len() != 3 || x.shape[1] != self.channels {
            return Err(NnError::ShapeMismatch(format!(
                "batchnorm expects (batch, {}, len), got {:?}",
                self.channels, x.shape
            )));
        }
        let batch = x.shape[0];
        let len = x.shape[2];
        let mut out = Tensor::zeros(&x.shape);
        if train {
            if batch < 2 {
                return Err(NnError::DegenerateBatch);
            }
            let m = R::of((batch * len) as f64);
            let mut mean = vec![R::zero(); self.channels];
            Self::for_each_slot(&x.shape, |c, i| mean[c] += x.data[i]);
            mean.iter_mut().for_each(|v| *v /= m);
            let mut var = vec![R::zero(); self.channels];
            Self::for_each_slot(&x.shape, |c, i| {
                let d = x.data[i] - mean[c];
                var[c] += d * d;
            });
            var.iter_mut().for_each(|v| *v /= m);

            let inv_std: Vec<R> = var
                .iter()
                .map(|&v| R::one() / (v + self.stabilizer).sqrt())
                .collect();
            let mut x_hat = vec![R::zero(); x.data.len()];
            Self::for_each_slot(&x.shape, |c, i| {
                x_hat[i] = (x.data[i] - mean[c]) * inv_std[c];
                out.data[i] = self.gamma[c] * x_hat[i] + self.beta[c];
            });
            for c in 0..self.channels {
                self.running_mean[c] =
                    self.momentum * self.running_mean[c] + (R::one() - self.momentum) * mean[c];
                self.running_var[c] =
                    self.momentum * self.running_var[c] + (R::one() - self.momentum) * var[c];
            }
            self.cache = Some(BnCache {
                x_hat,
                inv_std,
                shape: x.shape.clone(),
            });
        } else {
            let inv_std: Vec<R> = self
                .running_var
                .iter()
                .map(|&v| R::one() / (v + self.stabilizer).sqrt())
                .collect();
            Self::for_each_slot(&x.shape, |c, i| {
                out.data[i] =
                    self.gamma[c] * (x.data[i] - self.running_mean[c]) * inv_std[c] + self.beta[c];
            });
        }
        Ok(out)
    }

    pub fn backward(&mut self, dy: &Tensor<R>) -> Result<Tensor<R>, NnError> {
        let cache = self.cache.as_ref().expect("batchnorm backward before forward");
        if dy.shape != cache.shape {
            return Err(NnError::ShapeMismatch(format!(
                "batchnorm backward got {:?}",
                dy.shape
            )));
        }
        let m = R::of((cache.shape[0] * cache.shape[2]) as f64);
        let mut sum_dy = vec![R::zero(); self.channels];
        let mut sum_dy_xhat = vec![R::zero(); self.channels];
        Self::for_each_slot(&cache.shape, |c, i| {
            sum_dy[c] += dy.data[i];
            sum_dy_xhat[c] += dy.data[i] * cache.x_hat[i];
        });
        for c in 0..self.channels {
            self.g_beta[c] += sum_dy[c];
            self.g_gamma[c] += sum_dy_xhat[c];
        }
        let mut dx = Tensor::zeros(&cache.shape);
        Self::for_each_slot(&cache.shape, |c, i| {
            // dx = γ/√(var+ε) · (dy − mean(dy) − x̂·mean(dy·x̂))
            dx.data[i] = self.gamma[c] * cache.inv_std[c]
                * (dy.data[i] - sum_dy[c] / m - cache.x_hat[i] * sum_dy_xhat[c] / m);
        });
        Ok(dx)
    }
}

/// Fully connected layer.
#[derive(Debug, Clone)]
pub struct Dense<R> {
    pub n_in: usize,
    pub n_out: usize,
    /// w[o][i], flattened.
    pub w: Vec<R>,
    pub b: Vec<R>,
    pub gw: Vec<R>,
    pub gb: Vec<R>,
    cache_x: Option<Tensor<R>>,
}

impl<R: Real> Dense<R> {
    pub fn new(n_in: usize, n_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (n_in as f64).sqrt();
        let w = (0..n_out * n_in)
            .map(|_| R::of(rng.gen_range(-bound..bound)))
            .collect();
        Dense {
            n_in,
            n_out,
            w,
            b: vec![R::zero(); n_out],
            gw: vec![R::zero(); n_out * n_in],
            gb: vec![R::zero(); n_out],
            cache_x: None,
        }
    }

    pub fn zero_grads(&mut self) {
        self.gw.iter_mut().for_each(|g| *g = R::zero());
        self.gb.iter_mut().for_each(|g| *g = R::zero());
    }

    pub fn forward(&mut self, x: &Tensor<R>) -> Result<Tensor<R>, NnError> {
        if x.shape.len() != 2 || x.shape[1] != self.n_in {
            return Err(NnError::ShapeMismatch(format!(
                "dense expects (batch, {}), got {:?}",
                self.n_in, x.shape
            )));
        }
        let batch = x.shape[0];
        let mut out = Tensor::zeros(&[batch, self.n_out]);
        for bi in 0..batch {
            let xrow = x.row(bi);
            let orow = out.row_mut(bi);
            for o in 0..self.n_out {
                let wrow = &self.w[o * self.n_in..(o + 1) * self.n_in];
                let mut acc = self.b[o];
                for i in 0..self.n_in {
                    acc += wrow[i] * xrow[i];
                }
                orow[o] = acc;
            }
        }
        self.cache_x = Some(x.clone());
        Ok(out)
    }

    pub fn backward(&mut self, dy: &Tensor<R>) -> Result<Tensor<R>, NnError> {
        let x = self.cache_x.as_ref().expect("dense backward before forward");
        let batch = x.shape[0];
        if dy.shape != [batch, self.n_out] {
            return Err(NnError::ShapeMismatch(format!(
                "dense backward got {:?}",
                dy.shape
            )));
        }
        let mut dx = Tensor::zeros(&x.shape);
        for bi in 0..batch {
            let xrow = x.row(bi);
            let drow = dy.row(bi);
            let dxrow = dx.row_mut(bi);
            for o in 0..self.n_out {
                let d = drow[o];
                self.gb[o] += d;
                let wrow = &self.w[o * self.n_in..(o + 1) * self.n_in];
                let grow = &mut self.gw[o * self.n_in..(o + 1) * self.n_in];
                for i in 0..self.n_in {
                    grow[i] += d * xrow[i];
                    dxrow[i] += d * wrow[i];
                }
            }
        }
        Ok(dx)
    }
}

/// Inverted dropout; active only in training mode.
#[derive(Debug, Clone)]
pub struct Dropout<R> {
    pub p: f64,
    rng: ChaCha8Rng,
    mask: Vec<R>,
    active: bool,
}

impl<R: Real> Dropout<R> {
    pub fn new(p: f64, seed: u64) -> Self {
        Dropout {
            p,
            rng: ChaCha8Rng::seed_from_u64(seed),
            mask: Vec::new(),
            active: false,
        }
    }

    pub fn forward(&mut self, x: &Tensor<R>, train: bool) -> Tensor<R> {
        self.active = train && self.p > 0.0;
        if !self.active {
            return x.clone();
        }
        let keep = R::of(1.0 / (1.0 - self.p));
        self.mask = (0..x.data.len())
            .map(|_| {
                if self.rng.gen::<f64>() < self.p {
                    R::zero()
                } else {
                    keep
                }
            })
            .collect();
        Tensor {
            shape: x.shape.clone(),
            data: x
                .data
                .iter()
                .zip(&self.mask)
                .map(|(&v, &m)| v * m)
                .collect(),
        }
    }

    pub fn backward(&self, dy: &Tensor<R>) -> Tensor<R> {
        if !self.active {
            return dy.clone();
        }
        Tensor {
            shape: dy.shape.clone(),
            data: dy
                .data
                .iter()
                .zip(&self.mask)
                .map(|(&d, &m)| d * m)
                .collect(),
        }
    }
}

/// Identity in the forward pass; multiplies the upstream gradient by −λ.
#[derive(Debug, Clone, Copy)]
pub struct GradientReversal<R> {
    pub lambda: R,
}

impl<R: Real> GradientReversal<R> {
    pub fn new(lambda: R) -> Self {
        GradientReversal { lambda }
    }

    pub fn forward(&self, x: &Tensor<R>) -> Tensor<R> {
        x.clone()
    }

    pub fn backward(&self, dy: &Tensor<R>) -> Tensor<R> {
        Tensor {
            shape: dy.shape.clone(),
            data: dy.data.iter().map(|&d| -self.lambda * d).collect(),
        }
    }
}

/// Row-wise softmax.
pub fn softmax<R: Real>(logits: &Tensor<R>) -> Tensor<R> {
    let cols = logits.item_len();
    let mut out = Tensor::zeros(&logits.shape);
    for bi in 0..logits.batch() {
        let row = logits.row(bi);
        let max = row.iter().fold(R::neg_infinity(), |a, &b| a.max(b));
        let orow = &mut out.data[bi * cols..(bi + 1) * cols];
        let mut z = R::zero();
        for (o, &l) in orow.iter_mut().zip(row) {
            *o = (l - max).exp();
            z += *o;
        }
        orow.iter_mut().for_each(|o| *o /= z);
    }
    out
}

const CE_CLAMP: f64 = 1e-12;

/// Mean cross-entropy of softmax probabilities against integer labels,
/// with predictions clamped at 1e-12.
pub fn cross_entropy<R: Real>(probs: &Tensor<R>, labels: &[usize]) -> Result<R, NnError> {
    if probs.batch() != labels.len() {
        return Err(NnError::ShapeMismatch(format!(
            "{} probability rows vs {} labels",
            probs.batch(),
            labels.len()
        )));
    }
    let mut loss = R::zero();
    for (bi, &label) in labels.iter().enumerate() {
        let p = probs.row(bi)[label].max(R::of(CE_CLAMP));
        loss -= p.ln();
    }
    Ok(loss / R::of(labels.len() as f64))
}

/// Gradient of mean softmax cross-entropy with respect to the logits:
/// (p − one_hot) / batch.
pub fn softmax_cross_entropy_backward<R: Real>(probs: &Tensor<R>, labels: &[usize]) -> Tensor<R> {
    let cols = probs.item_len();
    let scale = R::one() / R::of(labels.len() as f64);
    let mut d = probs.clone();
    for (bi, &label) in labels.iter().enumerate() {
        let row = &mut d.data[bi * cols..(bi + 1) * cols];
        row[label] -= R::one();
        row.iter_mut().for_each(|v| *v *= scale);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// Central finite differences of `loss` against `analytic` at `x0`.
    fn fd_check(mut loss: impl FnMut(&[f64]) -> f64, x0: &[f64], analytic: &[f64], tol: f64) {
        assert_eq!(x0.len(), analytic.len());
        let h = 1e-5;
        for i in 0..x0.len() {
            let mut xp = x0.to_vec();
            xp[i] += h;
            let mut xm = x0.to_vec();
            xm[i] -= h;
            let num = (loss(&xp) - loss(&xm)) / (2.0 * h);
            let denom = num.abs().max(analytic[i].abs()).max(1e-6);
            assert!(
                (num - analytic[i]).abs() / denom < tol,
                "component {i}: numeric {num} vs analytic {}",
                analytic[i]
            );
        }
    }

    #[test]
    fn conv_edge_detector() {
        let mut conv: Conv1d<f64> = Conv1d::new(1, 1, &mut rng(0));
        conv.w = vec![1.0, 0.0, -1.0];
        conv.b = vec![0.0];
        let x = Tensor::from_data(&[1, 1, 4], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = conv.forward(&x).unwrap();
        assert_eq!(y.data, vec![-2.0, -2.0, -2.0, 3.0]);
    }

    #[test]
    fn conv_identity_kernel() {
        let mut conv: Conv1d<f64> = Conv1d::new(1, 1, &mut rng(0));
        conv.w = vec![0.0, 1.0, 0.0];
        conv.b = vec![0.0];
        let x = Tensor::from_data(&[1, 1, 5], vec![0.5, -1.0, 2.0, 0.0, 3.0]).unwrap();
        let y = conv.forward(&x).unwrap();
        assert_eq!(y.data, x.data);
    }

    #[test]
    fn conv_gradients_match_finite_differences() {
        let mut r = rng(7);
        let x0: Vec<f64> = (0..2 * 2 * 6).map(|_| r.gen_range(-1.0..1.0)).collect();
        let c: Vec<f64> = (0..2 * 3 * 6).map(|_| r.gen_range(-1.0..1.0)).collect();
        let mut conv: Conv1d<f64> = Conv1d::new(2, 3, &mut r);
        let w0 = conv.w.clone();

        // input gradient
        let x = Tensor::from_data(&[2, 2, 6], x0.clone()).unwrap();
        let y = conv.forward(&x).unwrap();
        let dy = Tensor::from_data(&y.shape, c.clone()).unwrap();
        conv.zero_grads();
        let dx = conv.backward(&dy).unwrap();
        let gw = conv.gw.clone();
        let gb = conv.gb.clone();

        let mut conv2 = conv.clone();
        fd_check(
            |xs| {
                let t = Tensor::from_data(&[2, 2, 6], xs.to_vec()).unwrap();
                let y = conv2.forward(&t).unwrap();
                y.data.iter().zip(&c).map(|(a, b)| a * b).sum()
            },
            &x0,
            &dx.data,
            1e-4,
        );

        // weight gradient
        let mut conv3 = conv.clone();
        fd_check(
            |ws| {
                conv3.w = ws.to_vec();
                let y = conv3.forward(&x).unwrap();
                y.data.iter().zip(&c).map(|(a, b)| a * b).sum()
            },
            &w0,
            &gw,
            1e-4,
        );

        // bias gradient
        let mut conv4 = conv.clone();
        conv4.w = w0;
        fd_check(
            |bs| {
                conv4.b = bs.to_vec();
                let y = conv4.forward(&x).unwrap();
                y.data.iter().zip(&c).map(|(a, b)| a * b).sum()
            },
            &vec![0.0; 3],
            &gb,
            1e-4,
        );
    }

    #[test]
    fn relu_clamps_and_masks() {
        let mut relu: Relu<f64> = Relu::new();
        let x = Tensor::from_data(&[1, 4], vec![-1.0, 0.0, 2.0, -0.5]).unwrap();
        let y = relu.forward(&x);
        assert_eq!(y.data, vec![0.0, 0.0, 2.0, 0.0]);
        let dy = Tensor::from_data(&[1, 4], vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(relu.backward(&dy).data, vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn maxpool_selects_and_routes() {
        let mut pool: MaxPool3<f64> = MaxPool3::new();
        let x = Tensor::from_data(&[1, 1, 6], vec![1.0, 5.0, 2.0, 4.0, 4.0, 1.0]).unwrap();
        let y = pool.forward(&x).unwrap();
        assert_eq!(y.data, vec![5.0, 4.0]);
        let dy = Tensor::from_data(&[1, 1, 2], vec![10.0, 20.0]).unwrap();
        let dx = pool.backward(&dy);
        // ties route to the lowest index
        assert_eq!(dx.data, vec![0.0, 10.0, 0.0, 20.0, 0.0, 0.0]);
    }

    #[test]
    fn maxpool_rejects_bad_length() {
        let mut pool: MaxPool3<f64> = MaxPool3::new();
        let x = Tensor::from_data(&[1, 1, 4], vec![0.0; 4]).unwrap();
        assert!(matches!(
            pool.forward(&x),
            Err(NnError::LengthNotDivisible(4))
        ));
    }

    #[test]
    fn batchnorm_standardizes_training_batch() {
        let mut bn: BatchNorm1d<f64> = BatchNorm1d::new(1, 0.9, 1e-12);
        let x = Tensor::from_data(&[2, 1, 1], vec![-1.0, 1.0]).unwrap();
        let y = bn.forward(&x, true).unwrap();
        assert!((y.data[0] + 1.0).abs() < 1e-6);
        assert!((y.data[1] - 1.0).abs() < 1e-6);
        // running stats moved toward the batch stats
        assert!((bn.running_mean[0] - 0.0).abs() < 1e-12);
        assert!((bn.running_var[0] - (0.9 + 0.1)).abs() < 1e-12);
    }

    #[test]
    fn batchnorm_rejects_singleton_training_batch() {
        let mut bn: BatchNorm1d<f64> = BatchNorm1d::new(1, 0.9, 1e-5);
        let x = Tensor::from_data(&[1, 1, 3], vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(bn.forward(&x, true), Err(NnError::DegenerateBatch)));
        assert!(bn.forward(&x, false).is_ok());
    }

    #[test]
    fn batchnorm_gradients_match_finite_differences() {
        let mut r = rng(11);
        let x0: Vec<f64> = (0..3 * 2 * 4).map(|_| r.gen_range(-1.0..1.0)).collect();
        let c: Vec<f64> = (0..3 * 2 * 4).map(|_| r.gen_range(-1.0..1.0)).collect();
        let mut bn: BatchNorm1d<f64> = BatchNorm1d::new(2, 0.9, 1e-5);
        bn.gamma = vec![1.3, 0.7];
        bn.beta = vec![0.2, -0.4];

        let x = Tensor::from_data(&[3, 2, 4], x0.clone()).unwrap();
        let _ = bn.forward(&x, true).unwrap();
        let dy = Tensor::from_data(&[3, 2, 4], c.clone()).unwrap();
        bn.zero_grads();
        let dx = bn.backward(&dy).unwrap();

        let bn_ref = bn.clone();
        fd_check(
            |xs| {
                let mut b = bn_ref.clone();
                let t = Tensor::from_data(&[3, 2, 4], xs.to_vec()).unwrap();
                let y = b.forward(&t, true).unwrap();
                y.data.iter().zip(&c).map(|(a, b)| a * b).sum()
            },
            &x0,
            &dx.data,
            1e-4,
        );
        fd_check(
            |gs| {
                let mut b = bn_ref.clone();
                b.gamma = gs.to_vec();
                let y = b.forward(&x, true).unwrap();
                y.data.iter().zip(&c).map(|(a, b)| a * b).sum()
            },
            &[1.3, 0.7],
            &bn.g_gamma,
            1e-4,
        );
        fd_check(
            |bs| {
                let mut b = bn_ref.clone();
                b.beta = bs.to_vec();
                let y = b.forward(&x, true).unwrap();
                y.data.iter().zip(&c).map(|(a, b)| a * b).sum()
            },
            &[0.2, -0.4],
            &bn.g_beta,
            1e-4,
        );
    }

    #[test]
    fn dense_gradients_match_finite_differences() {
        let mut r = rng(3);
        let x0: Vec<f64> = (0..2 * 5).map(|_| r.gen_range(-1.0..1.0)).collect();
        let c: Vec<f64> = (0..2 * 3).map(|_| r.gen_range(-1.0..1.0)).collect();
        let mut dense: Dense<f64> = Dense::new(5, 3, &mut r);
        let w0 = dense.w.clone();

        let x = Tensor::from_data(&[2, 5], x0.clone()).unwrap();
        let _ = dense.forward(&x).unwrap();
        let dy = Tensor::from_data(&[2, 3], c.clone()).unwrap();
        dense.zero_grads();
        let dx = dense.backward(&dy).unwrap();

        let d_ref = dense.clone();
        fd_check(
            |xs| {
                let mut d = d_ref.clone();
                let t = Tensor::from_data(&[2, 5], xs.to_vec()).unwrap();
                let y = d.forward(&t).unwrap();
                y.data.iter().zip(&c).map(|(a, b)| a * b).sum()
            },
            &x0,
            &dx.data,
            1e-4,
        );
        fd_check(
            |ws| {
                let mut d = d_ref.clone();
                d.w = ws.to_vec();
                let y = d.forward(&x).unwrap();
                y.data.iter().zip(&c).map(|(a, b)| a * b).sum()
            },
            &w0,
            &dense.gw,
            1e-4,
        );
    }

    #[test]
    fn dropout_is_identity_in_eval_and_rescales_in_train() {
        let mut drop: Dropout<f64> = Dropout::new(0.5, 42);
        let x = Tensor::from_data(&[1, 1000], vec![1.0; 1000]).unwrap();
        let y_eval = drop.forward(&x, false);
        assert_eq!(y_eval.data, x.data);
        let y_train = drop.forward(&x, true);
        let kept = y_train.data.iter().filter(|&&v| v > 0.0).count();
        assert!((400..600).contains(&kept));
        for &v in &y_train.data {
            assert!(v == 0.0 || (v - 2.0).abs() < 1e-12);
        }
        // expectation preserved to within sampling noise
        let mean: f64 = y_train.data.iter().sum::<f64>() / 1000.0;
        assert!((mean - 1.0).abs() < 0.2);
    }

    #[test]
    fn gradient_reversal_identity_forward_scaled_backward() {
        let grl: GradientReversal<f64> = GradientReversal::new(0.5);
        let x = Tensor::from_data(&[1, 3], vec![1.0, -2.0, 3.0]).unwrap();
        assert_eq!(grl.forward(&x).data, x.data);
        assert_eq!(grl.backward(&x).data, vec![-0.5, 1.0, -1.5]);
        let off: GradientReversal<f64> = GradientReversal::new(0.0);
        assert_eq!(off.backward(&x).data, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn softmax_and_cross_entropy_reference_values() {
        let logits = Tensor::from_data(&[2, 2], vec![0.0f64, 0.0, 1.0, 1.0]).unwrap();
        let p = softmax(&logits);
        for &v in &p.data {
            assert!((v - 0.5).abs() < 1e-12);
        }
        let loss = cross_entropy(&p, &[0, 1]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn softmax_cross_entropy_gradient_matches_finite_differences() {
        let mut r = rng(5);
        let l0: Vec<f64> = (0..3 * 2).map(|_| r.gen_range(-2.0..2.0)).collect();
        let labels = [0usize, 1, 1];
        let logits = Tensor::from_data(&[3, 2], l0.clone()).unwrap();
        let probs = softmax(&logits);
        let g = softmax_cross_entropy_backward(&probs, &labels);
        fd_check(
            |ls| {
                let t = Tensor::from_data(&[3, 2], ls.to_vec()).unwrap();
                cross_entropy(&softmax(&t), &labels).unwrap()
            },
            &l0,
            &g.data,
            1e-4,
        );
    }
}
