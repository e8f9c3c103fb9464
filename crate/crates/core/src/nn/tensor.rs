//! Minimal dense tensor (rank 2 or 3, row-major) for the network stack.

use crate::nn::NnError;
use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<R> {
    /// (batch, features) or (batch, channels, length).
    pub shape: Vec<usize>,
    pub data: Vec<R>,
}

impl<R: Real> Tensor<R> {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![R::zero(); shape.iter().product()],
        }
    }

    pub fn from_data(shape: &[usize], data: Vec<R>) -> Result<Self, NnError> {
        if shape.iter().product::<usize>() != data.len() {
            return Err(NnError::ShapeMismatch(format!(
                "shape {:?} does not hold {} elements",
                shape,
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn batch(&self) -> usize {
        self.shape[0]
    }

    /// Elements per batch item.
    pub fn item_len(&self) -> usize {
        self.shape[1..].iter().product()
    }

    pub fn row(&self, b: usize) -> &[R] {
        let n = self.item_len();
        &self.data[b * n..(b + 1) * n]
    }

    pub fn row_mut(&mut self, b: usize) -> &mut [R] {
        let n = self.item_len();
        &mut self.data[b * n..(b + 1) * n]
    }

    /// NaN/Inf guard.
    pub fn assert_finite(&self, context: &str) -> Result<(), NnError> {
        if self.data.iter().any(|x| !x.is_finite()) {
            return Err(NnError::NonFinite(context.to_string()));
        }
        Ok(())
    }

    /// Elementwise sum of two same-shape tensors.
    pub fn add(&self, other: &Tensor<R>) -> Result<Tensor<R>, NnError> {
        if self.shape != other.shape {
            return Err(NnError::ShapeMismatch(format!(
                "add: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a + b)
            .collect();
        Ok(Tensor {
            shape: self.shape.clone(),
            data,
        })
    }
}
