use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use super::{init::uniform_fan_in, Matrix};
use crate::{Error, Result};

/// Fully connected layer, `weight` is `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Input retained for the backward pass.
#[derive(Debug, Clone)]
pub struct DenseCache {
    pub input: Matrix,
}

impl DenseParams {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Array2::zeros((output, input)),
            bias: Array1::zeros(output),
        }
    }

    pub fn init<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        Self {
            weight: uniform_fan_in((output, input), input, rng),
            bias: Array1::zeros(output),
        }
    }

    pub fn from_parts(weight: Array2<f64>, bias: Array1<f64>) -> Result<Self> {
        if weight.nrows() != bias.len() {
            return Err(Error::shape("dense bias", weight.nrows(), bias.len()));
        }
        Ok(Self { weight, bias })
    }

    pub fn input_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.nrows()
    }

    /// `y = W·x + b` for a single input vector.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, DenseCache)> {
        let batch = Array2::from_shape_vec((1, x.len()), x.to_vec())
            .map_err(|e| Error::shape("dense input", self.input_dim(), e))?;
        let y = self.forward_batch(&batch)?;
        Ok((y.into_raw_vec_and_offset().0, DenseCache { input: batch }))
    }

    pub fn forward_batch(&self, x: &Matrix) -> Result<Matrix> {
        if x.ncols() != self.input_dim() {
            return Err(Error::shape("dense input", self.input_dim(), x.ncols()));
        }
        Ok(x.dot(&self.weight.t()) + &self.bias)
    }

    /// Accumulates parameter gradients into `grad` (if given) and returns
    /// the gradient with respect to the input.
    pub fn backward_batch(
        &self,
        input: &Matrix,
        dy: &Matrix,
        grad: Option<&mut DenseParams>,
    ) -> Matrix {
        if let Some(g) = grad {
            g.weight += &dy.t().dot(input);
            g.bias += &dy.sum_axis(Axis(0));
        }
        dy.dot(&self.weight)
    }

    pub fn backward(&self, cache: &DenseCache, dy: &[f64], grad: &mut DenseParams) -> Vec<f64> {
        let dy = Array2::from_shape_vec((1, dy.len()), dy.to_vec()).expect("1 x n");
        self.backward_batch(&cache.input, &dy, Some(grad))
            .into_raw_vec_and_offset()
            .0
    }

    pub(crate) fn slices(&self) -> [&[f64]; 2] {
        [
            self.weight.as_slice().expect("standard layout"),
            self.bias.as_slice().expect("standard layout"),
        ]
    }

    pub(crate) fn slices_mut(&mut self) -> [&mut [f64]; 2] {
        [
            self.weight.as_slice_mut().expect("standard layout"),
            self.bias.as_slice_mut().expect("standard layout"),
        ]
    }
}
