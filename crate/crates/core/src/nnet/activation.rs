use super::Matrix;

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

/// Subgradient at exactly zero is zero.
pub fn relu_backward(x: &[f64], dy: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(dy)
        .map(|(&v, &d)| if v > 0.0 { d } else { 0.0 })
        .collect()
}

pub fn relu_batch(x: &Matrix) -> Matrix {
    x.mapv(|v| v.max(0.0))
}

pub fn relu_backward_batch(pre: &Matrix, dy: &Matrix) -> Matrix {
    let mut dx = dy.clone();
    dx.zip_mut_with(pre, |d, &v| {
        if v <= 0.0 {
            *d = 0.0
        }
    });
    dx
}
