use ndarray::Array2;
use rand::Rng;

/// Uniform in `±1/√fan_in`.
pub fn uniform_fan_in<R: Rng + ?Sized>(
    shape: (usize, usize),
    fan_in: usize,
    rng: &mut R,
) -> Array2<f64> {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    Array2::from_shape_simple_fn(shape, || rng.gen_range(-bound..=bound))
}
