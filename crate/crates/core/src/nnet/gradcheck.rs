//! Central finite differences over a [`ParameterSet`].
//!
//! Only ever evaluates the forward function; it shares no code with the
//! analytic backward passes it is used to check.

use super::ParameterSet;

/// Absolute floor below which gradients are compared absolutely.
pub const ABS_FLOOR: f64 = 1e-8;

/// `(f(θ + h·e_k) − f(θ − h·e_k)) / 2h` for each flat index in `indices`
/// (`None` = every parameter). Indices walk [`ParameterSet::slices`] in order.
pub fn central_differences(
    params: &ParameterSet,
    h: f64,
    indices: Option<&[usize]>,
    mut f: impl FnMut(&ParameterSet) -> f64,
) -> Vec<f64> {
    let total = params.num_params();
    let all: Vec<usize>;
    let indices = match indices {
        Some(ix) => ix,
        None => {
            all = (0..total).collect();
            &all
        }
    };
    let mut probe = params.clone();
    indices
        .iter()
        .map(|&flat| {
            let orig = get(&probe, flat);
            set(&mut probe, flat, orig + h);
            let up = f(&probe);
            set(&mut probe, flat, orig - h);
            let down = f(&probe);
            set(&mut probe, flat, orig);
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Flattened view of a gradient set at `indices`.
pub fn gather(grads: &ParameterSet, indices: Option<&[usize]>) -> Vec<f64> {
    let flat: Vec<f64> = grads.slices().iter().flat_map(|s| s.iter().copied()).collect();
    match indices {
        Some(ix) => ix.iter().map(|&i| flat[i]).collect(),
        None => flat,
    }
}

/// Relative error, or absolute error when both magnitudes sit under [`ABS_FLOOR`].
pub fn gradient_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < ABS_FLOOR {
        (analytic - numeric).abs()
    } else {
        (analytic - numeric).abs() / scale
    }
}

pub fn max_gradient_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| gradient_error(a, n))
        .fold(0.0, f64::max)
}

fn locate(p: &ParameterSet, flat: usize) -> (usize, usize) {
    let mut rem = flat;
    for (k, s) in p.slices().iter().enumerate() {
        if rem < s.len() {
            return (k, rem);
        }
        rem -= s.len();
    }
    panic!("flat index {flat} out of range");
}

fn get(p: &ParameterSet, flat: usize) -> f64 {
    let (k, j) = locate(p, flat);
    p.slices()[k][j]
}

fn set(p: &mut ParameterSet, flat: usize, v: f64) {
    let (k, j) = locate(p, flat);
    p.slices_mut()[k][j] = v;
}
