use super::ParameterSet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment mirrors of one [`ParameterSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: ParameterSet,
    pub second_moment: ParameterSet,
    pub step_count: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(params: &ParameterSet) -> Self {
        Self::with_config(params, AdamConfig::default())
    }

    pub fn with_config(params: &ParameterSet, config: AdamConfig) -> Self {
        Self {
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
            step_count: 0,
            config,
        }
    }
}

/// One bias-corrected Adam step, `θ ← θ − lr·m̂/(√v̂ + ε)`.
pub fn adam_update(
    params: &mut ParameterSet,
    grads: &ParameterSet,
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
    }
    params.check_structure(grads, "adam gradients")?;
    params.check_structure(&state.first_moment, "adam moments")?;

    let AdamConfig { beta1, beta2, epsilon } = state.config;
    state.step_count += 1;
    let t = state.step_count as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);

    let mut p = params.slices_mut();
    let g = grads.slices();
    let mut m = state.first_moment.slices_mut();
    let mut v = state.second_moment.slices_mut();
    for k in 0..p.len() {
        for j in 0..p[k].len() {
            let gj = g[k][j];
            let mj = beta1 * m[k][j] + (1.0 - beta1) * gj;
            let vj = beta2 * v[k][j] + (1.0 - beta2) * gj * gj;
            m[k][j] = mj;
            v[k][j] = vj;
            p[k][j] -= lr * (mj / c1) / ((vj / c2).sqrt() + epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;
    use crate::nnet::{DenseParams, Layer};

    fn scalar(v: f64) -> ParameterSet {
        ParameterSet::new()
            .with("w", Layer::Dense(DenseParams::from_parts(array![[v]], array![0.0]).unwrap()))
            .unwrap()
    }

    #[test]
    fn zero_gradient_is_identity() {
        let mut p = scalar(0.7);
        let before = p.clone();
        let mut st = AdamState::new(&p);
        for _ in 0..5 {
            adam_update(&mut p, &scalar(0.0), &mut st, 0.01).unwrap();
        }
        assert_eq!(p, before);
        assert_eq!(st.step_count, 5);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = scalar(0.0);
        let mut st = AdamState::new(&p);
        adam_update(&mut p, &scalar(1.0), &mut st, 0.01).unwrap();
        let w = p.slices()[0][0];
        assert!((w + 0.01 / (1.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn bias_correction_depends_on_step_count() {
        // g = (1, 0): hand-applied Adam gives steps 0.01 and
        // 0.01 · (0.09/0.19) / (√(0.000999/0.001999) + 1e-8).
        let mut p = scalar(0.0);
        let mut st = AdamState::new(&p);
        adam_update(&mut p, &scalar(1.0), &mut st, 0.01).unwrap();
        let after1 = p.slices()[0][0];
        adam_update(&mut p, &scalar(0.0), &mut st, 0.01).unwrap();
        let step2 = after1 - p.slices()[0][0];
        let expected = 0.01 * (0.09 / 0.19) / ((0.000999f64 / 0.001999).sqrt() + 1e-8);
        assert!((step2 - expected).abs() < 1e-15, "{step2} vs {expected}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut p = scalar(0.0);
        let mut st = AdamState::new(&p);
        assert!(adam_update(&mut p, &scalar(1.0), &mut st, 0.0).is_err());
        let wrong = ParameterSet::new()
            .with("w", Layer::Dense(DenseParams::zeros(2, 1)))
            .unwrap();
        assert!(adam_update(&mut p, &wrong, &mut st, 0.01).is_err());
    }
}
