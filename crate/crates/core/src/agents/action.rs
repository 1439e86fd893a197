//! Discrete action selection and the straight-through Gumbel-Softmax
//! relaxation used to pass critic gradients into actor logits.
//!
//! The actor emits 7 logits per agent: 5 physical then 2 verbal. Each head
//! is an independent categorical.

use ndarray::{s, Array2, ArrayView1, ArrayViewMut1};
use rand::Rng;

use crate::env::{AgentAction, Physical, Verbal, ACTION_DIM, PHYSICAL_ACTIONS};
use crate::nnet::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectMode {
    /// Gumbel-perturbed argmax.
    Explore { temperature: f64 },
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionSample {
    pub action: AgentAction,
    /// `[physical one-hot | verbal one-hot]`.
    pub one_hot: [f64; ACTION_DIM],
}

/// Index of the largest value; ties go to the lowest index.
fn argmax(v: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, x) in v.into_iter().enumerate() {
        if x > best.1 {
            best = (i, x);
        }
    }
    best.0
}

/// Standard Gumbel sample `−ln(−ln u)`.
pub fn sample_gumbel<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    -(-u.ln()).ln()
}

fn check_logits(physical_logits: &[f64], verbal_logits: &[f64]) -> Result<()> {
    if physical_logits.len() != PHYSICAL_ACTIONS || verbal_logits.len() != ACTION_DIM - PHYSICAL_ACTIONS {
        return Err(Error::shape(
            "action logits",
            "5 + 2",
            format!("{} + {}", physical_logits.len(), verbal_logits.len()),
        ));
    }
    if physical_logits.iter().chain(verbal_logits).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("action logits".into()));
    }
    Ok(())
}

fn sample(p: usize, v: usize) -> Result<ActionSample> {
    let action = AgentAction::new(Physical::from_index(p)?, Verbal::from_index(v)?);
    Ok(ActionSample {
        action,
        one_hot: action.one_hot(),
    })
}

/// Argmax of each head.
pub fn greedy_action(physical_logits: &[f64], verbal_logits: &[f64]) -> Result<ActionSample> {
    check_logits(physical_logits, verbal_logits)?;
    sample(
        argmax(physical_logits.iter().copied()),
        argmax(verbal_logits.iter().copied()),
    )
}

pub fn select_action<R: Rng + ?Sized>(
    physical_logits: &[f64],
    verbal_logits: &[f64],
    mode: SelectMode,
    rng: &mut R,
) -> Result<ActionSample> {
    match mode {
        SelectMode::Greedy => greedy_action(physical_logits, verbal_logits),
        SelectMode::Explore { temperature } => {
            check_logits(physical_logits, verbal_logits)?;
            if !(temperature > 0.0) {
                return Err(Error::Config(format!("temperature must be positive, got {temperature}")));
            }
            // Scaling by 1/temperature cannot change the argmax.
            let p = argmax(physical_logits.iter().map(|l| l + sample_gumbel(rng)));
            let v = argmax(verbal_logits.iter().map(|l| l + sample_gumbel(rng)));
            sample(p, v)
        }
    }
}

/// `(batch, 7)` matrix of Gumbel noise.
pub fn gumbel_noise<R: Rng + ?Sized>(batch: usize, rng: &mut R) -> Matrix {
    Array2::from_shape_simple_fn((batch, ACTION_DIM), || sample_gumbel(rng))
}

/// Forward values (`hard`) and the softmax relaxation kept for gradients.
#[derive(Debug, Clone)]
pub struct Relaxed {
    pub hard: Matrix,
    pub soft: Matrix,
    pub temperature: f64,
}

fn heads() -> [std::ops::Range<usize>; 2] {
    [0..PHYSICAL_ACTIONS, PHYSICAL_ACTIONS..ACTION_DIM]
}

fn softmax_into(z: ArrayView1<f64>, mut out: ArrayViewMut1<f64>) {
    let m = z.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut sum = 0.0;
    for (o, &v) in out.iter_mut().zip(z) {
        *o = (v - m).exp();
        sum += *o;
    }
    out.mapv_inplace(|v| v / sum);
}

/// Straight-through Gumbel-Softmax on `(batch, 7)` logits with matching
/// noise: forward is the one-hot argmax of `logits + noise`, backward
/// differentiates `softmax((logits + noise) / temperature)`.
pub fn straight_through(logits: &Matrix, noise: &Matrix, temperature: f64) -> Relaxed {
    let z = (logits + noise) / temperature;
    let mut soft = Array2::zeros(z.raw_dim());
    let mut hard = Array2::zeros(z.raw_dim());
    for r in 0..z.nrows() {
        for h in heads() {
            let zr = z.slice(s![r, h.clone()]);
            softmax_into(zr, soft.slice_mut(s![r, h.clone()]));
            hard[[r, h.start + argmax(zr.iter().copied())]] = 1.0;
        }
    }
    Relaxed { hard, soft, temperature }
}

/// Gradient with respect to the logits given the gradient with respect
/// to the (hard) action values.
pub fn relaxed_backward(relaxed: &Relaxed, d_action: &Matrix) -> Matrix {
    let mut d_logits = Array2::zeros(d_action.raw_dim());
    for r in 0..d_action.nrows() {
        for h in heads() {
            let p = relaxed.soft.slice(s![r, h.clone()]);
            let d = d_action.slice(s![r, h.clone()]);
            let dot: f64 = p.iter().zip(d).map(|(a, b)| a * b).sum();
            for k in h.clone() {
                let pk = relaxed.soft[[r, k]];
                d_logits[[r, k]] = pk * (d_action[[r, k]] - dot) / relaxed.temperature;
            }
        }
    }
    d_logits
}
