//! LSTM cell with gate order `[input, forget, candidate, output]`.
//!
//! ```text
//! z  = x·W_ihᵀ + h·W_hhᵀ + b          (batch, 4H)
//! i  = σ(z[0..H])    f = σ(z[H..2H])
//! g  = tanh(z[2H..3H])  o = σ(z[3H..4H])
//! c' = f∘c + i∘g
//! h' = o∘tanh(c')
//! ```

use ndarray::{s, Array1, Array2, Axis, Zip};
use rand::Rng;

use super::{init::uniform_fan_in, Matrix};
use crate::{Error, Result};

/// Added to the forget-gate bias at initialization.
pub const FORGET_BIAS_OFFSET: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    /// `(4H, in)`
    pub input_weights: Array2<f64>,
    /// `(4H, H)`
    pub recurrent_weights: Array2<f64>,
    /// `4H`
    pub bias: Array1<f64>,
}

pub type LstmGrads = LstmParams;

/// Hidden and cell vectors for a single sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentState {
    pub hidden: Vec<f64>,
    pub cell: Vec<f64>,
}

impl RecurrentState {
    pub fn zeros(width: usize) -> Self {
        Self {
            hidden: vec![0.0; width],
            cell: vec![0.0; width],
        }
    }

    pub fn width(&self) -> usize {
        self.hidden.len()
    }

    pub fn is_zero(&self) -> bool {
        self.hidden.iter().chain(&self.cell).all(|&v| v == 0.0)
    }
}

/// Hidden and cell matrices for a batch of sequences, `(batch, H)` each.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchState {
    pub hidden: Matrix,
    pub cell: Matrix,
}

impl BatchState {
    pub fn zeros(batch: usize, width: usize) -> Self {
        Self {
            hidden: Array2::zeros((batch, width)),
            cell: Array2::zeros((batch, width)),
        }
    }

    pub fn from_rows<'a>(states: impl ExactSizeIterator<Item = &'a RecurrentState>, width: usize) -> Self {
        let mut out = Self::zeros(states.len(), width);
        for (r, st) in states.enumerate() {
            out.hidden.row_mut(r).assign(&ndarray::aview1(&st.hidden));
            out.cell.row_mut(r).assign(&ndarray::aview1(&st.cell));
        }
        out
    }

    pub fn from_single(state: &RecurrentState) -> Self {
        Self::from_rows(std::iter::once(state), state.width())
    }

    pub fn row(&self, r: usize) -> RecurrentState {
        RecurrentState {
            hidden: self.hidden.row(r).to_vec(),
            cell: self.cell.row(r).to_vec(),
        }
    }

    pub fn batch(&self) -> usize {
        self.hidden.nrows()
    }

    pub fn width(&self) -> usize {
        self.hidden.ncols()
    }
}

/// Everything the backward pass needs from one forward step.
#[derive(Debug, Clone)]
pub struct LstmCache {
    input: Matrix,
    prev_hidden: Matrix,
    prev_cell: Matrix,
    input_gate: Matrix,
    forget_gate: Matrix,
    candidate: Matrix,
    output_gate: Matrix,
    tanh_cell: Matrix,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl LstmParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            input_weights: Array2::zeros((4 * hidden, input)),
            recurrent_weights: Array2::zeros((4 * hidden, hidden)),
            bias: Array1::zeros(4 * hidden),
        }
    }

    pub fn init<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let mut bias = Array1::zeros(4 * hidden);
        bias.slice_mut(s![hidden..2 * hidden]).fill(FORGET_BIAS_OFFSET);
        Self {
            input_weights: uniform_fan_in((4 * hidden, input), input, rng),
            recurrent_weights: uniform_fan_in((4 * hidden, hidden), hidden, rng),
            bias,
        }
    }

    pub fn from_parts(
        input_weights: Array2<f64>,
        recurrent_weights: Array2<f64>,
        bias: Array1<f64>,
    ) -> Result<Self> {
        let gates = input_weights.nrows();
        if !gates.is_multiple_of(4) {
            return Err(Error::shape("lstm gate rows", "multiple of 4", gates));
        }
        let hidden = gates / 4;
        if recurrent_weights.dim() != (gates, hidden) {
            return Err(Error::shape(
                "lstm recurrent weights",
                format!("{gates}x{hidden}"),
                format!("{:?}", recurrent_weights.dim()),
            ));
        }
        if bias.len() != gates {
            return Err(Error::shape("lstm bias", gates, bias.len()));
        }
        Ok(Self {
            input_weights,
            recurrent_weights,
            bias,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_weights.ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.recurrent_weights.ncols()
    }

    pub fn step_batch(&self, x: &Matrix, prev: &BatchState) -> Result<(BatchState, LstmCache)> {
        let hsz = self.hidden_dim();
        if x.ncols() != self.input_dim() {
            return Err(Error::shape("lstm input", self.input_dim(), x.ncols()));
        }
        if prev.width() != hsz || prev.batch() != x.nrows() {
            return Err(Error::shape(
                "lstm state",
                format!("{}x{hsz}", x.nrows()),
                format!("{}x{}", prev.batch(), prev.width()),
            ));
        }
        let mut z = x.dot(&self.input_weights.t());
        z += &prev.hidden.dot(&self.recurrent_weights.t());
        z += &self.bias;

        let input_gate = z.slice(s![.., 0..hsz]).mapv(sigmoid);
        let forget_gate = z.slice(s![.., hsz..2 * hsz]).mapv(sigmoid);
        let candidate = z.slice(s![.., 2 * hsz..3 * hsz]).mapv(f64::tanh);
        let output_gate = z.slice(s![.., 3 * hsz..4 * hsz]).mapv(sigmoid);

        let mut cell = &forget_gate * &prev.cell;
        Zip::from(&mut cell)
            .and(&input_gate)
            .and(&candidate)
            .for_each(|c, &i, &g| *c += i * g);
        let tanh_cell = cell.mapv(f64::tanh);
        let hidden = &output_gate * &tanh_cell;

        let cache = LstmCache {
            input: x.clone(),
            prev_hidden: prev.hidden.clone(),
            prev_cell: prev.cell.clone(),
            input_gate,
            forget_gate,
            candidate,
            output_gate,
            tanh_cell,
        };
        Ok((BatchState { hidden, cell }, cache))
    }

    /// Backward through one step.
    ///
    /// `d_hidden` and `d_cell` are the total gradients arriving at the
    /// step's outputs (from the layer above plus the next timestep).
    /// Returns `(dx, d_prev)`; parameter gradients accumulate into `grad`.
    pub fn backward_batch(
        &self,
        cache: &LstmCache,
        d_hidden: &Matrix,
        d_cell: &Matrix,
        grad: Option<&mut LstmGrads>,
    ) -> (Matrix, BatchState) {
        let hsz = self.hidden_dim();
        let batch = d_hidden.nrows();
        let mut dz = Array2::<f64>::zeros((batch, 4 * hsz));
        let mut d_prev_cell = Array2::<f64>::zeros((batch, hsz));

        for r in 0..batch {
            let mut dz_row = dz.row_mut(r);
            for k in 0..hsz {
                let i = cache.input_gate[[r, k]];
                let f = cache.forget_gate[[r, k]];
                let g = cache.candidate[[r, k]];
                let o = cache.output_gate[[r, k]];
                let tc = cache.tanh_cell[[r, k]];
                let dh = d_hidden[[r, k]];

                let dc = d_cell[[r, k]] + dh * o * (1.0 - tc * tc);
                let d_o = dh * tc;
                let d_i = dc * g;
                let d_g = dc * i;
                let d_f = dc * cache.prev_cell[[r, k]];
                d_prev_cell[[r, k]] = dc * f;

                dz_row[k] = d_i * i * (1.0 - i);
                dz_row[hsz + k] = d_f * f * (1.0 - f);
                dz_row[2 * hsz + k] = d_g * (1.0 - g * g);
                dz_row[3 * hsz + k] = d_o * o * (1.0 - o);
            }
        }

        if let Some(g) = grad {
            g.input_weights += &dz.t().dot(&cache.input);
            g.recurrent_weights += &dz.t().dot(&cache.prev_hidden);
            g.bias += &dz.sum_axis(Axis(0));
        }
        let dx = dz.dot(&self.input_weights);
        let d_prev_hidden = dz.dot(&self.recurrent_weights);
        (
            dx,
            BatchState {
                hidden: d_prev_hidden,
                cell: d_prev_cell,
            },
        )
    }

    /// Single-sequence forward step.
    pub fn step(&self, x: &[f64], prev: &RecurrentState) -> Result<(RecurrentState, LstmCache)> {
        let xm = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("1 x n");
        let (next, cache) = self.step_batch(&xm, &BatchState::from_single(prev))?;
        Ok((next.row(0), cache))
    }

    /// Single-sequence backward step; returns `(dx, d_prev)`.
    pub fn step_backward(
        &self,
        cache: &LstmCache,
        d_next: &RecurrentState,
        grad: &mut LstmGrads,
    ) -> (Vec<f64>, RecurrentState) {
        let dn = BatchState::from_single(d_next);
        let (dx, dp) = self.backward_batch(cache, &dn.hidden, &dn.cell, Some(grad));
        (dx.row(0).to_vec(), dp.row(0))
    }

    pub(crate) fn slices(&self) -> [&[f64]; 3] {
        [
            self.input_weights.as_slice().expect("standard layout"),
            self.recurrent_weights.as_slice().expect("standard layout"),
            self.bias.as_slice().expect("standard layout"),
        ]
    }

    pub(crate) fn slices_mut(&mut self) -> [&mut [f64]; 3] {
        [
            self.input_weights.as_slice_mut().expect("standard layout"),
            self.recurrent_weights.as_slice_mut().expect("standard layout"),
            self.bias.as_slice_mut().expect("standard layout"),
        ]
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn zero_everything_stays_zero() {
        let p = LstmParams::zeros(2, 3);
        let (next, _) = p.step(&[0.0, 0.0], &RecurrentState::zeros(3)).unwrap();
        assert!(next.is_zero());
    }

    #[test]
    fn zero_weights_halve_the_cell() {
        let p = LstmParams::zeros(1, 1);
        let prev = RecurrentState {
            hidden: vec![0.0],
            cell: vec![1.0],
        };
        let (next, _) = p.step(&[0.0], &prev).unwrap();
        assert!((next.cell[0] - 0.5).abs() < 1e-15);
        assert!((next.hidden[0] - 0.5 * 0.5f64.tanh()).abs() < 1e-15);
        assert!((next.hidden[0] - 0.23105).abs() < 1e-5);
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = LstmParams::init(3, 4, &mut rng);
        let prev = RecurrentState {
            hidden: vec![0.1, -0.2, 0.3, 0.0],
            cell: vec![0.5, 0.5, -1.0, 2.0],
        };
        let (_, cache) = p.step(&[1.0, -1.0, 0.5], &prev).unwrap();
        let mut g = LstmParams::zeros(3, 4);
        let (dx, dprev) = p.step_backward(&cache, &RecurrentState::zeros(4), &mut g);
        assert!(dx.iter().all(|&v| v == 0.0));
        assert!(dprev.is_zero());
        assert!(g.slices().iter().all(|s| s.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn initialization_offsets_forget_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = LstmParams::init(5, 3, &mut rng);
        assert_eq!(p.bias.to_vec(), vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let bound = 1.0 / 5f64.sqrt();
        assert!(p.input_weights.iter().all(|w| w.abs() <= bound));
    }

    #[test]
    fn mismatched_state_is_rejected() {
        let p = LstmParams::zeros(2, 3);
        assert!(p.step(&[0.0, 0.0], &RecurrentState::zeros(2)).is_err());
        assert!(p.step(&[0.0], &RecurrentState::zeros(3)).is_err());
    }
}
