//! Three-layer stack shared by actors and critics:
//! dense + ReLU → (LSTM | dense + ReLU) → dense.

use ndarray::Array2;
use rand::Rng;

use crate::nnet::{
    relu_backward_batch, relu_batch, BatchState, DenseParams, Layer, LstmCache, LstmParams, Matrix,
    ParameterSet,
};
use crate::{Error, Result};

const INPUT: usize = 0;
const CORE: usize = 1;
const HEAD: usize = 2;
const LAYER_NAMES: [&str; 3] = ["input", "core", "head"];

#[derive(Debug, Clone, PartialEq)]
pub struct StackNet {
    params: ParameterSet,
}

#[derive(Debug, Clone)]
enum CoreCache {
    Lstm(LstmCache),
    Dense { pre: Matrix },
}

#[derive(Debug, Clone)]
pub struct StackCache {
    input: Matrix,
    pre1: Matrix,
    act1: Matrix,
    core: CoreCache,
    act2: Matrix,
}

/// Per-step outputs and caches of a forward pass over a sequence.
#[derive(Debug, Clone)]
pub struct Unroll {
    pub outputs: Vec<Matrix>,
    pub caches: Vec<StackCache>,
    pub final_state: BatchState,
}

fn dense(p: &ParameterSet, i: usize) -> &DenseParams {
    match p.layer(i) {
        Layer::Dense(d) => d,
        Layer::Lstm(_) => unreachable!("layer {i} is dense by construction"),
    }
}

fn dense_mut(p: &mut ParameterSet, i: usize) -> &mut DenseParams {
    match p.layer_mut(i) {
        Layer::Dense(d) => d,
        Layer::Lstm(_) => unreachable!("layer {i} is dense by construction"),
    }
}

impl StackNet {
    pub fn new<R: Rng + ?Sized>(
        input: usize,
        hidden: usize,
        output: usize,
        recurrent: bool,
        rng: &mut R,
    ) -> Self {
        let core = if recurrent {
            Layer::Lstm(LstmParams::init(hidden, hidden, rng))
        } else {
            Layer::Dense(DenseParams::init(hidden, hidden, rng))
        };
        let layers = [
            Layer::Dense(DenseParams::init(input, hidden, rng)),
            core,
            Layer::Dense(DenseParams::init(hidden, output, rng)),
        ];
        Self::assemble(layers)
    }

    pub fn zeros(input: usize, hidden: usize, output: usize, recurrent: bool) -> Self {
        let core = if recurrent {
            Layer::Lstm(LstmParams::zeros(hidden, hidden))
        } else {
            Layer::Dense(DenseParams::zeros(hidden, hidden))
        };
        Self::assemble([
            Layer::Dense(DenseParams::zeros(input, hidden)),
            core,
            Layer::Dense(DenseParams::zeros(hidden, output)),
        ])
    }

    fn assemble(layers: [Layer; 3]) -> Self {
        let mut params = ParameterSet::new();
        for (name, layer) in LAYER_NAMES.into_iter().zip(layers) {
            params.push(name, layer).expect("fixed unique names");
        }
        Self { params }
    }

    /// Validates that `params` has the `input`/`core`/`head` layout with
    /// consistent widths.
    pub fn from_params(params: ParameterSet) -> Result<Self> {
        let names: Vec<&str> = params.iter().map(|(n, _)| n).collect();
        if names != LAYER_NAMES {
            return Err(Error::Incompatible(format!("expected layers {LAYER_NAMES:?}, found {names:?}")));
        }
        let (Layer::Dense(first), Layer::Dense(head)) = (params.layer(INPUT), params.layer(HEAD)) else {
            return Err(Error::Incompatible("input and head layers must be dense".into()));
        };
        let hidden = first.output_dim();
        let core_ok = match params.layer(CORE) {
            Layer::Lstm(l) => l.input_dim() == hidden && l.hidden_dim() == hidden,
            Layer::Dense(d) => d.input_dim() == hidden && d.output_dim() == hidden,
        };
        if !core_ok || head.input_dim() != hidden {
            return Err(Error::Incompatible(format!("inconsistent hidden widths around {hidden}")));
        }
        Ok(Self { params })
    }

    pub fn params(&self) -> &ParameterSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParameterSet {
        &mut self.params
    }

    pub fn into_params(self) -> ParameterSet {
        self.params
    }

    pub fn is_recurrent(&self) -> bool {
        matches!(self.params.layer(CORE), Layer::Lstm(_))
    }

    pub fn input_dim(&self) -> usize {
        dense(&self.params, INPUT).input_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        dense(&self.params, INPUT).output_dim()
    }

    pub fn output_dim(&self) -> usize {
        dense(&self.params, HEAD).output_dim()
    }

    pub fn input_layer(&self) -> &DenseParams {
        dense(&self.params, INPUT)
    }

    pub fn head_layer(&self) -> &DenseParams {
        dense(&self.params, HEAD)
    }

    pub fn head_layer_mut(&mut self) -> &mut DenseParams {
        dense_mut(&mut self.params, HEAD)
    }

    pub fn input_layer_mut(&mut self) -> &mut DenseParams {
        dense_mut(&mut self.params, INPUT)
    }

    pub fn zero_state(&self, batch: usize) -> BatchState {
        BatchState::zeros(batch, self.hidden_dim())
    }

    /// One timestep for a batch; non-recurrent stacks return `state` unchanged.
    pub fn step(&self, x: &Matrix, state: &BatchState) -> Result<(Matrix, BatchState, StackCache)> {
        let pre1 = self.input_layer().forward_batch(x)?;
        let act1 = relu_batch(&pre1);
        let (act2, next, core) = match self.params.layer(CORE) {
            Layer::Lstm(l) => {
                let (next, cache) = l.step_batch(&act1, state)?;
                (next.hidden.clone(), next, CoreCache::Lstm(cache))
            }
            Layer::Dense(d) => {
                let pre = d.forward_batch(&act1)?;
                (relu_batch(&pre), state.clone(), CoreCache::Dense { pre })
            }
        };
        let out = self.head_layer().forward_batch(&act2)?;
        Ok((
            out,
            next,
            StackCache {
                input: x.clone(),
                pre1,
                act1,
                core,
                act2,
            },
        ))
    }

    /// Backward through one step. `d_next` is the gradient arriving at the
    /// step's output state from later timesteps. Returns `(dx, d_prev)`.
    pub fn backward(
        &self,
        cache: &StackCache,
        d_out: &Matrix,
        d_next: &BatchState,
        mut grads: Option<&mut ParameterSet>,
    ) -> (Matrix, BatchState) {
        let d_act2 = self.head_layer().backward_batch(
            &cache.act2,
            d_out,
            grads.as_deref_mut().map(|g| dense_mut(g, HEAD)),
        );
        let (d_act1, d_prev) = match (self.params.layer(CORE), &cache.core) {
            (Layer::Lstm(l), CoreCache::Lstm(lc)) => {
                let dh = d_act2 + &d_next.hidden;
                let g = grads.as_deref_mut().map(|g| match g.layer_mut(CORE) {
                    Layer::Lstm(lg) => lg,
                    Layer::Dense(_) => unreachable!("gradient mirrors parameters"),
                });
                l.backward_batch(lc, &dh, &d_next.cell, g)
            }
            (Layer::Dense(d), CoreCache::Dense { pre }) => {
                let dz = relu_backward_batch(pre, &d_act2);
                let dx = d.backward_batch(&cache.act1, &dz, grads.as_deref_mut().map(|g| dense_mut(g, CORE)));
                (dx, d_next.clone())
            }
            _ => unreachable!("cache produced by this network"),
        };
        let dz1 = relu_backward_batch(&cache.pre1, &d_act1);
        let dx = self.input_layer().backward_batch(
            &cache.input,
            &dz1,
            grads.map(|g| dense_mut(g, INPUT)),
        );
        (dx, d_prev)
    }

    pub fn unroll(&self, inputs: &[Matrix], init: BatchState) -> Result<Unroll> {
        let mut state = init;
        let mut outputs = Vec::with_capacity(inputs.len());
        let mut caches = Vec::with_capacity(inputs.len());
        for x in inputs {
            let (out, next, cache) = self.step(x, &state)?;
            outputs.push(out);
            caches.push(cache);
            state = next;
        }
        Ok(Unroll {
            outputs,
            caches,
            final_state: state,
        })
    }

    /// Backpropagation through time over a whole unroll, starting from a
    /// zero gradient on the final state. Returns per-step input gradients.
    pub fn backward_through_time(
        &self,
        caches: &[StackCache],
        d_outputs: &[Matrix],
        mut grads: Option<&mut ParameterSet>,
    ) -> Vec<Matrix> {
        assert_eq!(caches.len(), d_outputs.len());
        let Some(last) = d_outputs.last() else {
            return Vec::new();
        };
        let mut d_state = self.zero_state(last.nrows());
        let mut dxs = vec![Array2::zeros((0, 0)); caches.len()];
        for t in (0..caches.len()).rev() {
            let (dx, d_prev) = self.backward(&caches[t], &d_outputs[t], &d_state, grads.as_deref_mut());
            dxs[t] = dx;
            d_state = d_prev;
        }
        dxs
    }
}
