use ndarray::{Array1, Array2};

use super::{DenseParams, LstmParams};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(DenseParams),
    Lstm(LstmParams),
}

impl Layer {
    fn kind(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::Lstm(_) => "lstm",
        }
    }

    fn zeros_like(&self) -> Layer {
        match self {
            Layer::Dense(d) => Layer::Dense(DenseParams::zeros(d.input_dim(), d.output_dim())),
            Layer::Lstm(l) => Layer::Lstm(LstmParams::zeros(l.input_dim(), l.hidden_dim())),
        }
    }

    fn tensor_names(&self) -> &'static [&'static str] {
        match self {
            Layer::Dense(_) => &["weight", "bias"],
            Layer::Lstm(_) => &["input_weights", "recurrent_weights", "bias"],
        }
    }

    fn shapes(&self) -> Vec<Vec<usize>> {
        match self {
            Layer::Dense(d) => vec![d.weight.shape().to_vec(), d.bias.shape().to_vec()],
            Layer::Lstm(l) => vec![
                l.input_weights.shape().to_vec(),
                l.recurrent_weights.shape().to_vec(),
                l.bias.shape().to_vec(),
            ],
        }
    }

    fn slices(&self) -> Vec<&[f64]> {
        match self {
            Layer::Dense(d) => d.slices().to_vec(),
            Layer::Lstm(l) => l.slices().to_vec(),
        }
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Layer::Dense(d) => d.slices_mut().into_iter().collect(),
            Layer::Lstm(l) => l.slices_mut().into_iter().collect(),
        }
    }
}

/// One flattened tensor of a [`ParameterSet`], as written to disk.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

/// Ordered, uniquely named layers composing one network.
///
/// Gradients and optimizer moments use the same type, so every
/// elementwise operation can walk two sets in lockstep.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParameterSet {
    layers: Vec<(String, Layer)>,
}

impl ParameterSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, layer: Layer) -> Result<()> {
        let name = name.into();
        if name.contains('/') || name.is_empty() {
            return Err(Error::Config(format!("invalid layer name {name:?}")));
        }
        if self.layers.iter().any(|(n, _)| *n == name) {
            return Err(Error::Config(format!("duplicate layer name {name:?}")));
        }
        self.layers.push((name, layer));
        Ok(())
    }

    pub fn with(mut self, name: impl Into<String>, layer: Layer) -> Result<Self> {
        self.push(name, layer)?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Layer)> {
        self.layers.iter().map(|(n, l)| (n.as_str(), l))
    }

    pub fn layer(&self, index: usize) -> &Layer {
        &self.layers[index].1
    }

    pub fn layer_mut(&mut self, index: usize) -> &mut Layer {
        &mut self.layers[index].1
    }

    pub fn get(&self, name: &str) -> Option<&Layer> {
        self.layers.iter().find(|(n, _)| n == name).map(|(_, l)| l)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|(n, l)| (n.clone(), l.zeros_like()))
                .collect(),
        }
    }

    pub fn num_params(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    /// Same names, kinds and shapes in the same order.
    pub fn same_structure(&self, other: &Self) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|((na, la), (nb, lb))| na == nb && la.kind() == lb.kind() && la.shapes() == lb.shapes())
    }

    pub(crate) fn check_structure(&self, other: &Self, context: &'static str) -> Result<()> {
        if self.same_structure(other) {
            Ok(())
        } else {
            Err(Error::shape(context, self.describe(), other.describe()))
        }
    }

    fn describe(&self) -> String {
        self.layers
            .iter()
            .map(|(n, l)| format!("{n}:{}{:?}", l.kind(), l.shapes()))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|(_, l)| l.slices()).collect()
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers.iter_mut().flat_map(|(_, l)| l.slices_mut()).collect()
    }

    /// Visits every scalar of `self` paired with the matching scalar of `other`.
    pub(crate) fn zip_mut_with(&mut self, other: &Self, mut f: impl FnMut(&mut f64, f64)) {
        debug_assert!(self.same_structure(other));
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            for (d, &s) in dst.iter_mut().zip(src) {
                f(d, s);
            }
        }
    }

    pub fn fill(&mut self, value: f64) {
        for s in self.slices_mut() {
            s.fill(value);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_structure(other, "parameter comparison")?;
        Ok(self
            .slices()
            .iter()
            .zip(other.slices())
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max))
    }

    /// Flattened tensors named `layer/tensor`, in iteration order.
    pub fn named_tensors(&self) -> Vec<NamedTensor> {
        let mut out = Vec::new();
        for (name, layer) in &self.layers {
            for ((tname, shape), values) in layer
                .tensor_names()
                .iter()
                .zip(layer.shapes())
                .zip(layer.slices())
            {
                out.push(NamedTensor {
                    name: format!("{name}/{tname}"),
                    shape,
                    values: values.to_vec(),
                });
            }
        }
        out
    }

    /// Rebuilds a set from tensors produced by [`named_tensors`](Self::named_tensors).
    /// Layer kind is inferred from the tensor names.
    pub fn from_named_tensors(tensors: &[NamedTensor]) -> Result<Self> {
        let mut set = ParameterSet::new();
        let mut i = 0;
        while i < tensors.len() {
            let (layer_name, first) = split_name(&tensors[i].name)?;
            let layer = match first {
                "weight" => {
                    let bias = expect_tensor(tensors, i + 1, layer_name, "bias")?;
                    let weight = to_matrix(&tensors[i])?;
                    i += 2;
                    Layer::Dense(DenseParams::from_parts(weight, to_vector(bias)?)?)
                }
                "input_weights" => {
                    let rec = expect_tensor(tensors, i + 1, layer_name, "recurrent_weights")?;
                    let bias = expect_tensor(tensors, i + 2, layer_name, "bias")?;
                    let layer = LstmParams::from_parts(
                        to_matrix(&tensors[i])?,
                        to_matrix(rec)?,
                        to_vector(bias)?,
                    )?;
                    i += 3;
                    Layer::Lstm(layer)
                }
                other => return Err(Error::Format(format!("unexpected tensor {other:?} in layer {layer_name:?}"))),
            };
            set.push(layer_name, layer)?;
        }
        if !set.all_finite() {
            return Err(Error::NonFinite("loaded parameters".into()));
        }
        Ok(set)
    }
}

fn split_name(name: &str) -> Result<(&str, &str)> {
    name.rsplit_once('/')
        .ok_or_else(|| Error::Format(format!("tensor name {name:?} lacks a layer prefix")))
}

fn expect_tensor<'a>(
    tensors: &'a [NamedTensor],
    index: usize,
    layer: &str,
    expected: &str,
) -> Result<&'a NamedTensor> {
    let t = tensors
        .get(index)
        .ok_or_else(|| Error::Format(format!("layer {layer:?} is missing {expected:?}")))?;
    match split_name(&t.name)? {
        (l, n) if l == layer && n == expected => Ok(t),
        _ => Err(Error::Format(format!("expected {layer}/{expected}, found {}", t.name))),
    }
}

fn to_matrix(t: &NamedTensor) -> Result<Array2<f64>> {
    match t.shape[..] {
        [r, c] => Array2::from_shape_vec((r, c), t.values.clone())
            .map_err(|e| Error::Format(format!("{}: {e}", t.name))),
        _ => Err(Error::Format(format!("{} should be 2-D, has shape {:?}", t.name, t.shape))),
    }
}

fn to_vector(t: &NamedTensor) -> Result<Array1<f64>> {
    match t.shape[..] {
        [n] if n == t.values.len() => Ok(Array1::from(t.values.clone())),
        _ => Err(Error::Format(format!("{} should be 1-D, has shape {:?}", t.name, t.shape))),
    }
}

/// `target ← tau·source + (1 − tau)·target`, elementwise.
pub fn soft_update(target: &mut ParameterSet, source: &ParameterSet, tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::Config(format!("tau must lie in (0, 1], got {tau}")));
    }
    target.check_structure(source, "soft update")?;
    if tau == 1.0 {
        target.clone_from(source);
        return Ok(());
    }
    target.zip_mut_with(source, |t, s| *t = tau * s + (1.0 - tau) * *t);
    Ok(())
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;

    fn scalar_set(v: f64) -> ParameterSet {
        ParameterSet::new()
            .with(
                "only",
                Layer::Dense(DenseParams::from_parts(array![[v]], array![0.0]).unwrap()),
            )
            .unwrap()
    }

    fn scalar(p: &ParameterSet) -> f64 {
        p.slices()[0][0]
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut p = scalar_set(1.0);
        let dup = p.layer(0).clone();
        assert!(p.push("only", dup).is_err());
    }

    #[test]
    fn tau_one_copies_source() {
        let mut t = scalar_set(0.0);
        let s = scalar_set(3.25);
        soft_update(&mut t, &s, 1.0).unwrap();
        assert_eq!(t, s);
    }

    #[test]
    fn scalar_soft_update() {
        let mut t = scalar_set(0.0);
        soft_update(&mut t, &scalar_set(1.0), 0.01).unwrap();
        assert!((scalar(&t) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn repeated_updates_contract_geometrically() {
        let s = scalar_set(1.0);
        let mut t = scalar_set(-2.0);
        for _ in 0..37 {
            soft_update(&mut t, &s, 0.1).unwrap();
        }
        let expected = 0.9f64.powi(37) * 3.0;
        assert!(((1.0 - scalar(&t)) - expected).abs() < 1e-12);
    }

    #[test]
    fn mismatched_structure_rejected() {
        let mut t = scalar_set(0.0);
        let other = ParameterSet::new()
            .with("other", Layer::Dense(DenseParams::zeros(1, 1)))
            .unwrap();
        assert!(soft_update(&mut t, &other, 0.5).is_err());
        assert!(soft_update(&mut t, &scalar_set(1.0), 0.0).is_err());
    }

    #[test]
    fn named_tensors_rebuild_the_set() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(9);
        let p = ParameterSet::new()
            .with("input", Layer::Dense(DenseParams::init(3, 4, &mut rng)))
            .unwrap()
            .with("core", Layer::Lstm(LstmParams::init(4, 2, &mut rng)))
            .unwrap();
        let back = ParameterSet::from_named_tensors(&p.named_tensors()).unwrap();
        assert_eq!(back, p);
    }
}
