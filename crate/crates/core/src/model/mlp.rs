use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{softmax2, Logits, Probabilities};
use crate::objective::{self, ObjectiveConfig, TaggedSample};

/// Fully connected layer; `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.bias.iter().enumerate().map(|(o, b)| {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
        }));
    }
}

/// Multi-layer perceptron with rectifier hidden units and two output logits.
///
/// The same type doubles as the container for gradients and optimizer
/// moments, which are shaped exactly like the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases. `sizes` lists every layer width
    /// from the input dimension to the final 2 logits.
    pub fn init(sizes: &[usize], seed: u64) -> Result<Self> {
        check_sizes(sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weights = (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-bound..=bound))
                    .collect();
                Layer {
                    inputs: fan_in,
                    outputs: fan_out,
                    weights,
                    bias: vec![0.0; fan_out],
                }
            })
            .collect();
        Ok(Mlp { layers })
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        check_sizes(sizes)?;
        Ok(Mlp {
            layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        })
    }

    pub fn zeros_like(&self) -> Self {
        Mlp {
            layers: self.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect(),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_dim()];
        sizes.extend(self.layers.iter().map(|l| l.outputs));
        sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// All parameters in declared order: per layer, weights then bias.
    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias))
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn same_shape(&self, other: &Mlp) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.inputs == b.inputs && a.outputs == b.outputs)
    }

    pub fn logits(&self, x: &[f64]) -> Result<Logits> {
        if x.len() != self.input_dim() {
            return Err(Error::InvalidInput(format!(
                "feature vector has length {}, model expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.affine(&cur, &mut next);
            if i < last {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Logits::new(cur[0], cur[1])
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Logits, Probabilities)> {
        let z = self.logits(x)?;
        Ok((z, softmax2(z)?))
    }

    pub fn forward_batch<X: AsRef<[f64]>>(&self, xs: &[X]) -> Result<Vec<Probabilities>> {
        xs.iter().map(|x| self.forward(x.as_ref()).map(|(_, p)| p)).collect()
    }

    /// Mean objective over `batch` and its exact gradient.
    pub fn backward(&self, batch: &[TaggedSample], cfg: &ObjectiveConfig) -> Result<(f64, Mlp)> {
        if batch.is_empty() {
            return Err(Error::InvalidInput("batch is empty".into()));
        }
        let scale = 1.0 / batch.len() as f64;
        let mut grads = self.zeros_like();
        let mut loss = 0.0;
        let last = self.layers.len() - 1;

        for t in batch {
            if t.features.len() != self.input_dim() {
                return Err(Error::InvalidInput(format!(
                    "feature vector has length {}, model expects {}",
                    t.features.len(),
                    self.input_dim()
                )));
            }
            // inputs[l] feeds layer l; pre[l] is its affine output
            let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
            let mut pre: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
            let mut cur = t.features.clone();
            for (l, layer) in self.layers.iter().enumerate() {
                let mut z = Vec::with_capacity(layer.outputs);
                layer.affine(&cur, &mut z);
                let next = if l < last {
                    z.iter().map(|v| v.max(0.0)).collect()
                } else {
                    Vec::new()
                };
                inputs.push(std::mem::replace(&mut cur, next));
                pre.push(z);
            }
            let z = Logits::new(pre[last][0], pre[last][1])?;
            loss += objective::sample_loss(t, softmax2(z)?, cfg);
            let g = objective::sample_grad(t, z, cfg)?;

            let mut delta = vec![g.d_z_neg * scale, g.d_z_pos * scale];
            for l in (0..=last).rev() {
                let layer = &self.layers[l];
                let gl = &mut grads.layers[l];
                let input = &inputs[l];
                for (o, d) in delta.iter().enumerate() {
                    if *d == 0.0 {
                        continue;
                    }
                    gl.bias[o] += d;
                    let row = &mut gl.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    row.iter_mut().zip(input).for_each(|(w, a)| *w += d * a);
                }
                if l == 0 {
                    break;
                }
                let mut prev = vec![0.0; layer.inputs];
                for (o, d) in delta.iter().enumerate() {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    prev.iter_mut().zip(row).for_each(|(p, w)| *p += d * w);
                }
                prev.iter_mut().zip(&pre[l - 1]).for_each(|(p, z)| {
                    if *z <= 0.0 {
                        *p = 0.0;
                    }
                });
                delta = prev;
            }
        }
        Ok((loss * scale, grads))
    }
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::Config(format!(
            "layer sizes need an input and an output width, got {sizes:?}"
        )));
    }
    if sizes.last() != Some(&2) {
        return Err(Error::Config(format!(
            "the last layer must have 2 outputs, got {sizes:?}"
        )));
    }
    if sizes.contains(&0) {
        return Err(Error::Config(format!("layer widths must be positive, got {sizes:?}")));
    }
    Ok(())
}
