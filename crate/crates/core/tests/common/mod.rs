//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use riskmod::losses::{self, Label, Logits, LossKind, LossParams};
use riskmod::model::Mlp;
use riskmod::objective::{self, ObjectiveConfig, TaggedSample};

/// Mann-Whitney statistic by enumerating every (group 0, group 1) pair.
pub fn pairwise_auc(g0: &[f64], g1: &[f64]) -> f64 {
    let mut wins = 0.0;
    for &b in g1 {
        for &a in g0 {
            if b > a {
                wins += 1.0;
            } else if b == a {
                wins += 0.5;
            }
        }
    }
    wins / (g0.len() * g1.len()) as f64
}

/// Reference PCE of the labeled-class probability, written from the
/// tangent-line construction.
pub fn pce_reference(s: f64, tau: f64) -> f64 {
    if s <= tau {
        let value = -tau.ln();
        let slope = -1.0 / tau;
        value + slope * (s - tau)
    } else {
        -s.ln()
    }
}

/// `|a - b| / max(|a|, |b|, floor)`: relative error that degrades to an
/// absolute one for gradients near zero, where finite differences are
/// dominated by rounding.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Central differences of one loss with respect to both logits.
pub fn fd_logit_grad(kind: LossKind, z: Logits, y: Label, params: &LossParams, h: f64) -> (f64, f64) {
    let f = |zn: f64, zp: f64| {
        let p = losses::softmax2(Logits::new(zn, zp).unwrap()).unwrap();
        losses::loss_value(kind, p, y, params)
    };
    let d_neg = (f(z.z_neg + h, z.z_pos) - f(z.z_neg - h, z.z_pos)) / (2.0 * h);
    let d_pos = (f(z.z_neg, z.z_pos + h) - f(z.z_neg, z.z_pos - h)) / (2.0 * h);
    (d_neg, d_pos)
}

/// Mean objective evaluated through the forward pass only.
pub fn forward_loss(m: &Mlp, batch: &[TaggedSample], cfg: &ObjectiveConfig) -> f64 {
    let xs: Vec<&[f64]> = batch.iter().map(|t| t.features.as_slice()).collect();
    let probs = m.forward_batch(&xs).unwrap();
    objective::batch_loss(batch, &probs, cfg).unwrap()
}

/// Central differences of [`forward_loss`] for every parameter, in
/// [`Mlp::values`] order.
pub fn fd_param_grad(m: &Mlp, batch: &[TaggedSample], cfg: &ObjectiveConfig, h: f64) -> Vec<f64> {
    let n = m.num_params();
    (0..n)
        .map(|i| {
            let mut plus = m.clone();
            *plus.values_mut().nth(i).unwrap() += h;
            let mut minus = m.clone();
            *minus.values_mut().nth(i).unwrap() -= h;
            (forward_loss(&plus, batch, cfg) - forward_loss(&minus, batch, cfg)) / (2.0 * h)
        })
        .collect()
}

/// Smallest |pre-activation| over the hidden units for any input, computed
/// directly from the weights. Finite differences across a rectifier kink
/// are meaningless, so probes closer than the step are discarded.
pub fn min_hidden_margin(m: &Mlp, xs: &[&[f64]]) -> f64 {
    let mut min = f64::INFINITY;
    for x in xs {
        let mut a = x.to_vec();
        for layer in &m.layers[..m.layers.len() - 1] {
            let z: Vec<f64> = (0..layer.outputs)
                .map(|o| {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    layer.bias[o] + row.iter().zip(&a).map(|(w, v)| w * v).sum::<f64>()
                })
                .collect();
            min = z.iter().fold(min, |acc, v| acc.min(v.abs()));
            a = z.into_iter().map(|v| v.max(0.0)).collect();
        }
    }
    min
}
