//! Per-sample losses on a two-class softmax output, with analytic gradients
//! with respect to the two logits.
//!
//! Every loss here is a function of the probability `s` the model assigns to
//! the labeled class, except [`uc_loss`], which looks at both probabilities and
//! is minimized by the uniform prediction.
//!
//! | loss | value | `dL/ds` |
//! |------|-------|---------|
//! | CE   | `-ln s` | `-1/s` |
//! | PCE  | `-(s - τ)/τ - ln τ` for `s <= τ`, else `-ln s` | `-1/τ`, else `-1/s` |
//! | GCE  | `(1 - s^q)/q` | `-s^(q-1)` |
//! | UC   | `-½ ln p_neg - ½ ln p_pos` | n/a |
//!
//! Probabilities are clamped to `[PROB_FLOOR, 1]` before any logarithm.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower clamp applied to a probability before taking its logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// Binary class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn from_bit(bit: u8) -> Result<Self> {
        match bit {
            0 => Ok(Label::Negative),
            1 => Ok(Label::Positive),
            other => Err(Error::InvalidInput(format!("binary label must be 0 or 1, got {other}"))),
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Label::Negative => 0,
            Label::Positive => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }
}

/// Pre-softmax scores for the negative and positive class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Logits {
    pub z_neg: f64,
    pub z_pos: f64,
}

impl Logits {
    pub fn new(z_neg: f64, z_pos: f64) -> Result<Self> {
        if !(z_neg.is_finite() && z_pos.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite logits ({z_neg}, {z_pos})")));
        }
        Ok(Logits { z_neg, z_pos })
    }
}

/// A normalized two-class probability vector `(p_neg, p_pos)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probabilities {
    p_neg: f64,
    p_pos: f64,
}

impl Probabilities {
    /// Builds the pair from the positive-class probability.
    pub fn from_positive(p_pos: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_pos) {
            return Err(Error::InvalidInput(format!("probability {p_pos} outside [0, 1]")));
        }
        Ok(Probabilities {
            p_neg: 1.0 - p_pos,
            p_pos,
        })
    }

    pub fn p_neg(&self) -> f64 {
        self.p_neg
    }

    pub fn p_pos(&self) -> f64 {
        self.p_pos
    }

    /// Probability assigned to `label`.
    pub fn of(&self, label: Label) -> f64 {
        match label {
            Label::Negative => self.p_neg,
            Label::Positive => self.p_pos,
        }
    }
}

/// The PCE tangent point, restricted to the open interval `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Tau(f64);

impl Tau {
    pub fn new(tau: f64) -> Result<Self> {
        if tau > 0.0 && tau < 1.0 {
            Ok(Tau(tau))
        } else {
            Err(Error::Config(format!("tau must lie in (0, 1), got {tau}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for Tau {
    fn default() -> Self {
        Tau(0.3)
    }
}

/// Exponent of the generalized cross entropy, restricted to `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct GceQ(f64);

impl GceQ {
    pub fn new(q: f64) -> Result<Self> {
        if q > 0.0 && q <= 1.0 {
            Ok(GceQ(q))
        } else {
            Err(Error::Config(format!("gce exponent q must lie in (0, 1], got {q}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for GceQ {
    fn default() -> Self {
        GceQ(0.7)
    }
}

/// Gradient of a loss with respect to `(z_neg, z_pos)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossGrad {
    pub d_z_neg: f64,
    pub d_z_pos: f64,
}

impl LossGrad {
    /// Gradient of a softmax-pair loss given its derivative with respect to
    /// the logit of `label`.
    fn antisymmetric(label: Label, d_label: f64) -> Self {
        match label {
            Label::Positive => LossGrad {
                d_z_neg: -d_label,
                d_z_pos: d_label,
            },
            Label::Negative => LossGrad {
                d_z_neg: d_label,
                d_z_pos: -d_label,
            },
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        LossGrad {
            d_z_neg: self.d_z_neg * factor,
            d_z_pos: self.d_z_pos * factor,
        }
    }
}

/// Which per-sample loss to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LossKind {
    Ce,
    Pce,
    Gce,
    Uc,
}

impl LossKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::Ce => "CE",
            LossKind::Pce => "PCE",
            LossKind::Gce => "GCE",
            LossKind::Uc => "UC",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "CE" => Ok(LossKind::Ce),
            "PCE" => Ok(LossKind::Pce),
            "GCE" => Ok(LossKind::Gce),
            "UC" => Ok(LossKind::Uc),
            _ => Err(Error::Config(format!(
                "unknown loss kind `{s}` (expected CE, PCE, GCE or UC)"
            ))),
        }
    }
}

/// Hyperparameters shared by the parameterized losses.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossParams {
    pub tau: Tau,
    pub q: GceQ,
}

/// Two-logit softmax, stable for logits of any finite magnitude.
pub fn softmax2(z: Logits) -> Result<Probabilities> {
    let z = Logits::new(z.z_neg, z.z_pos)?;
    let d = z.z_pos - z.z_neg;
    let e = (-d.abs()).exp();
    let small = e / (1.0 + e);
    let large = 1.0 / (1.0 + e);
    let (p_neg, p_pos) = if d >= 0.0 { (small, large) } else { (large, small) };
    Ok(Probabilities { p_neg, p_pos })
}

fn clamped_ln(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0).ln()
}

/// Cross entropy of the labeled class.
pub fn ce_loss(p: Probabilities, y: Label) -> f64 {
    ce_of(p.of(y))
}

fn ce_of(s: f64) -> f64 {
    // 0 - ln 1 is +0, where plain negation would give -0
    0.0 - clamped_ln(s)
}

/// Partially Huberised cross entropy: the CE curve above `tau`, its tangent
/// line at `tau` below it.
pub fn pce_loss(p: Probabilities, y: Label, tau: Tau) -> f64 {
    pce_of(p.of(y), tau)
}

fn pce_of(s: f64, tau: Tau) -> f64 {
    let t = tau.get();
    if s <= t {
        (t - s) / t - t.ln()
    } else {
        ce_of(s)
    }
}

/// Generalized cross entropy `(1 - s^q) / q`.
pub fn gce_loss(p: Probabilities, y: Label, q: GceQ) -> f64 {
    let q = q.get();
    (1.0 - p.of(y).powf(q)) / q
}

/// Uniformity loss; minimized with value `ln 2` at `p_neg = p_pos = 0.5`.
pub fn uc_loss(p: Probabilities) -> f64 {
    -0.5 * clamped_ln(p.p_neg) - 0.5 * clamped_ln(p.p_pos)
}

/// Value of the loss selected by `kind`. `y` is ignored for [`LossKind::Uc`].
pub fn loss_value(kind: LossKind, p: Probabilities, y: Label, params: &LossParams) -> f64 {
    match kind {
        LossKind::Ce => ce_loss(p, y),
        LossKind::Pce => pce_loss(p, y, params.tau),
        LossKind::Gce => gce_loss(p, y, params.q),
        LossKind::Uc => uc_loss(p),
    }
}

/// Analytic gradient of `loss_value(kind, softmax2(z), y)` with respect to `z`.
///
/// With `s` the labeled-class probability, `ds/dz_label = s(1 - s)`, so the
/// chain rule is applied in closed form to avoid forming `1/s` for small `s`.
/// The PCE derivative at `s == tau` uses the linear branch.
pub fn loss_grad(kind: LossKind, z: Logits, y: Label, params: &LossParams) -> Result<LossGrad> {
    let p = softmax2(z)?;
    let s = p.of(y);
    let other = p.of(y.flipped());
    let grad = match kind {
        LossKind::Ce => LossGrad::antisymmetric(y, -other),
        LossKind::Pce => {
            let t = params.tau.get();
            let d = if s <= t { -s * other / t } else { -other };
            LossGrad::antisymmetric(y, d)
        }
        LossKind::Gce => LossGrad::antisymmetric(y, -s.powf(params.q.get()) * other),
        LossKind::Uc => {
            let d_pos = p.p_pos - 0.5;
            LossGrad {
                d_z_neg: -d_pos,
                d_z_pos: d_pos,
            }
        }
    };
    Ok(grad)
}

/// `dL/ds` for the losses that depend only on the labeled-class probability.
/// Returns `None` for [`LossKind::Uc`].
pub fn dloss_ds(kind: LossKind, s: f64, params: &LossParams) -> Option<f64> {
    let s_c = s.clamp(PROB_FLOOR, 1.0);
    match kind {
        LossKind::Ce => Some(-1.0 / s_c),
        LossKind::Pce => {
            let t = params.tau.get();
            Some(if s <= t { -1.0 / t } else { -1.0 / s_c })
        }
        LossKind::Gce => Some(-s_c.powf(params.q.get() - 1.0)),
        LossKind::Uc => None,
    }
}
