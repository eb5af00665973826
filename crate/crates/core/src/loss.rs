//! Joint training objective: pointwise binary cross entropy over every
//! instance plus a per-granularity contrastive term, with exact analytic
//! gradients with respect to the projection weights.

use alloc::vec::Vec;
use core::fmt;

use crate::evidence::Granularity;
use crate::features::FeatureVector;
use crate::scoring::sigmoid;

#[derive(Debug, Clone, PartialEq)]
pub enum LossError {
    /// Probability outside (0,1) or temperature not positive.
    DomainError { what: &'static str, value: f64 },
    GroupTooSmall { size: usize },
    DimensionMismatch { expected: usize, got: usize },
    /// Batch does not consist of one group per granularity.
    BadBatch { reason: &'static str },
}

impl fmt::Display for LossError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossError::DomainError { what, value } => write!(f, "{what} out of domain: {value}"),
            LossError::GroupTooSmall { size } => write!(f, "group of {size}, need at least 2"),
            LossError::DimensionMismatch { expected, got } => {
                write!(f, "dimension {got}, expected {expected}")
            }
            LossError::BadBatch { reason } => write!(f, "malformed batch: {reason}"),
        }
    }
}

impl core::error::Error for LossError {}

/// `-[y ln s + (1-y) ln(1-s)]` for a retrieval score `s` in (0,1).
pub fn bce_loss(s: f64, y: bool) -> Result<f64, LossError> {
    if !(s > 0.0 && s < 1.0) {
        return Err(LossError::DomainError { what: "bce score", value: s });
    }
    Ok(if y { -libm::log(s) } else { -libm::log(1.0 - s) })
}

/// `h . W + h' . W`.
pub fn similarity(a: &FeatureVector, b: &FeatureVector, weights: &[f64]) -> f64 {
    a.dot(weights) + b.dot(weights)
}

/// One contrastive group: an anchor, its noise-masked duplicate (the
/// positive), and same-granularity negatives. The softmax denominator D is
/// the positive plus all negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ClGroup {
    pub anchor: FeatureVector,
    pub positive: FeatureVector,
    pub negatives: Vec<FeatureVector>,
}

impl ClGroup {
    fn check_dims(&self, dim: usize) -> Result<(), LossError> {
        let bad = |got: usize| LossError::DimensionMismatch { expected: dim, got };
        if self.anchor.dim() != dim {
            return Err(bad(self.anchor.dim()));
        }
        if self.positive.dim() != dim {
            return Err(bad(self.positive.dim()));
        }
        for n in &self.negatives {
            if n.dim() != dim {
                return Err(bad(n.dim()));
            }
        }
        Ok(())
    }
}

/// Softmax cross entropy pulling the anchor toward its duplicate against
/// the in-group negatives:
/// `-ln( exp(sim(h,h+)/tau) / sum_{h' in D} exp(sim(h,h')/tau) )`.
///
/// Non-negative because the positive sits inside the denominator.
pub fn cl_loss(group: &ClGroup, weights: &[f64], tau: f64) -> Result<f64, LossError> {
    let (loss, _) = cl_loss_and_gradient(group, weights, tau)?;
    Ok(loss)
}

/// As [`cl_loss`], also returning the exact gradient with respect to the
/// weights: `( sum_{h' in D} p_{h'} h'  -  h+ ) / tau` with `p` the softmax
/// over D. The anchor's own projection cancels out of both softmax and
/// gradient under this additive similarity.
pub fn cl_loss_and_gradient(
    group: &ClGroup,
    weights: &[f64],
    tau: f64,
) -> Result<(f64, Vec<f64>), LossError> {
    if !(tau > 0.0) {
        return Err(LossError::DomainError { what: "temperature", value: tau });
    }
    group.check_dims(weights.len())?;

    let anchor_z = group.anchor.dot(weights);
    let members: Vec<&FeatureVector> =
        core::iter::once(&group.positive).chain(group.negatives.iter()).collect();
    let sims: Vec<f64> =
        members.iter().map(|m| (anchor_z + m.dot(weights)) / tau).collect();

    // Log-sum-exp with max subtraction.
    let max = sims.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = sims.iter().map(|s| libm::exp(s - max)).collect();
    let denom: f64 = exps.iter().sum();
    let loss = -(sims[0] - max - libm::log(denom));

    let mut grad = alloc::vec![0.0; weights.len()];
    for (m, e) in members.iter().zip(&exps) {
        let p = e / denom;
        for (g, v) in grad.iter_mut().zip(&m.values) {
            *g += p * v;
        }
    }
    for (g, v) in grad.iter_mut().zip(&group.positive.values) {
        *g -= v;
    }
    for g in grad.iter_mut() {
        *g /= tau;
    }
    Ok((loss, grad))
}

/// One labeled training group: the anchor is the granularity's positive
/// instance (label 1), negatives carry label 0, and the noisy duplicate
/// participates only in the contrastive term.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainGroup {
    pub granularity: Granularity,
    pub cl: ClGroup,
}

/// Four granularity groups forming one training step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainBatch {
    pub groups: Vec<TrainGroup>,
}

impl TrainBatch {
    /// Checks the four-group shape: one group per granularity, each with
    /// `group_size` scored instances (anchor plus negatives).
    pub fn validate(&self, group_size: usize) -> Result<(), LossError> {
        if group_size < 2 {
            return Err(LossError::GroupTooSmall { size: group_size });
        }
        if self.groups.len() != 4 {
            return Err(LossError::BadBatch { reason: "expected four granularity groups" });
        }
        for g in Granularity::ALL {
            if !self.groups.iter().any(|tg| tg.granularity == g) {
                return Err(LossError::BadBatch { reason: "granularity group missing" });
            }
        }
        for tg in &self.groups {
            if 1 + tg.cl.negatives.len() != group_size {
                return Err(LossError::BadBatch { reason: "group size mismatch" });
            }
        }
        Ok(())
    }
}

/// Total objective over a batch, `Loss = Loss_bce + Loss_cl`, with its
/// exact analytic gradient. BCE runs over every instance (anchor labeled
/// 1, negatives 0); the contrastive term runs once per group.
pub fn total_loss_and_gradient(
    batch: &TrainBatch,
    weights: &[f64],
    tau: f64,
) -> Result<(f64, Vec<f64>), LossError> {
    let mut loss = 0.0;
    let mut grad = alloc::vec![0.0; weights.len()];

    let mut bce_term = |grad: &mut [f64], h: &FeatureVector, y: bool| -> Result<f64, LossError> {
        if h.dim() != weights.len() {
            return Err(LossError::DimensionMismatch { expected: weights.len(), got: h.dim() });
        }
        let s = sigmoid(h.dot(weights));
        let l = bce_loss(s, y)?;
        // d/dW of BCE through the sigmoid: (s - y) h.
        let residual = s - if y { 1.0 } else { 0.0 };
        for (g, v) in grad.iter_mut().zip(&h.values) {
            *g += residual * v;
        }
        Ok(l)
    };

    for group in &batch.groups {
        loss += bce_term(&mut grad, &group.cl.anchor, true)?;
        for neg in &group.cl.negatives {
            loss += bce_term(&mut grad, neg, false)?;
        }
    }
    for group in &batch.groups {
        let (cl, cl_grad) = cl_loss_and_gradient(&group.cl, weights, tau)?;
        loss += cl;
        for (g, d) in grad.iter_mut().zip(&cl_grad) {
            *g += d;
        }
    }
    Ok((loss, grad))
}
