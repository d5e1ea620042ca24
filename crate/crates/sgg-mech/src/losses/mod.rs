//! The training-objective stack: L1 box regression, GIoU, focal entity
//! classification, BCE relation classification, the two distillation
//! losses, and the combined objective. Every loss ships a closed-form
//! gradient so the finite-difference checker has something to check
//! without an autodiff dependency.

mod distill;
mod gradcheck;

pub use distill::{
    build_edge_features, cosine_sim_matrix, rrd_loss, rrd_loss_grad, rrd_loss_unrestricted,
    vrd_loss, vrd_loss_grad, EdgeFeature,
};
pub use gradcheck::{central_diff_grad, check_gradient, run_gradient_suite, GradCheckReport};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{giou_terms, BoundingBox};
use crate::matching::MatchWeights;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("probability {0} outside the valid range")]
    InvalidProbability(f64),
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("query {0} has no feature vector")]
    MissingFeature(usize),
    #[error("edge pair ({0}, {1}) is invalid")]
    InvalidPair(usize, usize),
    #[error("negative set is empty")]
    EmptyNegativeSet,
    #[error("need at least {need} edges, got {got}")]
    TooFewEdges { need: usize, got: usize },
    #[error("loss component {0} is not finite")]
    NonFiniteComponent(&'static str),
}

/// Weights of the combined objective and its focal/matching parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// Weight on the visual-concept retention term.
    pub beta1: f64,
    /// Weight on the relative-interaction retention term.
    pub beta2: f64,
    pub alpha_focal: f64,
    pub gamma_focal: f64,
    #[serde(skip)]
    pub matching: MatchWeights,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            beta1: 0.1,
            beta2: 0.5,
            alpha_focal: 0.25,
            gamma_focal: 2.0,
            matching: MatchWeights::default(),
        }
    }
}

/// The six loss terms feeding [`total_loss`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossComponents {
    pub regression: f64,
    pub giou: f64,
    pub entity: f64,
    pub relation: f64,
    pub vrd: f64,
    pub rrd: f64,
}

/// Mean L1 distance between matched box pairs (4 coordinates each),
/// coordinates normalized to [0, 1].
pub fn l1_box_loss(pred: &[BoundingBox], gt: &[BoundingBox]) -> Result<f64, LossError> {
    if pred.len() != gt.len() {
        return Err(LossError::LengthMismatch {
            left: pred.len(),
            right: gt.len(),
        });
    }
    if pred.is_empty() {
        return Err(LossError::EmptyInput);
    }
    let total: f64 = pred
        .iter()
        .zip(gt)
        .map(|(p, g)| {
            p.coords()
                .iter()
                .zip(g.coords())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
        })
        .sum();
    Ok(total / pred.len() as f64)
}

/// Gradient of [`l1_box_loss`] with respect to predicted coordinates.
/// Sign-based; the kink at exact coordinate equality returns 0.
pub fn l1_box_loss_grad(
    pred: &[BoundingBox],
    gt: &[BoundingBox],
) -> Result<Vec<[f64; 4]>, LossError> {
    if pred.len() != gt.len() {
        return Err(LossError::LengthMismatch {
            left: pred.len(),
            right: gt.len(),
        });
    }
    if pred.is_empty() {
        return Err(LossError::EmptyInput);
    }
    let n = pred.len() as f64;
    Ok(pred
        .iter()
        .zip(gt)
        .map(|(p, g)| {
            let mut grad = [0.0; 4];
            for (k, (a, b)) in p.coords().iter().zip(g.coords()).enumerate() {
                grad[k] = (a - b).signum() / n;
                if *a == b {
                    grad[k] = 0.0;
                }
            }
            grad
        })
        .collect())
}

/// GIoU loss `1 - inter/union + (enclosing - union)/enclosing`, bounded in
/// [0, 2]; both 0/0 ratios are defined as 0 for degenerate boxes.
pub fn giou_loss(pred: &BoundingBox, gt: &BoundingBox) -> f64 {
    let (inter, union, enclosing) = giou_terms(pred, gt);
    let overlap = if union == 0.0 { 0.0 } else { inter / union };
    let penalty = if enclosing == 0.0 {
        0.0
    } else {
        (enclosing - union) / enclosing
    };
    1.0 - overlap + penalty
}

/// Gradient of [`giou_loss`] with respect to the predicted corners.
/// Piecewise-smooth; evaluated away from the kinks where box edges
/// coincide.
pub fn giou_loss_grad(pred: &BoundingBox, gt: &BoundingBox) -> [f64; 4] {
    let (a, b) = (pred, gt);
    let iw = a.x2.min(b.x2) - a.x1.max(b.x1);
    let ih = a.y2.min(b.y2) - a.y1.max(b.y1);
    let overlapping = iw > 0.0 && ih > 0.0;
    let inter = if overlapping { iw * ih } else { 0.0 };
    let union = a.area() + b.area() - inter;
    let cw = a.x2.max(b.x2) - a.x1.min(b.x1);
    let ch = a.y2.max(b.y2) - a.y1.min(b.y1);
    let enclosing = cw * ch;
    if union == 0.0 || enclosing == 0.0 {
        return [0.0; 4];
    }

    // partials of the intersection
    let di = if overlapping {
        [
            if a.x1 > b.x1 { -ih } else { 0.0 },
            if a.y1 > b.y1 { -iw } else { 0.0 },
            if a.x2 < b.x2 { ih } else { 0.0 },
            if a.y2 < b.y2 { iw } else { 0.0 },
        ]
    } else {
        [0.0; 4]
    };
    // partials of area(pred)
    let da = [-a.height(), -a.width(), a.height(), a.width()];
    // partials of the enclosing area
    let dc = [
        if a.x1 < b.x1 { -ch } else { 0.0 },
        if a.y1 < b.y1 { -cw } else { 0.0 },
        if a.x2 > b.x2 { ch } else { 0.0 },
        if a.y2 > b.y2 { cw } else { 0.0 },
    ];

    let mut grad = [0.0; 4];
    for k in 0..4 {
        let du = da[k] - di[k];
        // L = 1 - I/U + 1 - U/C, so dL = -(I'U - IU')/U^2 - (U'C - UC')/C^2
        grad[k] = -(di[k] * union - inter * du) / (union * union)
            - (du * enclosing - union * dc[k]) / (enclosing * enclosing);
    }
    grad
}

/// Focal loss `-alpha * (1 - p)^gamma * ln(p)` of the true-class
/// probability `p`.
pub fn focal_loss(true_class_prob: f64, alpha: f64, gamma: f64) -> Result<f64, LossError> {
    if !(true_class_prob > 0.0 && true_class_prob <= 1.0) {
        return Err(LossError::InvalidProbability(true_class_prob));
    }
    Ok(-alpha * (1.0 - true_class_prob).powf(gamma) * true_class_prob.ln())
}

/// Derivative of [`focal_loss`] in the true-class probability.
pub fn focal_loss_grad(true_class_prob: f64, alpha: f64, gamma: f64) -> Result<f64, LossError> {
    if !(true_class_prob > 0.0 && true_class_prob <= 1.0) {
        return Err(LossError::InvalidProbability(true_class_prob));
    }
    let p = true_class_prob;
    let focus = if gamma == 0.0 {
        0.0
    } else {
        alpha * gamma * (1.0 - p).powf(gamma - 1.0) * p.ln()
    };
    Ok(focus - alpha * (1.0 - p).powf(gamma) / p)
}

/// Binary cross-entropy between predicted relation probabilities and
/// (possibly soft) targets, averaged over all entries.
pub fn bce_relation_loss(pred: &Array2<f64>, gt: &Array2<f64>) -> Result<f64, LossError> {
    check_bce_inputs(pred, gt)?;
    let n = pred.len() as f64;
    let total: f64 = pred
        .iter()
        .zip(gt.iter())
        .map(|(&p, &y)| y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        .sum();
    Ok(-total / n)
}

/// Gradient of [`bce_relation_loss`] with respect to the predictions.
pub fn bce_relation_loss_grad(
    pred: &Array2<f64>,
    gt: &Array2<f64>,
) -> Result<Array2<f64>, LossError> {
    check_bce_inputs(pred, gt)?;
    let n = pred.len() as f64;
    let mut grad = Array2::zeros(pred.dim());
    for ((idx, &p), &y) in pred.indexed_iter().zip(gt.iter()) {
        grad[idx] = -(y / p - (1.0 - y) / (1.0 - p)) / n;
    }
    Ok(grad)
}

fn check_bce_inputs(pred: &Array2<f64>, gt: &Array2<f64>) -> Result<(), LossError> {
    if pred.dim() != gt.dim() {
        return Err(LossError::ShapeMismatch {
            left: pred.dim(),
            right: gt.dim(),
        });
    }
    if pred.is_empty() {
        return Err(LossError::EmptyInput);
    }
    for &p in pred.iter() {
        if !(p > 0.0 && p < 1.0) {
            return Err(LossError::InvalidProbability(p));
        }
    }
    for &y in gt.iter() {
        if !(0.0..=1.0).contains(&y) {
            return Err(LossError::InvalidProbability(y));
        }
    }
    Ok(())
}

/// The combined objective: the four supervised terms at unit weight plus
/// `beta1 * vrd + beta2 * rrd`.
pub fn total_loss(components: &LossComponents, weights: &LossWeights) -> Result<f64, LossError> {
    let named = [
        ("regression", components.regression),
        ("giou", components.giou),
        ("entity", components.entity),
        ("relation", components.relation),
        ("vrd", components.vrd),
        ("rrd", components.rrd),
    ];
    for (name, v) in named {
        if !v.is_finite() {
            return Err(LossError::NonFiniteComponent(name));
        }
    }
    Ok(components.regression
        + components.giou
        + components.entity
        + components.relation
        + weights.beta1 * components.vrd
        + weights.beta2 * components.rrd)
}
