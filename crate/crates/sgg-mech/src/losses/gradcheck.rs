//! Central-difference gradient verification for every loss with an
//! analytic gradient. Sample points are drawn away from the known L1 and
//! min/max kinks so the comparison is meaningful.

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use super::{
    bce_relation_loss, bce_relation_loss_grad, focal_loss, focal_loss_grad, giou_loss,
    giou_loss_grad, l1_box_loss, l1_box_loss_grad, rrd_loss, rrd_loss_grad, vrd_loss,
    vrd_loss_grad, EdgeFeature,
};
use crate::geometry::BoundingBox;

/// Outcome of checking one loss at many seeded points.
#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub name: String,
    pub points: usize,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Central finite differences of a scalar function at `point`.
pub fn central_diff_grad(
    f: impl Fn(&[f64]) -> f64,
    point: &[f64],
    step: f64,
) -> Vec<f64> {
    let mut probe = point.to_vec();
    (0..point.len())
        .map(|i| {
            probe[i] = point[i] + step;
            let plus = f(&probe);
            probe[i] = point[i] - step;
            let minus = f(&probe);
            probe[i] = point[i];
            (plus - minus) / (2.0 * step)
        })
        .collect()
}

/// Worst relative disagreement between an analytic gradient and central
/// differences. The denominator is floored so that near-zero gradients
/// compare absolutely instead of blowing up.
pub fn check_gradient(
    f: impl Fn(&[f64]) -> f64,
    analytic: &[f64],
    point: &[f64],
    step: f64,
) -> f64 {
    let numeric = central_diff_grad(f, point, step);
    analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

const DEFAULT_STEP: f64 = 1e-5;

/// Run the whole gradient suite: a quadratic self-test of the checker,
/// then every loss with a closed-form gradient at `points` seeded random
/// points each.
pub fn run_gradient_suite(seed: u64, points: usize, tolerance: f64) -> Vec<GradCheckReport> {
    let mut reports = Vec::new();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    // The checker itself: an analytic parabola must agree to ~step^2.
    let mut quad_err: f64 = 0.0;
    for _ in 0..points {
        let point: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let analytic: Vec<f64> = point.iter().map(|v| 2.0 * v).collect();
        quad_err = quad_err.max(check_gradient(f, &analytic, &point, 1e-4));
    }
    reports.push(report("quadratic_self_test", points, quad_err, 1e-8));

    // giou: random overlapping-ish box pairs, corners kept apart
    let mut err: f64 = 0.0;
    for _ in 0..points {
        let gt = random_box(&mut rng);
        let pred = random_box(&mut rng);
        if at_giou_kink(&pred, &gt) {
            continue;
        }
        let point = pred.coords().to_vec();
        let f = |x: &[f64]| giou_loss(&BoundingBox::new(x[0], x[1], x[2], x[3]), &gt);
        let analytic = giou_loss_grad(&pred, &gt);
        err = err.max(check_gradient(f, &analytic, &point, DEFAULT_STEP));
    }
    reports.push(report("giou_loss", points, err, tolerance));

    // focal: probability away from the endpoints
    let mut err: f64 = 0.0;
    for _ in 0..points {
        let p = rng.random_range(0.05..0.95);
        let alpha = rng.random_range(0.1..1.0);
        let gamma = [0.0, 1.0, 2.0, 3.0][rng.random_range(0..4)];
        let f = |x: &[f64]| focal_loss(x[0], alpha, gamma).unwrap();
        let analytic = [focal_loss_grad(p, alpha, gamma).unwrap()];
        err = err.max(check_gradient(f, &analytic, &[p], DEFAULT_STEP));
    }
    reports.push(report("focal_loss", points, err, tolerance));

    // bce: 2x3 matrices with probabilities away from 0 and 1
    let mut err: f64 = 0.0;
    for _ in 0..points {
        let pred = Array2::from_shape_fn((2, 3), |_| rng.random_range(0.05..0.95));
        let gt = Array2::from_shape_fn((2, 3), |_| {
            if rng.random_bool(0.5) {
                1.0
            } else {
                0.0
            }
        });
        let point: Vec<f64> = pred.iter().copied().collect();
        let f = |x: &[f64]| {
            let m = Array2::from_shape_vec((2, 3), x.to_vec()).unwrap();
            bce_relation_loss(&m, &gt).unwrap()
        };
        let analytic: Vec<f64> = bce_relation_loss_grad(&pred, &gt)
            .unwrap()
            .iter()
            .copied()
            .collect();
        err = err.max(check_gradient(f, &analytic, &point, DEFAULT_STEP));
    }
    reports.push(report("bce_relation_loss", points, err, tolerance));

    // l1 box: coordinate differences bounded away from the kink at zero
    let mut err: f64 = 0.0;
    for _ in 0..points {
        let gt = vec![random_box(&mut rng), random_box(&mut rng)];
        let pred: Vec<BoundingBox> = gt
            .iter()
            .map(|b| {
                let mut c = b.coords();
                for v in c.iter_mut() {
                    *v += offset_away_from_zero(&mut rng);
                }
                BoundingBox::new(c[0].min(c[2]), c[1].min(c[3]), c[0].max(c[2]), c[1].max(c[3]))
            })
            .collect();
        let point: Vec<f64> = pred.iter().flat_map(|b| b.coords()).collect();
        let f = |x: &[f64]| {
            let boxes: Vec<BoundingBox> = x
                .chunks(4)
                .map(|c| BoundingBox {
                    x1: c[0],
                    y1: c[1],
                    x2: c[2],
                    y2: c[3],
                    score: 1.0,
                    category_id: None,
                })
                .collect();
            l1_box_loss(&boxes, &gt).unwrap()
        };
        let analytic: Vec<f64> = l1_box_loss_grad(&pred, &gt)
            .unwrap()
            .into_iter()
            .flatten()
            .collect();
        err = err.max(check_gradient(f, &analytic, &point, DEFAULT_STEP));
    }
    reports.push(report("l1_box_loss", points, err, tolerance));

    // vrd: component differences bounded away from zero
    let mut err: f64 = 0.0;
    for _ in 0..points {
        let dim = 6;
        let teacher = random_edges(&mut rng, 4, dim);
        let student: Vec<EdgeFeature> = teacher
            .iter()
            .map(|e| {
                let v: Vec<f64> = e
                    .vector
                    .iter()
                    .map(|x| x + offset_away_from_zero(&mut rng))
                    .collect();
                EdgeFeature::new(v, e.pair).negative()
            })
            .collect();
        let point: Vec<f64> = student.iter().flat_map(|e| e.vector.clone()).collect();
        let f = |x: &[f64]| {
            let s = edges_from_flat(x, dim);
            vrd_loss(&s, &teacher).unwrap()
        };
        let analytic: Vec<f64> = vrd_loss_grad(&student, &teacher)
            .unwrap()
            .into_iter()
            .flatten()
            .collect();
        err = err.max(check_gradient(f, &analytic, &point, DEFAULT_STEP));
    }
    reports.push(report("vrd_loss", points, err, tolerance));

    // rrd: random 4-edge sets, norms bounded away from zero
    let mut err: f64 = 0.0;
    for _ in 0..points {
        let dim = 6;
        let teacher = random_edges(&mut rng, 4, dim);
        let student = random_edges(&mut rng, 4, dim);
        let point: Vec<f64> = student.iter().flat_map(|e| e.vector.clone()).collect();
        let f = |x: &[f64]| {
            let s = edges_from_flat(x, dim);
            rrd_loss(&s, &teacher).unwrap()
        };
        let analytic: Vec<f64> = rrd_loss_grad(&student, &teacher)
            .unwrap()
            .into_iter()
            .flatten()
            .collect();
        err = err.max(check_gradient(f, &analytic, &point, DEFAULT_STEP));
    }
    reports.push(report("rrd_loss", points, err, tolerance));

    reports
}

fn report(name: &str, points: usize, max_rel_error: f64, tolerance: f64) -> GradCheckReport {
    GradCheckReport {
        name: name.to_string(),
        points,
        max_rel_error,
        tolerance,
        passed: max_rel_error < tolerance,
    }
}

fn random_box(rng: &mut ChaCha12Rng) -> BoundingBox {
    let x1 = rng.random_range(0.0..0.6);
    let y1 = rng.random_range(0.0..0.6);
    let w = rng.random_range(0.1..0.4);
    let h = rng.random_range(0.1..0.4);
    BoundingBox::new(x1, y1, x1 + w, y1 + h)
}

/// Corner coincidences and touching edges are the kinks of the GIoU
/// surface; central differences straddle them, so sampled pairs that come
/// within a step of one are skipped.
fn at_giou_kink(a: &BoundingBox, b: &BoundingBox) -> bool {
    let margin = 10.0 * DEFAULT_STEP;
    let close = |x: f64, y: f64| (x - y).abs() < margin;
    close(a.x1, b.x1)
        || close(a.x2, b.x2)
        || close(a.y1, b.y1)
        || close(a.y2, b.y2)
        || close(a.x1.max(b.x1), a.x2.min(b.x2))
        || close(a.y1.max(b.y1), a.y2.min(b.y2))
}

fn offset_away_from_zero(rng: &mut ChaCha12Rng) -> f64 {
    let magnitude = rng.random_range(0.05..0.5);
    if rng.random_bool(0.5) {
        magnitude
    } else {
        -magnitude
    }
}

fn random_edges(rng: &mut ChaCha12Rng, count: usize, dim: usize) -> Vec<EdgeFeature> {
    (0..count)
        .map(|i| {
            let v: Vec<f64> = (0..dim)
                .map(|_| {
                    let x: f64 = rng.sample(rand_distr::StandardNormal);
                    x + offset_away_from_zero(rng)
                })
                .collect();
            EdgeFeature::new(v, (i, i + 1)).negative()
        })
        .collect()
}

fn edges_from_flat(flat: &[f64], dim: usize) -> Vec<EdgeFeature> {
    flat.chunks(dim)
        .enumerate()
        .map(|(i, c)| EdgeFeature::new(c.to_vec(), (i, i + 1)).negative())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_self_test_is_tight() {
        let reports = run_gradient_suite(1, 20, 1e-4);
        let quad = &reports[0];
        assert_eq!(quad.name, "quadratic_self_test");
        assert!(quad.passed, "max rel error {}", quad.max_rel_error);
        assert!(quad.max_rel_error < 1e-8);
    }

    #[test]
    fn focal_gradient_at_reference_point() {
        let f = |x: &[f64]| focal_loss(x[0], 1.0, 2.0).unwrap();
        let analytic = [focal_loss_grad(0.7, 1.0, 2.0).unwrap()];
        let err = check_gradient(f, &analytic, &[0.7], 1e-5);
        assert!(err < 1e-4, "relative error {err}");
    }

    #[test]
    fn full_suite_passes() {
        let reports = run_gradient_suite(42, 100, 1e-4);
        for r in &reports {
            assert!(
                r.passed,
                "{} failed: max rel error {} vs tolerance {}",
                r.name, r.max_rel_error, r.tolerance
            );
        }
        assert_eq!(reports.len(), 7);
    }
}
