//! Teacher-student distillation over edge features: point-wise retention
//! (mean L1 on negative pairs) and structure retention (squared Frobenius
//! distance between cosine-similarity matrices).

use ndarray::Array2;

use super::LossError;
use crate::matching::QueryPrediction;

/// Feature of one subject-object pair, flagged when its ground-truth
/// relation is background (member of the negative set).
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFeature {
    pub vector: Vec<f64>,
    pub pair: (usize, usize),
    pub is_negative: bool,
}

impl EdgeFeature {
    pub fn new(vector: Vec<f64>, pair: (usize, usize)) -> Self {
        Self {
            vector,
            pair,
            is_negative: false,
        }
    }

    pub fn negative(mut self) -> Self {
        self.is_negative = true;
        self
    }
}

/// Edge feature per pair: the two query features concatenated, each half
/// shifted by the global relation embedding when one is provided.
pub fn build_edge_features(
    queries: &[QueryPrediction],
    pairs: &[(usize, usize)],
    global_relation: Option<&[f64]>,
) -> Result<Vec<EdgeFeature>, LossError> {
    let mut edges = Vec::with_capacity(pairs.len());
    for &(subject, object) in pairs {
        if subject == object || subject >= queries.len() || object >= queries.len() {
            return Err(LossError::InvalidPair(subject, object));
        }
        let subject_feature = queries[subject]
            .feature
            .as_deref()
            .ok_or(LossError::MissingFeature(subject))?;
        let object_feature = queries[object]
            .feature
            .as_deref()
            .ok_or(LossError::MissingFeature(object))?;
        if subject_feature.len() != object_feature.len() {
            return Err(LossError::LengthMismatch {
                left: subject_feature.len(),
                right: object_feature.len(),
            });
        }
        if let Some(global) = global_relation {
            if global.len() != subject_feature.len() {
                return Err(LossError::LengthMismatch {
                    left: global.len(),
                    right: subject_feature.len(),
                });
            }
        }
        let mut vector = Vec::with_capacity(subject_feature.len() * 2);
        vector.extend_from_slice(subject_feature);
        vector.extend_from_slice(object_feature);
        if let Some(global) = global_relation {
            let half = global.len();
            for (k, g) in global.iter().enumerate() {
                vector[k] += g;
                vector[half + k] += g;
            }
        }
        edges.push(EdgeFeature::new(vector, (subject, object)));
    }
    Ok(edges)
}

/// Indices of the negative pairs, validating that the two lists align.
fn negative_indices(
    student: &[EdgeFeature],
    teacher: &[EdgeFeature],
) -> Result<Vec<usize>, LossError> {
    if student.len() != teacher.len() {
        return Err(LossError::LengthMismatch {
            left: student.len(),
            right: teacher.len(),
        });
    }
    Ok((0..student.len())
        .filter(|&i| student[i].is_negative && teacher[i].is_negative)
        .collect())
}

/// Visual-concept retention: mean L1 distance between student and teacher
/// edge features over the negative set.
pub fn vrd_loss(student: &[EdgeFeature], teacher: &[EdgeFeature]) -> Result<f64, LossError> {
    let negatives = negative_indices(student, teacher)?;
    if negatives.is_empty() {
        return Err(LossError::EmptyNegativeSet);
    }
    let mut total = 0.0;
    for &i in &negatives {
        let (s, t) = (&student[i].vector, &teacher[i].vector);
        if s.len() != t.len() {
            return Err(LossError::LengthMismatch {
                left: s.len(),
                right: t.len(),
            });
        }
        total += s.iter().zip(t).map(|(a, b)| (a - b).abs()).sum::<f64>();
    }
    Ok(total / negatives.len() as f64)
}

/// Gradient of [`vrd_loss`] in the student vectors, aligned with the full
/// student list (zero rows for non-negative pairs). Kinks at exact
/// equality contribute 0.
pub fn vrd_loss_grad(
    student: &[EdgeFeature],
    teacher: &[EdgeFeature],
) -> Result<Vec<Vec<f64>>, LossError> {
    let negatives = negative_indices(student, teacher)?;
    if negatives.is_empty() {
        return Err(LossError::EmptyNegativeSet);
    }
    let scale = 1.0 / negatives.len() as f64;
    let mut grads: Vec<Vec<f64>> = student.iter().map(|e| vec![0.0; e.vector.len()]).collect();
    for &i in &negatives {
        for (k, (a, b)) in student[i].vector.iter().zip(&teacher[i].vector).enumerate() {
            grads[i][k] = if a == b { 0.0 } else { (a - b).signum() * scale };
        }
    }
    Ok(grads)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Pairwise cosine-similarity matrix of the edge vectors; rows with zero
/// norm produce 0 entries.
pub fn cosine_sim_matrix(edges: &[EdgeFeature]) -> Result<Array2<f64>, LossError> {
    if edges.len() < 2 {
        return Err(LossError::TooFewEdges {
            need: 2,
            got: edges.len(),
        });
    }
    let n = edges.len();
    let norms: Vec<f64> = edges.iter().map(|e| norm(&e.vector)).collect();
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if norms[i] == 0.0 || norms[j] == 0.0 {
                continue;
            }
            let dot: f64 = edges[i]
                .vector
                .iter()
                .zip(&edges[j].vector)
                .map(|(a, b)| a * b)
                .sum();
            m[(i, j)] = dot / (norms[i] * norms[j]);
        }
    }
    Ok(m)
}

fn filtered(edges: &[EdgeFeature], indices: &[usize]) -> Vec<EdgeFeature> {
    indices.iter().map(|&i| edges[i].clone()).collect()
}

/// Relative-interaction retention: squared Frobenius distance between the
/// student and teacher cosine-structure matrices over the negative set,
/// scaled by `1/|N|^2`.
pub fn rrd_loss(student: &[EdgeFeature], teacher: &[EdgeFeature]) -> Result<f64, LossError> {
    let negatives = negative_indices(student, teacher)?;
    rrd_on(&filtered(student, &negatives), &filtered(teacher, &negatives))
}

/// [`rrd_loss`] computed over every pair regardless of negativity; the
/// restriction to the negative set is a configuration choice.
pub fn rrd_loss_unrestricted(
    student: &[EdgeFeature],
    teacher: &[EdgeFeature],
) -> Result<f64, LossError> {
    if student.len() != teacher.len() {
        return Err(LossError::LengthMismatch {
            left: student.len(),
            right: teacher.len(),
        });
    }
    rrd_on(student, teacher)
}

fn rrd_on(student: &[EdgeFeature], teacher: &[EdgeFeature]) -> Result<f64, LossError> {
    let student_m = cosine_sim_matrix(student)?;
    let teacher_m = cosine_sim_matrix(teacher)?;
    let n = student.len() as f64;
    let frob_sq: f64 = (&student_m - &teacher_m).iter().map(|d| d * d).sum();
    Ok(frob_sq / (n * n))
}

/// Gradient of [`rrd_loss`] in the student vectors, aligned with the full
/// student list (zero rows for non-negative pairs).
pub fn rrd_loss_grad(
    student: &[EdgeFeature],
    teacher: &[EdgeFeature],
) -> Result<Vec<Vec<f64>>, LossError> {
    let negatives = negative_indices(student, teacher)?;
    let student_sub = filtered(student, &negatives);
    let teacher_sub = filtered(teacher, &negatives);
    let student_m = cosine_sim_matrix(&student_sub)?;
    let teacher_m = cosine_sim_matrix(&teacher_sub)?;
    let n = negatives.len();
    let scale = 4.0 / (n as f64 * n as f64);

    let mut grads: Vec<Vec<f64>> = student.iter().map(|e| vec![0.0; e.vector.len()]).collect();
    let norms: Vec<f64> = student_sub.iter().map(|e| norm(&e.vector)).collect();
    for k in 0..n {
        if norms[k] == 0.0 {
            continue;
        }
        let dim = student_sub[k].vector.len();
        let mut grad_k = vec![0.0; dim];
        for j in 0..n {
            if j == k || norms[j] == 0.0 {
                continue;
            }
            let diff = student_m[(k, j)] - teacher_m[(k, j)];
            // d cos(e_k, e_j) / d e_k = (unit_j - cos * unit_k) / |e_k|
            for d in 0..dim {
                let unit_j = student_sub[j].vector[d] / norms[j];
                let unit_k = student_sub[k].vector[d] / norms[k];
                grad_k[d] += diff * (unit_j - student_m[(k, j)] * unit_k) / norms[k];
            }
        }
        for d in 0..dim {
            grads[negatives[k]][d] = scale * grad_k[d];
        }
    }
    Ok(grads)
}
