//! Bipartite assignment of predicted queries to ground-truth objects:
//! a pair cost combining class probability, L1 box distance, and GIoU,
//! an exact Hungarian solver, and an exhaustive oracle for cross-checks.

use ndarray::Array2;
use thiserror::Error;

use crate::geometry::BoundingBox;
use crate::losses::giou_loss;

#[derive(Debug, Error)]
pub enum MatchingError {
    #[error("class id {class_id} outside probability vector of length {len}")]
    UnknownClass { class_id: usize, len: usize },
    #[error("cost matrix contains a non-finite entry at ({row}, {col})")]
    NonFiniteCost { row: usize, col: usize },
    #[error("exhaustive enumeration limited to min dimension {limit}, got {got}")]
    TooLarge { limit: usize, got: usize },
}

/// One decoded query: a box plus class probabilities over the object
/// vocabulary, optionally carrying the feature row reused for edges.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryPrediction {
    pub bbox: BoundingBox,
    pub class_probs: Vec<f64>,
    pub feature: Option<Vec<f64>>,
}

/// A ground-truth object to match against.
#[derive(Debug, Clone, PartialEq)]
pub struct GtObject {
    pub class_id: usize,
    pub bbox: BoundingBox,
}

/// Weights of the three matching-cost terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchWeights {
    pub class_weight: f64,
    pub l1_weight: f64,
    pub giou_weight: f64,
}

impl Default for MatchWeights {
    fn default() -> Self {
        // DETR-family convention
        Self {
            class_weight: 2.0,
            l1_weight: 5.0,
            giou_weight: 2.0,
        }
    }
}

/// Query-to-ground-truth pairing; pairs are sorted by query index and each
/// index appears at most once.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchAssignment {
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
}

/// Matching cost of one query against one ground-truth object:
/// `class_weight*(1 - p[class]) + l1_weight*|box - box|_1 + giou_weight*giou_loss`.
/// Box coordinates are expected normalized to the image extent.
pub fn pair_cost(
    query: &QueryPrediction,
    gt: &GtObject,
    weights: &MatchWeights,
) -> Result<f64, MatchingError> {
    let prob = *query
        .class_probs
        .get(gt.class_id)
        .ok_or(MatchingError::UnknownClass {
            class_id: gt.class_id,
            len: query.class_probs.len(),
        })?;
    let l1: f64 = query
        .bbox
        .coords()
        .iter()
        .zip(gt.bbox.coords())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(weights.class_weight * (1.0 - prob)
        + weights.l1_weight * l1
        + weights.giou_weight * giou_loss(&query.bbox, &gt.bbox))
}

/// Full cost matrix over queries x ground truths.
pub fn cost_matrix(
    queries: &[QueryPrediction],
    gts: &[GtObject],
    weights: &MatchWeights,
) -> Result<Array2<f64>, MatchingError> {
    let mut cost = Array2::zeros((queries.len(), gts.len()));
    for (i, q) in queries.iter().enumerate() {
        for (j, g) in gts.iter().enumerate() {
            cost[(i, j)] = pair_cost(q, g, weights)?;
        }
    }
    Ok(cost)
}

fn check_finite(cost: &Array2<f64>) -> Result<(), MatchingError> {
    for ((row, col), v) in cost.indexed_iter() {
        if !v.is_finite() {
            return Err(MatchingError::NonFiniteCost { row, col });
        }
    }
    Ok(())
}

/// Total cost of a pair list summed in ascending query order, the one
/// canonical summation order shared with the brute-force oracle so that
/// equal assignments produce bit-equal totals.
fn canonical_total(cost: &Array2<f64>, pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(q, g)| cost[(q, g)]).sum()
}

/// Jonker-Volgenant style shortest-augmenting-path assignment on a dense
/// submatrix, rows <= cols. Returns for each row its assigned column.
fn solve_rows_to_cols(cost: &Array2<f64>, rows: &[usize], cols: &[usize]) -> Vec<usize> {
    let n = rows.len();
    let m = cols.len();
    debug_assert!(n <= m);
    // 1-indexed potentials; col 0 is the virtual start column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut matched_row = vec![0usize; m + 1]; // row (1-indexed) matched to col
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut min_reduced = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = cost[(rows[i0 - 1], cols[j - 1])] - u[i0] - v[j];
                if reduced < min_reduced[j] {
                    min_reduced[j] = reduced;
                    way[j] = j0;
                }
                if min_reduced[j] < delta {
                    delta = min_reduced[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_reduced[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        // walk the augmenting path back
        while j0 != 0 {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
        }
    }
    let mut row_to_col = vec![usize::MAX; n];
    for j in 1..=m {
        if matched_row[j] != 0 {
            row_to_col[matched_row[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Optimal pairs for the subproblem over `rows` x `cols` (original
/// indices), sorted by query index. Handles either side being smaller.
fn solve_subproblem(cost: &Array2<f64>, rows: &[usize], cols: &[usize]) -> Vec<(usize, usize)> {
    if rows.is_empty() || cols.is_empty() {
        return Vec::new();
    }
    let mut pairs: Vec<(usize, usize)> = if rows.len() <= cols.len() {
        solve_rows_to_cols(cost, rows, cols)
            .into_iter()
            .enumerate()
            .map(|(ri, cj)| (rows[ri], cols[cj]))
            .collect()
    } else {
        // transpose: assign each column a row
        let transposed = cost.t().to_owned();
        solve_rows_to_cols(&transposed, cols, rows)
            .into_iter()
            .enumerate()
            .map(|(ci, rj)| (rows[rj], cols[ci]))
            .collect()
    };
    pairs.sort_unstable();
    pairs
}

/// Minimum-cost assignment; among minimizers, the one lexicographically
/// smallest in (query_index, gt_index) pair order.
///
/// The solver fixes pairs one slot at a time: every feasible next pair is
/// scored as fixed-prefix cost plus the optimal completion of the rest,
/// and the smallest-total candidate wins with ties broken on the pair
/// itself. Each candidate costs one shortest-augmenting-path solve, so
/// the refinement stays cheap at desk scale.
pub fn hungarian(cost: &Array2<f64>) -> Result<MatchAssignment, MatchingError> {
    check_finite(cost)?;
    let (n_rows, n_cols) = cost.dim();
    let target = n_rows.min(n_cols);
    if target == 0 {
        return Ok(MatchAssignment {
            pairs: Vec::new(),
            total_cost: 0.0,
        });
    }

    let mut fixed: Vec<(usize, usize)> = Vec::with_capacity(target);
    let mut col_used = vec![false; n_cols];
    let mut next_row = 0usize;
    for slot in 0..target {
        let remaining_after = target - slot - 1;
        let mut best: Option<(f64, (usize, usize))> = None;
        // rows must leave enough later rows for the remaining slots
        for q in next_row..(n_rows - remaining_after) {
            let tail_rows: Vec<usize> = (q + 1..n_rows).collect();
            for g in 0..n_cols {
                if col_used[g] {
                    continue;
                }
                let tail_cols: Vec<usize> =
                    (0..n_cols).filter(|&c| !col_used[c] && c != g).collect();
                let tail = solve_subproblem(cost, &tail_rows, &tail_cols);
                let mut candidate = fixed.clone();
                candidate.push((q, g));
                candidate.extend(tail);
                let total = canonical_total(cost, &candidate);
                let is_better = match &best {
                    None => true,
                    Some((best_total, best_pair)) => {
                        total < *best_total || (total == *best_total && (q, g) < *best_pair)
                    }
                };
                if is_better {
                    best = Some((total, (q, g)));
                }
            }
        }
        let (_, pair) = best.expect("feasible candidate always exists");
        fixed.push(pair);
        col_used[pair.1] = true;
        next_row = pair.0 + 1;
    }

    let total_cost = canonical_total(cost, &fixed);
    Ok(MatchAssignment {
        pairs: fixed,
        total_cost,
    })
}

const BRUTE_FORCE_LIMIT: usize = 9;

/// Exhaustive enumeration of all injections between queries and ground
/// truths, with the same tie rule as [`hungarian`]. The test oracle for
/// the solver; limited to min dimension 9.
pub fn brute_force_assignment(cost: &Array2<f64>) -> Result<MatchAssignment, MatchingError> {
    check_finite(cost)?;
    let (n_rows, n_cols) = cost.dim();
    let target = n_rows.min(n_cols);
    if target > BRUTE_FORCE_LIMIT {
        return Err(MatchingError::TooLarge {
            limit: BRUTE_FORCE_LIMIT,
            got: target,
        });
    }
    if target == 0 {
        return Ok(MatchAssignment {
            pairs: Vec::new(),
            total_cost: 0.0,
        });
    }

    struct Search<'a> {
        cost: &'a Array2<f64>,
        n_rows: usize,
        n_cols: usize,
        target: usize,
        col_used: Vec<bool>,
        current: Vec<(usize, usize)>,
        best: Option<(f64, Vec<(usize, usize)>)>,
    }

    impl Search<'_> {
        fn run(&mut self, row: usize, sum: f64) {
            if self.current.len() == self.target {
                let better = match &self.best {
                    None => true,
                    Some((best_sum, best_pairs)) => {
                        sum < *best_sum || (sum == *best_sum && self.current < *best_pairs)
                    }
                };
                if better {
                    self.best = Some((sum, self.current.clone()));
                }
                return;
            }
            if row == self.n_rows {
                return;
            }
            // prune: not enough rows left to fill the remaining slots
            let needed = self.target - self.current.len();
            if self.n_rows - row < needed {
                return;
            }
            for g in 0..self.n_cols {
                if self.col_used[g] {
                    continue;
                }
                self.col_used[g] = true;
                self.current.push((row, g));
                self.run(row + 1, sum + self.cost[(row, g)]);
                self.current.pop();
                self.col_used[g] = false;
            }
            // skip this row entirely (only possible when rows outnumber gts)
            if self.n_rows - row > needed {
                self.run(row + 1, sum);
            }
        }
    }

    let mut search = Search {
        cost,
        n_rows,
        n_cols,
        target,
        col_used: vec![false; n_cols],
        current: Vec::with_capacity(target),
        best: None,
    };
    search.run(0, 0.0);
    let (_, pairs) = search.best.expect("at least one injection exists");
    let total_cost = canonical_total(cost, &pairs);
    Ok(MatchAssignment { pairs, total_cost })
}
