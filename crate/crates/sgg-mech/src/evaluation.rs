//! SGDet-protocol scoring: triplet matching at IoU >= 0.5, Recall@K and
//! mean Recall@K, base/novel split filtering, and the file formats for
//! predictions, ground truth, and the report CSV.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::iou;
use crate::text::{Triplet, Vocabulary};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("triplet is missing a bounding box")]
    MissingBox,
    #[error("unknown split '{0}'")]
    UnknownSplit(String),
    #[error("oracle limited to {limit} ground truths / top-{k_limit}, got {got}")]
    TooLarge {
        limit: usize,
        k_limit: usize,
        got: usize,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
}

/// A predicted triplet with its ranking score (descending = better).
#[derive(Debug, Clone, PartialEq)]
pub struct RankedPrediction {
    pub triplet: Triplet,
    pub score: f64,
}

/// True when all three category labels match and both box pairs clear the
/// IoU threshold. The standard SGDet convention is `iou_thresh = 0.5`.
pub fn triplet_match(pred: &Triplet, gt: &Triplet, iou_thresh: f64) -> Result<bool, EvalError> {
    let (ps, po) = boxes_of(pred)?;
    let (gs, go) = boxes_of(gt)?;
    Ok(pred.subject == gt.subject
        && pred.predicate == gt.predicate
        && pred.object == gt.object
        && iou(&ps, &gs) >= iou_thresh
        && iou(&po, &go) >= iou_thresh)
}

fn boxes_of(t: &Triplet) -> Result<(crate::BoundingBox, crate::BoundingBox), EvalError> {
    match (t.subject_box, t.object_box) {
        (Some(s), Some(o)) => Ok((s, o)),
        _ => Err(EvalError::MissingBox),
    }
}

pub const SGDET_IOU_THRESHOLD: f64 = 0.5;

/// Stable ranking by descending score; ties keep input order.
fn ranked_indices(preds: &[RankedPrediction]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[b].score.total_cmp(&preds[a].score));
    order
}

/// Fraction of ground-truth triplets matched by a greedy one-to-one pass
/// over the top-K predictions in rank order; each ground truth is
/// consumable once. Returns 1 when there are no ground truths. Triplets
/// without boxes never match.
pub fn recall_at_k(preds: &[RankedPrediction], gts: &[Triplet], k: usize) -> f64 {
    if gts.is_empty() {
        return 1.0;
    }
    let order = ranked_indices(preds);
    let mut consumed = vec![false; gts.len()];
    let mut matched = 0usize;
    for &pi in order.iter().take(k) {
        for (gi, gt) in gts.iter().enumerate() {
            if consumed[gi] {
                continue;
            }
            if triplet_match(&preds[pi].triplet, gt, SGDET_IOU_THRESHOLD).unwrap_or(false) {
                consumed[gi] = true;
                matched += 1;
                break;
            }
        }
    }
    matched as f64 / gts.len() as f64
}

/// Recall@K restricted to each predicate category present in the ground
/// truth, averaged over those categories.
pub fn mean_recall_at_k(preds: &[RankedPrediction], gts: &[Triplet], k: usize) -> f64 {
    if gts.is_empty() {
        return 1.0;
    }
    let mut by_predicate: BTreeMap<&str, Vec<Triplet>> = BTreeMap::new();
    for gt in gts {
        by_predicate
            .entry(gt.predicate.as_str())
            .or_default()
            .push(gt.clone());
    }
    let total: f64 = by_predicate
        .values()
        .map(|category_gts| recall_at_k(preds, category_gts, k))
        .sum();
    total / by_predicate.len() as f64
}

/// Which ground-truth triplets a split keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitSpec {
    /// Everything.
    JointBaseNovel,
    /// Subject or object category is novel.
    NovelObject,
    /// Predicate category is novel.
    NovelRelation,
    /// Predicate category is base.
    BaseRelation,
    /// Both subject and object categories are base.
    BaseObject,
}

impl SplitSpec {
    pub const ALL: [SplitSpec; 5] = [
        SplitSpec::JointBaseNovel,
        SplitSpec::NovelObject,
        SplitSpec::NovelRelation,
        SplitSpec::BaseRelation,
        SplitSpec::BaseObject,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SplitSpec::JointBaseNovel => "joint",
            SplitSpec::NovelObject => "novel-object",
            SplitSpec::NovelRelation => "novel-relation",
            SplitSpec::BaseRelation => "base-relation",
            SplitSpec::BaseObject => "base-object",
        }
    }
}

impl FromStr for SplitSpec {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "joint" => Ok(SplitSpec::JointBaseNovel),
            "novel-object" => Ok(SplitSpec::NovelObject),
            "novel-relation" => Ok(SplitSpec::NovelRelation),
            "base-relation" => Ok(SplitSpec::BaseRelation),
            "base-object" => Ok(SplitSpec::BaseObject),
            other => Err(EvalError::UnknownSplit(other.to_string())),
        }
    }
}

/// Ground truths kept by the split. Categories absent from the vocabulary
/// count as novel, so base and novel variants of a split partition any
/// ground-truth list exactly.
pub fn split_filter(gts: &[Triplet], vocab: &Vocabulary, split: SplitSpec) -> Vec<Triplet> {
    gts.iter()
        .filter(|gt| match split {
            SplitSpec::JointBaseNovel => true,
            SplitSpec::NovelObject => {
                vocab.is_novel_object(&gt.subject) || vocab.is_novel_object(&gt.object)
            }
            SplitSpec::BaseObject => {
                !vocab.is_novel_object(&gt.subject) && !vocab.is_novel_object(&gt.object)
            }
            SplitSpec::NovelRelation => vocab.is_novel_predicate(&gt.predicate),
            SplitSpec::BaseRelation => !vocab.is_novel_predicate(&gt.predicate),
        })
        .cloned()
        .collect()
}

const ORACLE_GT_LIMIT: usize = 8;
const ORACLE_K_LIMIT: usize = 12;

/// Maximum matched-GT fraction over all one-to-one matchings between the
/// top-K predictions and the ground truths (optimal rather than greedy),
/// via augmenting paths. Cross-check oracle for [`recall_at_k`].
pub fn oracle_recall(preds: &[RankedPrediction], gts: &[Triplet], k: usize) -> Result<f64, EvalError> {
    if gts.len() > ORACLE_GT_LIMIT {
        return Err(EvalError::TooLarge {
            limit: ORACLE_GT_LIMIT,
            k_limit: ORACLE_K_LIMIT,
            got: gts.len(),
        });
    }
    if k > ORACLE_K_LIMIT {
        return Err(EvalError::TooLarge {
            limit: ORACLE_GT_LIMIT,
            k_limit: ORACLE_K_LIMIT,
            got: k,
        });
    }
    if gts.is_empty() {
        return Ok(1.0);
    }
    let order = ranked_indices(preds);
    let top: Vec<usize> = order.into_iter().take(k).collect();
    // edges[p] = ground truths matchable by top prediction p
    let edges: Vec<Vec<usize>> = top
        .iter()
        .map(|&pi| {
            gts.iter()
                .enumerate()
                .filter(|(_, gt)| {
                    triplet_match(&preds[pi].triplet, gt, SGDET_IOU_THRESHOLD).unwrap_or(false)
                })
                .map(|(gi, _)| gi)
                .collect()
        })
        .collect();

    let mut gt_owner: Vec<Option<usize>> = vec![None; gts.len()];
    fn augment(
        p: usize,
        edges: &[Vec<usize>],
        gt_owner: &mut [Option<usize>],
        visited: &mut [bool],
    ) -> bool {
        for &g in &edges[p] {
            if visited[g] {
                continue;
            }
            visited[g] = true;
            if gt_owner[g].is_none()
                || augment(gt_owner[g].unwrap(), edges, gt_owner, visited)
            {
                gt_owner[g] = Some(p);
                return true;
            }
        }
        false
    }

    let mut matched = 0usize;
    for p in 0..edges.len() {
        let mut visited = vec![false; gts.len()];
        if augment(p, &edges, &mut gt_owner, &mut visited) {
            matched += 1;
        }
    }
    Ok(matched as f64 / gts.len() as f64)
}

/// Per-split recall numbers plus the ground-truth count behind them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitMetrics {
    pub recall: BTreeMap<usize, f64>,
    pub mean_recall: BTreeMap<usize, f64>,
    pub gt_count: usize,
}

/// Split name -> metrics, as written to the report CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecallReport {
    pub splits: BTreeMap<String, SplitMetrics>,
}

pub const REPORT_KS: [usize; 3] = [20, 50, 100];

/// Evaluate per-image predictions against per-image ground truth for each
/// requested split. Per-image recalls are macro-averaged over images with
/// at least one ground truth in the split.
pub fn evaluate_dataset(
    images: &[(Vec<RankedPrediction>, Vec<Triplet>)],
    vocab: &Vocabulary,
    splits: &[SplitSpec],
    ks: &[usize],
) -> RecallReport {
    let mut report = RecallReport {
        splits: BTreeMap::new(),
    };
    for &split in splits {
        let mut metrics = SplitMetrics {
            recall: BTreeMap::new(),
            mean_recall: BTreeMap::new(),
            gt_count: 0,
        };
        let filtered: Vec<(&Vec<RankedPrediction>, Vec<Triplet>)> = images
            .iter()
            .map(|(preds, gts)| (preds, split_filter(gts, vocab, split)))
            .collect();
        metrics.gt_count = filtered.iter().map(|(_, gts)| gts.len()).sum();
        let scored: Vec<&(&Vec<RankedPrediction>, Vec<Triplet>)> = filtered
            .iter()
            .filter(|(_, gts)| !gts.is_empty())
            .collect();
        for &k in ks {
            let (mut recall_sum, mut mean_recall_sum) = (0.0, 0.0);
            for (preds, gts) in &scored {
                recall_sum += recall_at_k(preds, gts, k);
                mean_recall_sum += mean_recall_at_k(preds, gts, k);
            }
            let images_with_gt = scored.len().max(1) as f64;
            metrics.recall.insert(k, recall_sum / images_with_gt);
            metrics
                .mean_recall
                .insert(k, mean_recall_sum / images_with_gt);
        }
        report
            .splits
            .insert(split.as_str().to_string(), metrics);
    }
    report
}

/// CSV with columns `split,metric,K,value`; one `gt_count` row per split
/// with an empty K column.
pub fn write_report_csv(report: &RecallReport, out: &mut impl Write) -> Result<(), EvalError> {
    writeln!(out, "split,metric,K,value")?;
    for (split, metrics) in &report.splits {
        for (k, v) in &metrics.recall {
            writeln!(out, "{split},recall,{k},{v}")?;
        }
        for (k, v) in &metrics.mean_recall {
            writeln!(out, "{split},mean_recall,{k},{v}")?;
        }
        writeln!(out, "{split},gt_count,,{}", metrics.gt_count)?;
    }
    Ok(())
}

/// One line of a prediction JSONL file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub triplet: Triplet,
    pub score: f64,
    pub image_id: u64,
}

/// One line of a ground-truth JSONL file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub triplet: Triplet,
    pub image_id: u64,
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, EvalError> {
    let file = std::fs::File::open(path)?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(
            serde_json::from_str(&line).map_err(|e| EvalError::MalformedRecord {
                line: i + 1,
                reason: e.to_string(),
            })?,
        );
    }
    Ok(records)
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>, EvalError> {
    read_jsonl(path)
}

pub fn read_ground_truth(path: &Path) -> Result<Vec<GroundTruthRecord>, EvalError> {
    read_jsonl(path)
}

/// Group prediction and ground-truth records into per-image pairs ordered
/// by image id.
pub fn group_by_image(
    preds: Vec<PredictionRecord>,
    gts: Vec<GroundTruthRecord>,
) -> Vec<(Vec<RankedPrediction>, Vec<Triplet>)> {
    let mut images: BTreeMap<u64, (Vec<RankedPrediction>, Vec<Triplet>)> = BTreeMap::new();
    for p in preds {
        images.entry(p.image_id).or_default().0.push(RankedPrediction {
            triplet: p.triplet,
            score: p.score,
        });
    }
    for g in gts {
        images.entry(g.image_id).or_default().1.push(g.triplet);
    }
    images.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundingBox;

    fn boxed(s: &str, p: &str, o: &str, sbox: [f64; 4], obox: [f64; 4]) -> Triplet {
        Triplet::new(s, p, o).with_boxes(
            BoundingBox::from_coords(sbox),
            BoundingBox::from_coords(obox),
        )
    }

    fn unit_gt(s: &str, p: &str, o: &str, at: f64) -> Triplet {
        boxed(
            s,
            p,
            o,
            [at, at, at + 1.0, at + 1.0],
            [at + 2.0, at, at + 3.0, at + 1.0],
        )
    }

    fn pred(t: Triplet, score: f64) -> RankedPrediction {
        RankedPrediction { triplet: t, score }
    }

    #[test]
    fn triplet_match_identity() {
        let gt = unit_gt("man", "hold", "surfboard", 0.0);
        assert!(triplet_match(&gt, &gt, 0.5).unwrap());
    }

    #[test]
    fn triplet_match_below_iou_threshold() {
        let gt = unit_gt("man", "hold", "surfboard", 0.0);
        // subject box shifted so iou = 1/3 < 0.5, object box identical
        let p = boxed(
            "man",
            "hold",
            "surfboard",
            [0.5, 0.0, 1.5, 1.0],
            [2.0, 0.0, 3.0, 1.0],
        );
        assert!(!triplet_match(&p, &gt, 0.5).unwrap());
        assert!(triplet_match(&p, &gt, 1.0 / 3.0 - 1e-9).unwrap());
    }

    #[test]
    fn triplet_match_label_mismatch() {
        let gt = unit_gt("man", "hold", "surfboard", 0.0);
        let mut p = gt.clone();
        p.predicate = "carry".to_string();
        assert!(!triplet_match(&p, &gt, 0.5).unwrap());
    }

    #[test]
    fn triplet_match_missing_box() {
        let gt = unit_gt("man", "hold", "surfboard", 0.0);
        let bare = Triplet::new("man", "hold", "surfboard");
        assert!(matches!(
            triplet_match(&bare, &gt, 0.5),
            Err(EvalError::MissingBox)
        ));
    }

    #[test]
    fn recall_half_when_one_of_two_matched() {
        let gts = vec![
            unit_gt("man", "hold", "surfboard", 0.0),
            unit_gt("dog", "chase", "cat", 10.0),
        ];
        let preds = vec![pred(gts[0].clone(), 0.9)];
        assert_eq!(recall_at_k(&preds, &gts, 5), 0.5);
    }

    #[test]
    fn recall_empty_inputs() {
        let gts = vec![unit_gt("man", "hold", "surfboard", 0.0)];
        assert_eq!(recall_at_k(&[], &gts, 10), 0.0);
        assert_eq!(recall_at_k(&[], &[], 10), 1.0);
    }

    #[test]
    fn recall_perfect_when_preds_equal_gts() {
        let gts: Vec<Triplet> = (0..4)
            .map(|i| unit_gt("man", "hold", "surfboard", i as f64 * 10.0))
            .collect();
        let preds: Vec<RankedPrediction> = gts
            .iter()
            .enumerate()
            .map(|(i, g)| pred(g.clone(), i as f64))
            .collect();
        assert_eq!(recall_at_k(&preds, &gts, 4), 1.0);
    }

    #[test]
    fn recall_duplicate_predictions_do_not_double_count() {
        let gts = vec![unit_gt("man", "hold", "surfboard", 0.0)];
        let preds = vec![pred(gts[0].clone(), 0.9), pred(gts[0].clone(), 0.8)];
        assert_eq!(recall_at_k(&preds, &gts, 2), 1.0);
    }

    #[test]
    fn recall_nondecreasing_in_k() {
        let gts = vec![
            unit_gt("man", "hold", "surfboard", 0.0),
            unit_gt("dog", "chase", "cat", 10.0),
        ];
        let preds = vec![
            pred(unit_gt("x", "y", "z", 50.0), 1.0),
            pred(gts[0].clone(), 0.9),
            pred(gts[1].clone(), 0.8),
        ];
        let mut last = 0.0;
        for k in 1..=3 {
            let r = recall_at_k(&preds, &gts, k);
            assert!(r >= last);
            last = r;
        }
        assert_eq!(last, 1.0);
    }

    #[test]
    fn mean_recall_single_category_equals_recall() {
        let gts = vec![
            unit_gt("man", "hold", "surfboard", 0.0),
            unit_gt("dog", "hold", "bone", 10.0),
        ];
        let preds = vec![pred(gts[0].clone(), 0.9)];
        assert_eq!(
            mean_recall_at_k(&preds, &gts, 5),
            recall_at_k(&preds, &gts, 5)
        );
    }

    #[test]
    fn mean_recall_averages_over_categories() {
        let gts = vec![
            unit_gt("man", "hold", "surfboard", 0.0),
            unit_gt("dog", "chase", "cat", 10.0),
        ];
        // only the "hold" triplet is predicted: recalls 1.0 and 0.0
        let preds = vec![pred(gts[0].clone(), 0.9)];
        assert_eq!(mean_recall_at_k(&preds, &gts, 5), 0.5);
    }

    #[test]
    fn mean_recall_empty_gt_convention() {
        assert_eq!(mean_recall_at_k(&[], &[], 5), 1.0);
    }

    fn test_vocab() -> Vocabulary {
        Vocabulary::with_base_split(
            vec!["man".into(), "dog".into(), "dragon".into()],
            vec!["hold".into(), "summon".into()],
            &["man".into(), "dog".into()],
            &["hold".into()],
        )
        .unwrap()
    }

    #[test]
    fn split_novel_relation_drops_all_base() {
        let vocab = test_vocab();
        let gts = vec![unit_gt("man", "hold", "dog", 0.0)];
        assert!(split_filter(&gts, &vocab, SplitSpec::NovelRelation).is_empty());
    }

    #[test]
    fn split_novel_object_is_a_disjunction() {
        let vocab = test_vocab();
        // novel subject, base object, base predicate
        let gts = vec![unit_gt("dragon", "hold", "dog", 0.0)];
        assert_eq!(
            split_filter(&gts, &vocab, SplitSpec::NovelObject).len(),
            1
        );
    }

    #[test]
    fn split_joint_is_identity() {
        let vocab = test_vocab();
        let gts = vec![
            unit_gt("man", "hold", "dog", 0.0),
            unit_gt("dragon", "summon", "man", 10.0),
        ];
        assert_eq!(split_filter(&gts, &vocab, SplitSpec::JointBaseNovel), gts);
    }

    #[test]
    fn splits_partition_ground_truth() {
        let vocab = test_vocab();
        let gts = vec![
            unit_gt("man", "hold", "dog", 0.0),
            unit_gt("dragon", "summon", "man", 10.0),
            unit_gt("dog", "summon", "dragon", 20.0),
            unit_gt("unlisted", "hold", "dog", 30.0),
        ];
        let base_rel = split_filter(&gts, &vocab, SplitSpec::BaseRelation);
        let novel_rel = split_filter(&gts, &vocab, SplitSpec::NovelRelation);
        assert_eq!(base_rel.len() + novel_rel.len(), gts.len());
        let base_obj = split_filter(&gts, &vocab, SplitSpec::BaseObject);
        let novel_obj = split_filter(&gts, &vocab, SplitSpec::NovelObject);
        assert_eq!(base_obj.len() + novel_obj.len(), gts.len());
    }

    #[test]
    fn unknown_split_string() {
        assert!(matches!(
            "sideways".parse::<SplitSpec>(),
            Err(EvalError::UnknownSplit(_))
        ));
        assert_eq!(
            "novel-relation".parse::<SplitSpec>().unwrap(),
            SplitSpec::NovelRelation
        );
    }

    #[test]
    fn oracle_on_greedy_friendly_fixture() {
        let gts = vec![
            unit_gt("man", "hold", "surfboard", 0.0),
            unit_gt("dog", "chase", "cat", 10.0),
        ];
        let preds = vec![pred(gts[0].clone(), 0.9), pred(gts[1].clone(), 0.8)];
        let greedy = recall_at_k(&preds, &gts, 5);
        let oracle = oracle_recall(&preds, &gts, 5).unwrap();
        assert_eq!(greedy, oracle);
        assert_eq!(oracle, 1.0);
    }

    #[test]
    fn oracle_beats_greedy_on_adversarial_fixture() {
        // both gts share labels; gt0 and gt1 overlap each other enough that
        // one prediction matches both, the other matches only gt0
        let gt0 = boxed("man", "hold", "cup", [0.0, 0.0, 1.0, 1.0], [5.0, 5.0, 6.0, 6.0]);
        let gt1 = boxed(
            "man",
            "hold",
            "cup",
            [0.0, 0.0, 1.0, 0.9],
            [5.0, 5.0, 6.0, 5.9],
        );
        let flexible = pred(gt0.clone(), 1.0); // matches both gts
        let rigid = pred(gt0.clone(), 0.5); // also matches both, but ranked lower
        let gts = vec![gt0, gt1];
        let preds = vec![flexible, rigid];
        let greedy = recall_at_k(&preds, &gts, 2);
        let oracle = oracle_recall(&preds, &gts, 2).unwrap();
        assert!(oracle >= greedy);
        assert_eq!(oracle, 1.0);
    }

    #[test]
    fn oracle_empty_preds() {
        let gts = vec![unit_gt("man", "hold", "surfboard", 0.0)];
        assert_eq!(oracle_recall(&[], &gts, 5).unwrap(), 0.0);
    }

    #[test]
    fn oracle_size_limits() {
        let gts: Vec<Triplet> = (0..9)
            .map(|i| unit_gt("man", "hold", "cup", i as f64 * 10.0))
            .collect();
        assert!(matches!(
            oracle_recall(&[], &gts, 5),
            Err(EvalError::TooLarge { .. })
        ));
        assert!(matches!(
            oracle_recall(&[], &gts[..1], 13),
            Err(EvalError::TooLarge { .. })
        ));
    }

    #[test]
    fn report_csv_schema() {
        let vocab = test_vocab();
        let gts = vec![unit_gt("man", "hold", "dog", 0.0)];
        let preds = vec![pred(gts[0].clone(), 0.9)];
        let report = evaluate_dataset(
            &[(preds, gts)],
            &vocab,
            &[SplitSpec::JointBaseNovel, SplitSpec::NovelRelation],
            &[20, 50],
        );
        let mut csv = Vec::new();
        write_report_csv(&report, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("split,metric,K,value"));
        assert!(text.contains("joint,recall,20,1"));
        assert!(text.contains("joint,gt_count,,1"));
        // the one gt is base-base, so the novel-relation split is empty
        assert!(text.contains("novel-relation,gt_count,,0"));
    }

    #[test]
    fn recall_values_stay_in_unit_interval_and_bounded_by_oracle() {
        use rand::prelude::*;
        use rand_chacha::ChaCha12Rng;
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..100 {
            let n_gts = rng.random_range(1..5);
            let gts: Vec<Triplet> = (0..n_gts)
                .map(|i| unit_gt("man", "hold", "cup", i as f64 * 0.4))
                .collect();
            let preds: Vec<RankedPrediction> = (0..rng.random_range(0..6))
                .map(|_| {
                    let at = rng.random_range(0.0..2.0);
                    pred(unit_gt("man", "hold", "cup", at), rng.random_range(0.0..1.0))
                })
                .collect();
            let k = rng.random_range(1..8);
            let greedy = recall_at_k(&preds, &gts, k);
            let oracle = oracle_recall(&preds, &gts, k).unwrap();
            assert!((0.0..=1.0).contains(&greedy));
            assert!(greedy <= oracle + 1e-12);
        }
    }
}
