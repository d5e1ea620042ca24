//! End-to-end experiment runners over seeded scenes: query-selection
//! coverage, distillation invariance plus a descent loop, and
//! pseudo-label correctness under the two prompt styles. Scenes run on
//! independent substreams and aggregate in scene-index order, so results
//! are byte-identical across runs and thread counts.

use rand::prelude::*;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::embed::{embed_scene, interaction_tokens, EmbeddingModel};
use super::rng;
use super::scene::gen_scene;
use super::HarnessError;
use crate::grounding::{combine_pairs, MockGrounder};
use crate::losses::{
    build_edge_features, rrd_loss, rrd_loss_grad, rrd_loss_unrestricted, vrd_loss, vrd_loss_grad,
    EdgeFeature,
};
use crate::matching::QueryPrediction;
use crate::selection::{relevance_scores, select_queries, top_k};
use crate::text::{build_bidirectional_prompt, CounterActionBackend, Triplet, Vocabulary};

/// Build the worker pool; `threads == 0` lets rayon pick.
pub fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))
}

/// Worker-thread cap from the environment; 0 or unset means automatic.
pub fn threads_from_env() -> usize {
    std::env::var("SGG_MECH_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0)
}

/// One row of an emitted report: (condition, metric, value).
pub type ReportRow = (String, String, f64);

/// Coverage of interacting instances among the selected queries, under
/// the object-only baseline and the interaction-guided two-step path.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    pub scene_count: usize,
    pub object_only_mean: f64,
    pub interaction_guided_mean: f64,
    pub paired_diff_mean: f64,
    /// Half-width of the 95% normal-approximation interval over per-scene
    /// paired differences.
    pub paired_diff_ci95: f64,
    /// Scenes whose interacting-instance count fits inside the prefix.
    pub qualifying_scenes: usize,
    /// Two-step coverage restricted to qualifying scenes.
    pub interaction_guided_mean_qualifying: f64,
}

impl SelectionReport {
    pub fn rows(&self) -> Vec<ReportRow> {
        vec![
            ("object_only".into(), "interacting_coverage".into(), self.object_only_mean),
            (
                "interaction_guided".into(),
                "interacting_coverage".into(),
                self.interaction_guided_mean,
            ),
            ("difference".into(), "mean".into(), self.paired_diff_mean),
            ("difference".into(), "ci95_half_width".into(), self.paired_diff_ci95),
            (
                "interaction_guided".into(),
                "qualifying_scenes".into(),
                self.qualifying_scenes as f64,
            ),
            (
                "interaction_guided".into(),
                "coverage_on_qualifying".into(),
                self.interaction_guided_mean_qualifying,
            ),
        ]
    }
}

/// Fraction of a scene's interacting instances among `selected`.
fn interacting_coverage(selected: &[usize], interacting: &[usize]) -> f64 {
    if interacting.is_empty() {
        return 1.0;
    }
    let hit = interacting.iter().filter(|i| selected.contains(i)).count();
    hit as f64 / interacting.len() as f64
}

/// Flip each triplet's predicate with the configured probability, the
/// noisy stand-in for imperfect first-pass predictions.
fn maybe_flip_predicates(
    triplets: &[Triplet],
    vocab: &Vocabulary,
    flip_prob: f64,
    seed: u64,
) -> Vec<Triplet> {
    if flip_prob == 0.0 {
        return triplets.to_vec();
    }
    let mut rng = rng::substream_rng(seed, rng::stream::FLIP);
    triplets
        .iter()
        .map(|t| {
            let mut t = t.clone();
            if rng.random_bool(flip_prob) {
                let idx = rng.random_range(0..vocab.predicates().len());
                t.predicate = vocab.predicates()[idx].clone();
            }
            t
        })
        .collect()
}

/// Compare interacting-instance coverage between the object-only baseline
/// (combined relevance at gamma = 1, no second stage) and the full
/// two-stage interaction-guided selection.
pub fn run_selection_experiment(
    config: &ExperimentConfig,
) -> Result<SelectionReport, HarnessError> {
    config.validate()?;
    let vocab = config
        .vocabulary
        .build()
        .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
    let model = EmbeddingModel::new(&vocab, &config.embedding, config.master_seed);

    struct SceneOutcome {
        baseline: f64,
        guided: f64,
        qualifying: bool,
    }

    let pool = thread_pool(threads_from_env())?;
    let outcomes: Result<Vec<SceneOutcome>, HarnessError> = pool.install(|| {
        (0..config.scene.count)
            .into_par_iter()
            .map(|index| {
                let scene_seed = rng::substream_seed(config.master_seed, index as u64);
                let scene = gen_scene(config, &vocab, scene_seed)?;
                let embedding = embed_scene(&scene, &model, &vocab)?;
                let tokens = scene.instances.len();
                let k = config.selection.k.min(tokens);
                let l = config.selection.l.min(k);

                let baseline_scores = relevance_scores(
                    &embedding.visual,
                    &embedding.object_tokens,
                    &embedding.relation_tokens,
                    1.0,
                )
                .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
                let baseline_set = top_k(&baseline_scores, k)
                    .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;

                let prompts = maybe_flip_predicates(
                    &scene.gt_triplets,
                    &vocab,
                    config.selection.predicate_flip_prob,
                    scene_seed,
                );
                let guided_tokens = interaction_tokens(&prompts, &model)?;
                let guided_set = select_queries(
                    &embedding.visual,
                    &guided_tokens,
                    &embedding.object_tokens,
                    k,
                    l,
                    config.selection.gamma_balance,
                    &embedding.relation_tokens,
                )
                .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;

                let interacting = scene.interacting_indices();
                Ok(SceneOutcome {
                    baseline: interacting_coverage(&baseline_set, &interacting),
                    guided: interacting_coverage(&guided_set.indices, &interacting),
                    qualifying: interacting.len() <= l,
                })
            })
            .collect()
    });
    let outcomes = outcomes?;

    let n = outcomes.len() as f64;
    let object_only_mean = outcomes.iter().map(|o| o.baseline).sum::<f64>() / n;
    let interaction_guided_mean = outcomes.iter().map(|o| o.guided).sum::<f64>() / n;
    let diffs: Vec<f64> = outcomes.iter().map(|o| o.guided - o.baseline).collect();
    let paired_diff_mean = diffs.iter().sum::<f64>() / n;
    let variance = diffs
        .iter()
        .map(|d| (d - paired_diff_mean).powi(2))
        .sum::<f64>()
        / (n - 1.0).max(1.0);
    let paired_diff_ci95 = 1.96 * (variance / n).sqrt();
    let qualifying: Vec<&SceneOutcome> = outcomes.iter().filter(|o| o.qualifying).collect();
    let interaction_guided_mean_qualifying = if qualifying.is_empty() {
        0.0
    } else {
        qualifying.iter().map(|o| o.guided).sum::<f64>() / qualifying.len() as f64
    };

    Ok(SelectionReport {
        scene_count: outcomes.len(),
        object_only_mean,
        interaction_guided_mean,
        paired_diff_mean,
        paired_diff_ci95,
        qualifying_scenes: qualifying.len(),
        interaction_guided_mean_qualifying,
    })
}

/// Distillation behaviour of three students against a shared teacher,
/// plus a fixed-step descent on the combined objective from the perturbed
/// student.
#[derive(Debug, Clone, PartialEq)]
pub struct DistillReport {
    pub edge_count: usize,
    pub negative_count: usize,
    pub identical: (f64, f64),
    pub rotated: (f64, f64),
    pub perturbed: (f64, f64),
    pub descent_steps: usize,
    pub descent_initial: f64,
    pub descent_final: f64,
    pub descent_monotone: bool,
}

impl DistillReport {
    pub fn rows(&self) -> Vec<ReportRow> {
        vec![
            ("identical".into(), "vrd".into(), self.identical.0),
            ("identical".into(), "rrd".into(), self.identical.1),
            ("rotated".into(), "vrd".into(), self.rotated.0),
            ("rotated".into(), "rrd".into(), self.rotated.1),
            ("perturbed".into(), "vrd".into(), self.perturbed.0),
            ("perturbed".into(), "rrd".into(), self.perturbed.1),
            ("descent".into(), "initial".into(), self.descent_initial),
            ("descent".into(), "final".into(), self.descent_final),
            (
                "descent".into(),
                "monotone".into(),
                if self.descent_monotone { 1.0 } else { 0.0 },
            ),
        ]
    }
}

/// Teacher edge features from a seeded scene batch: ordered pairs among
/// the first instances of each scene, negatives being the pairs that are
/// not a ground-truth subject-object pair.
pub fn teacher_edges(config: &ExperimentConfig) -> Result<Vec<EdgeFeature>, HarnessError> {
    let vocab = config
        .vocabulary
        .build()
        .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
    let model = EmbeddingModel::new(&vocab, &config.embedding, config.master_seed);
    let mut edges = Vec::new();
    for index in 0..config.distill.scenes {
        let scene_seed = rng::substream_seed(config.master_seed, index as u64);
        let scene = gen_scene(config, &vocab, scene_seed)?;
        let embedding = embed_scene(&scene, &model, &vocab)?;
        let take = config.distill.instances_per_scene.min(scene.instances.len());
        let queries: Vec<QueryPrediction> = (0..take)
            .map(|i| QueryPrediction {
                bbox: scene.instances[i].bbox,
                class_probs: Vec::new(),
                feature: Some(embedding.visual.row(i).to_vec()),
            })
            .collect();
        let gt_pairs: Vec<(usize, usize)> = (0..scene.gt_triplets.len())
            .map(|id| scene.interaction_pair(id))
            .collect();
        let mut pairs = Vec::new();
        for i in 0..take {
            for j in 0..take {
                if i != j {
                    pairs.push((i, j));
                }
            }
        }
        let scene_edges = build_edge_features(&queries, &pairs, None)
            .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
        edges.extend(scene_edges.into_iter().map(|mut e| {
            e.is_negative = !gt_pairs.contains(&e.pair);
            e
        }));
    }
    Ok(edges)
}

fn distill_pair(
    student: &[EdgeFeature],
    teacher: &[EdgeFeature],
    negatives_only: bool,
) -> Result<(f64, f64), HarnessError> {
    let vrd = vrd_loss(student, teacher).map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
    let rrd = if negatives_only {
        rrd_loss(student, teacher)
    } else {
        rrd_loss_unrestricted(student, teacher)
    }
    .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
    Ok((vrd, rrd))
}

/// Run the distillation experiment: tabulate (visual-retention,
/// structure-retention) losses for an identical, a rotated-and-scaled,
/// and a gaussian-perturbed student, then descend the combined objective
/// from the perturbed one.
pub fn run_distill_experiment(config: &ExperimentConfig) -> Result<DistillReport, HarnessError> {
    config.validate()?;
    let teacher = teacher_edges(config)?;
    let negative_count = teacher.iter().filter(|e| e.is_negative).count();
    if negative_count < 2 {
        return Err(HarnessError::ConfigInvalid(
            "distill batch produced fewer than two negative pairs".into(),
        ));
    }
    let negatives_only = config.losses.rrd_negatives_only;

    let identical = distill_pair(&teacher, &teacher, negatives_only)?;

    let mut map_rng = rng::substream_rng(config.master_seed, rng::stream::DISTILL);
    let dim = teacher[0].vector.len();
    let orthogonal = rng::random_orthogonal(dim, &mut map_rng);
    let scale = map_rng.random_range(config.distill.scale_min..=config.distill.scale_max);
    let rotated_student: Vec<EdgeFeature> = teacher
        .iter()
        .map(|e| {
            let mut out = e.clone();
            out.vector = rng::apply_linear(&orthogonal, scale, &e.vector);
            out
        })
        .collect();
    let rotated = distill_pair(&rotated_student, &teacher, negatives_only)?;

    let mut perturbed_student: Vec<EdgeFeature> = teacher
        .iter()
        .map(|e| {
            let mut out = e.clone();
            for v in out.vector.iter_mut() {
                let draw: f64 = map_rng.sample(StandardNormal);
                *v += config.distill.perturb_sigma * draw;
            }
            out
        })
        .collect();
    let perturbed = distill_pair(&perturbed_student, &teacher, negatives_only)?;

    // plain fixed-step descent on beta1*vrd + beta2*rrd
    let (beta1, beta2) = (config.losses.beta1, config.losses.beta2);
    let combined = |student: &[EdgeFeature]| -> Result<f64, HarnessError> {
        let (vrd, rrd) = distill_pair(student, &teacher, negatives_only)?;
        Ok(beta1 * vrd + beta2 * rrd)
    };
    let descent_initial = combined(&perturbed_student)?;
    let mut last = descent_initial;
    let mut monotone = true;
    for _ in 0..config.distill.descent_steps {
        let vrd_grads = vrd_loss_grad(&perturbed_student, &teacher)
            .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
        let rrd_grads = rrd_loss_grad(&perturbed_student, &teacher)
            .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
        for (edge, (gv, gr)) in perturbed_student
            .iter_mut()
            .zip(vrd_grads.iter().zip(&rrd_grads))
        {
            for (x, (dv, dr)) in edge.vector.iter_mut().zip(gv.iter().zip(gr)) {
                *x -= config.distill.descent_step_size * (beta1 * dv + beta2 * dr);
            }
        }
        let now = combined(&perturbed_student)?;
        if now > last {
            monotone = false;
        }
        last = now;
    }

    Ok(DistillReport {
        edge_count: teacher.len(),
        negative_count,
        identical,
        rotated,
        perturbed,
        descent_steps: config.distill.descent_steps,
        descent_initial,
        descent_final: last,
        descent_monotone: monotone,
    })
}

/// Pseudo-label correctness under object-only versus bidirectional
/// prompts.
#[derive(Debug, Clone, PartialEq)]
pub struct InfusionReport {
    pub triplet_count: usize,
    pub object_only_correct: usize,
    pub bidirectional_correct: usize,
    pub object_only_fraction: f64,
    pub bidirectional_fraction: f64,
}

impl InfusionReport {
    pub fn rows(&self) -> Vec<ReportRow> {
        vec![
            (
                "object_only".into(),
                "pseudo_label_correctness".into(),
                self.object_only_fraction,
            ),
            (
                "bidirectional".into(),
                "pseudo_label_correctness".into(),
                self.bidirectional_fraction,
            ),
            ("both".into(), "triplet_count".into(), self.triplet_count as f64),
        ]
    }
}

/// For each ground-truth triplet, ground an object-only prompt and a
/// bidirectional interaction prompt, combine detections into ranked
/// pseudo-labels, and count how often the top-ranked label is the true
/// interacting pair.
pub fn run_infusion_experiment(config: &ExperimentConfig) -> Result<InfusionReport, HarnessError> {
    config.validate()?;
    let vocab = config
        .vocabulary
        .build()
        .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
    let grounder = MockGrounder {
        base_score_min: config.grounding.base_score_min,
        base_score_max: config.grounding.base_score_max,
        interaction_bonus: config.grounding.interaction_bonus,
        seed: config.master_seed,
    };

    let pool = thread_pool(threads_from_env())?;
    let per_scene: Result<Vec<(usize, usize, usize)>, HarnessError> = pool.install(|| {
        (0..config.scene.count)
            .into_par_iter()
            .map(|index| {
                let scene_seed = rng::substream_seed(config.master_seed, index as u64);
                let scene = gen_scene(config, &vocab, scene_seed)?;
                let mut object_only = 0usize;
                let mut bidirectional = 0usize;
                for gt in &scene.gt_triplets {
                    let object_prompt = format!("{}. {}.", gt.subject, gt.object);
                    let interaction_prompt =
                        build_bidirectional_prompt(gt, &CounterActionBackend::Rules)
                            .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?
                            .combined;
                    for (prompt, hits) in [
                        (object_prompt, &mut object_only),
                        (interaction_prompt, &mut bidirectional),
                    ] {
                        let detections = grounder.ground(&scene, &prompt, &vocab);
                        let subjects: Vec<_> = detections
                            .iter()
                            .filter(|d| d.phrase == gt.subject)
                            .cloned()
                            .collect();
                        let objects: Vec<_> = detections
                            .iter()
                            .filter(|d| d.phrase == gt.object)
                            .cloned()
                            .collect();
                        let labels = combine_pairs(
                            &subjects,
                            &objects,
                            config.grounding.confidence_threshold,
                            config.grounding.iou_threshold,
                            &gt.predicate,
                        );
                        if let Some(best) = labels.first() {
                            let correct = best
                                .triplet
                                .subject_box
                                .unwrap()
                                .same_coords(&gt.subject_box.unwrap())
                                && best
                                    .triplet
                                    .object_box
                                    .unwrap()
                                    .same_coords(&gt.object_box.unwrap());
                            if correct {
                                *hits += 1;
                            }
                        }
                    }
                }
                Ok((scene.gt_triplets.len(), object_only, bidirectional))
            })
            .collect()
    });
    let per_scene = per_scene?;

    let triplet_count: usize = per_scene.iter().map(|(n, _, _)| n).sum();
    let object_only_correct: usize = per_scene.iter().map(|(_, a, _)| a).sum();
    let bidirectional_correct: usize = per_scene.iter().map(|(_, _, b)| b).sum();
    Ok(InfusionReport {
        triplet_count,
        object_only_correct,
        bidirectional_correct,
        object_only_fraction: object_only_correct as f64 / triplet_count.max(1) as f64,
        bidirectional_fraction: bidirectional_correct as f64 / triplet_count.max(1) as f64,
    })
}
