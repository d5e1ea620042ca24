//! Pseudo-supervision generation: a mock grounding backend over synthetic
//! scenes and the rule-based subject/object box combination with
//! confidence and IoU thresholds.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{iou, BoundingBox};
use crate::harness::rng;
use crate::harness::scene::SyntheticScene;
use crate::text::{tokenize, Triplet, Vocabulary};

#[derive(Debug, Error)]
pub enum GroundingError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed pseudo-label record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
}

/// One grounded phrase.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub bbox: BoundingBox,
    pub phrase: String,
    pub score: f64,
}

/// A triplet annotated from overlapping detections; thresholds were
/// checked at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabel {
    pub triplet: Triplet,
    pub iou: f64,
    pub subject_score: f64,
    pub object_score: f64,
}

/// Stand-in for a text-conditioned detector. Every scene instance whose
/// category occurs in the prompt is detected at a per-scene base score;
/// instances whose interaction predicate also occurs in the prompt score
/// an extra bonus, modelling how attention lets an object token absorb
/// interaction semantics. All scores are clamped to [0, 1].
#[derive(Debug, Clone)]
pub struct MockGrounder {
    pub base_score_min: f64,
    pub base_score_max: f64,
    pub interaction_bonus: f64,
    pub seed: u64,
}

impl MockGrounder {
    /// Ground `prompt` against a scene. Deterministic in
    /// (scene, prompt, seed): the base score is one seeded draw per scene,
    /// shared by every detection in it.
    pub fn ground(
        &self,
        scene: &SyntheticScene,
        prompt: &str,
        vocab: &Vocabulary,
    ) -> Vec<Detection> {
        let prompt_tokens = tokenize(prompt);
        let mut scene_rng = rng::substream_rng(
            rng::substream_seed(self.seed, rng::stream::GROUNDER),
            scene.seed,
        );
        let base = scene_rng.random_range(self.base_score_min..=self.base_score_max);

        let mut detections = Vec::new();
        for instance in &scene.instances {
            let category = &vocab.objects()[instance.category_id];
            if !contains_phrase(&prompt_tokens, category) {
                continue;
            }
            let bonus = match instance.interaction_id {
                Some(id) => {
                    let predicate = &scene.gt_triplets[id].predicate;
                    if contains_phrase(&prompt_tokens, predicate) {
                        self.interaction_bonus
                    } else {
                        0.0
                    }
                }
                None => 0.0,
            };
            let score = (base + bonus).clamp(0.0, 1.0);
            detections.push(Detection {
                bbox: instance.bbox.with_score(score),
                phrase: category.clone(),
                score,
            });
        }
        detections
    }
}

/// True when `phrase`'s tokens occur contiguously in `tokens`.
fn contains_phrase(tokens: &[String], phrase: &str) -> bool {
    let needle = tokenize(phrase);
    if needle.is_empty() || needle.len() > tokens.len() {
        return false;
    }
    tokens.windows(needle.len()).any(|w| w == needle.as_slice())
}

/// Combine subject and object detections into pseudo-labels: every
/// Cartesian pair with both scores strictly above `conf_threshold` and
/// IoU strictly above `iou_threshold` qualifies. Output is sorted by
/// descending min(subject score, object score), then descending IoU, then
/// input order, so downstream batches are deterministic.
pub fn combine_pairs(
    subjects: &[Detection],
    objects: &[Detection],
    conf_threshold: f64,
    iou_threshold: f64,
    predicate: &str,
) -> Vec<PseudoLabel> {
    let mut labels = Vec::new();
    for subject in subjects {
        if subject.score <= conf_threshold {
            continue;
        }
        for object in objects {
            if object.score <= conf_threshold {
                continue;
            }
            let pair_iou = iou(&subject.bbox, &object.bbox);
            if pair_iou <= iou_threshold {
                continue;
            }
            labels.push(PseudoLabel {
                triplet: Triplet::new(&subject.phrase, predicate, &object.phrase)
                    .with_boxes(subject.bbox, object.bbox),
                iou: pair_iou,
                subject_score: subject.score,
                object_score: object.score,
            });
        }
    }
    labels.sort_by(|a, b| {
        let min_a = a.subject_score.min(a.object_score);
        let min_b = b.subject_score.min(b.object_score);
        min_b.total_cmp(&min_a).then(b.iou.total_cmp(&a.iou))
    });
    labels
}

#[derive(Serialize, Deserialize)]
struct PseudoLabelRecord {
    subject: String,
    predicate: String,
    object: String,
    sbox: [f64; 4],
    obox: [f64; 4],
    sscore: f64,
    oscore: f64,
    iou: f64,
}

/// Write pseudo-labels as JSONL; the round trip is lossless.
pub fn write_pseudo_labels(path: &Path, labels: &[PseudoLabel]) -> Result<(), GroundingError> {
    let mut file = std::fs::File::create(path)?;
    for label in labels {
        let record = PseudoLabelRecord {
            subject: label.triplet.subject.clone(),
            predicate: label.triplet.predicate.clone(),
            object: label.triplet.object.clone(),
            sbox: label.triplet.subject_box.expect("pseudo-label has boxes").coords(),
            obox: label.triplet.object_box.expect("pseudo-label has boxes").coords(),
            sscore: label.subject_score,
            oscore: label.object_score,
            iou: label.iou,
        };
        serde_json::to_writer(&mut file, &record).map_err(|e| GroundingError::MalformedRecord {
            line: 0,
            reason: e.to_string(),
        })?;
        file.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_pseudo_labels(path: &Path) -> Result<Vec<PseudoLabel>, GroundingError> {
    let file = std::fs::File::open(path)?;
    let mut labels = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PseudoLabelRecord =
            serde_json::from_str(&line).map_err(|e| GroundingError::MalformedRecord {
                line: i + 1,
                reason: e.to_string(),
            })?;
        let subject_box = BoundingBox::from_coords(record.sbox).with_score(record.sscore);
        let object_box = BoundingBox::from_coords(record.obox).with_score(record.oscore);
        labels.push(PseudoLabel {
            triplet: Triplet::new(&record.subject, &record.predicate, &record.object)
                .with_boxes(subject_box, object_box),
            iou: record.iou,
            subject_score: record.sscore,
            object_score: record.oscore,
        });
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentConfig;
    use crate::harness::scene::gen_scene;
    use crate::text::{build_bidirectional_prompt, CounterActionBackend};
    use rand_chacha::ChaCha12Rng;

    fn det(coords: [f64; 4], phrase: &str, score: f64) -> Detection {
        Detection {
            bbox: BoundingBox::from_coords(coords).with_score(score),
            phrase: phrase.to_string(),
            score,
        }
    }

    fn grounder(seed: u64) -> MockGrounder {
        let g = ExperimentConfig::default().grounding;
        MockGrounder {
            base_score_min: g.base_score_min,
            base_score_max: g.base_score_max,
            interaction_bonus: g.interaction_bonus,
            seed,
        }
    }

    /// A scene where some interaction's subject category also appears on a
    /// distractor, found by seed search over the default config.
    fn scene_with_distractor() -> (SyntheticScene, Vocabulary, usize) {
        let config = ExperimentConfig::default();
        let vocab = config.vocabulary.build().unwrap();
        for seed in 0..500 {
            let scene = gen_scene(&config, &vocab, seed).unwrap();
            for (id, _) in scene.gt_triplets.iter().enumerate() {
                let (s, _) = scene.interaction_pair(id);
                let subject_cat = scene.instances[s].category_id;
                let has_distractor = scene
                    .instances
                    .iter()
                    .any(|i| !i.interacting && i.category_id == subject_cat);
                if has_distractor {
                    return (scene, vocab, id);
                }
            }
        }
        unreachable!("default config always yields such a scene");
    }

    #[test]
    fn interacting_instance_outscores_same_category_distractor() {
        let (scene, vocab, interaction_id) = scene_with_distractor();
        let gt = &scene.gt_triplets[interaction_id];
        let prompt = build_bidirectional_prompt(gt, &CounterActionBackend::Rules)
            .unwrap()
            .combined;
        let detections = grounder(5).ground(&scene, &prompt, &vocab);
        let (s, _) = scene.interaction_pair(interaction_id);
        let subject_box = scene.instances[s].bbox;
        let interacting_score = detections
            .iter()
            .find(|d| d.bbox.same_coords(&subject_box))
            .unwrap()
            .score;
        let distractor_score = detections
            .iter()
            .find(|d| d.phrase == gt.subject && !d.bbox.same_coords(&subject_box))
            .map(|d| d.score)
            .expect("distractor detected");
        assert!(
            interacting_score > distractor_score,
            "{interacting_score} vs {distractor_score}"
        );
    }

    #[test]
    fn prompt_without_scene_categories_grounds_nothing() {
        let config = ExperimentConfig::default();
        let vocab = config.vocabulary.build().unwrap();
        let scene = gen_scene(&config, &vocab, 3).unwrap();
        assert!(grounder(5)
            .ground(&scene, "pelican. lighthouse.", &vocab)
            .is_empty());
    }

    #[test]
    fn object_only_prompt_yields_equal_base_scores() {
        let config = ExperimentConfig::default();
        let vocab = config.vocabulary.build().unwrap();
        let scene = gen_scene(&config, &vocab, 3).unwrap();
        let prompt: String = scene
            .gt_triplets
            .iter()
            .flat_map(|t| [t.subject.clone(), t.object.clone()])
            .collect::<Vec<_>>()
            .join(". ")
            + ".";
        let detections = grounder(5).ground(&scene, &prompt, &vocab);
        assert!(!detections.is_empty());
        let first = detections[0].score;
        assert!(detections.iter().all(|d| d.score == first));
    }

    #[test]
    fn grounding_is_deterministic() {
        let (scene, vocab, interaction_id) = scene_with_distractor();
        let gt = &scene.gt_triplets[interaction_id];
        let prompt = build_bidirectional_prompt(gt, &CounterActionBackend::Rules)
            .unwrap()
            .combined;
        let a = grounder(5).ground(&scene, &prompt, &vocab);
        let b = grounder(5).ground(&scene, &prompt, &vocab);
        assert_eq!(a, b);
        let c = grounder(6).ground(&scene, &prompt, &vocab);
        assert!(a.iter().zip(&c).all(|(x, y)| x.bbox.same_coords(&y.bbox)));
    }

    #[test]
    fn combine_accepts_qualifying_pair() {
        let subjects = vec![det([0.0, 0.0, 2.0, 2.0], "man", 0.9)];
        let objects = vec![det([1.0, 1.0, 3.0, 3.0], "surfboard", 0.8)];
        let labels = combine_pairs(&subjects, &objects, 0.25, 0.0, "hold");
        assert_eq!(labels.len(), 1);
        let label = &labels[0];
        assert_eq!(label.triplet.subject, "man");
        assert_eq!(label.triplet.predicate, "hold");
        assert!((label.iou - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn combine_filters_low_confidence() {
        let subjects = vec![det([0.0, 0.0, 2.0, 2.0], "man", 0.2)];
        let objects = vec![det([1.0, 1.0, 3.0, 3.0], "surfboard", 0.8)];
        assert!(combine_pairs(&subjects, &objects, 0.25, 0.0, "hold").is_empty());
    }

    #[test]
    fn combine_iou_comparison_is_strict() {
        let subjects = vec![det([0.0, 0.0, 1.0, 1.0], "man", 0.9)];
        let objects = vec![det([5.0, 5.0, 6.0, 6.0], "surfboard", 0.9)];
        assert!(combine_pairs(&subjects, &objects, 0.25, 0.0, "hold").is_empty());
    }

    #[test]
    fn combine_threshold_boundary_is_strict() {
        let subjects = vec![det([0.0, 0.0, 2.0, 2.0], "man", 0.25)];
        let objects = vec![det([1.0, 1.0, 3.0, 3.0], "surfboard", 0.8)];
        assert!(combine_pairs(&subjects, &objects, 0.25, 0.0, "hold").is_empty());
    }

    #[test]
    fn combine_sorts_by_min_score_then_iou() {
        let subjects = vec![
            det([0.0, 0.0, 2.0, 2.0], "man", 0.6),
            det([0.0, 0.0, 2.0, 2.0], "man", 0.9),
        ];
        let objects = vec![
            det([1.0, 1.0, 3.0, 3.0], "cup", 0.9), // iou 1/7 with both
            det([0.5, 0.5, 2.0, 2.0], "cup", 0.9), // higher iou
        ];
        let labels = combine_pairs(&subjects, &objects, 0.0, 0.0, "hold");
        assert_eq!(labels.len(), 4);
        assert_eq!(labels[0].subject_score, 0.9);
        assert!(labels[0].iou > labels[1].iou);
        assert_eq!(labels[1].subject_score, 0.9);
        assert_eq!(labels[2].subject_score, 0.6);
        assert!(labels[2].iou > labels[3].iou);
    }

    #[test]
    fn combine_output_subsets_cartesian_product_and_passes_thresholds() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        for _ in 0..100 {
            let n_s = rng.random_range(0..5);
            let n_o = rng.random_range(0..5);
            let mk = |rng: &mut ChaCha12Rng, phrase: &str| {
                let x = rng.random_range(0.0..4.0);
                let y = rng.random_range(0.0..4.0);
                let w = rng.random_range(0.5..2.0);
                let h = rng.random_range(0.5..2.0);
                let score = rng.random_range(0.0..1.0);
                det([x, y, x + w, y + h], phrase, score)
            };
            let subjects: Vec<Detection> = (0..n_s).map(|_| mk(&mut rng, "man")).collect();
            let objects: Vec<Detection> = (0..n_o).map(|_| mk(&mut rng, "cup")).collect();
            let conf = rng.random_range(0.0..0.8);
            let iou_t = rng.random_range(0.0..0.3);
            let labels = combine_pairs(&subjects, &objects, conf, iou_t, "hold");
            assert!(labels.len() <= n_s * n_o);
            for label in &labels {
                assert!(label.subject_score > conf && label.object_score > conf);
                assert!(label.iou > iou_t);
            }
            // raising the confidence threshold never adds labels
            let stricter = combine_pairs(&subjects, &objects, conf + 0.1, iou_t, "hold");
            assert!(stricter.len() <= labels.len());
        }
    }

    #[test]
    fn pseudo_label_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.jsonl");
        let mut labels = Vec::new();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for _ in 0..100 {
            let mk = |rng: &mut ChaCha12Rng, phrase: &str| {
                let x = rng.random_range(0.0..1.0);
                let y = rng.random_range(0.0..1.0);
                let x2 = rng.random_range(1.0..2.0);
                let y2 = rng.random_range(1.0..2.0);
                let score = rng.random_range(0.3..1.0);
                det([x, y, x2, y2], phrase, score)
            };
            let subjects = vec![mk(&mut rng, "man")];
            let objects = vec![mk(&mut rng, "cup")];
            labels.extend(combine_pairs(&subjects, &objects, 0.0, 0.0, "hold"));
        }
        assert!(labels.len() >= 90);
        write_pseudo_labels(&path, &labels).unwrap();
        let back = read_pseudo_labels(&path).unwrap();
        assert_eq!(labels.len(), back.len());
        for (a, b) in labels.iter().zip(&back) {
            assert_eq!(a.triplet.subject, b.triplet.subject);
            assert!((a.iou - b.iou).abs() < 1e-9);
            assert!((a.subject_score - b.subject_score).abs() < 1e-9);
            let ac = a.triplet.subject_box.unwrap().coords();
            let bc = b.triplet.subject_box.unwrap().coords();
            for (x, y) in ac.iter().zip(bc) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn empty_label_list_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        write_pseudo_labels(&path, &[]).unwrap();
        assert!(read_pseudo_labels(&path).unwrap().is_empty());
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(
            &path,
            "{\"subject\":\"a\",\"predicate\":\"p\",\"object\":\"b\",\"sbox\":[0,0,1,1],\"obox\":[0,0,1,1],\"sscore\":0.5,\"oscore\":0.5,\"iou\":0.1}\n{broken\n",
        )
        .unwrap();
        match read_pseudo_labels(&path) {
            Err(GroundingError::MalformedRecord { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected: {other:?}"),
        }
    }
}
