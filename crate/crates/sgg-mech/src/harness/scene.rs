//! Seeded synthetic scenes: interacting subject-object pairs with
//! overlapping boxes plus same-category non-interacting distractors, the
//! desk-scale stand-in for annotated images.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::rng;
use super::HarnessError;
use crate::geometry::BoundingBox;
use crate::text::{Triplet, Vocabulary};

/// One placed instance. `interaction_id` indexes into the scene's
/// ground-truth triplets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneInstance {
    pub category_id: usize,
    pub bbox: BoundingBox,
    pub interacting: bool,
    pub interaction_id: Option<usize>,
}

/// A generated scene. Interacting instances appear in exactly one
/// ground-truth triplet; distractors in none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScene {
    pub width: f64,
    pub height: f64,
    pub instances: Vec<SceneInstance>,
    pub gt_triplets: Vec<Triplet>,
    pub seed: u64,
}

impl SyntheticScene {
    pub fn interacting_indices(&self) -> Vec<usize> {
        self.instances
            .iter()
            .enumerate()
            .filter(|(_, inst)| inst.interacting)
            .map(|(i, _)| i)
            .collect()
    }

    /// Instance indices of the subject and object of a ground-truth
    /// triplet. Interacting instances are laid out pairwise in order.
    pub fn interaction_pair(&self, interaction_id: usize) -> (usize, usize) {
        (interaction_id * 2, interaction_id * 2 + 1)
    }
}

fn random_box(rng: &mut ChaCha12Rng, width: f64, height: f64) -> BoundingBox {
    let w = rng.random_range(0.1..0.3) * width;
    let h = rng.random_range(0.1..0.3) * height;
    let x1 = rng.random_range(0.0..(width - w));
    let y1 = rng.random_range(0.0..(height - h));
    BoundingBox::new(x1, y1, x1 + w, y1 + h)
}

/// A box overlapping `anchor`: its top-left corner is sampled inside the
/// anchor, so the intersection is never empty but its size varies.
fn overlapping_box(
    rng: &mut ChaCha12Rng,
    anchor: &BoundingBox,
    width: f64,
    height: f64,
) -> BoundingBox {
    let margin = 1e-3;
    let x1 = rng.random_range(anchor.x1..(anchor.x2 - margin).max(anchor.x1 + margin / 2.0));
    let y1 = rng.random_range(anchor.y1..(anchor.y2 - margin).max(anchor.y1 + margin / 2.0));
    let w = rng.random_range(0.1..0.3) * width;
    let h = rng.random_range(0.1..0.3) * height;
    let x2 = (x1 + w).min(width).max(x1 + margin);
    let y2 = (y1 + h).min(height).max(y1 + margin);
    BoundingBox::new(x1, y1, x2, y2)
}

/// Generate one scene: `interactions` overlapping subject-object pairs
/// whose categories are sampled without replacement across the scene (so
/// a prompt for one interaction never detects another's instances), then
/// `distractors` that copy the category of a random interacting instance
/// and overlap that instance's partner, so wrong pairs survive the IoU
/// gate downstream.
pub fn gen_scene(
    config: &ExperimentConfig,
    vocab: &Vocabulary,
    seed: u64,
) -> Result<SyntheticScene, HarnessError> {
    let n_objects = vocab.objects().len();
    let n_predicates = vocab.predicates().len();
    if n_objects < 2 * config.scene.interactions {
        return Err(HarnessError::ConfigInvalid(format!(
            "{} interactions need {} distinct object categories, vocabulary has {n_objects}",
            config.scene.interactions,
            2 * config.scene.interactions,
        )));
    }
    let mut rng = rng::substream_rng(seed, rng::stream::SCENE);
    let (width, height) = (config.scene.width, config.scene.height);

    let mut category_pool: Vec<usize> = (0..n_objects).collect();
    let mut instances = Vec::new();
    let mut gt_triplets = Vec::new();
    for interaction_id in 0..config.scene.interactions {
        let subject_cat = category_pool.remove(rng.random_range(0..category_pool.len()));
        let object_cat = category_pool.remove(rng.random_range(0..category_pool.len()));
        let predicate = rng.random_range(0..n_predicates);
        let subject_box = random_box(&mut rng, width, height);
        let object_box = overlapping_box(&mut rng, &subject_box, width, height);
        instances.push(SceneInstance {
            category_id: subject_cat,
            bbox: subject_box.with_category(subject_cat),
            interacting: true,
            interaction_id: Some(interaction_id),
        });
        instances.push(SceneInstance {
            category_id: object_cat,
            bbox: object_box.with_category(object_cat),
            interacting: true,
            interaction_id: Some(interaction_id),
        });
        gt_triplets.push(
            Triplet::new(
                &vocab.objects()[subject_cat],
                &vocab.predicates()[predicate],
                &vocab.objects()[object_cat],
            )
            .with_boxes(subject_box.with_category(subject_cat), object_box.with_category(object_cat)),
        );
    }

    let interacting_count = instances.len();
    for _ in 0..config.scene.distractors {
        let copied = rng.random_range(0..interacting_count);
        let interaction_id = instances[copied].interaction_id.unwrap();
        let (s, o) = (interaction_id * 2, interaction_id * 2 + 1);
        let partner = if copied == s { o } else { s };
        let partner_box = instances[partner].bbox;
        let bbox = overlapping_box(&mut rng, &partner_box, width, height);
        let category_id = instances[copied].category_id;
        instances.push(SceneInstance {
            category_id,
            bbox: bbox.with_category(category_id),
            interacting: false,
            interaction_id: None,
        });
    }

    Ok(SyntheticScene {
        width,
        height,
        instances,
        gt_triplets,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::iou;

    fn setup() -> (ExperimentConfig, Vocabulary) {
        let config = ExperimentConfig::default();
        let vocab = config.vocabulary.build().unwrap();
        (config, vocab)
    }

    #[test]
    fn same_seed_same_scene() {
        let (config, vocab) = setup();
        let a = gen_scene(&config, &vocab, 123).unwrap();
        let b = gen_scene(&config, &vocab, 123).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_differ() {
        let (config, vocab) = setup();
        let a = gen_scene(&config, &vocab, 1).unwrap();
        let b = gen_scene(&config, &vocab, 2).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn instance_counts_match_construction() {
        let (mut config, vocab) = setup();
        config.scene.interactions = 2;
        config.scene.distractors = 3;
        let scene = gen_scene(&config, &vocab, 7).unwrap();
        assert_eq!(scene.instances.len(), 7);
        assert_eq!(scene.interacting_indices().len(), 4);
        assert_eq!(scene.gt_triplets.len(), 2);
    }

    #[test]
    fn no_distractors_means_all_interacting() {
        let (mut config, vocab) = setup();
        config.scene.distractors = 0;
        let scene = gen_scene(&config, &vocab, 7).unwrap();
        assert!(scene.instances.iter().all(|i| i.interacting));
    }

    #[test]
    fn scene_invariants_hold_over_many_seeds() {
        let (config, vocab) = setup();
        for seed in 0..50 {
            let scene = gen_scene(&config, &vocab, seed).unwrap();
            // every gt triplet's boxes equal its pair's instance boxes
            for (id, gt) in scene.gt_triplets.iter().enumerate() {
                let (s, o) = scene.interaction_pair(id);
                assert!(gt.subject_box.unwrap().same_coords(&scene.instances[s].bbox));
                assert!(gt.object_box.unwrap().same_coords(&scene.instances[o].bbox));
                // the interacting pair overlaps strictly
                assert!(iou(&scene.instances[s].bbox, &scene.instances[o].bbox) > 0.0);
            }
            // interacting categories are distinct across the whole scene
            let cats: Vec<usize> = scene
                .interacting_indices()
                .iter()
                .map(|&i| scene.instances[i].category_id)
                .collect();
            let unique: std::collections::HashSet<usize> = cats.iter().copied().collect();
            assert_eq!(unique.len(), cats.len());
            // interacting instances appear in a triplet; distractors never do
            for inst in &scene.instances {
                assert_eq!(inst.interacting, inst.interaction_id.is_some());
                if let Some(id) = inst.interaction_id {
                    assert!(id < scene.gt_triplets.len());
                }
            }
            // boxes stay inside the extent
            for inst in &scene.instances {
                let b = &inst.bbox;
                assert!(b.x1 >= 0.0 && b.y1 >= 0.0 && b.x2 <= scene.width && b.y2 <= scene.height);
            }
        }
    }

    #[test]
    fn distractors_copy_interacting_categories() {
        let (config, vocab) = setup();
        let scene = gen_scene(&config, &vocab, 11).unwrap();
        let interacting_cats: std::collections::HashSet<usize> = scene
            .interacting_indices()
            .iter()
            .map(|&i| scene.instances[i].category_id)
            .collect();
        for inst in scene.instances.iter().filter(|i| !i.interacting) {
            assert!(interacting_cats.contains(&inst.category_id));
        }
    }
}
