//! Experiment configuration: one JSON document covering scenes,
//! embeddings, selection, grounding, losses, and the distillation loop.
//! Defaults mirror the reference hyperparameters (confidence 0.25, IoU
//! 0.0, beta1 0.1, beta2 0.5); the query budget is pre-scaled to desk
//! scene sizes, with the full-scale K=900 / L=200 defaults living on the
//! CLI `select` subcommand where real token matrices arrive.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::text::{LlmConfig, TextError, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    /// Scenes per experiment run.
    pub count: usize,
    pub width: f64,
    pub height: f64,
    /// Interacting subject-object pairs per scene.
    pub interactions: usize,
    /// Non-interacting same-category distractor instances per scene.
    pub distractors: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            count: 200,
            width: 640.0,
            height: 480.0,
            interactions: 2,
            distractors: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub dim: usize,
    /// Gaussian noise added to every visual token.
    pub noise_sigma: f64,
    /// How strongly an interacting instance's token absorbs its predicate
    /// vector, in [0, 1].
    pub interaction_mix: f64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            noise_sigma: 0.25,
            interaction_mix: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    /// Query budget; clamped to the token count per scene.
    pub k: usize,
    /// Interaction-ranked prefix length; clamped to the effective k.
    pub l: usize,
    /// Balance between object and relation relevance in combined scoring.
    pub gamma_balance: f64,
    /// Probability of flipping a triplet's predicate before building
    /// interaction prompts, for robustness runs. 0 = ground-truth prompts.
    pub predicate_flip_prob: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            k: 6,
            l: 4,
            gamma_balance: 0.5,
            predicate_flip_prob: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroundingConfig {
    /// Detections at or below this confidence never become pseudo-labels.
    pub confidence_threshold: f64,
    /// Subject-object IoU must strictly exceed this.
    pub iou_threshold: f64,
    pub base_score_min: f64,
    pub base_score_max: f64,
    /// Score bonus for instances whose interaction predicate occurs in
    /// the prompt.
    pub interaction_bonus: f64,
}

impl Default for GroundingConfig {
    fn default() -> Self {
        Self {
            confidence_threshold: 0.25,
            iou_threshold: 0.0,
            base_score_min: 0.3,
            base_score_max: 0.7,
            interaction_bonus: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub alpha_focal: f64,
    pub gamma_focal: f64,
    pub class_weight: f64,
    pub l1_weight: f64,
    pub giou_weight: f64,
    /// Whether the structure-retention loss is restricted to the negative
    /// set (the default reading) or spans all pairs.
    pub rrd_negatives_only: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            beta1: 0.1,
            beta2: 0.5,
            alpha_focal: 0.25,
            gamma_focal: 2.0,
            class_weight: 2.0,
            l1_weight: 5.0,
            giou_weight: 2.0,
            rrd_negatives_only: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistillConfig {
    /// Scenes contributing edge features.
    pub scenes: usize,
    /// Instances per scene made into pairwise edges (caps the edge count).
    pub instances_per_scene: usize,
    /// Sigma of the gaussian perturbation defining the perturbed student.
    pub perturb_sigma: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    pub descent_steps: usize,
    pub descent_step_size: f64,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self {
            scenes: 4,
            instances_per_scene: 4,
            perturb_sigma: 0.5,
            scale_min: 0.5,
            scale_max: 2.0,
            descent_steps: 200,
            descent_step_size: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VocabularyConfig {
    pub objects: Vec<String>,
    pub predicates: Vec<String>,
    pub base_objects: Vec<String>,
    pub base_predicates: Vec<String>,
}

impl Default for VocabularyConfig {
    fn default() -> Self {
        let objects: Vec<String> = [
            "man", "woman", "dog", "horse", "surfboard", "bike", "kite", "ball", "zebra",
            "boat", "child", "cat",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let predicates: Vec<String> = [
            "hold", "ride", "carry", "throw", "wear", "eat", "push", "pull", "kick", "watch",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        // roughly 70/30 base/novel, the common open-vocabulary protocol
        let base_objects = objects[..8].to_vec();
        let base_predicates = predicates[..7].to_vec();
        Self {
            objects,
            predicates,
            base_objects,
            base_predicates,
        }
    }
}

impl VocabularyConfig {
    pub fn build(&self) -> Result<Vocabulary, TextError> {
        Vocabulary::with_base_split(
            self.objects.clone(),
            self.predicates.clone(),
            &self.base_objects,
            &self.base_predicates,
        )
    }
}

/// Everything a harness run needs; any subset may appear in the JSON file,
/// the rest falls back to defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub scene: SceneConfig,
    pub embedding: EmbeddingConfig,
    pub selection: SelectionConfig,
    pub grounding: GroundingConfig,
    pub losses: LossConfig,
    pub distill: DistillConfig,
    pub vocabulary: VocabularyConfig,
    pub llm: Option<LlmConfig>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| HarnessError::ConfigInvalid(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |msg: String| Err(HarnessError::ConfigInvalid(msg));
        if self.scene.count == 0 {
            return fail("scene.count must be positive".into());
        }
        if self.scene.interactions == 0 {
            return fail("scene.interactions must be positive".into());
        }
        if 2 * self.scene.interactions > self.vocabulary.objects.len() {
            return fail(format!(
                "{} interactions need {} distinct object categories, vocabulary has {}",
                self.scene.interactions,
                2 * self.scene.interactions,
                self.vocabulary.objects.len()
            ));
        }
        if !(self.scene.width > 0.0 && self.scene.height > 0.0) {
            return fail("scene extent must be positive".into());
        }
        if self.embedding.dim == 0 {
            return fail("embedding.dim must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.embedding.interaction_mix) {
            return fail("embedding.interaction_mix must be in [0, 1]".into());
        }
        if self.embedding.noise_sigma < 0.0 {
            return fail("embedding.noise_sigma must be nonnegative".into());
        }
        if self.selection.k == 0 {
            return fail("selection.k must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.selection.gamma_balance) {
            return fail("selection.gamma_balance must be in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.selection.predicate_flip_prob) {
            return fail("selection.predicate_flip_prob must be in [0, 1]".into());
        }
        if !self.grounding.confidence_threshold.is_finite()
            || !self.grounding.iou_threshold.is_finite()
        {
            return fail("grounding thresholds must be finite".into());
        }
        if self.grounding.base_score_min > self.grounding.base_score_max {
            return fail("grounding.base_score_min must not exceed max".into());
        }
        if self.losses.beta1 < 0.0 || self.losses.beta2 < 0.0 {
            return fail("loss weights must be nonnegative".into());
        }
        if self.distill.scenes == 0 || self.distill.instances_per_scene < 2 {
            return fail("distill needs at least one scene and two instances".into());
        }
        if self.vocabulary.objects.is_empty() || self.vocabulary.predicates.is_empty() {
            return fail("vocabulary must not be empty".into());
        }
        self.vocabulary
            .build()
            .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
        Ok(())
    }
}
