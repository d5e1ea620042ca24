//! Encoder-free embedding stand-in: seeded unit vectors per category, with
//! visual tokens mixing in their interaction's predicate vector, and
//! interaction tokens synthesized as normalized sums of the decomposed
//! pair's category vectors.

use rand::prelude::*;
use rand_distr::StandardNormal;

use super::config::EmbeddingConfig;
use super::rng;
use super::scene::SyntheticScene;
use super::HarnessError;
use crate::selection::{TokenMatrix, TokenRole};
use crate::text::{Triplet, Vocabulary};

/// Per-category unit vectors for objects and predicates, deterministic
/// given the seed.
#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    dim: usize,
    object_vectors: Vec<Vec<f64>>,
    predicate_vectors: Vec<Vec<f64>>,
    object_names: Vec<String>,
    predicate_names: Vec<String>,
    pub noise_sigma: f64,
    pub interaction_mix: f64,
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    v
}

fn unit_vector(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    normalize((0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
}

impl EmbeddingModel {
    pub fn new(vocab: &Vocabulary, config: &EmbeddingConfig, seed: u64) -> Self {
        let mut rng = rng::substream_rng(seed, rng::stream::EMBED_MODEL);
        let object_vectors = vocab
            .objects()
            .iter()
            .map(|_| unit_vector(config.dim, &mut rng))
            .collect();
        let predicate_vectors = vocab
            .predicates()
            .iter()
            .map(|_| unit_vector(config.dim, &mut rng))
            .collect();
        Self {
            dim: config.dim,
            object_vectors,
            predicate_vectors,
            object_names: vocab.objects().to_vec(),
            predicate_names: vocab.predicates().to_vec(),
            noise_sigma: config.noise_sigma,
            interaction_mix: config.interaction_mix,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn object_vector(&self, name: &str) -> Result<&[f64], HarnessError> {
        self.object_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.object_vectors[i].as_slice())
            .ok_or_else(|| HarnessError::UnknownCategory(name.to_string()))
    }

    pub fn predicate_vector(&self, name: &str) -> Result<&[f64], HarnessError> {
        self.predicate_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.predicate_vectors[i].as_slice())
            .ok_or_else(|| HarnessError::UnknownCategory(name.to_string()))
    }

    /// All object category vectors, in vocabulary order.
    pub fn object_tokens(&self) -> TokenMatrix {
        TokenMatrix::from_rows(&self.object_vectors, TokenRole::ObjectClass)
            .expect("category vectors share one dimension")
    }

    pub fn relation_tokens(&self) -> TokenMatrix {
        TokenMatrix::from_rows(&self.predicate_vectors, TokenRole::RelationClass)
            .expect("category vectors share one dimension")
    }
}

/// The four token matrices of one embedded scene.
#[derive(Debug, Clone)]
pub struct SceneEmbedding {
    pub visual: TokenMatrix,
    pub object_tokens: TokenMatrix,
    pub relation_tokens: TokenMatrix,
    pub interaction_tokens: TokenMatrix,
}

/// Embed a scene: each visual token is
/// `normalize(category + interaction_mix * predicate [if interacting] + gaussian(noise))`,
/// the class token matrices are the category vectors, and interaction
/// tokens come from the scene's own ground-truth triplets.
pub fn embed_scene(
    scene: &SyntheticScene,
    model: &EmbeddingModel,
    vocab: &Vocabulary,
) -> Result<SceneEmbedding, HarnessError> {
    let mut noise_rng = rng::substream_rng(scene.seed, rng::stream::EMBED_NOISE);
    let mut visual_rows = Vec::with_capacity(scene.instances.len());
    for instance in &scene.instances {
        let category = vocab
            .objects()
            .get(instance.category_id)
            .ok_or_else(|| HarnessError::UnknownCategory(format!("#{}", instance.category_id)))?;
        let mut token = model.object_vector(category)?.to_vec();
        if let Some(id) = instance.interaction_id {
            let predicate = model.predicate_vector(&scene.gt_triplets[id].predicate)?;
            for (t, p) in token.iter_mut().zip(predicate) {
                *t += model.interaction_mix * p;
            }
        }
        for t in token.iter_mut() {
            let draw: f64 = noise_rng.sample(StandardNormal);
            *t += model.noise_sigma * draw;
        }
        visual_rows.push(normalize(token));
    }
    let visual = TokenMatrix::from_rows(&visual_rows, TokenRole::Visual)
        .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
    Ok(SceneEmbedding {
        visual,
        object_tokens: model.object_tokens(),
        relation_tokens: model.relation_tokens(),
        interaction_tokens: interaction_tokens(&scene.gt_triplets, model)?,
    })
}

/// Interaction tokens of decomposed triplets: for each triplet, one row
/// per interaction pair, `normalize(subject + predicate)` and
/// `normalize(predicate + object)`.
pub fn interaction_tokens(
    triplets: &[Triplet],
    model: &EmbeddingModel,
) -> Result<TokenMatrix, HarnessError> {
    let mut rows = Vec::with_capacity(triplets.len() * 2);
    for t in triplets {
        let subject = model.object_vector(&t.subject)?;
        let predicate = model.predicate_vector(&t.predicate)?;
        let object = model.object_vector(&t.object)?;
        rows.push(normalize(
            subject.iter().zip(predicate).map(|(a, b)| a + b).collect(),
        ));
        rows.push(normalize(
            predicate.iter().zip(object).map(|(a, b)| a + b).collect(),
        ));
    }
    if rows.is_empty() {
        return Ok(TokenMatrix::empty(model.dim(), TokenRole::Interaction));
    }
    TokenMatrix::from_rows(&rows, TokenRole::Interaction)
        .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))
}
