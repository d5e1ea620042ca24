//! Seeded random-number plumbing. The generator is ChaCha12 (portable,
//! reproducible across platforms); independent substreams are derived from
//! a master seed with SplitMix64 so scene-parallel execution never shares
//! generator state.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

/// One SplitMix64 scramble step.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th substream under `master`.
pub fn substream_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(splitmix64(index)))
}

/// Fresh generator for a substream.
pub fn substream_rng(master: u64, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(substream_seed(master, index))
}

/// Purpose tags keeping unrelated substreams of one master seed apart.
pub mod stream {
    pub const SCENE: u64 = 0x5ce0;
    pub const EMBED_MODEL: u64 = 0xe38d;
    pub const EMBED_NOISE: u64 = 0x0153;
    pub const GROUNDER: u64 = 0x9806;
    pub const DISTILL: u64 = 0xd157;
    pub const FLIP: u64 = 0xf11b;
}

/// Random orthonormal matrix (rows are the basis) via Gram-Schmidt on
/// gaussian draws.
pub fn random_orthogonal(dim: usize, rng: &mut ChaCha12Rng) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(dim);
    while rows.len() < dim {
        let mut v: Vec<f64> = (0..dim)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        for existing in &rows {
            let proj: f64 = v.iter().zip(existing).map(|(a, b)| a * b).sum();
            for (x, e) in v.iter_mut().zip(existing) {
                *x -= proj * e;
            }
        }
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1e-6 {
            for x in v.iter_mut() {
                *x /= len;
            }
            rows.push(v);
        }
    }
    rows
}

/// Apply `scale * Q` to a vector.
pub fn apply_linear(q: &[Vec<f64>], scale: f64, v: &[f64]) -> Vec<f64> {
    q.iter()
        .map(|row| scale * row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}
