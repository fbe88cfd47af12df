//! Deterministic offline embedding provider.
//!
//! Texts are mapped to unit vectors by a hashed random projection that is
//! bit-stable across platforms: FNV-1a-64 token hashing feeding SplitMix64
//! streams. It carries no semantics beyond token overlap, which is exactly
//! what tests and offline runs need.

use crate::rng::{fnv1a64, SplitMix64};

/// Embeds `text` as a deterministic unit vector of length `dimension`.
///
/// Tokens are maximal alphanumeric runs, lowercased. Each token seeds its own
/// SplitMix64 stream with `fnv1a64(token) ^ seed`, draws `dimension` values
/// in [-1, 1], and the token vectors are summed and L2-normalized. A text
/// with no tokens yields the first basis vector. Values are rounded through
/// f32 so in-memory vectors match the on-disk cache encoding exactly.
pub fn mock_embed(text: &str, seed: u64, dimension: usize) -> Vec<f64> {
    assert!(dimension >= 2, "embedding dimension must be >= 2");
    let mut sum = vec![0.0f64; dimension];
    let mut token_count = 0usize;

    for token in text.split(|c: char| !c.is_alphanumeric()) {
        if token.is_empty() {
            continue;
        }
        let lowered = token.to_lowercase();
        let stream_seed = fnv1a64(lowered.as_bytes()) ^ seed;
        let mut rng = SplitMix64::new(stream_seed);
        for slot in sum.iter_mut() {
            *slot += rng.next_signed_unit();
        }
        token_count += 1;
    }

    if token_count == 0 {
        let mut basis = vec![0.0; dimension];
        basis[0] = 1.0;
        return basis;
    }

    let norm = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-12 {
        let mut basis = vec![0.0; dimension];
        basis[0] = 1.0;
        return basis;
    }
    sum.iter().map(|x| (x / norm) as f32 as f64).collect()
}
