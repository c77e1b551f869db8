use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::rerank::UserFeedback;
use crate::select::ConceptSlate;

/// Selects the slate concepts judged relevant. With `noise > 0` every
/// decision is flipped independently with that probability, drawn from a
/// generator seeded with `seed`.
pub fn simulate_user(slate: &ConceptSlate, judged: Option<&BTreeMap<String, u8>>, noise: f64, seed: u64) -> UserFeedback {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = noise.clamp(0.0, 1.0);
    let selected = slate
        .concept_ids()
        .filter(|id| {
            let relevant = judged.and_then(|j| j.get(*id)).is_some_and(|&r| r > 0);
            let flip = noise > 0.0 && rng.random_bool(noise);
            relevant != flip
        })
        .map(str::to_string)
        .collect();
    UserFeedback {
        query_id: slate.query_id.clone(),
        selected_concepts: selected,
    }
}
