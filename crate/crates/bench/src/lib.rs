//! Shared inputs for the criterion benchmarks.

use pn2sc::{generate_sp_net, GenSpec, ModelStore};

/// Net sizes, in places, exercised by the benchmarks.
pub const SIZES: [usize; 3] = [1_000, 5_000, 20_000];

/// A generated series-parallel net with `places` places.
pub fn net(places: usize, seed: u64) -> ModelStore {
    generate_sp_net(&GenSpec::new(places, seed))
        .expect("valid generator spec")
        .to_store()
        .expect("generated nets are well formed")
}
