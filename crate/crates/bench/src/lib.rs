//! Shared fixtures for the criterion benches.

use std::sync::Arc;

use fphi_core::{build_space, catalog_lookup, decompose, Field, SpectralDecomposition};

pub fn sd(name: &str, level: u32) -> SpectralDecomposition {
    let graph = build_space(&catalog_lookup(name).unwrap(), level).unwrap();
    decompose(Arc::new(graph)).unwrap()
}

pub fn noise_field(sd: &SpectralDecomposition, seed: u64) -> Field {
    let rng = fphi_core::rng::CounterRng::new(seed, 0);
    Field::new(
        (0..sd.graph().vertex_count())
            .map(|i| rng.normal(i as u64, 0, 0))
            .collect(),
    )
}
