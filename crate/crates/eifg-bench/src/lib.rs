//! Shared fixtures for the stepping benchmarks (see `benches/`).

use eifg_core::{build_grid, DomainSpec, Grid, PhysicalField};
use ndarray::{ArrayD, IxDyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Periodic cube `[0, 2 pi]^3` at resolution `n` per axis.
pub fn cube_grid(n: usize) -> Grid {
    build_grid(&DomainSpec::unit_torus(3).unwrap(), &[n, n, n]).unwrap()
}

/// Seeded random field, the worst case for transform throughput.
pub fn random_field(grid: &Grid, seed: u64) -> PhysicalField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = ArrayD::from_shape_fn(IxDyn(grid.sizes()), |_| rng.random::<f64>() - 0.5);
    PhysicalField::new(grid.clone(), values).unwrap()
}
