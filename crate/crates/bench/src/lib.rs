//! Shared fixtures for the pipeline micro-benchmarks.

use ealm_core::bench::{generate, BenchSpec, Generator};
use ealm_core::grid::{quantize, BinaryGrid, Dataset, GridSpec, PlaneKind};

/// Training split of a benchmark generator at a fixed seed.
pub fn train_set(generator: Generator, n: usize) -> Dataset {
    let spec = BenchSpec {
        generator,
        n_train: n,
        n_test: 1,
        seed: 42,
    };
    generate(&spec).expect("generator fixture").0
}

/// The (x1, y) plane of a dataset on a square grid.
pub fn raster(ds: &Dataset, grid: usize) -> BinaryGrid {
    let spec = GridSpec::new(grid, grid, ds.input_range(0), ds.output_range())
        .expect("grid fixture");
    quantize(ds, PlaneKind::InputOutput(0), spec).expect("plane fixture")
}
