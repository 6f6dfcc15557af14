//! Shared fixtures for the benchmarks.

use expower_core::{generate_dataset, GeneratorKind, LabeledDataset, SalientRegionKind, SyntheticSpec};

/// A default-sized synthetic dataset (500 x 50 train, 100 x 50 test).
pub fn synthetic(generator: GeneratorKind) -> (LabeledDataset, LabeledDataset) {
    let spec = SyntheticSpec::new(generator, SalientRegionKind::SmallMiddle, 7);
    let (train, test, _) = generate_dataset(&spec).expect("default spec is valid");
    (train, test)
}
