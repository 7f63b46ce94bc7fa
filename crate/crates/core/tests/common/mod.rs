#![allow(dead_code)]
//! Reference F-measure matrices (datasets × methods) and helpers shared by
//! the integration tests.

pub mod oracles;

use std::path::PathBuf;

pub const GRAPH_VARIANT_METHODS: [&str; 14] = [
    "A||E BootEA MLP",
    "A||E BootEA RF",
    "A||E MultiKE MLP",
    "A||E MultiKE RF",
    "A||E RDGCN MLP",
    "A||E RDGCN RF",
    "A MLP",
    "A RF",
    "E BootEA MLP",
    "E BootEA RF",
    "E MultiKE MLP",
    "E MultiKE RF",
    "E RDGCN MLP",
    "E RDGCN RF",
];

pub const FRAMEWORK_METHODS: [&str; 5] = ["EAGER MLP", "EAGER RF", "DeepMatcher", "Magellan XGBoost", "Magellan RF"];

pub const SHALLOW: [[f64; 14]; 7] = [
    [0.885, 0.952, 0.958, 0.952, 0.925, 0.920, 0.968, 0.965, 0.623, 0.648, 0.383, 0.655, 0.650, 0.661],
    [0.751, 0.798, 0.789, 0.760, 0.784, 0.768, 0.808, 0.817, 0.631, 0.646, 0.571, 0.645, 0.638, 0.665],
    [0.995, 0.997, 0.997, 0.997, 0.995, 0.997, 0.997, 0.997, 0.579, 0.614, 0.617, 0.688, 0.559, 0.598],
    [0.993, 0.997, 0.994, 0.997, 0.995, 0.996, 0.997, 0.998, 0.562, 0.588, 0.537, 0.576, 0.547, 0.571],
    [0.967, 0.977, 0.988, 0.984, 0.969, 0.975, 0.979, 0.980, 0.874, 0.859, 0.911, 0.913, 0.874, 0.873],
    [0.938, 0.960, 0.973, 0.967, 0.940, 0.953, 0.965, 0.960, 0.821, 0.786, 0.873, 0.844, 0.807, 0.792],
    [0.973, 0.977, 0.983, 0.981, 0.966, 0.977, 0.980, 0.978, 0.874, 0.844, 0.871, 0.877, 0.857, 0.831],
];

pub const RICH: [[f64; 14]; 16] = [
    [0.775, 0.668, 0.881, 0.858, 0.805, 0.842, 0.827, 0.828, 0.764, 0.678, 0.853, 0.871, 0.718, 0.707],
    [0.934, 0.841, 0.945, 0.918, 0.897, 0.890, 0.868, 0.870, 0.938, 0.847, 0.939, 0.942, 0.808, 0.796],
    [0.870, 0.775, 0.986, 0.982, 0.974, 0.986, 0.972, 0.971, 0.837, 0.746, 0.952, 0.941, 0.947, 0.953],
    [0.983, 0.908, 0.995, 0.993, 0.977, 0.991, 0.978, 0.978, 0.975, 0.888, 0.973, 0.971, 0.947, 0.960],
    [0.923, 0.852, 0.986, 0.984, 0.966, 0.976, 0.947, 0.945, 0.891, 0.798, 0.957, 0.950, 0.937, 0.955],
    [0.970, 0.918, 0.992, 0.990, 0.968, 0.978, 0.956, 0.955, 0.946, 0.875, 0.961, 0.958, 0.934, 0.956],
    [0.868, 0.736, 0.978, 0.973, 0.950, 0.963, 0.922, 0.920, 0.806, 0.709, 0.952, 0.942, 0.907, 0.935],
    [0.965, 0.876, 0.991, 0.989, 0.963, 0.977, 0.937, 0.936, 0.942, 0.875, 0.977, 0.978, 0.921, 0.948],
    [0.873, 0.850, 0.887, 0.862, 0.768, 0.774, 0.810, 0.811, 0.868, 0.820, 0.850, 0.871, 0.645, 0.556],
    [0.962, 0.927, 0.951, 0.923, 0.756, 0.792, 0.845, 0.844, 0.959, 0.916, 0.917, 0.957, 0.610, 0.609],
    [0.980, 0.958, 0.990, 0.987, 0.991, 0.993, 0.975, 0.975, 0.959, 0.942, 0.949, 0.954, 0.963, 0.968],
    [0.993, 0.965, 0.995, 0.990, 0.983, 0.989, 0.976, 0.975, 0.979, 0.958, 0.953, 0.978, 0.921, 0.968],
    [0.943, 0.907, 0.989, 0.982, 0.954, 0.961, 0.944, 0.943, 0.901, 0.859, 0.956, 0.947, 0.872, 0.891],
    [0.965, 0.933, 0.993, 0.988, 0.926, 0.932, 0.943, 0.941, 0.934, 0.890, 0.970, 0.969, 0.779, 0.847],
    [0.925, 0.867, 0.981, 0.969, 0.947, 0.938, 0.920, 0.919, 0.866, 0.819, 0.948, 0.943, 0.866, 0.894],
    [0.968, 0.899, 0.989, 0.979, 0.897, 0.901, 0.925, 0.923, 0.925, 0.877, 0.959, 0.968, 0.742, 0.806],
];

pub const SHALLOW_FRAMEWORKS: [[f64; 5]; 7] = [
    [0.958, 0.952, 0.930, 0.974, 0.977],
    [0.789, 0.760, 0.743, 0.724, 0.727],
    [0.997, 0.997, 0.990, 0.998, 0.999],
    [0.994, 0.997, 0.994, 0.997, 0.998],
    [0.988, 0.984, 0.984, 0.995, 0.997],
    [0.973, 0.967, 0.987, 0.993, 0.994],
    [0.983, 0.981, 0.988, 0.993, 0.995],
];

pub const RICH_FRAMEWORKS: [[f64; 5]; 16] = [
    [0.881, 0.858, 0.876, 0.837, 0.822],
    [0.945, 0.918, 0.904, 0.863, 0.848],
    [0.986, 0.982, 0.980, 0.973, 0.972],
    [0.995, 0.993, 0.987, 0.975, 0.974],
    [0.986, 0.984, 0.968, 0.966, 0.960],
    [0.992, 0.990, 0.975, 0.973, 0.970],
    [0.978, 0.973, 0.954, 0.953, 0.951],
    [0.991, 0.989, 0.968, 0.971, 0.970],
    [0.887, 0.862, 0.925, 0.817, 0.815],
    [0.951, 0.923, 0.929, 0.834, 0.830],
    [0.990, 0.987, 0.992, 0.983, 0.982],
    [0.995, 0.990, 0.993, 0.985, 0.984],
    [0.989, 0.982, 0.972, 0.967, 0.966],
    [0.993, 0.988, 0.977, 0.969, 0.966],
    [0.981, 0.969, 0.956, 0.947, 0.945],
    [0.989, 0.979, 0.968, 0.963, 0.961],
];

/// Reference average-rank rows, same column order as the matrices.
pub const SHALLOW_RANKS: [f64; 14] = [
    7.786, 4.143, 2.929, 3.429, 6.643, 5.571, 2.786, 2.714, 11.929, 11.857, 11.714, 9.714, 12.214, 11.571,
];
pub const RICH_RANKS: [f64; 14] = [
    5.938, 11.094, 1.344, 3.000, 6.812, 5.375, 7.688, 8.281, 8.625, 12.625, 6.125, 5.656, 11.969, 10.469,
];
pub const SHALLOW_FRAMEWORK_RANKS: [f64; 5] = [3.286, 3.786, 4.000, 2.500, 1.429];
pub const RICH_FRAMEWORK_RANKS: [f64; 5] = [1.125, 2.312, 2.688, 3.938, 4.938];

/// Reference Friedman p-values.
pub const SHALLOW_P: f64 = 1.60e-13;
pub const RICH_P: f64 = 2.80e-20;
pub const SHALLOW_FRAMEWORK_P: f64 = 0.012;
pub const RICH_FRAMEWORK_P: f64 = 2.21e-11;

pub fn rows<const K: usize>(table: &[[f64; K]]) -> Vec<Vec<f64>> {
    table.iter().map(|r| r.to_vec()).collect()
}

pub fn names(methods: &[&str]) -> Vec<String> {
    methods.iter().map(|s| s.to_string()).collect()
}

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/perturbed500")
}
