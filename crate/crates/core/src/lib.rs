//! Spectral analysis of deep graph convolutions.
//!
//! Message passing of the form `X <- A X W` is power iteration on the
//! Kronecker product `W^T (x) A`, so deep stacks of graph convolutions
//! drive the state toward a rank-one matrix whose columns are multiples of
//! the aggregation matrix's dominant eigenvector. This crate provides:
//!
//! * dense linear algebra primitives and power-iteration machinery,
//! * graph structure matrices and the built-in karate-club dataset,
//! * smoothness metrics (two Dirichlet energies and the rank-one distance),
//! * forward-only, randomly initialised implementations of 15 message
//!   passing variants,
//! * an executable property suite for the spectral claims, and
//! * the depth-sweep experiment harness behind the CLI.

pub mod conv;
pub mod eigen;
pub mod experiment;
pub mod graph;
pub mod matrix;
pub mod metrics;
pub mod plot;
pub mod power;
pub mod rng;
pub mod verify;

pub use eigen::{dense_eigenvalues, EigenPair};
pub use graph::{karate_club, load_edge_list, structure_matrix, Graph, StructureKind, StructureMatrix};
pub use matrix::{DenseMatrix, LinalgError};
pub use metrics::{
    classify_collapse, dirichlet_energy, normalized_dirichlet_energy, rank_one_distance,
    MetricRecord, RecordStatus, Verdict,
};
pub use power::{dominant_left_right_factors, power_iteration, spectral_norm, PowerIterationResult};
