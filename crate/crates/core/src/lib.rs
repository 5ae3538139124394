//! Retrieval-augmented risk reports for AI models.
//!
//! The numeric kernels in [`retrieval`] are generic over [`scalar::Scalar`];
//! the aliases below fix the common precisions.

pub mod corpus;
pub mod evaluation;
pub mod generation;
pub mod providers;
pub mod report;
pub mod retrieval;
pub mod scalar;
pub mod text;

pub type SparseIndexF64 = retrieval::SparseIndex<f64>;
pub type SparseIndexF32 = retrieval::SparseIndex<f32>;
pub type DenseIndexF64 = retrieval::DenseIndex<f64>;
pub type DenseIndexF32 = retrieval::DenseIndex<f32>;
