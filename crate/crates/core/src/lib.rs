//! Rate-distortion analysis of length-constrained summarizers.
//!
//! A summarizer maps a text `t` to a summary `s` no longer than `t`. Its
//! rate is the per-symbol mutual information between text and summary
//! given the text length, and the summarizer rate-distortion function
//! `R_S(D)` is the least such rate at expected distortion `D`.
//!
//! * [`discrete`] holds sources, distortion matrices, kernels and their
//!   direct evaluation.
//! * [`blahut`] computes `R_S(D)` for discrete sources by Blahut-Arimoto
//!   iteration per length class.
//! * [`gaussian`] gives the closed form for Gaussian embeddings by reverse
//!   water-filling.
//! * [`pipeline`] estimates that closed form from an embedding dataset.

pub mod blahut;
pub mod curve;
pub mod discrete;
pub mod error;
pub mod gaussian;
pub mod instance;
pub mod pipeline;

pub use blahut::{ba_curve, ba_point, grid_oracle_rd, BaOptions, BaSweep};
pub use curve::{OutputFormat, RDCurve, RDPoint};
pub use discrete::{
    conditional_mutual_information, d_max, expected_distortion, simulate_block_converse,
    summarizer_rate, DiscreteSource, DistortionMatrix, SummarizerKernel,
};
pub use error::{Error, Result};
pub use gaussian::{gaussian_curve, solve_for_distortion, SpectrumSet};
pub use instance::Instance;
pub use pipeline::{approx_rs_curve, read_embeddings, write_embeddings, EmbeddingSet};
