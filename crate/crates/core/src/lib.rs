//! Giant-step gradient descent for two-layer networks on multi-index Gaussian
//! targets.
//!
//! The crate covers the full early-phase feature-learning toolkit:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`hermite`] | Hermite polynomials, quadrature, coefficients of scalar activations, 1-D leap index |
//! | [`polynomial`] | Sparse multivariate polynomials with exact Gaussian (Wick) expectations |
//! | [`target`] | Multi-index targets, data sampling, Hermite tensors, HOSVD, leap index |
//! | [`staircase`] | Subspace conditioning and the staircase sequence of learnable subspaces |
//! | [`network`] | Two-layer network, symmetric init, giant-step training, ridge, preprocessing, kernels |
//! | [`analysis`] | Alignment, spike+bulk decomposition, norm prediction, subspace recovery |
//! | [`cget`] | Conditional Gaussian-equivalent features and CK-vs-CL comparison |
//! | [`pipeline`] | End-to-end train → ridge → evaluate runs shared by experiments |
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. `std` only switches on runtime SIMD dispatch in the matrix
//! multiply and std float intrinsics; results are otherwise identical.
//!
//! All randomness flows through [`rng::substream`], so every experiment is
//! reproducible from a single `u64` seed.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analysis;
pub mod cget;
pub mod error;
pub mod hermite;
pub mod linalg;
pub mod network;
pub mod pipeline;
pub mod polynomial;
pub mod rng;
pub mod staircase;
pub mod stats;
pub mod target;

pub use error::{Error, Result};
pub use hermite::{Activation, HermiteSeries};
pub use network::{EtaRule, GdTrace, SecondLayerDist, TrainConfig, TwoLayerNet};
pub use polynomial::MultivariatePolynomial;
pub use staircase::Subspace;
pub use target::{Dataset, HermiteTensor, Link, MultiIndexTarget};

/// Dense column-major matrix used throughout the crate.
pub type Mat = nalgebra::DMatrix<f64>;
/// Dense column vector.
pub type Vector = nalgebra::DVector<f64>;
