//! Stochastic variational inference for conjugate exponential-family
//! models, with latent Dirichlet allocation and the hierarchical Dirichlet
//! process topic model as instances.
//!
//! - [`expfam`]: special functions and expected sufficient statistics.
//! - [`corpus`]: bag-of-words documents, UCI loading, held-out splits, synthetic corpora.
//! - [`engine`]: the generic SVI loop, batch VI, step sizes and checkpoints.
//! - [`lda`], [`hdp`]: the two models.
//! - [`eval`]: held-out predictive likelihood and topic matching.

pub mod corpus;
pub mod engine;
mod error;
pub mod eval;
pub mod expfam;
pub mod hdp;
pub mod lda;
pub mod random;

pub use error::{Error, Result};
