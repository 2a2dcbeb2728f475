//! Seeded randomness.
//!
//! Every stochastic component draws from ChaCha8 seeded through
//! `SeedableRng::seed_from_u64`. The stream is platform independent, so a
//! seed pins down corpora, initializations, and minibatch sequences exactly.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rand::SeedableRng;

use crate::expfam::softmax_in_place;

pub type SeededRng = ChaCha8Rng;

/// Generator for `seed`, on ChaCha stream `stream`.
///
/// Distinct streams of the same seed are independent, which lets one user
/// seed drive several consumers (initialization, sampling) without overlap.
pub fn seeded_rng(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draw from an exchangeable Dirichlet(concentration, ..., concentration).
///
/// Gamma variates are produced in log space (`G = G' · U^{1/a}` with
/// `G' ~ Gamma(a + 1)`) so tiny concentrations do not underflow to an all-zero
/// vector.
pub fn sample_symmetric_dirichlet<R: Rng + ?Sized>(rng: &mut R, dim: usize, concentration: f64) -> Vec<f64> {
    let gamma = Gamma::new(concentration + 1.0, 1.0).expect("positive concentration");
    let mut logs: Vec<f64> = (0..dim)
        .map(|_| {
            let g: f64 = gamma.sample(rng);
            // open interval (0, 1]
            let u: f64 = 1.0 - rng.random::<f64>();
            g.ln() + u.ln() / concentration
        })
        .collect();
    softmax_in_place(&mut logs);
    logs
}
