//! Exponential-family primitives shared by the topic models.
//!
//! Special functions (`digamma`, `trigamma`, `ln_gamma`) are computed by
//! lifting the argument with the recurrence `f(x) = f(x + 1) - g(x)` into the
//! range where the asymptotic expansion is accurate, then summing the series.
//! Dirichlet and Beta helpers build on them: the expected log of a Dirichlet
//! or Beta variable is the gradient of its log-normalizer, which is what the
//! coordinate updates and the ELBO consume.
//!
//! Invalid parameters are rejected rather than clamped. A non-positive
//! concentration means an upstream update went wrong.

use std::f64::consts::PI;

use crate::error::{domain, Result};

const DIGAMMA_LIFT: f64 = 10.0;
const TRIGAMMA_LIFT: f64 = 10.0;
const LN_GAMMA_LIFT: f64 = 10.0;

/// B_{2k} / (2k) for k = 1..8.
const DIGAMMA_SERIES: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
];

/// B_{2k} for k = 1..7.
const TRIGAMMA_SERIES: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
];

/// B_{2k} / (2k (2k - 1)) for k = 1..7.
const STIRLING_SERIES: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
];

fn check_positive(x: f64, what: &str) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("{what} requires a finite positive argument, got {x}")))
    }
}

/// Unchecked digamma for arguments already known to be positive and finite.
pub(crate) fn psi(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < DIGAMMA_LIFT {
        shift += 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    let mut series = 0.0;
    let mut power = inv2;
    for c in DIGAMMA_SERIES {
        series += c * power;
        power *= inv2;
    }
    (x.ln() - 0.5 / x - series) - shift
}

pub(crate) fn psi1(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < TRIGAMMA_LIFT {
        shift += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut power = inv2 * inv;
    for c in TRIGAMMA_SERIES {
        series += c * power;
        power *= inv2;
    }
    shift + inv + 0.5 * inv2 + series
}

pub(crate) fn lgamma(mut x: f64) -> f64 {
    let mut log_shift = 0.0;
    while x < LN_GAMMA_LIFT {
        log_shift += x.ln();
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut power = inv;
    for c in STIRLING_SERIES {
        series += c * power;
        power *= inv2;
    }
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + series - log_shift
}

/// The digamma function Ψ(x), the derivative of ln Γ(x).
pub fn digamma(x: f64) -> Result<f64> {
    check_positive(x, "digamma")?;
    Ok(psi(x))
}

/// The trigamma function Ψ′(x).
pub fn trigamma(x: f64) -> Result<f64> {
    check_positive(x, "trigamma")?;
    Ok(psi1(x))
}

/// ln Γ(x) for positive x.
pub fn ln_gamma(x: f64) -> Result<f64> {
    check_positive(x, "ln_gamma")?;
    Ok(lgamma(x))
}

/// Concentration parameters of a Dirichlet distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletParams {
    concentration: Vec<f64>,
}

impl DirichletParams {
    pub fn new(concentration: Vec<f64>) -> Result<Self> {
        if concentration.len() < 2 {
            return Err(domain(format!(
                "a Dirichlet needs at least two components, got {}",
                concentration.len()
            )));
        }
        if let Some(bad) = concentration.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(domain(format!("Dirichlet concentration must be positive, got {bad}")));
        }
        Ok(Self { concentration })
    }

    /// Exchangeable Dirichlet with every entry equal to `value`.
    pub fn symmetric(dim: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; dim])
    }

    pub fn concentration(&self) -> &[f64] {
        &self.concentration
    }

    pub fn dim(&self) -> usize {
        self.concentration.len()
    }

    /// Mean of the distribution, `γ / Σγ`.
    pub fn mean(&self) -> Vec<f64> {
        let total: f64 = self.concentration.iter().sum();
        self.concentration.iter().map(|c| c / total).collect()
    }
}

/// Shape parameters of a Beta distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams {
    shape1: f64,
    shape2: f64,
}

impl BetaParams {
    pub fn new(shape1: f64, shape2: f64) -> Result<Self> {
        check_positive(shape1, "Beta shape1")?;
        check_positive(shape2, "Beta shape2")?;
        Ok(Self { shape1, shape2 })
    }

    pub fn shape1(&self) -> f64 {
        self.shape1
    }

    pub fn shape2(&self) -> f64 {
        self.shape2
    }

    pub fn mean(&self) -> f64 {
        self.shape1 / (self.shape1 + self.shape2)
    }
}

/// Unnormalized log-probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct LogWeights {
    values: Vec<f64>,
}

impl LogWeights {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(domain(format!("log weights must be finite, got {bad}")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `E[log θ_k] = Ψ(γ_k) − Ψ(Σ γ)` for θ ~ Dirichlet(γ).
pub fn dirichlet_expect_log(params: &DirichletParams) -> Vec<f64> {
    let mut out = vec![0.0; params.dim()];
    expect_log_simplex(params.concentration(), &mut out);
    out
}

/// Slice form of [`dirichlet_expect_log`] for callers that have already
/// validated the parameters. A length-one input yields `0`.
pub(crate) fn expect_log_simplex(concentration: &[f64], out: &mut [f64]) {
    let total = psi(concentration.iter().sum());
    for (o, &c) in out.iter_mut().zip(concentration) {
        *o = psi(c) - total;
    }
}

/// `(E[log V], E[log(1 − V)])` for V ~ Beta(a, b).
pub fn beta_expect_logs(params: BetaParams) -> (f64, f64) {
    let total = psi(params.shape1 + params.shape2);
    (psi(params.shape1) - total, psi(params.shape2) - total)
}

/// Log of the Dirichlet normalizing constant, `Σ ln Γ(γ_i) − ln Γ(Σ γ_i)`.
pub fn dirichlet_log_normalizer(params: &DirichletParams) -> f64 {
    log_normalizer_slice(params.concentration())
}

pub(crate) fn log_normalizer_slice(concentration: &[f64]) -> f64 {
    let total: f64 = concentration.iter().sum();
    concentration.iter().map(|&c| lgamma(c)).sum::<f64>() - lgamma(total)
}

/// Exponentiate and normalize log-weights onto the probability simplex.
///
/// The maximum is subtracted first so that no intermediate overflows.
pub fn normalize_exp(weights: &LogWeights) -> Result<Vec<f64>> {
    if weights.values.is_empty() {
        return Err(domain("normalize_exp needs at least one weight"));
    }
    let mut out = weights.values.clone();
    softmax_in_place(&mut out);
    Ok(out)
}

/// In-place version of [`normalize_exp`]; the slice must be non-empty and finite.
pub(crate) fn softmax_in_place(values: &mut [f64]) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in values.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in values.iter_mut() {
        *v /= total;
    }
}
