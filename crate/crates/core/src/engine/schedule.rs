use serde::{Deserialize, Serialize};

use crate::error::{contract, domain, Result};

/// Step-size schedule `ρ_t = (t + τ)^{-κ}`.
///
/// `κ ∈ (0.5, 1]` and `τ ≥ 0` make `Σ ρ_t` diverge while `Σ ρ_t²` converges.
/// With `τ = 1` the first step (`t = 0`) has `ρ = 1` and replaces the initial
/// globals entirely.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule")]
pub struct StepSchedule {
    tau: f64,
    kappa: f64,
}

#[derive(Deserialize)]
struct RawSchedule {
    tau: f64,
    kappa: f64,
}

impl TryFrom<RawSchedule> for StepSchedule {
    type Error = crate::Error;

    fn try_from(raw: RawSchedule) -> Result<Self> {
        StepSchedule::new(raw.tau, raw.kappa)
    }
}

impl StepSchedule {
    pub fn new(tau: f64, kappa: f64) -> Result<Self> {
        if !check_robbins_monro(tau, kappa) {
            return Err(contract(format!(
                "schedule (tau = {tau}, kappa = {kappa}) violates the Robbins-Monro conditions: \
                 need tau >= 0 and 0.5 < kappa <= 1"
            )));
        }
        Ok(Self { tau, kappa })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn rho(&self, t: u64) -> Result<f64> {
        step_size(t, self)
    }
}

/// True when `(τ, κ)` satisfies `Σρ = ∞, Σρ² < ∞`, i.e. `κ ∈ (0.5, 1]`, `τ ≥ 0`.
pub fn check_robbins_monro(tau: f64, kappa: f64) -> bool {
    tau.is_finite() && tau >= 0.0 && kappa > 0.5 && kappa <= 1.0
}

pub fn step_size(t: u64, schedule: &StepSchedule) -> Result<f64> {
    let base = t as f64 + schedule.tau;
    if base <= 0.0 {
        return Err(domain("step size undefined at t + tau = 0"));
    }
    Ok(base.powf(-schedule.kappa))
}
