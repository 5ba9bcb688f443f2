//! `|ε|` from the long-time fraction of two-pion decays.

use crate::error::{Error, Result};
use crate::params::KaonParams;

/// Fraction of two-pion decays into the charged mode.
pub const BRANCHING_CHARGED: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonEstimate {
    pub epsilon_abs: f64,
    /// Observed charged pairs over all decays.
    pub ratio: f64,
    /// `ratio` corrected for the neutral two-pion mode.
    pub ratio_total: f64,
    pub tau_factor_applied: bool,
    /// Poisson uncertainty from the pair count alone.
    pub sigma: f64,
}

/// `|ε|² = R_T τ_S/τ_L`, with `R_T` the total two-pion fraction among long-time decays.
/// Without the lifetime factor, `|ε|² = R_T`.
pub fn extract_epsilon(pairs: u64, decays: u64, params: &KaonParams, apply_tau_factor: bool) -> Result<EpsilonEstimate> {
    if decays == 0 {
        return Err(Error::invalid("decay count must be >= 1"));
    }
    if pairs > decays {
        return Err(Error::invalid(format!("pairs ({pairs}) exceed decays ({decays})")));
    }
    let ratio = pairs as f64 / decays as f64;
    let ratio_total = ratio / BRANCHING_CHARGED;
    let factor = if apply_tau_factor { params.tau_s() / params.tau_l() } else { 1.0 };
    let eps2 = ratio_total * factor;
    let epsilon_abs = eps2.sqrt();
    let sigma = if pairs > 0 { 0.5 * epsilon_abs / (pairs as f64).sqrt() } else { f64::INFINITY };
    Ok(EpsilonEstimate { epsilon_abs, ratio, ratio_total, tau_factor_applied: apply_tau_factor, sigma })
}
