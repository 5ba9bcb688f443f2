//! Two-pion intensity of an initial `K0` and its relative term weights.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expsum::ExpSeries;
use crate::params::{DecayModel, KaonParams};
use crate::single::{Channel, SuperpositionState};

/// Term weights of `e^{-Γ_S t} + w_L e^{-Γ_L t} + w_int e^{-Γ̄t} cos(Δm t + φ)`,
/// normalized to the short-lived coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityWeights {
    pub long: f64,
    pub interference: f64,
    pub phase: f64,
}

impl IntensityWeights {
    /// `√w_L / w_int`.
    pub fn signature(&self) -> Result<f64> {
        if self.interference == 0.0 {
            return Err(Error::invalid("signature undefined without interference (ε = 0)"));
        }
        Ok(self.long.sqrt() / self.interference)
    }
}

/// Unnormalized pair-channel density of the model, as a series.
fn raw_series(model: DecayModel, params: &KaonParams) -> ExpSeries {
    let state = SuperpositionState::kaon_channel(params, Channel::Pair);
    match model {
        DecayModel::Standard => state.survival_series().neg_derivative(),
        DecayModel::Hybrid => state.survival_series(),
        DecayModel::TimeOperator => state.time_operator_series(),
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Exact weights obtained from the amplitudes of the model.
pub fn intensity_weights(model: DecayModel, params: &KaonParams) -> Result<IntensityWeights> {
    let (gs, gl) = (params.gamma_s(), params.gamma_l());
    let mut short = 0.0;
    let mut long = 0.0;
    let mut cross = Complex64::new(0.0, 0.0);
    for term in raw_series(model, params).terms() {
        let z = term.rate;
        if z.im != 0.0 {
            // Re(c e^{-zt}) = |c| e^{-Re z t} cos(|Im z| t + φ)
            cross += if z.im > 0.0 { term.coeff.conj() } else { term.coeff };
        } else if close(z.re, gs) && !close(gs, gl) {
            short += term.coeff.re;
        } else if close(z.re, gl) && !close(gs, gl) {
            long += term.coeff.re;
        } else if close(gs, gl) {
            short += term.coeff.re;
        } else {
            return Err(Error::Numerical(format!("unexpected rate {z} in intensity")));
        }
    }
    if !(short > 0.0) {
        return Err(Error::DegenerateState("no short-lived two-pion component".into()));
    }
    Ok(IntensityWeights { long: long / short, interference: cross.norm() / short, phase: cross.arg() })
}

/// Weights of the closed-form intensities usually quoted for the three models:
/// `|ε|²Γ_L/Γ_S` and `|ε|/√2` (standard), `|ε|²Γ_L/Γ_S` and `2|ε|√(Γ_L/Γ_S)` (time operator),
/// `|ε|²` and `2|ε|` (hybrid). Phases are the exact ones.
///
/// The quoted standard interference weight is smaller than the exact
/// `2|ε|√(Γ̄²+Δm²)/Γ_S` by `2(1+Γ_L/Γ_S)` at `Δm = Γ̄`; see [`intensity_weights`].
pub fn quoted_weights(model: DecayModel, params: &KaonParams) -> Result<IntensityWeights> {
    let eps = params.epsilon().norm();
    let ratio = params.gamma_l() / params.gamma_s();
    let phase = intensity_weights(model, params)?.phase;
    let (long, interference) = match model {
        DecayModel::Standard => (eps * eps * ratio, eps * FRAC_1_SQRT_2),
        DecayModel::TimeOperator => (eps * eps * ratio, 2.0 * eps * ratio.sqrt()),
        DecayModel::Hybrid => (eps * eps, 2.0 * eps),
    };
    Ok(IntensityWeights { long, interference, phase })
}

/// `√w_L / w_int` from the quoted closed forms: `√2·√(Γ_L/Γ_S)` standard, `1/2` otherwise.
pub fn weight_ratio_signature(model: DecayModel, params: &KaonParams) -> Result<f64> {
    require_violation(params)?;
    quoted_weights(model, params)?.signature()
}

/// `√w_L / w_int` from the exact weights; differs from [`weight_ratio_signature`] only for the standard model.
pub fn exact_weight_ratio_signature(model: DecayModel, params: &KaonParams) -> Result<f64> {
    require_violation(params)?;
    intensity_weights(model, params)?.signature()
}

fn require_violation(params: &KaonParams) -> Result<()> {
    if params.epsilon().norm() == 0.0 {
        Err(Error::invalid("signature undefined for ε = 0"))
    } else {
        Ok(())
    }
}

/// Intensity shape with its short-lived coefficient set to one.
#[derive(Debug, Clone)]
pub struct IntensityShape {
    series: ExpSeries,
}

impl IntensityShape {
    pub fn new(model: DecayModel, params: &KaonParams) -> Result<Self> {
        Ok(Self::from_weights(&intensity_weights(model, params)?, params))
    }

    pub fn from_weights(w: &IntensityWeights, params: &KaonParams) -> Self {
        let mut series = ExpSeries::new();
        series.push(Complex64::new(1.0, 0.0), Complex64::new(params.gamma_s(), 0.0));
        if w.long != 0.0 {
            series.push(Complex64::new(w.long, 0.0), Complex64::new(params.gamma_l(), 0.0));
        }
        if w.interference != 0.0 {
            // w cos(Δm t + φ) e^{-Γ̄t} = Re(w e^{iφ} e^{-(Γ̄ - iΔm)t})
            series.push(
                Complex64::from_polar(w.interference, w.phase),
                Complex64::new(params.gamma_bar(), -params.delta_m()),
            );
        }
        Self { series }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.series.eval(t)
    }

    pub fn integral_between(&self, a: f64, b: f64) -> f64 {
        self.series.integral_between(a, b)
    }
}

/// Pair-channel intensity `i0·(e^{-Γ_S t} + w_L e^{-Γ_L t} + w_int e^{-Γ̄t} cos(Δm t + φ))` with exact weights.
pub fn cronin_fitch_intensity(model: DecayModel, params: &KaonParams, t: f64, i0: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("time must be finite and >= 0, got {t}")));
    }
    if !(i0 > 0.0) || !i0.is_finite() {
        return Err(Error::invalid(format!("i0 must be > 0, got {i0}")));
    }
    if (params.epsilon() + 1.0).norm() == 0.0 {
        return Err(Error::invalid("ε = -1 leaves no K0 component"));
    }
    Ok(i0 * IntensityShape::new(model, params)?.eval(t))
}
