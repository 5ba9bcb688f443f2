//! Correlated kaon pairs: joint survival and joint decay densities for the
//! antisymmetric-in-time (alpha) and the total-time (beta) families.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expsum::ExpSeries2;
use crate::params::{ComplexEnergy, DecayModel, KaonParams};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `K_L(l)K_S(r) - e^{iα} K_S(l)K_L(r)`.
    Alpha,
    /// `K_L(l)K_L(r) - e^{iβ} K_S(l)K_S(r)`.
    Beta,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "alpha" => Ok(Family::Alpha),
            "beta" => Ok(Family::Beta),
            other => Err(Error::invalid(format!("unknown family '{other}' (alpha|beta)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntangledState {
    family: Family,
    phase: f64,
    params: KaonParams,
}

#[derive(Debug, Clone, Copy)]
struct AmpTerm {
    coeff: Complex64,
    left: ComplexEnergy,
    right: ComplexEnergy,
}

impl EntangledState {
    pub fn new(family: Family, phase: f64, params: KaonParams) -> Result<Self> {
        if !phase.is_finite() {
            return Err(Error::invalid("phase must be finite"));
        }
        Ok(Self { family, phase, params })
    }

    pub fn alpha(params: KaonParams, phase: f64) -> Result<Self> {
        Self::new(Family::Alpha, phase, params)
    }

    pub fn beta(params: KaonParams, phase: f64) -> Result<Self> {
        Self::new(Family::Beta, phase, params)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn params(&self) -> &KaonParams {
        &self.params
    }

    /// Weight of the two-pion/two-pion amplitude, `|ε|²/(2|1-ε²|²)`.
    pub fn prefactor(&self) -> f64 {
        let eps = self.params.epsilon();
        eps.norm_sqr() / (2.0 * (Complex64::new(1.0, 0.0) - eps * eps).norm_sqr())
    }

    fn terms(&self) -> [AmpTerm; 2] {
        let (s, l) = (self.params.energy_s(), self.params.energy_l());
        let one = Complex64::new(1.0, 0.0);
        let second = -Complex64::from_polar(1.0, self.phase);
        match self.family {
            Family::Alpha => [
                AmpTerm { coeff: one, left: l, right: s },
                AmpTerm { coeff: second, left: s, right: l },
            ],
            Family::Beta => [
                AmpTerm { coeff: one, left: l, right: l },
                AmpTerm { coeff: second, left: s, right: s },
            ],
        }
    }

    fn weighted_terms(&self) -> [AmpTerm; 2] {
        self.terms().map(|t| AmpTerm {
            coeff: t.coeff * (t.left.width() * t.right.width()).sqrt(),
            ..t
        })
    }

    /// Joint amplitude and `-(∂_l+∂_r)` of it, grouping terms of equal total energy
    /// so the derivative stays accurate where the amplitude cancels.
    fn amplitude_and_flux(terms: &[AmpTerm; 2], tl: f64, tr: f64) -> (Complex64, Complex64) {
        let phases: Vec<Complex64> = terms
            .iter()
            .map(|t| t.coeff * (-I * (t.left.value() * tl + t.right.value() * tr)).exp())
            .collect();
        let psi = phases[0] + phases[1];
        let s0 = terms[0].left.value() + terms[0].right.value();
        let s1 = terms[1].left.value() + terms[1].right.value();
        let flux = if s0 == s1 {
            I * s0 * psi
        } else {
            I * s0 * phases[0] + I * s1 * phases[1]
        };
        (psi, flux)
    }

    /// `P¹¹_S(tl, tr)`: probability that both sides are still undecayed in the two-pion channel.
    pub fn joint_survival(&self, tl: f64, tr: f64) -> f64 {
        let (psi, _) = Self::amplitude_and_flux(&self.terms(), tl, tr);
        self.prefactor() * psi.norm_sqr()
    }

    fn series(terms: &[AmpTerm; 2], scale: f64) -> ExpSeries2 {
        let mut s = ExpSeries2::new();
        for j in 0..2 {
            for k in j..2 {
                let fold = if j == k { 1.0 } else { 2.0 };
                let coeff = terms[j].coeff * terms[k].coeff.conj() * fold * scale;
                let zl = I * (terms[j].left.value() - terms[k].left.value().conj());
                let zr = I * (terms[j].right.value() - terms[k].right.value().conj());
                s.push(coeff, zl, zr);
            }
        }
        s
    }

    pub fn survival_series(&self) -> ExpSeries2 {
        Self::series(&self.terms(), self.prefactor())
    }
}

/// Joint decay density of one model for one entangled state.
///
/// The standard density is `-(∂_l+∂_r)P¹¹_S` times `calibration` and is not
/// renormalized. The hybrid and time-operator densities integrate to one over
/// the positive quadrant.
#[derive(Debug, Clone)]
pub struct JointLaw {
    model: DecayModel,
    state: EntangledState,
    calibration: f64,
    norm: f64,
    series: ExpSeries2,
}

impl JointLaw {
    pub fn new(model: DecayModel, state: EntangledState, calibration: f64) -> Result<Self> {
        if !(calibration > 0.0) || !calibration.is_finite() {
            return Err(Error::invalid("calibration must be positive and finite"));
        }
        let pref = state.prefactor();
        let (series, norm) = match model {
            DecayModel::Standard => {
                let s = state.survival_series().neg_total_derivative().scaled(calibration);
                (s, 1.0)
            }
            DecayModel::Hybrid | DecayModel::TimeOperator => {
                let raw = if model == DecayModel::Hybrid {
                    EntangledState::series(&state.terms(), 1.0)
                } else {
                    EntangledState::series(&state.weighted_terms(), 1.0)
                };
                raw.check_decaying()?;
                let total = raw.quadrant_integral();
                if !(pref > 0.0) || !(total > 0.0) {
                    return Err(Error::DegenerateState("entangled state carries no two-pion signal".into()));
                }
                (raw.scaled(1.0 / total), total)
            }
        };
        Ok(Self { model, state, calibration, norm, series })
    }

    pub fn model(&self) -> DecayModel {
        self.model
    }

    pub fn state(&self) -> &EntangledState {
        &self.state
    }

    pub fn series(&self) -> &ExpSeries2 {
        &self.series
    }

    pub fn pdf(&self, tl: f64, tr: f64) -> f64 {
        match self.model {
            DecayModel::Standard => {
                let (psi, flux) = EntangledState::amplitude_and_flux(&self.state.terms(), tl, tr);
                self.calibration * self.state.prefactor() * 2.0 * (psi.conj() * flux).re
            }
            DecayModel::Hybrid => {
                let (psi, _) = EntangledState::amplitude_and_flux(&self.state.terms(), tl, tr);
                psi.norm_sqr() / self.norm
            }
            DecayModel::TimeOperator => {
                let (psi, _) = EntangledState::amplitude_and_flux(&self.state.weighted_terms(), tl, tr);
                psi.norm_sqr() / self.norm
            }
        }
    }
}

fn check_times(tl: f64, tr: f64) -> Result<()> {
    if tl.is_finite() && tr.is_finite() && tl >= 0.0 && tr >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("decay times must be finite and >= 0"))
    }
}

pub fn joint_survival(state: &EntangledState, tl: f64, tr: f64) -> Result<f64> {
    check_times(tl, tr)?;
    Ok(state.joint_survival(tl, tr))
}

pub fn joint_pdf(model: DecayModel, state: &EntangledState, tl: f64, tr: f64, calibration: f64) -> Result<f64> {
    check_times(tl, tr)?;
    Ok(JointLaw::new(model, *state, calibration)?.pdf(tl, tr))
}

/// Rectangular grid of `(tl, tr)` points.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoTimeGrid {
    pub tl: Vec<f64>,
    pub tr: Vec<f64>,
}

impl TwoTimeGrid {
    /// `n × n` points spanning `[0, t_max]` on both axes, ends included.
    pub fn square(t_max: f64, n: usize) -> Result<Self> {
        if !(t_max > 0.0) || n < 2 {
            return Err(Error::invalid("grid needs t_max > 0 and n >= 2"));
        }
        let axis: Vec<f64> = (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect();
        Ok(Self { tl: axis.clone(), tr: axis })
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.tl.iter().flat_map(move |&a| self.tr.iter().map(move |&b| (a, b)))
    }
}

/// Behaviour of the standard density over the survival across a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyReport {
    pub ratio_mean: f64,
    pub ratio_relative_spread: f64,
    pub is_constant: bool,
    pub empty_signal: bool,
    pub points_used: usize,
}

/// Ratio `p(tl,tr)/P(tl,tr)` of the standard joint density to the joint survival.
/// It is the constant `Γ_S+Γ_L` for the alpha family and varies for the beta family.
pub fn family_discriminator(state: &EntangledState, grid: &TwoTimeGrid) -> Result<FamilyReport> {
    let law = JointLaw::new(DecayModel::Standard, *state, 1.0)?;
    let pts: Vec<(f64, f64)> = grid.points().collect();
    let ratios: Vec<f64> = pts
        .par_iter()
        .filter_map(|&(a, b)| {
            let p = state.joint_survival(a, b);
            (p > 0.0).then(|| law.pdf(a, b) / p)
        })
        .collect();
    if ratios.is_empty() {
        return Ok(FamilyReport {
            ratio_mean: f64::NAN,
            ratio_relative_spread: f64::NAN,
            is_constant: false,
            empty_signal: true,
            points_used: 0,
        });
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &r| (l.min(r), h.max(r)));
    let spread = (hi - lo) / mean.abs();
    Ok(FamilyReport {
        ratio_mean: mean,
        ratio_relative_spread: spread,
        is_constant: spread < 1e-9,
        empty_signal: false,
        points_used: ratios.len(),
    })
}

/// Cosine and sine coefficients of the interference term along the total time
/// `T = tl + tr`, in units of the phase-shifted oscillation `ΔmT + β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceCoefficients {
    pub long: f64,
    pub short: f64,
    pub cos: f64,
    pub sin: f64,
}

impl InterferenceCoefficients {
    pub fn sin_over_cos(&self) -> f64 {
        self.sin / self.cos
    }
}

/// Least-squares decomposition of a beta-family joint density, evaluated at
/// `tl = tr = T/2`, into `e^{-Γ_L T}`, `e^{-Γ_S T}` and `e^{-Γ̄T}{cos, sin}(ΔmT+β)`.
pub fn beta_interference(model: DecayModel, state: &EntangledState, totals: &[f64]) -> Result<InterferenceCoefficients> {
    if state.family() != Family::Beta {
        return Err(Error::invalid("interference decomposition applies to the beta family"));
    }
    if totals.len() < 8 {
        return Err(Error::invalid("need at least 8 total times"));
    }
    let law = JointLaw::new(model, *state, 1.0)?;
    let p = state.params();
    let beta = state.phase();
    let rows = totals.len();
    let mut a = nalgebra::DMatrix::<f64>::zeros(rows, 4);
    let mut y = nalgebra::DVector::<f64>::zeros(rows);
    for (i, &t) in totals.iter().enumerate() {
        let damp = (-p.gamma_bar() * t).exp();
        let x = p.delta_m() * t + beta;
        a[(i, 0)] = (-p.gamma_l() * t).exp();
        a[(i, 1)] = (-p.gamma_s() * t).exp();
        a[(i, 2)] = damp * x.cos();
        a[(i, 3)] = damp * x.sin();
        y[i] = law.pdf(0.5 * t, 0.5 * t);
    }
    let scale = y.amax();
    if !(scale > 0.0) {
        return Err(Error::DegenerateState("density vanishes on the requested times".into()));
    }
    let svd = a.svd(true, true);
    let c = svd
        .solve(&(y / scale), 1e-14)
        .map_err(|e| Error::Numerical(format!("least squares failed: {e}")))?;
    Ok(InterferenceCoefficients { long: c[0] * scale, short: c[1] * scale, cos: c[2] * scale, sin: c[3] * scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn kaon() -> KaonParams {
        KaonParams::default()
    }

    #[test]
    fn singlet_vanishes_on_diagonal() {
        let s = EntangledState::alpha(kaon(), 0.0).unwrap();
        let tau = kaon().tau_s();
        for &t in &[0.0, 1.0, 3.0] {
            let p = s.joint_survival(t * tau, t * tau);
            assert!(p <= 1e-30 * s.prefactor(), "{p}");
        }
        assert!(s.joint_survival(0.0, 2.0 * tau) > 0.0);
    }

    #[test]
    fn alpha_rate_is_sum_of_widths() {
        let p = kaon();
        for &phase in &[0.0, 0.7, std::f64::consts::PI] {
            let s = EntangledState::alpha(p, phase).unwrap();
            let law = JointLaw::new(DecayModel::Standard, s, 1.0).unwrap();
            for &(a, b) in &[(0.1, 0.3), (1.0, 2.5), (4.0, 0.2)] {
                let (tl, tr) = (a * p.tau_s(), b * p.tau_s());
                assert_relative_eq!(law.pdf(tl, tr) / s.joint_survival(tl, tr), p.gamma_s() + p.gamma_l(), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn standard_matches_finite_difference_of_survival() {
        let p = kaon();
        let s = EntangledState::beta(p, 0.4).unwrap();
        let law = JointLaw::new(DecayModel::Standard, s, 1.0).unwrap();
        let h = 1e-6 * p.tau_s();
        for &(a, b) in &[(0.5, 0.7), (2.0, 1.0)] {
            let (tl, tr) = (a * p.tau_s(), b * p.tau_s());
            let d = |x: f64, y: f64| s.joint_survival(x, y);
            let fd = -((d(tl + h, tr) - d(tl - h, tr)) + (d(tl, tr + h) - d(tl, tr - h))) / (2.0 * h);
            assert_relative_eq!(law.pdf(tl, tr), fd, max_relative = 1e-6);
            assert_relative_eq!(law.series().eval(tl, tr), law.pdf(tl, tr), max_relative = 1e-9);
        }
    }

    #[test]
    fn normalized_models_integrate_to_one() {
        for fam in [Family::Alpha, Family::Beta] {
            let s = EntangledState::new(fam, 0.3, kaon()).unwrap();
            for m in [DecayModel::Hybrid, DecayModel::TimeOperator] {
                let law = JointLaw::new(m, s, 1.0).unwrap();
                assert_relative_eq!(law.series().quadrant_integral(), 1.0, max_relative = 1e-12);
                let (tl, tr) = (0.7 * kaon().tau_s(), 1.9 * kaon().tau_s());
                assert_relative_eq!(law.series().eval(tl, tr), law.pdf(tl, tr), max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn alpha_models_are_proportional() {
        let p = kaon();
        let s = EntangledState::alpha(p, 1.1).unwrap();
        let laws: Vec<JointLaw> = DecayModel::ALL.iter().map(|&m| JointLaw::new(m, s, 1.0).unwrap()).collect();
        let r = |tl: f64, tr: f64| (laws[0].pdf(tl, tr) / laws[2].pdf(tl, tr), laws[1].pdf(tl, tr) / laws[2].pdf(tl, tr));
        let (a0, b0) = r(0.2 * p.tau_s(), 1.3 * p.tau_s());
        let (a1, b1) = r(3.0 * p.tau_s(), 0.4 * p.tau_s());
        assert_relative_eq!(a0, a1, max_relative = 1e-10);
        assert_relative_eq!(b0, b1, max_relative = 1e-10);
    }

    #[test]
    fn beta_depends_on_total_time_only() {
        let p = kaon();
        let s = EntangledState::beta(p, 0.0).unwrap();
        let t = 2.0 * p.tau_s();
        assert_relative_eq!(s.joint_survival(0.0, t), s.joint_survival(0.6 * t, 0.4 * t), max_relative = 1e-12);
    }

    #[test]
    fn calibration_scales_standard_only() {
        let s = EntangledState::alpha(kaon(), 0.0).unwrap();
        let (tl, tr) = (1e-10, 3e-10);
        let a = joint_pdf(DecayModel::Standard, &s, tl, tr, 1.0).unwrap();
        let b = joint_pdf(DecayModel::Standard, &s, tl, tr, 0.5).unwrap();
        assert_relative_eq!(b, 0.5 * a, max_relative = 1e-15);
        let c = joint_pdf(DecayModel::TimeOperator, &s, tl, tr, 0.5).unwrap();
        let d = joint_pdf(DecayModel::TimeOperator, &s, tl, tr, 1.0).unwrap();
        assert_eq!(c, d);
        assert!(joint_pdf(DecayModel::Standard, &s, tl, tr, 0.0).is_err());
        assert!(joint_pdf(DecayModel::Standard, &s, -1.0, tr, 1.0).is_err());
    }

    #[test]
    fn discriminator_separates_families() {
        let p = kaon();
        let grid = TwoTimeGrid::square(5.0 * p.tau_s(), 50).unwrap();
        let a = family_discriminator(&EntangledState::alpha(p, 0.0).unwrap(), &grid).unwrap();
        assert!(a.is_constant);
        assert!(a.ratio_relative_spread < 1e-9);
        assert_relative_eq!(a.ratio_mean, p.gamma_s() + p.gamma_l(), max_relative = 1e-10);
        let b = family_discriminator(&EntangledState::beta(p, 0.0).unwrap(), &grid).unwrap();
        assert!(!b.is_constant);
        assert!(b.ratio_relative_spread > 0.5);
        let empty = family_discriminator(&EntangledState::alpha(p.with_epsilon(Complex64::new(0.0, 0.0)).unwrap(), 0.0).unwrap(), &grid).unwrap();
        assert!(empty.empty_signal);
    }

    #[test]
    fn beta_sine_coefficient() {
        let p = kaon();
        let s = EntangledState::beta(p, 0.3).unwrap();
        let totals: Vec<f64> = (0..200).map(|i| i as f64 * 0.05 * p.tau_s()).collect();
        let std = beta_interference(DecayModel::Standard, &s, &totals).unwrap();
        assert_relative_eq!(std.sin_over_cos(), 2.0 * p.delta_m() / (p.gamma_s() + p.gamma_l()), max_relative = 1e-6);
        let twfo = beta_interference(DecayModel::TimeOperator, &s, &totals).unwrap();
        assert!(twfo.sin_over_cos().abs() < 1e-6);
    }

    #[test]
    fn factorizes_without_splitting() {
        let p = KaonParams::new(2.0, 2.0, 0.0, Complex64::new(0.1, 0.05)).unwrap();
        let s = EntangledState::alpha(p, 0.9).unwrap();
        let base = s.joint_survival(0.0, 0.0);
        for &(a, b) in &[(0.3, 0.1), (1.0, 2.0), (0.05, 3.0)] {
            let prod = (-2.0 * a as f64).exp() * (-2.0 * b as f64).exp();
            assert_relative_eq!(s.joint_survival(a, b) / prod, base, max_relative = 1e-10);
        }
    }
}
