//! Single-particle decay laws for a superposition of exponentially decaying modes.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expsum::ExpSeries;
use crate::params::{ComplexEnergy, DecayModel, KaonParams};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Decay channel of a neutral kaon: two pions (CP = +1) or three pions (CP = -1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Pair,
    Triplet,
}

impl Channel {
    pub fn name(&self) -> &'static str {
        match self {
            Channel::Pair => "pair",
            Channel::Triplet => "triplet",
        }
    }
}

impl std::str::FromStr for Channel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "pair" => Ok(Channel::Pair),
            "triplet" => Ok(Channel::Triplet),
            other => Err(Error::invalid(format!("unknown channel '{other}'"))),
        }
    }
}

/// `ψ(t) = Σ α_k e^{-iE_k t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpositionState {
    amps: Vec<Complex64>,
    energies: Vec<ComplexEnergy>,
}

impl SuperpositionState {
    pub fn new(amps: Vec<Complex64>, energies: Vec<ComplexEnergy>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::invalid("state needs at least one mode"));
        }
        if amps.len() != energies.len() {
            return Err(Error::invalid("amplitude and energy counts differ"));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::invalid("amplitudes must be finite"));
        }
        if amps.iter().all(|a| a.norm_sqr() == 0.0) {
            return Err(Error::DegenerateState("all amplitudes vanish".into()));
        }
        Ok(Self { amps, energies })
    }

    /// Amplitude of an initial `K0` in one CP channel, built from the short and long modes.
    pub fn kaon_channel(params: &KaonParams, channel: Channel) -> Self {
        let eps = params.epsilon();
        let n = (Complex64::new(1.0, 0.0) + eps) * std::f64::consts::SQRT_2;
        let one = Complex64::new(1.0, 0.0);
        let amps = match channel {
            Channel::Pair => vec![one / n, eps / n],
            Channel::Triplet => vec![eps / n, one / n],
        };
        Self { amps, energies: vec![params.energy_s(), params.energy_l()] }
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn energies(&self) -> &[ComplexEnergy] {
        &self.energies
    }

    pub fn amplitude(&self, t: f64) -> Complex64 {
        self.amps
            .iter()
            .zip(&self.energies)
            .map(|(a, e)| a * (-I * e.value() * t).exp())
            .sum()
    }

    /// `|ψ(t)|²` as a series.
    pub fn survival_series(&self) -> ExpSeries {
        ExpSeries::modulus_squared(&self.amps, &self.energies)
    }

    /// `|Σ α_k √Γ_k e^{-iE_k t}|²` as a series.
    pub fn time_operator_series(&self) -> ExpSeries {
        let weighted: Vec<Complex64> = self
            .amps
            .iter()
            .zip(&self.energies)
            .map(|(a, e)| a * e.width().sqrt())
            .collect();
        ExpSeries::modulus_squared(&weighted, &self.energies)
    }

    fn incoherent(&self, weights: impl Fn(&ComplexEnergy) -> f64) -> ExpSeries {
        let mut s = ExpSeries::new();
        for (a, e) in self.amps.iter().zip(&self.energies) {
            let w = a.norm_sqr() * weights(e);
            if w != 0.0 {
                s.push(Complex64::new(w, 0.0), Complex64::new(e.width(), 0.0));
            }
        }
        s
    }
}

/// Normalized decay-time density of one model for one state.
#[derive(Debug, Clone)]
pub struct DecayLaw {
    model: DecayModel,
    pdf: ExpSeries,
    survival: ExpSeries,
    weight: f64,
}

impl DecayLaw {
    pub fn new(model: DecayModel, state: &SuperpositionState) -> Result<Self> {
        let survival = state.survival_series();
        let raw = match model {
            DecayModel::Standard => survival.neg_derivative(),
            DecayModel::Hybrid => survival.clone(),
            DecayModel::TimeOperator => state.time_operator_series(),
        };
        Self::from_raw(model, raw, survival)
    }

    /// Same law with all cross terms between modes removed.
    pub fn decohered(model: DecayModel, state: &SuperpositionState) -> Result<Self> {
        let survival = state.incoherent(|_| 1.0);
        let raw = match model {
            DecayModel::Standard | DecayModel::TimeOperator => state.incoherent(|e| e.width()),
            DecayModel::Hybrid => survival.clone(),
        };
        Self::from_raw(model, raw, survival)
    }

    fn from_raw(model: DecayModel, raw: ExpSeries, survival: ExpSeries) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::DegenerateState("state has no decaying component".into()));
        }
        let weight = match model {
            DecayModel::Standard => survival.eval(0.0),
            DecayModel::Hybrid | DecayModel::TimeOperator => {
                raw.check_decaying()?;
                raw.integral()
            }
        };
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::DegenerateState("density cannot be normalized".into()));
        }
        Ok(Self { model, pdf: raw.scaled(1.0 / weight), survival, weight })
    }

    pub fn model(&self) -> DecayModel {
        self.model
    }

    pub fn series(&self) -> &ExpSeries {
        &self.pdf
    }

    /// Normalization removed from the raw density: `|ψ(0)|²` for the standard
    /// law, the time integral of the raw density otherwise. Ratios of weights
    /// give branching fractions between channels of one initial state.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn pdf(&self, t: f64) -> f64 {
        self.pdf.eval(t)
    }

    pub fn cdf(&self, t: f64) -> f64 {
        self.pdf.integral_between(0.0, t)
    }

    /// `∫_t^∞ pdf`.
    pub fn tail(&self, t: f64) -> f64 {
        self.pdf.tail(t)
    }

    /// `P_s(t)`: the squared norm for the standard law, the undecayed fraction otherwise.
    pub fn survival(&self, t: f64) -> f64 {
        match self.model {
            DecayModel::Standard => self.survival.eval(t) / self.survival.eval(0.0),
            _ => self.tail(t),
        }
    }

    /// Maximal intervals of `grid` on which the density is negative.
    pub fn negative_intervals(&self, grid: &[f64]) -> Vec<(f64, f64)> {
        let values: Vec<f64> = grid.par_iter().map(|&t| self.pdf(t)).collect();
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let floor = -1e-13 * scale;
        let mut out = Vec::new();
        let mut start: Option<f64> = None;
        let mut last = 0.0;
        for (&t, &v) in grid.iter().zip(&values) {
            if v < floor {
                start.get_or_insert(t);
                last = t;
            } else if let Some(s) = start.take() {
                out.push((s, last));
            }
        }
        if let Some(s) = start {
            out.push((s, last));
        }
        out
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("time must be finite and >= 0, got {t}")))
    }
}

pub fn pdf(model: DecayModel, state: &SuperpositionState, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(DecayLaw::new(model, state)?.pdf(t))
}

pub fn pdf_decohered(model: DecayModel, state: &SuperpositionState, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(DecayLaw::decohered(model, state)?.pdf(t))
}

pub fn survival(model: DecayModel, state: &SuperpositionState, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(DecayLaw::new(model, state)?.survival(t))
}

/// Density sampled on a sorted time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PdfCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl PdfCurve {
    pub fn evaluate(law: &DecayLaw, times: &[f64]) -> Result<Self> {
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::invalid("grid times must be finite and >= 0"));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("grid times must be sorted"));
        }
        let values = times.par_iter().map(|&t| law.pdf(t)).collect();
        Ok(Self { times: times.to_vec(), values })
    }
}

/// `n` bin centres on `[0, t_max]`.
pub fn centred_grid(t_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0) || n == 0 {
        return Err(Error::invalid("grid needs t_max > 0 and at least one point"));
    }
    let h = t_max / n as f64;
    Ok((0..n).map(|i| (i as f64 + 0.5) * h).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn two_mode(a1: Complex64, a2: Complex64, e1: (f64, f64), e2: (f64, f64)) -> SuperpositionState {
        SuperpositionState::new(
            vec![a1, a2],
            vec![ComplexEnergy::new(e1.0, e1.1).unwrap(), ComplexEnergy::new(e2.0, e2.1).unwrap()],
        )
        .unwrap()
    }

    fn numeric_integral(law: &DecayLaw, t_max: f64) -> f64 {
        let n = 200_000;
        let h = t_max / n as f64;
        let mut s = 0.5 * (law.pdf(0.0) + law.pdf(t_max));
        for i in 1..n {
            s += law.pdf(i as f64 * h);
        }
        s * h
    }

    #[test]
    fn single_mode_is_exponential_for_all_models() {
        let s = SuperpositionState::new(vec![Complex64::new(1.0, 0.0)], vec![ComplexEnergy::new(0.0, 2.0).unwrap()]).unwrap();
        for m in DecayModel::ALL {
            let law = DecayLaw::new(m, &s).unwrap();
            for &t in &[0.0, 0.4, 3.0] {
                assert_relative_eq!(law.pdf(t), 2.0 * (-2.0 * t).exp(), max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn standard_cross_term_matches_interference_weights() {
        use crate::basis::InterferenceWeights;
        let (a1, a2) = (Complex64::new(0.7, 0.2), Complex64::new(-0.1, 0.4));
        let (e1, e2) = ((0.0, 1.0), (0.8, 0.3));
        let s = two_mode(a1, a2, e1, e2);
        let law = DecayLaw::new(DecayModel::Standard, &s).unwrap();
        let w = InterferenceWeights::new(a1, a2, s.energies()[0], s.energies()[1]);
        let p0 = s.survival_series().eval(0.0);
        for &t in &[0.0f64, 0.5, 2.0, 7.0] {
            let direct = (a1.norm_sqr() * 1.0 * (-t).exp() + a2.norm_sqr() * 0.3 * (-0.3 * t).exp() + w.decay_cross(t)) / p0;
            assert_relative_eq!(law.pdf(t), direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn standard_is_minus_derivative_of_survival() {
        let s = two_mode(Complex64::new(0.7, 0.2), Complex64::new(-0.1, 0.4), (0.0, 1.0), (0.8, 0.3));
        let law = DecayLaw::new(DecayModel::Standard, &s).unwrap();
        for &t in &[0.1, 1.0, 4.0] {
            let h = 1e-6;
            let fd = -(law.survival(t + h) - law.survival(t - h)) / (2.0 * h);
            assert_relative_eq!(law.pdf(t), fd, max_relative = 1e-7);
        }
    }

    #[test]
    fn normalizations_against_quadrature() {
        let s = two_mode(Complex64::new(0.9, 0.0), Complex64::new(0.3, -0.2), (0.0, 1.0), (0.5, 0.25));
        for m in DecayModel::ALL {
            let law = DecayLaw::new(m, &s).unwrap();
            assert_relative_eq!(numeric_integral(&law, 200.0), 1.0, max_relative = 1e-7);
            assert_relative_eq!(law.cdf(3.0) + law.tail(3.0), 1.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn kaon_interference_weights_per_model() {
        let p = KaonParams::default();
        let s = SuperpositionState::kaon_channel(&p, Channel::Pair);
        let eps = p.epsilon().norm();
        let (gs, gl) = (p.gamma_s(), p.gamma_l());
        let r = (p.gamma_bar().powi(2) + p.delta_m().powi(2)).sqrt();
        let twfo = DecayLaw::new(DecayModel::TimeOperator, &s).unwrap();
        let hybrid = DecayLaw::new(DecayModel::Hybrid, &s).unwrap();
        let standard = DecayLaw::new(DecayModel::Standard, &s).unwrap();
        let w = |law: &DecayLaw, rate_re: f64| -> f64 {
            law.series().terms().iter().filter(|t| (t.rate.re - rate_re).abs() < 1e-6 * rate_re).map(|t| t.coeff.norm()).sum()
        };
        let ratio = |law: &DecayLaw| w(law, p.gamma_bar()) / w(law, gs);
        assert_relative_eq!(ratio(&twfo), 2.0 * eps * (gl / gs).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(ratio(&hybrid), 2.0 * eps, max_relative = 1e-12);
        assert_relative_eq!(ratio(&standard), 2.0 * eps * r / gs, max_relative = 1e-12);
        assert_relative_eq!(2.0 * eps * r / gs, 2f64.sqrt() * eps * (1.0 + gl / gs), max_relative = 1e-12);
    }

    #[test]
    fn standard_pair_channel_goes_negative_at_kaon_defaults() {
        let p = KaonParams::default();
        let s = SuperpositionState::kaon_channel(&p, Channel::Pair);
        let law = DecayLaw::new(DecayModel::Standard, &s).unwrap();
        let grid: Vec<f64> = (0..4000).map(|i| i as f64 * 0.01 * p.tau_s()).collect();
        let neg = law.negative_intervals(&grid);
        assert_eq!(neg.len(), 1);
        let (a, b) = neg[0];
        assert!(a / p.tau_s() > 18.0 && a / p.tau_s() < 20.0, "{a}");
        assert!(b / p.tau_s() > 23.0 && b / p.tau_s() < 25.0, "{b}");
        let tri = DecayLaw::new(DecayModel::Standard, &SuperpositionState::kaon_channel(&p, Channel::Triplet)).unwrap();
        let grid: Vec<f64> = (0..20000).map(|i| i as f64 * 1e-3 * p.tau_l()).collect();
        assert!(tri.negative_intervals(&grid).is_empty());
    }

    #[test]
    fn hybrid_decohered_reweights_short_mode() {
        let s = two_mode(Complex64::new(0.6, 0.0), Complex64::new(0.8, 0.0), (0.0, 5.0), (0.3, 0.01));
        let std = DecayLaw::decohered(DecayModel::Standard, &s).unwrap();
        let hyb = DecayLaw::decohered(DecayModel::Hybrid, &s).unwrap();
        let weights = |law: &DecayLaw| -> (f64, f64) {
            let t = law.series().terms();
            (t[0].coeff.re / t[0].rate.re, t[1].coeff.re / t[1].rate.re)
        };
        let (s1, s2) = weights(&std);
        let (h1, h2) = weights(&hyb);
        assert_relative_eq!((h1 / h2) / (s1 / s2), 0.01 / 5.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_width_mode_cannot_be_normalized_by_hybrid() {
        let s = SuperpositionState::new(vec![Complex64::new(1.0, 0.0)], vec![ComplexEnergy::new(0.0, 0.0).unwrap()]).unwrap();
        assert!(matches!(DecayLaw::new(DecayModel::Hybrid, &s), Err(Error::DegenerateState(_))));
    }

    #[test]
    fn rejects_bad_states_and_times() {
        assert!(SuperpositionState::new(vec![], vec![]).is_err());
        assert!(SuperpositionState::new(vec![Complex64::new(0.0, 0.0)], vec![ComplexEnergy::new(0.0, 1.0).unwrap()]).is_err());
        let p = KaonParams::default();
        let s = SuperpositionState::kaon_channel(&p, Channel::Pair);
        assert!(pdf(DecayModel::Hybrid, &s, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn models_agree_without_interference(g1 in 0.1..5.0f64, g2 in 0.1..5.0f64, m in -2.0..2.0f64,
                                             t in 0.0..10.0f64, phase in -3.0..3.0f64) {
            let s = two_mode(Complex64::from_polar(1.0, phase), Complex64::new(0.0, 0.0), (0.0, g1), (m, g2));
            let a = pdf(DecayModel::Standard, &s, t).unwrap();
            let b = pdf(DecayModel::Hybrid, &s, t).unwrap();
            let c = pdf(DecayModel::TimeOperator, &s, t).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
            prop_assert!((a - c).abs() <= 1e-12 * a.abs().max(1e-300));
        }

        #[test]
        fn normalized_models_nonnegative_and_unit_mass(a2r in -1.0..1.0f64, a2i in -1.0..1.0f64,
                                                       g2 in 0.05..3.0f64, m in -2.0..2.0f64, t in 0.0..30.0f64) {
            let s = two_mode(Complex64::new(1.0, 0.0), Complex64::new(a2r, a2i), (0.0, 1.0), (m, g2));
            for model in [DecayModel::Hybrid, DecayModel::TimeOperator] {
                let law = DecayLaw::new(model, &s).unwrap();
                prop_assert!(law.pdf(t) >= -1e-15);
                prop_assert!((law.cdf(t) + law.tail(t) - 1.0).abs() < 1e-12);
                prop_assert!((law.tail(0.0) - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn standard_survival_starts_at_one(a2r in -1.0..1.0f64, g2 in 0.05..3.0f64, t in 0.0..30.0f64) {
            let s = two_mode(Complex64::new(1.0, 0.0), Complex64::new(a2r, 0.3), (0.0, 1.0), (0.4, g2));
            let law = DecayLaw::new(DecayModel::Standard, &s).unwrap();
            prop_assert!((law.survival(0.0) - 1.0).abs() < 1e-15);
            prop_assert!((law.cdf(t) - (1.0 - law.survival(t))).abs() < 1e-12);
        }
    }
}
