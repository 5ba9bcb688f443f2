//! Sums of complex damped exponentials, `f(t) = Re Σ c_j e^{-z_j t}`.
//!
//! Every decay density in the crate is such a sum, so integrals, tails,
//! marginals and conditionals have closed forms.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::ComplexEnergy;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub coeff: Complex64,
    pub rate: Complex64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExpSeries {
    terms: Vec<ExpTerm>,
}

impl ExpSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, coeff: Complex64, rate: Complex64) {
        self.terms.push(ExpTerm { coeff, rate });
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    /// `|Σ a_k e^{-iE_k t}|²`. Conjugate pairs are folded into one term.
    pub fn modulus_squared(amps: &[Complex64], energies: &[ComplexEnergy]) -> Self {
        let mut s = Self::new();
        for j in 0..amps.len() {
            for k in j..amps.len() {
                let fold = if j == k { 1.0 } else { 2.0 };
                let coeff = amps[j] * amps[k].conj() * fold;
                let rate = I * (energies[j].value() - energies[k].value().conj());
                if coeff != Complex64::new(0.0, 0.0) {
                    s.push(coeff, rate);
                }
            }
        }
        s
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| (term.coeff * (-term.rate * t).exp()).re)
            .sum()
    }

    /// `-d/dt` of the series.
    pub fn neg_derivative(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| ExpTerm { coeff: t.coeff * t.rate, rate: t.rate })
                .collect(),
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| ExpTerm { coeff: t.coeff * k, rate: t.rate })
                .collect(),
        }
    }

    pub fn check_decaying(&self) -> Result<()> {
        match self.terms.iter().find(|t| !(t.rate.re > 0.0)) {
            Some(t) => Err(Error::DegenerateState(format!(
                "non-decaying component with rate {} has no finite integral",
                t.rate
            ))),
            None => Ok(()),
        }
    }

    /// `∫_t^∞ f`. Requires every term to decay.
    pub fn tail(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| (term.coeff * (-term.rate * t).exp() / term.rate).re)
            .sum()
    }

    pub fn integral(&self) -> f64 {
        self.terms.iter().map(|term| (term.coeff / term.rate).re).sum()
    }

    /// `∫_a^b f`, computed term by term to avoid cancelling two tails.
    pub fn integral_between(&self, a: f64, b: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| {
                let ea = (-term.rate * a).exp();
                let diff = -(-term.rate * (b - a)).exp_m1();
                (term.coeff * ea * diff / term.rate).re
            })
            .sum()
    }

    /// Smallest `Re z` over all terms.
    pub fn slowest_rate(&self) -> f64 {
        self.terms.iter().map(|t| t.rate.re).fold(f64::INFINITY, f64::min)
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

trait ExpM1 {
    fn exp_m1(self) -> Self;
}

impl ExpM1 for Complex64 {
    /// `e^z - 1` without cancellation for small `|z|`.
    fn exp_m1(self) -> Complex64 {
        if self.norm() < 1e-3 {
            let mut term = self;
            let mut sum = self;
            for n in 2..8 {
                term = term * self / n as f64;
                sum += term;
            }
            sum
        } else {
            self.exp() - 1.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm2 {
    pub coeff: Complex64,
    pub rate_left: Complex64,
    pub rate_right: Complex64,
}

/// `f(tl, tr) = Re Σ c_j e^{-z_j tl - w_j tr}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExpSeries2 {
    terms: Vec<ExpTerm2>,
}

impl ExpSeries2 {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, coeff: Complex64, rate_left: Complex64, rate_right: Complex64) {
        self.terms.push(ExpTerm2 { coeff, rate_left, rate_right });
    }

    pub fn terms(&self) -> &[ExpTerm2] {
        &self.terms
    }

    pub fn eval(&self, tl: f64, tr: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| (t.coeff * (-t.rate_left * tl - t.rate_right * tr).exp()).re)
            .sum()
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|t| ExpTerm2 { coeff: t.coeff * k, ..*t }).collect(),
        }
    }

    /// `-(∂_l + ∂_r)` of the series.
    pub fn neg_total_derivative(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| ExpTerm2 { coeff: t.coeff * (t.rate_left + t.rate_right), ..*t })
                .collect(),
        }
    }

    pub fn check_decaying(&self) -> Result<()> {
        if self.terms.iter().all(|t| t.rate_left.re > 0.0 && t.rate_right.re > 0.0) {
            Ok(())
        } else {
            Err(Error::DegenerateState("joint density has a non-decaying component".into()))
        }
    }

    /// Integral over the positive quadrant.
    pub fn quadrant_integral(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| (t.coeff / (t.rate_left * t.rate_right)).re)
            .sum()
    }

    /// `∫_0^∞ f(tl, tr) dtr` as a series in `tl`.
    pub fn marginal_left(&self) -> ExpSeries {
        let mut s = ExpSeries::new();
        for t in &self.terms {
            s.push(t.coeff / t.rate_right, t.rate_left);
        }
        s
    }

    /// `f(tl, ·)` as a series in `tr`.
    pub fn slice_right(&self, tl: f64) -> ExpSeries {
        let mut s = ExpSeries::new();
        for t in &self.terms {
            s.push(t.coeff * (-t.rate_left * tl).exp(), t.rate_right);
        }
        s
    }

    pub fn slowest_rate(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.rate_left.re.min(t.rate_right.re))
            .fold(f64::INFINITY, f64::min)
    }
}
