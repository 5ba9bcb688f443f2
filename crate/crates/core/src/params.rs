//! Physical inputs: complex energies, kaon parameters and the decay-law family.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const TAU_S: f64 = 8.92e-11;
pub const TAU_L: f64 = 5.17e-8;
pub const EPSILON_ABS: f64 = 2.27e-3;
pub const EPSILON_ARG_DEG: f64 = 43.37;

/// `E = m - iΓ/2`, with `Γ >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexEnergy {
    mass: f64,
    width: f64,
}

impl ComplexEnergy {
    pub fn new(mass: f64, width: f64) -> Result<Self> {
        if !mass.is_finite() || !width.is_finite() {
            return Err(Error::invalid("complex energy must be finite"));
        }
        if width < 0.0 {
            return Err(Error::invalid(format!("width must be >= 0, got {width}")));
        }
        Ok(Self { mass, width })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.mass, -0.5 * self.width)
    }
}

/// Parameters of the neutral kaon system. Masses are measured from `m_S = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KaonParams {
    gamma_s: f64,
    gamma_l: f64,
    delta_m: f64,
    epsilon: Complex64,
}

impl Default for KaonParams {
    fn default() -> Self {
        let gamma_s = 1.0 / TAU_S;
        let gamma_l = 1.0 / TAU_L;
        Self {
            gamma_s,
            gamma_l,
            delta_m: 0.5 * (gamma_s + gamma_l),
            epsilon: Complex64::from_polar(EPSILON_ABS, EPSILON_ARG_DEG.to_radians()),
        }
    }
}

impl KaonParams {
    /// Equal widths are accepted so that degenerate limits can be studied.
    pub fn new(gamma_s: f64, gamma_l: f64, delta_m: f64, epsilon: Complex64) -> Result<Self> {
        let finite = [gamma_s, gamma_l, delta_m, epsilon.re, epsilon.im]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::invalid("kaon parameters must be finite"));
        }
        if !(gamma_l > 0.0 && gamma_s >= gamma_l) {
            return Err(Error::invalid(format!(
                "need gamma_s >= gamma_l > 0, got gamma_s={gamma_s:e}, gamma_l={gamma_l:e}"
            )));
        }
        if delta_m < 0.0 {
            return Err(Error::invalid("delta_m must be >= 0"));
        }
        if epsilon.norm() >= 1.0 {
            return Err(Error::invalid(format!("|epsilon| must be < 1, got {}", epsilon.norm())));
        }
        Ok(Self { gamma_s, gamma_l, delta_m, epsilon })
    }

    pub fn from_lifetimes(tau_s: f64, tau_l: f64, delta_m: f64, epsilon: Complex64) -> Result<Self> {
        if !(tau_s > 0.0 && tau_l > 0.0) {
            return Err(Error::invalid("lifetimes must be > 0"));
        }
        Self::new(1.0 / tau_s, 1.0 / tau_l, delta_m, epsilon)
    }

    pub fn with_epsilon(self, epsilon: Complex64) -> Result<Self> {
        Self::new(self.gamma_s, self.gamma_l, self.delta_m, epsilon)
    }

    pub fn with_delta_m(self, delta_m: f64) -> Result<Self> {
        Self::new(self.gamma_s, self.gamma_l, delta_m, self.epsilon)
    }

    pub fn gamma_s(&self) -> f64 {
        self.gamma_s
    }

    pub fn gamma_l(&self) -> f64 {
        self.gamma_l
    }

    pub fn delta_m(&self) -> f64 {
        self.delta_m
    }

    pub fn epsilon(&self) -> Complex64 {
        self.epsilon
    }

    pub fn tau_s(&self) -> f64 {
        1.0 / self.gamma_s
    }

    pub fn tau_l(&self) -> f64 {
        1.0 / self.gamma_l
    }

    pub fn gamma_bar(&self) -> f64 {
        0.5 * (self.gamma_s + self.gamma_l)
    }

    pub fn energy_s(&self) -> ComplexEnergy {
        ComplexEnergy { mass: 0.0, width: self.gamma_s }
    }

    pub fn energy_l(&self) -> ComplexEnergy {
        ComplexEnergy { mass: self.delta_m, width: self.gamma_l }
    }
}

/// The three competing decay laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecayModel {
    /// Decay density is minus the time derivative of the survival probability.
    Standard,
    /// Decay density proportional to the survival probability itself.
    Hybrid,
    /// Decay density from the time-operator wave function.
    TimeOperator,
}

impl DecayModel {
    pub const ALL: [DecayModel; 3] = [DecayModel::Standard, DecayModel::Hybrid, DecayModel::TimeOperator];

    pub fn name(&self) -> &'static str {
        match self {
            DecayModel::Standard => "standard",
            DecayModel::Hybrid => "hybrid",
            DecayModel::TimeOperator => "twfo",
        }
    }
}

impl fmt::Display for DecayModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecayModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "standard" => Ok(DecayModel::Standard),
            "hybrid" => Ok(DecayModel::Hybrid),
            "twfo" | "time-operator" | "time_operator" => Ok(DecayModel::TimeOperator),
            other => Err(Error::invalid(format!("unknown model '{other}' (standard|hybrid|twfo)"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_lifetimes() {
        let p = KaonParams::default();
        assert!((p.tau_s() - TAU_S).abs() < 1e-24);
        assert!((p.tau_l() - TAU_L).abs() < 1e-21);
        assert_eq!(p.delta_m(), p.gamma_bar());
        assert_eq!(p.energy_s().mass(), 0.0);
        assert!((p.epsilon().arg().to_degrees() - 43.37).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let eps = Complex64::new(0.1, 0.0);
        assert!(KaonParams::new(1.0, 2.0, 0.5, eps).is_err());
        assert!(KaonParams::new(2.0, 0.0, 0.5, eps).is_err());
        assert!(KaonParams::new(2.0, 1.0, 0.5, Complex64::new(1.0, 0.0)).is_err());
        assert!(KaonParams::new(2.0, 1.0, f64::NAN, eps).is_err());
        assert!(KaonParams::new(1.0, 1.0, 0.0, eps).is_ok());
        assert!(ComplexEnergy::new(0.0, -1.0).is_err());
    }

    #[test]
    fn model_names_round_trip() {
        for m in DecayModel::ALL {
            assert_eq!(m.name().parse::<DecayModel>().unwrap(), m);
        }
        assert!("bogus".parse::<DecayModel>().is_err());
    }
}
