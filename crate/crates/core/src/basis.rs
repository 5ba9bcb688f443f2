//! Two-component states and the flavor, CP and mass-eigenstate bases.
//!
//! CP eigenstates are `K1 = (K0 - K0bar)/√2` (CP = +1) and
//! `K2 = (K0 + K0bar)/√2` (CP = -1). A [`Spinor`] written in the CP basis holds
//! the `(K1, K2)` components.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{ComplexEnergy, KaonParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spinor(pub [Complex64; 2]);

impl Spinor {
    pub fn new(a: Complex64, b: Complex64) -> Self {
        Spinor([a, b])
    }

    pub fn real(a: f64, b: f64) -> Self {
        Spinor([Complex64::new(a, 0.0), Complex64::new(b, 0.0)])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0[0].norm_sqr() + self.0[1].norm_sqr()
    }

    pub fn dot(&self, other: &Spinor) -> Complex64 {
        self.0[0].conj() * other.0[0] + self.0[1].conj() * other.0[1]
    }

    pub fn normalized(&self) -> Result<Spinor> {
        let n = self.norm_sqr().sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::DegenerateState("spinor has zero norm".into()));
        }
        Ok(*self * Complex64::new(1.0 / n, 0.0))
    }
}

impl Add for Spinor {
    type Output = Spinor;
    fn add(self, o: Spinor) -> Spinor {
        Spinor([self.0[0] + o.0[0], self.0[1] + o.0[1]])
    }
}

impl Sub for Spinor {
    type Output = Spinor;
    fn sub(self, o: Spinor) -> Spinor {
        Spinor([self.0[0] - o.0[0], self.0[1] - o.0[1]])
    }
}

impl Mul<Complex64> for Spinor {
    type Output = Spinor;
    fn mul(self, c: Complex64) -> Spinor {
        Spinor([self.0[0] * c, self.0[1] * c])
    }
}

/// Flavor amplitudes `(K0, K0bar)` to CP amplitudes `(K1, K2)`.
pub fn cp_from_flavor(flavor: Spinor) -> Spinor {
    let [a, b] = flavor.0;
    Spinor([(a - b) * FRAC_1_SQRT_2, (a + b) * FRAC_1_SQRT_2])
}

pub fn flavor_from_cp(cp: Spinor) -> Spinor {
    let [c1, c2] = cp.0;
    Spinor([(c1 + c2) * FRAC_1_SQRT_2, (c2 - c1) * FRAC_1_SQRT_2])
}

pub fn k0_cp() -> Spinor {
    Spinor::real(FRAC_1_SQRT_2, FRAC_1_SQRT_2)
}

pub fn k0bar_cp() -> Spinor {
    Spinor::real(-FRAC_1_SQRT_2, FRAC_1_SQRT_2)
}

/// `(K_S, K_L)` in the CP basis. They are normalized but not orthogonal.
pub fn mass_eigenstates(params: &KaonParams) -> (Spinor, Spinor) {
    let eps = params.epsilon();
    let n = Complex64::new(1.0 / (1.0 + eps.norm_sqr()).sqrt(), 0.0);
    let one = Complex64::new(1.0, 0.0);
    (Spinor([one, eps]) * n, Spinor([eps, one]) * n)
}

/// Amplitudes `(a_S, a_L)` with `spinor = a_S K_S + a_L K_L`.
pub fn sl_from_cp(spinor: Spinor, params: &KaonParams) -> Result<(Complex64, Complex64)> {
    let eps = params.epsilon();
    if eps.norm() >= 1.0 {
        return Err(Error::invalid("|epsilon| >= 1 makes K_S and K_L degenerate"));
    }
    let det = Complex64::new(1.0, 0.0) - eps * eps;
    let n = (1.0 + eps.norm_sqr()).sqrt();
    let [c1, c2] = spinor.0;
    Ok(((c1 - eps * c2) * n / det, (c2 - eps * c1) * n / det))
}

/// Closed-form pieces of a two-mode interference term.
///
/// For `ψ(t) = α₁e^{-iE₁t} + α₂e^{-iE₂t}` the cross term of `|ψ|²` is
/// `2|α₁α₂| e^{-Γ̄t} cos(Δm t + Δφ)` and that of `-d|ψ|²/dt` is
/// `2|α₁α₂| R e^{-Γ̄t} cos(Δm t + Δφ + ψ)` where `R e^{iψ} = Γ̄ - iΔm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceWeights {
    pub amplitude: f64,
    pub delta_phi: f64,
    pub delta_m: f64,
    pub gamma_bar: f64,
    pub r_mod: f64,
    pub psi_phase: f64,
}

impl InterferenceWeights {
    pub fn new(a1: Complex64, a2: Complex64, e1: ComplexEnergy, e2: ComplexEnergy) -> Self {
        let delta_m = e2.mass() - e1.mass();
        let gamma_bar = 0.5 * (e1.width() + e2.width());
        Self {
            amplitude: a1.norm() * a2.norm(),
            delta_phi: a1.arg() - a2.arg(),
            delta_m,
            gamma_bar,
            r_mod: gamma_bar.hypot(delta_m),
            psi_phase: (-delta_m).atan2(gamma_bar),
        }
    }

    /// Cross term of `|ψ(t)|²`.
    pub fn survival_cross(&self, t: f64) -> f64 {
        2.0 * self.amplitude * (-self.gamma_bar * t).exp() * (self.delta_m * t + self.delta_phi).cos()
    }

    /// Cross term of `-d|ψ(t)|²/dt`.
    pub fn decay_cross(&self, t: f64) -> f64 {
        2.0 * self.amplitude
            * self.r_mod
            * (-self.gamma_bar * t).exp()
            * (self.delta_m * t + self.delta_phi + self.psi_phase).cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn k0_in_cp_basis() {
        let k0 = cp_from_flavor(Spinor::real(1.0, 0.0));
        assert_relative_eq!(k0.0[0].re, FRAC_1_SQRT_2, epsilon = 1e-16);
        assert_relative_eq!(k0.0[1].re, FRAC_1_SQRT_2, epsilon = 1e-16);
        assert_eq!(k0, k0_cp());
        assert_eq!(cp_from_flavor(Spinor::real(0.0, 1.0)), k0bar_cp());
    }

    #[test]
    fn epsilon_zero_mass_states_are_cp_states() {
        let p = KaonParams::default().with_epsilon(c(0.0, 0.0)).unwrap();
        let (ks, kl) = mass_eigenstates(&p);
        assert_eq!(ks, Spinor::real(1.0, 0.0));
        assert_eq!(kl, Spinor::real(0.0, 1.0));
    }

    #[test]
    fn k0_decomposes_into_equal_mass_amplitudes() {
        let p = KaonParams::default();
        let eps = p.epsilon();
        let (a_s, a_l) = sl_from_cp(k0_cp(), &p).unwrap();
        let expected = (1.0 + eps.norm_sqr()).sqrt() / (2f64.sqrt() * (c(1.0, 0.0) + eps).norm());
        assert_relative_eq!(a_s.norm(), expected, max_relative = 1e-14);
        assert_relative_eq!(a_l.norm(), expected, max_relative = 1e-14);
    }

    #[test]
    fn equal_width_phase() {
        let e1 = ComplexEnergy::new(0.0, 2.0).unwrap();
        let e2 = ComplexEnergy::new(0.7, 2.0).unwrap();
        let w = InterferenceWeights::new(c(1.0, 0.0), c(0.5, 0.0), e1, e2);
        assert_relative_eq!(w.psi_phase, (-0.7f64).atan2(2.0), epsilon = 1e-15);
        let same = InterferenceWeights::new(c(1.0, 0.0), c(0.5, 0.0), e1, e1);
        assert_eq!(same.r_mod, same.gamma_bar);
        assert_eq!(same.psi_phase, 0.0);
    }

    #[test]
    fn decay_cross_is_minus_derivative_of_survival_cross() {
        let e1 = ComplexEnergy::new(0.0, 1.0).unwrap();
        let e2 = ComplexEnergy::new(0.6, 0.2).unwrap();
        let w = InterferenceWeights::new(c(0.3, 0.4), c(-0.2, 0.9), e1, e2);
        for &t in &[0.0, 0.5, 1.3, 4.0] {
            let h = 1e-5;
            let fd = -(w.survival_cross(t + h) - w.survival_cross(t - h)) / (2.0 * h);
            assert_relative_eq!(w.decay_cross(t), fd, epsilon = 1e-9);
        }
    }

    proptest! {
        #[test]
        fn flavor_cp_round_trip(ar in -1.0..1.0f64, ai in -1.0..1.0f64, br in -1.0..1.0f64, bi in -1.0..1.0f64) {
            let s = Spinor::new(c(ar, ai), c(br, bi));
            let back = flavor_from_cp(cp_from_flavor(s));
            prop_assert!((back.0[0] - s.0[0]).norm() < 1e-15);
            prop_assert!((back.0[1] - s.0[1]).norm() < 1e-15);
            prop_assert!((cp_from_flavor(s).norm_sqr() - s.norm_sqr()).abs() < 1e-14);
        }

        #[test]
        fn mass_states_normalized(abs in 0.0..0.99f64, arg in -3.0..3.0f64) {
            let p = KaonParams::default().with_epsilon(Complex64::from_polar(abs, arg)).unwrap();
            let (ks, kl) = mass_eigenstates(&p);
            prop_assert!((ks.norm_sqr() - 1.0).abs() < 1e-14);
            prop_assert!((kl.norm_sqr() - 1.0).abs() < 1e-14);
        }

        #[test]
        fn sl_decomposition_reconstructs(abs in 0.0..0.9f64, arg in -3.0..3.0f64,
                                         ar in -1.0..1.0f64, ai in -1.0..1.0f64, br in -1.0..1.0f64) {
            let p = KaonParams::default().with_epsilon(Complex64::from_polar(abs, arg)).unwrap();
            let s = Spinor::new(c(ar, ai), c(br, 0.0));
            let (a_s, a_l) = sl_from_cp(s, &p).unwrap();
            let (ks, kl) = mass_eigenstates(&p);
            let r = ks * a_s + kl * a_l;
            prop_assert!((r.0[0] - s.0[0]).norm() < 1e-12);
            prop_assert!((r.0[1] - s.0[1]).norm() < 1e-12);
        }

        #[test]
        fn r_mod_bounds_gamma_bar(g1 in 0.0..5.0f64, g2 in 0.0..5.0f64, m in -3.0..3.0f64) {
            let w = InterferenceWeights::new(c(1.0, 0.0), c(1.0, 0.0),
                ComplexEnergy::new(0.0, g1).unwrap(), ComplexEnergy::new(m, g2).unwrap());
            prop_assert!(w.r_mod >= w.gamma_bar);
        }
    }
}
