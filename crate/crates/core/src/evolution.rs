//! Time evolution of two-component kaon states.

use num_complex::Complex64;

use crate::basis::{mass_eigenstates, Spinor};
use crate::error::{Error, Result};
use crate::params::KaonParams;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Effective Hamiltonian `H = M - iΓ/2` in the CP basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassDecayMatrix {
    h: [[Complex64; 2]; 2],
}

impl MassDecayMatrix {
    /// Rejects matrices whose decay part `Γ = i(H - H†)` is not positive semidefinite.
    pub fn new(h: [[Complex64; 2]; 2]) -> Result<Self> {
        if h.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        let g00 = (I * (h[0][0] - h[0][0].conj())).re;
        let g11 = (I * (h[1][1] - h[1][1].conj())).re;
        let g01 = I * (h[0][1] - h[1][0].conj());
        let trace = g00 + g11;
        let det = g00 * g11 - g01.norm_sqr();
        let scale = h.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let tol = 1e-12 * scale;
        if trace < -tol || det < -tol * scale {
            return Err(Error::invalid("decay matrix is not positive semidefinite"));
        }
        Ok(Self { h })
    }

    /// `H = V diag(E_S, E_L) V⁻¹` with `V = [K_S K_L]`.
    pub fn from_kaon(params: &KaonParams) -> Result<Self> {
        let (ks, kl) = mass_eigenstates(params);
        let v = [[ks.0[0], kl.0[0]], [ks.0[1], kl.0[1]]];
        let det = v[0][0] * v[1][1] - v[0][1] * v[1][0];
        if det.norm() < 1e-14 {
            return Err(Error::DegenerateState("mass eigenstates are parallel".into()));
        }
        let vinv = [[v[1][1] / det, -v[0][1] / det], [-v[1][0] / det, v[0][0] / det]];
        let d = [params.energy_s().value(), params.energy_l().value()];
        let mut h = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (r, row) in h.iter_mut().enumerate() {
            for (c, x) in row.iter_mut().enumerate() {
                *x = v[r][0] * d[0] * vinv[0][c] + v[r][1] * d[1] * vinv[1][c];
            }
        }
        Self::new(h)
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        self.h
    }

    /// `e^{-iHt}` through `H = λI + K`, `K² = ω²I`, valid for degenerate spectra too.
    pub fn propagator(&self, t: f64) -> [[Complex64; 2]; 2] {
        let h = self.h;
        let lambda = (h[0][0] + h[1][1]) * 0.5;
        let k = [[h[0][0] - lambda, h[0][1]], [h[1][0], h[1][1] - lambda]];
        let omega = (k[0][0] * k[0][0] + k[0][1] * k[1][0]).sqrt();
        let x = omega * t;
        let sinc_t = if x.norm() < 1e-4 {
            (Complex64::new(1.0, 0.0) - x * x / 6.0) * t
        } else {
            x.sin() / omega
        };
        let cos = x.cos();
        let phase = (-I * lambda * t).exp();
        let mut u = [[Complex64::new(0.0, 0.0); 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                let id = if r == c { cos } else { Complex64::new(0.0, 0.0) };
                u[r][c] = phase * (id - I * sinc_t * k[r][c]);
            }
        }
        u
    }

    pub fn evolve(&self, initial: Spinor, t: f64) -> Result<Spinor> {
        check_time(t)?;
        let u = self.propagator(t);
        let [a, b] = initial.0;
        Ok(Spinor([u[0][0] * a + u[0][1] * b, u[1][0] * a + u[1][1] * b]))
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("time must be finite and >= 0, got {t}")))
    }
}

/// Evolution when the CP states are the mass states (`ε = 0`).
pub fn evolve_diagonal(initial: Spinor, params: &KaonParams, t: f64) -> Result<Spinor> {
    check_time(t)?;
    let [a, b] = initial.0;
    Ok(Spinor([
        a * (-I * params.energy_s().value() * t).exp(),
        b * (-I * params.energy_l().value() * t).exp(),
    ]))
}

/// CP components of an initial `K0` at time `t`.
pub fn cronin_fitch_amplitudes(params: &KaonParams, t: f64) -> Result<Spinor> {
    check_time(t)?;
    let eps = params.epsilon();
    let es = (-I * params.energy_s().value() * t).exp();
    let el = (-I * params.energy_l().value() * t).exp();
    let n = (Complex64::new(1.0, 0.0) + eps) * std::f64::consts::SQRT_2;
    Ok(Spinor([(es + eps * el) / n, (eps * es + el) / n]))
}

/// Long-lived part of [`cronin_fitch_amplitudes`].
pub fn long_time_projection(params: &KaonParams, t: f64) -> Result<Spinor> {
    check_time(t)?;
    let eps = params.epsilon();
    let el = (-I * params.energy_l().value() * t).exp();
    let n = (Complex64::new(1.0, 0.0) + eps) * std::f64::consts::SQRT_2;
    Ok(Spinor([eps * el / n, el / n]))
}
