//! Energy spectra of exponential decays and the survival laws they imply.
//!
//! A Lorentzian line `N/((E-m)² + (Γ/2)²)` cut to `[e_min, e_max]` is the
//! energy distribution of an exponential decay. Two readings turn it back into
//! a time law: the squared autocorrelation `|∫ρ(E)e^{-iEt}dE|²`, and the
//! squared Fourier transform of the amplitude `√N·i/(E - m + iΓ/2)`, read as a
//! decay density and integrated from `t` to infinity.

pub mod expint;
pub mod quadrature;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::ComplexEnergy;
use expint::scaled_e1;
use quadrature::integrate;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
/// Time-integration span beyond `t`, in lifetimes.
const SURVIVAL_SPAN: f64 = 40.0;
const TOL: f64 = 1e-13;
pub const NORM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Convention {
    Autocorrelation,
    TimeOperator,
}

impl Convention {
    pub fn name(&self) -> &'static str {
        match self {
            Convention::Autocorrelation => "autocorrelation",
            Convention::TimeOperator => "time_operator",
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Convention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "autocorrelation" => Ok(Convention::Autocorrelation),
            "time_operator" | "time-operator" | "twfo" => Ok(Convention::TimeOperator),
            other => Err(Error::invalid(format!("unknown convention '{other}'"))),
        }
    }
}

/// Truncated, unit-normalized Lorentzian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lorentzian {
    mass: f64,
    width: f64,
    e_min: f64,
    e_max: f64,
    norm: f64,
}

impl Lorentzian {
    pub fn new(e: ComplexEnergy, e_min: f64, e_max: f64) -> Result<Self> {
        if !(e.width() > 0.0) {
            return Err(Error::invalid("Lorentzian needs a width > 0"));
        }
        if !(e_min < e_max) || !e_min.is_finite() || !e_max.is_finite() {
            return Err(Error::invalid(format!("cutoffs must satisfy e_min < e_max, got [{e_min:e}, {e_max:e}]")));
        }
        let g = 0.5 * e.width();
        let span = ((e_max - e.mass()) / g).atan() - ((e_min - e.mass()) / g).atan();
        Ok(Self { mass: e.mass(), width: e.width(), e_min, e_max, norm: g / span })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn cutoffs(&self) -> (f64, f64) {
        (self.e_min, self.e_max)
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Mass the untruncated line puts between the cutoffs.
    pub fn captured_fraction(&self) -> f64 {
        let g = 0.5 * self.width;
        (((self.e_max - self.mass) / g).atan() - ((self.e_min - self.mass) / g).atan()) / PI
    }

    pub fn density(&self, e: f64) -> f64 {
        if e < self.e_min || e > self.e_max {
            return 0.0;
        }
        let x = e - self.mass;
        let g = 0.5 * self.width;
        self.norm / (x * x + g * g)
    }

    /// `√N·i/(E - m + iΓ/2)` inside the cutoffs.
    pub fn amplitude(&self, e: f64) -> Complex64 {
        if e < self.e_min || e > self.e_max {
            return Complex64::new(0.0, 0.0);
        }
        I * self.norm.sqrt() / Complex64::new(e - self.mass, 0.5 * self.width)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b = vec![self.mass];
        for k in [0.5, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0] {
            b.push(self.mass - k * self.width);
            b.push(self.mass + k * self.width);
        }
        b
    }

    /// `∫ρ(E)e^{-i(E-m)t}dE` by quadrature with panels no wider than `π/(4t)`.
    pub fn autocorrelation(&self, t: f64) -> Complex64 {
        if t == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        let max_panel = PI / (4.0 * t.abs());
        let g = 0.5 * self.width;
        let norm = self.norm;
        let shifted: Vec<f64> = self.breakpoints().iter().map(|b| b - self.mass).collect();
        integrate(
            |x| Complex64::from_polar(norm / (x * x + g * g), -x * t),
            self.e_min - self.mass,
            self.e_max - self.mass,
            &shifted,
            max_panel,
            TOL,
        )
    }

    /// `Ψ(s) = (2π)^{-1/2} ∫ψ̂(E)e^{-iEs}dE` for `s ≥ 0`, up to the phase `e^{-ims}`, in closed form.
    pub fn time_amplitude(&self, s: f64) -> Complex64 {
        let g = 0.5 * self.width;
        let (a, b) = (self.e_min - self.mass, self.e_max - self.mass);
        let k = (self.norm / (2.0 * PI)).sqrt();
        if s == 0.0 {
            return I * k * (Complex64::new(b, g) / Complex64::new(a, g)).ln();
        }
        let u = |x: f64| Complex64::new(-s * g, s * x);
        let ends = Complex64::from_polar(1.0, -a * s) * scaled_e1(u(a)) - Complex64::from_polar(1.0, -b * s) * scaled_e1(u(b));
        let pole = if a < 0.0 && b > 0.0 && s > 0.0 { 2.0 * PI * (-g * s).exp() } else { 0.0 };
        I * k * ends + k * pole
    }

    /// `|Ψ(s)|²`.
    pub fn time_density(&self, s: f64) -> f64 {
        self.time_amplitude(s).norm_sqr()
    }

    /// `∫_T^∞ |Ψ|²` from the leading large-`s` behaviour.
    fn time_tail(&self, t_end: f64) -> f64 {
        let g = 0.5 * self.width;
        let (a, b) = (self.e_min - self.mass, self.e_max - self.mass);
        let ends = (1.0 / (a * a + g * g) + 1.0 / (b * b + g * g)) * self.norm / (2.0 * PI) / t_end;
        let pole = if a < 0.0 && b > 0.0 { 2.0 * PI * self.norm * (-self.width * t_end).exp() / self.width } else { 0.0 };
        ends + pole
    }

    /// Survival `∫_t^∞|Ψ|²` at every time in `times` from a single sweep.
    fn time_operator_survival(&self, times: &[f64]) -> Vec<f64> {
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&i, &j| times[i].total_cmp(&times[j]));
        let (a, b) = (self.e_min - self.mass, self.e_max - self.mass);
        let beat = (b - a).max(a.abs()).max(b.abs());
        let max_panel = PI / (4.0 * beat);
        let last = times[order[order.len() - 1]];
        let t_end = last + SURVIVAL_SPAN / self.width;
        let f = |s: f64| Complex64::new(self.time_density(s), 0.0);
        let mut out = vec![0.0; times.len()];
        let mut acc = self.time_tail(t_end);
        let mut upper = t_end;
        for &i in order.iter().rev() {
            let lo = times[i];
            acc += integrate(f, lo, upper, &[], max_panel, TOL * (upper - lo) * self.width).re;
            upper = lo;
            out[i] = acc;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumGrid {
    pub e_min: f64,
    pub e_max: f64,
    pub points: usize,
}

impl SpectrumGrid {
    /// `m ± k·Γ`, sampled finely enough for the trapezoid rule to hold the norm.
    pub fn around(e: ComplexEnergy, k: f64) -> Self {
        // trapezoid error is dominated by the endpoint slopes, h²/12·(|ρ'(a)| + |ρ'(b)|)
        let g = 0.5;
        let slope = 2.0 * (g / PI) * k / (k * k + g * g).powi(2);
        let h = (0.125f64).min((6.0 * 0.1 * NORM_TOL / slope).sqrt());
        let points = (2.0 * k / h).ceil() as usize + 1;
        Self { e_min: e.mass() - k * e.width(), e_max: e.mass() + k * e.width(), points: points.max(3) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergySpectrum {
    line: Lorentzian,
    energies: Vec<f64>,
    density: Vec<f64>,
}

impl EnergySpectrum {
    pub fn lineshape(&self) -> &Lorentzian {
        &self.line
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn e_min(&self) -> f64 {
        self.line.e_min
    }

    pub fn e_max(&self) -> f64 {
        self.line.e_max
    }

    pub fn trapezoid_norm(&self) -> f64 {
        self.energies
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(e, d)| 0.5 * (e[1] - e[0]) * (d[0] + d[1]))
            .sum()
    }
}

pub fn lorentzian_spectrum(e: ComplexEnergy, grid: SpectrumGrid) -> Result<EnergySpectrum> {
    let line = Lorentzian::new(e, grid.e_min, grid.e_max)?;
    if grid.points < 2 {
        return Err(Error::invalid("spectrum grid needs at least 2 points"));
    }
    let h = (grid.e_max - grid.e_min) / (grid.points - 1) as f64;
    let energies: Vec<f64> = (0..grid.points).map(|i| (grid.e_min + h * i as f64).min(grid.e_max)).collect();
    let density: Vec<f64> = energies.iter().map(|&x| line.density(x)).collect();
    let spectrum = EnergySpectrum { line, energies, density };
    let norm = spectrum.trapezoid_norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::invalid(format!(
            "grid too coarse: trapezoid norm {norm:.12} misses 1 by more than {NORM_TOL:e}; use spacing below Γ/8"
        )));
    }
    Ok(spectrum)
}

fn check_times(times: &[f64]) -> Result<()> {
    match times.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        Some(t) => Err(Error::invalid(format!("time must be finite and >= 0, got {t}"))),
        None => Ok(()),
    }
}

pub fn survival_from_spectrum(spec: &EnergySpectrum, t: f64, convention: Convention) -> Result<f64> {
    Ok(survival_curve(spec, &[t], convention)?[0])
}

pub fn survival_curve(spec: &EnergySpectrum, times: &[f64], convention: Convention) -> Result<Vec<f64>> {
    check_times(times)?;
    if times.is_empty() {
        return Ok(Vec::new());
    }
    Ok(match convention {
        Convention::Autocorrelation => times.iter().map(|&t| spec.line.autocorrelation(t).norm_sqr()).collect(),
        Convention::TimeOperator => spec.line.time_operator_survival(times),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit(k: f64) -> EnergySpectrum {
        let e = ComplexEnergy::new(0.0, 1.0).unwrap();
        lorentzian_spectrum(e, SpectrumGrid::around(e, k)).unwrap()
    }

    /// `∫_a^b e^{-ixt}/(x - c) dx` for `c = ±iγ`, from `E₁`.
    fn pole_integral(a: f64, b: f64, t: f64, g: f64, upper: bool) -> Complex64 {
        let (shift, correction) = if upper { (-g, 0.0) } else { (g, if a < 0.0 && b > 0.0 { 1.0 } else { 0.0 }) };
        // w = x - c, u = i t w
        let u = |x: f64| Complex64::new(-t * shift, t * x);
        let c = Complex64::new(0.0, if upper { g } else { -g });
        Complex64::from_polar(1.0, -a * t) * scaled_e1(u(a)) - Complex64::from_polar(1.0, -b * t) * scaled_e1(u(b))
            - 2.0 * PI * I * correction * (-I * c * t).exp()
    }

    #[test]
    fn half_width_at_half_maximum() {
        let e = ComplexEnergy::new(3.0, 2.0).unwrap();
        let l = Lorentzian::new(e, -100.0, 100.0).unwrap();
        assert_relative_eq!(l.density(3.0 + 1.0), 0.5 * l.density(3.0), max_relative = 1e-15);
        assert_relative_eq!(l.density(3.0 - 1.0), 0.5 * l.density(3.0), max_relative = 1e-15);
    }

    #[test]
    fn symmetric_cutoffs_give_even_density() {
        let s = unit(20.0);
        let n = s.density().len();
        for i in 0..n {
            assert_relative_eq!(s.density()[i], s.density()[n - 1 - i], max_relative = 1e-12);
        }
    }

    #[test]
    fn captured_mass_at_fifty_widths() {
        let k = crate::params::KaonParams::default();
        let e = k.energy_s();
        let s = lorentzian_spectrum(e, SpectrumGrid::around(e, 50.0)).unwrap();
        assert_relative_eq!(s.lineshape().captured_fraction(), 0.993634, max_relative = 1e-6);
        assert_relative_eq!(s.lineshape().captured_fraction(), 2.0 / PI * 100f64.atan(), max_relative = 1e-14);
        assert!((s.trapezoid_norm() - 1.0).abs() < NORM_TOL);
    }

    #[test]
    fn zero_width_and_coarse_grids_rejected() {
        let e = ComplexEnergy::new(0.0, 0.0).unwrap();
        assert!(lorentzian_spectrum(e, SpectrumGrid { e_min: -1.0, e_max: 1.0, points: 10 }).is_err());
        let e = ComplexEnergy::new(0.0, 1.0).unwrap();
        assert!(lorentzian_spectrum(e, SpectrumGrid { e_min: -50.0, e_max: 50.0, points: 20 }).is_err());
    }

    #[test]
    fn autocorrelation_matches_closed_form() {
        let l = unit(5.0).line;
        let g = 0.5;
        for &t in &[0.05, 0.7, 3.0, 11.0] {
            let closed = l.norm / (2.0 * I * g) * (pole_integral(-5.0, 5.0, t, g, true) - pole_integral(-5.0, 5.0, t, g, false));
            let quad = l.autocorrelation(t);
            assert!((closed - quad).norm() < 1e-11, "t={t}: {closed} vs {quad}");
        }
    }

    #[test]
    fn time_amplitude_matches_quadrature() {
        for &k in &[5.0, 50.0] {
            let l = unit(k).line;
            for &s in &[0.0, 0.02, 0.9, 4.0] {
                let panel = if s > 0.0 { PI / (4.0 * s) } else { f64::INFINITY };
                let quad = integrate(|e| l.amplitude(e) * Complex64::from_polar(1.0, -e * s), -k, k, &l.breakpoints(), panel, 1e-14)
                    / (2.0 * PI).sqrt();
                let closed = l.time_amplitude(s);
                assert!((closed - quad).norm() < 1e-10 * closed.norm().max(1e-3), "k={k} s={s}: {closed} vs {quad}");
            }
        }
    }

    #[test]
    fn autocorrelation_is_one_at_zero() {
        let s = unit(5.0);
        assert_eq!(survival_from_spectrum(&s, 0.0, Convention::Autocorrelation).unwrap(), 1.0);
        assert!(survival_from_spectrum(&s, -1.0, Convention::Autocorrelation).is_err());
    }

    #[test]
    fn narrow_cutoffs_flatten_the_start() {
        let s = unit(5.0);
        let h = 1e-3;
        let p = survival_curve(&s, &[0.0, h, 2.0 * h], Convention::Autocorrelation).unwrap();
        let slope = (p[2] - p[1]) / h;
        assert!(slope.abs() < 0.05, "{slope}");
        // an exponential would fall with slope -Γ
        let wide = unit(1000.0);
        let q = survival_curve(&wide, &[0.5, 0.5 + h], Convention::Autocorrelation).unwrap();
        assert_relative_eq!((q[1] - q[0]) / h, -(-0.5f64).exp(), max_relative = 2e-3);
    }

    #[test]
    fn wide_cutoffs_deviate_by_the_lost_tails() {
        let s = unit(1000.0);
        let c = s.lineshape().captured_fraction();
        let times: Vec<f64> = (0..6).map(|i| 0.1 + i as f64).collect();
        let auto = survival_curve(&s, &times, Convention::Autocorrelation).unwrap();
        let to = survival_curve(&s, &times, Convention::TimeOperator).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let e = (-t).exp();
            assert_relative_eq!(auto[i] / e, 1.0 / (c * c), max_relative = 2e-5);
            assert_relative_eq!(to[i] / e, 1.0 / c, max_relative = 2e-4);
        }
    }

    #[test]
    fn time_survival_is_monotone_and_batch_consistent() {
        let s = unit(50.0);
        let times = [0.0, 0.3, 1.0, 2.5, 4.0];
        let batch = survival_curve(&s, &times, Convention::TimeOperator).unwrap();
        assert!(batch.windows(2).all(|w| w[1] < w[0]));
        let single = survival_from_spectrum(&s, 1.0, Convention::TimeOperator).unwrap();
        assert_relative_eq!(single, batch[2], max_relative = 1e-9);
    }

    #[test]
    fn exponential_amplitude_transforms_to_the_line() {
        // (2π)^{-1/2} ∫_0^∞ √Γ e^{-iE₀s} e^{iEs} ds = √(Γ/2π)·i/(E - E₀)
        let (m, width) = (0.0, 1.0);
        let l = Lorentzian::new(ComplexEnergy::new(m, width).unwrap(), -1e3, 1e3).unwrap();
        let untruncated = (width / (2.0 * PI)).sqrt() / l.norm.sqrt();
        for &e in &[0.0, 0.4, -3.0, 25.0] {
            let w = (e - m).abs().max(1.0);
            let f = |s: f64| Complex64::from_polar(width.sqrt() * (-0.5 * width * s).exp(), (e - m) * s);
            let numeric = integrate(f, 0.0, 80.0, &[], PI / (4.0 * w), 1e-15) / (2.0 * PI).sqrt();
            let analytic = l.amplitude(e) * untruncated;
            assert!((numeric - analytic).norm() <= 1e-6 * analytic.norm(), "E={e}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn autocorrelation_bounded_by_one(t in 0.0f64..20.0, k in 2.0f64..60.0) {
            let s = unit(k);
            let p = survival_from_spectrum(&s, t, Convention::Autocorrelation).unwrap();
            prop_assert!(p <= 1.0 + 1e-12 && p >= 0.0);
        }
    }
}
