//! Relative term weights estimated from binned pair counts.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expsum::ExpSeries;
use crate::params::KaonParams;
use crate::sampler::BinnedCounts;

/// Fraction of `τ_L` that the data must reach to see the long-lived plateau.
pub const LONG_REGIME: f64 = 0.03;
/// Oscillation periods the data must span.
pub const MIN_PERIODS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightRatio {
    /// `√w_L / w_int`, weights relative to the short-lived term.
    pub value: f64,
    pub sigma: f64,
    pub long_weight: f64,
    pub interference_weight: f64,
    pub phase: f64,
    /// Short-lived coefficient of the fitted template, in counts per second.
    pub short_rate: f64,
    pub iterations: usize,
}

/// Linear template `θ0 e^{-Γ_S t} + θ1 e^{-Γ_L t} + e^{-Γ̄t}(θ2 cos Δm t + θ3 sin Δm t)`
/// fitted to the pair counts by Poisson maximum likelihood. The rates are held at `params`.
pub fn weight_ratio_estimate(binned: &BinnedCounts, params: &KaonParams) -> Result<WeightRatio> {
    check_coverage(binned, params)?;
    let total: u64 = binned.pair.iter().sum();
    if total == 0 {
        return Err(Error::invalid("no pair counts"));
    }
    let design = Design::new(binned, params);
    let fit = poisson_linear(&design, &binned.pair)?;
    let theta: Vec<f64> = (0..4).map(|k| fit.theta[k] * design.scale[k]).collect();
    let cov = Matrix4::from_fn(|i, j| fit.cov[(i, j)] * design.scale[i] * design.scale[j]);

    if !(theta[0] > 0.0) {
        return Err(Error::DegenerateState("no short-lived component in the data".into()));
    }
    if !(theta[1] > 0.0) {
        return Err(Error::DegenerateState("fitted long-lived weight is not positive".into()));
    }
    let amp = theta[2].hypot(theta[3]);
    let amp_grad = if amp > 0.0 { Vector4::new(0.0, 0.0, theta[2] / amp, theta[3] / amp) } else { Vector4::zeros() };
    let amp_sigma = (amp_grad.transpose() * cov * amp_grad)[(0, 0)].max(0.0).sqrt();
    if !(amp > amp_sigma) {
        return Err(Error::DegenerateState(format!(
            "interference amplitude {amp:e} consistent with zero (σ = {amp_sigma:e}); ratio unbounded"
        )));
    }
    let value = (theta[0] * theta[1]).sqrt() / amp;
    let grad = Vector4::new(
        0.5 * value / theta[0],
        0.5 * value / theta[1],
        -value * theta[2] / (amp * amp),
        -value * theta[3] / (amp * amp),
    );
    let sigma = (grad.transpose() * cov * grad)[(0, 0)].max(0.0).sqrt();
    Ok(WeightRatio {
        value,
        sigma,
        long_weight: theta[1] / theta[0],
        interference_weight: amp / theta[0],
        // θ2 cos + θ3 sin = A cos(Δm t + φ) with φ = atan2(-θ3, θ2)
        phase: (-theta[3]).atan2(theta[2]),
        short_rate: theta[0],
        iterations: fit.iterations,
    })
}

fn check_coverage(binned: &BinnedCounts, params: &KaonParams) -> Result<()> {
    let t_min = binned.edges[0];
    let t_max = *binned.edges.last().unwrap_or(&t_min);
    let onset = LONG_REGIME * params.tau_l();
    if t_min >= onset {
        return Err(Error::invalid(format!("short-lived regime missing: data start at {t_min:e} s, beyond {onset:e} s")));
    }
    if t_max <= onset {
        return Err(Error::invalid(format!("long-lived regime missing: data end at {t_max:e} s, need > {onset:e} s")));
    }
    if params.delta_m() == 0.0 {
        return Err(Error::invalid("interference regime missing: Δm = 0 gives no oscillation"));
    }
    let period = 2.0 * std::f64::consts::PI / params.delta_m();
    if t_max - t_min < MIN_PERIODS * period {
        return Err(Error::invalid(format!(
            "interference regime missing: data span {:e} s, need {} periods of {period:e} s",
            t_max - t_min,
            MIN_PERIODS
        )));
    }
    Ok(())
}

/// Bin integrals of the four template functions, each column scaled to unit maximum.
pub(crate) struct Design {
    pub rows: Vec<[f64; 4]>,
    pub scale: [f64; 4],
}

impl Design {
    fn new(binned: &BinnedCounts, params: &KaonParams) -> Self {
        let one = Complex64::new(1.0, 0.0);
        let osc = Complex64::new(params.gamma_bar(), -params.delta_m());
        let single = |c: Complex64, z: Complex64| {
            let mut s = ExpSeries::new();
            s.push(c, z);
            s
        };
        let basis = [
            single(one, Complex64::new(params.gamma_s(), 0.0)),
            single(one, Complex64::new(params.gamma_l(), 0.0)),
            single(one, osc),
            single(Complex64::new(0.0, -1.0), osc),
        ];
        let mut rows: Vec<[f64; 4]> = binned
            .bins()
            .map(|(a, b)| std::array::from_fn(|k| basis[k].integral_between(a, b)))
            .collect();
        let mut scale = [1.0; 4];
        for (k, s) in scale.iter_mut().enumerate() {
            let m = rows.iter().fold(0.0f64, |m, r| m.max(r[k].abs()));
            if m > 0.0 {
                *s = 1.0 / m;
            }
        }
        for r in rows.iter_mut() {
            for k in 0..4 {
                r[k] *= scale[k];
            }
        }
        Self { rows, scale }
    }
}

pub(crate) struct LinearFit {
    pub theta: Vector4<f64>,
    pub cov: Matrix4<f64>,
    pub iterations: usize,
}

fn mean(row: &[f64; 4], theta: &Vector4<f64>) -> f64 {
    row.iter().zip(theta.iter()).map(|(x, t)| x * t).sum()
}

fn log_likelihood(design: &Design, counts: &[u64], theta: &Vector4<f64>) -> Option<f64> {
    let mut ll = 0.0;
    for (row, &n) in design.rows.iter().zip(counts) {
        let mu = mean(row, theta);
        if !(mu > 0.0) {
            return None;
        }
        ll += n as f64 * mu.ln() - mu;
    }
    Some(ll)
}

/// Newton iterations on the concave Poisson log-likelihood of a linear mean,
/// with step halving to keep every bin mean positive.
fn poisson_linear(design: &Design, counts: &[u64]) -> Result<LinearFit> {
    let total: f64 = counts.iter().map(|&n| n as f64).sum();
    let start = {
        let s: f64 = design.rows.iter().map(|r| r[0] + r[1]).sum();
        Vector4::new(total / s, total / s, 0.0, 0.0)
    };
    let mut theta = least_squares_start(design, counts)
        .filter(|t| log_likelihood(design, counts, t).is_some())
        .unwrap_or(start);
    let mut ll = log_likelihood(design, counts, &theta).ok_or_else(|| Error::Numerical("no valid starting point".into()))?;
    for iteration in 1..=200 {
        let mut grad = Vector4::zeros();
        let mut info = Matrix4::zeros();
        for (row, &n) in design.rows.iter().zip(counts) {
            let x = Vector4::from_row_slice(row);
            let mu = mean(row, &theta);
            grad += x * (n as f64 / mu - 1.0);
            info += x * x.transpose() * (n as f64 / (mu * mu));
        }
        let step = info
            .try_inverse()
            .map(|inv| inv * grad)
            .ok_or_else(|| Error::Numerical("singular information matrix".into()))?;
        let decrement = grad.dot(&step);
        if decrement.abs() < 1e-10 {
            return finish(design, theta, iteration);
        }
        let mut lambda = 1.0;
        loop {
            let next = theta + step * lambda;
            match log_likelihood(design, counts, &next) {
                Some(v) if v >= ll - 1e-12 * ll.abs() => {
                    theta = next;
                    ll = v;
                    break;
                }
                _ if lambda < 1e-12 => return finish(design, theta, iteration),
                _ => lambda *= 0.5,
            }
        }
    }
    Err(Error::FitFailure(format!("template fit did not converge; last θ = {:?}", theta.as_slice())))
}

fn finish(design: &Design, theta: Vector4<f64>, iterations: usize) -> Result<LinearFit> {
    let mut info = Matrix4::zeros();
    for row in &design.rows {
        let x = Vector4::from_row_slice(row);
        info += x * x.transpose() / mean(row, &theta);
    }
    let cov = info.try_inverse().ok_or_else(|| Error::Numerical("singular Fisher information".into()))?;
    Ok(LinearFit { theta, cov, iterations })
}

fn least_squares_start(design: &Design, counts: &[u64]) -> Option<Vector4<f64>> {
    let mut a = Matrix4::zeros();
    let mut b = Vector4::zeros();
    for (row, &n) in design.rows.iter().zip(counts) {
        let x = Vector4::from_row_slice(row);
        let w = 1.0 / (n as f64).max(1.0);
        a += x * x.transpose() * w;
        b += x * (n as f64 * w);
    }
    a.try_inverse().map(|inv| inv * b)
}
