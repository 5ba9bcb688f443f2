//! Monte Carlo power of the unbinned likelihood-ratio test between two decay laws.
//!
//! The test embeds both laws in the mixture `(1-λ) p_b + λ p_a` and rejects
//! `p_b` (λ = 0) when `q = 2 max_λ Σ ln(1 + λ d_i)`, `d_i = p_a/p_b - 1`,
//! exceeds the `1 - 2α` quantile of χ²₁. Under the null `q` follows
//! `½χ²₀ + ½χ²₁`. An event where `p_b ≤ 0` rejects outright.

use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::params::DecayModel;
use crate::rng::Stream;
use crate::sampler::sample_law;
use crate::single::{DecayLaw, SuperpositionState};

pub const TARGET_POWER: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions {
    pub alpha: f64,
    pub trials: usize,
    pub seed: u64,
    /// Largest sample size searched for the crossing.
    pub n_max: usize,
    /// Points per decade of the search grid.
    pub per_decade: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self { alpha: 0.05, trials: 200, seed: 1, n_max: 1_000_000, per_decade: 10 }
    }
}

impl PowerOptions {
    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.trials < 100 {
            return Err(Error::invalid(format!("need at least 100 trials, got {}", self.trials)));
        }
        if self.n_max == 0 || self.per_decade == 0 {
            return Err(Error::invalid("n_max and per_decade must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPoint {
    pub n_events: usize,
    pub power: f64,
    /// Binomial standard error.
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerReport {
    pub model_a: DecayModel,
    pub model_b: DecayModel,
    pub alpha: f64,
    pub trials: usize,
    pub critical_value: f64,
    /// Power at the requested sample sizes.
    pub requested: Vec<PowerPoint>,
    /// Power on the log grid up to `n_max`.
    pub grid: Vec<PowerPoint>,
    /// Smallest grid size whose power reaches [`TARGET_POWER`].
    pub crossing: Option<usize>,
}

impl PowerReport {
    pub fn at(&self, n: usize) -> Option<PowerPoint> {
        self.requested.iter().chain(&self.grid).find(|p| p.n_events == n).copied()
    }
}

/// Critical value of `q` for size `alpha`.
pub fn critical_value(alpha: f64) -> f64 {
    if alpha >= 0.5 {
        return 0.0;
    }
    ChiSquared::new(1.0).map(|c| c.inverse_cdf(1.0 - 2.0 * alpha)).unwrap_or(f64::INFINITY)
}

/// `q = 2 max_{λ∈[0,1]} Σ ln(1 + λ d_i)`. Infinite `d_i` (null density ≤ 0) gives infinite `q`.
pub fn lrt_statistic(d: &[f64]) -> f64 {
    if d.iter().any(|x| !x.is_finite()) {
        return f64::INFINITY;
    }
    let slope = |lambda: f64| d.iter().map(|&x| x / (1.0 + lambda * x)).sum::<f64>();
    let curvature = |lambda: f64| -d.iter().map(|&x| (x / (1.0 + lambda * x)).powi(2)).sum::<f64>();
    let ll = |lambda: f64| d.iter().map(|&x| (lambda * x).ln_1p()).sum::<f64>();
    if slope(0.0) <= 0.0 {
        return 0.0;
    }
    let at_one = slope(1.0);
    let lambda = if at_one >= 0.0 {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut x = 0.5;
        for _ in 0..100 {
            let g = slope(x);
            if g > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let newton = x - g / curvature(x);
            let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (next - x).abs() <= 1e-14 * x.max(1e-300) || hi - lo <= 1e-15 {
                x = next;
                break;
            }
            x = next;
        }
        x
    };
    (2.0 * ll(lambda)).max(0.0)
}

fn log_grid(n_max: usize, per_decade: usize) -> Vec<usize> {
    let top = (n_max as f64).log10();
    let steps = (top * per_decade as f64).floor() as usize;
    let mut g: Vec<usize> = (0..=steps)
        .map(|k| 10f64.powf(k as f64 / per_decade as f64).round() as usize)
        .filter(|&n| n >= 10)
        .collect();
    g.push(n_max);
    g.sort_unstable();
    g.dedup();
    g
}

/// Rejection rate of the test of `null` against `alternative` on samples from `generator`,
/// at every size in `sizes`. Trial `k` uses one sample of the largest size and its prefixes.
pub fn rejection_rates(
    generator: &DecayLaw,
    alternative: &DecayLaw,
    null: &DecayLaw,
    sizes: &[usize],
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<PowerPoint>> {
    let n_max = sizes.iter().copied().max().unwrap_or(0);
    if n_max == 0 {
        return Err(Error::invalid("sample sizes must be >= 1"));
    }
    let crit = critical_value(alpha);
    // fail early on a pathological generator
    sample_law(generator, 1, seed, Stream::DECAY_TIMES.trial(0))?;
    let rejections: Vec<Vec<bool>> = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let times = sample_law(generator, n_max, seed, Stream::DECAY_TIMES.trial(k))?;
            let d: Vec<f64> = times
                .iter()
                .map(|&t| {
                    let pb = null.pdf(t);
                    if pb > 0.0 { alternative.pdf(t) / pb - 1.0 } else { f64::INFINITY }
                })
                .collect();
            Ok(sizes.iter().map(|&n| lrt_statistic(&d[..n]) > crit).collect())
        })
        .collect::<Result<_>>()?;
    Ok(sizes
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let hits = rejections.iter().filter(|r| r[j]).count() as f64;
            let power = hits / trials as f64;
            PowerPoint { n_events: n, power, sigma: (power * (1.0 - power) / trials as f64).sqrt() }
        })
        .collect())
}

/// Probability that `n_events` decays drawn under `model_a` reject `model_b`,
/// with the power curve on a log grid and its first crossing of [`TARGET_POWER`].
pub fn discrimination_power(
    model_a: DecayModel,
    model_b: DecayModel,
    state: &SuperpositionState,
    n_events: &[usize],
    opts: &PowerOptions,
) -> Result<PowerReport> {
    opts.validate()?;
    if model_a == model_b {
        return Err(Error::DegenerateState(format!("degenerate comparison: both models are {model_a}")));
    }
    if n_events.iter().any(|&n| n == 0) {
        return Err(Error::invalid("n_events must be >= 1"));
    }
    let law_a = DecayLaw::new(model_a, state)?;
    let law_b = DecayLaw::new(model_b, state)?;
    let grid = log_grid(opts.n_max, opts.per_decade);
    let mut sizes: Vec<usize> = grid.iter().chain(n_events).copied().collect();
    sizes.sort_unstable();
    sizes.dedup();
    let points = rejection_rates(&law_a, &law_a, &law_b, &sizes, opts.alpha, opts.trials, opts.seed)?;
    let find = |n: usize| points.iter().find(|p| p.n_events == n).copied();
    let grid_points: Vec<PowerPoint> = grid.iter().filter_map(|&n| find(n)).collect();
    let crossing = grid_points.iter().find(|p| p.power >= TARGET_POWER).map(|p| p.n_events);
    Ok(PowerReport {
        model_a,
        model_b,
        alpha: opts.alpha,
        trials: opts.trials,
        critical_value: critical_value(opts.alpha),
        requested: n_events.iter().filter_map(|&n| find(n)).collect(),
        grid: grid_points,
        crossing,
    })
}

/// Rejection rate when the data follow `model_b` itself: the realized size of the test.
pub fn test_size(
    model_a: DecayModel,
    model_b: DecayModel,
    state: &SuperpositionState,
    n_events: usize,
    opts: &PowerOptions,
) -> Result<PowerPoint> {
    opts.validate()?;
    let law_a = DecayLaw::new(model_a, state)?;
    let law_b = DecayLaw::new(model_b, state)?;
    let p = rejection_rates(&law_b, &law_a, &law_b, &[n_events], opts.alpha, opts.trials, opts.seed)?;
    Ok(p[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{ComplexEnergy, KaonParams};
    use crate::single::Channel;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    #[test]
    fn critical_values() {
        assert_relative_eq!(critical_value(0.05), 2.705543454095404, max_relative = 1e-9);
        assert_eq!(critical_value(0.6), 0.0);
    }

    #[test]
    fn statistic_edge_cases() {
        assert_eq!(lrt_statistic(&[-0.5, -0.1, 0.2]), 0.0);
        assert!(lrt_statistic(&[0.1, f64::INFINITY]).is_infinite());
        // all d > 0: λ = 1, q = 2 Σ ln(1+d)
        assert_relative_eq!(lrt_statistic(&[1.0, 0.5]), 2.0 * (2.0f64.ln() + 1.5f64.ln()), max_relative = 1e-14);
    }

    #[test]
    fn statistic_interior_maximum() {
        let d = [0.9, -0.5, 0.4, -0.3, 0.2];
        let q = lrt_statistic(&d);
        // brute force over a fine λ grid
        let best = (0..=100_000)
            .map(|i| i as f64 / 100_000.0)
            .map(|l| 2.0 * d.iter().map(|&x| (l * x).ln_1p()).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        assert_relative_eq!(q, best, max_relative = 1e-8);
    }

    #[test]
    fn grid_shape() {
        assert_eq!(log_grid(1000, 1), vec![10, 100, 1000]);
        let g = log_grid(1_000_000, 10);
        assert_eq!(*g.last().unwrap(), 1_000_000);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    fn two_rate_state() -> SuperpositionState {
        SuperpositionState::new(
            vec![Complex64::new(0.8, 0.0), Complex64::new(0.6, 0.0)],
            vec![ComplexEnergy::new(0.0, 1.0).unwrap(), ComplexEnergy::new(0.3, 0.1).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn same_models_are_degenerate() {
        let opts = PowerOptions { n_max: 100, ..PowerOptions::default() };
        let r = discrimination_power(DecayModel::Hybrid, DecayModel::Hybrid, &two_rate_state(), &[10], &opts);
        assert!(matches!(r, Err(Error::DegenerateState(_))));
        let few = PowerOptions { trials: 10, ..opts };
        assert!(discrimination_power(DecayModel::Hybrid, DecayModel::TimeOperator, &two_rate_state(), &[10], &few).is_err());
    }

    #[test]
    fn power_grows_with_sample_size() {
        let opts = PowerOptions { trials: 200, n_max: 30, per_decade: 2, seed: 5, ..PowerOptions::default() };
        let r = discrimination_power(DecayModel::TimeOperator, DecayModel::Hybrid, &two_rate_state(), &[3, 10, 30], &opts)
            .unwrap();
        let p: Vec<f64> = r.requested.iter().map(|x| x.power).collect();
        assert!(p[0] < p[1] && p[1] < p[2], "{p:?}");
        assert!(p[2] > 0.9);
        assert_eq!(r.crossing, r.grid.iter().find(|x| x.power >= TARGET_POWER).map(|x| x.n_events));
    }

    #[test]
    fn size_is_near_alpha() {
        let opts = PowerOptions { trials: 400, seed: 11, ..PowerOptions::default() };
        let s = test_size(DecayModel::TimeOperator, DecayModel::Hybrid, &two_rate_state(), 200, &opts).unwrap();
        assert!((s.power - 0.05).abs() < 4.0 * (0.05f64 * 0.95 / 400.0).sqrt(), "{}", s.power);
    }

    #[test]
    fn kaon_power_is_near_alpha_for_few_events() {
        let p = KaonParams::default();
        let state = SuperpositionState::kaon_channel(&p, Channel::Pair);
        let opts = PowerOptions { trials: 400, n_max: 10, seed: 3, ..PowerOptions::default() };
        let r = discrimination_power(DecayModel::TimeOperator, DecayModel::Standard, &state, &[10], &opts).unwrap();
        let at10 = r.at(10).unwrap();
        assert!(at10.power < 0.05 + 4.0 * (0.05f64 * 0.95 / 400.0).sqrt(), "{}", at10.power);
    }

    #[test]
    fn generating_model_has_higher_likelihood_on_average() {
        let state = two_rate_state();
        let a = DecayLaw::new(DecayModel::TimeOperator, &state).unwrap();
        let b = DecayLaw::new(DecayModel::Hybrid, &state).unwrap();
        let mut wins = 0.0;
        for k in 0..100 {
            let t = sample_law(&a, 200, 17, Stream::DECAY_TIMES.trial(k)).unwrap();
            wins += t.iter().map(|&x| a.pdf(x).ln() - b.pdf(x).ln()).sum::<f64>();
        }
        assert!(wins / 100.0 > 0.0);
    }
}
