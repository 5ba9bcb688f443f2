//! Instantaneous CP measurements interposed in the free evolution of decoupled channels.

use rayon::prelude::*;

use crate::basis::Spinor;
use crate::error::{Error, Result};
use crate::evolution::evolve_diagonal;
use crate::params::KaonParams;
use crate::rng::{open_unit, substream, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSchedule {
    times: Vec<f64>,
    readout: f64,
}

impl MeasurementSchedule {
    pub fn new(times: Vec<f64>, readout: f64) -> Result<Self> {
        if !(readout >= 0.0) || !readout.is_finite() {
            return Err(Error::invalid(format!("readout must be finite and >= 0, got {readout}")));
        }
        if let Some(t) = times.iter().find(|t| !(**t >= 0.0)) {
            return Err(Error::invalid(format!("measurement times must be >= 0, got {t}")));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("measurement times must be strictly increasing"));
        }
        if let Some(&last) = times.last() {
            if !(last < readout) {
                return Err(Error::invalid(format!("measurement at {last} is not before readout {readout}")));
            }
        }
        Ok(Self { times, readout })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn readout(&self) -> f64 {
        self.readout
    }
}

/// Outcome probabilities at readout: surviving with CP = +1, with CP = -1, and surviving at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZenoOutcome {
    pub p_plus: f64,
    pub p_minus: f64,
    pub p_survival: f64,
    /// Monte Carlo trials, zero for the analytic mode.
    pub trials: u64,
}

impl ZenoOutcome {
    /// Binomial standard error of an empirical probability `p`.
    pub fn sigma(&self, p: f64) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            (p * (1.0 - p) / self.trials as f64).sqrt()
        }
    }
}

fn check_regime(params: &KaonParams) -> Result<()> {
    if params.epsilon().norm() != 0.0 {
        return Err(Error::Unsupported(format!(
            "interposed measurements need decoupled channels (ε = 0), got |ε| = {:e}",
            params.epsilon().norm()
        )));
    }
    Ok(())
}

/// Norm and CP = +1 share of the state an interval after `state`.
fn step(state: Spinor, params: &KaonParams, dt: f64) -> Result<(f64, f64)> {
    let next = evolve_diagonal(state, params, dt)?;
    let n = next.norm_sqr();
    Ok((n, next.0[0].norm_sqr()))
}

/// Exact outcome probabilities: a product of conditional survival and collapse probabilities over the schedule.
pub fn zeno_analytic(initial: Spinor, params: &KaonParams, schedule: &MeasurementSchedule) -> Result<ZenoOutcome> {
    check_regime(params)?;
    let psi = initial.normalized()?;
    // (probability, state) per branch
    let mut branches = vec![(1.0, psi)];
    let mut now = 0.0;
    let instants = schedule.times.iter().copied().chain(std::iter::once(schedule.readout));
    let mut last = (0.0, 0.0);
    for t in instants {
        let dt = t - now;
        let mut p_plus = 0.0;
        let mut p_minus = 0.0;
        for &(p, state) in &branches {
            let before = state.norm_sqr();
            let (n, n1) = step(state, params, dt)?;
            let survive = n / before;
            let collapse = if n > 0.0 { n1 / n } else { 0.0 };
            p_plus += p * survive * collapse;
            p_minus += p * survive * (1.0 - collapse);
        }
        branches = vec![(p_plus, Spinor::real(1.0, 0.0)), (p_minus, Spinor::real(0.0, 1.0))];
        now = t;
        last = (p_plus, p_minus);
    }
    Ok(ZenoOutcome { p_plus: last.0, p_minus: last.1, p_survival: last.0 + last.1, trials: 0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fate {
    Plus,
    Minus,
    Decayed,
}

fn trajectory(psi: Spinor, params: &KaonParams, schedule: &MeasurementSchedule, seed: u64, trial: u64) -> Result<Fate> {
    let mut rng = substream(seed, Stream::ZENO.trial(trial), 0);
    let mut state = psi;
    let mut now = 0.0;
    let mut fate = Fate::Decayed;
    for t in schedule.times.iter().copied().chain(std::iter::once(schedule.readout)) {
        let before = state.norm_sqr();
        let (n, n1) = step(state, params, t - now)?;
        if open_unit(&mut rng) > n / before {
            return Ok(Fate::Decayed);
        }
        if open_unit(&mut rng) <= n1 / n {
            state = Spinor::real(1.0, 0.0);
            fate = Fate::Plus;
        } else {
            state = Spinor::real(0.0, 1.0);
            fate = Fate::Minus;
        }
        now = t;
    }
    Ok(fate)
}

/// Monte Carlo trajectories; each trial draws from its own substream.
pub fn zeno_sequence(
    initial: Spinor,
    params: &KaonParams,
    schedule: &MeasurementSchedule,
    trials: u64,
    seed: u64,
) -> Result<ZenoOutcome> {
    check_regime(params)?;
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    let psi = initial.normalized()?;
    let (plus, minus) = (0..trials)
        .into_par_iter()
        .map(|k| trajectory(psi, params, schedule, seed, k))
        .try_fold(
            || (0u64, 0u64),
            |(p, m), fate| {
                fate.map(|f| match f {
                    Fate::Plus => (p + 1, m),
                    Fate::Minus => (p, m + 1),
                    Fate::Decayed => (p, m),
                })
            },
        )
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    let n = trials as f64;
    Ok(ZenoOutcome {
        p_plus: plus as f64 / n,
        p_minus: minus as f64 / n,
        p_survival: (plus + minus) as f64 / n,
        trials,
    })
}
