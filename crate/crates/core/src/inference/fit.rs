//! Binned Poisson fit of the pair-channel intensity.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::simplex::{multistart, Bounds, SimplexOptions};
use crate::error::{Error, Result};
use crate::intensity::intensity_weights;
use crate::params::{DecayModel, KaonParams};
use crate::sampler::BinnedCounts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FitParam {
    EpsilonAbs,
    EpsilonArg,
    DeltaM,
    I0,
}

impl FitParam {
    pub const ALL: [FitParam; 4] = [FitParam::EpsilonAbs, FitParam::EpsilonArg, FitParam::DeltaM, FitParam::I0];

    pub fn name(&self) -> &'static str {
        match self {
            FitParam::EpsilonAbs => "epsilon_abs",
            FitParam::EpsilonArg => "epsilon_arg",
            FitParam::DeltaM => "delta_m",
            FitParam::I0 => "i0",
        }
    }
}

impl fmt::Display for FitParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FitParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FitParam::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::invalid(format!("unknown fit parameter '{s}'")))
    }
}

#[derive(Debug, Clone)]
pub struct FitSetup {
    pub model: DecayModel,
    pub params: KaonParams,
    /// Fixed normalization when `i0` is not free; `None` profiles it once at the initial parameters.
    pub i0: Option<f64>,
    pub free: Vec<FitParam>,
    pub starts: usize,
}

impl FitSetup {
    pub fn new(model: DecayModel, params: KaonParams, free: &[FitParam]) -> Self {
        let mut free = free.to_vec();
        free.sort();
        free.dedup();
        Self { model, params, i0: None, free, starts: 8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: DecayModel,
    pub epsilon_abs: f64,
    pub epsilon_arg: f64,
    pub delta_m: f64,
    pub i0: f64,
    /// Half the Poisson deviance against the saturated model.
    pub neg_log_likelihood: f64,
    pub free: Vec<FitParam>,
    /// Rows and columns follow `free`. Unconstrained parameters carry infinite variance.
    pub covariance: Vec<Vec<f64>>,
    pub unconstrained: Vec<FitParam>,
    pub evaluations: usize,
}

impl FitResult {
    pub fn sigma(&self, p: FitParam) -> Option<f64> {
        self.free.iter().position(|&q| q == p).map(|k| self.covariance[k][k].sqrt())
    }

    pub fn value(&self, p: FitParam) -> f64 {
        match p {
            FitParam::EpsilonAbs => self.epsilon_abs,
            FitParam::EpsilonArg => self.epsilon_arg,
            FitParam::DeltaM => self.delta_m,
            FitParam::I0 => self.i0,
        }
    }

    pub fn params(&self, base: &KaonParams) -> Result<KaonParams> {
        base.with_epsilon(Complex64::from_polar(self.epsilon_abs, self.epsilon_arg))?.with_delta_m(self.delta_m)
    }
}

/// Point in the full parameter space.
#[derive(Debug, Clone, Copy)]
struct Point {
    eps_abs: f64,
    eps_arg: f64,
    delta_m: f64,
    i0: f64,
}

impl Point {
    fn get(&self, p: FitParam) -> f64 {
        match p {
            FitParam::EpsilonAbs => self.eps_abs,
            FitParam::EpsilonArg => self.eps_arg,
            FitParam::DeltaM => self.delta_m,
            FitParam::I0 => self.i0,
        }
    }

    fn set(&mut self, p: FitParam, v: f64) {
        match p {
            FitParam::EpsilonAbs => self.eps_abs = v,
            FitParam::EpsilonArg => self.eps_arg = v,
            FitParam::DeltaM => self.delta_m = v,
            FitParam::I0 => self.i0 = v,
        }
    }
}

/// Binned data with the bin integrals of the fixed-rate terms cached.
struct Problem<'a> {
    model: DecayModel,
    base: KaonParams,
    edges: &'a [f64],
    counts: Vec<f64>,
    saturated: f64,
    short: Vec<f64>,
    long: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn new(binned: &'a BinnedCounts, model: DecayModel, base: KaonParams) -> Self {
        let edges = &binned.edges[..];
        let counts: Vec<f64> = binned.pair.iter().map(|&n| n as f64).collect();
        let saturated = counts.iter().filter(|&&n| n > 0.0).map(|&n| n * n.ln() - n).sum();
        let real_bins = |g: f64| -> Vec<f64> {
            edges.windows(2).map(|w| (-g * w[0]).exp() * -(-g * (w[1] - w[0])).exp_m1() / g).collect()
        };
        let short = real_bins(base.gamma_s());
        let long = real_bins(base.gamma_l());
        Self { model, base, edges, counts, saturated, short, long }
    }

    /// Bin integrals of the unit-short-weight shape, or `None` if the parameters are not admissible.
    fn shape_bins(&self, p: &Point) -> Option<Vec<f64>> {
        let params = self
            .base
            .with_epsilon(Complex64::from_polar(p.eps_abs, p.eps_arg))
            .and_then(|k| k.with_delta_m(p.delta_m))
            .ok()?;
        let w = intensity_weights(self.model, &params).ok()?;
        let c = Complex64::from_polar(w.interference, w.phase);
        let z = Complex64::new(params.gamma_bar(), -params.delta_m());
        let mut prev = (-z * self.edges[0]).exp();
        let mut out = Vec::with_capacity(self.counts.len());
        for (k, &b) in self.edges[1..].iter().enumerate() {
            let next = (-z * b).exp();
            let osc = if w.interference != 0.0 { (c * (prev - next) / z).re } else { 0.0 };
            out.push(self.short[k] + w.long * self.long[k] + osc);
            prev = next;
        }
        Some(out)
    }

    fn deviance(&self, shape: &[f64], i0: f64) -> f64 {
        let mut nll = 0.0;
        for (&s, &n) in shape.iter().zip(&self.counts) {
            let mu = i0 * s;
            if mu < 0.0 || (mu == 0.0 && n > 0.0) {
                return f64::INFINITY;
            }
            nll += mu - if n > 0.0 { n * mu.ln() } else { 0.0 };
        }
        nll + self.saturated
    }

    fn profiled_i0(&self, shape: &[f64]) -> f64 {
        self.counts.iter().sum::<f64>() / shape.iter().sum::<f64>()
    }

    fn nll(&self, p: &Point) -> f64 {
        match self.shape_bins(p) {
            Some(shape) => self.deviance(&shape, p.i0),
            None => f64::INFINITY,
        }
    }
}

fn bounds_for(p: FitParam, base: &KaonParams, i0: f64) -> Bounds {
    use std::f64::consts::PI;
    match p {
        FitParam::EpsilonAbs => Bounds { lo: 0.0, hi: 0.5 },
        FitParam::EpsilonArg => Bounds { lo: -PI, hi: PI },
        FitParam::DeltaM => Bounds { lo: 0.0, hi: 10.0 * base.gamma_s() },
        FitParam::I0 => Bounds { lo: 0.1 * i0, hi: 10.0 * i0 },
    }
}

/// Maximizes the Poisson likelihood of the pair counts under the model's intensity.
///
/// A free `i0` is profiled in closed form during the search; the covariance is
/// the inverse of the numerical Hessian of the full negative log-likelihood.
pub fn fit_intensity(binned: &BinnedCounts, setup: &FitSetup) -> Result<FitResult> {
    let nonempty = binned.pair.iter().filter(|&&n| n > 0).count();
    if nonempty == 0 {
        return Err(Error::invalid("no pair counts to fit"));
    }
    if nonempty < 5 {
        return Err(Error::invalid(format!("need at least 5 nonempty bins, got {nonempty}")));
    }
    if setup.starts == 0 {
        return Err(Error::invalid("need at least one start"));
    }
    let problem = Problem::new(binned, setup.model, setup.params);
    let eps = setup.params.epsilon();
    let mut init = Point { eps_abs: eps.norm(), eps_arg: eps.arg(), delta_m: setup.params.delta_m(), i0: 1.0 };
    let shape0 = problem
        .shape_bins(&init)
        .ok_or_else(|| Error::invalid("initial parameters are not admissible"))?;
    init.i0 = setup.i0.unwrap_or_else(|| problem.profiled_i0(&shape0));
    if !(init.i0 > 0.0) || !init.i0.is_finite() {
        return Err(Error::invalid(format!("i0 must be > 0, got {}", init.i0)));
    }

    let profile_i0 = setup.free.contains(&FitParam::I0);
    let searched: Vec<FitParam> = setup.free.iter().copied().filter(|&p| p != FitParam::I0).collect();
    let bounds: Vec<Bounds> = searched.iter().map(|&p| bounds_for(p, &setup.params, init.i0)).collect();
    let evaluations = std::cell::Cell::new(0usize);
    let point_of = |x: &[f64]| -> (Point, Option<Vec<f64>>) {
        let mut p = init;
        for (&q, &v) in searched.iter().zip(x) {
            p.set(q, v);
        }
        let shape = problem.shape_bins(&p);
        if profile_i0 {
            if let Some(s) = &shape {
                p.i0 = problem.profiled_i0(s);
            }
        }
        (p, shape)
    };
    let objective = |x: &[f64]| -> f64 {
        evaluations.set(evaluations.get() + 1);
        match point_of(x) {
            (p, Some(shape)) => problem.deviance(&shape, p.i0),
            _ => f64::INFINITY,
        }
    };

    let best = if searched.is_empty() {
        None
    } else {
        let x0: Vec<f64> = searched.iter().map(|&p| init.get(p)).collect();
        let m = multistart(&objective, &x0, &bounds, setup.starts, SimplexOptions::default());
        if !m.value.is_finite() {
            return Err(Error::FitFailure(format!("no admissible parameters found; last iterate {:?}", m.x)));
        }
        if !m.converged {
            return Err(Error::FitFailure(format!("simplex did not converge; last iterate {:?}", m.x)));
        }
        Some(m.x)
    };
    let (point, _) = match &best {
        Some(x) => point_of(x),
        None => point_of(&[]),
    };
    let nll = problem.nll(&point);
    if !nll.is_finite() {
        return Err(Error::FitFailure(format!("fitted point has zero likelihood: {point:?}")));
    }

    let spans: Vec<f64> = setup
        .free
        .iter()
        .map(|&p| {
            let b = bounds_for(p, &setup.params, point.i0);
            b.hi - b.lo
        })
        .collect();
    let (covariance, unconstrained) = covariance(&problem, &point, &setup.free, &spans);
    Ok(FitResult {
        model: setup.model,
        epsilon_abs: point.eps_abs,
        epsilon_arg: point.eps_arg,
        delta_m: point.delta_m,
        i0: point.i0,
        neg_log_likelihood: nll,
        free: setup.free.clone(),
        covariance,
        unconstrained,
        evaluations: evaluations.get(),
    })
}

/// Inverse Hessian by eigen-decomposition in scaled coordinates. Directions with
/// vanishing curvature, or whose standard deviation exceeds the search box,
/// are reported as unconstrained, as is the phase when `|ε|` is within one
/// standard deviation of zero.
fn covariance(problem: &Problem, at: &Point, free: &[FitParam], spans: &[f64]) -> (Vec<Vec<f64>>, Vec<FitParam>) {
    let n = free.len();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let scale: Vec<f64> = free.iter().zip(spans).map(|(&p, &s)| at.get(p).abs() + 1e-2 * s).collect();
    let h: Vec<f64> = scale.iter().map(|s| 1e-4 * s).collect();
    let f = |dx: &[f64]| {
        let mut p = *at;
        for (k, &q) in free.iter().enumerate() {
            p.set(q, at.get(q) + dx[k]);
        }
        problem.nll(&p)
    };
    let f0 = problem.nll(at);
    let mut hess = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let value = if i == j {
                let mut d = vec![0.0; n];
                d[i] = h[i];
                let fp = f(&d);
                d[i] = -h[i];
                let fm = f(&d);
                (fp - 2.0 * f0 + fm) / (h[i] * h[i])
            } else {
                let mut d = vec![0.0; n];
                let mut corner = |si: f64, sj: f64| {
                    d[i] = si * h[i];
                    d[j] = sj * h[j];
                    f(&d)
                };
                (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0)) / (4.0 * h[i] * h[j])
            };
            // scaled coordinates: x_k = scale_k u_k
            let v = value * scale[i] * scale[j];
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    let mut flagged = vec![false; n];
    if hess.iter().any(|v| !v.is_finite()) {
        let cov = (0..n).map(|i| (0..n).map(|j| if i == j { f64::INFINITY } else { 0.0 }).collect()).collect();
        return (cov, free.to_vec());
    }
    let eig = SymmetricEigen::new(hess);
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut pinv = DMatrix::<f64>::zeros(n, n);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        if lambda > 1e-10 * top {
            pinv += v * v.transpose() / lambda;
        } else {
            for i in 0..n {
                if v[i].abs() > 0.1 {
                    flagged[i] = true;
                }
            }
        }
    }
    let mut cov = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            cov[i][j] = pinv[(i, j)] * scale[i] * scale[j];
        }
    }
    for i in 0..n {
        if cov[i][i].sqrt() > spans[i] {
            flagged[i] = true;
        }
    }
    // the phase of an amplitude compatible with zero is not identified
    if let (Some(a), Some(p)) = (
        free.iter().position(|&q| q == FitParam::EpsilonAbs),
        free.iter().position(|&q| q == FitParam::EpsilonArg),
    ) {
        if flagged[a] || at.eps_abs <= cov[a][a].sqrt() {
            flagged[p] = true;
        }
    }
    for i in 0..n {
        if flagged[i] {
            for j in 0..n {
                cov[i][j] = 0.0;
                cov[j][i] = 0.0;
            }
            cov[i][i] = f64::INFINITY;
        }
    }
    let unconstrained = free.iter().zip(&flagged).filter(|(_, &f)| f).map(|(&p, _)| p).collect();
    (cov, unconstrained)
}
