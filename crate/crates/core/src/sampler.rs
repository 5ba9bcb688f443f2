//! Event generation by exact inverse-CDF sampling, detector folding and event files.

use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::entangled::{EntangledState, JointLaw};
use crate::error::{Error, Result};
use crate::expsum::ExpSeries;
use crate::params::{DecayModel, KaonParams};
use crate::rng::{open_unit, substream, Stream};
use crate::single::{Channel, DecayLaw, SuperpositionState};

const SPAN: f64 = 40.0;
const BASE_KNOTS: usize = 1 << 14;
const RATE_KNOTS: usize = 1 << 12;
const MAX_OSC_KNOTS: usize = 1 << 16;
const NEGATIVE_TOL: f64 = 1e-12;

/// Inverse of the tail `S(t) = ∫_t^∞ pdf` for a density given as an exponential series.
///
/// A monotone cubic through the knot table gives the starting point and Newton
/// steps on the exact tail, safeguarded by bisection within the knot bracket,
/// finish the root.
#[derive(Debug, Clone)]
pub struct InverseTail {
    pdf: ExpSeries,
    tail_series: Vec<(num_complex::Complex64, num_complex::Complex64)>,
    knots: Vec<f64>,
    tails: Vec<f64>,
    dens: Vec<f64>,
    slowest: f64,
}

impl InverseTail {
    pub fn new(pdf: &ExpSeries, what: &str) -> Result<Self> {
        if pdf.is_empty() {
            return Err(Error::DegenerateState("empty density".into()));
        }
        pdf.check_decaying()?;
        let total = pdf.integral();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::DegenerateState("density has no positive mass".into()));
        }
        let pdf = pdf.scaled(1.0 / total);
        let slowest = pdf.slowest_rate();
        let knots = knot_grid(&pdf);
        let dens: Vec<f64> = knots.par_iter().map(|&t| pdf.eval(t)).collect();
        scan_negative(&pdf, &knots, &dens, what)?;
        let tails: Vec<f64> = knots.par_iter().map(|&t| pdf.tail(t)).collect();
        let tail_series = pdf.terms().iter().map(|t| (t.coeff, t.rate)).collect();
        Ok(Self { pdf, tail_series, knots, tails, dens, slowest })
    }

    pub fn pdf(&self) -> &ExpSeries {
        &self.pdf
    }

    fn tail_and_pdf(&self, t: f64) -> (f64, f64) {
        let mut tail = 0.0;
        let mut pdf = 0.0;
        for &(c, z) in &self.tail_series {
            let e = c * (-z * t).exp();
            pdf += e.re;
            tail += (e / z).re;
        }
        (tail, pdf)
    }

    /// Time `t` with `S(t) = v` for `v ∈ (0, 1]`.
    pub fn invert(&self, v: f64) -> f64 {
        let n = self.knots.len();
        let last = self.tails[n - 1];
        if v <= last {
            return self.knots[n - 1] + (last / v).ln() / self.slowest;
        }
        // tails are decreasing; find k with tails[k] >= v > tails[k+1]
        let k = self.tails.partition_point(|&s| s >= v).saturating_sub(1).min(n - 2);
        let (t0, t1) = (self.knots[k], self.knots[k + 1]);
        let (s0, s1) = (self.tails[k], self.tails[k + 1]);
        let guess = hermite_guess(t0, t1, s0, s1, self.dens[k], self.dens[k + 1], v);
        self.polish(v, guess, t0, t1)
    }

    fn polish(&self, v: f64, guess: f64, mut lo: f64, mut hi: f64) -> f64 {
        let mut t = guess.clamp(lo, hi);
        for _ in 0..60 {
            let (s, p) = self.tail_and_pdf(t);
            let f = s - v;
            if f > 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let newton = if p > 0.0 { t + f / p } else { f64::NAN };
            let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (next - t).abs() <= 4.0 * f64::EPSILON * t.abs().max(f64::MIN_POSITIVE) || hi - lo <= f64::EPSILON * hi {
                return next;
            }
            t = next;
        }
        t
    }
}

/// Fritsch–Carlson monotone cubic for `t(S)` on one knot interval.
fn hermite_guess(t0: f64, t1: f64, s0: f64, s1: f64, p0: f64, p1: f64, v: f64) -> f64 {
    let h = s1 - s0;
    if h == 0.0 {
        return 0.5 * (t0 + t1);
    }
    let secant = (t1 - t0) / h;
    let slope = |p: f64| if p > 0.0 { -1.0 / p } else { secant * 3.0 };
    let (mut m0, mut m1) = (slope(p0), slope(p1));
    let (a, b) = (m0 / secant, m1 / secant);
    if a < 0.0 || b < 0.0 {
        m0 = secant;
        m1 = secant;
    } else if a * a + b * b > 9.0 {
        let tau = 3.0 / (a * a + b * b).sqrt();
        m0 = tau * a * secant;
        m1 = tau * b * secant;
    }
    let x = (v - s0) / h;
    let x2 = x * x;
    let x3 = x2 * x;
    (2.0 * x3 - 3.0 * x2 + 1.0) * t0
        + (x3 - 2.0 * x2 + x) * h * m0
        + (-2.0 * x3 + 3.0 * x2) * t1
        + (x3 - x2) * h * m1
}

fn knot_grid(pdf: &ExpSeries) -> Vec<f64> {
    let slowest = pdf.slowest_rate();
    let t_max = SPAN / slowest;
    let mut knots: Vec<f64> = (0..=BASE_KNOTS).map(|i| t_max * i as f64 / BASE_KNOTS as f64).collect();
    let mut rates: Vec<f64> = pdf.terms().iter().map(|t| t.rate.re).collect();
    rates.sort_by(f64::total_cmp);
    rates.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs());
    for &a in &rates {
        let end = SPAN / a;
        if end < t_max {
            knots.extend((1..=RATE_KNOTS).map(|i| end * i as f64 / RATE_KNOTS as f64));
        }
    }
    for term in pdf.terms() {
        let omega = term.rate.im.abs();
        if omega > 0.0 {
            let end = SPAN / term.rate.re;
            let n = ((end * omega * 16.0 / std::f64::consts::TAU).ceil() as usize).min(MAX_OSC_KNOTS);
            knots.extend((1..=n).map(|i| end * i as f64 / n as f64));
        }
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    knots
}

/// Negative densities are rejected with the first offending interval.
fn scan_negative(pdf: &ExpSeries, knots: &[f64], dens: &[f64], what: &str) -> Result<()> {
    let scale = dens.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = -NEGATIVE_TOL * scale;
    let mids: Vec<f64> = knots.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let mid_dens: Vec<f64> = mids.par_iter().map(|&t| pdf.eval(t)).collect();
    let mut points: Vec<(f64, f64)> = knots.iter().copied().zip(dens.iter().copied()).collect();
    points.extend(mids.into_iter().zip(mid_dens));
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut start = None;
    let mut end = 0.0;
    for &(t, v) in &points {
        if v < floor {
            start.get_or_insert(t);
            end = t;
        } else if start.is_some() {
            break;
        }
    }
    match start {
        Some(from) => Err(Error::ModelPathology { what: what.to_string(), from, to: end }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Single,
    Left,
    Right,
}

impl Side {
    pub fn name(&self) -> &'static str {
        match self {
            Side::Single => "single",
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

impl std::str::FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "single" => Ok(Side::Single),
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            other => Err(Error::invalid(format!("unknown side '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEvent {
    pub id: u64,
    pub side: Side,
    pub channel: Channel,
    pub time: f64,
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::invalid("number of events must be >= 1"))
    } else {
        Ok(())
    }
}

/// Draws `n` times from a decay law on one counter-based stream.
pub fn sample_law(law: &DecayLaw, n: usize, seed: u64, stream: Stream) -> Result<Vec<f64>> {
    let table = InverseTail::new(law.series(), law.model().name())?;
    Ok(draw_times(&table, n, seed, stream))
}

/// Draws `n` times from a decay law conditioned on `t >= t_min`.
pub fn sample_law_after(law: &DecayLaw, t_min: f64, n: usize, seed: u64, stream: Stream) -> Result<Vec<f64>> {
    if !(t_min >= 0.0) || !t_min.is_finite() {
        return Err(Error::invalid(format!("t_min must be finite and >= 0, got {t_min}")));
    }
    let table = InverseTail::new(law.series(), law.model().name())?;
    let mass = table.pdf.tail(t_min);
    if !(mass > 0.0) {
        return Err(Error::DegenerateState(format!("no probability mass beyond {t_min:e}")));
    }
    Ok((0..n as u64)
        .into_par_iter()
        .map(|i| table.invert(mass * open_unit(&mut substream(seed, stream, i))).max(t_min))
        .collect())
}

fn draw_times(table: &InverseTail, n: usize, seed: u64, stream: Stream) -> Vec<f64> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| table.invert(open_unit(&mut substream(seed, stream, i))))
        .collect()
}

/// Decay times of a single superposition, labelled as pair-channel events.
pub fn sample_decay_times(model: DecayModel, state: &SuperpositionState, n: usize, seed: u64) -> Result<Vec<DecayEvent>> {
    check_count(n)?;
    let law = DecayLaw::new(model, state)?;
    let times = sample_law(&law, n, seed, Stream::DECAY_TIMES)?;
    Ok(times
        .into_iter()
        .enumerate()
        .map(|(i, time)| DecayEvent { id: i as u64, side: Side::Single, channel: Channel::Pair, time })
        .collect())
}

/// Decays of an initial `K0` into both CP channels.
pub fn sample_kaon_decays(model: DecayModel, params: &KaonParams, n: usize, seed: u64) -> Result<Vec<DecayEvent>> {
    check_count(n)?;
    let pair = DecayLaw::new(model, &SuperpositionState::kaon_channel(params, Channel::Pair))?;
    let triplet = DecayLaw::new(model, &SuperpositionState::kaon_channel(params, Channel::Triplet))?;
    let p_pair = pair.weight() / (pair.weight() + triplet.weight());
    let pair_table = InverseTail::new(pair.series(), "pair channel")?;
    let triplet_table = InverseTail::new(triplet.series(), "triplet channel")?;
    Ok((0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, Stream::CHANNELS, i);
            let u = open_unit(&mut rng);
            let v = open_unit(&mut rng);
            let (channel, table) = if u <= p_pair { (Channel::Pair, &pair_table) } else { (Channel::Triplet, &triplet_table) };
            DecayEvent { id: i, side: Side::Single, channel, time: table.invert(v) }
        })
        .collect())
}

/// Conditional draw of `tr` given `tl` from the slice series.
fn invert_slice(slice: &ExpSeries, v: f64) -> f64 {
    let total = slice.integral();
    let target = v * total;
    let slowest = slice.slowest_rate();
    let mut hi = SPAN / slowest;
    while slice.tail(hi) > target && hi < 1e6 / slowest {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    let mut t = 0.5 * hi;
    for _ in 0..200 {
        let s = slice.tail(t) - target;
        let p = slice.eval(t);
        if s > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = if p > 0.0 { t + s / p } else { f64::NAN };
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - t).abs() <= 4.0 * f64::EPSILON * t.abs().max(f64::MIN_POSITIVE) {
            return next;
        }
        t = next;
    }
    t
}

fn scan_joint(law: &JointLaw) -> Result<()> {
    let series = law.series();
    let t_max = SPAN / series.slowest_rate();
    let mut axis = Vec::new();
    let mut rates: Vec<f64> = series.terms().iter().flat_map(|t| [t.rate_left.re, t.rate_right.re]).collect();
    rates.sort_by(f64::total_cmp);
    rates.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs());
    for &a in &rates {
        let end = (SPAN / a).min(t_max);
        axis.extend((0..=160).map(|i| end * i as f64 / 160.0));
    }
    axis.sort_by(f64::total_cmp);
    axis.dedup();
    let values: Vec<(f64, f64, f64)> = axis
        .par_iter()
        .flat_map_iter(|&a| axis.iter().map(move |&b| (a, b, law.pdf(a, b))))
        .collect();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.2.abs()));
    let neg: Vec<f64> = values.iter().filter(|v| v.2 < -NEGATIVE_TOL * scale).map(|v| v.0 + v.1).collect();
    if neg.is_empty() {
        Ok(())
    } else {
        let from = neg.iter().copied().fold(f64::INFINITY, f64::min);
        let to = neg.iter().copied().fold(0.0, f64::max);
        Err(Error::ModelPathology { what: format!("{} joint density along tl+tr", law.model()), from, to })
    }
}

/// Correlated decay pairs: `tl` from the marginal, then `tr` from the conditional.
pub fn sample_joint(model: DecayModel, state: &EntangledState, calibration: f64, n: usize, seed: u64) -> Result<Vec<DecayEvent>> {
    check_count(n)?;
    let law = JointLaw::new(model, *state, calibration)?;
    scan_joint(&law)?;
    let marginal = InverseTail::new(&law.series().marginal_left(), "joint marginal")?;
    let series = law.series();
    let pairs: Vec<(f64, f64)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, Stream::JOINT, i);
            let tl = marginal.invert(open_unit(&mut rng));
            let tr = invert_slice(&series.slice_right(tl), open_unit(&mut rng));
            (tl, tr)
        })
        .collect();
    Ok(pairs
        .into_iter()
        .enumerate()
        .flat_map(|(i, (tl, tr))| {
            let id = 2 * i as u64;
            [
                DecayEvent { id, side: Side::Left, channel: Channel::Pair, time: tl },
                DecayEvent { id: id + 1, side: Side::Right, channel: Channel::Pair, time: tr },
            ]
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub window_tau: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub n_bins: usize,
    pub background_rate: f64,
    pub efficiency: f64,
    pub branching_charged: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            window_tau: 0.0,
            t_min: 0.0,
            t_max: 20.0 * crate::params::TAU_S,
            n_bins: 200,
            background_rate: 0.0,
            efficiency: 1.0,
            branching_charged: 2.0 / 3.0,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !(self.t_min >= 0.0 && self.t_max > self.t_min && self.t_max.is_finite()) {
            return Err(Error::invalid("detector range needs 0 <= t_min < t_max"));
        }
        if self.n_bins == 0 {
            return Err(Error::invalid("detector needs at least one bin"));
        }
        if !(self.window_tau >= 0.0 && self.window_tau.is_finite()) {
            return Err(Error::invalid("window must be finite and >= 0"));
        }
        if !(self.background_rate >= 0.0 && self.background_rate.is_finite()) {
            return Err(Error::invalid("background rate must be finite and >= 0"));
        }
        if !unit(self.efficiency) || !unit(self.branching_charged) {
            return Err(Error::invalid("efficiency and branching must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn edges(&self) -> Vec<f64> {
        let w = (self.t_max - self.t_min) / self.n_bins as f64;
        (0..=self.n_bins).map(|i| self.t_min + w * i as f64).collect()
    }

    fn bin_of(&self, t: f64) -> Option<usize> {
        if t < self.t_min || t >= self.t_max {
            return None;
        }
        let k = ((t - self.t_min) / (self.t_max - self.t_min) * self.n_bins as f64) as usize;
        Some(k.min(self.n_bins - 1))
    }
}

/// Per-bin counts in the pair and triplet channels.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedCounts {
    pub edges: Vec<f64>,
    pub pair: Vec<u64>,
    pub triplet: Vec<u64>,
    /// Signal events that survived efficiency, branching and range cuts.
    pub detected: u64,
}

impl BinnedCounts {
    pub fn new(edges: Vec<f64>, pair: Vec<u64>, triplet: Vec<u64>) -> Result<Self> {
        if edges.len() < 2 || pair.len() + 1 != edges.len() || triplet.len() != pair.len() {
            return Err(Error::invalid("bin edges and counts do not match"));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("bin edges must increase"));
        }
        let detected = pair.iter().sum::<u64>() + triplet.iter().sum::<u64>();
        Ok(Self { edges, pair, triplet, detected })
    }

    /// Ideal-detector histogram of pair and triplet times; times outside the edges are dropped.
    pub fn histogram(edges: Vec<f64>, pair_times: &[f64], triplet_times: &[f64]) -> Result<Self> {
        let n = edges.len().saturating_sub(1);
        let fill = |times: &[f64]| {
            let mut counts = vec![0u64; n];
            for &t in times {
                let k = edges.partition_point(|&e| e <= t);
                if k >= 1 && k <= n && t < edges[n] {
                    counts[k - 1] += 1;
                }
            }
            counts
        };
        let (pair, triplet) = (fill(pair_times), fill(triplet_times));
        Self::new(edges, pair, triplet)
    }

    pub fn n_bins(&self) -> usize {
        self.pair.len()
    }

    pub fn bins(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.edges.windows(2).map(|w| (w[0], w[1]))
    }
}

/// Folds events through the detector: window smearing, efficiency, the
/// charged branching of pair decays, binning and Poisson background.
pub fn detect(events: &[DecayEvent], config: &DetectorConfig, seed: u64) -> Result<BinnedCounts> {
    config.validate()?;
    let n = config.n_bins;
    let mut pair = vec![0u64; n];
    let mut triplet = vec![0u64; n];
    let kept: Vec<Option<(usize, Channel)>> = events
        .par_iter()
        .map(|e| {
            let mut rng = substream(seed, Stream::DETECT, e.id);
            let smear = (open_unit(&mut rng) - 0.5) * config.window_tau;
            let accept = open_unit(&mut rng) <= config.efficiency;
            let charged = open_unit(&mut rng) <= config.branching_charged;
            if !accept || (e.channel == Channel::Pair && !charged) {
                return None;
            }
            config.bin_of(e.time + smear).map(|b| (b, e.channel))
        })
        .collect();
    let mut detected = 0u64;
    for (b, c) in kept.into_iter().flatten() {
        detected += 1;
        match c {
            Channel::Pair => pair[b] += 1,
            Channel::Triplet => triplet[b] += 1,
        }
    }
    if config.background_rate > 0.0 {
        let width = (config.t_max - config.t_min) / n as f64;
        let mean = config.background_rate * width;
        let poisson = Poisson::new(mean).map_err(|e| Error::invalid(format!("background: {e}")))?;
        for b in 0..n {
            pair[b] += draw_poisson(&poisson, &mut substream(seed, Stream::BACKGROUND, 2 * b as u64));
            triplet[b] += draw_poisson(&poisson, &mut substream(seed, Stream::BACKGROUND, 2 * b as u64 + 1));
        }
    }
    Ok(BinnedCounts { edges: config.edges(), pair, triplet, detected })
}

fn draw_poisson(p: &Poisson<f64>, rng: &mut ChaCha8Rng) -> u64 {
    p.sample(rng) as u64
}

pub fn write_events(path: &Path, events: &[DecayEvent]) -> Result<()> {
    write_events_to(std::fs::File::create(path)?, events)
}

pub fn write_events_to<W: std::io::Write>(out: W, events: &[DecayEvent]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["event_id", "side", "channel", "time_s"])?;
    for e in events {
        w.write_record([e.id.to_string(), e.side.name().into(), e.channel.name().into(), format!("{:.16e}", e.time)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_events(path: &Path) -> Result<Vec<DecayEvent>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["event_id", "side", "channel", "time_s"] {
        return Err(Error::invalid(format!("{}: unexpected event header", path.display())));
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = || Error::invalid(format!("{}: malformed event on data line {}", path.display(), line + 1));
        let id = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let side = rec.get(1).ok_or_else(bad)?.parse()?;
        let channel = rec.get(2).ok_or_else(bad)?.parse()?;
        let time: f64 = rec.get(3).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        if !(time >= 0.0 && time.is_finite()) {
            return Err(bad());
        }
        out.push(DecayEvent { id, side, channel, time });
    }
    Ok(out)
}

pub fn write_binned(path: &Path, counts: &BinnedCounts) -> Result<()> {
    write_binned_to(std::fs::File::create(path)?, counts)
}

pub fn write_binned_to<W: std::io::Write>(out: W, counts: &BinnedCounts) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin_lo_s", "bin_hi_s", "pair_count", "triplet_count"])?;
    for ((lo, hi), (p, t)) in counts.bins().zip(counts.pair.iter().zip(&counts.triplet)) {
        w.write_record([format!("{lo:.16e}"), format!("{hi:.16e}"), p.to_string(), t.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_binned(path: &Path) -> Result<BinnedCounts> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["bin_lo_s", "bin_hi_s", "pair_count", "triplet_count"] {
        return Err(Error::invalid(format!("{}: unexpected binned header", path.display())));
    }
    let mut edges = Vec::new();
    let mut pair = Vec::new();
    let mut triplet = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = || Error::invalid(format!("{}: malformed bin on data line {}", path.display(), line + 1));
        let lo: f64 = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let hi: f64 = rec.get(1).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        match edges.last() {
            None => edges.push(lo),
            Some(&prev) if prev == lo => {}
            Some(_) => return Err(Error::invalid(format!("{}: bins are not contiguous", path.display()))),
        }
        edges.push(hi);
        pair.push(rec.get(2).and_then(|s| s.parse().ok()).ok_or_else(bad)?);
        triplet.push(rec.get(3).and_then(|s| s.parse().ok()).ok_or_else(bad)?);
    }
    BinnedCounts::new(edges, pair, triplet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ComplexEnergy;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn exp_law(rate: f64) -> DecayLaw {
        let s = SuperpositionState::new(vec![Complex64::new(1.0, 0.0)], vec![ComplexEnergy::new(0.0, rate).unwrap()]).unwrap();
        DecayLaw::new(DecayModel::Standard, &s).unwrap()
    }

    #[test]
    fn inversion_is_exact_for_single_exponential() {
        let law = exp_law(2.0);
        let table = InverseTail::new(law.series(), "test").unwrap();
        for &v in &[1.0, 0.9, 0.5, 1e-3, 1e-9, 1e-15] {
            let t = table.invert(v);
            assert_relative_eq!(t, -(v as f64).ln() / 2.0, max_relative = 1e-12, epsilon = 1e-300);
        }
    }

    #[test]
    fn inversion_round_trips_interfering_law() {
        let p = KaonParams::default();
        let law = DecayLaw::new(DecayModel::TimeOperator, &SuperpositionState::kaon_channel(&p, Channel::Pair)).unwrap();
        let table = InverseTail::new(law.series(), "test").unwrap();
        for &v in &[0.999, 0.6, 0.1, 1e-4, 3e-6, 1e-7, 1e-12] {
            let t = table.invert(v);
            assert_relative_eq!(law.tail(t), v, max_relative = 1e-9);
        }
    }

    #[test]
    fn negative_standard_density_is_reported() {
        let p = KaonParams::default();
        let r = sample_decay_times(DecayModel::Standard, &SuperpositionState::kaon_channel(&p, Channel::Pair), 10, 1);
        match r {
            Err(Error::ModelPathology { from, to, .. }) => {
                assert!(from / p.tau_s() > 18.0 && from / p.tau_s() < 20.0);
                assert!(to / p.tau_s() > 23.0 && to / p.tau_s() < 25.0);
            }
            other => panic!("expected pathology, got {other:?}"),
        }
    }

    #[test]
    fn sampling_is_deterministic_and_thread_independent() {
        let p = KaonParams::default();
        let s = SuperpositionState::kaon_channel(&p, Channel::Pair);
        let a = sample_decay_times(DecayModel::TimeOperator, &s, 2000, 42).unwrap();
        let b = sample_decay_times(DecayModel::TimeOperator, &s, 2000, 42).unwrap();
        assert_eq!(a, b);
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = single.install(|| sample_decay_times(DecayModel::TimeOperator, &s, 2000, 42).unwrap());
        assert_eq!(a, c);
        let prefix = sample_decay_times(DecayModel::TimeOperator, &s, 500, 42).unwrap();
        assert_eq!(&a[..500], &prefix[..]);
    }

    #[test]
    fn exponential_sample_mean() {
        let law = exp_law(1.0);
        let t = sample_law(&law, 200_000, 9, Stream::DECAY_TIMES).unwrap();
        let mean = t.iter().sum::<f64>() / t.len() as f64;
        assert!((mean - 1.0).abs() < 5.0 / (t.len() as f64).sqrt());
    }

    #[test]
    fn conditional_sampling_stays_beyond_cut() {
        let law = exp_law(1.0);
        let t = sample_law_after(&law, 3.0, 100_000, 2, Stream::DECAY_TIMES).unwrap();
        assert!(t.iter().all(|&x| x >= 3.0));
        let mean = t.iter().sum::<f64>() / t.len() as f64;
        assert!((mean - 4.0).abs() < 5.0 / (t.len() as f64).sqrt());
        assert!(sample_law_after(&law, -1.0, 10, 2, Stream::DECAY_TIMES).is_err());
    }

    #[test]
    fn histogram_counts_in_range_only() {
        let b = BinnedCounts::histogram(vec![0.0, 1.0, 2.0], &[0.0, 0.5, 1.0, 1.999, 2.0, -0.1], &[1.5]).unwrap();
        assert_eq!(b.pair, vec![2, 2]);
        assert_eq!(b.triplet, vec![0, 1]);
        assert_eq!(b.detected, 5);
    }

    #[test]
    fn zero_events_rejected() {
        let p = KaonParams::default();
        assert!(sample_decay_times(DecayModel::Hybrid, &SuperpositionState::kaon_channel(&p, Channel::Pair), 0, 1).is_err());
    }

    #[test]
    fn joint_pairs_have_two_sides() {
        let p = KaonParams::default();
        let s = EntangledState::alpha(p, 0.0).unwrap();
        let ev = sample_joint(DecayModel::TimeOperator, &s, 1.0, 1000, 5).unwrap();
        assert_eq!(ev.len(), 2000);
        assert!(ev.chunks(2).all(|c| c[0].side == Side::Left && c[1].side == Side::Right && c[1].id == c[0].id + 1));
    }

    #[test]
    fn beta_standard_joint_is_pathological() {
        let p = KaonParams::default();
        let s = EntangledState::beta(p, 0.0).unwrap();
        assert!(matches!(sample_joint(DecayModel::Standard, &s, 1.0, 10, 1), Err(Error::ModelPathology { .. })));
        assert!(sample_joint(DecayModel::Hybrid, &s, 1.0, 10, 1).is_ok());
    }

    #[test]
    fn detect_bookkeeping() {
        let p = KaonParams::default();
        let ev = sample_kaon_decays(DecayModel::TimeOperator, &p, 20_000, 3).unwrap();
        let cfg = DetectorConfig { t_max: 1e-6, n_bins: 100, ..DetectorConfig::default() };
        let b = detect(&ev, &cfg, 4).unwrap();
        let total: u64 = b.pair.iter().sum::<u64>() + b.triplet.iter().sum::<u64>();
        assert_eq!(total, b.detected);
        let off = DetectorConfig { efficiency: 0.0, ..cfg };
        let none = detect(&ev, &off, 4).unwrap();
        assert_eq!(none.detected, 0);
        assert!(none.pair.iter().all(|&c| c == 0));
    }

    #[test]
    fn background_only_is_poisson() {
        let cfg = DetectorConfig { t_min: 0.0, t_max: 1.0, n_bins: 4000, background_rate: 20_000.0, ..DetectorConfig::default() };
        let b = detect(&[], &cfg, 11).unwrap();
        let mean = b.pair.iter().sum::<u64>() as f64 / 4000.0;
        let var = b.pair.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / 3999.0;
        assert!((mean - 5.0).abs() < 0.2, "{mean}");
        let dispersion = var / mean;
        assert!((dispersion - 1.0).abs() < 0.1, "{dispersion}");
    }

    #[test]
    fn detector_validation() {
        let bad = DetectorConfig { efficiency: 1.5, ..DetectorConfig::default() };
        assert!(detect(&[], &bad, 1).is_err());
        let bad = DetectorConfig { t_max: 0.0, ..DetectorConfig::default() };
        assert!(detect(&[], &bad, 1).is_err());
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = KaonParams::default();
        let ev = sample_kaon_decays(DecayModel::Hybrid, &p, 300, 1).unwrap();
        let path = dir.path().join("ev.csv");
        write_events(&path, &ev).unwrap();
        assert_eq!(read_events(&path).unwrap(), ev);
        let b = detect(&ev, &DetectorConfig::default(), 2).unwrap();
        let bp = dir.path().join("b.csv");
        write_binned(&bp, &b).unwrap();
        let back = read_binned(&bp).unwrap();
        assert_eq!(back.pair, b.pair);
        assert_eq!(back.triplet, b.triplet);
        assert_eq!(back.edges, b.edges);
    }

    #[test]
    fn malformed_files_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "event_id,side,channel,time_s\n0,single,pair,-1.0\n").unwrap();
        assert!(read_events(&path).is_err());
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(read_events(&path).is_err());
    }
}
