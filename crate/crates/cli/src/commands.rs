use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use kaonlab::basis::{k0_cp, k0bar_cp, Spinor};
use kaonlab::entangled::{EntangledState, Family, JointLaw, TwoTimeGrid};
use kaonlab::inference::{discrimination_power, extract_epsilon, fit_intensity, weight_ratio_estimate, FitParam, FitSetup, PowerOptions};
use kaonlab::sampler::{
    detect, read_binned, read_events, sample_decay_times, sample_joint, sample_kaon_decays, write_binned_to, write_events_to,
    DetectorConfig,
};
use kaonlab::single::{centred_grid, Channel, DecayLaw, SuperpositionState};
use kaonlab::spectral::{lorentzian_spectrum, survival_curve, Convention, SpectrumGrid};
use kaonlab::zeno::{zeno_analytic, zeno_sequence, MeasurementSchedule};
use kaonlab::{DecayModel, Error, KaonParams};
use num_complex::Complex64;

use crate::args::{Cli, Command};
use crate::config::Settings;
use crate::error::{CliError, CliResult};
use crate::report::{sci, Report};

/// Points used to scan a single-decay density for negative stretches.
const SCAN_POINTS: usize = 20_000;

pub fn execute(cli: &Cli) -> CliResult<()> {
    let settings = Settings::load(cli.config.as_deref(), &cli.flag_pairs())?;
    let params = kaon_params(&settings)?;
    let model: DecayModel = settings.get("model")?;
    let seed: u64 = settings.get("seed")?;
    let ctx = Ctx { settings, params, model, seed };
    match &cli.command {
        Command::Predict(_) => predict(&ctx),
        Command::Simulate(_) => simulate(&ctx),
        Command::Detect(_) => detect_cmd(&ctx),
        Command::Fit(_) => fit(&ctx),
        Command::Discriminate(_) => discriminate(&ctx),
        Command::ExtractEpsilon(_) => epsilon(&ctx),
        Command::Zeno(_) => zeno(&ctx),
        Command::Spectrum(_) => spectrum(&ctx),
    }
}

struct Ctx {
    settings: Settings,
    params: KaonParams,
    model: DecayModel,
    seed: u64,
}

impl Ctx {
    fn out_path(&self) -> Option<PathBuf> {
        self.settings.is_set("out").then(|| PathBuf::from(self.settings.raw("out")))
    }

    /// Writes `body` to `--out`, or to standard output.
    fn emit(&self, body: impl FnOnce(&mut dyn Write) -> CliResult<()>) -> CliResult<()> {
        match self.out_path() {
            Some(p) => {
                let file = File::create(&p).map_err(|e| CliError::usage(format!("cannot create {}: {e}", p.display())))?;
                let mut w = BufWriter::new(file);
                body(&mut w)?;
                w.flush()?;
            }
            None => {
                let stdout = io::stdout();
                let mut w = BufWriter::new(stdout.lock());
                body(&mut w)?;
                w.flush()?;
            }
        }
        Ok(())
    }

    /// CSV output; with `--out` a short report goes to standard output.
    fn emit_table(&self, command: &str, body: impl FnOnce(&mut dyn Write) -> CliResult<usize>) -> CliResult<()> {
        let mut rows = 0;
        self.emit(|w| {
            rows = body(w)?;
            Ok(())
        })?;
        if let Some(p) = self.out_path() {
            let mut r = Report::new(command);
            r.text("out", &p.display().to_string()).int("rows", rows as u64);
            r.write_to(io::stdout().lock())?;
        }
        Ok(())
    }

    fn emit_report(&self, r: &Report) -> CliResult<()> {
        self.emit(|w| Ok(r.write_to(w)?))
    }
}

fn kaon_params(s: &Settings) -> CliResult<KaonParams> {
    let lifetime = |tau: &str, gamma: &str| -> CliResult<f64> {
        if s.is_set(gamma) {
            Ok(1.0 / s.get::<f64>(gamma)?)
        } else {
            s.get(tau)
        }
    };
    let tau_s = lifetime("kaon.tau_s", "kaon.gamma_s")?;
    let tau_l = lifetime("kaon.tau_l", "kaon.gamma_l")?;
    let delta_m = if s.is_set("kaon.delta_m") { s.get("kaon.delta_m")? } else { 0.5 * (1.0 / tau_s + 1.0 / tau_l) };
    let eps = Complex64::from_polar(s.get("kaon.epsilon_abs")?, s.get::<f64>("kaon.epsilon_arg_deg")?.to_radians());
    Ok(KaonParams::from_lifetimes(tau_s, tau_l, delta_m, eps)?)
}

fn require_k0(s: &Settings) -> CliResult<()> {
    match s.raw("state") {
        "k0" => Ok(()),
        other => Err(CliError::usage(format!("unsupported state '{other}' (k0)"))),
    }
}

fn entangled(c: &Ctx) -> CliResult<(EntangledState, f64)> {
    let family: Family = c.settings.get("joint.family")?;
    let state = EntangledState::new(family, c.settings.get("joint.phase")?, c.params)?;
    Ok((state, c.settings.get("joint.calibration")?))
}

fn csv_line(w: &mut dyn Write, cells: &[f64]) -> io::Result<()> {
    let line: Vec<String> = cells.iter().map(|&x| sci(x)).collect();
    writeln!(w, "{}", line.join(","))
}

fn predict(c: &Ctx) -> CliResult<()> {
    let t_max: f64 = c.settings.get("predict.t_max")?;
    let bins: usize = c.settings.get("predict.bins")?;
    if c.settings.get::<bool>("predict.joint")? {
        return predict_joint(c, t_max, bins);
    }
    require_k0(&c.settings)?;
    let channel: Channel = c.settings.get("predict.channel")?;
    let law = DecayLaw::new(c.model, &SuperpositionState::kaon_channel(&c.params, channel))?;
    let grid = centred_grid(t_max, bins)?;
    let scan: Vec<f64> = (0..=SCAN_POINTS).map(|i| t_max * i as f64 / SCAN_POINTS as f64).collect();
    if let Some(&(from, to)) = law.negative_intervals(&scan).first() {
        return Err(Error::ModelPathology { what: format!("{} {} density", c.model, channel.name()), from, to }.into());
    }
    c.emit_table("predict", |w| {
        writeln!(w, "t_s,survival,pdf")?;
        for &t in &grid {
            csv_line(w, &[t, law.survival(t), law.pdf(t)])?;
        }
        Ok(grid.len())
    })
}

fn predict_joint(c: &Ctx, t_max: f64, bins: usize) -> CliResult<()> {
    let (state, calibration) = entangled(c)?;
    let law = JointLaw::new(c.model, state, calibration)?;
    let grid = TwoTimeGrid::square(t_max, bins)?;
    let rows: Vec<[f64; 4]> = grid.points().map(|(a, b)| [a, b, state.joint_survival(a, b), law.pdf(a, b)]).collect();
    let scale = rows.iter().fold(0.0f64, |m, r| m.max(r[3].abs()));
    let negative: Vec<f64> = rows.iter().filter(|r| r[3] < -1e-13 * scale).map(|r| r[0] + r[1]).collect();
    if !negative.is_empty() {
        let from = negative.iter().copied().fold(f64::INFINITY, f64::min);
        let to = negative.iter().copied().fold(0.0, f64::max);
        return Err(Error::ModelPathology { what: format!("{} joint density along tl+tr", c.model), from, to }.into());
    }
    c.emit_table("predict", |w| {
        writeln!(w, "tl_s,tr_s,survival,pdf")?;
        for r in &rows {
            csv_line(w, r)?;
        }
        Ok(rows.len())
    })
}

fn simulate(c: &Ctx) -> CliResult<()> {
    let n: usize = c.settings.get("simulate.events")?;
    let events = if c.settings.get::<bool>("predict.joint")? {
        let (state, calibration) = entangled(c)?;
        sample_joint(c.model, &state, calibration, n, c.seed)?
    } else {
        require_k0(&c.settings)?;
        match c.settings.raw("simulate.channel") {
            "both" => sample_kaon_decays(c.model, &c.params, n, c.seed)?,
            other => {
                let channel: Channel = other.parse()?;
                let mut ev = sample_decay_times(c.model, &SuperpositionState::kaon_channel(&c.params, channel), n, c.seed)?;
                ev.iter_mut().for_each(|e| e.channel = channel);
                ev
            }
        }
    };
    c.emit_table("simulate", |w| {
        write_events_to(w, &events)?;
        Ok(events.len())
    })
}

fn detector(s: &Settings) -> CliResult<DetectorConfig> {
    let d = DetectorConfig {
        window_tau: s.get("detector.window_tau")?,
        t_min: s.get("detector.t_min")?,
        t_max: s.get("detector.t_max")?,
        n_bins: s.get("detector.n_bins")?,
        background_rate: s.get("detector.background_rate")?,
        efficiency: s.get("detector.efficiency")?,
        branching_charged: s.get("detector.branching_charged")?,
    };
    d.validate()?;
    Ok(d)
}

fn detect_cmd(c: &Ctx) -> CliResult<()> {
    let config = detector(&c.settings)?;
    let path: PathBuf = c.settings.get("detect.events")?;
    let events = read_events(&path)?;
    let counts = detect(&events, &config, c.seed)?;
    c.emit_table("detect", |w| {
        write_binned_to(w, &counts)?;
        Ok(counts.n_bins())
    })
}

fn fit(c: &Ctx) -> CliResult<()> {
    let path: PathBuf = c.settings.get("fit.binned")?;
    let free: Vec<FitParam> = c.settings.list("fit.free")?;
    if free.is_empty() {
        return Err(CliError::usage("'fit.free' needs at least one parameter"));
    }
    let binned = read_binned(&path)?;
    let mut setup = FitSetup::new(c.model, c.params, &free);
    setup.starts = c.settings.get("fit.starts")?;
    let f = fit_intensity(&binned, &setup)?;
    let mut r = Report::new("fit");
    r.text("model", f.model.name());
    for p in FitParam::ALL {
        r.num(p.name(), f.value(p));
        if let Some(s) = f.sigma(p) {
            r.num(&format!("{}_sigma", p.name()), s);
        }
    }
    r.num("neg_log_likelihood", f.neg_log_likelihood);
    r.texts("free", &f.free.iter().map(|p| p.name().to_string()).collect::<Vec<_>>());
    r.texts("unconstrained", &f.unconstrained.iter().map(|p| p.name().to_string()).collect::<Vec<_>>());
    r.int("evaluations", f.evaluations as u64);
    if c.settings.get::<bool>("fit.weight_ratio")? {
        let w = weight_ratio_estimate(&binned, &c.params)?;
        r.num("weight_ratio", w.value).num("weight_ratio_sigma", w.sigma);
        r.num("long_weight", w.long_weight).num("interference_weight", w.interference_weight).num("interference_phase", w.phase);
    }
    c.emit_report(&r)
}

fn discriminate(c: &Ctx) -> CliResult<()> {
    require_k0(&c.settings)?;
    let null: DecayModel = c.settings.get("discriminate.against")?;
    let channel: Channel = c.settings.get("discriminate.channel")?;
    let sizes: Vec<usize> = c.settings.list("discriminate.n_events")?;
    let opts = PowerOptions {
        alpha: c.settings.get("discriminate.alpha")?,
        trials: c.settings.get("discriminate.trials")?,
        seed: c.seed,
        n_max: c.settings.get("discriminate.n_max")?,
        per_decade: c.settings.get("discriminate.per_decade")?,
    };
    let state = SuperpositionState::kaon_channel(&c.params, channel);
    let rep = discrimination_power(c.model, null, &state, &sizes, &opts)?;
    let mut r = Report::new("discriminate");
    r.text("generator", rep.model_a.name()).text("null", rep.model_b.name());
    r.num("alpha", rep.alpha).int("trials", rep.trials as u64).num("critical_value", rep.critical_value);
    for p in &rep.requested {
        r.num(&format!("power_n{}", p.n_events), p.power).num(&format!("power_n{}_sigma", p.n_events), p.sigma);
    }
    match rep.crossing {
        Some(n) => r.int("crossing_n", n as u64),
        None => r.text("crossing_n", "none"),
    };
    c.emit_report(&r)
}

fn epsilon(c: &Ctx) -> CliResult<()> {
    let e = extract_epsilon(
        c.settings.get("extract.pairs")?,
        c.settings.get("extract.decays")?,
        &c.params,
        c.settings.get("extract.tau_factor")?,
    )?;
    let mut r = Report::new("extract-epsilon");
    r.num("epsilon_abs", e.epsilon_abs).num("epsilon_abs_sigma", e.sigma);
    r.num("ratio", e.ratio).num("ratio_total", e.ratio_total).flag("tau_factor", e.tau_factor_applied);
    c.emit_report(&r)
}

fn zeno_state(name: &str) -> CliResult<Spinor> {
    Ok(match name {
        "k0" => k0_cp(),
        "k0bar" => k0bar_cp(),
        "k1" => Spinor::real(1.0, 0.0),
        "k2" => Spinor::real(0.0, 1.0),
        other => return Err(CliError::usage(format!("unknown state '{other}' (k0|k0bar|k1|k2)"))),
    })
}

fn zeno(c: &Ctx) -> CliResult<()> {
    let psi = zeno_state(c.settings.raw("zeno.state"))?;
    let schedule = MeasurementSchedule::new(c.settings.list("zeno.times")?, c.settings.get("zeno.readout")?)?;
    let mode = c.settings.raw("zeno.mode");
    let (analytic, mc) = match mode {
        "analytic" => (true, false),
        "monte-carlo" => (false, true),
        "both" => (true, true),
        other => return Err(CliError::usage(format!("unknown mode '{other}' (analytic|monte-carlo|both)"))),
    };
    let mut r = Report::new("zeno");
    r.int("measurements", schedule.times().len() as u64).num("readout_s", schedule.readout());
    if analytic {
        let o = zeno_analytic(psi, &c.params, &schedule)?;
        r.num("analytic_p_plus", o.p_plus).num("analytic_p_minus", o.p_minus).num("analytic_p_survival", o.p_survival);
    }
    if mc {
        let o = zeno_sequence(psi, &c.params, &schedule, c.settings.get("zeno.trials")?, c.seed)?;
        r.int("trials", o.trials);
        for (k, p) in [("p_plus", o.p_plus), ("p_minus", o.p_minus), ("p_survival", o.p_survival)] {
            r.num(&format!("mc_{k}"), p).num(&format!("mc_{k}_sigma"), o.sigma(p));
        }
    }
    c.emit_report(&r)
}

fn spectrum(c: &Ctx) -> CliResult<()> {
    let e = match c.settings.raw("spectrum.lifetime") {
        "short" => c.params.energy_s(),
        "long" => c.params.energy_l(),
        other => return Err(CliError::usage(format!("unknown lifetime '{other}' (short|long)"))),
    };
    let convention: Convention = c.settings.get("spectrum.convention")?;
    let k: f64 = c.settings.get("spectrum.half_span")?;
    if !(k > 0.0) {
        return Err(CliError::usage("'spectrum.half_span' must be > 0"));
    }
    let t_max = if c.settings.is_set("spectrum.t_max") { c.settings.get("spectrum.t_max")? } else { 5.0 / e.width() };
    let points: usize = c.settings.get("spectrum.points")?;
    if points < 2 || !(t_max > 0.0) {
        return Err(CliError::usage("spectrum needs t_max > 0 and at least 2 points"));
    }
    let spec = lorentzian_spectrum(e, SpectrumGrid::around(e, k))?;
    let times: Vec<f64> = (0..points).map(|i| t_max * i as f64 / (points - 1) as f64).collect();
    let survival = survival_curve(&spec, &times, convention)?;
    c.emit_table("spectrum", |w| {
        writeln!(w, "t_s,survival,exponential,relative_deviation")?;
        for (&t, &s) in times.iter().zip(&survival) {
            let exp = (-e.width() * t).exp();
            csv_line(w, &[t, s, exp, s / exp - 1.0])?;
        }
        Ok(times.len())
    })
}
