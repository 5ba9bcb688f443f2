use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "kaonlab", version, about = "Neutral-kaon decay laws: predictions, simulation, fits and tests")]
pub struct Cli {
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// standard | hybrid | twfo
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[command(flatten)]
    pub kaon: KaonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct KaonArgs {
    #[arg(long, global = true)]
    pub tau_s: Option<f64>,
    #[arg(long, global = true)]
    pub tau_l: Option<f64>,
    /// Short width in s⁻¹; overrides --tau-s.
    #[arg(long, global = true)]
    pub gamma_s: Option<f64>,
    #[arg(long, global = true)]
    pub gamma_l: Option<f64>,
    /// Mass difference in s⁻¹ (default: mean width).
    #[arg(long, global = true)]
    pub delta_m: Option<f64>,
    #[arg(long, global = true)]
    pub epsilon_abs: Option<f64>,
    /// Phase of ε in degrees.
    #[arg(long, global = true)]
    pub epsilon_arg: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Survival and decay density curves.
    Predict(PredictArgs),
    /// Monte Carlo decay events.
    Simulate(SimulateArgs),
    /// Bin an event file through the detector model.
    Detect(DetectArgs),
    /// Fit the pair-channel intensity to binned counts.
    Fit(FitArgs),
    /// Power of the likelihood-ratio test between two models.
    Discriminate(DiscriminateArgs),
    /// |ε| from pair and decay counts.
    ExtractEpsilon(ExtractArgs),
    /// Interposed CP measurements on decoupled channels.
    Zeno(ZenoArgs),
    /// Survival implied by a truncated Lorentzian line.
    Spectrum(SpectrumArgs),
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Initial state (k0).
    #[arg(long)]
    pub state: Option<String>,
    /// pair | triplet
    #[arg(long)]
    pub channel: Option<String>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Two-kaon joint densities instead of single decays.
    #[arg(long)]
    pub joint: bool,
    /// alpha | beta
    #[arg(long)]
    pub family: Option<String>,
    /// Relative phase of the entangled state, radians.
    #[arg(long)]
    pub phase: Option<f64>,
    #[arg(long)]
    pub calibration: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub events: Option<usize>,
    #[arg(long)]
    pub state: Option<String>,
    /// both | pair | triplet
    #[arg(long)]
    pub channel: Option<String>,
    #[arg(long)]
    pub joint: bool,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub phase: Option<f64>,
    #[arg(long)]
    pub calibration: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DetectorArgs {
    #[arg(long)]
    pub window_tau: Option<f64>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub background_rate: Option<f64>,
    #[arg(long)]
    pub efficiency: Option<f64>,
    #[arg(long)]
    pub branching_charged: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Event file written by `simulate`.
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[command(flatten)]
    pub detector: DetectorArgs,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Binned file written by `detect`.
    #[arg(long)]
    pub binned: Option<PathBuf>,
    /// Comma list of epsilon_abs, epsilon_arg, delta_m, i0.
    #[arg(long)]
    pub free: Option<String>,
    #[arg(long)]
    pub starts: Option<usize>,
    /// Also estimate the interference-to-long weight ratio.
    #[arg(long)]
    pub weight_ratio: bool,
}

#[derive(Debug, Args)]
pub struct DiscriminateArgs {
    /// Null model; data are drawn from `--model`.
    #[arg(long)]
    pub against: Option<String>,
    #[arg(long)]
    pub channel: Option<String>,
    /// Comma list of sample sizes.
    #[arg(long)]
    pub n_events: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub per_decade: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub pairs: Option<u64>,
    #[arg(long)]
    pub decays: Option<u64>,
    /// Drop the τ_S/τ_L factor.
    #[arg(long)]
    pub no_tau_factor: bool,
}

#[derive(Debug, Args)]
pub struct ZenoArgs {
    /// k0 | k0bar | k1 | k2
    #[arg(long)]
    pub state: Option<String>,
    /// Comma list of measurement times, seconds.
    #[arg(long)]
    pub times: Option<String>,
    #[arg(long)]
    pub readout: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// analytic | monte-carlo | both
    #[arg(long)]
    pub mode: Option<String>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// short | long
    #[arg(long)]
    pub lifetime: Option<String>,
    /// Cutoffs at m ± k·Γ.
    #[arg(long)]
    pub half_span: Option<f64>,
    /// autocorrelation | time_operator
    #[arg(long)]
    pub convention: Option<String>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

fn s<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(ToString::to_string)
}

fn on(flag: bool) -> Option<String> {
    flag.then(|| "true".to_string())
}

impl Cli {
    /// Flags as `(knob, value)` pairs; `None` leaves the knob to the config file or default.
    pub fn flag_pairs(&self) -> Vec<(&'static str, Option<String>)> {
        let k = &self.kaon;
        let mut v = vec![
            ("seed", s(&self.seed)),
            ("model", self.model.clone()),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("kaon.tau_s", s(&k.tau_s)),
            ("kaon.tau_l", s(&k.tau_l)),
            ("kaon.gamma_s", s(&k.gamma_s)),
            ("kaon.gamma_l", s(&k.gamma_l)),
            ("kaon.delta_m", s(&k.delta_m)),
            ("kaon.epsilon_abs", s(&k.epsilon_abs)),
            ("kaon.epsilon_arg_deg", s(&k.epsilon_arg)),
        ];
        match &self.command {
            Command::Predict(a) => v.extend([
                ("state", a.state.clone()),
                ("predict.channel", a.channel.clone()),
                ("predict.t_max", s(&a.t_max)),
                ("predict.bins", s(&a.bins)),
                ("predict.joint", on(a.joint)),
                ("joint.family", a.family.clone()),
                ("joint.phase", s(&a.phase)),
                ("joint.calibration", s(&a.calibration)),
            ]),
            Command::Simulate(a) => v.extend([
                ("simulate.events", s(&a.events)),
                ("state", a.state.clone()),
                ("simulate.channel", a.channel.clone()),
                ("predict.joint", on(a.joint)),
                ("joint.family", a.family.clone()),
                ("joint.phase", s(&a.phase)),
                ("joint.calibration", s(&a.calibration)),
            ]),
            Command::Detect(a) => {
                let d = &a.detector;
                v.extend([
                    ("detect.events", a.events.as_ref().map(|p| p.display().to_string())),
                    ("detector.window_tau", s(&d.window_tau)),
                    ("detector.t_min", s(&d.t_min)),
                    ("detector.t_max", s(&d.t_max)),
                    ("detector.n_bins", s(&d.bins)),
                    ("detector.background_rate", s(&d.background_rate)),
                    ("detector.efficiency", s(&d.efficiency)),
                    ("detector.branching_charged", s(&d.branching_charged)),
                ])
            }
            Command::Fit(a) => v.extend([
                ("fit.binned", a.binned.as_ref().map(|p| p.display().to_string())),
                ("fit.free", a.free.clone()),
                ("fit.starts", s(&a.starts)),
                ("fit.weight_ratio", on(a.weight_ratio)),
            ]),
            Command::Discriminate(a) => v.extend([
                ("discriminate.against", a.against.clone()),
                ("discriminate.channel", a.channel.clone()),
                ("discriminate.n_events", a.n_events.clone()),
                ("discriminate.trials", s(&a.trials)),
                ("discriminate.alpha", s(&a.alpha)),
                ("discriminate.n_max", s(&a.n_max)),
                ("discriminate.per_decade", s(&a.per_decade)),
            ]),
            Command::ExtractEpsilon(a) => v.extend([
                ("extract.pairs", s(&a.pairs)),
                ("extract.decays", s(&a.decays)),
                ("extract.tau_factor", a.no_tau_factor.then(|| "false".to_string())),
            ]),
            Command::Zeno(a) => v.extend([
                ("zeno.state", a.state.clone()),
                ("zeno.times", a.times.clone()),
                ("zeno.readout", s(&a.readout)),
                ("zeno.trials", s(&a.trials)),
                ("zeno.mode", a.mode.clone()),
            ]),
            Command::Spectrum(a) => v.extend([
                ("spectrum.lifetime", a.lifetime.clone()),
                ("spectrum.half_span", s(&a.half_span)),
                ("spectrum.convention", a.convention.clone()),
                ("spectrum.t_max", s(&a.t_max)),
                ("spectrum.points", s(&a.points)),
            ]),
        }
        v
    }
}
