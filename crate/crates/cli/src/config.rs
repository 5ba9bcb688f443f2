//! Flat `key = value` settings: command-line flag over config file over built-in default.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use kaonlab::params::{EPSILON_ABS, EPSILON_ARG_DEG, TAU_L, TAU_S};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Default,
    File,
    Flag,
}

/// Every knob with its built-in default. An empty default means "required" or "derived".
pub fn knobs() -> Vec<(&'static str, String)> {
    let s = |x: &str| x.to_string();
    let f = |x: f64| format!("{x:e}");
    vec![
        ("seed", s("1")),
        ("model", s("twfo")),
        ("out", s("")),
        ("kaon.tau_s", f(TAU_S)),
        ("kaon.tau_l", f(TAU_L)),
        // empty: from the lifetimes; when set, overrides them
        ("kaon.gamma_s", s("")),
        ("kaon.gamma_l", s("")),
        // empty: the mean width
        ("kaon.delta_m", s("")),
        ("kaon.epsilon_abs", f(EPSILON_ABS)),
        ("kaon.epsilon_arg_deg", f(EPSILON_ARG_DEG)),
        ("state", s("k0")),
        ("predict.channel", s("pair")),
        ("predict.t_max", f(20.0 * TAU_S)),
        ("predict.bins", s("400")),
        ("predict.joint", s("false")),
        ("joint.family", s("alpha")),
        ("joint.phase", s("0")),
        ("joint.calibration", s("1")),
        ("simulate.events", s("100000")),
        ("simulate.channel", s("both")),
        ("detect.events", s("")),
        ("detector.window_tau", s("0")),
        ("detector.t_min", s("0")),
        ("detector.t_max", f(20.0 * TAU_S)),
        ("detector.n_bins", s("200")),
        ("detector.background_rate", s("0")),
        ("detector.efficiency", s("1")),
        ("detector.branching_charged", f(2.0 / 3.0)),
        ("fit.binned", s("")),
        ("fit.free", s("epsilon_abs,epsilon_arg,i0")),
        ("fit.starts", s("8")),
        ("fit.weight_ratio", s("false")),
        ("discriminate.against", s("standard")),
        ("discriminate.channel", s("pair")),
        ("discriminate.n_events", s("1000,10000,100000")),
        ("discriminate.trials", s("200")),
        ("discriminate.alpha", s("0.05")),
        ("discriminate.n_max", s("100000")),
        ("discriminate.per_decade", s("10")),
        ("extract.pairs", s("")),
        ("extract.decays", s("")),
        ("extract.tau_factor", s("true")),
        ("zeno.state", s("k0")),
        ("zeno.times", s("")),
        ("zeno.readout", f(3.0 * TAU_S)),
        ("zeno.trials", s("100000")),
        ("zeno.mode", s("both")),
        ("spectrum.lifetime", s("short")),
        ("spectrum.half_span", s("1000")),
        ("spectrum.convention", s("autocorrelation")),
        // empty: five lifetimes
        ("spectrum.t_max", s("")),
        ("spectrum.points", s("50")),
    ]
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str, origin: &str) -> CliResult<BTreeMap<String, String>> {
    let known: Vec<&str> = knobs().iter().map(|(k, _)| *k).collect();
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("{origin}:{}: expected 'key = value'", n + 1)))?;
        let key = key.trim();
        if !known.contains(&key) {
            return Err(CliError::usage(format!("{origin}:{}: unknown key '{key}'", n + 1)));
        }
        out.insert(key.to_string(), value.trim().to_string());
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Settings {
    values: BTreeMap<&'static str, (String, Source)>,
}

impl Settings {
    pub fn resolve(file: &BTreeMap<String, String>, flags: &[(&'static str, Option<String>)]) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (key, default) in knobs() {
            values.insert(key, (default, Source::Default));
        }
        for (k, v) in file {
            let slot = values
                .get_mut(k.as_str())
                .ok_or_else(|| CliError::usage(format!("unknown key '{k}'")))?;
            *slot = (v.clone(), Source::File);
        }
        for (k, v) in flags {
            if let Some(v) = v {
                let slot = values.get_mut(k).ok_or_else(|| CliError::usage(format!("unknown key '{k}'")))?;
                *slot = (v.clone(), Source::Flag);
            }
        }
        Ok(Self { values })
    }

    pub fn load(config: Option<&Path>, flags: &[(&'static str, Option<String>)]) -> CliResult<Self> {
        let file = match config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", p.display())))?;
                parse_config(&text, &p.display().to_string())?
            }
            None => BTreeMap::new(),
        };
        Self::resolve(&file, flags)
    }

    pub fn raw(&self, key: &str) -> &str {
        &self.values.get(key).unwrap_or_else(|| panic!("knob '{key}' is not registered")).0
    }

    #[cfg(test)]
    pub fn source(&self, key: &str) -> Source {
        self.values[key].1
    }

    pub fn is_set(&self, key: &str) -> bool {
        !self.raw(key).is_empty()
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<T>
    where
        T::Err: fmt::Display,
    {
        let raw = self.raw(key);
        if raw.is_empty() {
            return Err(CliError::usage(format!("'{key}' is required")));
        }
        raw.parse().map_err(|e| CliError::usage(format!("bad value '{raw}' for '{key}': {e}")))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> CliResult<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        self.raw(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|e| CliError::usage(format!("bad item '{s}' in '{key}': {e}"))))
            .collect()
    }
}
