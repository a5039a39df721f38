//! Sweep configuration: a line-oriented `key = value` format with `#`
//! comments, plus the named figure presets.

use std::collections::HashMap;
use std::path::PathBuf;

use crate::channel_models::{db_to_linear, snr_threshold};
use crate::error::{Error, Result};

pub const DEFAULT_TRIALS: usize = 100_000;
pub const DEFAULT_NODES: usize = 2048;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SPACING: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Exponential { rho: Vec<f64> },
    OneRing { theta_bar_deg: f64, as_deg: Vec<f64>, spacing: f64, nodes: usize },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Exponential { .. } => "exponential",
            ModelSpec::OneRing { .. } => "one-ring",
        }
    }

    /// Correlation coefficients or angular spreads (degrees), one per sweep point.
    pub fn points(&self) -> &[f64] {
        match self {
            ModelSpec::Exponential { rho } => rho,
            ModelSpec::OneRing { as_deg, .. } => as_deg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeSpec {
    BasicAntenna,
    BasicBeam,
    ModifiedBeam,
    ModifiedAntenna,
    /// Large-M eigenvalue approximation of the modified beam-domain length.
    ModifiedBeamApprox,
    /// Asymptotic-eigenvalue approximation of the basic antenna-domain length.
    BasicAntennaApprox,
}

impl SchemeSpec {
    pub const ALL: [SchemeSpec; 6] = [
        SchemeSpec::BasicAntenna,
        SchemeSpec::BasicBeam,
        SchemeSpec::ModifiedBeam,
        SchemeSpec::ModifiedAntenna,
        SchemeSpec::ModifiedBeamApprox,
        SchemeSpec::BasicAntennaApprox,
    ];

    pub fn token(self) -> &'static str {
        match self {
            SchemeSpec::BasicAntenna => "basic-antenna",
            SchemeSpec::BasicBeam => "basic-beam",
            SchemeSpec::ModifiedBeam => "modified-beam",
            SchemeSpec::ModifiedAntenna => "modified-antenna",
            SchemeSpec::ModifiedBeamApprox => "modified-beam-approx",
            SchemeSpec::BasicAntennaApprox => "basic-antenna-approx",
        }
    }

    pub fn parse(token: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.token() == token)
    }

    pub fn is_approximation(self) -> bool {
        matches!(self, SchemeSpec::ModifiedBeamApprox | SchemeSpec::BasicAntennaApprox)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlphaSpec {
    Explicit(Vec<f64>),
    /// Every rate combined with every power (dB).
    RatePower { rates: Vec<f64>, powers_db: Vec<f64> },
    /// Explicit `(rate, power dB)` pairs.
    Pairs(Vec<(f64, f64)>),
}

impl AlphaSpec {
    pub fn thresholds(&self) -> Vec<f64> {
        let alpha = |r: f64, p: f64| snr_threshold(r, db_to_linear(p)).expect("validated at parse time");
        match self {
            AlphaSpec::Explicit(v) => v.clone(),
            AlphaSpec::RatePower { rates, powers_db } => {
                rates.iter().flat_map(|&r| powers_db.iter().map(move |&p| alpha(r, p))).collect()
            }
            AlphaSpec::Pairs(pairs) => pairs.iter().map(|&(r, p)| alpha(r, p)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Analytic,
    Simulate,
    Both,
}

impl Mode {
    pub fn analytic(self) -> bool {
        matches!(self, Mode::Analytic | Mode::Both)
    }

    pub fn simulate(self) -> bool {
        matches!(self, Mode::Simulate | Mode::Both)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub model: ModelSpec,
    pub antennas: Vec<usize>,
    pub schemes: Vec<SchemeSpec>,
    pub alpha: AlphaSpec,
    pub trials: usize,
    pub seed: u64,
    pub mode: Mode,
    pub output: Option<PathBuf>,
}

const KEYS: [&str; 16] = [
    "model", "rho", "theta_bar_deg", "as_deg", "spacing", "nodes", "antennas", "schemes", "alpha", "r_th", "p_db",
    "rate_power_pairs", "trials", "seed", "mode", "output",
];

struct Entries {
    map: HashMap<String, (usize, String)>,
    end_line: usize,
}

impl Entries {
    fn get(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn require(&self, key: &str) -> Result<(usize, &str)> {
        self.get(key).ok_or_else(|| err(self.end_line, format!("missing required key `{key}`")))
    }
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config { line, message: message.into() }
}

fn list<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>> {
    let items: Vec<&str> = value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(err(line, format!("`{key}` needs at least one value")));
    }
    items
        .iter()
        .map(|t| t.parse::<T>().map_err(|_| err(line, format!("cannot parse `{t}` in `{key}`"))))
        .collect()
}

fn scalar<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.trim().parse::<T>().map_err(|_| err(line, format!("cannot parse `{value}` for `{key}`")))
}

fn check(line: usize, ok: bool, message: impl Into<String>) -> Result<()> {
    if ok { Ok(()) } else { Err(err(line, message)) }
}

fn read_entries(text: &str, keys: &[&str]) -> Result<Entries> {
    let mut map = HashMap::new();
    let mut count = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        count = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, found `{content}`")))?;
        let key = key.trim();
        if !keys.contains(&key) {
            return Err(err(line, format!("unknown key `{key}`")));
        }
        if map.insert(key.to_owned(), (line, value.trim().to_owned())).is_some() {
            return Err(err(line, format!("duplicate key `{key}`")));
        }
    }
    if map.is_empty() {
        return Err(err(count.max(1), "configuration is empty"));
    }
    Ok(Entries { map, end_line: count })
}

pub fn parse_config(text: &str) -> Result<SweepConfig> {
    let e = read_entries(text, &KEYS)?;

    let (model_line, model_name) = e.require("model")?;
    let model = match model_name {
        "exponential" => {
            let (l, v) = e.require("rho")?;
            let rho: Vec<f64> = list(l, "rho", v)?;
            check(l, rho.iter().all(|r| (0.0..1.0).contains(r)), "`rho` values must lie in [0, 1)")?;
            for key in ["theta_bar_deg", "as_deg", "spacing", "nodes"] {
                if let Some((l, _)) = e.get(key) {
                    return Err(err(l, format!("`{key}` only applies to the one-ring model")));
                }
            }
            ModelSpec::Exponential { rho }
        }
        "one-ring" => {
            let (l, v) = e.require("theta_bar_deg")?;
            let theta_bar_deg: f64 = scalar(l, "theta_bar_deg", v)?;
            check(l, theta_bar_deg.abs() < 90.0, "`theta_bar_deg` must lie in (-90, 90)")?;
            let (l, v) = e.require("as_deg")?;
            let as_deg: Vec<f64> = list(l, "as_deg", v)?;
            let half_width_ok = |a: &f64| *a > 0.0 && theta_bar_deg.abs() + 3f64.sqrt() * a < 90.0;
            check(l, as_deg.iter().all(half_width_ok), "angular spreads must be positive and keep the interval inside (-90, 90) degrees")?;
            let spacing = match e.get("spacing") {
                Some((l, v)) => {
                    let s: f64 = scalar(l, "spacing", v)?;
                    check(l, s > 0.0, "`spacing` must be positive")?;
                    s
                }
                None => DEFAULT_SPACING,
            };
            let nodes = match e.get("nodes") {
                Some((l, v)) => {
                    let n: usize = scalar(l, "nodes", v)?;
                    check(l, n >= 64, "`nodes` must be at least 64")?;
                    n
                }
                None => DEFAULT_NODES,
            };
            if let Some((l, _)) = e.get("rho") {
                return Err(err(l, "`rho` only applies to the exponential model"));
            }
            ModelSpec::OneRing { theta_bar_deg, as_deg, spacing, nodes }
        }
        other => return Err(err(model_line, format!("unknown model `{other}` (exponential or one-ring)"))),
    };

    let (l, v) = e.require("antennas")?;
    let antennas: Vec<usize> = list(l, "antennas", v)?;
    check(l, antennas.iter().all(|&m| m >= 1), "`antennas` values must be at least 1")?;

    let (l, v) = e.require("schemes")?;
    let schemes = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|t| SchemeSpec::parse(t).ok_or_else(|| err(l, format!("unknown scheme `{t}`"))))
        .collect::<Result<Vec<_>>>()?;
    check(l, !schemes.is_empty(), "`schemes` needs at least one value")?;
    if matches!(model, ModelSpec::OneRing { .. }) {
        if let Some(s) = schemes.iter().find(|s| s.is_approximation()) {
            return Err(err(l, format!("`{}` requires the exponential model", s.token())));
        }
    }

    let alpha = parse_alpha(&e)?;

    let trials = match e.get("trials") {
        Some((l, v)) => {
            let t: usize = scalar(l, "trials", v)?;
            check(l, t >= 1, "`trials` must be at least 1")?;
            t
        }
        None => DEFAULT_TRIALS,
    };
    let seed = match e.get("seed") {
        Some((l, v)) => scalar(l, "seed", v)?,
        None => DEFAULT_SEED,
    };
    let mode = match e.get("mode") {
        None | Some((_, "both")) => Mode::Both,
        Some((_, "analytic")) => Mode::Analytic,
        Some((_, "simulate")) => Mode::Simulate,
        Some((l, other)) => return Err(err(l, format!("unknown mode `{other}` (analytic, simulate or both)"))),
    };
    let output = e.get("output").map(|(_, v)| PathBuf::from(v));
    Ok(SweepConfig { model, antennas, schemes, alpha, trials, seed, mode, output })
}

fn parse_alpha(e: &Entries) -> Result<AlphaSpec> {
    let explicit = e.get("alpha");
    let rates = e.get("r_th");
    let powers = e.get("p_db");
    let pairs = e.get("rate_power_pairs");
    let given = [explicit.is_some(), rates.is_some() || powers.is_some(), pairs.is_some()];
    if given.iter().filter(|&&g| g).count() > 1 {
        let line = [explicit, rates, powers, pairs].iter().flatten().map(|(l, _)| *l).max().unwrap_or(0);
        return Err(err(line, "give exactly one of `alpha`, `r_th`/`p_db` or `rate_power_pairs`"));
    }
    let check_rate = |l: usize, r: f64| check(l, r >= 0.0 && r.is_finite(), "rates must be non-negative");
    let check_power = |l: usize, p: f64| check(l, p.is_finite(), "powers must be finite");
    if let Some((l, v)) = explicit {
        let alpha: Vec<f64> = list(l, "alpha", v)?;
        check(l, alpha.iter().all(|a| *a >= 0.0 && a.is_finite()), "`alpha` values must be finite and non-negative")?;
        return Ok(AlphaSpec::Explicit(alpha));
    }
    if let Some((l, v)) = pairs {
        let mut out = Vec::new();
        for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (r, p) = item
                .split_once(':')
                .ok_or_else(|| err(l, format!("expected `rate:power_db`, found `{item}`")))?;
            let r: f64 = scalar(l, "rate_power_pairs", r)?;
            let p: f64 = scalar(l, "rate_power_pairs", p)?;
            check_rate(l, r)?;
            check_power(l, p)?;
            out.push((r, p));
        }
        check(l, !out.is_empty(), "`rate_power_pairs` needs at least one pair")?;
        return Ok(AlphaSpec::Pairs(out));
    }
    match (rates, powers) {
        (Some((lr, vr)), Some((lp, vp))) => {
            let rates: Vec<f64> = list(lr, "r_th", vr)?;
            let powers_db: Vec<f64> = list(lp, "p_db", vp)?;
            for &r in &rates {
                check_rate(lr, r)?;
            }
            for &p in &powers_db {
                check_power(lp, p)?;
            }
            Ok(AlphaSpec::RatePower { rates, powers_db })
        }
        (Some((l, _)), None) => Err(err(l, "`r_th` needs a matching `p_db`")),
        (None, Some((l, _))) => Err(err(l, "`p_db` needs a matching `r_th`")),
        (None, None) => Err(err(e.end_line, "missing threshold: give `alpha`, `r_th`/`p_db` or `rate_power_pairs`")),
    }
}

/// Dataset and training settings for `fit-surrogate`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateConfig {
    pub antennas: usize,
    pub rho: Vec<f64>,
    pub alpha: Vec<f64>,
    pub trials: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub output: PathBuf,
}

const SURROGATE_KEYS: [&str; 8] = ["antennas", "rho", "alpha", "trials", "epochs", "learning_rate", "seed", "output"];

pub fn parse_surrogate_config(text: &str) -> Result<SurrogateConfig> {
    let e = read_entries(text, &SURROGATE_KEYS)?;
    let antennas = match e.get("antennas") {
        Some((l, v)) => {
            let m: usize = scalar(l, "antennas", v)?;
            check(l, m >= 1, "`antennas` must be at least 1")?;
            m
        }
        None => 32,
    };
    let (l, v) = e.require("rho")?;
    let rho: Vec<f64> = list(l, "rho", v)?;
    check(l, rho.iter().all(|r| (0.0..1.0).contains(r)), "`rho` values must lie in [0, 1)")?;
    let (l, v) = e.require("alpha")?;
    let alpha: Vec<f64> = list(l, "alpha", v)?;
    check(l, alpha.iter().all(|a| *a >= 0.0 && a.is_finite()), "`alpha` values must be finite and non-negative")?;
    let positive = |key: &str, default: usize| -> Result<usize> {
        match e.get(key) {
            Some((l, v)) => {
                let n: usize = scalar(l, key, v)?;
                check(l, n >= 1, format!("`{key}` must be at least 1"))?;
                Ok(n)
            }
            None => Ok(default),
        }
    };
    let trials = positive("trials", 2_000)?;
    let epochs = positive("epochs", 3_000)?;
    let learning_rate = match e.get("learning_rate") {
        Some((l, v)) => {
            let lr: f64 = scalar(l, "learning_rate", v)?;
            check(l, lr > 0.0 && lr.is_finite(), "`learning_rate` must be positive")?;
            lr
        }
        None => 0.01,
    };
    let seed = match e.get("seed") {
        Some((l, v)) => scalar(l, "seed", v)?,
        None => DEFAULT_SEED,
    };
    let (_, v) = e.require("output")?;
    Ok(SurrogateConfig { antennas, rho, alpha, trials, epochs, learning_rate, seed, output: PathBuf::from(v) })
}

pub const PRESET_NAMES: [&str; 16] = [
    "fig1a", "fig1b", "fig2a", "fig2b", "fig3", "fig4a", "fig4b", "fig5a", "fig5b", "fig6", "fig7a", "fig7b", "fig7c",
    "fig8a", "fig8b", "fig8c",
];

const RHO_SWEEP: &str = "0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9";
const ALPHA_SWEEP: &str = "7, 13.97, 17.58, 23.77, 27.87, 31";
const M_SWEEP: &str = "2, 4, 8, 16, 32, 64, 128";
const PAIRS: &str = "5:0, 4:-2, 3:-3";
const P_SWEEP: &str = "-5, -4, -3, -2, -1, 0, 1, 2, 3, 4, 5";

/// Configuration text of a named figure preset.
pub fn preset(name: &str) -> Option<String> {
    let exp = |rho: &str, antennas: &str, schemes: &str, alpha: String| {
        format!("model = exponential\nrho = {rho}\nantennas = {antennas}\nschemes = {schemes}\n{alpha}\n")
    };
    let ring = |as_deg: &str, schemes: &str| {
        format!(
            "model = one-ring\ntheta_bar_deg = 45\nas_deg = {as_deg}\nspacing = 0.5\nantennas = 32\nschemes = {schemes}\nr_th = 3\np_db = {P_SWEEP}\n"
        )
    };
    let text = match name {
        "fig1a" => exp("0.4, 0.8", "32, 64", "basic-beam", format!("alpha = {ALPHA_SWEEP}")),
        "fig1b" => exp("0.4, 0.8", "32, 64", "modified-beam, modified-beam-approx", format!("alpha = {ALPHA_SWEEP}")),
        "fig2a" => exp("0.8", M_SWEEP, "basic-beam, modified-beam", format!("rate_power_pairs = {PAIRS}")),
        "fig2b" => exp("0.4", M_SWEEP, "basic-beam, modified-beam", format!("rate_power_pairs = {PAIRS}")),
        "fig3" => exp(RHO_SWEEP, "32", "basic-beam, modified-beam", "r_th = 3\np_db = -6, -4, 0".into()),
        "fig4a" => exp(
            "0, 0.4, 0.8",
            "32",
            "basic-antenna, basic-antenna-approx",
            "r_th = 2, 3\np_db = -10, -8, -6, -4, -2, 0, 2, 4, 6, 8, 10".into(),
        ),
        "fig4b" => exp("0, 0.4, 0.8", "32", "modified-antenna", "r_th = 2, 3\np_db = -10, -8, -6, -4, -2, 0, 2, 4, 6, 8, 10".into()),
        "fig5a" => exp("0.8", M_SWEEP, "basic-antenna, modified-antenna", format!("rate_power_pairs = {PAIRS}")),
        "fig5b" => exp("0.4", M_SWEEP, "basic-antenna, modified-antenna", format!("rate_power_pairs = {PAIRS}")),
        "fig6" => exp(RHO_SWEEP, "32", "basic-antenna, modified-antenna", "r_th = 3\np_db = -6, -4, 0".into()),
        "fig7a" => ring("5", "basic-beam, modified-beam"),
        "fig7b" => ring("10", "basic-beam, modified-beam"),
        "fig7c" => ring("20", "basic-beam, modified-beam"),
        "fig8a" => ring("5", "basic-antenna, modified-antenna"),
        "fig8b" => ring("10", "basic-antenna, modified-antenna"),
        "fig8c" => ring("20", "basic-antenna, modified-antenna"),
        _ => return None,
    };
    Some(text)
}
