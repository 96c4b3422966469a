//! System configuration as a flat TOML document.
//!
//! Every model parameter is a top-level key. An optional `[sweep]` table
//! describes a parameter grid; an optional `[manifest]` table records how an
//! output was produced and is ignored on load. `lambda_u` and `load`
//! (λ/λ_a, so that λ_u = Q·load·λ_a) are alternatives, as are `epsilon` and
//! `r_out`.

use std::fmt::Write as _;
use std::ops::Range;

use fogmimo_core::cell::{CellParams, DEFAULT_C_SHAPE};
use fogmimo_core::codec::{build_codebook, Thresholds};
use fogmimo_core::fog::FogParams;
use fogmimo_core::geometry::{BoundaryMode, DiskPair, Window, DEFAULT_DARTS};
use fogmimo_core::phy::NoisePower;
use fogmimo_core::sim::{Antennas, SystemKind, TrialConfig, TrustMode};
use fogmimo_core::DEFAULT_SE_CAP;
use serde::Deserialize;
use toml::Spanned;

/// Keys without a default.
pub const REQUIRED_KEYS: &[&str] = &["lambda_a", "eta"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    AtLine { line: usize, message: String },
    #[error("--set {key}: {message}")]
    Override { key: String, message: String },
    #[error("missing required keys: {}", .0.join(", "))]
    Missing(Vec<&'static str>),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Float,
    Int,
    Text,
    AntennaCount,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum AntennaValue {
    Count(i64),
    Word(String),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: Option<String>,
    values: Option<Vec<f64>>,
    series: Option<String>,
    series_values: Option<Vec<f64>>,
    measures: Option<Vec<String>>,
}

macro_rules! config_keys {
    ($($name:ident: $ty:ty => $kind:ident),* $(,)?) => {
        #[derive(Debug, Default, Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            $($name: Option<Spanned<$ty>>,)*
            sweep: Option<Spanned<RawSweep>>,
            #[allow(dead_code)]
            manifest: Option<toml::Table>,
        }

        /// Documented top-level keys, in emission order.
        pub const KEYS: &[&str] = &[$(stringify!($name)),*];

        fn key_kind(key: &str) -> Option<Kind> {
            match key {
                $(stringify!($name) => Some(Kind::$kind),)*
                _ => None,
            }
        }

        impl Raw {
            fn overlay(&mut self, other: Raw) {
                $(if other.$name.is_some() {
                    self.$name = other.$name;
                })*
                if other.sweep.is_some() {
                    self.sweep = other.sweep;
                }
            }

            fn clear(&mut self, key: &str) {
                match key {
                    $(stringify!($name) => self.$name = None,)*
                    _ => {}
                }
            }

            fn span(&self, key: &str) -> Option<Range<usize>> {
                match key {
                    $(stringify!($name) => self.$name.as_ref().map(|s| s.span()),)*
                    "sweep" => self.sweep.as_ref().map(|s| s.span()),
                    _ => None,
                }
            }
        }
    };
}

config_keys! {
    lambda_a: f64 => Float,
    lambda_u: f64 => Float,
    load: f64 => Float,
    q: i64 => Int,
    q_prime: i64 => Int,
    l_pilots: i64 => Int,
    n_p: i64 => Int,
    eta: f64 => Float,
    r_in: f64 => Float,
    epsilon: f64 => Float,
    r_out: f64 => Float,
    antennas: AntennaValue => AntennaCount,
    sigma2_n: f64 => Float,
    p_u: f64 => Float,
    p_s: f64 => Float,
    seed: i64 => Int,
    trials: i64 => Int,
    half_width: f64 => Float,
    boundary: String => Text,
    guard_margin: f64 => Float,
    trust_mode: String => Text,
    tau_useful: f64 => Float,
    tau_interf: f64 => Float,
    fading_draws: i64 => Int,
    se_cap: f64 => Float,
    theta: String => Text,
    theta_trials: i64 => Int,
    darts: i64 => Int,
    c_shape: f64 => Float,
    min_distance: f64 => Float,
    signal_radius_factor: f64 => Float,
    overhead_slots: i64 => Int,
}

/// Pairs of keys that describe the same quantity.
const ALTERNATIVES: &[(&str, &str)] = &[("lambda_u", "load"), ("epsilon", "r_out")];

/// Where the θ law for analytic fog quantities comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaChoice {
    ClosedForm,
    SemiAnalytic,
    /// Closed form up to the λ̃-maximizing R_in, semi-analytic beyond.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Measure {
    FogAnalytic,
    CellAnalytic,
    FogSim,
    CellSim,
}

impl Measure {
    pub const ALL: [Measure; 4] = [Measure::FogAnalytic, Measure::CellAnalytic, Measure::FogSim, Measure::CellSim];

    pub fn name(self) -> &'static str {
        match self {
            Measure::FogAnalytic => "fog-analytic",
            Measure::CellAnalytic => "cell-analytic",
            Measure::FogSim => "fog-sim",
            Measure::CellSim => "cell-sim",
        }
    }

    pub fn parse(s: &str) -> Option<Measure> {
        Measure::ALL.into_iter().find(|m| m.name() == s)
    }
}

/// A one- or two-dimensional parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: String,
    pub values: Vec<f64>,
    /// Outer axis producing one series per value.
    pub series: Option<(String, Vec<f64>)>,
    /// Quantities evaluated at each grid point by the `sweep` command.
    pub measures: Vec<Measure>,
}

impl SweepSpec {
    /// Grid points as `(series value, axis value)` in row order.
    pub fn points(&self) -> Vec<(Option<f64>, f64)> {
        match &self.series {
            None => self.values.iter().map(|&v| (None, v)).collect(),
            Some((_, outer)) => outer.iter().flat_map(|&s| self.values.iter().map(move |&v| (Some(s), v))).collect(),
        }
    }
}

/// Parses a `key=v1,v2,...` sweep flag.
pub fn parse_sweep_flag(flag: &str) -> Result<(String, Vec<f64>), ConfigError> {
    let (key, values) = flag
        .split_once('=')
        .ok_or_else(|| ConfigError::Invalid(format!("--sweep `{flag}`: expected key=v1,v2,...")))?;
    let key = key.trim();
    check_numeric_key(key).map_err(|m| ConfigError::Invalid(format!("--sweep {key}: {m}")))?;
    let values = values
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| ConfigError::Invalid(format!("--sweep {key}: bad value `{v}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(ConfigError::Invalid(format!("--sweep {key}: no values")));
    }
    Ok((key.to_string(), values))
}

fn check_numeric_key(key: &str) -> Result<(), String> {
    match key_kind(key) {
        None => Err(format!("unknown key `{key}`")),
        Some(Kind::Text) => Err(format!("`{key}` is not numeric")),
        Some(_) => Ok(()),
    }
}

/// Fully validated system configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub lambda_a: f64,
    pub lambda_u: f64,
    pub q: usize,
    pub q_prime: usize,
    pub l_pilots: usize,
    pub n_p: usize,
    pub eta: f64,
    pub r_in: f64,
    pub epsilon: f64,
    pub antennas: Antennas,
    pub sigma2_n: f64,
    pub p_u: f64,
    pub p_s: f64,
    pub seed: u64,
    pub trials: usize,
    pub half_width: f64,
    /// Interior margin of a guard window; `None` for a torus.
    pub guard_margin: Option<f64>,
    pub trust_mode: TrustMode,
    pub thresholds: Option<Thresholds>,
    pub fading_draws: usize,
    pub se_cap: f64,
    pub theta: ThetaChoice,
    pub theta_trials: usize,
    pub darts: usize,
    pub c_shape: f64,
    pub min_distance: Option<f64>,
    pub signal_radius_factor: f64,
    /// Slot length T for the (1 − L/T) pilot-overhead factor; off when `None`.
    pub overhead_slots: Option<usize>,
    pub sweep: Option<SweepSpec>,
}

/// Resolves keys to source locations for error messages.
struct Locator<'a> {
    text: &'a str,
    raw: &'a Raw,
    overridden: &'a [String],
}

impl Locator<'_> {
    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        let message = message.into();
        if self.overridden.iter().any(|k| k == key) {
            return ConfigError::Override { key: key.to_string(), message };
        }
        match self.raw.span(key) {
            Some(span) => ConfigError::AtLine { line: line_of(self.text, span.start), message: format!("{key}: {message}") },
            None => ConfigError::Invalid(format!("{key}: {message}")),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn toml_error(text: &str, e: toml::de::Error) -> ConfigError {
    let message = e.message().trim().to_string();
    match e.span() {
        Some(span) => ConfigError::AtLine { line: line_of(text, span.start), message },
        None => ConfigError::Invalid(message),
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<SystemConfig, ConfigError> {
    parse_config_with(text, &[])
}

/// Parses a document and applies `key=value` overrides on top of it.
pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<SystemConfig, ConfigError> {
    let mut raw: Raw = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    let mut keys = Vec::new();
    for o in overrides {
        let (key, value) = o
            .split_once('=')
            .ok_or_else(|| ConfigError::Invalid(format!("--set `{o}`: expected key=value")))?;
        let key = key.trim();
        let layer = parse_override(key, value.trim())?;
        apply_layer(&mut raw, key, layer);
        keys.push(key.to_string());
    }
    resolve(text, &raw, &keys)
}

fn parse_override(key: &str, value: &str) -> Result<Raw, ConfigError> {
    let fail = |message: String| ConfigError::Override { key: key.to_string(), message };
    if key_kind(key).is_none() {
        return Err(fail(format!("unknown key `{key}`")));
    }
    toml::from_str(&format!("{key} = {value}"))
        .or_else(|_| toml::from_str(&format!("{key} = {value:?}")))
        .map_err(|e: toml::de::Error| fail(e.message().trim().to_string()))
}

fn apply_layer(raw: &mut Raw, key: &str, layer: Raw) {
    for &(a, b) in ALTERNATIVES {
        if key == a {
            raw.clear(b);
        } else if key == b {
            raw.clear(a);
        }
    }
    raw.overlay(layer);
}

fn get<T: Clone>(v: &Option<Spanned<T>>) -> Option<T> {
    v.as_ref().map(|s| s.get_ref().clone())
}

fn resolve(text: &str, raw: &Raw, overridden: &[String]) -> Result<SystemConfig, ConfigError> {
    let loc = Locator { text, raw, overridden };
    let missing: Vec<&'static str> =
        REQUIRED_KEYS.iter().copied().filter(|k| raw.span(k).is_none()).collect();
    if !missing.is_empty() {
        return Err(ConfigError::Missing(missing));
    }
    for &(a, b) in ALTERNATIVES {
        if raw.span(a).is_some() && raw.span(b).is_some() {
            return Err(loc.err(b, format!("cannot be combined with `{a}`")));
        }
    }

    let positive = |key: &str, v: Option<f64>, default: f64| -> Result<f64, ConfigError> {
        let v = v.unwrap_or(default);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(loc.err(key, "must be positive and finite"))
        }
    };
    let non_negative = |key: &str, v: Option<f64>, default: f64| -> Result<f64, ConfigError> {
        let v = v.unwrap_or(default);
        if v >= 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(loc.err(key, "must be non-negative and finite"))
        }
    };
    let count = |key: &str, v: Option<i64>, default: i64, min: i64| -> Result<usize, ConfigError> {
        let v = v.unwrap_or(default);
        if v >= min {
            Ok(v as usize)
        } else {
            Err(loc.err(key, format!("must be an integer >= {min}")))
        }
    };

    let lambda_a = positive("lambda_a", get(&raw.lambda_a), 0.0)?;
    let eta = get(&raw.eta).unwrap_or(0.0);
    if !(eta > 1.0 && eta.is_finite()) {
        return Err(loc.err("eta", "must exceed 1"));
    }
    let q = count("q", get(&raw.q), 40, 1)?;
    let q_prime = count("q_prime", get(&raw.q_prime), 20, 2)?;
    if q_prime % 2 != 0 {
        return Err(loc.err("q_prime", "must be even"));
    }
    let l_pilots = count("l_pilots", get(&raw.l_pilots), 60, 1)?;
    let n_p = count("n_p", get(&raw.n_p), l_pilots as i64, 1)?;
    if n_p > l_pilots {
        return Err(loc.err("n_p", "must not exceed l_pilots"));
    }
    let lambda_u = match (get(&raw.lambda_u), get(&raw.load)) {
        (Some(v), _) => non_negative("lambda_u", Some(v), 0.0)?,
        (None, load) => q as f64 * non_negative("load", load, 1.0)? * lambda_a,
    };
    let r_in = positive("r_in", get(&raw.r_in), 0.1)?;
    let epsilon = match (get(&raw.epsilon), get(&raw.r_out)) {
        (Some(e), _) => non_negative("epsilon", Some(e), 0.0)?,
        (None, Some(r_out)) => {
            if !(r_out >= r_in && r_out.is_finite()) {
                return Err(loc.err("r_out", "must be finite and at least r_in"));
            }
            r_out / r_in - 1.0
        }
        (None, None) => 0.0,
    };
    let antennas = match get(&raw.antennas) {
        None => Antennas::Infinite,
        Some(AntennaValue::Count(m)) if m >= 1 => Antennas::Finite(m as usize),
        Some(AntennaValue::Word(w)) if w == "inf" => Antennas::Infinite,
        Some(_) => return Err(loc.err("antennas", "expected a positive integer or \"inf\"")),
    };
    let sigma2_n = non_negative("sigma2_n", get(&raw.sigma2_n), 1.0)?;
    let p_u = positive("p_u", get(&raw.p_u), 1.0)?;
    let p_s = positive("p_s", get(&raw.p_s), 1.0)?;
    let seed = count("seed", get(&raw.seed), 1, 0)? as u64;
    let trials = count("trials", get(&raw.trials), 100, 1)?;
    let half_width = positive("half_width", get(&raw.half_width), 2.0)?;
    let guard_margin = match get(&raw.boundary).as_deref() {
        None | Some("torus") => {
            if raw.guard_margin.is_some() {
                return Err(loc.err("guard_margin", "only valid with boundary = \"guard\""));
            }
            None
        }
        Some("guard") => {
            let r_out = (1.0 + epsilon) * r_in;
            let m = non_negative("guard_margin", get(&raw.guard_margin), r_out)?;
            if m >= half_width {
                return Err(loc.err("guard_margin", "must be smaller than half_width"));
            }
            Some(m)
        }
        Some(_) => return Err(loc.err("boundary", "expected \"torus\" or \"guard\"")),
    };
    let trust_mode = match get(&raw.trust_mode).as_deref() {
        None | Some("geometric") => TrustMode::Geometric,
        Some("signal_level") => TrustMode::SignalLevel,
        Some(_) => return Err(loc.err("trust_mode", "expected \"geometric\" or \"signal_level\"")),
    };
    let thresholds = match (get(&raw.tau_useful), get(&raw.tau_interf)) {
        (None, None) => None,
        (Some(u), Some(i)) => Some(Thresholds::new(u, i).map_err(|e| loc.err("tau_useful", e.to_string()))?),
        (Some(_), None) => return Err(loc.err("tau_useful", "needs tau_interf as well")),
        (None, Some(_)) => return Err(loc.err("tau_interf", "needs tau_useful as well")),
    };
    let fading_draws = count("fading_draws", get(&raw.fading_draws), 1, 1)?;
    let se_cap = positive("se_cap", get(&raw.se_cap), DEFAULT_SE_CAP)?;
    let theta = match get(&raw.theta).as_deref() {
        None | Some("auto") => ThetaChoice::Auto,
        Some("closed_form") => ThetaChoice::ClosedForm,
        Some("semi_analytic") => ThetaChoice::SemiAnalytic,
        Some(_) => return Err(loc.err("theta", "expected \"auto\", \"closed_form\" or \"semi_analytic\"")),
    };
    let theta_trials = count("theta_trials", get(&raw.theta_trials), 10_000, 1)?;
    let darts = count("darts", get(&raw.darts), DEFAULT_DARTS as i64, 1)?;
    let c_shape = positive("c_shape", get(&raw.c_shape), DEFAULT_C_SHAPE)?;
    let min_distance = match get(&raw.min_distance) {
        None => None,
        Some(d) => Some(positive("min_distance", Some(d), 0.0)?),
    };
    let signal_radius_factor = get(&raw.signal_radius_factor).unwrap_or(3.0);
    if !(signal_radius_factor >= 1.0 && signal_radius_factor.is_finite()) {
        return Err(loc.err("signal_radius_factor", "must be at least 1"));
    }
    let overhead_slots = match get(&raw.overhead_slots) {
        None => None,
        Some(t) => {
            let t = count("overhead_slots", Some(t), 1, 1)?;
            let pilots = l_pilots.max(q + q_prime);
            if t <= pilots {
                return Err(loc.err("overhead_slots", format!("slot length must exceed the pilot length {pilots}")));
            }
            Some(t)
        }
    };

    let mut cfg = SystemConfig {
        lambda_a,
        lambda_u,
        q,
        q_prime,
        l_pilots,
        n_p,
        eta,
        r_in,
        epsilon,
        antennas,
        sigma2_n,
        p_u,
        p_s,
        seed,
        trials,
        half_width,
        guard_margin,
        trust_mode,
        thresholds,
        fading_draws,
        se_cap,
        theta,
        theta_trials,
        darts,
        c_shape,
        min_distance,
        signal_radius_factor,
        overhead_slots,
        sweep: None,
    };
    cfg.check_model().map_err(|(key, message)| loc.err(key, message))?;

    if let Some(s) = &raw.sweep {
        let sweep = resolve_sweep(s.get_ref()).map_err(|m| loc.err("sweep", m))?;
        for (series, value) in sweep.points() {
            let mut point = cfg.clone();
            if let (Some((key, _)), Some(v)) = (&sweep.series, series) {
                point = point.with_value(key, v).map_err(|e| loc.err("sweep", e.to_string()))?;
            }
            point.with_value(&sweep.axis, value).map_err(|e| loc.err("sweep", e.to_string()))?;
        }
        cfg.sweep = Some(sweep);
    }
    Ok(cfg)
}

fn resolve_sweep(s: &RawSweep) -> Result<SweepSpec, String> {
    let axis = s.axis.clone().ok_or("missing `axis`")?;
    check_numeric_key(&axis)?;
    let values = s.values.clone().ok_or("missing `values`")?;
    if values.is_empty() {
        return Err("`values` is empty".into());
    }
    let series = match (&s.series, &s.series_values) {
        (None, None) => None,
        (Some(k), Some(v)) if !v.is_empty() => {
            check_numeric_key(k)?;
            if *k == axis {
                return Err("`series` must differ from `axis`".into());
            }
            Some((k.clone(), v.clone()))
        }
        _ => return Err("`series` and a non-empty `series_values` go together".into()),
    };
    let mut measures = Vec::new();
    for m in s.measures.iter().flatten() {
        let m = Measure::parse(m).ok_or_else(|| format!("unknown measure `{m}`"))?;
        if !measures.contains(&m) {
            measures.push(m);
        }
    }
    Ok(SweepSpec { axis, values, series, measures })
}

fn core_error(e: fogmimo_core::Error) -> (&'static str, String) {
    match e {
        fogmimo_core::Error::Parameter { name, reason } => (name, reason),
        other => ("config", other.to_string()),
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

impl SystemConfig {
    /// Model invariants checked through the core constructors.
    fn check_model(&self) -> Result<(), (&'static str, String)> {
        self.fog_params().map_err(core_error)?;
        self.cell_params().map_err(core_error)?;
        self.window().map_err(core_error)?;
        build_codebook(self.q, self.q_prime, self.p_u).map_err(core_error)?;
        for system in [SystemKind::Fog, SystemKind::Cellular] {
            self.trial_config(system).map_err(core_error)?.validate().map_err(core_error)?;
        }
        Ok(())
    }

    pub fn disks(&self) -> fogmimo_core::Result<DiskPair> {
        DiskPair::new(self.r_in, self.epsilon)
    }

    pub fn fog_params(&self) -> fogmimo_core::Result<FogParams> {
        FogParams::new(self.lambda_a, self.lambda_u, self.q, self.disks()?, self.eta)
    }

    pub fn cell_params(&self) -> fogmimo_core::Result<CellParams> {
        CellParams::with_shape(self.lambda_a, self.lambda_u, self.l_pilots, self.n_p, self.eta, self.c_shape)
    }

    pub fn window(&self) -> fogmimo_core::Result<Window> {
        let boundary = match self.guard_margin {
            None => BoundaryMode::Torus,
            Some(margin) => BoundaryMode::Guard { margin },
        };
        Window::new(self.half_width, boundary)
    }

    pub fn noise(&self) -> fogmimo_core::Result<NoisePower> {
        NoisePower::new(self.sigma2_n, self.p_s, self.p_u)
    }

    pub fn trial_config(&self, system: SystemKind) -> fogmimo_core::Result<TrialConfig> {
        let mut t = TrialConfig::new(system, self.fog_params()?, self.cell_params()?, self.window()?);
        t.q_prime = self.q_prime;
        t.antennas = self.antennas;
        t.trust_mode = self.trust_mode;
        t.thresholds = self.thresholds;
        t.fading_draws = self.fading_draws;
        t.trials = self.trials;
        t.seed = self.seed;
        t.noise = self.noise()?;
        t.se_cap = self.se_cap;
        t.min_distance = self.min_distance;
        t.signal_radius_factor = self.signal_radius_factor;
        Ok(t)
    }

    /// Pilot dimensions spent per slot: Q + Q' for the fog system, L for
    /// the cellular one.
    pub fn pilot_length(&self, system: SystemKind) -> usize {
        match system {
            SystemKind::Fog => self.q + self.q_prime,
            SystemKind::Cellular => self.l_pilots,
        }
    }

    /// Copy with one numeric key replaced, re-validated as a whole.
    pub fn with_value(&self, key: &str, value: f64) -> Result<SystemConfig, ConfigError> {
        check_numeric_key(key).map_err(ConfigError::Invalid)?;
        let literal = match key_kind(key) {
            Some(Kind::Int) | Some(Kind::AntennaCount) => {
                if value.fract() != 0.0 || !value.is_finite() {
                    return Err(ConfigError::Invalid(format!("{key}: {value} is not an integer")));
                }
                format!("{}", value as i64)
            }
            _ => fmt_f64(value),
        };
        let mut out = parse_config_with(&self.emit_body(), &[format!("{key}={literal}")])?;
        out.sweep = self.sweep.clone();
        Ok(out)
    }

    fn emit_body(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("lambda_a", fmt_f64(self.lambda_a));
        kv("lambda_u", fmt_f64(self.lambda_u));
        kv("q", self.q.to_string());
        kv("q_prime", self.q_prime.to_string());
        kv("l_pilots", self.l_pilots.to_string());
        kv("n_p", self.n_p.to_string());
        kv("eta", fmt_f64(self.eta));
        kv("r_in", fmt_f64(self.r_in));
        kv("epsilon", fmt_f64(self.epsilon));
        kv(
            "antennas",
            match self.antennas {
                Antennas::Finite(m) => m.to_string(),
                Antennas::Infinite => "\"inf\"".into(),
            },
        );
        kv("sigma2_n", fmt_f64(self.sigma2_n));
        kv("p_u", fmt_f64(self.p_u));
        kv("p_s", fmt_f64(self.p_s));
        kv("seed", self.seed.to_string());
        kv("trials", self.trials.to_string());
        kv("half_width", fmt_f64(self.half_width));
        match self.guard_margin {
            None => kv("boundary", "\"torus\"".into()),
            Some(m) => {
                kv("boundary", "\"guard\"".into());
                kv("guard_margin", fmt_f64(m));
            }
        }
        kv(
            "trust_mode",
            match self.trust_mode {
                TrustMode::Geometric => "\"geometric\"".into(),
                TrustMode::SignalLevel => "\"signal_level\"".into(),
            },
        );
        if let Some(t) = self.thresholds {
            kv("tau_useful", fmt_f64(t.useful));
            kv("tau_interf", fmt_f64(t.interf));
        }
        kv("fading_draws", self.fading_draws.to_string());
        kv("se_cap", fmt_f64(self.se_cap));
        kv(
            "theta",
            match self.theta {
                ThetaChoice::Auto => "\"auto\"".into(),
                ThetaChoice::ClosedForm => "\"closed_form\"".into(),
                ThetaChoice::SemiAnalytic => "\"semi_analytic\"".into(),
            },
        );
        kv("theta_trials", self.theta_trials.to_string());
        kv("darts", self.darts.to_string());
        kv("c_shape", fmt_f64(self.c_shape));
        if let Some(d) = self.min_distance {
            kv("min_distance", fmt_f64(d));
        }
        kv("signal_radius_factor", fmt_f64(self.signal_radius_factor));
        if let Some(t) = self.overhead_slots {
            kv("overhead_slots", t.to_string());
        }
        s
    }

    /// Serializes the configuration so that `parse_config(emit())` returns
    /// an equal value.
    pub fn emit(&self) -> String {
        let mut s = self.emit_body();
        if let Some(sw) = &self.sweep {
            let list = |v: &[f64]| v.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(", ");
            let _ = writeln!(s, "\n[sweep]\naxis = {:?}\nvalues = [{}]", sw.axis, list(&sw.values));
            if let Some((k, v)) = &sw.series {
                let _ = writeln!(s, "series = {k:?}\nseries_values = [{}]", list(v));
            }
            if !sw.measures.is_empty() {
                let names: Vec<String> = sw.measures.iter().map(|m| format!("{:?}", m.name())).collect();
                let _ = writeln!(s, "measures = [{}]", names.join(", "));
            }
        }
        s
    }
}
