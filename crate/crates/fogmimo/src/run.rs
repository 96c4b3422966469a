//! Evaluation of analytic and simulated quantities at one configuration and
//! over sweep grids.

use fogmimo_core::cell::{
    area_se_cellular, avg_user_se_cellular, expected_served_users, pilot_activity_prob,
};
use fogmimo_core::fog::{
    active_rrh_density, area_se_fog, avg_rrh_power, closed_form_preferred, copilot_density, expected_served,
    outage_probability, FogOptions, FogParams, OutageMode, ThetaSource,
};
use fogmimo_core::geometry::{theta_sample, ThetaDistribution};
use fogmimo_core::sim::{aggregate, run_trial, Estimate, SEReport, SystemKind, TrialConfig, TrialRecord};
use rayon::prelude::*;

use crate::config::{ConfigError, Measure, SweepSpec, SystemConfig, ThetaChoice};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<fogmimo_core::Error> for RunError {
    fn from(e: fogmimo_core::Error) -> Self {
        match e {
            fogmimo_core::Error::Parameter { .. } => RunError::Config(ConfigError::Invalid(e.to_string())),
            other => RunError::Numerical(other.to_string()),
        }
    }
}

/// Histogram bins of the θ distribution.
const THETA_BINS: usize = 50;

/// Empirical θ law from dart trials run in parallel; identical to the
/// sequential estimator for the same seed.
pub fn estimate_theta(params: &FogParams, trials: usize, seed: u64, darts: usize) -> ThetaDistribution {
    let lambda = params.lambda();
    let disks = params.disks();
    let samples: Vec<f64> =
        (0..trials as u64).into_par_iter().map(|t| theta_sample(lambda, disks, darts, seed, t)).collect();
    ThetaDistribution::from_samples(samples, THETA_BINS)
}

/// Runs every trial of `cfg` in parallel and returns the records in trial
/// order.
pub fn run_trials_parallel(cfg: &TrialConfig) -> fogmimo_core::Result<Vec<TrialRecord>> {
    cfg.validate()?;
    (0..cfg.trials as u64).into_par_iter().map(|t| run_trial(cfg, t)).collect()
}

pub fn simulate(cfg: &SystemConfig, system: SystemKind) -> Result<SEReport, RunError> {
    let records = run_trials_parallel(&cfg.trial_config(system)?)?;
    Ok(aggregate(&records)?)
}

/// One named output value.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub value: f64,
    /// Spectral-efficiency valued, so subject to the pilot-overhead factor.
    pub se_valued: bool,
}

fn col(name: &str, value: f64) -> Column {
    Column { name: name.to_string(), value, se_valued: false }
}

fn se_col(name: &str, value: f64) -> Column {
    Column { name: name.to_string(), value, se_valued: true }
}

fn se_estimate(out: &mut Vec<Column>, name: &str, e: Estimate) {
    out.push(se_col(name, e.mean));
    out.push(se_col(&format!("{name}_ci"), e.half_width));
}

fn estimate(out: &mut Vec<Column>, name: &str, e: Option<Estimate>) {
    let e = e.unwrap_or(Estimate { mean: f64::NAN, half_width: f64::NAN });
    out.push(col(name, e.mean));
    out.push(col(&format!("{name}_ci"), e.half_width));
}

/// Resolves the θ source of the analytic fog quantities.
fn use_closed_form(cfg: &SystemConfig, params: &FogParams) -> Result<bool, RunError> {
    Ok(match cfg.theta {
        ThetaChoice::ClosedForm => true,
        ThetaChoice::SemiAnalytic => false,
        ThetaChoice::Auto => closed_form_preferred(params)?,
    })
}

pub fn fog_analytic(cfg: &SystemConfig) -> Result<Vec<Column>, RunError> {
    let p = cfg.fog_params()?;
    let theta = estimate_theta(&p, cfg.theta_trials, cfg.seed, cfg.darts);
    let closed = use_closed_form(cfg, &p)?;
    let source = if closed { ThetaSource::ClosedForm } else { ThetaSource::Empirical(&theta) };
    let opts = FogOptions { se_cap: cfg.se_cap, ..FogOptions::default() };
    let area = area_se_fog(&p, source, &opts)?;
    Ok(vec![
        col("lambda_tilde_closed", copilot_density(&p, ThetaSource::ClosedForm)),
        col("lambda_tilde_semianalytic", copilot_density(&p, ThetaSource::Empirical(&theta))),
        col("theta_closed_form", if closed { 1.0 } else { 0.0 }),
        col("active_rrh_density", active_rrh_density(&p)),
        col("expected_served", expected_served(&p)),
        col("avg_rrh_power", avg_rrh_power(&p, cfg.p_s)),
        col("outage_void_analytic", outage_probability(&p, OutageMode::VoidDisk, source)),
        col("outage_not_allowed_analytic", outage_probability(&p, OutageMode::NotAllowed, source)),
        se_col("fog_user_se_analytic", area.user_se),
        se_col("fog_area_se_per_pilot_analytic", area.per_pilot),
        se_col("fog_area_se_analytic", area.total),
    ])
}

pub fn cell_analytic(cfg: &SystemConfig) -> Result<Vec<Column>, RunError> {
    let p = cfg.cell_params()?;
    let area = area_se_cellular(&p)?;
    Ok(vec![
        col("p_a", pilot_activity_prob(&p)),
        col("cell_expected_served", expected_served_users(&p)),
        se_col("cell_user_se_analytic", avg_user_se_cellular(&p)?),
        se_col("cell_area_se_analytic", area),
        se_col("cell_area_se_per_pilot_analytic", area / p.l_pilots() as f64),
    ])
}

/// Columns of a simulated report plus its numerical-error count.
pub fn sim_columns(report: &SEReport, system: SystemKind) -> Vec<Column> {
    let mut out = Vec::new();
    let pre = match system {
        SystemKind::Fog => "fog",
        SystemKind::Cellular => "cell",
    };
    let name = |s: &str| format!("{pre}_{s}");
    out.push(col(&name("trials"), report.trials as f64));
    out.push(col(&name("users"), report.users as f64));
    out.push(col(&name("served"), report.served as f64));
    se_estimate(&mut out, &name("user_se_sim"), report.user_se_served);
    se_estimate(&mut out, &name("user_se_all_sim"), report.user_se_all);
    se_estimate(&mut out, &name("area_se_sim"), report.area_se);
    se_estimate(&mut out, &name("area_se_per_pilot_sim"), report.area_se_per_pilot);
    match system {
        SystemKind::Fog => estimate(&mut out, "lambda_tilde_sim", Some(report.allowed_density)),
        SystemKind::Cellular => estimate(&mut out, "cell_scheduled_density_sim", Some(report.allowed_density)),
    }
    estimate(&mut out, &name("outage_void_sim"), report.outage_void);
    estimate(&mut out, &name("outage_not_allowed_sim"), report.outage_not_allowed);
    estimate(&mut out, &name("active_fraction_sim"), Some(report.active_fraction));
    estimate(&mut out, &name("rrh_power_sim"), Some(report.rrh_power));
    out.push(col(&name("dropped_streams"), report.dropped as f64));
    out.push(col(&name("trust_disagreements"), report.trust_disagreements as f64));
    out.push(col(&name("phantom"), report.phantom as f64));
    out.push(col(&name("misidentified"), report.misidentified as f64));
    out.push(col(&name("numerical_errors"), report.numerical_errors as f64));
    out
}

fn system_of(m: Measure) -> SystemKind {
    match m {
        Measure::FogAnalytic | Measure::FogSim => SystemKind::Fog,
        Measure::CellAnalytic | Measure::CellSim => SystemKind::Cellular,
    }
}

/// Output of one measure at one point.
pub struct Evaluation {
    pub columns: Vec<Column>,
    pub numerical_errors: u64,
}

pub fn evaluate(measure: Measure, cfg: &SystemConfig) -> Result<Evaluation, RunError> {
    let (mut columns, numerical_errors) = match measure {
        Measure::FogAnalytic => (fog_analytic(cfg)?, 0),
        Measure::CellAnalytic => (cell_analytic(cfg)?, 0),
        Measure::FogSim | Measure::CellSim => {
            let system = system_of(measure);
            let report = simulate(cfg, system)?;
            (sim_columns(&report, system), report.numerical_errors)
        }
    };
    if let Some(t) = cfg.overhead_slots {
        let factor = report_overhead(1.0, cfg.pilot_length(system_of(measure)), t)?;
        for c in columns.iter_mut().filter(|c| c.se_valued) {
            c.value *= factor;
        }
    }
    Ok(Evaluation { columns, numerical_errors })
}

/// Scales a spectral efficiency by the pilot-overhead factor (1 − L/T).
pub fn report_overhead(se: f64, pilot_length: usize, slot_length: usize) -> Result<f64, RunError> {
    if pilot_length == 0 || pilot_length >= slot_length {
        return Err(RunError::Config(ConfigError::Invalid(format!(
            "overhead: need 0 < L < T (L = {pilot_length}, T = {slot_length})"
        ))));
    }
    Ok(se * (1.0 - pilot_length as f64 / slot_length as f64))
}

/// A rectangular result table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub numerical_errors: u64,
}

/// Evaluates `measures` at a single point or at every point of `sweep`.
pub fn run_grid(cfg: &SystemConfig, measures: &[Measure], sweep: Option<&SweepSpec>) -> Result<Table, RunError> {
    let mut points: Vec<(Vec<Column>, SystemConfig)> = Vec::new();
    match sweep {
        None => points.push((Vec::new(), cfg.clone())),
        Some(s) => {
            for (series, value) in s.points() {
                let mut lead = Vec::new();
                let mut point = cfg.clone();
                if let (Some((key, _)), Some(v)) = (&s.series, series) {
                    point = point.with_value(key, v)?;
                    lead.push(col(key, v));
                }
                point = point.with_value(&s.axis, value)?;
                lead.push(col(&s.axis, value));
                points.push((lead, point));
            }
        }
    }
    let mut table = Table { header: Vec::new(), rows: Vec::new(), numerical_errors: 0 };
    for (lead, point) in points {
        let mut columns = lead;
        for &m in measures {
            let e = evaluate(m, &point)?;
            table.numerical_errors += e.numerical_errors;
            columns.extend(e.columns);
        }
        if table.header.is_empty() {
            table.header = columns.iter().map(|c| c.name.clone()).collect();
        }
        table.rows.push(columns.into_iter().map(|c| c.value).collect());
    }
    Ok(table)
}
