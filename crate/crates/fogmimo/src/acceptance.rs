//! Executable acceptance criteria.
//!
//! Each criterion returns a pass/fail verdict with a one-line detail and is
//! timed against its runtime budget. The heavier oracles (fading-level rate
//! checks, θ sampling, PPP sampling of the interference transform, codec
//! enumeration) are implemented here so the `validate` command can run them
//! without the test harness.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use fogmimo_core::cell::{area_se_cellular, avg_user_se_cellular, pilot_activity_prob, CellParams};
use fogmimo_core::codec::{build_codebook, detect_trusted, rank, unrank, PilotIndex};
use fogmimo_core::fog::{
    area_se_fog, avg_user_se_fog, copilot_density, interference_laplace, maximize_copilot_density,
    outage_probability, theta_pdf_approx, FogOptions, FogParams, OutageMode, ThetaSource,
};
use fogmimo_core::geometry::{poisson_count, DiskPair, Window};
use fogmimo_core::linalg::{dot, CMatrix};
use fogmimo_core::phy::{
    complex_normal_vec, estimate_group_channel, finite_m_se, pilot_field_1, zfbf_precoders, ActiveSet, ChannelSet,
    NoisePower,
};
use fogmimo_core::rng::{substream, Purpose};
use fogmimo_core::sim::{aggregate, Antennas, SEReport, SystemKind, TrialConfig};
use fogmimo_core::special::binomial;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::config::parse_config_with;
use crate::output::csv_string;
use crate::run::{estimate_theta, run_grid, run_trials_parallel};

/// Verdict of one criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Outcome { passed, detail }
    }

    fn error(e: impl std::fmt::Display) -> Self {
        Outcome { passed: false, detail: format!("error: {e}") }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {} ({:.1} s of {:.0} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds,
            self.budget_seconds,
            self.detail
        )
    }
}

struct Criterion {
    id: u8,
    title: &'static str,
    budget_seconds: f64,
    check: fn() -> Outcome,
}

const CRITERIA: [Criterion; 12] = [
    Criterion { id: 1, title: "cellular table, analytic", budget_seconds: 60.0, check: table_one_analytic },
    Criterion { id: 2, title: "cellular table, simulated", budget_seconds: 600.0, check: table_one_simulated },
    Criterion { id: 3, title: "pilot activity p_a", budget_seconds: 10.0, check: pilot_activity },
    Criterion { id: 4, title: "co-pilot density vs R_in", budget_seconds: 300.0, check: copilot_density_curves },
    Criterion { id: 5, title: "fog SE vs R_in", budget_seconds: 900.0, check: fog_se_vs_radius },
    Criterion { id: 6, title: "not-allowed outage vs load", budget_seconds: 600.0, check: outage_vs_load },
    Criterion { id: 7, title: "area SE trends and finite M", budget_seconds: 1800.0, check: area_trends },
    Criterion { id: 8, title: "ZFBF rate oracles", budget_seconds: 600.0, check: zfbf_oracles },
    Criterion { id: 9, title: "uncovered-fraction oracles", budget_seconds: 300.0, check: theta_oracles },
    Criterion { id: 10, title: "interference transform oracle", budget_seconds: 300.0, check: laplace_oracle },
    Criterion { id: 11, title: "detection rule and combinadics", budget_seconds: 120.0, check: codec_suite },
    Criterion { id: 12, title: "recipe determinism", budget_seconds: 600.0, check: recipe_determinism },
];

/// Criteria that fail against the published numbers, with the analysis.
pub const KNOWN_GAPS: &[(u8, &str)] = &[
    (
        2,
        "simulated user SE exceeds the published simulation by 0.3-1.4% and area SE differs by -0.7% to +1.0%; \
         with 500 drops the 95% half-widths are about 0.2%, so N_p = 10, 20, 30 fall outside",
    ),
    (
        7,
        "at M = 64 the 80 m fog area SE is 12-15% below cellular at load 0.3-0.5 and overtakes it near load 1; \
         the 160 m light-load comparison and the unimodal trends hold",
    ),
];

pub fn ids() -> Vec<u8> {
    CRITERIA.iter().map(|c| c.id).collect()
}

pub fn run_criterion(id: u8) -> Option<CriterionReport> {
    let c = CRITERIA.iter().find(|c| c.id == id)?;
    let start = Instant::now();
    let outcome = (c.check)();
    let seconds = start.elapsed().as_secs_f64();
    let within = seconds <= c.budget_seconds;
    let mut detail = outcome.detail;
    if !within {
        detail.push_str("; over the runtime budget");
    }
    Some(CriterionReport {
        id: c.id,
        title: c.title,
        passed: outcome.passed && within,
        detail,
        seconds,
        budget_seconds: c.budget_seconds,
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

const LAMBDA_A: f64 = 31.8;
const ETA: f64 = 3.75;
const Q: usize = 40;

fn table_config(n_p: usize) -> CellParams {
    CellParams::new(LAMBDA_A, 10.0 * LAMBDA_A, 40, n_p, ETA).expect("valid table config")
}

const TABLE_NP: [usize; 4] = [10, 20, 30, 40];
const TABLE_SE_ANALYTIC: [f64; 4] = [10.69, 9.73, 9.62, 9.60];
const TABLE_AREA_ANALYTIC: [f64; 4] = [2587.9, 2998.2, 3051.5, 3056.9];
const TABLE_SE_SIM: [f64; 4] = [10.78, 9.74, 9.69, 9.70];
const TABLE_AREA_SIM: [f64; 4] = [2613.5, 3013.5, 3104.5, 3118.1];

fn table_one_analytic() -> Outcome {
    let mut ok = true;
    let mut detail = String::new();
    for (i, &n_p) in TABLE_NP.iter().enumerate() {
        let p = table_config(n_p);
        let (se, area) = match (avg_user_se_cellular(&p), area_se_cellular(&p)) {
            (Ok(s), Ok(a)) => (s, a),
            (Err(e), _) | (_, Err(e)) => return Outcome::error(e),
        };
        let pass = rel(se, TABLE_SE_ANALYTIC[i]) <= 0.01 && rel(area, TABLE_AREA_ANALYTIC[i]) <= 0.01;
        ok &= pass;
        let _ = write!(detail, "N_p={n_p}: {se:.3}/{area:.1}{} ", if pass { "" } else { " (off)" });
    }
    Outcome::new(ok, detail.trim_end().to_string())
}

/// Window used by the cellular table runs: a 4 km torus.
fn cell_trials(n_p: usize, trials: usize, seed: u64) -> fogmimo_core::Result<SEReport> {
    let p = table_config(n_p);
    let fog = FogParams::new(LAMBDA_A, p.lambda_u(), Q, DiskPair::new(0.1, 0.0)?, ETA)?;
    let mut cfg = TrialConfig::new(SystemKind::Cellular, fog, p, Window::torus(2.0)?);
    cfg.trials = trials;
    cfg.seed = seed;
    aggregate(&run_trials_parallel(&cfg)?)
}

fn table_one_simulated() -> Outcome {
    let mut ok = true;
    let mut detail = String::new();
    for (i, &n_p) in TABLE_NP.iter().enumerate() {
        let r = match cell_trials(n_p, 500, 7) {
            Ok(r) => r,
            Err(e) => return Outcome::error(e),
        };
        // The published interval is unknown; allow twice our own half-width.
        let se_ok = (r.user_se_served.mean - TABLE_SE_SIM[i]).abs() <= 2.0 * r.user_se_served.half_width;
        let area_ok = (r.area_se.mean - TABLE_AREA_SIM[i]).abs() <= 2.0 * r.area_se.half_width;
        ok &= se_ok && area_ok;
        let _ = write!(
            detail,
            "N_p={n_p}: {:.3}±{:.3}{} {:.1}±{:.1}{}; ",
            r.user_se_served.mean,
            r.user_se_served.half_width,
            if se_ok { "" } else { "*" },
            r.area_se.mean,
            r.area_se.half_width,
            if area_ok { "" } else { "*" }
        );
    }
    Outcome::new(ok, detail.trim_end_matches("; ").to_string())
}

fn pilot_activity() -> Outcome {
    let pa = pilot_activity_prob(&table_config(40));
    Outcome::new((pa - 0.25).abs() <= 1e-3, format!("p_a = {pa:.6}"))
}

fn fig3_params(lambda_a: f64, r_in: f64) -> fogmimo_core::Result<FogParams> {
    // λ = 1 co-pilot user per unit area and R_out = 1.25 R_in.
    FogParams::new(lambda_a, Q as f64, Q, DiskPair::new(r_in, 0.25)?, ETA)
}

fn copilot_density_curves() -> Outcome {
    let run = || -> fogmimo_core::Result<Outcome> {
        let mut detail = String::new();
        let mut ok = true;
        let mut maximizers = Vec::new();
        for (s, &la) in [0.5, 1.0, 5.0].iter().enumerate() {
            let r_star = maximize_copilot_density(&fig3_params(la, 0.1)?, 0.01, 3.0)?;
            maximizers.push(r_star);
            let mut worst: f64 = 0.0;
            for i in 1..=10 {
                let p = fig3_params(la, r_star * i as f64 / 10.0)?;
                let theta = estimate_theta(&p, 20_000, 100 + s as u64, 2048);
                let closed = copilot_density(&p, ThetaSource::ClosedForm);
                let semi = copilot_density(&p, ThetaSource::Empirical(&theta));
                worst = worst.max(rel(closed, semi));
            }
            ok &= worst <= 0.03;
            let _ = write!(detail, "λ_a={la}: R*={r_star:.4} max dev {:.2}%; ", 100.0 * worst);
            if la == 5.0 {
                for f in [1.25, 1.5, 2.0, 3.0] {
                    let p = fig3_params(la, r_star * f)?;
                    let theta = estimate_theta(&p, 20_000, 200, 2048);
                    let closed = copilot_density(&p, ThetaSource::ClosedForm);
                    let semi = copilot_density(&p, ThetaSource::Empirical(&theta));
                    if closed > semi {
                        ok = false;
                        let _ = write!(detail, "closed {closed:.4} > semi {semi:.4} at {f}R*; ");
                    }
                }
            }
        }
        let decreasing = maximizers.windows(2).all(|w| w[1] < w[0]);
        ok &= decreasing;
        let _ = write!(detail, "maximizer decreasing in λ_a: {decreasing}");
        Ok(Outcome::new(ok, detail))
    };
    run().unwrap_or_else(Outcome::error)
}

fn example_two(r_in: f64, epsilon: f64) -> fogmimo_core::Result<FogParams> {
    FogParams::new(LAMBDA_A, Q as f64 * LAMBDA_A, Q, DiskPair::new(r_in, epsilon)?, ETA)
}

fn fog_sim(params: FogParams, antennas: Antennas, trials: usize, seed: u64) -> fogmimo_core::Result<SEReport> {
    let cell = CellParams::new(params.lambda_a(), params.lambda_u(), 60, 60, params.eta())?;
    let mut cfg = TrialConfig::new(SystemKind::Fog, params, cell, Window::torus(2.0)?);
    cfg.antennas = antennas;
    cfg.trials = trials;
    cfg.seed = seed;
    aggregate(&run_trials_parallel(&cfg)?)
}

fn fog_se_vs_radius() -> Outcome {
    let run = || -> fogmimo_core::Result<Outcome> {
        let opts = FogOptions::default();
        // 20 m up to the 100 m radius of the mean RRH cell.
        let grid: Vec<f64> = (2..=10).map(|i| 0.01 * i as f64).collect();
        let mut ok = true;
        let mut detail = String::new();
        for eps in [0.0, 0.2] {
            let se: Vec<f64> = grid
                .iter()
                .map(|&r| avg_user_se_fog(&example_two(r, eps)?, ThetaSource::ClosedForm, &opts))
                .collect::<fogmimo_core::Result<_>>()?;
            let mono = se.windows(2).all(|w| w[1] < w[0]);
            ok &= mono;
            let _ = write!(detail, "ε={eps}: SE decreasing {mono}; ");
        }
        let mut dominated = true;
        for &r in &grid {
            let a = area_se_fog(&example_two(r, 0.0)?, ThetaSource::ClosedForm, &opts)?.per_pilot;
            let b = area_se_fog(&example_two(r, 0.2)?, ThetaSource::ClosedForm, &opts)?.per_pilot;
            dominated &= a >= b;
        }
        ok &= dominated;
        let _ = write!(detail, "R_out=R_in dominates: {dominated}; ");
        let r_star = maximize_copilot_density(&example_two(0.05, 0.2)?, 0.005, 0.5)?;
        let mut worst: f64 = 0.0;
        for eps in [0.0, 0.2] {
            for r in [0.02, 0.03, 0.04, 0.05, 0.06, r_star] {
                let p = example_two(r, eps)?;
                let an = area_se_fog(&p, ThetaSource::ClosedForm, &opts)?.per_pilot;
                let sim = fog_sim(p, Antennas::Infinite, 40, 11)?.area_se_per_pilot.mean;
                worst = worst.max((sim - an).abs() / sim);
            }
        }
        ok &= worst <= 0.12;
        let _ = write!(detail, "R_in ≤ {r_star:.3}: max |sim−an|/sim = {:.1}%", 100.0 * worst);
        Ok(Outcome::new(ok, detail))
    };
    run().unwrap_or_else(Outcome::error)
}

fn section_five(r_in: f64, load: f64) -> fogmimo_core::Result<FogParams> {
    FogParams::new(LAMBDA_A, Q as f64 * load * LAMBDA_A, Q, DiskPair::new(r_in, 0.0)?, ETA)
}

fn not_allowed_outage(r_in: f64, load: f64, seed: u64) -> fogmimo_core::Result<f64> {
    let p = section_five(r_in, load)?;
    let theta = estimate_theta(&p, 20_000, seed, 2048);
    Ok(outage_probability(&p, OutageMode::NotAllowed, ThetaSource::Empirical(&theta)))
}

fn outage_vs_load() -> Outcome {
    let run = || -> fogmimo_core::Result<Outcome> {
        let mut ok = true;
        let mut detail = String::from("R_in=160 m:");
        for load in [0.01, 0.02, 0.05, 0.1] {
            let o = not_allowed_outage(0.16, load, 31)?;
            ok &= (0.08..=0.25).contains(&o);
            let _ = write!(detail, " {o:.3}");
        }
        let radii = [0.08, 0.1, 0.12];
        let low: Vec<f64> = radii.iter().map(|&r| not_allowed_outage(r, 0.01, 32)).collect::<Result<_, _>>()?;
        let high: Vec<f64> = radii.iter().map(|&r| not_allowed_outage(r, 2.0, 33)).collect::<Result<_, _>>()?;
        let low_ok = low.windows(2).all(|w| w[1] < w[0]);
        let high_ok = high.windows(2).all(|w| w[1] > w[0]);
        ok &= low_ok && high_ok;
        let _ = write!(
            detail,
            "; load 0.01 (80/100/120 m): {:.3}/{:.3}/{:.3}; load 2: {:.3}/{:.3}/{:.3}",
            low[0], low[1], low[2], high[0], high[1], high[2]
        );
        Ok(Outcome::new(ok, detail))
    };
    run().unwrap_or_else(Outcome::error)
}

/// Strictly rises, then strictly falls (either part may be empty).
fn unimodal(v: &[f64]) -> bool {
    let peak = v.iter().enumerate().fold(0, |best, (i, &x)| if x > v[best] { i } else { best });
    v[..=peak].windows(2).all(|w| w[1] > w[0]) && v[peak..].windows(2).all(|w| w[1] < w[0])
}

fn area_trends() -> Outcome {
    let run = || -> fogmimo_core::Result<Outcome> {
        let opts = FogOptions::default();
        let loads: Vec<f64> = (0..=15).map(|i| 0.01 * 10f64.powf(i as f64 / 5.0)).collect();
        let mut ok = true;
        let mut detail = String::new();
        for r_in in [0.08, 0.1, 0.12] {
            let mut curve = Vec::new();
            for &load in &loads {
                let p = section_five(r_in, load)?;
                let source_closed = fogmimo_core::fog::closed_form_preferred(&p)?;
                let theta;
                let source = if source_closed {
                    ThetaSource::ClosedForm
                } else {
                    theta = estimate_theta(&p, 5_000, 41, 1024);
                    ThetaSource::Empirical(&theta)
                };
                curve.push(area_se_fog(&p, source, &opts)?.per_pilot);
            }
            let u = unimodal(&curve);
            ok &= u;
            let _ = write!(detail, "R_in={r_in}: unimodal {u}; ");
        }
        let m64 = Antennas::Finite(64);
        let cell_area = |load: f64| -> fogmimo_core::Result<f64> {
            let lu = Q as f64 * load * LAMBDA_A;
            let cell = CellParams::new(LAMBDA_A, lu, 60, 60, ETA)?;
            let mut cfg = TrialConfig::new(SystemKind::Cellular, section_five(0.1, load)?, cell, Window::torus(2.0)?);
            cfg.antennas = m64;
            cfg.trials = 20;
            cfg.seed = 51;
            Ok(aggregate(&run_trials_parallel(&cfg)?)?.area_se.mean)
        };
        for load in [0.01, 0.03, 0.1] {
            let fog = fog_sim(section_five(0.16, load)?, m64, 20, 52)?.area_se.mean;
            let cell = cell_area(load)?;
            let pass = fog >= 0.75 * cell;
            ok &= pass;
            let _ = write!(detail, "160 m load {load}: fog/cell {:.3}; ", fog / cell);
        }
        for load in [0.3, 0.5, 1.0] {
            let fog = fog_sim(section_five(0.08, load)?, m64, 10, 53)?.area_se.mean;
            let cell = cell_area(load)?;
            let pass = fog >= cell;
            ok &= pass;
            let _ = write!(detail, "80 m load {load}: fog/cell {:.3}; ", fog / cell);
        }
        Ok(Outcome::new(ok, detail.trim_end_matches("; ").to_string()))
    };
    run().unwrap_or_else(Outcome::error)
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

struct RateFixture {
    betas: Vec<Vec<f64>>,
    pilots: Vec<PilotIndex>,
    active: ActiveSet,
}

fn rate_fixtures() -> fogmimo_core::Result<Vec<RateFixture>> {
    let pilots = vec![
        PilotIndex { group: 0, word: 0 },
        PilotIndex { group: 0, word: 1 },
        PilotIndex { group: 1, word: 0 },
        PilotIndex { group: 1, word: 1 },
    ];
    let mut a1 = ActiveSet::new(3);
    for (k, u, g) in [(0, 0, 0), (0, 2, 1), (1, 0, 0), (1, 3, 1), (2, 1, 0)] {
        a1.add(k, u, g)?;
    }
    let mut a2 = ActiveSet::new(3);
    for (k, u, g) in [(0, 0, 0), (1, 1, 0), (1, 2, 1), (2, 3, 1)] {
        a2.add(k, u, g)?;
    }
    Ok(vec![
        RateFixture {
            betas: vec![vec![2.0, 0.3, 0.8, 0.1], vec![1.2, 0.2, 0.3, 1.5], vec![0.25, 1.8, 0.2, 0.4]],
            pilots: pilots.clone(),
            active: a1,
        },
        RateFixture {
            betas: vec![vec![3.0, 0.5, 0.05, 0.2], vec![0.6, 2.5, 1.1, 0.3], vec![0.1, 0.9, 0.4, 2.2]],
            pilots,
            active: a2,
        },
    ])
}

/// Rate of `user` from sampled useful-signal mean and variance and
/// interference power under per-draw estimates and ZFBF precoders.
fn brute_force_rate(fx: &RateFixture, user: usize, m: usize, noise: &NoisePower, draws: usize, seed: u64) -> fogmimo_core::Result<f64> {
    let cb = build_codebook(2, 4, noise.pu)?;
    let mut rng = substream(seed, 0, Purpose::Fading);
    let (mut s1, mut s2, mut interf) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
    for _ in 0..draws {
        let ch = ChannelSet::draw(&mut rng, &fx.betas, m)?;
        let mut useful = Complex64::new(0.0, 0.0);
        for k in 0..fx.active.n_rrh() {
            let served = fx.active.served(k);
            if served.is_empty() {
                continue;
            }
            let y = pilot_field_1(&mut rng, &ch, k, &fx.pilots, &cb, noise.sigma2_n);
            let cols: Vec<Vec<Complex64>> = served.iter().map(|s| estimate_group_channel(&y, s.group, &cb)).collect();
            let v = zfbf_precoders(&CMatrix::from_columns(&cols))?;
            for (c, s) in served.iter().enumerate() {
                let coef = dot(ch.g(k, user), v.column(c));
                if s.user == user {
                    useful += coef;
                } else {
                    interf += coef.norm_sqr();
                }
            }
        }
        s1 += useful;
        s2 += useful.norm_sqr();
    }
    let n = draws as f64;
    let mean = s1 / n;
    let var = s2 / n - mean.norm_sqr();
    Ok((1.0 + mean.norm_sqr() / (noise.downlink() + var + interf / n)).log2())
}

fn closed_form_rate(fx: &RateFixture, user: usize, m: usize, noise: &NoisePower) -> fogmimo_core::Result<f64> {
    let group = fx.pilots[user].group;
    let nu = noise.estimation(2);
    let alpha = |k: usize| {
        let s: f64 = (0..fx.pilots.len()).filter(|&i| fx.pilots[i].group == group).map(|i| fx.betas[k][i]).sum();
        fx.betas[k][user] / (s + nu)
    };
    let links = fx.active.user_links(user, group, |k| fx.betas[k][user], alpha);
    finite_m_se(&links, noise, m, user, 40.0)
}

fn zfbf_oracles() -> Outcome {
    let run = || -> fogmimo_core::Result<Outcome> {
        let mut ok = true;
        let mut detail = String::new();
        let mut rng = substream(61, 0, Purpose::Fading);
        for &(m, u) in &[(16usize, 1usize), (16, 4), (32, 7), (64, 20)] {
            let mut draws = Vec::with_capacity(10_000);
            for _ in 0..10_000 {
                let cols: Vec<Vec<Complex64>> = (0..u).map(|_| complex_normal_vec(&mut rng, m, 1.0)).collect();
                let g = CMatrix::from_columns(&cols);
                let v = zfbf_precoders(&g)?;
                draws.push(dot(g.column(0), v.column(0)).norm_sqr());
            }
            let (mean, _) = mean_sd(&draws);
            let dof = (m - u + 1) as f64;
            let pass = (mean - dof).abs() < 3.0 * (dof / draws.len() as f64).sqrt();
            ok &= pass;
            let _ = write!(detail, "χ²(M={m},U={u}) {mean:.2}/{dof}; ");
        }
        // One RRH; group 0 holds users 0 and 1, group 1 holds user 2.
        let cb = build_codebook(2, 4, 1.0)?;
        let betas = vec![vec![1.0, 0.4, 0.7]];
        let pilots = [PilotIndex { group: 0, word: 0 }, PilotIndex { group: 0, word: 1 }, PilotIndex { group: 1, word: 0 }];
        let sigma2 = 0.3;
        let alpha = 1.0 / (1.0 + 0.4 + sigma2 / 2.0);
        let mut leak = Vec::with_capacity(10_000);
        for _ in 0..10_000 {
            let ch = ChannelSet::draw(&mut rng, &betas, 12)?;
            let y = pilot_field_1(&mut rng, &ch, 0, &pilots, &cb, sigma2);
            let est = CMatrix::from_columns(&[estimate_group_channel(&y, 0, &cb), estimate_group_channel(&y, 1, &cb)]);
            let v = zfbf_precoders(&est)?;
            leak.push(dot(ch.g(0, 0), v.column(1)).norm_sqr());
        }
        let (mean, sd) = mean_sd(&leak);
        let want = 1.0 - alpha;
        let pass = (mean - want).abs() < 3.0 * sd / (leak.len() as f64).sqrt();
        ok &= pass;
        let _ = write!(detail, "residual {mean:.4}/{want:.4}; ");
        let noise = NoisePower::new(1.0, 1.0, 1.0)?;
        let mut worst: f64 = 0.0;
        let fixtures = rate_fixtures()?;
        let jobs: Vec<(usize, usize)> = (0..fixtures.len())
            .flat_map(|f| (0..4).map(move |u| (f, u)))
            .filter(|&(f, u)| (0..3).any(|k| fixtures[f].active.serves(k, u)))
            .collect();
        let devs: Vec<f64> = jobs
            .par_iter()
            .map(|&(f, u)| -> fogmimo_core::Result<f64> {
                let bf = brute_force_rate(&fixtures[f], u, 128, &noise, 50_000, 70 + (4 * f + u) as u64)?;
                let cf = closed_form_rate(&fixtures[f], u, 128, &noise)?;
                Ok(rel(bf, cf))
            })
            .collect::<fogmimo_core::Result<_>>()?;
        for d in devs {
            worst = worst.max(d);
        }
        ok &= worst <= 0.02;
        let _ = write!(detail, "rate vs fading average (M=128) max {:.2}%", 100.0 * worst);
        Ok(Outcome::new(ok, detail))
    };
    run().unwrap_or_else(Outcome::error)
}

fn theta_oracles() -> Outcome {
    let run = || -> fogmimo_core::Result<Outcome> {
        let disks = DiskPair::new(0.1, 0.25)?;
        let lambda = 8.0;
        let p = FogParams::new(1.0, lambda, 1, disks, ETA)?;
        let d = estimate_theta(&p, 100_000, 81, 1024);
        let n = d.samples.len() as f64;
        let (mean, se) = d.expect_with_se(|t| t);
        let want = (-PI * lambda * disks.r_out() * disks.r_out()).exp();
        let p1 = (-PI * lambda * (disks.r_in() + disks.r_out()).powi(2)).exp();
        let se1 = (p1 * (1.0 - p1) / n).sqrt();
        let mean_ok = (mean - want).abs() < 3.0 * se;
        let mass_ok = (d.mass_one - p1).abs() < 3.0 * se1;
        let mut sum_ok = true;
        for i in 0..10 {
            for j in 0..10 {
                let la = 0.1 + 3.0 * i as f64;
                let dk = DiskPair::new(0.02 + 0.03 * j as f64, 0.05 * (i % 5) as f64)?;
                let f = theta_pdf_approx(la, dk);
                sum_ok &= (f.p0 + f.pu + f.p1 - 1.0).abs() <= 1e-12;
            }
        }
        Ok(Outcome::new(
            mean_ok && mass_ok && sum_ok,
            format!(
                "mean θ {mean:.5}/{want:.5} (se {se:.1e}); p₁ {:.5}/{p1:.5}; p0+pu+p1=1 on 100 points: {sum_ok}",
                d.mass_one
            ),
        ))
    };
    run().unwrap_or_else(Outcome::error)
}

/// E[exp(−γ Σ r^{−2η})] over a PPP of intensity `lambda` in the annulus
/// R_out < r < r_max.
fn laplace_monte_carlo(gamma: f64, lambda: f64, r_out: f64, eta: f64, r_max: f64, n: usize, seed: u64) -> f64 {
    let chunks = 64;
    let per = n / chunks;
    let sum: f64 = (0..chunks as u64)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c, Purpose::Drop);
            let (a2, b2) = (r_out * r_out, r_max * r_max);
            let mean = lambda * PI * (b2 - a2);
            let mut acc = 0.0;
            for _ in 0..per {
                let k = poisson_count(&mut rng, mean);
                let mut i = 0.0;
                for _ in 0..k {
                    let r2 = a2 + rng.random::<f64>() * (b2 - a2);
                    i += r2.powf(-eta);
                }
                acc += (-gamma * i).exp();
            }
            acc
        })
        .sum();
    sum / (per * chunks) as f64
}

fn laplace_oracle() -> Outcome {
    let grid: [(f64, f64, f64, [f64; 4]); 5] = [
        (10.0, 0.1, 3.75, [1.0, 3.0, 30.0, 300.0]),
        (5.0, 0.2, 3.0, [0.3, 1.0, 3.0, 10.0]),
        (30.0, 0.08, 4.0, [1.0, 3.0, 30.0, 100.0]),
        (2.0, 0.3, 2.5, [0.3, 1.0, 3.0, 10.0]),
        (60.0, 0.05, 3.5, [1.0, 3.0, 10.0, 30.0]),
    ];
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (lambda, r, eta, xs) in grid {
        for x in xs {
            // γ is expressed through X = γ R_out^{−2η}.
            let gamma = x * r.powf(2.0 * eta);
            let scale = PI * lambda * r * r * x / ((eta - 1.0) * 1e-3);
            let r_max = r * scale.powf(1.0 / (2.0 * eta - 2.0)).max(2.0);
            let mc = laplace_monte_carlo(gamma, lambda, r, eta, r_max, 256_000, 90 + count);
            let exact = match interference_laplace(gamma, lambda, r, eta) {
                Ok(v) => v,
                Err(e) => return Outcome::error(e),
            };
            worst = worst.max(rel(mc, exact));
            count += 1;
        }
    }
    Outcome::new(worst <= 0.01, format!("{count} points, max relative deviation {:.3}%", 100.0 * worst))
}

fn codec_suite() -> Outcome {
    let mut ok = true;
    let mut checked = 0u64;
    for qp in [4usize, 6, 8] {
        let k = qp / 2;
        let size = binomial(qp as u32, k as u32);
        let words: Vec<u64> = (0..size).map(|r| unrank(r, qp, k)).collect();
        let (tau_u, tau_i) = (1.0, 0.1);
        let field = |parts: &[(u64, f64)]| -> Vec<f64> {
            (0..qp).map(|i| parts.iter().map(|&(w, a)| if w >> i & 1 == 1 { a } else { 0.0 }).sum()).collect()
        };
        for (r, &w) in words.iter().enumerate() {
            let d = detect_trusted(&field(&[(w, 2.0)]), tau_u, tau_i);
            ok &= d.trusted && d.codeword_index == Some(r as u64) && d.recovered_word == Some(w);
            checked += 1;
            for &w2 in words.iter().filter(|&&w2| w2 != w) {
                ok &= !detect_trusted(&field(&[(w, 2.0), (w2, 2.0)]), tau_u, tau_i).trusted;
                ok &= !detect_trusted(&field(&[(w, 2.0), (w2, 0.5)]), tau_u, tau_i).trusted;
                checked += 2;
            }
        }
    }
    let n = 20;
    let total = binomial(n as u32, 10);
    let round_trip = (0..total).into_par_iter().all(|r| {
        let w = unrank(r, n, 10);
        w.count_ones() == 10 && rank(w, n) == r
    });
    ok &= round_trip;
    Outcome::new(
        ok,
        format!("{checked} detection cases for Q' ∈ {{4,6,8}}; rank/unrank over {total} words: {round_trip}"),
    )
}

/// Recipe files shipped with the tool.
pub const RECIPES: &[(&str, &str)] = &[
    ("fig3_copilot_density", include_str!("../../../recipes/fig3_copilot_density.toml")),
    ("fig4_se_vs_radius", include_str!("../../../recipes/fig4_se_vs_radius.toml")),
    ("fig5_fog_vs_load", include_str!("../../../recipes/fig5_fog_vs_load.toml")),
    ("fig6_fog_vs_cellular", include_str!("../../../recipes/fig6_fog_vs_cellular.toml")),
    ("fig7_fog_vs_cellular_m64", include_str!("../../../recipes/fig7_fog_vs_cellular_m64.toml")),
    ("table1_cellular", include_str!("../../../recipes/table1_cellular.toml")),
];

/// Runs a recipe reduced to its first two grid points and a couple of
/// trials, inside a pool of `threads` workers, and returns the CSV text.
pub fn reduced_recipe_csv(text: &str, threads: usize) -> Result<String, String> {
    let overrides = ["trials=2".to_string(), "theta_trials=200".to_string()];
    let mut cfg = parse_config_with(text, &overrides).map_err(|e| e.to_string())?;
    let mut sweep = cfg.sweep.clone().ok_or("recipe has no sweep")?;
    sweep.values.truncate(2);
    if let Some((_, v)) = &mut sweep.series {
        v.truncate(1);
    }
    cfg.sweep = Some(sweep.clone());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
    let table = pool.install(|| run_grid(&cfg, &sweep.measures, Some(&sweep))).map_err(|e| e.to_string())?;
    csv_string(&table).map_err(|e| e.to_string())
}

fn recipe_determinism() -> Outcome {
    let mut ok = true;
    let mut detail = String::new();
    for (name, text) in RECIPES {
        let same = match (reduced_recipe_csv(text, 1), reduced_recipe_csv(text, 4)) {
            (Ok(a), Ok(b)) => a == b,
            (Err(e), _) | (_, Err(e)) => return Outcome::error(format!("{name}: {e}")),
        };
        ok &= same;
        let _ = write!(detail, "{name}: {}; ", if same { "identical" } else { "differs" });
    }
    Outcome::new(ok, detail.trim_end_matches("; ").to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unimodality() {
        assert!(unimodal(&[1.0, 2.0, 3.0, 2.0]));
        assert!(unimodal(&[3.0, 2.0, 1.0]));
        assert!(unimodal(&[1.0, 2.0]));
        assert!(!unimodal(&[1.0, 3.0, 2.0, 4.0]));
        assert!(!unimodal(&[1.0, 1.0, 2.0]));
    }

    #[test]
    fn every_criterion_is_listed_once() {
        assert_eq!(ids(), (1..=12).collect::<Vec<u8>>());
    }
}
