//! Monte-Carlo trials of the fog and cellular systems and their pooled
//! statistics.
//!
//! One trial drops both point processes on a window, runs pilot assignment
//! and the trust decision at every RRH (or nearest-BS association and random
//! fractional pilot reuse), then evaluates the downlink spectral efficiency
//! of every user in closed form for the given topology: the large-M SIR when
//! the antenna count is unbounded, the finite-M ZFBF rate otherwise.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use libm::sqrt;
use rand::seq::SliceRandom;

use crate::cell::{per_stream_power_cellular, CellParams};
use crate::codec::{build_codebook, detect_trusted, distinct_indices, PilotAssignment, Thresholds};
use crate::fog::{avg_rrh_power, FogParams};
use crate::geometry::{sample_ppp_with, BoundaryMode, Point, PointSet, SpatialGrid, Window};
use crate::phy::{finite_m_se, gain_from_d2, sample_mrc_second_field, FieldContribution, Link, NoisePower, UserLinks};
use crate::rng::{substream, Purpose};
use crate::{Error, Result, DEFAULT_SE_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    Fog,
    Cellular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrustMode {
    /// Disk rule: one user within R_in and nobody else within R_out.
    Geometric,
    /// Two-threshold rule applied to a sampled MRC second field.
    SignalLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Antennas {
    Finite(usize),
    Infinite,
}

/// Everything one batch of trials needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub system: SystemKind,
    pub fog: FogParams,
    pub cell: CellParams,
    /// Second-field length Q'.
    pub q_prime: usize,
    pub antennas: Antennas,
    pub trust_mode: TrustMode,
    /// Detection thresholds; derived from the disk radii when absent.
    pub thresholds: Option<Thresholds>,
    /// Fading realizations per drop for per-draw evaluations. Production
    /// trials evaluate the ergodic rate in closed form.
    pub fading_draws: usize,
    pub trials: usize,
    pub seed: u64,
    pub window: Window,
    /// `ps` is the fog per-stream power. A cellular BS gets the per-stream
    /// power that matches the average fog RRH power.
    pub noise: NoisePower,
    pub se_cap: f64,
    pub min_distance: Option<f64>,
    /// Users farther than this multiple of R_out are left out of a sampled
    /// second field.
    pub signal_radius_factor: f64,
    /// Keep one SE sample per user in the records.
    pub keep_samples: bool,
}

/// Minimum torus side in units of R_out.
pub const MIN_SIDE_OVER_ROUT: f64 = 20.0;

impl TrialConfig {
    /// Defaults around the given system parameters: Q' = 20, unbounded M,
    /// geometric trust, σ² = P_u = P_s = 1, 100 trials, seed 1.
    pub fn new(system: SystemKind, fog: FogParams, cell: CellParams, window: Window) -> Self {
        TrialConfig {
            system,
            fog,
            cell,
            q_prime: 20,
            antennas: Antennas::Infinite,
            trust_mode: TrustMode::Geometric,
            thresholds: None,
            fading_draws: 1,
            trials: 100,
            seed: 1,
            window,
            noise: NoisePower { sigma2_n: 1.0, ps: 1.0, pu: 1.0 },
            se_cap: DEFAULT_SE_CAP,
            min_distance: None,
            signal_radius_factor: 3.0,
            keep_samples: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::param("trials", "need at least one trial"));
        }
        if let Antennas::Finite(m) = self.antennas {
            if m == 0 {
                return Err(Error::param("m", "need at least one antenna"));
            }
            if self.fading_draws == 0 {
                return Err(Error::param("fading_draws", "need at least one draw when M is finite"));
            }
        }
        if !(self.se_cap > 0.0) {
            return Err(Error::param("se_cap", "must be positive"));
        }
        if !(self.signal_radius_factor >= 1.0) {
            return Err(Error::param("signal_radius_factor", "must be at least 1"));
        }
        if self.system == SystemKind::Fog {
            let r_out = self.fog.disks().r_out();
            match self.window.boundary() {
                BoundaryMode::Torus => {
                    if self.window.side() < MIN_SIDE_OVER_ROUT * r_out {
                        return Err(Error::param(
                            "window",
                            alloc::format!("torus side must be at least {MIN_SIDE_OVER_ROUT} R_out"),
                        ));
                    }
                }
                BoundaryMode::Guard { .. } => self.window.check_margin(r_out)?,
            }
            build_codebook(self.fog.q_count(), self.q_prime, self.noise.pu)?;
        }
        Ok(())
    }

    fn thresholds(&self) -> Thresholds {
        self.thresholds
            .unwrap_or_else(|| Thresholds::from_radii(self.noise.pu, self.fog.disks(), self.fog.eta()))
    }

    fn gain(&self, d2: f64, eta: f64) -> f64 {
        gain_from_d2(d2, eta, self.min_distance)
    }
}

/// Raw counts and sums of one trial. Only users (and RRHs) inside the
/// window interior are counted.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrialRecord {
    pub trial: u64,
    pub users: usize,
    /// Users with at least one serving RRH (or a scheduled pilot).
    pub served: usize,
    /// Users some RRH chose before the per-RRH stream cap.
    pub allowed: usize,
    pub se_sum: f64,
    /// Users with no RRH within R_in.
    pub outage_void: usize,
    /// Users no RRH chose.
    pub outage_not_allowed: usize,
    /// Histogram of serving-RRH counts over users, index = count.
    pub serving_hist: Vec<u64>,
    pub rrhs: usize,
    pub active_rrhs: usize,
    pub streams: usize,
    /// Total transmit power Σ|𝒰_k|·P_s.
    pub power: f64,
    /// Area over which users are counted (km²).
    pub area: f64,
    /// Number of pilot groups Q (fog) or pilots L (cellular).
    pub groups: usize,
    /// (RRH, group) pairs examined by the signal-level rule.
    pub trust_decisions: usize,
    /// Of those, decisions that differ from the geometric rule.
    pub trust_disagreements: usize,
    /// Trusted pilots attributed to a user other than the geometric one.
    pub misidentified: usize,
    /// Trusted pilots whose recovered word belongs to nobody.
    pub phantom: usize,
    /// Streams dropped because an RRH chose more users than antennas.
    pub dropped: usize,
    pub numerical_errors: usize,
    pub se_samples: Vec<f64>,
}

impl TrialRecord {
    fn count_serving(&mut self, n: usize) {
        if self.serving_hist.len() <= n {
            self.serving_hist.resize(n + 1, 0);
        }
        self.serving_hist[n] += 1;
    }
}

pub fn run_trial(cfg: &TrialConfig, trial: u64) -> Result<TrialRecord> {
    match cfg.system {
        SystemKind::Fog => run_fog_trial(cfg, trial),
        SystemKind::Cellular => run_cellular_trial(cfg, trial),
    }
}

/// All trials of `cfg` in order.
pub fn run_trials(cfg: &TrialConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    (0..cfg.trials as u64).map(|t| run_trial(cfg, t)).collect()
}

/// A stream chosen at an RRH before the antenna cap.
#[derive(Debug, Clone, Copy)]
struct Choice {
    user: usize,
    group: usize,
}

/// Per-neighbour data for one RRH: (group, user, squared distance).
type Neighbour = (usize, usize, f64);

/// Geometric decision for one group at one RRH, from the group's
/// neighbours within R_out (all of `ns`).
fn geometric_choice(ns: &[Neighbour], ri2: f64) -> Option<usize> {
    match ns {
        [(_, u, d2)] if *d2 <= ri2 => Some(*u),
        _ => None,
    }
}

pub fn run_fog_trial(cfg: &TrialConfig, trial: u64) -> Result<TrialRecord> {
    let p = &cfg.fog;
    let window = cfg.window;
    let q_count = p.q_count();
    let disks = p.disks();
    let (r_in, r_out) = (disks.r_in(), disks.r_out());
    let (ri2, ro2) = (r_in * r_in, r_out * r_out);
    let eta = p.eta();
    let codebook = build_codebook(q_count, cfg.q_prime, cfg.noise.pu)?;

    let mut drop = substream(cfg.seed, trial, Purpose::Drop);
    let rrhs = sample_ppp_with(&mut drop, p.lambda_a(), window)?;
    let users = sample_ppp_with(&mut drop, p.lambda_u(), window)?;
    let mut pilot_rng = substream(cfg.seed, trial, Purpose::Pilots);
    let pilots = crate::codec::assign_pilots_with(&mut pilot_rng, users.len(), &codebook)?;

    let grid = SpatialGrid::new(window, &users.points, r_out);
    let signal_radius = cfg.signal_radius_factor * r_out;
    let mut rec = TrialRecord { trial, groups: q_count, area: window.interior_area(), ..TrialRecord::default() };

    // (group, word index) -> user, to resolve recovered words.
    let word_owner: BTreeMap<(usize, u64), usize> =
        pilots.pilots.iter().enumerate().map(|(u, pi)| ((pi.group, pi.word), u)).collect();
    let words: Vec<u64> = pilots.pilots.iter().map(|pi| codebook.second_field(pi.word)).collect();
    let thresholds = cfg.thresholds();
    let m_opt = match cfg.antennas {
        Antennas::Finite(m) => Some(m),
        Antennas::Infinite => None,
    };
    let mut fading = substream(cfg.seed, trial, Purpose::Fading);
    let mut sched = substream(cfg.seed, trial, Purpose::Scheduling);

    let mut chosen: Vec<Vec<Choice>> = Vec::with_capacity(rrhs.len());
    let mut allowed = alloc::vec![false; users.len()];
    let mut near: Vec<Neighbour> = Vec::new();
    for &rrh in &rrhs.points {
        let reach = if cfg.trust_mode == TrustMode::SignalLevel { signal_radius } else { r_out };
        near.clear();
        let reach2 = reach * reach;
        grid.for_each_candidate(rrh, reach, |u| {
            let d2 = window.distance2(rrh, users.points[u]);
            if d2 <= reach2 {
                near.push((pilots.pilots[u].group, u, d2));
            }
        });
        near.sort_by_key(|a| (a.0, a.1));
        let mut picks = Vec::new();
        let mut start = 0;
        while start < near.len() {
            let group = near[start].0;
            let end = start + near[start..].iter().take_while(|n| n.0 == group).count();
            let within_out: Vec<Neighbour> = near[start..end].iter().copied().filter(|n| n.2 <= ro2).collect();
            start = end;
            if within_out.is_empty() {
                continue;
            }
            let geometric = geometric_choice(&within_out, ri2);
            let pick = match cfg.trust_mode {
                TrustMode::Geometric => geometric,
                TrustMode::SignalLevel => {
                    let contribs: Vec<FieldContribution> = near
                        .iter()
                        .map(|&(g, u, d2)| FieldContribution {
                            beta: cfg.gain(d2, eta),
                            word: words[u],
                            in_group: g == group,
                        })
                        .collect();
                    let y = sample_mrc_second_field(&mut fading, &contribs, cfg.q_prime, &cfg.noise, q_count, m_opt);
                    let decision = detect_trusted(&y, thresholds.useful, thresholds.interf);
                    rec.trust_decisions += 1;
                    let signal = match decision.codeword_index {
                        Some(idx) if decision.trusted => match word_owner.get(&(group, idx)) {
                            Some(&u) => Some(u),
                            None => {
                                rec.phantom += 1;
                                None
                            }
                        },
                        _ => None,
                    };
                    if signal != geometric {
                        rec.trust_disagreements += 1;
                        if signal.is_some() {
                            rec.misidentified += 1;
                        }
                    }
                    signal
                }
            };
            if let Some(u) = pick {
                picks.push(Choice { user: u, group });
            }
        }
        for c in &picks {
            allowed[c.user] = true;
        }
        if let Some(m) = m_opt {
            if picks.len() > m {
                picks.shuffle(&mut sched);
                rec.dropped += picks.len() - m;
                picks.truncate(m);
                picks.sort_by_key(|c| c.group);
            }
        }
        chosen.push(picks);
    }

    // RRHs trusting each group, with the user they serve there.
    let mut trusting: Vec<Vec<(usize, usize)>> = alloc::vec![Vec::new(); q_count];
    let mut serving: Vec<Vec<usize>> = alloc::vec![Vec::new(); users.len()];
    for (k, picks) in chosen.iter().enumerate() {
        for c in picks {
            trusting[c.group].push((k, c.user));
            serving[c.user].push(k);
        }
    }
    let active: Vec<(usize, usize)> =
        chosen.iter().enumerate().filter(|(_, c)| !c.is_empty()).map(|(k, c)| (k, c.len())).collect();

    // Σ_{i∈q} β_{k,i} for every trusted (k, q); only needed at finite M.
    let group_sums: BTreeMap<(usize, usize), f64> = match m_opt {
        Some(_) => trusting
            .iter()
            .enumerate()
            .flat_map(|(q, list)| list.iter().map(move |&(k, _)| (k, q)))
            .map(|(k, q)| {
                let s = pilots.groups[q]
                    .iter()
                    .map(|&i| cfg.gain(window.distance2(rrhs.points[k], users.points[i]), eta))
                    .sum();
                ((k, q), s)
            })
            .collect(),
        None => BTreeMap::new(),
    };
    let nu = cfg.noise.estimation(q_count);

    for (k, picks) in chosen.iter().enumerate() {
        if window.is_interior(rrhs.points[k]) {
            rec.rrhs += 1;
            if !picks.is_empty() {
                rec.active_rrhs += 1;
                rec.streams += picks.len();
            }
        }
    }
    rec.power = rec.streams as f64 * cfg.noise.ps;

    let rrh_grid = SpatialGrid::new(window, &rrhs.points, r_in);
    for (u, &pos) in users.points.iter().enumerate() {
        if !window.is_interior(pos) {
            continue;
        }
        rec.users += 1;
        let mut void = true;
        rrh_grid.for_each_candidate(pos, r_in, |k| {
            if window.distance2(pos, rrhs.points[k]) <= ri2 {
                void = false;
            }
        });
        rec.outage_void += void as usize;
        if allowed[u] {
            rec.allowed += 1;
        } else {
            rec.outage_not_allowed += 1;
        }
        rec.count_serving(serving[u].len());
        let se = if serving[u].is_empty() {
            0.0
        } else {
            rec.served += 1;
            let group = pilots.pilots[u].group;
            let beta = |k: usize| cfg.gain(window.distance2(rrhs.points[k], pos), eta);
            match cfg.antennas {
                Antennas::Infinite => {
                    let signal: f64 = serving[u].iter().map(|&k| beta(k)).sum();
                    let interference: f64 = trusting[group]
                        .iter()
                        .filter(|&&(_, v)| v != u)
                        .map(|&(k, _)| {
                            let b = beta(k);
                            b * b
                        })
                        .sum();
                    crate::phy::sir_to_se(signal * signal, interference, cfg.se_cap)
                }
                Antennas::Finite(m) => {
                    let link = |k: usize| {
                        let b = beta(k);
                        Link { beta: b, alpha: b / (group_sums[&(k, group)] + nu), load: chosen[k].len() }
                    };
                    let links = UserLinks {
                        serving: serving[u].iter().map(|&k| link(k)).collect(),
                        copilot: trusting[group].iter().filter(|&&(_, v)| v != u).map(|&(k, _)| link(k)).collect(),
                        load_weighted_gain: active.iter().map(|&(k, load)| beta(k) * load as f64).sum(),
                    };
                    match finite_m_se(&links, &cfg.noise, m, u, cfg.se_cap) {
                        Ok(se) => se,
                        Err(_) => {
                            rec.numerical_errors += 1;
                            0.0
                        }
                    }
                }
            }
        };
        rec.se_sum += se;
        if cfg.keep_samples {
            rec.se_samples.push(se);
        }
    }
    Ok(rec)
}

pub fn run_cellular_trial(cfg: &TrialConfig, trial: u64) -> Result<TrialRecord> {
    let p = &cfg.cell;
    let window = cfg.window;
    let eta = p.eta();
    let l_pilots = p.l_pilots();
    // Per-stream power that gives a BS the average transmit power of a fog RRH.
    let ps = per_stream_power_cellular(avg_rrh_power(&cfg.fog, cfg.noise.ps), p)?;
    let noise = NoisePower { ps, ..cfg.noise };

    let mut drop = substream(cfg.seed, trial, Purpose::Drop);
    let bss = sample_ppp_with(&mut drop, p.lambda_a(), window)?;
    let users = sample_ppp_with(&mut drop, p.lambda_u(), window)?;
    let mut rec = TrialRecord { trial, groups: l_pilots, area: window.interior_area(), ..TrialRecord::default() };

    let cell_of = nearest_assignment(&bss, &users, window);
    let mut members: Vec<Vec<usize>> = alloc::vec![Vec::new(); bss.len()];
    for (u, c) in cell_of.iter().enumerate() {
        if let Some(k) = c {
            members[*k].push(u);
        }
    }

    // Random subset of min(|𝒱|, N_p) users, each on a distinct random pilot.
    let mut sched = substream(cfg.seed, trial, Purpose::Scheduling);
    let mut pilot_of: Vec<Option<usize>> = alloc::vec![None; users.len()];
    let mut on_pilot: Vec<Vec<(usize, usize)>> = alloc::vec![Vec::new(); l_pilots];
    let mut load = alloc::vec![0usize; bss.len()];
    for (k, cell) in members.iter_mut().enumerate() {
        let n = cell.len().min(p.n_p());
        if n == 0 {
            continue;
        }
        let (picked, _) = cell.partial_shuffle(&mut sched, n);
        let picked: Vec<usize> = picked.to_vec();
        let pilots = distinct_indices(&mut sched, l_pilots as u64, n);
        for (&u, &pl) in picked.iter().zip(&pilots) {
            pilot_of[u] = Some(pl as usize);
            on_pilot[pl as usize].push((k, u));
        }
        load[k] = n;
    }

    for (k, &pos) in bss.points.iter().enumerate() {
        if window.is_interior(pos) {
            rec.rrhs += 1;
            if load[k] > 0 {
                rec.active_rrhs += 1;
                rec.streams += load[k];
            }
        }
    }
    rec.power = rec.streams as f64 * noise.ps;

    let nu = noise.sigma2_n / (noise.pu * l_pilots as f64);
    let active: Vec<(usize, usize)> = load.iter().enumerate().filter(|(_, &l)| l > 0).map(|(k, &l)| (k, l)).collect();
    let pilot_sums: BTreeMap<(usize, usize), f64> = match cfg.antennas {
        Antennas::Finite(_) => on_pilot
            .iter()
            .enumerate()
            .flat_map(|(pl, list)| list.iter().map(move |&(k, _)| (k, pl)))
            .map(|(k, pl)| {
                let s = on_pilot[pl]
                    .iter()
                    .map(|&(_, i)| cfg.gain(window.distance2(bss.points[k], users.points[i]), eta))
                    .sum();
                ((k, pl), s)
            })
            .collect(),
        Antennas::Infinite => BTreeMap::new(),
    };

    for (u, &pos) in users.points.iter().enumerate() {
        if !window.is_interior(pos) {
            continue;
        }
        rec.users += 1;
        let Some(pl) = pilot_of[u] else {
            rec.outage_not_allowed += 1;
            rec.count_serving(0);
            if cfg.keep_samples {
                rec.se_samples.push(0.0);
            }
            continue;
        };
        rec.allowed += 1;
        rec.served += 1;
        rec.count_serving(1);
        let own = cell_of[u].expect("scheduled users have a cell");
        let beta = |k: usize| cfg.gain(window.distance2(bss.points[k], pos), eta);
        let se = match cfg.antennas {
            Antennas::Infinite => {
                let s = beta(own);
                let interference: f64 = on_pilot[pl]
                    .iter()
                    .filter(|&&(_, v)| v != u)
                    .map(|&(k, _)| {
                        let b = beta(k);
                        b * b
                    })
                    .sum();
                crate::phy::sir_to_se(s * s, interference, cfg.se_cap)
            }
            Antennas::Finite(m) => {
                let link = |k: usize| {
                    let b = beta(k);
                    Link { beta: b, alpha: b / (pilot_sums[&(k, pl)] + nu), load: load[k] }
                };
                let links = UserLinks {
                    serving: alloc::vec![link(own)],
                    copilot: on_pilot[pl].iter().filter(|&&(_, v)| v != u).map(|&(k, _)| link(k)).collect(),
                    load_weighted_gain: active.iter().map(|&(k, l)| beta(k) * l as f64).sum(),
                };
                match finite_m_se(&links, &noise, m, u, cfg.se_cap) {
                    Ok(se) => se,
                    Err(_) => {
                        rec.numerical_errors += 1;
                        0.0
                    }
                }
            }
        };
        rec.se_sum += se;
        if cfg.keep_samples {
            rec.se_samples.push(se);
        }
    }
    Ok(rec)
}

/// Index of the nearest BS for every user (`None` when there is no BS).
pub fn nearest_assignment(bss: &PointSet, users: &PointSet, window: Window) -> Vec<Option<usize>> {
    if bss.is_empty() {
        return alloc::vec![None; users.len()];
    }
    let spacing = 1.0 / sqrt(bss.density.max(1e-12));
    let grid = SpatialGrid::new(window, &bss.points, spacing);
    users.points.iter().map(|&u: &Point| grid.nearest(u, &bss.points).map(|(k, _)| k)).collect()
}

/// Assigns pilots to an explicit user list (for fixtures and tests).
pub fn assign_fixture_pilots(groups: &[usize], words: &[u64]) -> PilotAssignment {
    let q = groups.iter().copied().max().map_or(0, |g| g + 1);
    let mut out = PilotAssignment { pilots: Vec::new(), groups: alloc::vec![Vec::new(); q] };
    for (u, (&g, &w)) in groups.iter().zip(words).enumerate() {
        out.pilots.push(crate::codec::PilotIndex { group: g, word: w });
        out.groups[g].push(u);
    }
    out
}

/// Point estimate with a 95% normal-approximation half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// NaN with fewer than two trials.
    pub half_width: f64,
}

/// z-value of a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Ratio estimator Σx/Σy over trials, with the delta-method half-width.
pub fn ratio_estimate(xs: &[f64], ys: &[f64]) -> Estimate {
    let n = xs.len();
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    if sy == 0.0 {
        return Estimate { mean: f64::NAN, half_width: f64::NAN };
    }
    let r = sx / sy;
    if n < 2 {
        return Estimate { mean: r, half_width: f64::NAN };
    }
    let ybar = sy / n as f64;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (x - r * y) * (x - r * y)).sum();
    let var = ss / ((n * (n - 1)) as f64 * ybar * ybar);
    Estimate { mean: r, half_width: Z95 * sqrt(var) }
}

/// Pooled statistics over a batch of trials.
#[derive(Debug, Clone, PartialEq)]
pub struct SEReport {
    pub trials: usize,
    pub users: u64,
    pub served: u64,
    /// Mean SE over served users (b/s/Hz).
    pub user_se_served: Estimate,
    /// Mean SE over all users, unserved ones counting as 0.
    pub user_se_all: Estimate,
    /// Σ SE per unit area (b/s/Hz/km²).
    pub area_se: Estimate,
    /// Area SE divided by the number of pilot groups.
    pub area_se_per_pilot: Estimate,
    /// Density of chosen users per pilot group (λ̃ for the fog system).
    pub allowed_density: Estimate,
    /// `None` when no user was dropped.
    pub outage_void: Option<Estimate>,
    pub outage_not_allowed: Option<Estimate>,
    pub serving_hist: Vec<u64>,
    /// Fraction of RRHs serving at least one user.
    pub active_fraction: Estimate,
    /// Mean transmit power per RRH.
    pub rrh_power: Estimate,
    pub trust_decisions: u64,
    pub trust_disagreements: u64,
    pub misidentified: u64,
    pub phantom: u64,
    pub dropped: u64,
    pub numerical_errors: u64,
    pub se_samples: Vec<f64>,
}

pub fn aggregate(records: &[TrialRecord]) -> Result<SEReport> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let col = |f: &dyn Fn(&TrialRecord) -> f64| -> Vec<f64> { records.iter().map(f).collect() };
    let se = col(&|r| r.se_sum);
    let users = col(&|r| r.users as f64);
    let served = col(&|r| r.served as f64);
    let area = col(&|r| r.area);
    let pilot_area = col(&|r| r.area * r.groups as f64);
    let rrhs = col(&|r| r.rrhs as f64);
    let total_users: u64 = records.iter().map(|r| r.users as u64).sum();
    let outage = |f: &dyn Fn(&TrialRecord) -> f64| {
        if total_users == 0 {
            None
        } else {
            Some(ratio_estimate(&col(f), &users))
        }
    };
    let zero_if_empty = |e: Estimate| if e.mean.is_nan() { Estimate { mean: 0.0, half_width: e.half_width } } else { e };
    let mut hist: Vec<u64> = Vec::new();
    for r in records {
        if hist.len() < r.serving_hist.len() {
            hist.resize(r.serving_hist.len(), 0);
        }
        for (h, v) in hist.iter_mut().zip(&r.serving_hist) {
            *h += v;
        }
    }
    let sum = |f: &dyn Fn(&TrialRecord) -> usize| records.iter().map(|r| f(r) as u64).sum::<u64>();
    Ok(SEReport {
        trials: records.len(),
        users: total_users,
        served: sum(&|r| r.served),
        user_se_served: zero_if_empty(ratio_estimate(&se, &served)),
        user_se_all: zero_if_empty(ratio_estimate(&se, &users)),
        area_se: ratio_estimate(&se, &area),
        area_se_per_pilot: ratio_estimate(&se, &pilot_area),
        allowed_density: ratio_estimate(&col(&|r| r.allowed as f64), &pilot_area),
        outage_void: outage(&|r| r.outage_void as f64),
        outage_not_allowed: outage(&|r| r.outage_not_allowed as f64),
        serving_hist: hist,
        active_fraction: zero_if_empty(ratio_estimate(&col(&|r| r.active_rrhs as f64), &rrhs)),
        rrh_power: zero_if_empty(ratio_estimate(&col(&|r| r.power), &rrhs)),
        trust_decisions: sum(&|r| r.trust_decisions),
        trust_disagreements: sum(&|r| r.trust_disagreements),
        misidentified: sum(&|r| r.misidentified),
        phantom: sum(&|r| r.phantom),
        dropped: sum(&|r| r.dropped),
        numerical_errors: sum(&|r| r.numerical_errors),
        se_samples: records.iter().flat_map(|r| r.se_samples.iter().copied()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DiskPair;

    fn fog_cfg(lambda_a: f64, lambda_u: f64, r_in: f64) -> TrialConfig {
        let fog = FogParams::new(lambda_a, lambda_u, 40, DiskPair::new(r_in, 0.2).unwrap(), 3.75).unwrap();
        let cell = CellParams::new(lambda_a, lambda_u, 40, 40, 3.75).unwrap();
        let mut c = TrialConfig::new(SystemKind::Fog, fog, cell, Window::torus(1.5).unwrap());
        c.trials = 4;
        c
    }

    #[test]
    fn no_users_gives_undefined_outage() {
        let cfg = fog_cfg(31.8, 0.0, 0.1);
        let rep = aggregate(&run_trials(&cfg).unwrap()).unwrap();
        assert_eq!(rep.users, 0);
        assert!(rep.outage_void.is_none() && rep.outage_not_allowed.is_none());
        assert_eq!(rep.user_se_all.mean, 0.0);
    }

    #[test]
    fn empty_records_error() {
        assert_eq!(aggregate(&[]), Err(Error::EmptyRecords));
    }

    #[test]
    fn identical_records_have_zero_width() {
        let r = TrialRecord { users: 10, served: 5, se_sum: 30.0, area: 4.0, groups: 2, rrhs: 3, ..Default::default() };
        let rep = aggregate(&[r.clone(), r.clone(), r]).unwrap();
        assert_eq!(rep.user_se_served.mean, 6.0);
        assert_eq!(rep.user_se_served.half_width, 0.0);
        assert_eq!(rep.area_se.half_width, 0.0);
    }

    #[test]
    fn trials_are_reproducible() {
        let mut cfg = fog_cfg(31.8, 31.8, 0.1);
        cfg.keep_samples = true;
        let a = run_trial(&cfg, 2).unwrap();
        let b = run_trial(&cfg, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, run_trial(&cfg, 3).unwrap());
    }

    #[test]
    fn served_mean_dominates_all_user_mean() {
        let rep = aggregate(&run_trials(&fog_cfg(31.8, 31.8, 0.1)).unwrap()).unwrap();
        assert!(rep.user_se_served.mean >= rep.user_se_all.mean);
        assert!(rep.served > 0);
    }

    #[test]
    fn power_is_streams_times_ps() {
        let mut cfg = fog_cfg(31.8, 100.0, 0.1);
        cfg.noise.ps = 0.37;
        let r = run_trial(&cfg, 0).unwrap();
        assert_eq!(r.power, r.streams as f64 * 0.37);
        assert!(r.active_rrhs <= r.rrhs);
    }

    #[test]
    fn cellular_power_matches_fog_rrh_average() {
        let mut cfg = fog_cfg(31.8, 100.0, 0.1);
        cfg.system = SystemKind::Cellular;
        let ps = crate::cell::per_stream_power_cellular(avg_rrh_power(&cfg.fog, 1.0), &cfg.cell).unwrap();
        let r = run_trial(&cfg, 0).unwrap();
        assert_eq!(r.power, r.streams as f64 * ps);
    }

    #[test]
    fn small_torus_rejected() {
        let mut cfg = fog_cfg(31.8, 31.8, 0.1);
        cfg.window = Window::torus(1.0).unwrap();
        assert!(cfg.validate().is_err());
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn capped_load_never_exceeds_antennas() {
        let mut cfg = fog_cfg(5.0, 884.0, 0.1);
        cfg.antennas = Antennas::Finite(4);
        let r = run_trial(&cfg, 0).unwrap();
        assert!(r.dropped > 0);
        assert!(r.streams <= 4 * r.rrhs);
        assert!(r.allowed >= r.served);
    }
}
