//! Physical layer: pathloss and fading, pilot observations, channel
//! estimation, second-field combining, zero-forcing precoding and the
//! achievable downlink rates.

use alloc::vec::Vec;

use libm::{log2, pow, sqrt};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::codec::{PilotCodebook, PilotIndex};
use crate::linalg::{dot, hpd_inverse, norm, CMatrix};
use crate::{Error, Result};

/// Large-scale gain β = r^{−η}, optionally with a minimum distance.
#[inline]
pub fn large_scale_gain(r: f64, eta: f64, min_distance: Option<f64>) -> f64 {
    let r = match min_distance {
        Some(m) => r.max(m),
        None => r,
    };
    pow(r, -eta)
}

/// β from a squared distance, avoiding the square root.
#[inline]
pub fn gain_from_d2(d2: f64, eta: f64, min_distance: Option<f64>) -> f64 {
    let d2 = match min_distance {
        Some(m) => d2.max(m * m),
        None => d2,
    };
    pow(d2, -0.5 * eta)
}

/// Noise and power levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePower {
    pub sigma2_n: f64,
    /// Per-stream downlink power.
    pub ps: f64,
    /// Uplink pilot power per dimension.
    pub pu: f64,
}

impl NoisePower {
    pub fn new(sigma2_n: f64, ps: f64, pu: f64) -> Result<Self> {
        if !(sigma2_n >= 0.0) || !sigma2_n.is_finite() {
            return Err(Error::param("sigma2_n", "must be non-negative"));
        }
        if !(ps > 0.0) || !(pu > 0.0) {
            return Err(Error::param("power", "p_s and p_u must be positive"));
        }
        Ok(NoisePower { sigma2_n, ps, pu })
    }

    /// Downlink noise normalized by the per-stream power.
    pub fn downlink(&self) -> f64 {
        self.sigma2_n / self.ps
    }

    /// Per-component variance of the first-field estimation noise, σ²/(P_u·Q).
    pub fn estimation(&self, q: usize) -> f64 {
        self.sigma2_n / (self.pu * q as f64)
    }
}

/// Circularly-symmetric complex Gaussian with variance `var`.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = sqrt(0.5 * var);
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

pub fn complex_normal_vec<R: Rng + ?Sized>(rng: &mut R, m: usize, var: f64) -> Vec<Complex64> {
    (0..m).map(|_| complex_normal(rng, var)).collect()
}

/// Channel vectors g_{k,j} = √β_{k,j}·h_{k,j} for a set of RRHs and users.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    m: usize,
    n_users: usize,
    beta: Vec<f64>,
    g: Vec<Vec<Complex64>>,
}

impl ChannelSet {
    /// Draws Rayleigh fading for the given gains, indexed `betas[k][j]`.
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, betas: &[Vec<f64>], m: usize) -> Result<Self> {
        let n_users = betas.first().map_or(0, Vec::len);
        let mut beta = Vec::with_capacity(betas.len() * n_users);
        let mut g = Vec::with_capacity(betas.len() * n_users);
        for row in betas {
            if row.len() != n_users {
                return Err(Error::param("betas", "ragged gain matrix"));
            }
            for &b in row {
                if !(b > 0.0) {
                    return Err(Error::param("beta", "gains must be positive"));
                }
                beta.push(b);
                g.push(complex_normal_vec(rng, m, b));
            }
        }
        Ok(ChannelSet { m, n_users, beta, g })
    }

    pub fn antennas(&self) -> usize {
        self.m
    }

    pub fn n_rrh(&self) -> usize {
        self.beta.len().checked_div(self.n_users).unwrap_or(0)
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn beta(&self, k: usize, j: usize) -> f64 {
        self.beta[k * self.n_users + j]
    }

    pub fn g(&self, k: usize, j: usize) -> &[Complex64] {
        &self.g[k * self.n_users + j]
    }
}

/// First pilot field at RRH `k` (an M×Q observation).
pub fn pilot_field_1<R: Rng + ?Sized>(
    rng: &mut R,
    channels: &ChannelSet,
    k: usize,
    pilots: &[PilotIndex],
    codebook: &PilotCodebook,
    sigma2_n: f64,
) -> CMatrix {
    let m = channels.antennas();
    let q = codebook.q_count();
    let amp = sqrt(codebook.pu() * q as f64);
    let mut sums = alloc::vec![alloc::vec![Complex64::new(0.0, 0.0); m]; q];
    for (j, p) in pilots.iter().enumerate() {
        for (s, g) in sums[p.group].iter_mut().zip(channels.g(k, j)) {
            *s += g;
        }
    }
    let mut y = CMatrix::zeros(m, q);
    for (qq, sum) in sums.iter().enumerate() {
        let s = codebook.first_field(qq);
        for (col, &sc) in s.iter().enumerate() {
            for (r, &v) in sum.iter().enumerate() {
                let cur = y.get(r, col);
                y.set(r, col, cur + v * sc * amp);
            }
        }
    }
    if sigma2_n > 0.0 {
        for col in 0..q {
            for r in 0..m {
                let cur = y.get(r, col);
                y.set(r, col, cur + complex_normal(rng, sigma2_n));
            }
        }
    }
    y
}

/// Group-`q` channel estimate ĝ = Y s_q^* / √(P_u Q).
pub fn estimate_group_channel(pilot_field_1: &CMatrix, q: usize, codebook: &PilotCodebook) -> Vec<Complex64> {
    let s = codebook.first_field(q);
    let scale = 1.0 / sqrt(codebook.pu() * codebook.q_count() as f64);
    (0..pilot_field_1.rows())
        .map(|r| {
            let v: Complex64 = s.iter().enumerate().map(|(c, sc)| pilot_field_1.get(r, c) * sc.conj()).sum();
            v * scale
        })
        .collect()
}

/// Second pilot field at RRH `k` (an M×Q' observation).
pub fn pilot_field_2<R: Rng + ?Sized>(
    rng: &mut R,
    channels: &ChannelSet,
    k: usize,
    pilots: &[PilotIndex],
    codebook: &PilotCodebook,
    sigma2_n: f64,
) -> CMatrix {
    let m = channels.antennas();
    let qp = codebook.q_prime();
    let amp = sqrt(2.0 * codebook.pu());
    let mut y = CMatrix::zeros(m, qp);
    for (j, p) in pilots.iter().enumerate() {
        let w = codebook.second_field(p.word);
        for i in (0..qp).filter(|i| w >> i & 1 == 1) {
            for (d, g) in y.column_mut(i).iter_mut().zip(channels.g(k, j)) {
                *d += g * amp;
            }
        }
    }
    if sigma2_n > 0.0 {
        for i in 0..qp {
            for d in y.column_mut(i) {
                *d += complex_normal(rng, sigma2_n);
            }
        }
    }
    y
}

/// Real part of (1/M)·Yᴴĝ.
pub fn mrc_second_field(pilot_field_2: &CMatrix, ghat: &[Complex64], m: usize) -> Vec<f64> {
    (0..pilot_field_2.cols()).map(|i| dot(pilot_field_2.column(i), ghat).re / m as f64).collect()
}

/// Unit-norm zero-forcing precoders: normalized columns of Ĝ(ĜᴴĜ)^{−1}.
pub fn zfbf_precoders(estimates: &CMatrix) -> Result<CMatrix> {
    if estimates.cols() > estimates.rows() {
        return Err(Error::Singular { rows: estimates.rows(), cols: estimates.cols() });
    }
    let inv = hpd_inverse(&estimates.gram())?;
    let mut v = estimates.mul(&inv);
    for c in 0..v.cols() {
        let n = norm(v.column(c));
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Singular { rows: estimates.rows(), cols: estimates.cols() });
        }
        v.column_mut(c).iter_mut().for_each(|x| *x /= n);
    }
    Ok(v)
}

/// α = β/(Σβ' + σ²/(P_u Q)) where `group_betas` includes the target.
pub fn mmse_scaling(beta_target: f64, group_betas: &[f64], sigma2_n: f64, pu: f64, q: usize) -> f64 {
    let sum: f64 = group_betas.iter().sum();
    beta_target / (sum + sigma2_n / (pu * q as f64))
}

/// One served stream at an RRH.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Served {
    pub user: usize,
    pub group: usize,
}

/// Who each RRH serves, and therefore which pilots it trusts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActiveSet {
    served: Vec<Vec<Served>>,
}

/// RRH partition seen by one user.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UserPartition {
    pub serving: Vec<usize>,
    pub trusted_interferers: Vec<usize>,
    pub untrusted: Vec<usize>,
}

impl ActiveSet {
    pub fn new(n_rrh: usize) -> Self {
        ActiveSet { served: alloc::vec![Vec::new(); n_rrh] }
    }

    pub fn n_rrh(&self) -> usize {
        self.served.len()
    }

    /// Adds a stream; at most one user per pilot group per RRH.
    pub fn add(&mut self, k: usize, user: usize, group: usize) -> Result<()> {
        if self.served[k].iter().any(|s| s.group == group) {
            return Err(Error::param("active_set", "two users of one pilot group at one RRH"));
        }
        self.served[k].push(Served { user, group });
        Ok(())
    }

    pub fn served(&self, k: usize) -> &[Served] {
        &self.served[k]
    }

    pub fn load(&self, k: usize) -> usize {
        self.served[k].len()
    }

    pub fn is_trusted(&self, k: usize, group: usize) -> bool {
        self.served[k].iter().any(|s| s.group == group)
    }

    pub fn serves(&self, k: usize, user: usize) -> bool {
        self.served[k].iter().any(|s| s.user == user)
    }

    pub fn total_streams(&self) -> usize {
        self.served.iter().map(Vec::len).sum()
    }

    pub fn partition(&self, user: usize, group: usize) -> UserPartition {
        let mut p = UserPartition::default();
        for k in 0..self.served.len() {
            if self.serves(k, user) {
                p.serving.push(k);
            } else if self.is_trusted(k, group) {
                p.trusted_interferers.push(k);
            } else {
                p.untrusted.push(k);
            }
        }
        p
    }

    /// Collects the per-RRH terms of the finite-M rate for one user.
    pub fn user_links<B, A>(&self, user: usize, group: usize, beta: B, alpha: A) -> UserLinks
    where
        B: Fn(usize) -> f64,
        A: Fn(usize) -> f64,
    {
        let mut links = UserLinks::default();
        for k in 0..self.served.len() {
            let load = self.load(k);
            if load == 0 {
                continue;
            }
            let b = beta(k);
            links.load_weighted_gain += b * load as f64;
            if self.serves(k, user) {
                links.serving.push(Link { beta: b, alpha: alpha(k), load });
            } else if self.is_trusted(k, group) {
                links.copilot.push(Link { beta: b, alpha: alpha(k), load });
            }
        }
        links
    }
}

/// Gain, MMSE scaling and load of one RRH as seen by a user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub beta: f64,
    pub alpha: f64,
    pub load: usize,
}

/// Inputs to the finite-M rate of one user.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UserLinks {
    /// RRHs serving the user (𝒜_j).
    pub serving: Vec<Link>,
    /// RRHs trusting the user's pilot but serving someone else (Ã_j^c).
    pub copilot: Vec<Link>,
    /// Σ over all RRHs of β_{k,j}·|𝒰_k|.
    pub load_weighted_gain: f64,
}

/// SINR of the finite-M ZFBF rate; `None` when the user is unserved.
pub fn finite_m_sinr(links: &UserLinks, noise: &NoisePower, m: usize, user: usize) -> Result<Option<f64>> {
    if links.serving.is_empty() {
        return Ok(None);
    }
    let dof = |l: &Link| (m as f64 - l.load as f64 + 1.0).max(0.0);
    let coherent: f64 = links.serving.iter().map(|l| sqrt(l.alpha * l.beta * dof(l))).sum();
    let ab_load: f64 = links.serving.iter().chain(&links.copilot).map(|l| l.alpha * l.beta * l.load as f64).sum();
    let copilot: f64 = links.copilot.iter().map(|l| l.alpha * l.beta * dof(l)).sum();
    let denom = noise.downlink() - ab_load + links.load_weighted_gain + copilot;
    // Cancellation leaves relative rounding noise around the load term.
    let slack = 1e-12 * (links.load_weighted_gain + ab_load + copilot);
    if denom < -slack || denom.is_nan() {
        return Err(Error::NegativeDenominator { user, value: denom });
    }
    if denom <= slack {
        return Ok(Some(f64::INFINITY));
    }
    Ok(Some(coherent * coherent / denom))
}

/// Finite-M ergodic spectral efficiency, capped at `cap`; 0 if unserved.
pub fn finite_m_se(links: &UserLinks, noise: &NoisePower, m: usize, user: usize, cap: f64) -> Result<f64> {
    Ok(match finite_m_sinr(links, noise, m, user)? {
        None => 0.0,
        Some(s) => log2(1.0 + s).min(cap),
    })
}

/// Finite-M spectral efficiency of `user` in `group`, built from an active set.
#[allow(clippy::too_many_arguments)]
pub fn ergodic_se_finite_m<B, A>(
    user: usize,
    group: usize,
    active: &ActiveSet,
    beta: B,
    alpha: A,
    noise: &NoisePower,
    m: usize,
    cap: f64,
) -> Result<f64>
where
    B: Fn(usize) -> f64,
    A: Fn(usize) -> f64,
{
    let links = active.user_links(user, group, beta, alpha);
    finite_m_se(&links, noise, m, user, cap)
}

/// Large-M spectral efficiency log₂(1 + (Σβ)²/Σβ̃²), capped at `cap`.
pub fn se_infinite_m(serving_betas: &[f64], copilot_trusted_betas: &[f64], cap: f64) -> f64 {
    if serving_betas.is_empty() {
        return 0.0;
    }
    let s: f64 = serving_betas.iter().sum();
    let i: f64 = copilot_trusted_betas.iter().map(|b| b * b).sum();
    sir_to_se(s * s, i, cap)
}

/// log₂(1 + s/i), capped, with i = 0 mapped to the cap.
#[inline]
pub fn sir_to_se(signal: f64, interference: f64, cap: f64) -> f64 {
    if interference <= 0.0 {
        return cap;
    }
    log2(1.0 + signal / interference).min(cap)
}

/// A user's contribution to one RRH's second pilot field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldContribution {
    pub beta: f64,
    pub word: u64,
    /// Whether the user belongs to the pilot group being combined.
    pub in_group: bool,
}

/// Samples the combined second field `Re{(1/M)Yᴴĝ}` for one group at one RRH
/// without drawing M-dimensional vectors.
///
/// Conditioned on ĝ, each in-group channel splits as αĝ + e with e
/// independent of ĝ; projecting every term onto ĝ/‖ĝ‖ leaves scalar complex
/// Gaussians whose joint law is reproduced exactly, while ‖ĝ‖² is a scaled
/// Gamma(M, 1) variable. `m = None` returns the large-M limit
/// √(2P_u)·Σβw over the in-group users.
pub fn sample_mrc_second_field<R: Rng + ?Sized>(
    rng: &mut R,
    contributions: &[FieldContribution],
    q_prime: usize,
    noise: &NoisePower,
    q: usize,
    m: Option<usize>,
) -> Vec<f64> {
    let amp = sqrt(2.0 * noise.pu);
    let mut y = alloc::vec![0.0; q_prime];
    let add_word = |y: &mut [f64], w: u64, v: f64| {
        for (i, yi) in y.iter_mut().enumerate() {
            if w >> i & 1 == 1 {
                *yi += v;
            }
        }
    };
    let Some(m) = m else {
        for c in contributions.iter().filter(|c| c.in_group) {
            add_word(&mut y, c.word, amp * c.beta);
        }
        return y;
    };
    let est = noise.estimation(q);
    let c_tot: f64 = contributions.iter().filter(|c| c.in_group).map(|c| c.beta).sum::<f64>() + est;
    if !(c_tot > 0.0) {
        return y;
    }
    let x: f64 = Gamma::new(m as f64, 1.0).map(|d| d.sample(rng)).unwrap_or(m as f64);
    let norm2 = c_tot * x;
    let s = norm2 / m as f64;
    let spread = sqrt(norm2) / m as f64;
    // Projection of the in-group estimation errors onto ĝ/‖ĝ‖.
    let draws: Vec<Complex64> = contributions.iter().map(|c| complex_normal(rng, c.beta)).collect();
    let h: Complex64 = contributions
        .iter()
        .zip(&draws)
        .filter(|(c, _)| c.in_group)
        .map(|(_, d)| *d)
        .sum::<Complex64>()
        + complex_normal(rng, est);
    for (c, d) in contributions.iter().zip(&draws) {
        let v = if c.in_group {
            let alpha = c.beta / c_tot;
            let e = *d - h * alpha;
            amp * (alpha * s + spread * e.re)
        } else {
            amp * spread * d.re
        };
        add_word(&mut y, c.word, v);
    }
    if noise.sigma2_n > 0.0 {
        for yi in y.iter_mut() {
            *yi += spread * complex_normal(rng, noise.sigma2_n).re;
        }
    }
    y
}
