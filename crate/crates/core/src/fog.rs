//! Stochastic-geometry analytics of the fog architecture in the large-M
//! regime.

use alloc::vec::Vec;
use core::f64::consts::{LN_2, PI};

use libm::{exp, expm1, log, pow};

use crate::geometry::{DiskPair, ThetaDistribution};
use crate::quad::{integrate_real_line, integrate_to_infinity, Tolerance};
use crate::special::{gamma_p, ln_gamma, lower_gamma, poisson_pmf, poisson_tail};
use crate::{Error, Result, DEFAULT_SE_CAP};

/// Mixed approximation of the θ law: masses at 0 and 1 plus a uniform part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaPdfApprox {
    pub p0: f64,
    pub pu: f64,
    pub p1: f64,
}

pub fn theta_pdf_approx(lambda: f64, disks: DiskPair) -> ThetaPdfApprox {
    let (ri, ro) = (disks.r_in(), disks.r_out());
    let p1 = exp(-PI * lambda * (ri + ro) * (ri + ro));
    let a = exp(-PI * lambda * ro * ro);
    let pu = 2.0 * (a - p1);
    ThetaPdfApprox { p0: 1.0 - pu - p1, pu, p1 }
}

/// Densities, radii and pathloss of a fog deployment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FogParams {
    lambda_a: f64,
    lambda_u: f64,
    q_count: usize,
    disks: DiskPair,
    eta: f64,
    n_max: Option<usize>,
}

impl FogParams {
    pub fn new(lambda_a: f64, lambda_u: f64, q_count: usize, disks: DiskPair, eta: f64) -> Result<Self> {
        if !(lambda_a >= 0.0) || !lambda_a.is_finite() {
            return Err(Error::param("lambda_a", "must be non-negative"));
        }
        if !(lambda_u >= 0.0) || !lambda_u.is_finite() {
            return Err(Error::param("lambda_u", "must be non-negative"));
        }
        if q_count == 0 {
            return Err(Error::param("q", "need at least one pilot group"));
        }
        if !(eta > 1.0) {
            return Err(Error::param("eta", "must exceed 1"));
        }
        Ok(FogParams { lambda_a, lambda_u, q_count, disks, eta, n_max: None })
    }

    /// Overrides the automatic serving-count truncation.
    pub fn with_n_max(mut self, n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::param("n_max", "must be at least 1"));
        }
        self.n_max = Some(n_max);
        Ok(self)
    }

    pub fn with_disks(mut self, disks: DiskPair) -> Self {
        self.disks = disks;
        self
    }

    pub fn lambda_a(&self) -> f64 {
        self.lambda_a
    }

    pub fn lambda_u(&self) -> f64 {
        self.lambda_u
    }

    pub fn q_count(&self) -> usize {
        self.q_count
    }

    /// Per-group user density λ = λ_u/Q.
    pub fn lambda(&self) -> f64 {
        self.lambda_u / self.q_count as f64
    }

    pub fn disks(&self) -> DiskPair {
        self.disks
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Mean number of RRHs in a coverage disk, πλ_a R_in².
    pub fn mu(&self) -> f64 {
        PI * self.lambda_a * self.disks.r_in() * self.disks.r_in()
    }

    /// Serving-count truncation N.
    pub fn n_max(&self) -> usize {
        self.n_max.unwrap_or_else(|| serving_truncation(self.mu()))
    }
}

/// Smallest N ≥ 1 with Poisson(μ) tail P(count > N) below 10⁻⁶.
pub fn serving_truncation(mu: f64) -> usize {
    let mut n = 1u64;
    while poisson_tail(n, mu) >= 1e-6 {
        n += 1;
    }
    n as usize
}

/// Which law of θ the analytics average over.
#[derive(Debug, Clone, Copy)]
pub enum ThetaSource<'a> {
    /// The three-part approximation.
    ClosedForm,
    /// An empirical distribution from dart-throwing trials.
    Empirical(&'a ThetaDistribution),
}

/// Probability that a typical user has at least one eligible RRH.
pub fn allowed_probability(params: &FogParams, source: ThetaSource<'_>) -> f64 {
    let mu = params.mu();
    match source {
        ThetaSource::ClosedForm => {
            if mu == 0.0 {
                return 0.0;
            }
            let f = theta_pdf_approx(params.lambda(), params.disks);
            // E[1 − e^{−μθ}] under point masses plus a uniform part.
            let uniform_mean = 1.0 + expm1(-mu) / mu;
            f.pu * uniform_mean + f.p1 * -expm1(-mu)
        }
        ThetaSource::Empirical(d) => d.expect(|t| -expm1(-mu * t)),
    }
}

/// Mean density λ̃ of users with at least one eligible RRH.
pub fn copilot_density(params: &FogParams, source: ThetaSource<'_>) -> f64 {
    params.lambda() * allowed_probability(params, source)
}

/// Density of RRHs that trust a given pilot, λ_a·λπR_in²·e^{−πλR_out²}.
pub fn active_rrh_density(params: &FogParams) -> f64 {
    let lambda = params.lambda();
    let (ri, ro) = (params.disks.r_in(), params.disks.r_out());
    params.lambda_a * lambda * PI * ri * ri * exp(-PI * lambda * ro * ro)
}

/// Mean number of users an RRH serves, Q·λπR_in²·e^{−πλR_out²}.
pub fn expected_served(params: &FogParams) -> f64 {
    let lambda = params.lambda();
    let (ri, ro) = (params.disks.r_in(), params.disks.r_out());
    params.q_count as f64 * lambda * PI * ri * ri * exp(-PI * lambda * ro * ro)
}

/// Mean RRH transmit power E[|𝒰|]·P_s.
pub fn avg_rrh_power(params: &FogParams, ps_fog: f64) -> f64 {
    expected_served(params) * ps_fog
}

/// Unnormalized P(|𝒜₀| = n) for n = 1..=N (index n−1).
fn serving_masses(params: &FogParams, source: ThetaSource<'_>) -> Vec<f64> {
    let mu = params.mu();
    let n_max = params.n_max();
    match source {
        ThetaSource::ClosedForm => {
            let f = theta_pdf_approx(params.lambda(), params.disks);
            (1..=n_max as u64)
                .map(|n| {
                    if mu == 0.0 {
                        return 0.0;
                    }
                    // ∫₀¹ Poisson(n; μθ) dθ = P(n+1, μ)/μ
                    f.pu * gamma_p(n as f64 + 1.0, mu) / mu + f.p1 * poisson_pmf(n, mu)
                })
                .collect()
        }
        ThetaSource::Empirical(d) => (1..=n_max as u64).map(|n| d.expect(|t| poisson_pmf(n, mu * t))).collect(),
    }
}

/// P(|𝒜₀| = n | |𝒜₀| > 0), normalized over n = 1..=N (index n−1).
/// All zeros when no user can be served.
pub fn serving_distribution(params: &FogParams, source: ThetaSource<'_>) -> Vec<f64> {
    let mut w = serving_masses(params, source);
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        w.iter_mut().for_each(|x| *x /= total);
    }
    w
}

pub fn prob_n_serving(n: usize, params: &FogParams, source: ThetaSource<'_>) -> Result<f64> {
    let n_max = params.n_max();
    if n == 0 || n > n_max {
        return Err(Error::param("n", alloc::format!("must lie in 1..={n_max}")));
    }
    Ok(serving_distribution(params, source)[n - 1])
}

/// −ln of the interference Laplace transform: 2πλ̃_a ∫_{R_out}^∞ (1 − e^{−γ r^{−2η}}) r dr.
fn laplace_exponent(gamma: f64, lambda_a_active: f64, r_out: f64, eta: f64, tol: Tolerance) -> Result<f64> {
    if gamma == 0.0 || lambda_a_active == 0.0 {
        return Ok(0.0);
    }
    if gamma.is_infinite() {
        return Ok(f64::INFINITY);
    }
    // With r = R_out·e^x the integrand becomes R_out²(1 − e^{−X e^{−2ηx}}) e^{2x}.
    let ln_x0 = log(gamma) - 2.0 * eta * log(r_out);
    let inner = integrate_to_infinity(
        |x| {
            let ly = ln_x0 - 2.0 * eta * x;
            if ly < -40.0 {
                exp(2.0 * x + ly)
            } else {
                -expm1(-exp(ly)) * exp(2.0 * x)
            }
        },
        0.0,
        Tolerance { abs: tol.abs * 1e-3, rel: tol.rel * 1e-2 },
    )?;
    Ok(2.0 * PI * lambda_a_active * r_out * r_out * inner)
}

/// E[e^{−γσ²_I}] for interferers forming a PPP of density `lambda_a_active`
/// outside radius `r_out`, by adaptive quadrature.
pub fn interference_laplace(gamma: f64, lambda_a_active: f64, r_out: f64, eta: f64) -> Result<f64> {
    interference_laplace_tol(gamma, lambda_a_active, r_out, eta, Tolerance::default())
}

pub fn interference_laplace_tol(gamma: f64, lambda_a_active: f64, r_out: f64, eta: f64, tol: Tolerance) -> Result<f64> {
    check_laplace_args(gamma, lambda_a_active, eta)?;
    Ok(exp(-laplace_exponent(gamma, lambda_a_active, r_out, eta, tol)?))
}

fn check_laplace_args(gamma: f64, lambda_a_active: f64, eta: f64) -> Result<()> {
    if !(gamma >= 0.0) {
        return Err(Error::param("gamma", "must be non-negative"));
    }
    if !(lambda_a_active >= 0.0) {
        return Err(Error::param("lambda_a_active", "must be non-negative"));
    }
    if !(eta > 1.0) {
        return Err(Error::param("eta", "must exceed 1"));
    }
    Ok(())
}

/// Same transform in closed form,
/// exp(πλ̃R²(1 − e^{−X}) − πλ̃γ^{1/η}·γ(1 − 1/η, X)) with X = γR^{−2η}.
pub fn interference_laplace_closed_form(gamma: f64, lambda_a_active: f64, r_out: f64, eta: f64) -> Result<f64> {
    check_laplace_args(gamma, lambda_a_active, eta)?;
    if gamma == 0.0 || lambda_a_active == 0.0 {
        return Ok(1.0);
    }
    let x = gamma * pow(r_out, -2.0 * eta);
    let a = 1.0 / eta;
    let e = PI * lambda_a_active * (r_out * r_out * -expm1(-x) - pow(gamma, a) * lower_gamma(1.0 - a, x));
    Ok(exp(e))
}

/// The transform written with the lower incomplete gamma at order −1/η,
/// exp(πλ̃R² + (πλ̃γ^{1/η}/η)·γ(−1/η, X)), which agrees with the other
/// forms once γ(·,·) is continued to negative order.
pub fn interference_laplace_negative_order(gamma: f64, lambda_a_active: f64, r_out: f64, eta: f64) -> Result<f64> {
    check_laplace_args(gamma, lambda_a_active, eta)?;
    if gamma == 0.0 || lambda_a_active == 0.0 {
        return Ok(1.0);
    }
    let x = gamma * pow(r_out, -2.0 * eta);
    let a = 1.0 / eta;
    let e = PI * lambda_a_active * r_out * r_out + PI * lambda_a_active * pow(gamma, a) / eta * lower_gamma(-a, x);
    Ok(exp(e))
}

/// E[r_m] for the (m+1)-th closest of n uniform points in a disk of radius `r_in`.
pub fn expected_ordered_distance(m: usize, n: usize, r_in: f64) -> Result<f64> {
    if n == 0 || m >= n {
        return Err(Error::param("m", "need 0 <= m <= n-1"));
    }
    let (mf, nf) = (m as f64, n as f64);
    Ok(r_in * exp(ln_gamma(mf + 1.5) + ln_gamma(nf + 1.0) - ln_gamma(mf + 1.0) - ln_gamma(nf + 1.5)))
}

/// Deterministic coherent signal power (Σ_m E[r_m]^{−η})² for n servers.
pub fn signal_power(n: usize, r_in: f64, eta: f64) -> Result<f64> {
    let mut s = 0.0;
    for m in 0..n {
        s += pow(expected_ordered_distance(m, n, r_in)?, -eta);
    }
    Ok(s * s)
}

/// How the interference transform is evaluated inside the SE integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LaplaceMethod {
    #[default]
    Quadrature,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FogOptions {
    pub tolerance: Tolerance,
    pub se_cap: f64,
    pub laplace: LaplaceMethod,
}

impl Default for FogOptions {
    fn default() -> Self {
        FogOptions { tolerance: Tolerance::default(), se_cap: DEFAULT_SE_CAP, laplace: LaplaceMethod::Quadrature }
    }
}

/// E[log₂(1 + σ²_S/σ²_I)] for fixed σ²_S, via
/// (1/ln 2)∫₀^∞ γ^{−1} ℒ_I(γ)(1 − e^{−γσ²_S}) dγ on a logarithmic scale.
pub fn conditional_se(
    sigma_s2: f64,
    lambda_a_active: f64,
    r_out: f64,
    eta: f64,
    opts: &FogOptions,
) -> Result<f64> {
    if lambda_a_active == 0.0 {
        return Ok(opts.se_cap);
    }
    if sigma_s2 <= 0.0 {
        return Ok(0.0);
    }
    let mut failure = None;
    let tol = opts.tolerance;
    let laplace = |g: f64| match opts.laplace {
        LaplaceMethod::Quadrature => interference_laplace_tol(g, lambda_a_active, r_out, eta, tol),
        LaplaceMethod::ClosedForm => interference_laplace_closed_form(g, lambda_a_active, r_out, eta),
    };
    let v = integrate_real_line(
        |t| {
            let g = exp(t);
            let signal = -expm1(-g * sigma_s2);
            if signal == 0.0 {
                return 0.0;
            }
            match laplace(g) {
                Ok(l) => l * signal,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        -log(sigma_s2),
        tol,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((v / LN_2).min(opts.se_cap))
}

/// Spatially averaged SE of a served user, Σ_n P(n | >0)·E[log₂(1+SIR) | n].
pub fn avg_user_se_fog(params: &FogParams, source: ThetaSource<'_>, opts: &FogOptions) -> Result<f64> {
    let lambda_act = active_rrh_density(params);
    if lambda_act == 0.0 {
        return Ok(opts.se_cap);
    }
    let weights = serving_distribution(params, source);
    let mut total = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        if w < 1e-12 {
            continue;
        }
        let s = signal_power(i + 1, params.disks.r_in(), params.eta)?;
        total += w * conditional_se(s, lambda_act, params.disks.r_out(), params.eta, opts)?;
    }
    Ok(total)
}

/// Per-pilot and total area spectral efficiencies (b/s/Hz/km²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaSe {
    pub per_pilot: f64,
    pub total: f64,
    pub user_se: f64,
    pub copilot_density: f64,
}

pub fn area_se_fog(params: &FogParams, source: ThetaSource<'_>, opts: &FogOptions) -> Result<AreaSe> {
    let density = copilot_density(params, source);
    let user_se = if density == 0.0 { 0.0 } else { avg_user_se_fog(params, source, opts)? };
    let per_pilot = density * user_se;
    Ok(AreaSe { per_pilot, total: params.q_count as f64 * per_pilot, user_se, copilot_density: density })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutageMode {
    /// No RRH at all within R_in of the user.
    VoidDisk,
    /// No eligible RRH: 1 − λ̃/λ.
    NotAllowed,
}

pub fn outage_probability(params: &FogParams, mode: OutageMode, source: ThetaSource<'_>) -> f64 {
    match mode {
        OutageMode::VoidDisk => exp(-params.mu()),
        OutageMode::NotAllowed => 1.0 - allowed_probability(params, source),
    }
}

/// R_in maximizing the closed-form λ̃ over `[lo, hi]` for a fixed ε.
pub fn maximize_copilot_density(params: &FogParams, lo: f64, hi: f64) -> Result<f64> {
    if !(lo > 0.0) || !(hi > lo) {
        return Err(Error::param("range", "need 0 < lo < hi"));
    }
    let eps = params.disks.epsilon();
    let f = |r: f64| -> Result<f64> {
        let p = params.with_disks(DiskPair::new(r, eps)?);
        Ok(copilot_density(&p, ThetaSource::ClosedForm))
    };
    // Coarse scan to bracket the global maximum, then golden section.
    let steps = 400;
    let h = (hi - lo) / steps as f64;
    let mut best = (lo, f(lo)?);
    for i in 1..=steps {
        let r = lo + h * i as f64;
        let v = f(r)?;
        if v > best.1 {
            best = (r, v);
        }
    }
    let (mut a, mut b) = ((best.0 - h).max(lo), (best.0 + h).min(hi));
    let phi = 0.5 * (libm::sqrt(5.0) - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > 1e-10 * (1.0 + a.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Whether the default θ source for these parameters is the closed form,
/// i.e. R_in does not exceed the λ̃-maximizing radius.
pub fn closed_form_preferred(params: &FogParams) -> Result<bool> {
    let r_in = params.disks.r_in();
    let hi = (4.0 * r_in).max(3.0 / libm::sqrt(PI * params.lambda().max(1e-12)));
    Ok(r_in <= maximize_copilot_density(params, 1e-3 * r_in, hi)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lambda_a: f64, lambda: f64, q: usize, r_in: f64, eps: f64, eta: f64) -> FogParams {
        FogParams::new(lambda_a, lambda * q as f64, q, DiskPair::new(r_in, eps).unwrap(), eta).unwrap()
    }

    #[test]
    fn theta_approx_masses() {
        let d = DiskPair::from_radii(0.4, 0.5).unwrap();
        let f = theta_pdf_approx(0.0, d);
        assert_eq!((f.p0, f.pu, f.p1), (0.0, 0.0, 1.0));
        let f = theta_pdf_approx(1.0, d);
        assert!((f.p1 - (-0.81 * PI).exp()).abs() < 1e-15);
        assert!((f.p1 - 0.0785).abs() < 1e-4);
        assert_eq!(f.p0 + f.pu + f.p1, 1.0);
    }

    #[test]
    fn copilot_density_limits() {
        assert_eq!(copilot_density(&params(0.0, 1.0, 1, 0.3, 0.2, 3.0), ThetaSource::ClosedForm), 0.0);
        let p = params(2.0, 1e-9, 1, 0.3, 0.2, 3.0);
        let ratio = copilot_density(&p, ThetaSource::ClosedForm) / p.lambda();
        assert!((ratio - (1.0 - (-PI * 2.0 * 0.09f64).exp())).abs() < 1e-6);
    }

    #[test]
    fn active_rrh_density_hand_value() {
        // λ_a = λ = 1 and πR² = 1
        let r = (1.0 / PI).sqrt();
        let p = params(1.0, 1.0, 1, r, 0.0, 3.0);
        assert!((active_rrh_density(&p) - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn expected_served_scales_with_q() {
        let base = params(1.0, 0.7, 1, 0.4, 0.1, 3.0);
        let more = params(1.0, 0.7, 40, 0.4, 0.1, 3.0);
        assert!((expected_served(&more) - 40.0 * expected_served(&base)).abs() < 1e-12);
        assert_eq!(avg_rrh_power(&params(1.0, 0.0, 40, 0.4, 0.1, 3.0), 1.0), 0.0);
    }

    #[test]
    fn serving_distribution_normalizes() {
        let p = params(31.8, 31.8, 40, 0.08, 0.2, 3.75);
        let w = serving_distribution(&p, ThetaSource::ClosedForm);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(prob_n_serving(0, &p, ThetaSource::ClosedForm).is_err());
    }

    #[test]
    fn serving_distribution_sparse_users_is_conditioned_poisson() {
        let p = params(31.8, 1e-12, 40, 0.1, 0.0, 3.75);
        let mu = p.mu();
        let w = serving_distribution(&p, ThetaSource::ClosedForm);
        let norm = 1.0 - (-mu).exp();
        for (i, &x) in w.iter().enumerate() {
            assert!((x - poisson_pmf(i as u64 + 1, mu) / norm).abs() < 1e-6);
        }
    }

    #[test]
    fn laplace_forms_agree() {
        for &(g, l, r, eta) in &[(1.0, 1.0, 0.5, 3.75), (1e3, 5.0, 0.1, 3.0), (1e-6, 2.0, 0.05, 4.0), (7.0, 0.3, 1.0, 2.5)] {
            let q = interference_laplace(g, l, r, eta).unwrap();
            let c = interference_laplace_closed_form(g, l, r, eta).unwrap();
            let n = interference_laplace_negative_order(g, l, r, eta).unwrap();
            assert!((q - c).abs() < 1e-7 * c.max(1e-300), "{q} vs {c}");
            assert!((n - c).abs() < 1e-9 * c.max(1e-300));
            assert!(q > 0.0 && q <= 1.0);
        }
        assert_eq!(interference_laplace(0.0, 1.0, 0.5, 3.75).unwrap(), 1.0);
        assert_eq!(interference_laplace(2.0, 0.0, 0.5, 3.75).unwrap(), 1.0);
    }

    #[test]
    fn ordered_distance_values() {
        assert!((expected_ordered_distance(0, 1, 0.9).unwrap() - 0.6).abs() < 1e-12);
        let v = expected_ordered_distance(0, 10, 1.0).unwrap();
        assert!((v - 0.270_260_2).abs() < 1e-6);
        assert!(expected_ordered_distance(3, 3, 1.0).is_err());
    }

    #[test]
    fn conditional_se_matches_two_point_check() {
        // No interference transform dependence beyond the cap when λ̃ = 0.
        let o = FogOptions::default();
        assert_eq!(conditional_se(1.0, 0.0, 0.1, 3.75, &o).unwrap(), o.se_cap);
        // Closed form and quadrature Laplace give the same SE.
        let a = conditional_se(1e7, 2.0, 0.08, 3.75, &o).unwrap();
        let b = conditional_se(1e7, 2.0, 0.08, 3.75, &FogOptions { laplace: LaplaceMethod::ClosedForm, ..o }).unwrap();
        assert!((a - b).abs() < 1e-5 * a);
    }

    #[test]
    fn outage_void_disk_value() {
        let p = params(31.8, 1.0, 40, 0.1, 0.0, 3.75);
        assert!((outage_probability(&p, OutageMode::VoidDisk, ThetaSource::ClosedForm) - 0.368).abs() < 1e-3);
    }

    #[test]
    fn copilot_maximizer_orders_with_rrh_density() {
        let r: std::vec::Vec<f64> = [0.5, 1.0, 5.0]
            .iter()
            .map(|&la| maximize_copilot_density(&params(la, 1.0, 1, 0.3, 0.25, 3.0), 0.01, 1.5).unwrap())
            .collect();
        assert!(r[0] > r[1] && r[1] > r[2], "{r:?}");
        assert!((r[0] - 0.431).abs() < 2e-3 && (r[2] - 0.345).abs() < 2e-3, "{r:?}");
    }
}
