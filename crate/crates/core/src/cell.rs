//! Analytics of the cellular massive MIMO baseline with random fractional
//! pilot reuse and nearest-BS association.

use core::f64::consts::{LN_2, PI};

use libm::{exp, log, log1p, pow};

use crate::quad::{integrate_to_infinity, Tolerance};
use crate::special::ln_gamma;
use crate::{Error, Result};

/// Shape of the gamma approximation to the Voronoi cell area.
pub const DEFAULT_C_SHAPE: f64 = 3.575;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellParams {
    lambda_a: f64,
    lambda_u: f64,
    l_pilots: usize,
    n_p: usize,
    eta: f64,
    c_shape: f64,
}

impl CellParams {
    pub fn new(lambda_a: f64, lambda_u: f64, l_pilots: usize, n_p: usize, eta: f64) -> Result<Self> {
        Self::with_shape(lambda_a, lambda_u, l_pilots, n_p, eta, DEFAULT_C_SHAPE)
    }

    pub fn with_shape(lambda_a: f64, lambda_u: f64, l_pilots: usize, n_p: usize, eta: f64, c_shape: f64) -> Result<Self> {
        if !(lambda_a > 0.0) || !lambda_a.is_finite() {
            return Err(Error::param("lambda_a", "must be positive"));
        }
        if !(lambda_u >= 0.0) || !lambda_u.is_finite() {
            return Err(Error::param("lambda_u", "must be non-negative"));
        }
        if n_p == 0 || n_p > l_pilots {
            return Err(Error::param("n_p", "need 0 < n_p <= l_pilots"));
        }
        if !(eta > 1.0) {
            return Err(Error::param("eta", "must exceed 1"));
        }
        if !(c_shape > 0.0) {
            return Err(Error::param("c_shape", "must be positive"));
        }
        Ok(CellParams { lambda_a, lambda_u, l_pilots, n_p, eta, c_shape })
    }

    pub fn lambda_a(&self) -> f64 {
        self.lambda_a
    }

    pub fn lambda_u(&self) -> f64 {
        self.lambda_u
    }

    pub fn l_pilots(&self) -> usize {
        self.l_pilots
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn c_shape(&self) -> f64 {
        self.c_shape
    }
}

/// P(|𝒱₀| = ℓ) under the gamma-approximated Voronoi cell area.
pub fn voronoi_count_pmf(ell: u64, p: &CellParams) -> f64 {
    let c = p.c_shape;
    if p.lambda_u == 0.0 {
        return if ell == 0 { 1.0 } else { 0.0 };
    }
    let l = ell as f64;
    let ca = c * p.lambda_a;
    let ln = ln_gamma(l + c) - ln_gamma(l + 1.0) - ln_gamma(c) + l * log(p.lambda_u) + c * log(ca)
        - (l + c) * log(ca + p.lambda_u);
    exp(ln)
}

/// E[min(|𝒱₀|, N_p)].
pub fn expected_served_users(p: &CellParams) -> f64 {
    let np = p.n_p as f64;
    np + (0..p.n_p as u64).map(|l| (l as f64 - np) * voronoi_count_pmf(l, p)).sum::<f64>()
}

/// Probability p_a that a given pilot is in use at a BS.
pub fn pilot_activity_prob(p: &CellParams) -> f64 {
    expected_served_users(p) / p.l_pilots as f64
}

/// Joint density of the distance r₁ to the nearest co-pilot BS and the
/// ratio δ = r₁/r₀ to the serving distance.
pub fn joint_pdf_r1_delta(r1: f64, delta: f64, lambda_a: f64, pa: f64) -> f64 {
    if !(r1 > 0.0) || !(delta >= 1.0) {
        return 0.0;
    }
    let a = 2.0 * PI * lambda_a;
    let x = r1 / delta;
    pa * a * a * x * x * x * exp(-PI * lambda_a * r1 * r1 * (pa + (1.0 - pa) / (delta * delta)))
}

/// Double integral ∫₁^∞∫₀^∞ g(r₁, δ)·f(r₁, δ) dr₁ dδ.
fn integrate_joint<G: Fn(f64, f64) -> f64>(lambda_a: f64, pa: f64, g: G, tol: Tolerance) -> Result<f64> {
    // Lengths in units of 1/√(πλ_a) keep the inner integrand O(1).
    let unit = 1.0 / libm::sqrt(PI * lambda_a);
    let inner_tol = Tolerance { abs: tol.abs * 1e-2, rel: tol.rel * 1e-2 };
    let mut failure = None;
    let outer = integrate_to_infinity(
        |t| {
            let delta = 1.0 + t;
            match integrate_to_infinity(|x| g(x * unit, delta) * joint_pdf_r1_delta(x * unit, delta, lambda_a, pa) * unit, 0.0, inner_tol) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        tol,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(outer),
    }
}

/// Total mass of the joint density (1 for every p_a ∈ (0, 1]).
pub fn joint_pdf_mass(lambda_a: f64, pa: f64) -> Result<f64> {
    integrate_joint(lambda_a, pa, |_, _| 1.0, Tolerance { abs: 1e-10, rel: 1e-8 })
}

/// Spatially averaged SE of a served user.
pub fn avg_user_se_cellular(p: &CellParams) -> Result<f64> {
    let pa = pilot_activity_prob(p);
    if pa == 0.0 {
        return Ok(0.0);
    }
    let eta = p.eta;
    let k = PI * p.lambda_a * pa / (eta - 1.0);
    integrate_joint(
        p.lambda_a,
        pa,
        |r1, delta| log1p(pow(delta, 2.0 * eta) / (1.0 + k * r1 * r1)) / LN_2,
        Tolerance::default(),
    )
}

/// Area spectral efficiency λ_a·E[|𝒰₀|]·C̄ (b/s/Hz/km²).
pub fn area_se_cellular(p: &CellParams) -> Result<f64> {
    let load = expected_served_users(p);
    if load == 0.0 {
        return Ok(0.0);
    }
    Ok(p.lambda_a * load * avg_user_se_cellular(p)?)
}

/// Per-stream power giving a BS the average power `pa_fog_power`.
pub fn per_stream_power_cellular(pa_fog_power: f64, p: &CellParams) -> Result<f64> {
    let load = expected_served_users(p);
    if !(load > 0.0) {
        return Err(Error::param("lambda_u", "expected cell load is zero"));
    }
    Ok(pa_fog_power / load)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_config(n_p: usize) -> CellParams {
        CellParams::new(31.8, 318.0, 40, n_p, 3.75).unwrap()
    }

    #[test]
    fn pmf_normalizes_with_right_mean() {
        let p = table_config(40);
        let (mut mass, mut mean, mut l) = (0.0, 0.0, 0u64);
        loop {
            let v = voronoi_count_pmf(l, &p);
            mass += v;
            mean += l as f64 * v;
            if l > 10 && v < 1e-12 {
                break;
            }
            l += 1;
        }
        assert!((mass - 1.0).abs() < 1e-10);
        assert!((mean / 10.0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn no_users_no_load() {
        let p = CellParams::new(31.8, 0.0, 40, 10, 3.75).unwrap();
        assert_eq!(voronoi_count_pmf(0, &p), 1.0);
        assert_eq!(expected_served_users(&p), 0.0);
        assert_eq!(pilot_activity_prob(&p), 0.0);
        assert_eq!(area_se_cellular(&p).unwrap(), 0.0);
        assert!(per_stream_power_cellular(1.0, &p).is_err());
    }

    #[test]
    fn uncapped_load_is_mean_cell_size() {
        let p = CellParams::new(31.8, 318.0, 200, 200, 3.75).unwrap();
        assert!((expected_served_users(&p) - 10.0).abs() < 1e-9);
    }

    #[test]
    fn saturated_cells_use_np_pilots() {
        let p = CellParams::new(1.0, 1e6, 40, 30, 3.75).unwrap();
        assert!((pilot_activity_prob(&p) - 0.75).abs() < 1e-9);
    }

    #[test]
    fn activity_example_config() {
        assert!((pilot_activity_prob(&table_config(40)) - 0.25).abs() < 1e-3);
    }

    #[test]
    fn joint_density_is_proper() {
        for &pa in &[0.05, 0.25, 1.0] {
            assert!((joint_pdf_mass(31.8, pa).unwrap() - 1.0).abs() < 1e-6, "pa = {pa}");
        }
    }

    #[test]
    fn table_values() {
        let se = avg_user_se_cellular(&table_config(10)).unwrap();
        assert!((se - 10.69).abs() < 0.01 * 10.69, "{se}");
        let area = area_se_cellular(&table_config(40)).unwrap();
        assert!((area - 3056.9).abs() < 0.01 * 3056.9, "{area}");
    }

    #[test]
    fn power_fair_per_stream() {
        let p = table_config(40);
        let ps = per_stream_power_cellular(1.0, &p).unwrap();
        assert!((ps * expected_served_users(&p) - 1.0).abs() < 1e-12);
    }
}
