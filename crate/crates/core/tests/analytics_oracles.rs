//! Analytic quantities checked against direct sampling of the underlying
//! point processes.

use std::f64::consts::PI;

use fogmimo_core::cell::{joint_pdf_r1_delta, CellParams};
use fogmimo_core::fog::{
    expected_ordered_distance, interference_laplace, serving_distribution, theta_pdf_approx, FogParams, ThetaSource,
};
use fogmimo_core::geometry::{estimate_theta_pdf, poisson_count, uniform_in_disk, DiskPair, Point, Window};
use fogmimo_core::quad::{integrate, Tolerance};
use fogmimo_core::rng::{substream, Purpose};
use fogmimo_core::sim::{run_trials, Antennas, SystemKind, TrialConfig};
use rand::Rng;

#[test]
fn theta_mean_and_full_mass() {
    let disks = DiskPair::new(0.1, 0.25).unwrap();
    let lambda = 8.0;
    let d = estimate_theta_pdf(lambda, disks, 20_000, 3, 2048).unwrap();
    let n = d.samples.len() as f64;
    let (mean, se) = d.expect_with_se(|t| t);
    let want = (-PI * lambda * disks.r_out() * disks.r_out()).exp();
    assert!((mean - want).abs() < 3.0 * se, "{mean} vs {want}");
    let p1 = (-PI * lambda * (disks.r_in() + disks.r_out()).powi(2)).exp();
    let se1 = (p1 * (1.0 - p1) / n).sqrt();
    assert!((d.mass_one - p1).abs() < 3.0 * se1, "{} vs {p1}", d.mass_one);
}

#[test]
fn three_part_theta_law_is_a_distribution() {
    for i in 0..10 {
        for j in 0..10 {
            let lambda = 0.1 + 3.0 * i as f64;
            let disks = DiskPair::new(0.02 + 0.03 * j as f64, 0.05 * (i % 5) as f64).unwrap();
            let f = theta_pdf_approx(lambda, disks);
            assert!((f.p0 + f.pu + f.p1 - 1.0).abs() < 1e-15);
            let mean = (-PI * lambda * disks.r_out() * disks.r_out()).exp();
            assert!((f.pu / 2.0 + f.p1 - mean).abs() < 1e-15);
        }
    }
}

/// E[exp(−γ Σ r^{−2η})] over a PPP of intensity `lambda` in the annulus
/// R_out < r < r_max.
fn laplace_monte_carlo(gamma: f64, lambda: f64, r_out: f64, eta: f64, r_max: f64, n: usize, seed: u64) -> f64 {
    let mut rng = substream(seed, 0, Purpose::Drop);
    let area = PI * (r_max * r_max - r_out * r_out);
    let mut acc = 0.0;
    for _ in 0..n {
        let k = poisson_count(&mut rng, lambda * area);
        let mut i = 0.0;
        for _ in 0..k {
            let r2 = r_out * r_out + rng.random::<f64>() * (r_max * r_max - r_out * r_out);
            i += r2.powf(-eta);
        }
        acc += (-gamma * i).exp();
    }
    acc / n as f64
}

#[test]
fn laplace_transform_matches_ppp_sampling() {
    for (s, &(lambda, r, eta, x)) in
        [(10.0f64, 0.1f64, 3.75f64, 3.0f64), (5.0, 0.2, 3.0, 1.0), (30.0, 0.08, 4.0, 30.0), (2.0, 0.3, 2.5, 0.3)].iter().enumerate()
    {
        let gamma: f64 = x * r.powf(2.0 * eta);
        // Interferers beyond r_max change the exponent by less than 1e-3.
        let scale = PI * lambda * r * r * x / ((eta - 1.0) * 1e-3);
        let r_max = r * scale.powf(1.0 / (2.0 * eta - 2.0)).max(2.0);
        let mc = laplace_monte_carlo(gamma, lambda, r, eta, r_max, 100_000, s as u64);
        let exact = interference_laplace(gamma, lambda, r, eta).unwrap();
        assert!((mc - exact).abs() < 0.01 * exact, "point {s}: {mc} vs {exact}");
    }
}

#[test]
fn ordered_distances_match_sorted_uniform_points() {
    let mut rng = substream(9, 0, Purpose::Drop);
    let (n, r_in) = (5usize, 0.3);
    let trials = 40_000;
    let mut sums = vec![0.0; n];
    for _ in 0..trials {
        let mut d: Vec<f64> = (0..n)
            .map(|_| {
                let p = uniform_in_disk(&mut rng, Point::default(), r_in);
                (p.x * p.x + p.y * p.y).sqrt()
            })
            .collect();
        d.sort_by(f64::total_cmp);
        for (s, v) in sums.iter_mut().zip(d) {
            *s += v;
        }
    }
    for (m, s) in sums.iter().enumerate() {
        let want = expected_ordered_distance(m, n, r_in).unwrap();
        // Ordered distances lie in [0, r_in], so the SE is below r_in/(2√trials).
        assert!((s / trials as f64 - want).abs() < 3.0 * r_in / (2.0 * (trials as f64).sqrt()));
    }
}

/// CDF of the ratio δ = r₁/r₀ between the nearest co-pilot BS and the
/// serving BS, from the marginal 2p_a/(δ³(p_a + (1−p_a)/δ²)²).
fn delta_cdf(delta: f64, pa: f64) -> f64 {
    pa * (delta * delta - 1.0) / (pa * delta * delta + 1.0 - pa)
}

#[test]
fn delta_marginal_of_the_joint_density() {
    for &pa in &[0.25, 1.0] {
        for &d in &[1.0, 1.3, 2.0, 5.0] {
            let f = |r| joint_pdf_r1_delta(r, d, 31.8, pa);
            let marginal = integrate(f, 0.0, 3.0, Tolerance { abs: 1e-12, rel: 1e-10 }).unwrap();
            let want = 2.0 * pa / (d.powi(3) * (pa + (1.0 - pa) / (d * d)).powi(2));
            assert!((marginal - want).abs() < 1e-7 * want.max(1.0), "pa={pa} d={d}");
        }
    }
    assert!((delta_cdf(2.0, 1.0) - 0.75).abs() < 1e-15);
}

#[test]
fn delta_law_matches_thinned_ppp() {
    let pa = 0.25;
    let lambda_a = 31.8;
    let mut rng = substream(21, 0, Purpose::Drop);
    let r_max = 1.2;
    let mut deltas = Vec::new();
    while deltas.len() < 4000 {
        let k = poisson_count(&mut rng, lambda_a * PI * r_max * r_max);
        let mut pts: Vec<(f64, bool)> = (0..k)
            .map(|_| {
                let p = uniform_in_disk(&mut rng, Point::default(), r_max);
                ((p.x * p.x + p.y * p.y).sqrt(), rng.random::<f64>() < pa)
            })
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.len() < 2 {
            continue;
        }
        let r0 = pts[0].0;
        if let Some(&(r1, _)) = pts[1..].iter().find(|p| p.1) {
            deltas.push(r1 / r0);
        }
    }
    deltas.sort_by(f64::total_cmp);
    let n = deltas.len() as f64;
    let ks = deltas
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let f = delta_cdf(d, pa);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    // 1% critical value of the one-sample KS statistic.
    assert!(ks < 1.63 / n.sqrt(), "KS = {ks}");
}

fn fog_config(lambda_u: f64, r_in: f64, eps: f64, trials: usize) -> TrialConfig {
    let fog = FogParams::new(31.8, lambda_u, 40, DiskPair::new(r_in, eps).unwrap(), 3.75).unwrap();
    let cell = CellParams::new(31.8, lambda_u, 40, 40, 3.75).unwrap();
    let mut cfg = TrialConfig::new(SystemKind::Fog, fog, cell, Window::torus(2.0).unwrap());
    cfg.trials = trials;
    cfg
}

#[test]
fn serving_count_histogram() {
    let cfg = fog_config(31.8, 0.1, 0.2, 120);
    let records = run_trials(&cfg).unwrap();
    let analytic = serving_distribution(&cfg.fog, ThetaSource::ClosedForm);
    // Per-trial fractions give an SE that accounts for users sharing RRHs.
    for n in 1..=4 {
        let fr: Vec<f64> = records
            .iter()
            .map(|r| {
                let served: u64 = r.serving_hist.iter().skip(1).sum();
                r.serving_hist.get(n).copied().unwrap_or(0) as f64 / served as f64
            })
            .collect();
        let t = fr.len() as f64;
        let mean = fr.iter().sum::<f64>() / t;
        let sd = (fr.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (t - 1.0)).sqrt();
        assert!((mean - analytic[n - 1]).abs() < 3.0 * sd / t.sqrt(), "n={n}: {mean} vs {}", analytic[n - 1]);
    }
}

#[test]
fn finite_m_rate_increases_with_antennas() {
    let mut cfg = fog_config(318.0, 0.08, 0.2, 4);
    let mean_se = |cfg: &TrialConfig| {
        let r = run_trials(cfg).unwrap();
        r.iter().map(|r| r.se_sum).sum::<f64>() / r.iter().map(|r| r.served).sum::<usize>() as f64
    };
    let inf = mean_se(&cfg);
    let mut last = 0.0;
    for m in [64, 256, 1024, 4096, 1 << 16, 1 << 24] {
        cfg.antennas = Antennas::Finite(m);
        let se = mean_se(&cfg);
        assert!(se > last && se < inf, "M={m}: {se} after {last}, large-M value {inf}");
        last = se;
    }
    // The remaining gap comes from the per-RRH normalisation of the copilot terms.
    assert!((last - inf).abs() < 0.1 * inf, "{last} vs {inf}");
}
