//! Fading-level checks of the finite-M ZFBF rate: the terms of the rate are
//! re-estimated from explicit channel draws, estimates and precoders.

use fogmimo_core::codec::{build_codebook, PilotIndex};
use fogmimo_core::linalg::{dot, CMatrix};
use fogmimo_core::phy::{
    complex_normal_vec, estimate_group_channel, finite_m_se, pilot_field_1, zfbf_precoders, ActiveSet, ChannelSet,
    NoisePower,
};
use fogmimo_core::rng::{substream, Purpose};
use num_complex::Complex64;

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

#[test]
fn own_gain_is_chi_squared_with_m_minus_load_plus_one() {
    let mut rng = substream(11, 0, Purpose::Fading);
    for &(m, u) in &[(16usize, 1usize), (16, 4), (32, 7)] {
        let draws: Vec<f64> = (0..10_000)
            .map(|_| {
                let cols: Vec<Vec<Complex64>> = (0..u).map(|_| complex_normal_vec(&mut rng, m, 1.0)).collect();
                let g = CMatrix::from_columns(&cols);
                let v = zfbf_precoders(&g).unwrap();
                dot(g.column(0), v.column(0)).norm_sqr()
            })
            .collect();
        let (mean, _) = mean_sd(&draws);
        let dof = (m - u + 1) as f64;
        // Gamma(dof, 1) has variance dof.
        let se = (dof / draws.len() as f64).sqrt();
        assert!((mean - dof).abs() < 3.0 * se, "M={m} U={u}: {mean} vs {dof}");
    }
}

#[test]
fn residual_zero_forcing_power() {
    // One RRH; group 0 holds users 0 and 1, group 1 holds user 2. The stream
    // of group 1 leaks into user 0 only through its estimation error.
    let cb = build_codebook(2, 4, 1.0).unwrap();
    let betas = vec![vec![1.0, 0.4, 0.7]];
    let pilots = [PilotIndex { group: 0, word: 0 }, PilotIndex { group: 0, word: 1 }, PilotIndex { group: 1, word: 0 }];
    let sigma2 = 0.3;
    let m = 12;
    let alpha = 1.0 / (1.0 + 0.4 + sigma2 / 2.0);
    let mut rng = substream(12, 0, Purpose::Fading);
    let draws: Vec<f64> = (0..10_000)
        .map(|_| {
            let ch = ChannelSet::draw(&mut rng, &betas, m).unwrap();
            let y = pilot_field_1(&mut rng, &ch, 0, &pilots, &cb, sigma2);
            let est = CMatrix::from_columns(&[estimate_group_channel(&y, 0, &cb), estimate_group_channel(&y, 1, &cb)]);
            let v = zfbf_precoders(&est).unwrap();
            dot(ch.g(0, 0), v.column(1)).norm_sqr()
        })
        .collect();
    let (mean, sd) = mean_sd(&draws);
    let want = 1.0 * (1.0 - alpha);
    assert!((mean - want).abs() < 3.0 * sd / (draws.len() as f64).sqrt(), "{mean} vs {want}");
}

/// Fixture of RRHs, users, gains and active sets for the rate comparison.
struct Fixture {
    betas: Vec<Vec<f64>>,
    pilots: Vec<PilotIndex>,
    q: usize,
    active: ActiveSet,
}

fn fixtures() -> Vec<Fixture> {
    let pilots = vec![
        PilotIndex { group: 0, word: 0 },
        PilotIndex { group: 0, word: 1 },
        PilotIndex { group: 1, word: 0 },
        PilotIndex { group: 1, word: 1 },
    ];
    let mut a1 = ActiveSet::new(3);
    a1.add(0, 0, 0).unwrap();
    a1.add(0, 2, 1).unwrap();
    a1.add(1, 0, 0).unwrap();
    a1.add(1, 3, 1).unwrap();
    a1.add(2, 1, 0).unwrap();
    let mut a2 = ActiveSet::new(3);
    a2.add(0, 0, 0).unwrap();
    a2.add(1, 1, 0).unwrap();
    a2.add(1, 2, 1).unwrap();
    a2.add(2, 3, 1).unwrap();
    vec![
        Fixture {
            betas: vec![vec![2.0, 0.3, 0.8, 0.1], vec![1.2, 0.2, 0.3, 1.5], vec![0.25, 1.8, 0.2, 0.4]],
            pilots: pilots.clone(),
            q: 2,
            active: a1,
        },
        Fixture {
            betas: vec![vec![3.0, 0.5, 0.05, 0.2], vec![0.6, 2.5, 1.1, 0.3], vec![0.1, 0.9, 0.4, 2.2]],
            pilots,
            q: 2,
            active: a2,
        },
    ]
}

/// Ergodic rate of `user` from sampled useful-signal moments and interference
/// power, using the per-draw ZFBF precoders of every active RRH.
fn brute_force_se(fx: &Fixture, user: usize, m: usize, noise: &NoisePower, draws: usize, seed: u64) -> f64 {
    let cb = build_codebook(fx.q, 4, noise.pu).unwrap();
    let mut rng = substream(seed, 0, Purpose::Fading);
    let (mut s1, mut s2, mut interf) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
    for _ in 0..draws {
        let ch = ChannelSet::draw(&mut rng, &fx.betas, m).unwrap();
        let mut useful = Complex64::new(0.0, 0.0);
        let mut power = 0.0;
        for k in 0..fx.active.n_rrh() {
            let served = fx.active.served(k);
            if served.is_empty() {
                continue;
            }
            let y = pilot_field_1(&mut rng, &ch, k, &fx.pilots, &cb, noise.sigma2_n);
            let cols: Vec<Vec<Complex64>> = served.iter().map(|s| estimate_group_channel(&y, s.group, &cb)).collect();
            let v = zfbf_precoders(&CMatrix::from_columns(&cols)).unwrap();
            for (c, s) in served.iter().enumerate() {
                let coef = dot(ch.g(k, user), v.column(c));
                if s.user == user {
                    useful += coef;
                } else {
                    power += coef.norm_sqr();
                }
            }
        }
        s1 += useful;
        s2 += useful.norm_sqr();
        interf += power;
    }
    let n = draws as f64;
    let mean = s1 / n;
    let var = s2 / n - mean.norm_sqr();
    let sinr = mean.norm_sqr() / (noise.downlink() + var + interf / n);
    (1.0 + sinr).log2()
}

fn closed_form_se(fx: &Fixture, user: usize, m: usize, noise: &NoisePower) -> f64 {
    let group = fx.pilots[user].group;
    let nu = noise.estimation(fx.q);
    let alpha = |k: usize| {
        let s: f64 = (0..fx.pilots.len()).filter(|&i| fx.pilots[i].group == group).map(|i| fx.betas[k][i]).sum();
        fx.betas[k][user] / (s + nu)
    };
    let links = fx.active.user_links(user, group, |k| fx.betas[k][user], alpha);
    finite_m_se(&links, noise, m, user, 40.0).unwrap()
}

#[test]
fn closed_form_rate_matches_fading_average_at_large_m() {
    let noise = NoisePower::new(1.0, 1.0, 1.0).unwrap();
    for (f, fx) in fixtures().iter().enumerate() {
        for user in 0..4 {
            if (0..3).all(|k| !fx.active.serves(k, user)) {
                continue;
            }
            let m = 128;
            let bf = brute_force_se(fx, user, m, &noise, 20_000, 100 + f as u64);
            let cf = closed_form_se(fx, user, m, &noise);
            assert!((bf - cf).abs() < 0.02 * cf, "fixture {f} user {user}: brute force {bf} vs closed form {cf}");
        }
    }
}
