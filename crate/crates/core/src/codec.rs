//! Coded uplink pilots: an orthogonal first field selecting the pilot group
//! and an equal-weight binary second field identifying the user inside it.
//!
//! Second-field words of length `Q'` and weight `Q'/2` are stored as bit
//! masks (bit `i` = position `i`) and indexed by their rank in lexicographic
//! order, position 0 being the most significant symbol.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{cos, pow, sin, sqrt};
use num_complex::Complex64;
use rand::Rng;

use crate::geometry::{DiskPair, Point, PointSet};
use crate::rng::{substream, Purpose};
use crate::special::binomial;
use crate::{Error, Result};

/// Longest second field representable in a `u64` mask.
pub const MAX_QPRIME: usize = 62;

/// Lexicographic rank of a weight-`k` word of length `n`.
pub fn rank(word: u64, n: usize) -> u64 {
    let mut ones = word.count_ones();
    let mut r = 0u64;
    for i in 0..n {
        if ones == 0 {
            break;
        }
        if word >> i & 1 == 1 {
            // Every word sharing the prefix but holding a 0 here comes first.
            r += binomial((n - i - 1) as u32, ones);
            ones -= 1;
        }
    }
    r
}

/// Inverse of [`rank`] for words of length `n` and weight `k`.
pub fn unrank(mut r: u64, n: usize, k: usize) -> u64 {
    let mut ones = k as u32;
    let mut word = 0u64;
    for i in 0..n {
        if ones == 0 {
            break;
        }
        let with_zero = binomial((n - i - 1) as u32, ones);
        if r >= with_zero {
            word |= 1 << i;
            r -= with_zero;
            ones -= 1;
        }
    }
    word
}

/// The pilot codebook 𝒞 = {√P_u [√Q s_q, √2 w_ℓ]}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotCodebook {
    q_count: usize,
    q_prime: usize,
    pu: f64,
    code_size: u64,
}

impl PilotCodebook {
    pub fn q_count(&self) -> usize {
        self.q_count
    }

    pub fn q_prime(&self) -> usize {
        self.q_prime
    }

    pub fn pu(&self) -> f64 {
        self.pu
    }

    /// Pilot length L = Q + Q'.
    pub fn length(&self) -> usize {
        self.q_count + self.q_prime
    }

    /// Number of second-field words, C(Q', Q'/2).
    pub fn code_size(&self) -> u64 {
        self.code_size
    }

    /// Total number of addressable sequences.
    pub fn size(&self) -> u64 {
        self.code_size.saturating_mul(self.q_count as u64)
    }

    /// Unit-norm first-field sequence s_q (a DFT row).
    pub fn first_field(&self, q: usize) -> Vec<Complex64> {
        let n = self.q_count as f64;
        let norm = 1.0 / sqrt(n);
        (0..self.q_count)
            .map(|i| {
                let phase = -2.0 * PI * (q * i % self.q_count) as f64 / n;
                Complex64::new(norm * cos(phase), norm * sin(phase))
            })
            .collect()
    }

    /// Second-field word w_ℓ as a bit mask.
    pub fn second_field(&self, ell: u64) -> u64 {
        unrank(ell, self.q_prime, self.q_prime / 2)
    }

    pub fn word_index(&self, word: u64) -> u64 {
        rank(word, self.q_prime)
    }

    /// Second-field word as a 0/1 vector.
    pub fn word_bits(&self, ell: u64) -> Vec<f64> {
        let w = self.second_field(ell);
        (0..self.q_prime).map(|i| (w >> i & 1) as f64).collect()
    }

    /// Full transmitted pilot x_{q,ℓ}.
    pub fn codeword(&self, q: usize, ell: u64) -> Vec<Complex64> {
        let a = sqrt(self.pu * self.q_count as f64);
        let b = sqrt(2.0 * self.pu);
        let mut x: Vec<Complex64> = self.first_field(q).into_iter().map(|s| s * a).collect();
        x.extend(self.word_bits(ell).into_iter().map(|v| Complex64::new(b * v, 0.0)));
        x
    }
}

pub fn build_codebook(q: usize, q_prime: usize, pu: f64) -> Result<PilotCodebook> {
    if q == 0 {
        return Err(Error::param("q", "need at least one pilot group"));
    }
    if q_prime < 2 || !q_prime.is_multiple_of(2) {
        return Err(Error::param("q_prime", "must be even and at least 2"));
    }
    if q_prime > MAX_QPRIME {
        return Err(Error::param("q_prime", alloc::format!("at most {MAX_QPRIME} supported")));
    }
    if !(pu > 0.0) || !pu.is_finite() {
        return Err(Error::param("p_u", "must be positive"));
    }
    Ok(PilotCodebook {
        q_count: q,
        q_prime,
        pu,
        code_size: binomial(q_prime as u32, (q_prime / 2) as u32),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PilotIndex {
    pub group: usize,
    pub word: u64,
}

/// Per-user pilot indices plus the induced partition into groups.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PilotAssignment {
    pub pilots: Vec<PilotIndex>,
    pub groups: Vec<Vec<usize>>,
}

impl PilotAssignment {
    pub fn len(&self) -> usize {
        self.pilots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pilots.is_empty()
    }
}

/// `m` distinct values from `0..n` (Floyd's algorithm).
pub(crate) fn distinct_indices<R: Rng + ?Sized>(rng: &mut R, n: u64, m: usize) -> Vec<u64> {
    let mut chosen = BTreeSet::new();
    let mut out = Vec::with_capacity(m);
    for j in n - m as u64..n {
        let t = rng.random_range(0..=j);
        let pick = if chosen.contains(&t) { j } else { t };
        chosen.insert(pick);
        out.push(pick);
    }
    out
}

/// Uniform group per user, then distinct second-field words within each group.
pub fn assign_pilots_with<R: Rng + ?Sized>(
    rng: &mut R,
    n_users: usize,
    codebook: &PilotCodebook,
) -> Result<PilotAssignment> {
    let q = codebook.q_count;
    let mut groups: Vec<Vec<usize>> = alloc::vec![Vec::new(); q];
    let mut pilots = alloc::vec![PilotIndex { group: 0, word: 0 }; n_users];
    for (u, p) in pilots.iter_mut().enumerate() {
        let g = rng.random_range(0..q);
        p.group = g;
        groups[g].push(u);
    }
    for (g, members) in groups.iter().enumerate() {
        if members.len() as u64 > codebook.code_size {
            return Err(Error::GroupCapacity { group: g, users: members.len(), capacity: codebook.code_size });
        }
        let words = distinct_indices(rng, codebook.code_size, members.len());
        for (&u, w) in members.iter().zip(words) {
            pilots[u].word = w;
        }
    }
    Ok(PilotAssignment { pilots, groups })
}

pub fn assign_pilots(users: &PointSet, codebook: &PilotCodebook, rng_seed: u64) -> Result<PilotAssignment> {
    let mut rng = substream(rng_seed, 0, Purpose::Pilots);
    assign_pilots_with(&mut rng, users.len(), codebook)
}

/// Outcome of the two-threshold detection rule at one RRH for one group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrustDecision {
    pub trusted: bool,
    pub codeword_index: Option<u64>,
    pub recovered_word: Option<u64>,
}

/// Amplitude thresholds of the detection rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub useful: f64,
    pub interf: f64,
}

impl Thresholds {
    pub fn new(useful: f64, interf: f64) -> Result<Self> {
        if !(interf >= 0.0) || !(useful >= interf) {
            return Err(Error::param("thresholds", "need tau_useful >= tau_interf >= 0"));
        }
        Ok(Thresholds { useful, interf })
    }

    /// τ = √(2P_u)·r^{−η} at the coverage and protection radii.
    pub fn from_radii(pu: f64, disks: DiskPair, eta: f64) -> Self {
        let a = sqrt(2.0 * pu);
        Thresholds { useful: a * pow(disks.r_in(), -eta), interf: a * pow(disks.r_out(), -eta) }
    }
}

/// Applies the detection rule to the real part of a combined second field.
pub fn detect_trusted(mrc_second_field: &[f64], tau_useful: f64, tau_interf: f64) -> TrustDecision {
    let n = mrc_second_field.len();
    debug_assert!(n <= MAX_QPRIME);
    let mut strong = 0u64;
    let mut weak = 0u64;
    for (i, &v) in mrc_second_field.iter().enumerate() {
        if v >= tau_useful {
            strong |= 1 << i;
        }
        if v >= tau_interf {
            weak |= 1 << i;
        }
    }
    let equal_weight = n.is_multiple_of(2) && strong.count_ones() as usize == n / 2;
    let clean = weak & !strong == 0;
    if equal_weight && clean {
        TrustDecision { trusted: true, codeword_index: Some(rank(strong, n)), recovered_word: Some(strong) }
    } else {
        TrustDecision::default()
    }
}

/// Geometric surrogate of the detection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GeometricDecision {
    pub trusted: bool,
    /// Index into the group's point list of the identified user.
    pub user: Option<usize>,
}

/// Trusted iff exactly one group user lies within `r_in` and no other
/// lies within `r_out`. Boundary distances count as inside.
pub fn geometric_trust(rrh: Point, group_users: &PointSet, disks: DiskPair) -> GeometricDecision {
    let w = group_users.window;
    let ri2 = disks.r_in() * disks.r_in();
    let ro2 = disks.r_out() * disks.r_out();
    let mut strong = None;
    let mut within_out = 0usize;
    for (i, &u) in group_users.points.iter().enumerate() {
        let d2 = w.distance2(rrh, u);
        if d2 <= ro2 {
            within_out += 1;
            if within_out > 1 {
                return GeometricDecision::default();
            }
            if d2 <= ri2 {
                strong = Some(i);
            }
        }
    }
    match strong {
        Some(i) => GeometricDecision { trusted: true, user: Some(i) },
        None => GeometricDecision::default(),
    }
}
