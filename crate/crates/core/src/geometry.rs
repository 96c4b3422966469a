//! Point-process sampling and Boolean-coverage machinery.
//!
//! The simulation window is a square `[-h, h]²`. In torus mode distances wrap
//! around, emulating the infinite plane; in guard mode the plane is cut at
//! the window edge and statistics are taken only inside an interior square.

use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{cos, sin, sqrt};
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::rng::{substream, Purpose, SimRng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryMode {
    Torus,
    /// Hard edge; only points at least `margin` km inside count as interior.
    Guard { margin: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    half_width: f64,
    boundary: BoundaryMode,
}

impl Window {
    pub fn new(half_width: f64, boundary: BoundaryMode) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::param("half_width", "must be positive and finite"));
        }
        if let BoundaryMode::Guard { margin } = boundary {
            if !(margin >= 0.0) || margin >= half_width {
                return Err(Error::param("guard_margin", "must lie in [0, half_width)"));
            }
        }
        Ok(Window { half_width, boundary })
    }

    pub fn torus(half_width: f64) -> Result<Self> {
        Window::new(half_width, BoundaryMode::Torus)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn side(&self) -> f64 {
        2.0 * self.half_width
    }

    pub fn boundary(&self) -> BoundaryMode {
        self.boundary
    }

    pub fn area(&self) -> f64 {
        self.side() * self.side()
    }

    /// Area of the region where statistics are collected.
    pub fn interior_area(&self) -> f64 {
        match self.boundary {
            BoundaryMode::Torus => self.area(),
            BoundaryMode::Guard { margin } => {
                let s = self.side() - 2.0 * margin;
                s * s
            }
        }
    }

    pub fn is_interior(&self, p: Point) -> bool {
        match self.boundary {
            BoundaryMode::Torus => true,
            BoundaryMode::Guard { margin } => {
                let lim = self.half_width - margin;
                p.x.abs() <= lim && p.y.abs() <= lim
            }
        }
    }

    /// Rejects guard margins smaller than the largest interaction radius.
    pub fn check_margin(&self, required: f64) -> Result<()> {
        match self.boundary {
            BoundaryMode::Guard { margin } if margin < required => Err(Error::param(
                "guard_margin",
                alloc::format!("{margin} km is below the interaction radius {required} km"),
            )),
            _ => Ok(()),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= -self.half_width && p.x < self.half_width && p.y >= -self.half_width && p.y < self.half_width
    }

    /// Displacement `b − a` under the window metric.
    #[inline]
    pub fn delta(&self, a: Point, b: Point) -> (f64, f64) {
        let mut dx = b.x - a.x;
        let mut dy = b.y - a.y;
        if let BoundaryMode::Torus = self.boundary {
            let side = self.side();
            if dx > self.half_width {
                dx -= side;
            } else if dx < -self.half_width {
                dx += side;
            }
            if dy > self.half_width {
                dy -= side;
            } else if dy < -self.half_width {
                dy += side;
            }
        }
        (dx, dy)
    }

    #[inline]
    pub fn distance2(&self, a: Point, b: Point) -> f64 {
        let (dx, dy) = self.delta(a, b);
        dx * dx + dy * dy
    }

    #[inline]
    pub fn distance(&self, a: Point, b: Point) -> f64 {
        sqrt(self.distance2(a, b))
    }

    /// Maps a point back into the window (torus only; identity otherwise).
    pub fn wrap(&self, p: Point) -> Point {
        match self.boundary {
            BoundaryMode::Torus => {
                let side = self.side();
                let w = |v: f64| {
                    let mut r = (v + self.half_width) % side;
                    if r < 0.0 {
                        r += side;
                    }
                    r - self.half_width
                };
                Point::new(w(p.x), w(p.y))
            }
            BoundaryMode::Guard { .. } => p,
        }
    }
}

/// A finite realization of a homogeneous point process inside a window.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub window: Window,
    pub points: Vec<Point>,
    pub density: f64,
}

impl PointSet {
    pub fn empty(window: Window, density: f64) -> Self {
        PointSet { window, points: Vec::new(), density }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Coverage disk radius `r_in` and protection disk radius `r_out = (1+ε) r_in`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskPair {
    r_in: f64,
    r_out: f64,
}

impl DiskPair {
    pub fn new(r_in: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return Err(Error::param("epsilon", "must be non-negative (r_out >= r_in)"));
        }
        DiskPair::from_radii(r_in, (1.0 + epsilon) * r_in)
    }

    pub fn from_radii(r_in: f64, r_out: f64) -> Result<Self> {
        if !(r_in > 0.0) || !r_in.is_finite() {
            return Err(Error::param("r_in", "must be positive and finite"));
        }
        if !(r_out >= r_in) || !r_out.is_finite() {
            return Err(Error::param("r_out", "must be finite and at least r_in"));
        }
        Ok(DiskPair { r_in, r_out })
    }

    pub fn r_in(&self) -> f64 {
        self.r_in
    }

    pub fn r_out(&self) -> f64 {
        self.r_out
    }

    pub fn epsilon(&self) -> f64 {
        self.r_out / self.r_in - 1.0
    }
}

/// Uniform point in a disk of radius `r` around `c`.
#[inline]
pub fn uniform_in_disk<R: Rng + ?Sized>(rng: &mut R, c: Point, r: f64) -> Point {
    let rad = r * sqrt(rng.random::<f64>());
    let phi = 2.0 * PI * rng.random::<f64>();
    Point::new(c.x + rad * cos(phi), c.y + rad * sin(phi))
}

/// Poisson draw that tolerates a zero mean.
pub fn poisson_count<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    // The sampler is exact; the float it returns is integral.
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

/// Samples a homogeneous PPP over `window` from an explicit generator.
pub fn sample_ppp_with<R: Rng + ?Sized>(rng: &mut R, density: f64, window: Window) -> Result<PointSet> {
    if !(density >= 0.0) || !density.is_finite() {
        return Err(Error::param("density", "must be non-negative and finite"));
    }
    let n = poisson_count(rng, density * window.area());
    let h = window.half_width();
    let points = (0..n)
        .map(|_| Point::new(rng.random_range(-h..h), rng.random_range(-h..h)))
        .collect();
    Ok(PointSet { window, points, density })
}

/// Samples a homogeneous PPP with intensity `density` (per km²) over `window`.
pub fn sample_ppp(density: f64, window: Window, rng_seed: u64) -> Result<PointSet> {
    let mut rng = substream(rng_seed, 0, Purpose::Drop);
    sample_ppp_with(&mut rng, density, window)
}

/// Fraction of `B(user, r_in)` left uncovered by the union of
/// `B(c, r_out)` over the co-pilot users `c`, estimated with `resolution`
/// uniform darts drawn from the stream keyed by `seed`.
///
/// The two boundary masses are resolved geometrically rather than by darts:
/// θ = 1 exactly iff no co-pilot lies within `r_in + r_out`, and θ = 0
/// whenever a single protection disk swallows the whole coverage disk.
pub fn uncovered_fraction(
    user: Point,
    copilot_users: &PointSet,
    disks: DiskPair,
    resolution: usize,
    seed: u64,
) -> f64 {
    let mut rng = substream(seed, 0, Purpose::Darts);
    let window = copilot_users.window;
    let reach = disks.r_in + disks.r_out;
    let offsets: Vec<(f64, f64)> = copilot_users
        .points
        .iter()
        .map(|&c| window.delta(user, c))
        .filter(|&(dx, dy)| dx * dx + dy * dy < reach * reach)
        .collect();
    theta_from_offsets(&offsets, disks, resolution, &mut rng)
}

/// Core of the θ estimate. `offsets` are co-pilot positions relative to the
/// user, already restricted to distance below `r_in + r_out`.
fn theta_from_offsets(offsets: &[(f64, f64)], disks: DiskPair, resolution: usize, rng: &mut SimRng) -> f64 {
    if offsets.is_empty() {
        return 1.0;
    }
    let swallow = disks.r_out - disks.r_in;
    if offsets.iter().any(|&(dx, dy)| dx * dx + dy * dy <= swallow * swallow) {
        return 0.0;
    }
    let n = resolution.max(1);
    let ro2 = disks.r_out * disks.r_out;
    let origin = Point::default();
    let mut uncovered = 0usize;
    for _ in 0..n {
        let d = uniform_in_disk(rng, origin, disks.r_in);
        let covered = offsets.iter().any(|&(cx, cy)| {
            let ex = d.x - cx;
            let ey = d.y - cy;
            ex * ex + ey * ey < ro2
        });
        if !covered {
            uncovered += 1;
        }
    }
    let theta = uncovered as f64 / n as f64;
    // A co-pilot within reach always covers a positive area.
    theta.min(1.0 - 0.5 / n as f64)
}

/// One draw of θ for a typical user whose co-pilot users form a PPP of
/// intensity `lambda_copilot`. Only co-pilots within `r_in + r_out` matter,
/// so the process is sampled on that disk of the infinite plane.
pub fn theta_sample(lambda_copilot: f64, disks: DiskPair, resolution: usize, seed: u64, trial: u64) -> f64 {
    let mut drop = substream(seed, trial, Purpose::Drop);
    let reach = disks.r_in + disks.r_out;
    let n = poisson_count(&mut drop, lambda_copilot * PI * reach * reach);
    let origin = Point::default();
    let offsets: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let p = uniform_in_disk(&mut drop, origin, reach);
            (p.x, p.y)
        })
        .collect();
    let mut darts = substream(seed, trial, Purpose::Darts);
    theta_from_offsets(&offsets, disks, resolution, &mut darts)
}

/// Empirical distribution of the uncovered fraction θ.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaDistribution {
    pub samples: Vec<f64>,
    /// Empirical probability of θ = 0 exactly.
    pub mass_zero: f64,
    /// Empirical probability of θ = 1 exactly.
    pub mass_one: f64,
    /// Histogram over the open interval (0, 1), as probabilities (not densities).
    pub histogram: Vec<f64>,
}

impl ThetaDistribution {
    pub fn from_samples(samples: Vec<f64>, bins: usize) -> Self {
        let n = samples.len().max(1) as f64;
        let bins = bins.max(1);
        let mut histogram = alloc::vec![0.0; bins];
        let mut zero = 0usize;
        let mut one = 0usize;
        for &t in &samples {
            if t == 0.0 {
                zero += 1;
            } else if t == 1.0 {
                one += 1;
            } else {
                let b = ((t * bins as f64) as usize).min(bins - 1);
                histogram[b] += 1.0 / n;
            }
        }
        ThetaDistribution {
            mass_zero: zero as f64 / n,
            mass_one: one as f64 / n,
            histogram,
            samples,
        }
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len().max(1) as f64
    }

    /// Sample average of `g(θ)`.
    pub fn expect<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.samples.iter().map(|&t| g(t)).sum::<f64>() / self.samples.len().max(1) as f64
    }

    /// Sample average of `g(θ)` with its standard error.
    pub fn expect_with_se<F: Fn(f64) -> f64>(&self, g: F) -> (f64, f64) {
        let n = self.samples.len().max(1) as f64;
        let (s, s2) = self.samples.iter().fold((0.0, 0.0), |(s, s2), &t| {
            let v = g(t);
            (s + v, s2 + v * v)
        });
        let mean = s / n;
        let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
        (mean, sqrt(var / n))
    }
}

/// Default number of dart samples per θ estimate.
pub const DEFAULT_DARTS: usize = 4096;

/// Sequential estimate of the θ distribution (see [`theta_sample`]).
pub fn estimate_theta_pdf(
    lambda_copilot: f64,
    disks: DiskPair,
    trials: usize,
    rng_seed: u64,
    resolution: usize,
) -> Result<ThetaDistribution> {
    if !(lambda_copilot >= 0.0) {
        return Err(Error::param("lambda_copilot", "must be non-negative"));
    }
    let samples = (0..trials as u64)
        .map(|t| theta_sample(lambda_copilot, disks, resolution, rng_seed, t))
        .collect();
    Ok(ThetaDistribution::from_samples(samples, 50))
}

/// Uniform bucket grid for neighbour queries under the window metric.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    window: Window,
    cells_per_side: usize,
    cell: f64,
    buckets: Vec<Vec<usize>>,
}

impl SpatialGrid {
    /// Buckets `points` into cells no smaller than `min_cell` km.
    pub fn new(window: Window, points: &[Point], min_cell: f64) -> Self {
        let side = window.side();
        let cells_per_side = ((side / min_cell.max(1e-9)) as usize).clamp(1, 1024);
        let cell = side / cells_per_side as f64;
        let mut buckets = alloc::vec![Vec::new(); cells_per_side * cells_per_side];
        for (i, p) in points.iter().enumerate() {
            let (cx, cy) = Self::cell_of(window, cell, cells_per_side, *p);
            buckets[cy * cells_per_side + cx].push(i);
        }
        SpatialGrid { window, cells_per_side, cell, buckets }
    }

    fn cell_of(window: Window, cell: f64, n: usize, p: Point) -> (usize, usize) {
        let h = window.half_width();
        let cx = (((p.x + h) / cell) as isize).clamp(0, n as isize - 1) as usize;
        let cy = (((p.y + h) / cell) as isize).clamp(0, n as isize - 1) as usize;
        (cx, cy)
    }

    /// Index and squared distance of the stored point nearest to `center`.
    pub fn nearest(&self, center: Point, points: &[Point]) -> Option<(usize, f64)> {
        if points.is_empty() {
            return None;
        }
        let mut radius = self.cell;
        loop {
            let mut best: Option<(usize, f64)> = None;
            self.for_each_candidate(center, radius, |i| {
                let d2 = self.window.distance2(center, points[i]);
                if best.is_none_or(|(_, b)| d2 < b) {
                    best = Some((i, d2));
                }
            });
            // Cells within `radius` are fully scanned, so a hit inside it is exact.
            if let Some((i, d2)) = best {
                if d2 <= radius * radius || radius >= self.window.side() {
                    return Some((i, d2));
                }
            }
            radius *= 2.0;
        }
    }

    /// Calls `visit(index)` for every stored point that may lie within
    /// `radius` of `center` (a superset; callers test the exact distance).
    pub fn for_each_candidate<F: FnMut(usize)>(&self, center: Point, radius: f64, mut visit: F) {
        let n = self.cells_per_side as isize;
        let reach = libm::ceil(radius / self.cell) as isize;
        let (cx, cy) = Self::cell_of(self.window, self.cell, self.cells_per_side, center);
        let torus = matches!(self.window.boundary(), BoundaryMode::Torus);
        if 2 * reach + 1 >= n {
            for bucket in &self.buckets {
                bucket.iter().for_each(|&i| visit(i));
            }
            return;
        }
        for oy in -reach..=reach {
            for ox in -reach..=reach {
                let mut x = cx as isize + ox;
                let mut y = cy as isize + oy;
                if torus {
                    x = x.rem_euclid(n);
                    y = y.rem_euclid(n);
                } else if x < 0 || y < 0 || x >= n || y >= n {
                    continue;
                }
                self.buckets[(y * n + x) as usize].iter().for_each(|&i| visit(i));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Intersection area of two circles with radii `a`, `b` at distance `d`.
    fn lens_area(a: f64, b: f64, d: f64) -> f64 {
        if d >= a + b {
            return 0.0;
        }
        if d <= (a - b).abs() {
            let r = a.min(b);
            return PI * r * r;
        }
        let alpha = ((d * d + a * a - b * b) / (2.0 * d * a)).acos();
        let beta = ((d * d + b * b - a * a) / (2.0 * d * b)).acos();
        a * a * alpha + b * b * beta - 0.5 * ((-d + a + b) * (d + a - b) * (d - a + b) * (d + a + b)).sqrt()
    }

    fn one_point(window: Window, p: Point) -> PointSet {
        PointSet { window, points: alloc::vec![p], density: 1.0 }
    }

    #[test]
    fn zero_density_gives_empty_set() {
        let w = Window::torus(5.0).unwrap();
        assert!(sample_ppp(0.0, w, 1).unwrap().is_empty());
    }

    #[test]
    fn negative_density_is_rejected() {
        let w = Window::torus(5.0).unwrap();
        assert!(matches!(sample_ppp(-1.0, w, 1), Err(Error::Parameter { .. })));
    }

    #[test]
    fn points_stay_inside_window() {
        let w = Window::torus(1.5).unwrap();
        let s = sample_ppp(50.0, w, 3).unwrap();
        assert!(s.points.iter().all(|&p| w.contains(p)));
    }

    #[test]
    fn void_probability_unit_square() {
        // density 1 on a 1×1 window: P(empty) = e^{-1}
        let w = Window::torus(0.5).unwrap();
        let n = 100_000u64;
        let empty = (0..n)
            .filter(|&s| {
                let mut rng = substream(99, s, Purpose::Drop);
                sample_ppp_with(&mut rng, 1.0, w).unwrap().is_empty()
            })
            .count();
        let p = empty as f64 / n as f64;
        assert!((p - (-1.0f64).exp()).abs() < 0.01 * (-1.0f64).exp() * 1.0 + 0.0037, "p = {p}");
    }

    #[test]
    fn count_dispersion_matches_poisson() {
        // 31.8 /km² on a 10×10 km torus: mean 3180, variance ≈ mean.
        let w = Window::torus(5.0).unwrap();
        let draws = 10_000u64;
        let counts: std::vec::Vec<f64> = (0..draws)
            .map(|s| {
                let mut rng = substream(5, s, Purpose::Drop);
                poisson_count(&mut rng, 31.8 * w.area()) as f64
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / draws as f64;
        let var = counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (draws as f64 - 1.0);
        assert!((mean - 3180.0).abs() < 3.0 * (3180.0f64 / draws as f64).sqrt());
        // Var of the sample variance of a Poisson ≈ (μ + 2μ²)/(n−1).
        let sd_var = ((3180.0 + 2.0 * 3180.0f64 * 3180.0) / (draws as f64 - 1.0)).sqrt();
        assert!((var - 3180.0).abs() < 3.0 * sd_var, "var = {var}");
    }

    #[test]
    fn theta_without_copilots_is_one() {
        let w = Window::torus(2.0).unwrap();
        let d = DiskPair::new(0.4, 0.25).unwrap();
        assert_eq!(uncovered_fraction(Point::default(), &PointSet::empty(w, 0.0), d, 4096, 1), 1.0);
    }

    #[test]
    fn theta_with_colocated_copilot_is_zero() {
        let w = Window::torus(2.0).unwrap();
        let d = DiskPair::new(0.4, 0.0).unwrap();
        let p = Point::new(0.3, -0.2);
        assert_eq!(uncovered_fraction(p, &one_point(w, p), d, 4096, 1), 0.0);
    }

    #[test]
    fn theta_matches_lens_oracle() {
        let w = Window::torus(3.0).unwrap();
        let d = DiskPair::new(0.4, 0.25).unwrap();
        let res = 200_000;
        for &dist in &[0.2, 0.5, 0.8, 0.9 - 1e-3] {
            let t = uncovered_fraction(Point::default(), &one_point(w, Point::new(dist, 0.0)), d, res, 11);
            let exact = 1.0 - lens_area(0.4, 0.5, dist) / (PI * 0.16);
            let se = (exact * (1.0 - exact) / res as f64).sqrt().max(0.5 / res as f64);
            assert!((t - exact).abs() < 4.0 * se + 1e-12, "d={dist} t={t} exact={exact}");
        }
        // Just inside the reach the fraction approaches 1 from below.
        let t = uncovered_fraction(Point::default(), &one_point(w, Point::new(0.9 - 1e-6, 0.0)), d, 4096, 2);
        assert!(t < 1.0 && t > 0.999);
    }

    #[test]
    fn theta_wraps_on_torus() {
        let w = Window::torus(1.0).unwrap();
        let d = DiskPair::new(0.2, 0.0).unwrap();
        let a = uncovered_fraction(Point::new(0.95, 0.0), &one_point(w, Point::new(-0.95, 0.0)), d, 50_000, 4);
        let b = uncovered_fraction(Point::new(0.0, 0.0), &one_point(w, Point::new(0.1, 0.0)), d, 50_000, 4);
        assert_eq!(a, b);
    }

    #[test]
    fn adding_copilots_never_uncovers() {
        let w = Window::torus(2.0).unwrap();
        let d = DiskPair::new(0.3, 0.2).unwrap();
        let mut set = PointSet::empty(w, 1.0);
        let mut prev = 1.0;
        for p in [Point::new(0.5, 0.1), Point::new(-0.2, 0.4), Point::new(0.0, -0.45), Point::new(0.1, 0.1)] {
            set.points.push(p);
            let t = uncovered_fraction(Point::default(), &set, d, 8192, 9);
            assert!(t <= prev);
            prev = t;
        }
    }

    #[test]
    fn theta_pdf_limits() {
        let d = DiskPair::new(0.4, 0.25).unwrap();
        let none = estimate_theta_pdf(0.0, d, 1000, 3, 256).unwrap();
        assert_eq!(none.mass_one, 1.0);
        let dense = estimate_theta_pdf(200.0, d, 1000, 3, 256).unwrap();
        assert!(dense.mass_zero > 0.99);
    }

    #[test]
    fn theta_mass_at_one_matches_void_probability() {
        let d = DiskPair::from_radii(0.4, 0.5).unwrap();
        let trials = 20_000;
        let dist = estimate_theta_pdf(1.0, d, trials, 17, 64).unwrap();
        let p1 = (-PI * 0.81f64).exp();
        let se = (p1 * (1.0 - p1) / trials as f64).sqrt();
        assert!((dist.mass_one - p1).abs() < 3.0 * se, "{} vs {p1}", dist.mass_one);
        let total = dist.mass_zero + dist.mass_one + dist.histogram.iter().sum::<f64>();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn grid_finds_all_neighbours() {
        let w = Window::torus(1.0).unwrap();
        let mut rng = substream(1, 1, Purpose::Drop);
        let pts = sample_ppp_with(&mut rng, 200.0, w).unwrap().points;
        let grid = SpatialGrid::new(w, &pts, 0.15);
        let c = Point::new(0.97, -0.98);
        let mut found = std::vec::Vec::new();
        grid.for_each_candidate(c, 0.15, |i| {
            if w.distance(c, pts[i]) < 0.15 {
                found.push(i)
            }
        });
        found.sort();
        let brute: std::vec::Vec<usize> = (0..pts.len()).filter(|&i| w.distance(c, pts[i]) < 0.15).collect();
        assert_eq!(found, brute);
    }
}
