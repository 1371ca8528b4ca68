//! Monte Carlo estimates of the expected distance between two random points.
//!
//! Every space here is homogeneous, so by default one point is random and the
//! other is the base point (the identity coset or the north pole). Work is
//! split into `workers` contiguous chunks, chunk `c` drawing from
//! `RngStream(seed, c)`; per-chunk `(count, mean, M2)` summaries are merged in
//! chunk order, so a fixed `(seed, workers, n)` reproduces every bit whether
//! the chunks run on rayon or sequentially.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flagspec::{isotropy_group, FiniteIsotropy, FlagSpec};
use crate::orthogonal::{
    geodesic_distance, random_special_orthogonal_with, Orthogonalization, Rotation, RngStream,
};

/// A space whose expected distance can be estimated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Space {
    /// `SO(n)` itself.
    SpecialOrthogonal(usize),
    /// `Fl((1,…,1); P)`, the quotient of `SO(n)` by a finite sign group.
    FiniteFlag(FlagSpec),
    /// `S² = Fl((1,2); {{1},{2}})`.
    Sphere2,
    /// `ℝP² = Fl((1,2); {{1,2}})`.
    ProjectivePlane2,
    /// `Fl((n); {{1}}) = SO(n)/SO(n)`, a single point.
    Point(usize),
}

impl Space {
    pub fn so3() -> Self {
        Space::SpecialOrthogonal(3)
    }

    /// `Fl((1,1,1); {{1,2,3}})`, the manifold of complete flags in ℝ³.
    pub fn full_flag() -> Self {
        Space::FiniteFlag(FlagSpec::with_trivial(&[1, 1, 1]).expect("valid"))
    }

    /// `Fl((1,1,1); P_i)` with `P_i = {{i}, rest}`, `i ∈ {1, 2, 3}`.
    pub fn partial_flag(i: usize) -> Result<Self> {
        let rest: Vec<usize> = (1..=3).filter(|&j| j != i).collect();
        if rest.len() != 2 {
            return Err(Error::InvalidArgument(format!("partial flag index {i} not in 1..=3")));
        }
        Ok(Space::FiniteFlag(FlagSpec::from_parts(&[1, 1, 1], &[&[i], &rest])?))
    }

    pub fn trivial_flag() -> Self {
        Space::Point(3)
    }

    /// Maps a flag spec onto the variant that can sample it.
    pub fn from_flag_spec(spec: &FlagSpec) -> Result<Self> {
        let parts = spec.lambda().parts();
        if spec.lambda().is_all_ones() {
            return Ok(Space::FiniteFlag(spec.clone()));
        }
        if parts.len() == 1 {
            return Ok(Space::Point(parts[0]));
        }
        if parts == [1, 2] || parts == [2, 1] {
            return Ok(if spec.partition().len() == 2 {
                Space::Sphere2
            } else {
                Space::ProjectivePlane2
            });
        }
        Err(Error::UnsupportedSpace(format!(
            "{spec}: isotropy is not finite and no specialized sampler exists"
        )))
    }

    /// A flag spec naming this space (`SO(n)` is the complete partition of `1ⁿ`).
    pub fn flag_spec(&self) -> FlagSpec {
        match self {
            Space::SpecialOrthogonal(n) => FlagSpec::with_complete(&vec![1; *n]).expect("n >= 1"),
            Space::FiniteFlag(spec) => spec.clone(),
            Space::Sphere2 => FlagSpec::with_complete(&[1, 2]).expect("valid"),
            Space::ProjectivePlane2 => FlagSpec::with_trivial(&[1, 2]).expect("valid"),
            Space::Point(n) => FlagSpec::with_trivial(&[*n]).expect("n >= 1"),
        }
    }

    /// Dimension `n` of the ambient rotation group.
    pub fn ambient_dim(&self) -> usize {
        match self {
            Space::SpecialOrthogonal(n) | Space::Point(n) => *n,
            Space::FiniteFlag(spec) => spec.n(),
            Space::Sphere2 | Space::ProjectivePlane2 => 3,
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::SpecialOrthogonal(n) => write!(f, "so{n}"),
            Space::FiniteFlag(spec) => write!(f, "{spec}"),
            Space::Sphere2 => write!(f, "s2"),
            Space::ProjectivePlane2 => write!(f, "rp2"),
            Space::Point(n) => write!(f, "lambda={n} P={{1}}"),
        }
    }
}

impl FromStr for Space {
    type Err = Error;

    /// Aliases `so3` (any `so<n>`), `s2`, `rp2`, `full-flag`,
    /// `partial-flag-1/2/3`, `trivial-flag`, or flag-spec text such as
    /// `lambda=1,1,1 P={1}{2,3}`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "s2" => return Ok(Space::Sphere2),
            "rp2" => return Ok(Space::ProjectivePlane2),
            "full-flag" => return Ok(Space::full_flag()),
            "trivial-flag" => return Ok(Space::trivial_flag()),
            _ => {}
        }
        if let Some(i) = s.strip_prefix("partial-flag-") {
            let i = i
                .parse()
                .map_err(|_| Error::Parse(format!("bad partial flag index in {s:?}")))?;
            return Space::partial_flag(i).map_err(|e| Error::Parse(e.to_string()));
        }
        if let Some(n) = s.strip_prefix("so") {
            let n: usize = n
                .parse()
                .map_err(|_| Error::Parse(format!("bad dimension in {s:?}")))?;
            if n == 0 {
                return Err(Error::Parse("so0 is not a group".into()));
            }
            return Ok(Space::SpecialOrthogonal(n));
        }
        if s.contains("lambda=") {
            let spec: FlagSpec = s.parse()?;
            return Space::from_flag_spec(&spec);
        }
        Err(Error::Parse(format!("unknown space {s:?}")))
    }
}

/// Result of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    /// Sample standard deviation over `√n`.
    pub stderr: f64,
    #[serde(rename = "n")]
    pub n_samples: u64,
    pub seed: u64,
}

/// Streaming `(count, mean, M2)` summary.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Combines two summaries as if their samples had been pushed together.
    pub fn merge(&self, other: &RunningStats) -> RunningStats {
        if other.count == 0 {
            return *self;
        }
        if self.count == 0 {
            return *other;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let weight = other.count as f64 / count as f64;
        RunningStats {
            count,
            mean: self.mean + delta * weight,
            m2: self.m2 + other.m2 + delta * delta * self.count as f64 * weight,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Where chunks run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon when the `parallel` feature is enabled, sequential otherwise.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateConfig {
    pub n_samples: u64,
    pub seed: u64,
    pub workers: usize,
    /// Draw both points at random instead of fixing one at the base point.
    pub two_point: bool,
    pub orthogonalization: Orthogonalization,
    pub execution: Execution,
}

impl EstimateConfig {
    pub fn new(n_samples: u64, seed: u64) -> Self {
        Self {
            n_samples,
            seed,
            workers: 1,
            two_point: false,
            orthogonalization: Orthogonalization::default(),
            execution: Execution::default(),
        }
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn two_point(mut self, two_point: bool) -> Self {
        self.two_point = two_point;
        self
    }

    pub fn orthogonalization(mut self, method: Orthogonalization) -> Self {
        self.orthogonalization = method;
        self
    }

    pub fn execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidArgument("workers must be at least 1".into()));
        }
        Ok(())
    }

    /// `(stream id, sample count)` per chunk; sizes differ by at most one.
    fn chunks(&self) -> Vec<(u64, u64)> {
        let w = self.workers as u64;
        let base = self.n_samples / w;
        let extra = self.n_samples % w;
        (0..w).map(|c| (c, base + u64::from(c < extra))).collect()
    }
}

/// Distance between the cosets `aH` and `bH`: `min_{h ∈ H} d(a·h, b)`.
pub fn quotient_distance(a: &Rotation, b: &Rotation, h: &FiniteIsotropy) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    if a.dim() != h.dim() {
        return Err(Error::DimensionMismatch(a.dim(), h.dim()));
    }
    let mut best = f64::INFINITY;
    for g in h.elements() {
        best = best.min(geodesic_distance(&a.compose(g), b)?);
    }
    Ok(best)
}

/// Uniform point on `S²` from a normalized standard Gaussian 3-vector.
pub fn sphere_point<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        if let Ok(unit) = normalize3(v) {
            return unit;
        }
    }
}

/// Scales `v` to unit length; rejects vectors too short to normalize.
pub fn normalize3(v: [f64; 3]) -> Result<[f64; 3]> {
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !(norm > 1e-12 && norm.is_finite()) {
        return Err(Error::NotUnit(norm));
    }
    Ok([v[0] / norm, v[1] / norm, v[2] / norm])
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Great-circle distance on `S²`.
pub fn sphere_distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    dot3(a, b).clamp(-1.0, 1.0).acos()
}

/// Distance on `ℝP²` between the lines through `a` and `b`.
pub fn projective_distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    dot3(a, b).abs().min(1.0).acos()
}

pub const NORTH_POLE: [f64; 3] = [0.0, 0.0, 1.0];

enum Sampler {
    Quotient {
        n: usize,
        group: FiniteIsotropy,
        base: Rotation,
    },
    Sphere,
    Projective,
    Point,
}

impl Sampler {
    fn for_space(space: &Space) -> Result<Self> {
        Ok(match space {
            Space::SpecialOrthogonal(n) => {
                if *n == 0 {
                    return Err(Error::InvalidDimension(0));
                }
                Sampler::Quotient {
                    n: *n,
                    group: FiniteIsotropy::trivial(*n),
                    base: Rotation::identity(*n),
                }
            }
            Space::FiniteFlag(spec) => Sampler::Quotient {
                n: spec.n(),
                group: isotropy_group(spec)?,
                base: Rotation::identity(spec.n()),
            },
            Space::Sphere2 => Sampler::Sphere,
            Space::ProjectivePlane2 => Sampler::Projective,
            Space::Point(_) => Sampler::Point,
        })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, cfg: &EstimateConfig) -> Result<f64> {
        match self {
            Sampler::Quotient { n, group, base } => {
                let a = random_special_orthogonal_with(*n, rng, cfg.orthogonalization)?;
                if cfg.two_point {
                    let b = random_special_orthogonal_with(*n, rng, cfg.orthogonalization)?;
                    quotient_distance(&a, &b, group)
                } else {
                    quotient_distance(&a, base, group)
                }
            }
            Sampler::Sphere | Sampler::Projective => {
                let v = sphere_point(rng);
                let w = if cfg.two_point { sphere_point(rng) } else { NORTH_POLE };
                Ok(match self {
                    Sampler::Sphere => sphere_distance(&v, &w),
                    _ => projective_distance(&v, &w),
                })
            }
            Sampler::Point => Ok(0.0),
        }
    }
}

fn run_chunks<T, F>(chunks: &[(u64, u64)], execution: Execution, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, u64) -> Result<T> + Sync,
{
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            chunks.par_iter().map(|&(id, len)| f(id, len)).collect()
        }
        _ => chunks.iter().map(|&(id, len)| f(id, len)).collect(),
    }
}

/// Every per-sample distance, in chunk order.
pub fn distance_samples(space: &Space, cfg: &EstimateConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let sampler = Sampler::for_space(space)?;
    let parts = run_chunks(&cfg.chunks(), cfg.execution, |stream, len| {
        let mut rng = RngStream::new(cfg.seed, stream);
        (0..len).map(|_| sampler.draw(&mut rng, cfg)).collect::<Result<Vec<f64>>>()
    })?;
    Ok(parts.concat())
}

/// Mean and standard error of the distance over `cfg.n_samples` draws.
pub fn estimate_with(space: &Space, cfg: &EstimateConfig) -> Result<Estimate> {
    cfg.validate()?;
    let sampler = Sampler::for_space(space)?;
    let parts = run_chunks(&cfg.chunks(), cfg.execution, |stream, len| {
        let mut rng = RngStream::new(cfg.seed, stream);
        let mut stats = RunningStats::default();
        for _ in 0..len {
            stats.push(sampler.draw(&mut rng, cfg)?);
        }
        Ok(stats)
    })?;
    let stats = parts
        .iter()
        .fold(RunningStats::default(), |acc, s| acc.merge(s));
    Ok(Estimate {
        mean: stats.mean(),
        stderr: stats.stderr(),
        n_samples: stats.count(),
        seed: cfg.seed,
    })
}

/// Single-random-point estimate with default orthogonalization.
pub fn estimate_expected_distance(space: &Space, n_samples: u64, seed: u64, workers: usize) -> Result<Estimate> {
    estimate_with(space, &EstimateConfig::new(n_samples, seed).workers(workers))
}
