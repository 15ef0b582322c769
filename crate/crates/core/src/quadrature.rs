//! Seeded Monte Carlo on the sphere and graded Gauss–Legendre rules on the
//! unit square.
//!
//! Sampling is organised in fixed-size chunks. Chunk `c` draws from the
//! ChaCha8 stream `c` of the generator seeded with `spec.seed`, and chunk
//! statistics are merged in chunk order, so every estimate is a pure
//! function of the `QuadratureSpec` no matter how many worker threads evaluate the
//! chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::Direction;
use crate::special::sphere_area;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub samples: u64,
    pub seed: u64,
    pub chunk: u64,
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            samples: 100_000,
            seed: 0,
            chunk: 4096,
            rel_tol: 1e-9,
        }
    }
}

impl QuadratureSpec {
    pub fn new(samples: u64, seed: u64) -> Self {
        QuadratureSpec {
            samples,
            seed,
            ..Default::default()
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        QuadratureSpec { seed, ..self }
    }

    pub fn with_samples(self, samples: u64) -> Self {
        QuadratureSpec { samples, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidParameter("samples must be at least 1".into()));
        }
        if self.chunk == 0 {
            return Err(Error::InvalidParameter("chunk must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter("rel_tol must be positive".into()));
        }
        Ok(())
    }

    fn chunk_count(&self) -> u64 {
        self.samples.div_ceil(self.chunk)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub value: f64,
    pub std_err: f64,
    pub samples: u64,
    pub seed: u64,
}

impl MeasureEstimate {
    /// `|self - other| / sqrt(σ₁² + σ₂²)`, the gap in combined standard errors.
    pub fn sigmas_from(&self, other: &MeasureEstimate) -> f64 {
        let combined = self.std_err.hypot(other.std_err);
        (self.value - other.value).abs() / combined
    }

    pub fn within(&self, expected: f64, k: f64) -> bool {
        (self.value - expected).abs() <= k * self.std_err
    }
}

/// Mixes `index` into `master` with the SplitMix64 finalizer.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Which family of ChaCha streams a sampler draws from. Keeps the sphere
/// sampler and the box sampler statistically independent under one seed.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Stream {
    Sphere,
    Box,
}

pub(crate) fn chunk_rng(seed: u64, chunk: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = match stream {
        Stream::Sphere => chunk,
        Stream::Box => chunk | (1 << 63),
    };
    rng.set_stream(id);
    rng
}

/// Evaluates `work(chunk_index, first_sample, len)` for every chunk and
/// returns the results in chunk order.
pub(crate) fn map_chunks<T, F>(spec: &QuadratureSpec, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64, u64) -> T + Sync + Send,
{
    let chunk = spec.chunk;
    let samples = spec.samples;
    (0..spec.chunk_count())
        .into_par_iter()
        .map(|c| {
            let start = c * chunk;
            let len = chunk.min(samples - start);
            work(c, start, len)
        })
        .collect()
}

/// Overwrites `out` with a uniform direction on `S^{n-1}` (normalized
/// standard Gaussian; the null vector is redrawn).
#[inline]
pub(crate) fn draw_direction(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    loop {
        let mut sq = 0.0;
        for x in out.iter_mut() {
            let g: f64 = StandardNormal.sample(rng);
            *x = g;
            sq += g * g;
        }
        if sq > 0.0 {
            let inv = 1.0 / sq.sqrt();
            out.iter_mut().for_each(|x| *x *= inv);
            return;
        }
    }
}

/// Running mean and centred second moment (Welford), mergeable in a fixed
/// order.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let total = self.count + other.count;
        let delta = other.mean - self.mean;
        let w = other.count as f64 / total as f64;
        self.mean += delta * w;
        self.m2 += other.m2 + delta * delta * self.count as f64 * w;
        self.count = total;
    }

    /// Standard error of the mean, `s / √N` with the unbiased `s`.
    pub fn std_err(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let var = (self.m2 / (self.count - 1) as f64).max(0.0);
        (var / self.count as f64).sqrt()
    }

    pub fn estimate(&self, scale: f64, seed: u64) -> MeasureEstimate {
        MeasureEstimate {
            value: scale * self.mean,
            std_err: scale.abs() * self.std_err(),
            samples: self.count,
            seed,
        }
    }
}

pub(crate) fn merge_all<'a>(parts: impl IntoIterator<Item = &'a Moments>) -> Moments {
    let mut total = Moments::default();
    for part in parts {
        total.merge(part);
    }
    total
}

/// The directions used by [`integrate_sphere`] for the same `(n, spec)`.
pub fn sample_sphere(n: usize, spec: &QuadratureSpec) -> Result<Vec<Direction>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("sphere dimension n = {n} < 2")));
    }
    spec.validate()?;
    let chunks = map_chunks(spec, |c, _, len| {
        let mut rng = chunk_rng(spec.seed, c, Stream::Sphere);
        let mut buf = vec![0.0; n];
        (0..len)
            .map(|_| {
                draw_direction(&mut rng, &mut buf);
                Direction::new_unchecked(buf.clone())
            })
            .collect::<Vec<_>>()
    });
    Ok(chunks.into_iter().flatten().collect())
}

/// Monte Carlo estimate of `∫_{S^{n-1}} f dH^{n-1}`: sphere area times the
/// sample mean of `f` over uniform directions.
pub fn integrate_sphere<F>(f: F, n: usize, spec: &QuadratureSpec) -> Result<MeasureEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if n < 2 {
        return Err(Error::InvalidParameter(format!("sphere dimension n = {n} < 2")));
    }
    spec.validate()?;
    let chunks = map_chunks(spec, |c, start, len| {
        let mut rng = chunk_rng(spec.seed, c, Stream::Sphere);
        let mut u = vec![0.0; n];
        let mut m = Moments::default();
        for i in 0..len {
            draw_direction(&mut rng, &mut u);
            let v = f(&u);
            if !v.is_finite() {
                return Err(Error::NonFinite { index: start + i });
            }
            m.push(v);
        }
        Ok(m)
    });
    let parts = chunks.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(merge_all(&parts).estimate(sphere_area(n), spec.seed))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// `∫_a^b f` with this rule mapped to `[a, b]`.
    #[inline]
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Largest cell-to-cell ratio treated as settled decay by the graded rule.
const SETTLED_RATIO: f64 = 0.75;

/// Refinement schedule of the graded rule: `(depth, order)` per level.
const GRADED_LEVELS: [(usize, usize); 8] = [
    (12, 8),
    (16, 12),
    (20, 16),
    (24, 20),
    (28, 24),
    (32, 28),
    (36, 32),
    (40, 36),
];

/// `∫_0^1 f` on the geometric grid `[2^{-(j+1)}, 2^{-j}]`.
///
/// At least `depth` cells are used. The grid keeps halving, up to
/// `2·depth` cells, until the cell integrals have decayed by a factor of at
/// most [`SETTLED_RATIO`] over `depth / 4` consecutive cells; this resolves
/// features at scales below `2^{-depth}`. The remaining cell at 0 is summed
/// as the geometric tail implied by the last two cells when their ratio lies
/// in `[0, 1)`, which is exact for power laws `s^a` with `a > -1`; otherwise
/// it is integrated with the plain rule.
fn graded_1d<F: FnMut(f64) -> f64>(mut f: F, depth: usize, gl: &GaussLegendre) -> f64 {
    let settle = (depth / 4).max(2);
    let mut total = 0.0;
    let mut prev = f64::NAN;
    let mut last = f64::NAN;
    let mut hi = 1.0f64;
    let mut settled = 0;
    let mut cells = 0;
    while cells < depth || (settled < settle && cells < 2 * depth) {
        let lo = 0.5 * hi;
        let cell = gl.integrate(lo, hi, &mut f);
        total += cell;
        prev = last;
        last = cell;
        hi = lo;
        cells += 1;
        let ratio = last / prev;
        let decayed = (last == 0.0 && prev == 0.0) || (0.0..=SETTLED_RATIO).contains(&ratio);
        settled = if decayed { settled + 1 } else { 0 };
    }
    let ratio = last / prev;
    let tail = if last == 0.0 {
        0.0
    } else if ratio.is_finite() && (0.0..1.0).contains(&ratio) {
        last * ratio / (1.0 - ratio)
    } else {
        gl.integrate(0.0, hi, &mut f)
    };
    total + tail
}

fn refine<F: FnMut(usize, &GaussLegendre) -> f64>(rel_tol: f64, mut level_value: F) -> Result<f64> {
    let mut history: Vec<f64> = Vec::with_capacity(GRADED_LEVELS.len());
    let mut last_change = f64::INFINITY;
    for &(depth, order) in GRADED_LEVELS.iter() {
        let gl = GaussLegendre::new(order);
        let v = level_value(depth, &gl);
        if !v.is_finite() {
            return Err(Error::NoConvergence {
                rel_tol,
                achieved: f64::INFINITY,
            });
        }
        history.push(v);
        let k = history.len();
        if k >= 3 {
            let scale = v.abs().max(f64::MIN_POSITIVE);
            let c1 = (history[k - 1] - history[k - 2]).abs() / scale;
            let c2 = (history[k - 2] - history[k - 3]).abs() / scale;
            last_change = c1;
            if c1 <= rel_tol && c2 <= rel_tol {
                return Ok(v);
            }
        }
    }
    Err(Error::NoConvergence {
        rel_tol,
        achieved: last_change,
    })
}

/// `∫_0^1 f(s) ds` for `f` continuous on `(0, 1]` with an integrable
/// singularity allowed at 0.
pub fn integrate_unit_interval<F: Fn(f64) -> f64>(f: F, spec: &QuadratureSpec) -> Result<f64> {
    refine(spec.rel_tol, |depth, gl| graded_1d(&f, depth, gl))
}

/// `∫_0^1 ∫_0^1 g(s, t) dt ds` by the tensorized graded Gauss–Legendre rule,
/// refined until three successive levels agree to `spec.rel_tol`.
pub fn integrate_unit_square<G: Fn(f64, f64) -> f64>(g: G, spec: &QuadratureSpec) -> Result<f64> {
    refine(spec.rel_tol, |depth, gl| {
        graded_1d(|s| graded_1d(|t| g(s, t), depth, gl), depth, gl)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let gl = GaussLegendre::new(6);
        let w: f64 = gl.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
        // degree 11 is the highest exact degree for 6 points
        let v = gl.integrate(0.0, 1.0, |x| x.powi(11));
        assert!((v - 1.0 / 12.0).abs() < 1e-15);
        let gl = GaussLegendre::new(36);
        let v = gl.integrate(0.0, 2.0, |x| x.powi(70));
        assert!((v / (2f64.powi(71) / 71.0) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn moments_merge_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut seq = Moments::default();
        xs.iter().for_each(|&x| seq.push(x));
        let mut parts = [Moments::default(), Moments::default(), Moments::default()];
        for (i, &x) in xs.iter().enumerate() {
            parts[(i * 3) / xs.len()].push(x);
        }
        let merged = merge_all(&parts);
        assert!((merged.mean - seq.mean).abs() < 1e-12);
        assert!((merged.m2 - seq.m2).abs() < 1e-9 * seq.m2);
    }

    #[test]
    fn zero_samples_rejected() {
        let spec = QuadratureSpec::new(0, 1);
        assert!(integrate_sphere(|_| 1.0, 3, &spec).is_err());
        assert!(sample_sphere(1, &QuadratureSpec::new(10, 1)).is_err());
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let spec = QuadratureSpec::new(100, 3);
        let err = integrate_sphere(|u| 1.0 / (u[0] - u[0]), 3, &spec).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 0 }));
    }

    #[test]
    fn divergent_integrand_does_not_converge() {
        let spec = QuadratureSpec::default();
        let err = integrate_unit_square(|s, _| 1.0 / s, &spec).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(7, 0);
        let b = derive_seed(7, 1);
        let c = derive_seed(8, 0);
        assert!(a != b && a != c && b != c);
        assert_eq!(derive_seed(7, 1), b);
    }
}
