//! Integrals of even unimodal functions over `K` and over
//! `K_λ = λK + (1-λ)(-K)`, and the Brunn–Minkowski inequality, for
//! full-dimensional vertex polytopes in the plane and in space.
//!
//! Integrals are taken in polar form. Along a direction `u` the ray meets
//! `K` in `[r_in, r_out]`, and for `f(x) = ‖x‖_M^p` the radial part
//! integrates in closed form, so
//!
//! ```text
//! ∫_K f = ∫_{S^{n-1}} ρ_M(u)^{-p} (r_out^{p+n} - r_in^{p+n}) / (p+n) dH^{n-1}(u).
//! ```
//!
//! The spherical integrand is bounded, so the estimate keeps a finite
//! variance for every exponent in `(-n, 0)`, unlike sampling `f` itself.

use crate::bodies::SymmetricBody;
use crate::linalg::norm;
use crate::polytope::GeneralPolytopeV;
use crate::quadrature::{
    chunk_rng, derive_seed, draw_direction, map_chunks, merge_all, MeasureEstimate, Moments, QuadratureSpec, Stream,
};
use crate::special::sphere_area;
use crate::{Error, Result};
use rand::Rng;
use serde::Serialize;

/// Number of superlevel radii in the equality diagnostic.
pub const SUPERLEVEL_GRID: usize = 8;

/// Standard errors allowed below zero before an inequality fails.
pub const PASS_SIGMAS: f64 = 3.0;

/// Relative slack on top of the σ band for zero-variance comparisons.
const EXACT_SLACK: f64 = 1e-9;

/// An even function whose superlevel sets are dilates of a symmetric body.
#[derive(Clone, Debug)]
pub enum UnimodalFn {
    /// `|x|^p`; superlevel sets are balls.
    PowerRadial { p: f64 },
    /// `‖x‖_M^p = ρ_M(x)^{-p}`; superlevel sets are dilates of `M`.
    GaugePower { gauge: SymmetricBody, p: f64 },
}

impl UnimodalFn {
    pub fn power(p: f64) -> Self {
        UnimodalFn::PowerRadial { p }
    }

    pub fn p(&self) -> f64 {
        match self {
            UnimodalFn::PowerRadial { p } | UnimodalFn::GaugePower { p, .. } => *p,
        }
    }

    /// Local integrability near the origin requires `-n < p < 0`.
    pub fn check(&self, n: usize) -> Result<()> {
        let p = self.p();
        if !(p > -(n as f64) && p < 0.0) {
            return Err(Error::NonIntegrable { p, n });
        }
        if let UnimodalFn::GaugePower { gauge, .. } = self {
            if gauge.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: gauge.dim(),
                });
            }
        }
        Ok(())
    }

    /// `ρ_M(u)` for a unit `u` (1 for the Euclidean case).
    #[inline]
    fn gauge_radial(&self, u: &[f64]) -> f64 {
        match self {
            UnimodalFn::PowerRadial { .. } => 1.0,
            UnimodalFn::GaugePower { gauge, .. } => gauge.radial_unit(u),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let r = norm(x);
        let u: Vec<f64> = x.iter().map(|v| v / r).collect();
        (r / self.gauge_radial(&u)).powf(self.p())
    }

    /// Radius `R` with `{f ≥ α} = R·M`: `R = α^{1/p}`.
    pub fn superlevel_radius(&self, alpha: f64) -> f64 {
        alpha.powf(1.0 / self.p())
    }

    /// `∫_{r_in}^{r_out} f(r u) r^{n-1} dr` for a unit `u`.
    #[inline]
    fn ray_integral(&self, u: &[f64], interval: Option<(f64, f64)>, n: usize) -> f64 {
        let Some((lo, hi)) = interval else {
            return 0.0;
        };
        let p = self.p();
        let e = p + n as f64;
        self.gauge_radial(u).powf(-p) * (hi.powf(e) - lo.powf(e)) / e
    }
}

/// `∫_K f` by Monte Carlo over directions.
pub fn lemma_integral(body: &GeneralPolytopeV, f: &UnimodalFn, spec: &QuadratureSpec) -> Result<MeasureEstimate> {
    let n = body.dim();
    f.check(n)?;
    spec.validate()?;
    let chunks = map_chunks(spec, |c, _, len| {
        let mut rng = chunk_rng(spec.seed, c, Stream::Sphere);
        let mut u = vec![0.0; n];
        let mut m = Moments::default();
        for _ in 0..len {
            draw_direction(&mut rng, &mut u);
            m.push(f.ray_integral(&u, body.ray_interval(&u), n));
        }
        m
    });
    Ok(merge_all(&chunks).estimate(sphere_area(n), spec.seed))
}

/// `∫_K f` by uniform sampling in the bounding box, resampling the null
/// set `|x| < 1e-12`. Independent of [`lemma_integral`]; its variance is
/// infinite once `p ≤ -n/2`, so use it only as a cross-check.
pub fn lemma_integral_rejection(
    body: &GeneralPolytopeV,
    f: &UnimodalFn,
    spec: &QuadratureSpec,
) -> Result<MeasureEstimate> {
    let n = body.dim();
    f.check(n)?;
    spec.validate()?;
    let (lo, hi) = body.bounding_box();
    let box_volume: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    let chunks = map_chunks(spec, |c, _, len| {
        let mut rng = chunk_rng(spec.seed, c, Stream::Box);
        let mut x = vec![0.0; n];
        let mut m = Moments::default();
        for _ in 0..len {
            loop {
                for (xi, (a, b)) in x.iter_mut().zip(lo.iter().zip(&hi)) {
                    *xi = rng.random_range(*a..*b);
                }
                if norm(&x) >= 1e-12 {
                    break;
                }
            }
            m.push(if body.contains(&x) { f.value(&x) } else { 0.0 });
        }
        m
    });
    Ok(merge_all(&chunks).estimate(box_volume, spec.seed))
}

/// `vol(K ∩ R·M)` and `vol(K_λ ∩ R·M)` at one superlevel `α`.
#[derive(Clone, Debug, Serialize)]
pub struct SuperlevelRow {
    pub alpha: f64,
    pub radius: f64,
    pub lhs_volume: f64,
    pub rhs_volume: f64,
    pub diff_std_err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub lambda: f64,
    pub p: f64,
    /// `∫_{K_λ} f`.
    pub lhs: MeasureEstimate,
    /// `∫_K f`.
    pub rhs: MeasureEstimate,
    pub diff: f64,
    /// Standard error of the paired difference (both sides use the same
    /// directions).
    pub diff_std_err: f64,
    pub pass: bool,
    pub superlevel: Vec<SuperlevelRow>,
    /// When the two sides agree to within one standard error: whether the
    /// superlevel volumes also agree at every grid point (to 2σ).
    pub equality_consistent: Option<bool>,
}

/// Compares `∫_{λK+(1-λ)(-K)} f` with `∫_K f`.
pub fn lemma_check(body: &GeneralPolytopeV, lambda: f64, f: &UnimodalFn, spec: &QuadratureSpec) -> Result<LemmaReport> {
    let n = body.dim();
    f.check(n)?;
    spec.validate()?;
    let sym = body.minkowski_lambda(lambda)?;
    let p = f.p();
    let unit_radial_min = (0..n)
        .map(|i| f.gauge_radial(&crate::linalg::unit_vector(n, i)))
        .fold(f64::INFINITY, f64::min);
    let r_cap = body.max_norm().max(sym.max_norm()) / unit_radial_min;
    let radii: Vec<f64> = (1..=SUPERLEVEL_GRID)
        .map(|j| r_cap * j as f64 / SUPERLEVEL_GRID as f64)
        .collect();
    let rows = radii.len();

    struct Acc {
        lhs: Moments,
        rhs: Moments,
        diff: Moments,
        vol_lhs: Vec<Moments>,
        vol_rhs: Vec<Moments>,
        vol_diff: Vec<Moments>,
    }
    let chunks = map_chunks(spec, |c, _, len| {
        let mut rng = chunk_rng(spec.seed, c, Stream::Sphere);
        let mut u = vec![0.0; n];
        let mut acc = Acc {
            lhs: Moments::default(),
            rhs: Moments::default(),
            diff: Moments::default(),
            vol_lhs: vec![Moments::default(); rows],
            vol_rhs: vec![Moments::default(); rows],
            vol_diff: vec![Moments::default(); rows],
        };
        for _ in 0..len {
            draw_direction(&mut rng, &mut u);
            let a_int = sym.ray_interval(&u);
            let b_int = body.ray_interval(&u);
            let a = f.ray_integral(&u, a_int, n);
            let b = f.ray_integral(&u, b_int, n);
            acc.lhs.push(a);
            acc.rhs.push(b);
            acc.diff.push(a - b);
            let g = f.gauge_radial(&u);
            for (j, &radius) in radii.iter().enumerate() {
                let cap = radius * g;
                let va = clipped_ray_volume(a_int, cap, n);
                let vb = clipped_ray_volume(b_int, cap, n);
                acc.vol_lhs[j].push(va);
                acc.vol_rhs[j].push(vb);
                acc.vol_diff[j].push(va - vb);
            }
        }
        acc
    });
    let area = sphere_area(n);
    let lhs = merge_all(chunks.iter().map(|a| &a.lhs)).estimate(area, spec.seed);
    let rhs = merge_all(chunks.iter().map(|a| &a.rhs)).estimate(area, spec.seed);
    let diff = merge_all(chunks.iter().map(|a| &a.diff)).estimate(area, spec.seed);
    let superlevel: Vec<SuperlevelRow> = radii
        .iter()
        .enumerate()
        .map(|(j, &radius)| {
            let vl = merge_all(chunks.iter().map(|a| &a.vol_lhs[j])).estimate(area, spec.seed);
            let vr = merge_all(chunks.iter().map(|a| &a.vol_rhs[j])).estimate(area, spec.seed);
            let vd = merge_all(chunks.iter().map(|a| &a.vol_diff[j])).estimate(area, spec.seed);
            SuperlevelRow {
                alpha: radius.powf(p),
                radius,
                lhs_volume: vl.value,
                rhs_volume: vr.value,
                diff_std_err: vd.std_err,
            }
        })
        .collect();
    let slack = EXACT_SLACK * rhs.value.abs();
    let pass = diff.value >= -PASS_SIGMAS * diff.std_err - slack;
    let equality_consistent = (diff.value.abs() <= diff.std_err + slack).then(|| {
        superlevel.iter().all(|row| {
            let gap = (row.lhs_volume - row.rhs_volume).abs();
            gap <= 2.0 * row.diff_std_err + EXACT_SLACK * row.rhs_volume.abs().max(f64::MIN_POSITIVE)
        })
    });
    Ok(LemmaReport {
        lambda,
        p,
        lhs,
        rhs,
        diff: diff.value,
        diff_std_err: diff.std_err,
        pass,
        superlevel,
        equality_consistent,
    })
}

/// `∫ r^{n-1} dr` over the part of the ray interval below `cap`.
#[inline]
fn clipped_ray_volume(interval: Option<(f64, f64)>, cap: f64, n: usize) -> f64 {
    match interval {
        Some((lo, hi)) if lo < cap => (hi.min(cap).powi(n as i32) - lo.powi(n as i32)) / n as f64,
        _ => 0.0,
    }
}

/// Uniform-box Monte Carlo volume with membership by the facet inequalities.
pub fn mc_volume(body: &GeneralPolytopeV, spec: &QuadratureSpec) -> Result<MeasureEstimate> {
    spec.validate()?;
    let n = body.dim();
    let (lo, hi) = body.bounding_box();
    let box_volume: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    let chunks = map_chunks(spec, |c, _, len| {
        let mut rng = chunk_rng(spec.seed, c, Stream::Box);
        let mut x = vec![0.0; n];
        let mut m = Moments::default();
        for _ in 0..len {
            for (xi, (a, b)) in x.iter_mut().zip(lo.iter().zip(&hi)) {
                *xi = rng.random_range(*a..*b);
            }
            m.push(if body.contains(&x) { 1.0 } else { 0.0 });
        }
        m
    });
    Ok(merge_all(&chunks).estimate(box_volume, spec.seed))
}

#[derive(Clone, Debug, Serialize)]
pub struct BrunnMinkowskiReport {
    pub lambda: f64,
    /// `vol((1-λ)K₀ + λK₁)^{1/n}` from Monte Carlo volumes.
    pub lhs: f64,
    /// `(1-λ) vol(K₀)^{1/n} + λ vol(K₁)^{1/n}` from Monte Carlo volumes.
    pub rhs: f64,
    /// Combined standard error of `lhs - rhs` (delta method, independent
    /// volume estimates).
    pub std_err: f64,
    pub exact_lhs: f64,
    pub exact_rhs: f64,
    /// `K₁ = t + μ K₀` with `μ ≥ 0`, least-squares residual below `1e-9`.
    pub homothetic: bool,
    /// `|lhs - rhs|` within the σ band.
    pub equality: bool,
    pub pass: bool,
}

/// Homothety fit residual threshold.
pub const HOMOTHETY_TOL: f64 = 1e-9;

pub fn brunn_minkowski_check(
    k0: &GeneralPolytopeV,
    k1: &GeneralPolytopeV,
    lambda: f64,
    spec: &QuadratureSpec,
) -> Result<BrunnMinkowskiReport> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must lie in (0, 1)")));
    }
    let n = k0.dim();
    let mix = k0.minkowski_combination(1.0 - lambda, k1, lambda)?;
    let inv = 1.0 / n as f64;
    let v_mix = mc_volume(&mix, &spec.with_seed(derive_seed(spec.seed, 0)))?;
    let v0 = mc_volume(k0, &spec.with_seed(derive_seed(spec.seed, 1)))?;
    let v1 = mc_volume(k1, &spec.with_seed(derive_seed(spec.seed, 2)))?;
    // d(v^{1/n}) = (1/n) v^{1/n - 1} dv
    let root_se = |v: &MeasureEstimate| inv * v.value.powf(inv - 1.0) * v.std_err;
    let lhs = v_mix.value.powf(inv);
    let rhs = (1.0 - lambda) * v0.value.powf(inv) + lambda * v1.value.powf(inv);
    let std_err = (root_se(&v_mix).powi(2)
        + ((1.0 - lambda) * root_se(&v0)).powi(2)
        + (lambda * root_se(&v1)).powi(2))
    .sqrt();
    let exact_lhs = mix.volume().powf(inv);
    let exact_rhs = (1.0 - lambda) * k0.volume().powf(inv) + lambda * k1.volume().powf(inv);
    let homothetic = k0
        .homothety_to(k1)
        .is_some_and(|(_, mu, rms)| mu >= 0.0 && rms < HOMOTHETY_TOL);
    let slack = EXACT_SLACK * rhs.abs();
    Ok(BrunnMinkowskiReport {
        lambda,
        lhs,
        rhs,
        std_err,
        exact_lhs,
        exact_rhs,
        homothetic,
        equality: (lhs - rhs).abs() <= PASS_SIGMAS * std_err + slack,
        pass: lhs - rhs >= -PASS_SIGMAS * std_err - slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::new(200_000, 3)
    }

    #[test]
    fn integrability_band() {
        let sq = GeneralPolytopeV::from_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        assert!(matches!(
            lemma_integral(&sq, &UnimodalFn::power(-2.0), &spec()),
            Err(Error::NonIntegrable { .. })
        ));
        assert!(lemma_integral(&sq, &UnimodalFn::power(0.5), &spec()).is_err());
    }

    #[test]
    fn centred_square_reciprocal_norm() {
        let sq = GeneralPolytopeV::from_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let est = lemma_integral(&sq, &UnimodalFn::power(-1.0), &spec()).unwrap();
        let exact = 8.0 * (1.0 + 2f64.sqrt()).ln();
        assert!(est.within(exact, 4.0), "{est:?} vs {exact}");
    }

    #[test]
    fn symmetric_body_gives_equal_sides() {
        let sq = GeneralPolytopeV::from_box(&[-1.0, -0.5], &[1.0, 0.5]).unwrap();
        let r = lemma_check(&sq, 0.3, &UnimodalFn::power(-1.0), &spec()).unwrap();
        assert!(r.pass);
        assert!(r.diff.abs() < 1e-9);
        assert_eq!(r.equality_consistent, Some(true));
    }

    #[test]
    fn superlevel_radius_inverts_power() {
        let f = UnimodalFn::power(-1.5);
        let r = f.superlevel_radius(0.2);
        assert!((f.value(&[r, 0.0]) - 0.2).abs() < 1e-14);
    }

    #[test]
    fn clipped_volume() {
        assert_eq!(clipped_ray_volume(Some((0.0, 2.0)), 1.0, 2), 0.5);
        assert_eq!(clipped_ray_volume(Some((1.5, 2.0)), 1.0, 2), 0.0);
        assert_eq!(clipped_ray_volume(None, 1.0, 2), 0.0);
    }

    #[test]
    fn homothetic_squares() {
        let a = GeneralPolytopeV::from_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let b = GeneralPolytopeV::from_box(&[-2.0, -2.0], &[2.0, 2.0]).unwrap();
        let r = brunn_minkowski_check(&a, &b, 0.5, &QuadratureSpec::new(10_000, 1)).unwrap();
        assert!(r.homothetic && r.equality && r.pass);
        assert!((r.lhs - 3.0).abs() < 1e-12 && (r.rhs - 3.0).abs() < 1e-12);
    }
}
