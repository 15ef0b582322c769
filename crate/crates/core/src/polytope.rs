//! Vertex-described polytopes in the plane and in space, plus the
//! recursive face-volume routine shared with the exact cone-volume oracle.

use std::collections::HashSet;

use rand::Rng;

use crate::linalg::{dot, norm, normalized, orthonormalize, solve, sub};
use crate::{Error, Result};

/// `{x : ⟨normal, x⟩ ≤ offset}` with a unit normal.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperplane {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Hyperplane {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) - self.offset
    }
}

fn coordinate_scale(points: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .flatten()
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(f64::MIN_POSITIVE)
}

/// Orthonormal basis of the direction space of `aff{points[i] : i ∈ ids}`.
fn affine_basis(points: &[Vec<f64>], ids: &[usize], tol: f64) -> Vec<Vec<f64>> {
    let Some(&first) = ids.first() else {
        return Vec::new();
    };
    let diffs: Vec<Vec<f64>> = ids[1..]
        .iter()
        .map(|&i| sub(&points[i], &points[first]))
        .filter(|d| norm(d) > tol)
        .collect();
    orthonormalize(&diffs, 1e-9)
}

/// Volume of the face `conv{points[i] : i ∈ ids}` inside its own affine
/// hull, by coning over its facets from the vertex centroid:
/// `vol_d(P) = (1/d) Σ_G dist(c, aff G) vol_{d-1}(G)`.
///
/// Facets of the face are found as its intersections with `planes`, which
/// must contain every facet hyperplane of the full polytope. `tol` is the
/// absolute distance below which a point lies on a plane.
pub(crate) fn face_volume(points: &[Vec<f64>], ids: &[usize], planes: &[Hyperplane], tol: f64) -> f64 {
    let basis = affine_basis(points, ids, tol);
    let d = basis.len();
    match d {
        0 => return if ids.is_empty() { 0.0 } else { 1.0 },
        1 => {
            let proj = ids.iter().map(|&i| dot(&points[i], &basis[0]));
            let (lo, hi) = proj.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p), hi.max(p)));
            return hi - lo;
        }
        _ => {}
    }
    let n = points[ids[0]].len();
    let mut centroid = vec![0.0; n];
    for &i in ids {
        centroid.iter_mut().zip(&points[i]).for_each(|(c, x)| *c += x);
    }
    centroid.iter_mut().for_each(|c| *c /= ids.len() as f64);

    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut volume = 0.0;
    for plane in planes {
        let on: Vec<usize> = ids
            .iter()
            .copied()
            .filter(|&i| plane.eval(&points[i]).abs() <= tol)
            .collect();
        if on.len() < d || on.len() == ids.len() || seen.contains(&on) {
            continue;
        }
        if affine_basis(points, &on, tol).len() != d - 1 {
            continue;
        }
        let grad = basis.iter().map(|b| dot(&plane.normal, b).powi(2)).sum::<f64>().sqrt();
        if grad < 1e-12 {
            continue;
        }
        let dist = plane.eval(&centroid).abs() / grad;
        volume += dist * face_volume(points, &on, planes, tol);
        seen.insert(on);
    }
    volume / d as f64
}

/// Removes points closer than `tol` (max-norm) to an earlier point.
fn dedup_points(points: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for p in points {
        if !out
            .iter()
            .any(|q| q.iter().zip(p).all(|(a, b)| (a - b).abs() <= tol))
        {
            out.push(p.clone());
        }
    }
    out
}

fn cross2(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise hull vertices (Andrew's monotone chain), collinear
/// points dropped.
fn hull_2d(points: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let scale = coordinate_scale(&pts);
    let area_tol = tol * scale * scale;
    let mut lower: Vec<Vec<f64>> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross2(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= area_tol {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<Vec<f64>> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross2(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= area_tol {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn cross3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Facet hyperplanes of `conv(points)` in `R^3` by testing every
/// non-degenerate triple for a supporting plane.
fn hull_facets_3d(points: &[Vec<f64>], tol: f64) -> Vec<Hyperplane> {
    let m = points.len();
    let mut facets: Vec<Hyperplane> = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let eij = sub(&points[j], &points[i]);
            for k in j + 1..m {
                let eik = sub(&points[k], &points[i]);
                let c = cross3(&eij, &eik);
                if norm(&c) <= 1e-12 * norm(&eij) * norm(&eik) {
                    continue;
                }
                let Some(a) = normalized(&c) else { continue };
                let b = dot(&a, &points[i]);
                let (mut above, mut below) = (false, false);
                for p in points {
                    let s = dot(&a, p) - b;
                    above |= s > tol;
                    below |= s < -tol;
                    if above && below {
                        break;
                    }
                }
                let plane = match (above, below) {
                    (false, _) => Hyperplane { normal: a, offset: b },
                    (true, false) => Hyperplane {
                        normal: a.iter().map(|x| -x).collect(),
                        offset: -b,
                    },
                    (true, true) => continue,
                };
                let dup = facets.iter().any(|f| {
                    (f.offset - plane.offset).abs() <= tol
                        && f.normal.iter().zip(&plane.normal).all(|(x, y)| (x - y).abs() <= 1e-9)
                });
                if !dup {
                    facets.push(plane);
                }
            }
        }
    }
    facets
}

/// A full-dimensional polytope `conv(vertices)` in `R^2` or `R^3`, not
/// necessarily symmetric. The facet description is computed once at
/// construction and drives membership and ray queries.
#[derive(Clone, Debug)]
pub struct GeneralPolytopeV {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    extreme: Vec<Vec<f64>>,
    facets: Vec<Hyperplane>,
    scale: f64,
}

impl GeneralPolytopeV {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let n = vertices.first().map(Vec::len).unwrap_or(0);
        if !(n == 2 || n == 3) {
            return Err(Error::InvalidBody(format!(
                "vertex polytopes are supported in dimension 2 or 3, got {n}"
            )));
        }
        if let Some(v) = vertices.iter().find(|v| v.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidBody("vertex coordinates must be finite".into()));
        }
        let scale = coordinate_scale(&vertices);
        let tol = 1e-10 * scale;
        let pts = dedup_points(&vertices, tol);
        let ids: Vec<usize> = (0..pts.len()).collect();
        if affine_basis(&pts, &ids, tol).len() < n {
            return Err(Error::InvalidBody("vertices are not full-dimensional".into()));
        }
        let (extreme, facets) = if n == 2 {
            let ring = hull_2d(&pts, 1e-12);
            let facets = (0..ring.len())
                .map(|i| {
                    let p = &ring[i];
                    let q = &ring[(i + 1) % ring.len()];
                    let normal = normalized(&[q[1] - p[1], p[0] - q[0]]).expect("distinct hull vertices");
                    let offset = dot(&normal, p);
                    Hyperplane { normal, offset }
                })
                .collect();
            (ring, facets)
        } else {
            let facets = hull_facets_3d(&pts, tol);
            let extreme = pts
                .iter()
                .filter(|p| {
                    let active: Vec<Vec<f64>> = facets
                        .iter()
                        .filter(|f| f.eval(p).abs() <= tol)
                        .map(|f| f.normal.clone())
                        .collect();
                    orthonormalize(&active, 1e-9).len() == 3
                })
                .cloned()
                .collect();
            (extreme, facets)
        };
        Ok(GeneralPolytopeV {
            dim: n,
            vertices,
            extreme,
            facets,
            scale,
        })
    }

    /// Axis-parallel box `[lo₁, hi₁] × …`.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let n = lo.len();
        let vertices = (0..1usize << n)
            .map(|mask| {
                (0..n)
                    .map(|i| if mask & (1 << i) != 0 { hi[i] } else { lo[i] })
                    .collect()
            })
            .collect();
        GeneralPolytopeV::new(vertices)
    }

    /// Regular `m`-gon inscribed in the circle of the given radius.
    pub fn regular_polygon(m: usize, radius: f64) -> Result<Self> {
        let vertices = (0..m)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / m as f64;
                vec![radius * t.cos(), radius * t.sin()]
            })
            .collect();
        GeneralPolytopeV::new(vertices)
    }

    /// `conv` of `count` uniform points in `[lo, hi]^n`, redrawn until
    /// full-dimensional.
    pub fn random<R: Rng + ?Sized>(n: usize, count: usize, lo: f64, hi: f64, rng: &mut R) -> Self {
        loop {
            let pts = (0..count)
                .map(|_| (0..n).map(|_| rng.random_range(lo..hi)).collect())
                .collect();
            if let Ok(p) = GeneralPolytopeV::new(pts) {
                if p.volume() > 1e-3 * (hi - lo).powi(n as i32) {
                    return p;
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The vertex list as given (may contain non-extreme points).
    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn extreme_points(&self) -> &[Vec<f64>] {
        &self.extreme
    }

    pub fn facets(&self) -> &[Hyperplane] {
        &self.facets
    }

    fn tol(&self) -> f64 {
        1e-10 * self.scale
    }

    /// Membership through the facet description.
    pub fn contains(&self, x: &[f64]) -> bool {
        let tol = 1e-12 * self.scale;
        self.facets.iter().all(|f| f.eval(x) <= tol)
    }

    /// Membership as linear feasibility: `x` is a convex combination of the
    /// vertices iff (Carathéodory) it has nonnegative barycentric
    /// coordinates in some simplex spanned by `n + 1` of them.
    pub fn contains_by_feasibility(&self, x: &[f64]) -> bool {
        let pts = &self.extreme;
        let n = self.dim;
        let m = pts.len();
        let tol = 1e-12;
        let mut idx: Vec<usize> = (0..=n).collect();
        if m < n + 1 {
            return false;
        }
        loop {
            let base = &pts[idx[0]];
            let cols: Vec<Vec<f64>> = idx[1..].iter().map(|&i| sub(&pts[i], base)).collect();
            let rows: Vec<Vec<f64>> = (0..n).map(|r| cols.iter().map(|c| c[r]).collect()).collect();
            if let Some(lam) = solve(&rows, &sub(x, base)) {
                let s: f64 = lam.iter().sum();
                if lam.iter().all(|&l| l >= -tol) && s <= 1.0 + tol {
                    return true;
                }
            }
            let mut k = n + 1;
            while k > 0 && idx[k - 1] == m - (n + 1) + k - 1 {
                k -= 1;
            }
            if k == 0 {
                return false;
            }
            idx[k - 1] += 1;
            for j in k..=n {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }

    /// The parameter interval `{r ≥ 0 : r u ∈ K}` for a unit `u`, if
    /// non-degenerate.
    pub fn ray_interval(&self, u: &[f64]) -> Option<(f64, f64)> {
        let mut lo = 0.0f64;
        let mut hi = f64::INFINITY;
        for f in &self.facets {
            let d = dot(&f.normal, u);
            if d > 0.0 {
                hi = hi.min(f.offset / d);
            } else if d < 0.0 {
                lo = lo.max(f.offset / d);
            } else if f.offset < 0.0 {
                return None;
            }
        }
        (hi > lo).then_some((lo, hi))
    }

    /// Exact volume by facet coning.
    pub fn volume(&self) -> f64 {
        let ids: Vec<usize> = (0..self.extreme.len()).collect();
        face_volume(&self.extreme, &ids, &self.facets, self.tol())
    }

    /// `(lo, hi)` corners of the bounding box.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim;
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for v in &self.extreme {
            for i in 0..n {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        }
        (lo, hi)
    }

    pub fn max_norm(&self) -> f64 {
        self.extreme.iter().map(|v| norm(v)).fold(0.0, f64::max)
    }

    pub fn reflected(&self) -> GeneralPolytopeV {
        let flip = |pts: &[Vec<f64>]| pts.iter().map(|v| v.iter().map(|x| -x).collect()).collect();
        GeneralPolytopeV {
            dim: self.dim,
            vertices: flip(&self.vertices),
            extreme: flip(&self.extreme),
            facets: self
                .facets
                .iter()
                .map(|f| Hyperplane {
                    normal: f.normal.iter().map(|x| -x).collect(),
                    offset: f.offset,
                })
                .collect(),
            scale: self.scale,
        }
    }

    /// `a K + b M`, built from the candidate vertex set `{a v + b w}`.
    pub fn minkowski_combination(&self, a: f64, other: &GeneralPolytopeV, b: f64) -> Result<GeneralPolytopeV> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        if !(a >= 0.0 && b >= 0.0 && a + b > 0.0) {
            return Err(Error::InvalidParameter("Minkowski weights must be nonnegative".into()));
        }
        let mut candidates = Vec::with_capacity(self.extreme.len() * other.extreme.len());
        for v in &self.extreme {
            for w in &other.extreme {
                candidates.push(v.iter().zip(w).map(|(x, y)| a * x + b * y).collect());
            }
        }
        GeneralPolytopeV::new(candidates)
    }

    /// `K_λ = λK + (1 - λ)(-K)`.
    pub fn minkowski_lambda(&self, lambda: f64) -> Result<GeneralPolytopeV> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidParameter(format!("lambda = {lambda} must lie in (0, 1)")));
        }
        self.minkowski_combination(lambda, &self.reflected(), 1.0 - lambda)
    }

    /// Least-squares fit of `other = t + μ K` on lexicographically sorted
    /// extreme points. Returns `(t, μ, rms residual)` or `None` when the
    /// vertex counts differ.
    pub fn homothety_to(&self, other: &GeneralPolytopeV) -> Option<(Vec<f64>, f64, f64)> {
        if self.dim != other.dim || self.extreme.len() != other.extreme.len() {
            return None;
        }
        let sort = |pts: &[Vec<f64>], scale: f64| {
            let tol = 1e-9 * scale;
            let mut p = pts.to_vec();
            p.sort_by(|a, b| {
                for (x, y) in a.iter().zip(b) {
                    if (x - y).abs() > tol {
                        return x.total_cmp(y);
                    }
                }
                std::cmp::Ordering::Equal
            });
            p
        };
        let v = sort(&self.extreme, self.scale);
        let w = sort(&other.extreme, other.scale);
        let m = v.len() as f64;
        let n = self.dim;
        let mean = |pts: &[Vec<f64>]| -> Vec<f64> {
            (0..n).map(|i| pts.iter().map(|p| p[i]).sum::<f64>() / m).collect()
        };
        let (vb, wb) = (mean(&v), mean(&w));
        let mut num = 0.0;
        let mut den = 0.0;
        for (p, q) in v.iter().zip(&w) {
            let dp = sub(p, &vb);
            let dq = sub(q, &wb);
            num += dot(&dp, &dq);
            den += dot(&dp, &dp);
        }
        let mu = num / den;
        let t: Vec<f64> = (0..n).map(|i| wb[i] - mu * vb[i]).collect();
        let ss: f64 = v
            .iter()
            .zip(&w)
            .map(|(p, q)| (0..n).map(|i| (q[i] - t[i] - mu * p[i]).powi(2)).sum::<f64>())
            .sum();
        Some((t, mu, (ss / m).sqrt()))
    }
}
