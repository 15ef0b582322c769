//! Origin-symmetric convex bodies with exact support, radial and normal
//! queries.
//!
//! Radial-function queries on the hot Monte Carlo path take a raw unit
//! slice (`radial_unit`); the public [`Direction`] based methods wrap them.

use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{dot, mat_vec, norm, normalized, orthonormalize, quadratic_form, rank, solve};
use crate::{Error, Result};

/// Default relative band used to decide that two facets are hit by the
/// same ray.
pub const DEFAULT_TIE_TOL: f64 = 1e-9;

/// A unit vector in `R^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Direction(Vec<f64>);

impl Direction {
    /// Normalizes `v`. Fails on zero or non-finite input.
    pub fn new(v: Vec<f64>) -> Result<Self> {
        normalized(&v)
            .map(Direction)
            .ok_or_else(|| Error::InvalidParameter("direction must be a nonzero finite vector".into()))
    }

    /// Accepts `v` as is if `||v| - 1| ≤ 1e-12`.
    pub fn from_unit(v: Vec<f64>) -> Result<Self> {
        if (norm(&v) - 1.0).abs() <= 1e-12 {
            Ok(Direction(v))
        } else {
            Err(Error::InvalidParameter(format!(
                "|u| = {} is not 1 within 1e-12",
                norm(&v)
            )))
        }
    }

    pub(crate) fn new_unchecked(v: Vec<f64>) -> Self {
        Direction(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn neg(&self) -> Direction {
        Direction(self.0.iter().map(|x| -x).collect())
    }
}

impl AsRef<[f64]> for Direction {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// `{x : xᵀ A x ≤ 1}` for symmetric positive definite `A`.
#[derive(Clone, Debug)]
pub struct Ellipsoid {
    dim: usize,
    matrix: Vec<f64>,
    inverse: Vec<f64>,
}

impl Ellipsoid {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidBody("ellipsoid matrix is empty".into()));
        }
        if let Some(row) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: row.len(),
            });
        }
        let scale = rows.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        for (i, row) in rows.iter().enumerate() {
            for (j, other) in rows.iter().enumerate().take(i) {
                if (row[j] - other[i]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidBody(format!(
                        "ellipsoid matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| 0.5 * (rows[i][j] + rows[j][i]));
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidBody("ellipsoid matrix has non-finite entries".into()));
        }
        let chol = m
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidBody("ellipsoid matrix is not positive definite".into()))?;
        let inv = chol.inverse();
        let matrix = (0..n * n).map(|k| m[(k / n, k % n)]).collect();
        let inverse = (0..n * n).map(|k| inv[(k / n, k % n)]).collect();
        Ok(Ellipsoid {
            dim: n,
            matrix,
            inverse,
        })
    }

    /// Axis-aligned ellipsoid with the given semi-axes.
    pub fn axis_aligned(semi_axes: &[f64]) -> Result<Self> {
        let n = semi_axes.len();
        let rows = (0..n)
            .map(|i| {
                let mut row = vec![0.0; n];
                row[i] = 1.0 / (semi_axes[i] * semi_axes[i]);
                row
            })
            .collect();
        Ellipsoid::new(rows)
    }

    pub fn matrix_rows(&self) -> Vec<Vec<f64>> {
        self.matrix.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `A x`, an outer normal direction at the boundary point along `x`.
    #[inline]
    pub(crate) fn gradient(&self, x: &[f64]) -> Vec<f64> {
        mat_vec(&self.matrix, self.dim, x)
    }
}

/// `{x : |⟨aᵢ, x⟩| ≤ bᵢ}`: each stored halfspace stands for the antipodal
/// pair `⟨±aᵢ, x⟩ ≤ bᵢ`, so the body is symmetric by construction.
#[derive(Clone, Debug)]
pub struct PolytopeH {
    dim: usize,
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    unit_normals: Vec<Vec<f64>>,
    vertices: OnceLock<Vec<Vec<f64>>>,
}

impl PolytopeH {
    pub fn new(normals: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        let n = normals.first().map(Vec::len).unwrap_or(0);
        if n == 0 {
            return Err(Error::InvalidBody("polytope needs at least one normal".into()));
        }
        if normals.len() != offsets.len() {
            return Err(Error::InvalidBody(format!(
                "{} normals but {} offsets",
                normals.len(),
                offsets.len()
            )));
        }
        let mut unit_normals = Vec::with_capacity(normals.len());
        for (i, (a, &b)) in normals.iter().zip(&offsets).enumerate() {
            if a.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: a.len(),
                });
            }
            let unit = normalized(a)
                .ok_or_else(|| Error::InvalidBody(format!("normal {i} is zero or not finite")))?;
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::InvalidBody(format!(
                    "offset {i} = {b}: origin not interior"
                )));
            }
            unit_normals.push(unit);
        }
        if rank(&unit_normals, 1e-10) < n {
            return Err(Error::InvalidBody(
                "normals do not span R^n, polytope is unbounded".into(),
            ));
        }
        Ok(PolytopeH {
            dim: n,
            normals,
            offsets,
            unit_normals,
            vertices: OnceLock::new(),
        })
    }

    /// `[-h₁, h₁] × … × [-hₙ, hₙ]`.
    pub fn boxed(half_widths: &[f64]) -> Result<Self> {
        let n = half_widths.len();
        let normals = (0..n).map(|i| crate::linalg::unit_vector(n, i)).collect();
        PolytopeH::new(normals, half_widths.to_vec())
    }

    pub fn cube(n: usize) -> Self {
        PolytopeH::boxed(&vec![1.0; n]).expect("cube is valid")
    }

    /// `{x : Σ|xᵢ| ≤ 1}`.
    pub fn cross_polytope(n: usize) -> Self {
        let mut normals = Vec::new();
        for mask in 0..(1u32 << (n - 1)) {
            let a = (0..n)
                .map(|i| if i > 0 && mask & (1 << (i - 1)) != 0 { -1.0 } else { 1.0 })
                .collect();
            normals.push(a);
        }
        let offsets = vec![1.0; normals.len()];
        PolytopeH::new(normals, offsets).expect("cross-polytope is valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normals(&self) -> &[Vec<f64>] {
        &self.normals
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn unit_normals(&self) -> &[Vec<f64>] {
        &self.unit_normals
    }

    pub fn pair_count(&self) -> usize {
        self.normals.len()
    }

    /// Distance `bᵢ / |aᵢ|` of the i-th facet hyperplane from the origin.
    pub fn facet_distance(&self, i: usize) -> f64 {
        self.offsets[i] / norm(&self.normals[i])
    }

    /// Ratios `bᵢ / |⟨aᵢ, u⟩|` of the pairs hit by the ray along `u`.
    #[inline]
    fn ray_ratio(&self, i: usize, u: &[f64]) -> f64 {
        let d = dot(&self.normals[i], u).abs();
        if d > 0.0 {
            self.offsets[i] / d
        } else {
            f64::INFINITY
        }
    }

    #[inline]
    pub(crate) fn radial_unit(&self, u: &[f64]) -> f64 {
        (0..self.normals.len())
            .map(|i| self.ray_ratio(i, u))
            .fold(f64::INFINITY, f64::min)
    }

    /// Indices of pairs whose ratio is within the relative band `tie_tol`
    /// of the minimum, together with that minimum.
    pub(crate) fn tied_pairs(&self, u: &[f64], tie_tol: f64, out: &mut Vec<usize>) -> f64 {
        let rho = self.radial_unit(u);
        let cutoff = rho * (1.0 + tie_tol);
        out.clear();
        out.extend((0..self.normals.len()).filter(|&i| self.ray_ratio(i, u) <= cutoff));
        rho
    }

    /// Vertices, enumerated on first use by solving every n-subset of
    /// facet hyperplanes (with all sign patterns) and keeping feasible
    /// points.
    pub fn vertices(&self) -> &[Vec<f64>] {
        self.vertices.get_or_init(|| self.enumerate_vertices())
    }

    fn enumerate_vertices(&self) -> Vec<Vec<f64>> {
        let n = self.dim;
        let m = self.normals.len();
        let mut found: Vec<Vec<f64>> = Vec::new();
        let scale = self.offsets.iter().fold(0.0f64, |a, &b| a.max(b));
        let mut idx: Vec<usize> = (0..n).collect();
        if m < n {
            return found;
        }
        loop {
            let rows: Vec<Vec<f64>> = idx.iter().map(|&i| self.normals[i].clone()).collect();
            if rank(&rows, 1e-10) == n {
                for signs in 0..(1u32 << n) {
                    let rhs: Vec<f64> = idx
                        .iter()
                        .enumerate()
                        .map(|(j, &i)| {
                            if signs & (1 << j) != 0 {
                                -self.offsets[i]
                            } else {
                                self.offsets[i]
                            }
                        })
                        .collect();
                    let Some(x) = solve(&rows, &rhs) else { continue };
                    if self.contains_tol(&x, 1e-9) {
                        let tol = 1e-9 * scale.max(1.0);
                        if !found
                            .iter()
                            .any(|v| v.iter().zip(&x).all(|(a, b)| (a - b).abs() <= tol))
                        {
                            found.push(x);
                        }
                    }
                }
            }
            // next combination
            let mut k = n;
            while k > 0 && idx[k - 1] == m - n + k - 1 {
                k -= 1;
            }
            if k == 0 {
                break;
            }
            idx[k - 1] += 1;
            for j in k..n {
                idx[j] = idx[j - 1] + 1;
            }
        }
        found
    }

    fn contains_tol(&self, x: &[f64], rel: f64) -> bool {
        self.normals
            .iter()
            .zip(&self.offsets)
            .all(|(a, &b)| dot(a, x).abs() <= b * (1.0 + rel))
    }

    fn support(&self, x: &[f64]) -> f64 {
        self.vertices()
            .iter()
            .map(|v| dot(v, x))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `scale · ((r B_k) × B_{n-k})`, the first `k` coordinates in the `r`-ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductCylinder {
    pub r: f64,
    pub k: usize,
    pub n: usize,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl ProductCylinder {
    pub fn new(r: f64, k: usize, n: usize) -> Result<Self> {
        ProductCylinder::scaled(r, k, n, 1.0)
    }

    pub fn scaled(r: f64, k: usize, n: usize, scale: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidBody(format!("cylinder radius r = {r} must be positive")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidBody(format!("cylinder scale {scale} must be positive")));
        }
        if k == 0 || k >= n {
            return Err(Error::InvalidBody(format!("cylinder needs 1 ≤ k ≤ n-1, got k = {k}, n = {n}")));
        }
        Ok(ProductCylinder { r, k, n, scale })
    }

    /// `(|x₁|, |x₂|)` for the split `x = x₁ + x₂`, `x₁ ∈ R^k`.
    #[inline]
    fn block_norms(&self, x: &[f64]) -> (f64, f64) {
        let (a, b) = x.split_at(self.k);
        (norm(a), norm(b))
    }

    #[inline]
    pub(crate) fn radial_unit(&self, u: &[f64]) -> f64 {
        let (n1, n2) = self.block_norms(u);
        let lateral = if n1 > 0.0 { self.r / n1 } else { f64::INFINITY };
        let cap = if n2 > 0.0 { 1.0 / n2 } else { f64::INFINITY };
        self.scale * lateral.min(cap)
    }

    /// `(lateral, cap)`: which of the two boundary pieces the ray along `u`
    /// ends on. Both are true on the rim `r|u₂| = |u₁|` (relative `tie_tol`).
    #[inline]
    pub(crate) fn boundary_pieces(&self, u: &[f64], tie_tol: f64) -> (bool, bool) {
        let (n1, n2) = self.block_norms(u);
        let a = n1;
        let b = self.r * n2;
        let band = tie_tol * a.max(b);
        ((a - b) >= -band, (b - a) >= -band)
    }
}

#[derive(Clone, Debug)]
pub enum SymmetricBody {
    Ball { dim: usize, radius: f64 },
    Ellipsoid(Ellipsoid),
    PolytopeH(PolytopeH),
    ProductCylinder(ProductCylinder),
}

impl From<Ellipsoid> for SymmetricBody {
    fn from(e: Ellipsoid) -> Self {
        SymmetricBody::Ellipsoid(e)
    }
}

impl From<PolytopeH> for SymmetricBody {
    fn from(p: PolytopeH) -> Self {
        SymmetricBody::PolytopeH(p)
    }
}

impl From<ProductCylinder> for SymmetricBody {
    fn from(c: ProductCylinder) -> Self {
        SymmetricBody::ProductCylinder(c)
    }
}

impl SymmetricBody {
    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidBody("ball dimension must be positive".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidBody(format!("ball radius {radius} must be positive")));
        }
        Ok(SymmetricBody::Ball { dim, radius })
    }

    pub fn unit_ball(dim: usize) -> Self {
        SymmetricBody::Ball { dim, radius: 1.0 }
    }

    pub fn dim(&self) -> usize {
        match self {
            SymmetricBody::Ball { dim, .. } => *dim,
            SymmetricBody::Ellipsoid(e) => e.dim,
            SymmetricBody::PolytopeH(p) => p.dim,
            SymmetricBody::ProductCylinder(c) => c.n,
        }
    }

    pub fn as_polytope(&self) -> Option<&PolytopeH> {
        match self {
            SymmetricBody::PolytopeH(p) => Some(p),
            _ => None,
        }
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: len,
            })
        }
    }

    /// `h_K(x) = max_{y ∈ K} ⟨x, y⟩`.
    pub fn support(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(match self {
            SymmetricBody::Ball { radius, .. } => radius * norm(x),
            SymmetricBody::Ellipsoid(e) => quadratic_form(&e.inverse, e.dim, x).max(0.0).sqrt(),
            SymmetricBody::PolytopeH(p) => p.support(x),
            SymmetricBody::ProductCylinder(c) => {
                let (n1, n2) = c.block_norms(x);
                c.scale * (c.r * n1 + n2)
            }
        })
    }

    /// `ρ_K(u) = max{ρ > 0 : ρu ∈ K}`.
    pub fn radial(&self, u: &Direction) -> Result<f64> {
        self.check_dim(u.dim())?;
        Ok(self.radial_unit(u.as_slice()))
    }

    /// Radial function at a unit vector given as a slice; no checks.
    #[inline]
    pub fn radial_unit(&self, u: &[f64]) -> f64 {
        match self {
            SymmetricBody::Ball { radius, .. } => *radius,
            SymmetricBody::Ellipsoid(e) => 1.0 / quadratic_form(&e.matrix, e.dim, u).sqrt(),
            SymmetricBody::PolytopeH(p) => p.radial_unit(u),
            SymmetricBody::ProductCylinder(c) => c.radial_unit(u),
        }
    }

    /// Radial function extended by homogeneity of degree -1 to any nonzero
    /// `x`.
    #[inline]
    pub fn radial_at(&self, x: &[f64]) -> f64 {
        let len = norm(x);
        let u: Vec<f64> = x.iter().map(|v| v / len).collect();
        self.radial_unit(&u) / len
    }

    /// Outer unit normals of the supporting hyperplanes at `ρ_K(u) u`.
    pub fn attaining_normals(&self, u: &Direction, tie_tol: f64) -> Result<Vec<Direction>> {
        self.check_dim(u.dim())?;
        if !(tie_tol > 0.0) {
            return Err(Error::InvalidParameter("tie_tol must be positive".into()));
        }
        let u = u.as_slice();
        Ok(match self {
            SymmetricBody::Ball { .. } => vec![Direction(u.to_vec())],
            SymmetricBody::Ellipsoid(e) => {
                let g = mat_vec(&e.matrix, e.dim, u);
                vec![Direction::new(g)?]
            }
            SymmetricBody::PolytopeH(p) => {
                let mut tied = Vec::new();
                p.tied_pairs(u, tie_tol, &mut tied);
                tied.iter()
                    .map(|&i| {
                        let a = &p.unit_normals[i];
                        let sign = if dot(a, u) >= 0.0 { 1.0 } else { -1.0 };
                        Direction(a.iter().map(|x| sign * x).collect())
                    })
                    .collect()
            }
            SymmetricBody::ProductCylinder(c) => {
                let (lateral, cap) = c.boundary_pieces(u, tie_tol);
                let mut out = Vec::new();
                if lateral {
                    let mut v = u.to_vec();
                    v[c.k..].iter_mut().for_each(|x| *x = 0.0);
                    out.push(Direction::new(v)?);
                }
                if cap {
                    let mut v = u.to_vec();
                    v[..c.k].iter_mut().for_each(|x| *x = 0.0);
                    out.push(Direction::new(v)?);
                }
                out
            }
        })
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        self.check_dim(x.len())?;
        Ok(self.contains_unchecked(x))
    }

    #[inline]
    pub(crate) fn contains_unchecked(&self, x: &[f64]) -> bool {
        const SLACK: f64 = 1e-12;
        match self {
            SymmetricBody::Ball { radius, .. } => norm(x) <= radius * (1.0 + SLACK),
            SymmetricBody::Ellipsoid(e) => quadratic_form(&e.matrix, e.dim, x) <= 1.0 + SLACK,
            SymmetricBody::PolytopeH(p) => p.contains_tol(x, SLACK),
            SymmetricBody::ProductCylinder(c) => {
                let (n1, n2) = c.block_norms(x);
                n1 <= c.scale * c.r * (1.0 + SLACK) && n2 <= c.scale * (1.0 + SLACK)
            }
        }
    }

    /// The dilate `c K`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale factor {c} must be positive")));
        }
        Ok(match self {
            SymmetricBody::Ball { dim, radius } => SymmetricBody::Ball {
                dim: *dim,
                radius: radius * c,
            },
            SymmetricBody::Ellipsoid(e) => {
                let rows = e
                    .matrix_rows()
                    .into_iter()
                    .map(|r| r.into_iter().map(|x| x / (c * c)).collect())
                    .collect();
                SymmetricBody::Ellipsoid(Ellipsoid::new(rows)?)
            }
            SymmetricBody::PolytopeH(p) => SymmetricBody::PolytopeH(PolytopeH::new(
                p.normals.clone(),
                p.offsets.iter().map(|b| b * c).collect(),
            )?),
            SymmetricBody::ProductCylinder(cyl) => {
                SymmetricBody::ProductCylinder(ProductCylinder::scaled(cyl.r, cyl.k, cyl.n, cyl.scale * c)?)
            }
        })
    }

    /// Half-widths `h_K(eᵢ)` of the smallest centred box containing `K`.
    pub fn bounding_box(&self) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                self.support(&crate::linalg::unit_vector(n, i))
                    .expect("dimension matches")
            })
            .collect()
    }
}

/// Random symmetric H-polytope: `pairs` Gaussian normal directions with
/// offsets uniform in `[0.5, 1.5]`. Resamples until the normals span `R^n`.
pub fn random_symmetric_polytope<R: Rng + ?Sized>(n: usize, pairs: usize, rng: &mut R) -> PolytopeH {
    assert!(pairs >= n, "need at least n normal pairs");
    loop {
        let normals: Vec<Vec<f64>> = (0..pairs)
            .map(|_| {
                let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
                normalized(&v).unwrap_or_else(|| crate::linalg::unit_vector(n, 0))
            })
            .collect();
        if orthonormalize(&normals, 1e-6).len() < n {
            continue;
        }
        let offsets = (0..pairs).map(|_| rng.random_range(0.5..1.5)).collect();
        if let Ok(p) = PolytopeH::new(normals, offsets) {
            return p;
        }
    }
}

/// Random symmetric positive definite ellipsoid with semi-axes in
/// `[0.5, 2]` and a random orientation.
pub fn random_ellipsoid<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Ellipsoid {
    loop {
        let raw: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| StandardNormal.sample(rng)).collect())
            .collect();
        let q = orthonormalize(&raw, 1e-6);
        if q.len() < n {
            continue;
        }
        let eig: Vec<f64> = (0..n)
            .map(|_| {
                let a: f64 = rng.random_range(0.5..2.0);
                1.0 / (a * a)
            })
            .collect();
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| q[k][i] * eig[k] * q[k][j]).sum())
                    .collect()
            })
            .collect();
        if let Ok(e) = Ellipsoid::new(rows) {
            return e;
        }
    }
}
