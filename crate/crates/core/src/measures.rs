//! Dual curvature measures `C̃_q(K, η)` on the regions the subspace bound
//! quantifies over, their gauge-body generalization, and the exact
//! cone-volume measure of H-polytopes.
//!
//! Directions on the boundary of an `α*` region (rays that hit several
//! facets within `tie_tol`) are counted as inside. That set is null and
//! never moves an estimate.

use crate::bodies::{Direction, PolytopeH, ProductCylinder, SymmetricBody, DEFAULT_TIE_TOL};
use crate::concentration::Subspace;
use crate::linalg::{dot, norm, normalized};
use crate::polytope::{face_volume, Hyperplane};
use crate::quadrature::{
    chunk_rng, integrate_sphere, map_chunks, merge_all, MeasureEstimate, Moments, QuadratureSpec, Stream,
};
use crate::{Error, Result};
use rand::Rng;

/// Absolute tolerance on `|v - P_L v|` for a unit normal `v` to lie in `L`.
pub const SUBSPACE_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub enum SphericalRegion {
    FullSphere,
    /// `S^{n-1} ∩ L`.
    SubspaceSphere(Subspace),
    /// `S^{n-1} \ L`.
    Complement(Subspace),
}

impl SphericalRegion {
    fn subspace(&self) -> Option<&Subspace> {
        match self {
            SphericalRegion::FullSphere => None,
            SphericalRegion::SubspaceSphere(l) | SphericalRegion::Complement(l) => Some(l),
        }
    }
}

/// Inputs of one dual curvature measure evaluation. Without a gauge the
/// integrand is `ρ_K^q`; with a gauge `M` it is `ρ_M^{n-q} ρ_K^q`.
#[derive(Clone, Copy, Debug)]
pub struct DualCurvatureQuery<'a> {
    pub body: &'a SymmetricBody,
    pub q: f64,
    pub region: &'a SphericalRegion,
    pub gauge: Option<&'a SymmetricBody>,
}

static FULL: SphericalRegion = SphericalRegion::FullSphere;

impl<'a> DualCurvatureQuery<'a> {
    pub fn new(body: &'a SymmetricBody, q: f64) -> Self {
        DualCurvatureQuery {
            body,
            q,
            region: &FULL,
            gauge: None,
        }
    }

    pub fn region(self, region: &'a SphericalRegion) -> Self {
        DualCurvatureQuery { region, ..self }
    }

    pub fn gauge(self, gauge: &'a SymmetricBody) -> Self {
        DualCurvatureQuery {
            gauge: Some(gauge),
            ..self
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.body.dim();
        if !(self.q > 0.0 && self.q.is_finite()) {
            return Err(Error::InvalidParameter(format!("q = {} must be positive", self.q)));
        }
        if let Some(m) = self.gauge {
            if m.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.dim(),
                });
            }
        }
        if let Some(l) = self.region.subspace() {
            if l.ambient_dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: l.ambient_dim(),
                });
            }
        }
        Ok(())
    }
}

/// Decides `u ∈ α*_K(S^{n-1} ∩ L)` given `ρ_K(u)`.
#[derive(Clone, Debug)]
pub(crate) enum AlphaStarTest<'a> {
    /// Pairs whose unit normal lies in `L`; the ray must end on one of them.
    Polytope { poly: &'a PolytopeH, pairs: Vec<usize>, tie_tol: f64 },
    /// `L = span(e₁..e_k)` for the cylinder: lateral boundary `r|u₂| ≤ |u₁|`.
    CylinderAxis { cyl: &'a ProductCylinder, tie_tol: f64 },
    /// Compute the attaining normals and test each against `L`.
    Normals { body: &'a SymmetricBody, subspace: &'a Subspace, tie_tol: f64 },
}

impl<'a> AlphaStarTest<'a> {
    pub(crate) fn new(body: &'a SymmetricBody, subspace: &'a Subspace, tie_tol: f64) -> Self {
        match body {
            SymmetricBody::PolytopeH(poly) => {
                let pairs = poly
                    .unit_normals()
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| subspace.contains_unit(a))
                    .map(|(i, _)| i)
                    .collect();
                AlphaStarTest::Polytope { poly, pairs, tie_tol }
            }
            SymmetricBody::ProductCylinder(cyl) if subspace.is_coordinate(cyl.k) => {
                AlphaStarTest::CylinderAxis { cyl, tie_tol }
            }
            _ => AlphaStarTest::Normals {
                body,
                subspace,
                tie_tol,
            },
        }
    }

    #[inline]
    pub(crate) fn test(&self, u: &[f64], rho: f64) -> bool {
        match self {
            AlphaStarTest::Polytope { poly, pairs, tie_tol } => {
                let cutoff = rho * (1.0 + tie_tol);
                pairs.iter().any(|&i| {
                    let d = dot(&poly.normals()[i], u).abs();
                    d > 0.0 && poly.offsets()[i] / d <= cutoff
                })
            }
            AlphaStarTest::CylinderAxis { cyl, tie_tol } => cyl.boundary_pieces(u, *tie_tol).0,
            AlphaStarTest::Normals {
                body,
                subspace,
                tie_tol,
            } => match body {
                SymmetricBody::Ball { .. } => subspace.contains_unit(u),
                SymmetricBody::Ellipsoid(e) => {
                    normalized(&e.gradient(u)).is_some_and(|v| subspace.contains_unit(&v))
                }
                _ => body
                    .attaining_normals(&Direction::new_unchecked(u.to_vec()), *tie_tol)
                    .map(|vs| vs.iter().any(|v| subspace.contains_unit(v.as_slice())))
                    .unwrap_or(false),
            },
        }
    }
}

/// `u ∈ α*_K(S^{n-1} ∩ L)`: some outer normal at `ρ_K(u) u` lies in `L`.
pub fn alpha_star_member(body: &SymmetricBody, u: &Direction, subspace: &Subspace, tie_tol: f64) -> Result<bool> {
    let rho = body.radial(u)?;
    if subspace.ambient_dim() != body.dim() {
        return Err(Error::DimensionMismatch {
            expected: body.dim(),
            found: subspace.ambient_dim(),
        });
    }
    if !(tie_tol > 0.0) {
        return Err(Error::InvalidParameter("tie_tol must be positive".into()));
    }
    Ok(AlphaStarTest::new(body, subspace, tie_tol).test(u.as_slice(), rho))
}

/// Region membership for a sampled direction.
pub(crate) struct RegionTest<'a> {
    test: Option<AlphaStarTest<'a>>,
    complement: bool,
}

impl<'a> RegionTest<'a> {
    pub(crate) fn new(body: &'a SymmetricBody, region: &'a SphericalRegion, tie_tol: f64) -> Self {
        match region {
            SphericalRegion::FullSphere => RegionTest {
                test: None,
                complement: false,
            },
            SphericalRegion::SubspaceSphere(l) => RegionTest {
                test: Some(AlphaStarTest::new(body, l, tie_tol)),
                complement: false,
            },
            SphericalRegion::Complement(l) => RegionTest {
                test: Some(AlphaStarTest::new(body, l, tie_tol)),
                complement: true,
            },
        }
    }

    #[inline]
    pub(crate) fn contains(&self, u: &[f64], rho: f64) -> bool {
        match &self.test {
            None => true,
            Some(t) => t.test(u, rho) != self.complement,
        }
    }
}

/// `ρ_M(u)^{n-q} ρ_K(u)^q / n`, the per-direction density of the measure.
#[inline]
pub(crate) fn density(rho_k: f64, gauge: Option<&SymmetricBody>, u: &[f64], q: f64, n: usize) -> f64 {
    let base = rho_k.powf(q);
    let weighted = match gauge {
        None => base,
        Some(m) => m.radial_unit(u).powf(n as f64 - q) * base,
    };
    weighted / n as f64
}

/// Monte Carlo estimate of `(1/n) ∫_{α*_K(η)} ρ_M^{n-q} ρ_K^q dH^{n-1}`.
pub fn dual_curvature(query: &DualCurvatureQuery<'_>, spec: &QuadratureSpec) -> Result<MeasureEstimate> {
    dual_curvature_with_tie(query, spec, DEFAULT_TIE_TOL)
}

pub fn dual_curvature_with_tie(
    query: &DualCurvatureQuery<'_>,
    spec: &QuadratureSpec,
    tie_tol: f64,
) -> Result<MeasureEstimate> {
    query.validate()?;
    let body = query.body;
    let n = body.dim();
    let region = RegionTest::new(body, query.region, tie_tol);
    integrate_sphere(
        |u| {
            let rho = body.radial_unit(u);
            if region.contains(u, rho) {
                density(rho, query.gauge, u, query.q, n)
            } else {
                0.0
            }
        },
        n,
        spec,
    )
}

/// The same measure through the volume form
/// `(q/n) ∫_{x ∈ K, x/|x| ∈ α*_K(η)} ρ_M(x)^{n-q} dx`, sampled uniformly in
/// the bounding box of `K`. Meant as an independent cross-check of
/// [`dual_curvature`]; it draws from a separate stream family.
pub fn dual_curvature_euclidean(query: &DualCurvatureQuery<'_>, spec: &QuadratureSpec) -> Result<MeasureEstimate> {
    query.validate()?;
    spec.validate()?;
    let body = query.body;
    let n = body.dim();
    let q = query.q;
    let half = body.bounding_box();
    let box_volume: f64 = half.iter().map(|h| 2.0 * h).product();
    let region = RegionTest::new(body, query.region, DEFAULT_TIE_TOL);
    let chunks = map_chunks(spec, |c, _, len| {
        let mut rng = chunk_rng(spec.seed, c, Stream::Box);
        let mut x = vec![0.0; n];
        let mut u = vec![0.0; n];
        let mut m = Moments::default();
        for _ in 0..len {
            let r = loop {
                for (xi, h) in x.iter_mut().zip(&half) {
                    *xi = rng.random_range(-*h..*h);
                }
                let r = norm(&x);
                if r >= 1e-12 {
                    break r;
                }
            };
            let mut value = 0.0;
            if body.contains_unchecked(&x) {
                u.iter_mut().zip(&x).for_each(|(ui, xi)| *ui = xi / r);
                let rho = body.radial_unit(&u);
                if region.contains(&u, rho) {
                    let gauge_radial = match query.gauge {
                        None => 1.0 / r,
                        Some(g) => g.radial_unit(&u) / r,
                    };
                    value = gauge_radial.powf(n as f64 - q);
                }
            }
            m.push(value);
        }
        m
    });
    Ok(merge_all(&chunks).estimate(q / n as f64 * box_volume, spec.seed))
}

/// `W̃_{n-i}(K) = C̃_i(K, S^{n-1})` for `1 ≤ i ≤ n`.
pub fn dual_quermass(body: &SymmetricBody, i: usize, spec: &QuadratureSpec) -> Result<MeasureEstimate> {
    let n = body.dim();
    if i == 0 || i > n {
        return Err(Error::InvalidParameter(format!(
            "dual quermassintegral index i = {i} must satisfy 1 ≤ i ≤ {n}"
        )));
    }
    dual_curvature(&DualCurvatureQuery::new(body, i as f64), spec)
}

/// Exact cone volumes `(1/n) h_K(aᵢ) vol_{n-1}(Fᵢ)` of an H-polytope.
#[derive(Clone, Debug, PartialEq)]
pub struct FacetMasses {
    /// Mass of the antipodal facet pair `±aᵢ` (twice one facet's cone).
    pub pair_masses: Vec<f64>,
    /// Pairs whose hyperplanes touch `K` in dimension below `n - 1`, or
    /// repeat an earlier facet. Their mass is zero.
    pub degenerate: Vec<usize>,
    pub total: f64,
}

/// Largest dimension accepted by the exact cone-volume oracle.
pub const CONE_VOLUME_MAX_DIM: usize = 4;

pub fn facet_cone_volumes(poly: &PolytopeH) -> Result<FacetMasses> {
    let n = poly.dim();
    if n > CONE_VOLUME_MAX_DIM {
        return Err(Error::DimensionTooLarge {
            n,
            max: CONE_VOLUME_MAX_DIM,
        });
    }
    let vertices = poly.vertices();
    let scale = vertices
        .iter()
        .flatten()
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    let tol = 1e-9 * scale;
    let mut planes = Vec::with_capacity(2 * poly.pair_count());
    for (i, a) in poly.unit_normals().iter().enumerate() {
        let d = poly.facet_distance(i);
        planes.push(Hyperplane {
            normal: a.clone(),
            offset: d,
        });
        planes.push(Hyperplane {
            normal: a.iter().map(|x| -x).collect(),
            offset: d,
        });
    }
    let mut pair_masses = vec![0.0; poly.pair_count()];
    let mut degenerate = Vec::new();
    let mut seen: Vec<Vec<usize>> = Vec::new();
    for i in 0..poly.pair_count() {
        let plane = &planes[2 * i];
        let ids: Vec<usize> = (0..vertices.len())
            .filter(|&v| plane.eval(&vertices[v]).abs() <= tol)
            .collect();
        let facet_dim = affine_dim(vertices, &ids, tol);
        if ids.is_empty() || facet_dim + 1 != n || seen.contains(&ids) {
            degenerate.push(i);
            continue;
        }
        let area = face_volume(vertices, &ids, &planes, tol);
        pair_masses[i] = 2.0 * plane.offset * area / n as f64;
        seen.push(ids);
    }
    let total = pair_masses.iter().sum();
    Ok(FacetMasses {
        pair_masses,
        degenerate,
        total,
    })
}

fn affine_dim(points: &[Vec<f64>], ids: &[usize], tol: f64) -> usize {
    if ids.is_empty() {
        return 0;
    }
    let diffs: Vec<Vec<f64>> = ids[1..]
        .iter()
        .map(|&i| crate::linalg::sub(&points[i], &points[ids[0]]))
        .filter(|d| norm(d) > tol)
        .collect();
    crate::linalg::rank(&diffs, 1e-9)
}

/// Exact cone-volume measure `V_K(η)` of an H-polytope on a region.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeVolume {
    pub value: f64,
    pub total: f64,
    pub degenerate: Vec<usize>,
}

pub fn cone_volume_exact(poly: &PolytopeH, region: &SphericalRegion) -> Result<ConeVolume> {
    let masses = facet_cone_volumes(poly)?;
    let value = match region {
        SphericalRegion::FullSphere => masses.total,
        SphericalRegion::SubspaceSphere(l) | SphericalRegion::Complement(l) => {
            if l.ambient_dim() != poly.dim() {
                return Err(Error::DimensionMismatch {
                    expected: poly.dim(),
                    found: l.ambient_dim(),
                });
            }
            let want = matches!(region, SphericalRegion::SubspaceSphere(_));
            poly.unit_normals()
                .iter()
                .zip(&masses.pair_masses)
                .filter(|(a, _)| l.contains_unit(a) == want)
                .map(|(_, m)| m)
                .sum()
        }
    };
    Ok(ConeVolume {
        value,
        total: masses.total,
        degenerate: masses.degenerate,
    })
}
