//! Proper subspaces, concentration ratios `C̃_q(K, S^{n-1} ∩ L) / C̃_q(K, S^{n-1})`
//! against the bound `min{dim L / q, 1}`, and the subspace concentration
//! condition for the cone-volume measure of polytopes.

use crate::bodies::{SymmetricBody, DEFAULT_TIE_TOL};
use crate::linalg::{distance_to_span, orthonormalize, rank, unit_vector};
use crate::measures::{density, facet_cone_volumes, AlphaStarTest, CONE_VOLUME_MAX_DIM, SUBSPACE_TOL};
use crate::quadrature::{chunk_rng, derive_seed, draw_direction, map_chunks, QuadratureSpec, Stream};
use crate::{Error, Result};
use serde::Serialize;

/// Linear-independence threshold for spanning vectors, relative to length.
const INDEPENDENCE_TOL: f64 = 1e-10;

/// Half-width of the equality band in standard errors.
pub const VERDICT_SIGMAS: f64 = 3.0;

/// Absolute slack added to the band so that exact zero-variance cases
/// are not misclassified by rounding.
const VERDICT_SLACK: f64 = 1e-12;

/// Relative tolerance for exact equality in the cone-volume condition.
pub const SCC_EQUALITY_TOL: f64 = 1e-9;

/// A proper subspace `L ⊂ ℝⁿ` with an orthonormal basis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Subspace {
    basis: Vec<Vec<f64>>,
    ambient: usize,
}

/// Orthonormalizes linearly independent vectors spanning a proper subspace.
pub fn make_subspace(vectors: &[Vec<f64>]) -> Result<Subspace> {
    let Some(first) = vectors.first() else {
        return Err(Error::InvalidParameter("a subspace needs at least one spanning vector".into()));
    };
    let n = first.len();
    if let Some(v) = vectors.iter().find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: v.len(),
        });
    }
    if vectors.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("spanning vectors must be finite".into()));
    }
    let basis = orthonormalize(vectors, INDEPENDENCE_TOL);
    if basis.len() < vectors.len() {
        return Err(Error::RankDeficient);
    }
    Subspace::from_orthonormal(basis, n)
}

impl Subspace {
    fn from_orthonormal(basis: Vec<Vec<f64>>, ambient: usize) -> Result<Self> {
        if basis.is_empty() || basis.len() >= ambient {
            return Err(Error::InvalidParameter(format!(
                "subspace of dimension {} is not proper in R^{ambient}",
                basis.len()
            )));
        }
        Ok(Subspace { basis, ambient })
    }

    /// `span(e₁, …, e_k)` in `ℝⁿ`.
    pub fn coordinate(k: usize, n: usize) -> Result<Self> {
        Subspace::from_orthonormal((0..k).map(|i| unit_vector(n, i)).collect(), n)
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    /// Whether the unit vector `v` lies in `L` up to [`SUBSPACE_TOL`].
    #[inline]
    pub fn contains_unit(&self, v: &[f64]) -> bool {
        distance_to_span(&self.basis, v) <= SUBSPACE_TOL
    }

    /// Whether `L = span(e₁, …, e_k)`.
    pub fn is_coordinate(&self, k: usize) -> bool {
        self.dim() == k && (0..k).all(|i| self.contains_unit(&unit_vector(self.ambient, i)))
    }

    /// Same subspace up to [`SUBSPACE_TOL`].
    pub fn same_as(&self, other: &Subspace) -> bool {
        self.ambient == other.ambient
            && self.dim() == other.dim()
            && other.basis.iter().all(|b| self.contains_unit(b))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    StrictPass,
    EqualityCandidate,
    Violation,
}

impl Verdict {
    pub fn classify(ratio: f64, std_err: f64, bound: f64) -> Verdict {
        let band = VERDICT_SIGMAS * std_err + VERDICT_SLACK;
        if ratio - band > bound {
            Verdict::Violation
        } else if (ratio - bound).abs() <= band {
            Verdict::EqualityCandidate
        } else {
            Verdict::StrictPass
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::StrictPass => "StrictPass",
            Verdict::EqualityCandidate => "EqualityCandidate",
            Verdict::Violation => "Violation",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioReport {
    pub ratio: f64,
    pub std_err: f64,
    pub bound: f64,
    pub margin: f64,
    pub q: f64,
    pub dim_l: usize,
    pub samples: u64,
    pub seed: u64,
    pub verdict: Verdict,
}

impl RatioReport {
    fn new(ratio: f64, std_err: f64, q: f64, dim_l: usize, spec: &QuadratureSpec) -> Self {
        let bound = (dim_l as f64 / q).min(1.0);
        RatioReport {
            ratio,
            std_err,
            bound,
            margin: bound - ratio,
            q,
            dim_l,
            samples: spec.samples,
            seed: spec.seed,
            verdict: Verdict::classify(ratio, std_err, bound),
        }
    }
}

/// Per-chunk sums for one `(q, L)` cell: numerator `a = 1_{α*} f`,
/// denominator `b = f`.
#[derive(Clone, Copy, Debug, Default)]
struct RatioSums {
    a: f64,
    b: f64,
    aa: f64,
    bb: f64,
    ab: f64,
}

impl RatioSums {
    fn add(&mut self, other: &RatioSums) {
        self.a += other.a;
        self.b += other.b;
        self.aa += other.aa;
        self.bb += other.bb;
        self.ab += other.ab;
    }

    /// Ratio `Σa / Σb` and its delta-method standard error.
    fn ratio(&self, count: u64) -> Result<(f64, f64)> {
        if !(self.b > 0.0) {
            return Err(Error::DegenerateDenominator);
        }
        let r = self.a / self.b;
        let n = count as f64;
        let resid = (self.aa - 2.0 * r * self.ab + r * r * self.bb).max(0.0);
        let var = if count > 1 { resid / (n - 1.0) } else { 0.0 };
        let mean_b = self.b / n;
        Ok((r, (var / n).sqrt() / mean_b))
    }
}

/// Concentration ratios of `body` for every `q` in `qs` and every `L` in
/// `subspaces`, indexed `[q][L]`. All cells share one sample of directions,
/// so each ratio's numerator and denominator see the same draws.
pub fn concentration_profile(
    body: &SymmetricBody,
    gauge: Option<&SymmetricBody>,
    qs: &[f64],
    subspaces: &[Subspace],
    spec: &QuadratureSpec,
) -> Result<Vec<Vec<RatioReport>>> {
    spec.validate()?;
    let n = body.dim();
    if let Some(m) = gauge {
        if m.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.dim(),
            });
        }
    }
    for &q in qs {
        if !(q > 0.0 && q <= n as f64) {
            return Err(Error::InvalidParameter(format!("q = {q} must lie in (0, {n}]")));
        }
    }
    for l in subspaces {
        if l.ambient_dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: l.ambient_dim(),
            });
        }
    }
    let tests: Vec<AlphaStarTest<'_>> = subspaces
        .iter()
        .map(|l| AlphaStarTest::new(body, l, DEFAULT_TIE_TOL))
        .collect();
    let cells = qs.len() * subspaces.len();
    let chunks = map_chunks(spec, |c, start, len| -> Result<Vec<RatioSums>> {
        let mut rng = chunk_rng(spec.seed, c, Stream::Sphere);
        let mut u = vec![0.0; n];
        let mut sums = vec![RatioSums::default(); cells];
        let mut hits = vec![false; subspaces.len()];
        for i in 0..len {
            draw_direction(&mut rng, &mut u);
            let rho = body.radial_unit(&u);
            for (h, t) in hits.iter_mut().zip(&tests) {
                *h = t.test(&u, rho);
            }
            for (qi, &q) in qs.iter().enumerate() {
                let f = density(rho, gauge, &u, q, n);
                if !f.is_finite() {
                    return Err(Error::NonFinite { index: start + i });
                }
                for (li, &hit) in hits.iter().enumerate() {
                    let s = &mut sums[qi * subspaces.len() + li];
                    let a = if hit { f } else { 0.0 };
                    s.a += a;
                    s.b += f;
                    s.aa += a * a;
                    s.bb += f * f;
                    s.ab += a * f;
                }
            }
        }
        Ok(sums)
    });
    let mut total = vec![RatioSums::default(); cells];
    for chunk in chunks {
        for (t, s) in total.iter_mut().zip(chunk?) {
            t.add(&s);
        }
    }
    qs.iter()
        .enumerate()
        .map(|(qi, &q)| {
            subspaces
                .iter()
                .enumerate()
                .map(|(li, l)| {
                    let (r, se) = total[qi * subspaces.len() + li].ratio(spec.samples)?;
                    Ok(RatioReport::new(r, se, q, l.dim(), spec))
                })
                .collect()
        })
        .collect()
}

pub fn concentration_ratio(
    body: &SymmetricBody,
    q: f64,
    subspace: &Subspace,
    spec: &QuadratureSpec,
) -> Result<RatioReport> {
    concentration_ratio_with_gauge(body, None, q, subspace, spec)
}

pub fn concentration_ratio_with_gauge(
    body: &SymmetricBody,
    gauge: Option<&SymmetricBody>,
    q: f64,
    subspace: &Subspace,
    spec: &QuadratureSpec,
) -> Result<RatioReport> {
    let mut grid = concentration_profile(body, gauge, &[q], std::slice::from_ref(subspace), spec)?;
    Ok(grid.remove(0).remove(0))
}

/// One body of a bound check with the subspaces to test it on.
#[derive(Clone, Debug)]
pub struct TheoremCase {
    pub body: SymmetricBody,
    pub subspaces: Vec<Subspace>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub body_index: usize,
    pub subspace_index: usize,
    pub report: RatioReport,
    /// For an [`Verdict::EqualityCandidate`]: whether the equality is
    /// accepted (`q = n` and an exact cone-volume equality subspace with a
    /// complement). `None` when no finite certificate exists for the body.
    pub equality_confirmed: Option<bool>,
}

impl BoundCheck {
    /// No violation, and any equality candidate is either confirmed or
    /// uncertifiable.
    pub fn passes(&self) -> bool {
        match self.report.verdict {
            Verdict::Violation => false,
            Verdict::StrictPass => true,
            Verdict::EqualityCandidate => self.equality_confirmed != Some(false),
        }
    }
}

/// Runs [`concentration_profile`] on every case. Body `i` samples with
/// seed `derive_seed(spec.seed, i)`.
pub fn check_theorem_bound(cases: &[TheoremCase], qs: &[f64], spec: &QuadratureSpec) -> Result<Vec<BoundCheck>> {
    let mut out = Vec::new();
    for (bi, case) in cases.iter().enumerate() {
        let n = case.body.dim() as f64;
        if let Some(&q) = qs.iter().find(|&&q| !(1.0..=n).contains(&q)) {
            return Err(Error::InvalidParameter(format!("q = {q} must lie in [1, {n}]")));
        }
        let body_spec = spec.with_seed(derive_seed(spec.seed, bi as u64));
        let grid = concentration_profile(&case.body, None, qs, &case.subspaces, &body_spec)?;
        let mut scc: Option<Option<SccReport>> = None;
        for row in grid {
            for (li, report) in row.into_iter().enumerate() {
                let equality_confirmed = if report.verdict == Verdict::EqualityCandidate {
                    let scc = scc.get_or_insert_with(|| match case.body.as_polytope() {
                        Some(p) if p.dim() <= CONE_VOLUME_MAX_DIM => check_scc_polytope(p).ok(),
                        _ => None,
                    });
                    if report.q != n {
                        Some(false)
                    } else {
                        scc.as_ref().map(|s| s.confirms_equality(&case.subspaces[li]))
                    }
                } else {
                    None
                };
                out.push(BoundCheck {
                    body_index: bi,
                    subspace_index: li,
                    report,
                    equality_confirmed,
                });
            }
        }
    }
    Ok(out)
}

/// One subspace spanned by facet normals and its cone-volume mass.
#[derive(Clone, Debug, Serialize)]
pub struct SccCandidate {
    pub subspace: Subspace,
    /// Facet pairs whose normals lie in the subspace.
    pub pairs: Vec<usize>,
    pub mass: f64,
    pub ratio: f64,
    pub bound: f64,
    pub at_equality: bool,
    /// At equality: span of the normals outside the subspace, if it is a
    /// complement (dimensions add to `n` and the two spans fill `ℝⁿ`).
    pub complement: Option<Subspace>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SccReport {
    pub total: f64,
    pub candidates: Vec<SccCandidate>,
    /// Facet pairs of zero mass (redundant or repeated half-spaces).
    pub degenerate: Vec<usize>,
    pub holds: bool,
}

impl SccReport {
    /// Whether `subspace` is one of the equality subspaces with a complement.
    pub fn confirms_equality(&self, subspace: &Subspace) -> bool {
        self.candidates
            .iter()
            .any(|c| c.at_equality && c.complement.is_some() && c.subspace.same_as(subspace))
    }

    pub fn equality_subspaces(&self) -> impl Iterator<Item = &SccCandidate> {
        self.candidates.iter().filter(|c| c.at_equality)
    }
}

/// Checks `V_K(S^{n-1} ∩ L) ≤ (dim L / n) V_K(S^{n-1})` on every proper
/// subspace spanned by facet normals, with the complement condition at
/// equality. Exact, for `n ≤ 4`.
pub fn check_scc_polytope(poly: &crate::bodies::PolytopeH) -> Result<SccReport> {
    let n = poly.dim();
    let masses = facet_cone_volumes(poly)?;
    let normals = poly.unit_normals();
    let live: Vec<usize> = (0..poly.pair_count())
        .filter(|i| !masses.degenerate.contains(i))
        .collect();
    let mut seen: Vec<Vec<usize>> = Vec::new();
    let mut candidates = Vec::new();
    let mut holds = true;
    for size in 1..n {
        for subset in combinations(live.len(), size) {
            let vectors: Vec<Vec<f64>> = subset.iter().map(|&j| normals[live[j]].clone()).collect();
            let basis = orthonormalize(&vectors, INDEPENDENCE_TOL);
            if basis.len() != size {
                continue;
            }
            let subspace = Subspace::from_orthonormal(basis, n)?;
            let pairs: Vec<usize> = live
                .iter()
                .copied()
                .filter(|&i| subspace.contains_unit(&normals[i]))
                .collect();
            if seen.contains(&pairs) {
                continue;
            }
            seen.push(pairs.clone());
            let mass: f64 = pairs.iter().map(|&i| masses.pair_masses[i]).sum();
            let ratio = mass / masses.total;
            let bound = subspace.dim() as f64 / n as f64;
            let at_equality = (ratio - bound).abs() <= SCC_EQUALITY_TOL * bound;
            if ratio > bound * (1.0 + SCC_EQUALITY_TOL) {
                holds = false;
            }
            let complement = if at_equality {
                let rest: Vec<Vec<f64>> = live
                    .iter()
                    .filter(|i| !pairs.contains(i))
                    .map(|&i| normals[i].clone())
                    .collect();
                let other = orthonormalize(&rest, INDEPENDENCE_TOL);
                let mut joint = subspace.basis.clone();
                joint.extend(other.iter().cloned());
                let fits = other.len() + subspace.dim() == n && rank(&joint, INDEPENDENCE_TOL) == n;
                if !fits {
                    holds = false;
                }
                fits.then(|| Subspace::from_orthonormal(other, n)).transpose()?
            } else {
                None
            };
            candidates.push(SccCandidate {
                subspace,
                pairs,
                mass,
                ratio,
                bound,
                at_equality,
                complement,
            });
        }
    }
    Ok(SccReport {
        total: masses.total,
        candidates,
        degenerate: masses.degenerate,
        holds,
    })
}

/// All `size`-element index subsets of `0..m` in lexicographic order.
fn combinations(m: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..size).collect();
    if size > m {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..size).rev().find(|&i| cur[i] < m - size + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..size {
            cur[j] = cur[j - 1] + 1;
        }
    }
}
