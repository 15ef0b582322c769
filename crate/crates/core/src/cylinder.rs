//! Closed-form dual curvature measures of the cylinders
//! `K_r = (r B_k) × B_{n-k}` as double integrals over the unit square, and
//! the behaviour of the concentration ratio on `span(e₁, …, e_k)` as `r → 0⁺`.
//!
//! With `c = (q/n) k ω_k (n-k) ω_{n-k}`:
//!
//! ```text
//! C̃_q(K_r, S^{n-1} ∩ L) = c r^k ∫∫ s^{q-1} t^{n-k-1} (r² + t²)^{(q-n)/2} ds dt
//! C̃_q(K_r, S^{n-1})     = c r^k ∫∫ s^{k-1} t^{n-k-1} (r²s² + t²)^{(q-n)/2} ds dt
//! ```

use crate::quadrature::{integrate_unit_square, QuadratureSpec};
use crate::special::unit_ball_volume;
use crate::{Error, Result};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CylinderCase {
    pub n: usize,
    pub k: usize,
    pub q: f64,
    pub r: f64,
}

impl CylinderCase {
    pub fn new(n: usize, k: usize, q: f64, r: f64) -> Result<Self> {
        let case = CylinderCase { n, k, q, r };
        case.validate()?;
        Ok(case)
    }

    fn validate(&self) -> Result<()> {
        validate_shape(self.n, self.k, self.q)?;
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::InvalidParameter(format!("r = {} must be positive", self.r)));
        }
        Ok(())
    }
}

fn validate_shape(n: usize, k: usize, q: f64) -> Result<()> {
    if n < 2 || k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!("need 1 ≤ k < n, got k = {k}, n = {n}")));
    }
    if !(q > 0.0 && q <= n as f64) {
        return Err(Error::InvalidParameter(format!("q = {q} must lie in (0, {n}]")));
    }
    Ok(())
}

/// `c(q, k, n) = (q/n) k ω_k (n-k) ω_{n-k}`.
pub fn cyl_constant(q: f64, k: usize, n: usize) -> f64 {
    q / n as f64 * k as f64 * unit_ball_volume(k) * (n - k) as f64 * unit_ball_volume(n - k)
}

/// `∫₀¹∫₀¹ s^{q-1} t^{n-k-1} (r² + t²)^{(q-n)/2} ds dt`. At `r = 0` this is
/// the limit `1/(q(q-k))`, finite only for `q > k`.
pub fn subspace_kernel_integral(n: usize, k: usize, q: f64, r: f64, spec: &QuadratureSpec) -> Result<f64> {
    validate_shape(n, k, q)?;
    check_r(r)?;
    let (a, e) = ((n - k - 1) as f64, (q - n as f64) / 2.0);
    integrate_unit_square(
        |s, t| s.powf(q - 1.0) * t.powf(a) * (r * r + t * t).powf(e),
        spec,
    )
}

/// `∫₀¹∫₀¹ s^{k-1} t^{n-k-1} (r²s² + t²)^{(q-n)/2} ds dt`. At `r = 0` this is
/// `1/(k(q-k))` for `q > k`.
pub fn total_kernel_integral(n: usize, k: usize, q: f64, r: f64, spec: &QuadratureSpec) -> Result<f64> {
    validate_shape(n, k, q)?;
    check_r(r)?;
    let (b, a, e) = ((k - 1) as f64, (n - k - 1) as f64, (q - n as f64) / 2.0);
    integrate_unit_square(
        |s, t| s.powf(b) * t.powf(a) * (r * r * s * s + t * t).powf(e),
        spec,
    )
}

/// The total kernel after `t ↦ s t`, which stretches the inner range to
/// `[0, 1/s]`: the part over `[0, 1]` is the subspace kernel, and the part
/// over `[1, 1/s]` becomes a unit-square integral under `t = s^{-v}`:
///
/// ```text
/// ∫₀¹∫₀¹ (-ln s) s^{q-1-v(q-k)} (1 + r² s^{2v})^{(q-n)/2} dv ds
/// ```
pub fn total_kernel_rewritten(n: usize, k: usize, q: f64, r: f64, spec: &QuadratureSpec) -> Result<f64> {
    let inner = subspace_kernel_integral(n, k, q, r, spec)?;
    let e = (q - n as f64) / 2.0;
    let outer = integrate_unit_square(
        |s, v| -s.ln() * s.powf(q - 1.0 - v * (q - k as f64)) * (1.0 + r * r * s.powf(2.0 * v)).powf(e),
        spec,
    )?;
    Ok(inner + outer)
}

fn check_r(r: f64) -> Result<()> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("r = {r} must be non-negative")));
    }
    Ok(())
}

fn prefactor(case: &CylinderCase) -> f64 {
    cyl_constant(case.q, case.k, case.n) * case.r.powi(case.k as i32)
}

/// `C̃_q(K_r, S^{n-1} ∩ span(e₁, …, e_k))`.
pub fn cyl_subspace_measure(case: &CylinderCase, spec: &QuadratureSpec) -> Result<f64> {
    case.validate()?;
    Ok(prefactor(case) * subspace_kernel_integral(case.n, case.k, case.q, case.r, spec)?)
}

/// `C̃_q(K_r, S^{n-1})`, checked against the rewritten form to
/// `spec.rel_tol` (a loosened multiple, since both are quadratures).
pub fn cyl_total_measure(case: &CylinderCase, spec: &QuadratureSpec) -> Result<f64> {
    case.validate()?;
    let direct = total_kernel_integral(case.n, case.k, case.q, case.r, spec)?;
    let rewritten = total_kernel_rewritten(case.n, case.k, case.q, case.r, spec)?;
    let gap = (direct - rewritten).abs() / direct.abs();
    let tol = REWRITE_AGREEMENT * spec.rel_tol;
    if !(gap <= tol) {
        return Err(Error::NoConvergence {
            rel_tol: tol,
            achieved: gap,
        });
    }
    Ok(prefactor(case) * direct)
}

/// Allowed disagreement between the two total forms, in units of `rel_tol`.
const REWRITE_AGREEMENT: f64 = 100.0;

/// `C̃_q(K_r, S^{n-1})` through the rewritten form alone.
pub fn cyl_total_measure_rewritten(case: &CylinderCase, spec: &QuadratureSpec) -> Result<f64> {
    case.validate()?;
    Ok(prefactor(case) * total_kernel_rewritten(case.n, case.k, case.q, case.r, spec)?)
}

pub fn cyl_ratio(case: &CylinderCase, spec: &QuadratureSpec) -> Result<f64> {
    Ok(cyl_row(case, spec)?.ratio)
}

/// `vol(K_r) = r^k ω_k ω_{n-k}`, the total measure at `q = n`.
pub fn cyl_volume(n: usize, k: usize, r: f64) -> f64 {
    r.powi(k as i32) * unit_ball_volume(k) * unit_ball_volume(n - k)
}

/// `lim_{r→0⁺}` of the ratio: `k/q` for `q > k`, otherwise 1.
pub fn cyl_limit(k: usize, q: f64) -> f64 {
    (k as f64 / q).min(1.0)
}

/// Lower bound `(2^{q-n}/q) (r^{q-k} - 1)/(k - q)` on the total kernel for
/// `q < k`, which grows without bound as `r → 0⁺`.
pub fn total_kernel_lower_bound(n: usize, k: usize, q: f64, r: f64) -> f64 {
    2f64.powf(q - n as f64) / q * (r.powf(q - k as f64) - 1.0) / (k as f64 - q)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CylRow {
    pub r: f64,
    pub subspace: f64,
    pub total: f64,
    pub ratio: f64,
}

fn cyl_row(case: &CylinderCase, spec: &QuadratureSpec) -> Result<CylRow> {
    let subspace = cyl_subspace_measure(case, spec)?;
    let total = cyl_total_measure(case, spec)?;
    Ok(CylRow {
        r: case.r,
        subspace,
        total,
        ratio: subspace / total,
    })
}

/// One row per radius; the radii must be positive and strictly decreasing.
pub fn cyl_sweep(k: usize, n: usize, q: f64, r_list: &[f64], spec: &QuadratureSpec) -> Result<Vec<CylRow>> {
    if r_list.is_empty() {
        return Err(Error::InvalidParameter("r list is empty".into()));
    }
    if r_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("r list must be strictly decreasing".into()));
    }
    r_list
        .iter()
        .map(|&r| cyl_row(&CylinderCase::new(n, k, q, r)?, spec))
        .collect()
}

/// The radii `10^{-l}`, `l = 0, …, levels - 1`.
pub fn standard_radii(levels: u32) -> Vec<f64> {
    (0..levels).map(|l| 10f64.powi(-(l as i32))).collect()
}
