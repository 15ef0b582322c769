//! Unit-ball constants.

use std::f64::consts::PI;

/// Volume `ω_m = π^{m/2} / Γ(m/2 + 1)` of the m-dimensional unit ball.
///
/// Evaluated through the exact recurrence `ω_m = (2π/m) ω_{m-2}` from
/// `ω_0 = 1`, `ω_1 = 2`, so no Gamma function is needed for integer `m`.
pub fn unit_ball_volume(m: usize) -> f64 {
    let mut omega = if m.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut d = if m.is_multiple_of(2) { 2 } else { 3 };
    while d <= m {
        omega *= 2.0 * PI / d as f64;
        d += 2;
    }
    omega
}

/// Surface area `n ω_n` of the unit sphere `S^{n-1}`.
pub fn sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}
