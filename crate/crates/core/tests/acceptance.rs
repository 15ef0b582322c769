//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use dualcurv::bodies::{random_ellipsoid, random_symmetric_polytope, PolytopeH, ProductCylinder, SymmetricBody};
use dualcurv::concentration::{check_theorem_bound, concentration_profile, concentration_ratio, TheoremCase};
use dualcurv::cylinder::{cyl_ratio, cyl_subspace_measure, cyl_total_measure, subspace_kernel_integral, total_kernel_integral, CylinderCase};
use dualcurv::measures::{cone_volume_exact, dual_curvature, DualCurvatureQuery, SphericalRegion};
use dualcurv::quadrature::{derive_seed, QuadratureSpec};
use dualcurv::special::unit_ball_volume;
use dualcurv::unimodal::{brunn_minkowski_check, lemma_check, UnimodalFn};
use dualcurv::{make_subspace, GeneralPolytopeV, Subspace, Verdict};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::process::Command;
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Rounding slack for comparisons whose Monte Carlo error is exactly zero.
const ROUNDING: f64 = 1e-12;

fn criterion_1() -> Outcome {
    let ball = SymmetricBody::unit_ball(3);
    let omega = unit_ball_volume(3);
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, q) in [0.5, 1.0, 2.0, 3.0].into_iter().enumerate() {
        let t = Instant::now();
        let est = dual_curvature(&DualCurvatureQuery::new(&ball, q), &QuadratureSpec::new(1_000_000, i as u64)).unwrap();
        let secs = t.elapsed().as_secs_f64();
        let ok = (est.value - omega).abs() <= 3.0 * est.std_err + ROUNDING * omega && secs < 10.0;
        pass &= ok;
        parts.push(format!("q={q}: {:.6} ± {:.1e} ({secs:.2}s)", est.value, est.std_err));
    }
    outcome(pass, format!("ω₃ = {omega:.6}; {}", parts.join(", ")))
}

fn criterion_2() -> Outcome {
    let cube = PolytopeH::cube(3);
    let body = SymmetricBody::from(cube.clone());
    let mc = dual_curvature(&DualCurvatureQuery::new(&body, 3.0), &QuadratureSpec::new(1_000_000, 2)).unwrap();
    let exact = cone_volume_exact(&cube, &SphericalRegion::FullSphere).unwrap();
    let mut pass = (mc.value - 8.0).abs() <= 3.0 * mc.std_err && (exact.value - 8.0).abs() <= ROUNDING * 8.0;
    let mut ratios = Vec::new();
    for k in 1..3 {
        for combo in [[0usize, 1], [0, 2], [1, 2]].iter().map(|c| &c[..k]) {
            let l = make_subspace(&combo.iter().map(|&i| unit(3, i)).collect::<Vec<_>>()).unwrap();
            let v = cone_volume_exact(&cube, &SphericalRegion::SubspaceSphere(l)).unwrap();
            let ratio = v.value / exact.value;
            pass &= (ratio - k as f64 / 3.0).abs() <= ROUNDING;
            ratios.push(ratio);
        }
    }
    outcome(
        pass,
        format!(
            "MC total {:.5} ± {:.1e}, exact {}, coordinate ratios {:?}",
            mc.value, mc.std_err, exact.value, ratios
        ),
    )
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

/// A subspace spanned by a random subset of the facet normals, of random
/// dimension in `1..n`.
fn random_normal_subspace(poly: &PolytopeH, rng: &mut ChaCha8Rng) -> Subspace {
    let n = poly.dim();
    loop {
        let d = rng.random_range(1..n);
        let picks = sample(rng, poly.pair_count(), d);
        let vectors: Vec<Vec<f64>> = picks.iter().map(|i| poly.normals()[i].clone()).collect();
        if let Ok(l) = make_subspace(&vectors) {
            return l;
        }
    }
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut cases = Vec::new();
    for _ in 0..200 {
        let n = rng.random_range(3..=4);
        let pairs = rng.random_range(6..=20);
        let poly = random_symmetric_polytope(n, pairs, &mut rng);
        let subspaces = (0..3).map(|_| random_normal_subspace(&poly, &mut rng)).collect();
        cases.push((n, TheoremCase { body: poly.into(), subspaces }));
    }
    let spec = QuadratureSpec::new(1_000_000, 3);
    let mut violations = 0;
    let mut checks = 0;
    let mut candidates = 0;
    let mut unconfirmed = 0;
    for (i, (n, case)) in cases.iter().enumerate() {
        let qs: Vec<f64> = (0..5).map(|j| 1.0 + (*n as f64 - 1.0) * j as f64 / 4.0).collect();
        let body_spec = spec.with_seed(derive_seed(spec.seed, i as u64));
        for c in check_theorem_bound(std::slice::from_ref(case), &qs, &body_spec).unwrap() {
            checks += 1;
            match c.report.verdict {
                Verdict::Violation => violations += 1,
                Verdict::EqualityCandidate => {
                    candidates += 1;
                    if c.equality_confirmed == Some(false) {
                        unconfirmed += 1;
                    }
                }
                Verdict::StrictPass => {}
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        violations == 0 && secs < 900.0,
        format!(
            "{checks} checks, {violations} violations, {candidates} equality candidates ({unconfirmed} rejected by the exact cone-volume check), {secs:.1}s"
        ),
    )
}

fn criterion_4() -> Outcome {
    let cube = SymmetricBody::from(PolytopeH::cube(3));
    let l = make_subspace(&[unit(3, 0)]).unwrap();
    let r = concentration_ratio(&cube, 2.0, &l, &QuadratureSpec::new(10_000_000, 4)).unwrap();
    let sigmas = r.margin / r.std_err;
    outcome(
        r.bound == 0.5 && r.margin >= 5.0 * r.std_err,
        format!("ratio {:.6} ± {:.1e}, bound {}, margin {sigmas:.0}σ", r.ratio, r.std_err, r.bound),
    )
}

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let qspec = QuadratureSpec::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, k, q) in [(3, 1, 2.0), (4, 1, 3.0), (4, 2, 3.0)] {
        let r = cyl_ratio(&CylinderCase::new(n, k, q, 1e-3).unwrap(), &qspec).unwrap();
        let target = k as f64 / q;
        pass &= (r - target).abs() < 0.05;
        parts.push(format!("({n},{k},{q}) {r:.4}→{target:.4}"));
    }
    for (n, k, q) in [(3, 2, 1.0), (4, 3, 2.0)] {
        let r = cyl_ratio(&CylinderCase::new(n, k, q, 1e-3).unwrap(), &qspec).unwrap();
        pass &= r >= 0.95;
        parts.push(format!("({n},{k},{q}) {r:.4}≥0.95"));
    }
    let mut worst: f64 = 0.0;
    let mut seed = 50;
    for (n, k, q) in [(3, 1, 2.0), (4, 1, 3.0), (4, 2, 3.0), (3, 2, 1.0), (4, 3, 2.0), (3, 1, 3.0)] {
        for r in [0.5, 1.0] {
            let case = CylinderCase::new(n, k, q, r).unwrap();
            let body = SymmetricBody::from(ProductCylinder::new(r, k, n).unwrap());
            let region = SphericalRegion::SubspaceSphere(Subspace::coordinate(k, n).unwrap());
            let mc_spec = QuadratureSpec::new(1_000_000, seed);
            seed += 1;
            let mc_sub = dual_curvature(&DualCurvatureQuery::new(&body, q).region(&region), &mc_spec).unwrap();
            let mc_tot = dual_curvature(&DualCurvatureQuery::new(&body, q), &mc_spec).unwrap();
            let cf_sub = cyl_subspace_measure(&case, &qspec).unwrap();
            let cf_tot = cyl_total_measure(&case, &qspec).unwrap();
            for (mc, cf) in [(mc_sub, cf_sub), (mc_tot, cf_tot)] {
                let ok = (mc.value - cf).abs() <= 3.0 * mc.std_err + qspec.rel_tol * cf.abs();
                pass &= ok;
                worst = worst.max((mc.value - cf).abs() / mc.std_err);
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    pass &= secs < 300.0;
    outcome(
        pass,
        format!("{}; closed form vs MC worst {worst:.2}σ; {secs:.1}s", parts.join(", ")),
    )
}

fn criterion_6() -> Outcome {
    let spec = QuadratureSpec::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, q) in [(1usize, 2.0f64), (1, 3.0), (2, 3.0)] {
        let n = 3;
        let s = subspace_kernel_integral(n, k, q, 0.0, &spec).unwrap();
        let t = total_kernel_integral(n, k, q, 0.0, &spec).unwrap();
        let es = 1.0 / (q * (q - k as f64));
        let et = 1.0 / (k as f64 * (q - k as f64));
        let (ds, dt) = ((s - es).abs() / es, (t - et).abs() / et);
        pass &= ds <= 1e-6 && dt <= 1e-6;
        parts.push(format!("(k={k},q={q}) rel err {ds:.1e}, {dt:.1e}"));
    }
    outcome(pass, parts.join(", "))
}

fn criterion_7() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spec = QuadratureSpec::new(200_000, 7);
    let mut failures = 0;
    let mut inconsistent = 0;
    for trial in 0..100u64 {
        let n = rng.random_range(2..=3);
        let count = rng.random_range(n + 2..=12);
        let body = GeneralPolytopeV::random(n, count, -1.0, 1.5, &mut rng);
        let lambda = rng.random_range(1..=9) as f64 / 10.0;
        let p = [-0.5, -1.0, -1.5][rng.random_range(0..3)];
        let r = lemma_check(&body, lambda, &UnimodalFn::power(p), &spec.with_seed(derive_seed(7, trial))).unwrap();
        failures += usize::from(!r.pass);
        inconsistent += usize::from(r.equality_consistent == Some(false));
    }
    let square = GeneralPolytopeV::from_box(&[0.0, -1.0], &[2.0, 1.0]).unwrap();
    let r = lemma_check(&square, 0.5, &UnimodalFn::power(-1.0), &QuadratureSpec::new(1_000_000, 70)).unwrap();
    let shifted_ok = r.diff >= 5.0 * r.diff_std_err;
    let secs = t.elapsed().as_secs_f64();
    outcome(
        failures == 0 && shifted_ok && secs < 300.0,
        format!(
            "100 trials, {failures} failures, {inconsistent} inconsistent equality diagnostics; shifted square lhs-rhs = {:.4} ({:.0}σ); {secs:.1}s",
            r.diff,
            r.diff / r.diff_std_err
        ),
    )
}

fn criterion_8() -> Outcome {
    let spec = QuadratureSpec::new(1_000_000, 8);
    let a = GeneralPolytopeV::from_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
    let b = GeneralPolytopeV::from_box(&[-2.0, -2.0], &[2.0, 2.0]).unwrap();
    let h = brunn_minkowski_check(&a, &b, 0.5, &spec).unwrap();
    let homothety_ok = h.homothetic && (h.lhs - h.rhs).abs() <= h.std_err + ROUNDING * h.rhs;
    let s = 2f64.sqrt();
    let diamond = GeneralPolytopeV::new(vec![vec![s, 0.0], vec![0.0, s], vec![-s, 0.0], vec![0.0, -s]]).unwrap();
    let r = brunn_minkowski_check(&a, &diamond, 0.5, &spec).unwrap();
    let strict_ok = !r.homothetic && r.lhs - r.rhs >= 5.0 * r.std_err;
    outcome(
        homothety_ok && strict_ok,
        format!(
            "homothetic: {:.6} vs {:.6} (homothety {}); rotated: {:.5} vs {:.5} ({:.0}σ)",
            h.lhs,
            h.rhs,
            h.homothetic,
            r.lhs,
            r.rhs,
            (r.lhs - r.rhs) / r.std_err
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut violations = 0;
    let mut checks = 0;
    for i in 0..20u64 {
        let n = rng.random_range(3..=4);
        let pairs = rng.random_range(6..=14);
        let poly = random_symmetric_polytope(n, pairs, &mut rng);
        let gauge = SymmetricBody::from(random_ellipsoid(n, &mut rng));
        let mut subspaces = Vec::new();
        while subspaces.len() < 3 {
            let l = random_normal_subspace(&poly, &mut rng);
            if l.dim() <= 2 {
                subspaces.push(l);
            }
        }
        let body = SymmetricBody::from(poly);
        let grid = concentration_profile(
            &body,
            Some(&gauge),
            &[1.0, 2.0],
            &subspaces,
            &QuadratureSpec::new(1_000_000, derive_seed(9, i)),
        )
        .unwrap();
        for r in grid.iter().flatten().filter(|r| r.dim_l as f64 <= r.q) {
            checks += 1;
            violations += usize::from(r.verdict == Verdict::Violation);
        }
    }
    outcome(violations == 0, format!("{checks} checks, {violations} violations"))
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name);
    std::fs::write(
        path("cube.json"),
        r#"{"type":"polytope_h","normals":[[1,0,0],[0,1,0],[0,0,1]],"offsets":[1,1,1]}"#,
    )
    .unwrap();
    std::fs::write(path("shift.json"), r#"{"type":"polytope_v","vertices":[[0,-1],[2,-1],[2,1],[0,1]]}"#).unwrap();
    std::fs::write(path("square.json"), r#"{"type":"polytope_v","vertices":[[-1,-1],[1,-1],[1,1],[-1,1]]}"#).unwrap();
    let cube = path("cube.json").display().to_string();
    let shift = path("shift.json").display().to_string();
    let square = path("square.json").display().to_string();
    let commands: Vec<Vec<String>> = [
        vec!["measure", "--body", &cube, "--q", "2", "--samples", "20000", "--seed", "5"],
        vec!["ratio", "--body", &cube, "--q", "3", "--subspace", "1,0,0", "--samples", "20000"],
        vec!["scc", "--body", &cube, "--format", "csv"],
        vec!["cyl-sweep", "--n", "3", "--k", "1", "--q", "2", "--r-list", "1,0.1", "--format", "csv"],
        vec!["lemma", "--body", &shift, "--lambda", "0.5", "--p", "-1", "--samples", "20000"],
        vec!["bm", "--body", &square, "--body2", &shift, "--lambda", "0.3", "--samples", "20000"],
    ]
    .iter()
    .map(|c| c.iter().map(|s| s.to_string()).collect())
    .collect();
    let mut identical = 0;
    for (i, args) in commands.iter().enumerate() {
        let outputs: Vec<Vec<u8>> = ["1", "2", "1"]
            .iter()
            .enumerate()
            .map(|(j, threads)| {
                let out = path(&format!("out_{i}_{j}"));
                let status = Command::new(env!("CARGO_BIN_EXE_dualcurv"))
                    .args(args)
                    .arg("--out")
                    .arg(&out)
                    .env("DUALCURV_THREADS", threads)
                    .status()
                    .unwrap();
                assert!(status.code() == Some(0), "{args:?} exited with {status}");
                std::fs::read(&out).unwrap()
            })
            .collect();
        if outputs.windows(2).all(|w| w[0] == w[1]) && !outputs[0].is_empty() {
            identical += 1;
        }
    }
    outcome(
        identical == commands.len(),
        format!("{identical}/{} commands byte-identical across reruns and thread counts", commands.len()),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("totals of the unit ball", criterion_1),
        ("volume identity for the cube", criterion_2),
        ("subspace bound on random polytopes", criterion_3),
        ("strictness for q < n", criterion_4),
        ("cylinder limits and cross-engine agreement", criterion_5),
        ("limit constants at r = 0", criterion_6),
        ("unimodal integral battery", criterion_7),
        ("Brunn–Minkowski cases", criterion_8),
        ("gauge-body bound", criterion_9),
        ("determinism", criterion_10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = format!("criterion_{}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| *f == id || name.contains(f.as_str())) {
            continue;
        }
        let o = run();
        println!("{} {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
