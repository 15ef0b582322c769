//! Command-line front end. Every command writes one JSON object or one CSV
//! table. Exit status is 0 on success, 2 when a checked inequality fails
//! (a `Violation` verdict, a failed condition or comparison), 1 on errors.

use crate::concentration::{check_scc_polytope, concentration_ratio_with_gauge, make_subspace, Subspace};
use crate::cylinder::{cyl_limit, cyl_sweep};
use crate::format::{fmt_csv, parse_body, Table};
use crate::measures::{dual_curvature, dual_curvature_euclidean, DualCurvatureQuery, SphericalRegion};
use crate::quadrature::QuadratureSpec;
use crate::unimodal::{brunn_minkowski_check, lemma_check, UnimodalFn};
use crate::{Error, Result, Verdict};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

/// Smallest accepted sample count.
pub const MIN_SAMPLES: u64 = 1000;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "DUALCURV_THREADS";

#[derive(Debug, Parser)]
#[command(name = "dualcurv", version, about = "Dual curvature measures and subspace concentration")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a dual curvature measure on a spherical region.
    Measure(MeasureArgs),
    /// Concentration ratio on a subspace against min{dim L / q, 1}.
    Ratio(RatioArgs),
    /// Subspace concentration condition for the cone-volume measure of an H-polytope.
    Scc(SccArgs),
    /// Closed-form cylinder ratios over a list of radii.
    CylSweep(CylSweepArgs),
    /// Integral of |x|^p (or a gauge power) over λK + (1-λ)(-K) against K.
    Lemma(LemmaArgs),
    /// Brunn–Minkowski comparison of two vertex polytopes.
    Bm(BmArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RegionArg {
    Full,
    Subspace,
    Complement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Spherical integral of the radial function.
    Sphere,
    /// Volume integral over the body.
    Euclidean,
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    pub format: OutFormat,
    /// Write the result here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Common {
    fn spec(&self) -> Result<QuadratureSpec> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::InvalidParameter(format!(
                "--samples {} is below the minimum {MIN_SAMPLES}",
                self.samples
            )));
        }
        Ok(QuadratureSpec::new(self.samples, self.seed))
    }
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[arg(long)]
    pub body: PathBuf,
    #[arg(long)]
    pub q: f64,
    /// Gauge body M for the integrand ρ_M^{n-q} ρ_K^q.
    #[arg(long)]
    pub gauge: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = RegionArg::Full)]
    pub region: RegionArg,
    /// Spanning vectors, `;`-separated, coordinates `,`-separated.
    #[arg(long)]
    pub subspace: Option<String>,
    #[arg(long, value_enum, default_value_t = MethodArg::Sphere)]
    pub method: MethodArg,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct RatioArgs {
    #[arg(long)]
    pub body: PathBuf,
    #[arg(long)]
    pub q: f64,
    #[arg(long)]
    pub subspace: String,
    #[arg(long)]
    pub gauge: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SccArgs {
    #[arg(long)]
    pub body: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CylSweepArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub q: f64,
    /// Decreasing radii, `,`-separated.
    #[arg(long, default_value = "1,0.1,0.01,0.001")]
    pub r_list: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct LemmaArgs {
    /// A `polytope_v` body.
    #[arg(long)]
    pub body: PathBuf,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub p: f64,
    /// Use ‖x‖_M^p for this symmetric body M instead of |x|^p.
    #[arg(long)]
    pub gauge: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BmArgs {
    #[arg(long)]
    pub body: PathBuf,
    #[arg(long)]
    pub body2: PathBuf,
    #[arg(long)]
    pub lambda: f64,
    #[command(flatten)]
    pub common: Common,
}

/// A rendered result and whether it reports a failed inequality.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub failed_check: bool,
}

pub fn parse_vectors(text: &str, field: &str) -> Result<Vec<Vec<f64>>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|v| parse_list(v, field))
        .collect()
}

pub fn parse_list(text: &str, field: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|e| Error::parse(field, format!("`{}`: {e}", x.trim())))
        })
        .collect()
}

fn parse_subspace(text: &str) -> Result<Subspace> {
    make_subspace(&parse_vectors(text, "subspace")?)
}

fn symmetric(path: &Path, field: &str) -> Result<crate::SymmetricBody> {
    parse_body(path)?.into_symmetric(field)
}

fn vertex(path: &Path, field: &str) -> Result<crate::GeneralPolytopeV> {
    parse_body(path)?.into_vertex(field)
}

fn render_json(value: Value) -> String {
    let mut s = serde_json::to_string_pretty(&value).expect("JSON values serialize");
    s.push('\n');
    s
}

fn render_one(format: OutFormat, object: Value, columns: &[&str]) -> String {
    match format {
        OutFormat::Json => render_json(object),
        OutFormat::Csv => {
            let mut table = Table::new(columns);
            table.push(columns.iter().map(|c| csv_cell(&object[*c])).collect());
            table.render()
        }
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Number(x) => match x.as_u64() {
            Some(i) => i.to_string(),
            None => fmt_csv(x.as_f64().unwrap_or(f64::NAN)),
        },
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Executes one command.
pub fn execute(config: &RunConfig) -> Result<Outcome> {
    match &config.command {
        Command::Measure(a) => measure(a),
        Command::Ratio(a) => ratio(a),
        Command::Scc(a) => scc(a),
        Command::CylSweep(a) => sweep(a),
        Command::Lemma(a) => lemma(a),
        Command::Bm(a) => bm(a),
    }
}

fn measure(a: &MeasureArgs) -> Result<Outcome> {
    let spec = a.common.spec()?;
    let body = symmetric(&a.body, "body")?;
    let gauge = a.gauge.as_ref().map(|p| symmetric(p, "gauge")).transpose()?;
    let region = match (a.region, &a.subspace) {
        (RegionArg::Full, _) => SphericalRegion::FullSphere,
        (RegionArg::Subspace, Some(s)) => SphericalRegion::SubspaceSphere(parse_subspace(s)?),
        (RegionArg::Complement, Some(s)) => SphericalRegion::Complement(parse_subspace(s)?),
        (_, None) => {
            return Err(Error::InvalidParameter("--region subspace/complement needs --subspace".into()));
        }
    };
    let mut query = DualCurvatureQuery::new(&body, a.q).region(&region);
    if let Some(m) = &gauge {
        query = query.gauge(m);
    }
    let est = match a.method {
        MethodArg::Sphere => dual_curvature(&query, &spec)?,
        MethodArg::Euclidean => dual_curvature_euclidean(&query, &spec)?,
    };
    let object = json!({
        "command": "measure",
        "q": a.q,
        "n": body.dim(),
        "region": format!("{:?}", a.region).to_lowercase(),
        "method": format!("{:?}", a.method).to_lowercase(),
        "value": est.value,
        "std_err": est.std_err,
        "samples": est.samples,
        "seed": est.seed,
    });
    Ok(Outcome {
        text: render_one(a.common.format, object, &["value", "std_err", "samples", "seed"]),
        failed_check: false,
    })
}

fn ratio(a: &RatioArgs) -> Result<Outcome> {
    let spec = a.common.spec()?;
    let body = symmetric(&a.body, "body")?;
    let gauge = a.gauge.as_ref().map(|p| symmetric(p, "gauge")).transpose()?;
    let l = parse_subspace(&a.subspace)?;
    let r = concentration_ratio_with_gauge(&body, gauge.as_ref(), a.q, &l, &spec)?;
    let object = json!({
        "command": "ratio",
        "q": r.q,
        "dim_l": r.dim_l,
        "ratio": r.ratio,
        "value": r.ratio,
        "std_err": r.std_err,
        "bound": r.bound,
        "margin": r.margin,
        "samples": r.samples,
        "seed": r.seed,
        "verdict": r.verdict.as_str(),
    });
    Ok(Outcome {
        text: render_one(
            a.common.format,
            object,
            &["ratio", "std_err", "bound", "margin", "q", "dim_l", "samples", "seed", "verdict"],
        ),
        failed_check: r.verdict == Verdict::Violation,
    })
}

fn scc(a: &SccArgs) -> Result<Outcome> {
    let body = symmetric(&a.body, "body")?;
    let poly = body
        .as_polytope()
        .ok_or_else(|| Error::parse("body", "scc needs a polytope_h body"))?;
    let report = check_scc_polytope(poly)?;
    let text = match a.common.format {
        OutFormat::Json => {
            let candidates: Vec<Value> = report
                .candidates
                .iter()
                .map(|c| {
                    json!({
                        "dim_l": c.subspace.dim(),
                        "pairs": c.pairs,
                        "mass": c.mass,
                        "ratio": c.ratio,
                        "bound": c.bound,
                        "at_equality": c.at_equality,
                        "complement_dim": c.complement.as_ref().map(|s| s.dim()),
                    })
                })
                .collect();
            render_json(json!({
                "command": "scc",
                "value": report.total,
                "holds": report.holds,
                "verdict": if report.holds { "holds" } else { "fails" },
                "degenerate": report.degenerate,
                "candidates": candidates,
            }))
        }
        OutFormat::Csv => {
            let mut t = Table::new(&["dim_l", "pairs", "mass", "ratio", "bound", "at_equality", "complement_dim"]);
            for c in &report.candidates {
                t.push(vec![
                    c.subspace.dim().to_string(),
                    c.pairs.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" "),
                    fmt_csv(c.mass),
                    fmt_csv(c.ratio),
                    fmt_csv(c.bound),
                    c.at_equality.to_string(),
                    c.complement.as_ref().map(|s| s.dim().to_string()).unwrap_or_default(),
                ]);
            }
            t.render()
        }
    };
    Ok(Outcome {
        text,
        failed_check: !report.holds,
    })
}

fn sweep(a: &CylSweepArgs) -> Result<Outcome> {
    a.common.spec()?;
    let radii = parse_list(&a.r_list, "r-list")?;
    let rows = cyl_sweep(a.k, a.n, a.q, &radii, &QuadratureSpec::default())?;
    let text = match a.common.format {
        OutFormat::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| json!({"r": r.r, "subspace": r.subspace, "total": r.total, "ratio": r.ratio}))
                .collect();
            render_json(json!({
                "command": "cyl-sweep",
                "n": a.n,
                "k": a.k,
                "q": a.q,
                "limit": cyl_limit(a.k, a.q),
                "rows": rows,
            }))
        }
        OutFormat::Csv => {
            let mut t = Table::new(&["r", "subspace", "total", "ratio"]);
            for r in &rows {
                t.push(vec![fmt_csv(r.r), fmt_csv(r.subspace), fmt_csv(r.total), fmt_csv(r.ratio)]);
            }
            t.render()
        }
    };
    Ok(Outcome {
        text,
        failed_check: false,
    })
}

fn lemma(a: &LemmaArgs) -> Result<Outcome> {
    let spec = a.common.spec()?;
    let body = vertex(&a.body, "body")?;
    let f = match &a.gauge {
        None => UnimodalFn::power(a.p),
        Some(path) => UnimodalFn::GaugePower {
            gauge: symmetric(path, "gauge")?,
            p: a.p,
        },
    };
    let r = lemma_check(&body, a.lambda, &f, &spec)?;
    let object = json!({
        "command": "lemma",
        "lambda": r.lambda,
        "p": r.p,
        "lhs": r.lhs.value,
        "lhs_std_err": r.lhs.std_err,
        "rhs": r.rhs.value,
        "rhs_std_err": r.rhs.std_err,
        "value": r.diff,
        "std_err": r.diff_std_err,
        "samples": r.lhs.samples,
        "seed": r.lhs.seed,
        "pass": r.pass,
        "equality_consistent": r.equality_consistent,
        "verdict": if r.pass { "pass" } else { "fail" },
    });
    Ok(Outcome {
        text: render_one(
            a.common.format,
            object,
            &["lhs", "lhs_std_err", "rhs", "rhs_std_err", "value", "std_err", "samples", "seed", "verdict"],
        ),
        failed_check: !r.pass,
    })
}

fn bm(a: &BmArgs) -> Result<Outcome> {
    let spec = a.common.spec()?;
    let k0 = vertex(&a.body, "body")?;
    let k1 = vertex(&a.body2, "body2")?;
    let r = brunn_minkowski_check(&k0, &k1, a.lambda, &spec)?;
    let object = json!({
        "command": "bm",
        "lambda": r.lambda,
        "lhs": r.lhs,
        "rhs": r.rhs,
        "value": r.lhs - r.rhs,
        "std_err": r.std_err,
        "exact_lhs": r.exact_lhs,
        "exact_rhs": r.exact_rhs,
        "homothetic": r.homothetic,
        "equality": r.equality,
        "samples": spec.samples,
        "seed": spec.seed,
        "verdict": if r.pass { "pass" } else { "fail" },
    });
    Ok(Outcome {
        text: render_one(
            a.common.format,
            object,
            &["lhs", "rhs", "value", "std_err", "exact_lhs", "exact_rhs", "homothetic", "samples", "seed", "verdict"],
        ),
        failed_check: !r.pass,
    })
}

fn out_path(config: &RunConfig) -> Option<&PathBuf> {
    match &config.command {
        Command::Measure(a) => a.common.out.as_ref(),
        Command::Ratio(a) => a.common.out.as_ref(),
        Command::Scc(a) => a.common.out.as_ref(),
        Command::CylSweep(a) => a.common.out.as_ref(),
        Command::Lemma(a) => a.common.out.as_ref(),
        Command::Bm(a) => a.common.out.as_ref(),
    }
}

fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t >= 1 => Ok(Some(t)),
            _ => Err(Error::parse(THREADS_ENV, format!("`{v}` is not a positive integer"))),
        },
    }
}

fn run_inner(config: &RunConfig) -> Result<bool> {
    let outcome = match thread_cap()? {
        None => execute(config)?,
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(|| execute(config))?,
    };
    match out_path(config) {
        Some(path) => std::fs::write(path, &outcome.text)?,
        None => print!("{}", outcome.text),
    }
    Ok(outcome.failed_check)
}

/// Runs a parsed configuration and returns the process exit code.
pub fn run(config: &RunConfig) -> i32 {
    match run_inner(config) {
        Ok(false) => 0,
        Ok(true) => 2,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
