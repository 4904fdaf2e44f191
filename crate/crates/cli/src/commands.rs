use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use ssd_relax::dominance::{
    dist_to_dominating, dominates_second, lorenz_gap_sup, shortfall_gap_sup,
};
use ssd_relax::io::read_distribution;
use ssd_relax::oracle::oracle_distance;
use ssd_relax::problems::{
    inspection_problem, relief_problem, BenchmarkMode, InspectionSpec, ReliefSpec,
};
use ssd_relax::projection;
use ssd_relax::solver::{solve_relaxed, ScenarioProblem, SolveReport, SolverConfig};
use ssd_relax::transport::wasserstein;
use ssd_relax::{Distribution, Error};

use crate::{BenchmarkKind, Family};

/// Agreement required between the three routes in `verify`.
const VERIFY_TOL: f64 = 1e-7;
const CURVE_POINTS: usize = 200;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn user(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_internal() {
            Failure::internal(e.to_string())
        } else {
            Failure::user(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

/// Caps the rayon pool at `SSD_RELAX_THREADS` when set.
pub fn configure_threads() -> Outcome {
    let Ok(raw) = std::env::var("SSD_RELAX_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        Failure::user(format!(
            "SSD_RELAX_THREADS must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::internal(e.to_string()))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::user(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::user(format!("{}: {e}", path.display())))
}

fn read_optional<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Failure> {
    path.map_or_else(|| Ok(T::default()), read_json)
}

fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::user(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::internal(e.to_string()))
        }
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Outcome {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Failure::internal(e.to_string()))?;
    text.push('\n');
    emit(out, &text)
}

pub fn distance(x: &Path, y: &Path) -> Outcome {
    let (x, y) = (read_distribution(x)?, read_distribution(y)?);
    let d = dist_to_dominating(&x, &y)?;
    let l = lorenz_gap_sup(&x, &y);
    let s = shortfall_gap_sup(&x, &y);
    emit_json(
        None,
        &json!({
            "distance": d,
            "lorenz_sup": { "value": l.sup_value, "p": l.argmax_location },
            "shortfall_sup": { "value": s.sup_value, "eta": s.argmax_location },
            "dominates": dominates_second(&x, &y),
        }),
    )
}

pub fn project(x: &Path, y: &Path, out: Option<&Path>) -> Outcome {
    let (x, y) = (read_distribution(x)?, read_distribution(y)?);
    emit_json(out, &projection::project(&x, &y)?)
}

pub fn solve(
    problem: &Path,
    benchmark: &Path,
    config: Option<&Path>,
    alpha: Option<f64>,
    max_iter: Option<usize>,
    out: Option<&Path>,
) -> Outcome {
    let prob: ScenarioProblem = read_json(problem)?;
    let y = read_distribution(benchmark)?;
    let mut cfg: SolverConfig = read_optional(config)?;
    if let Some(a) = alpha {
        cfg.alpha = a;
    }
    if let Some(m) = max_iter {
        cfg.max_iter = m;
    }
    emit_json(out, &solve_relaxed(&prob, &y, &cfg)?)
}

pub struct BenchArgs<'a> {
    pub family: Family,
    pub alphas: &'a str,
    pub spec: Option<&'a Path>,
    pub seed: Option<u64>,
    pub benchmark: BenchmarkKind,
    pub shrink: f64,
    pub config: Option<&'a Path>,
    pub out: Option<&'a Path>,
}

fn parse_alphas(raw: &str) -> Result<Vec<f64>, Failure> {
    let alphas = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|a| *a >= 0.0 && a.is_finite())
                .ok_or_else(|| Failure::user(format!("bad penalty weight `{s}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if alphas.is_empty() {
        return Err(Failure::user("the alpha list is empty"));
    }
    Ok(alphas)
}

fn instance(
    family: Family,
    spec: Option<&Path>,
    seed: Option<u64>,
    kind: BenchmarkKind,
    shrink: f64,
    cfg: &SolverConfig,
) -> Result<(ScenarioProblem, Distribution), Failure> {
    match family {
        Family::Inspection => {
            let mut spec: InspectionSpec = read_optional(spec)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let BenchmarkKind::Tightened = kind {
                spec.tighten = Some(shrink);
            }
            Ok(inspection_problem(&spec)?)
        }
        Family::Relief => {
            let mut spec: ReliefSpec = read_optional(spec)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            let inst = relief_problem(&spec, cfg)?;
            let y = match kind {
                BenchmarkKind::Achievable => inst.benchmark(BenchmarkMode::Achievable, 0.0)?,
                BenchmarkKind::Tightened => inst.benchmark(BenchmarkMode::Tightened, shrink)?,
            };
            Ok((inst.problem, y))
        }
    }
}

pub fn bench(args: &BenchArgs) -> Outcome {
    let alphas = parse_alphas(args.alphas)?;
    let cfg: SolverConfig = read_optional(args.config)?;
    let (prob, y) = instance(
        args.family,
        args.spec,
        args.seed,
        args.benchmark,
        args.shrink,
        &cfg,
    )?;
    let reports: Vec<SolveReport> = alphas
        .par_iter()
        .map(|&alpha| {
            solve_relaxed(
                &prob,
                &y,
                &SolverConfig {
                    alpha,
                    ..cfg.clone()
                },
            )
        })
        .collect::<Result<_, _>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Failure::internal(e.to_string());
    w.write_record([
        "alpha",
        "expected_outcome",
        "distance",
        "iterations",
        "cpu_seconds",
    ])
    .map_err(fail)?;
    for (alpha, r) in alphas.iter().zip(&reports) {
        w.write_record([
            alpha.to_string(),
            r.outcome_mean.to_string(),
            r.distance_star.to_string(),
            r.iterations.to_string(),
            format!("{:.6}", r.wall_seconds),
        ])
        .map_err(fail)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Failure::internal(e.to_string()))?;
    emit(args.out, &String::from_utf8_lossy(&bytes))
}

/// Abscissae for the curves: every atom of every series plus evenly spaced
/// points over a padded common range.
fn curve_grid(dists: &[Distribution]) -> Vec<f64> {
    let lo = dists
        .iter()
        .map(Distribution::min_value)
        .fold(f64::INFINITY, f64::min);
    let hi = dists
        .iter()
        .map(Distribution::max_value)
        .fold(f64::NEG_INFINITY, f64::max);
    let pad = if hi > lo { 0.1 * (hi - lo) } else { 1.0 };
    let (lo, hi) = (lo - pad, hi + pad);
    let step = (hi - lo) / (CURVE_POINTS - 1) as f64;
    let mut xs: Vec<f64> = (0..CURVE_POINTS).map(|k| lo + step * k as f64).collect();
    xs.extend(dists.iter().flat_map(|d| d.values()));
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

pub fn curves(paths: &[impl AsRef<Path>], out: Option<&Path>) -> Outcome {
    let dists = paths
        .iter()
        .map(|p| read_distribution(p.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let xs = curve_grid(&dists);
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Failure::internal(e.to_string());
    w.write_record(["series", "kind", "x", "y"]).map_err(fail)?;
    for (path, d) in paths.iter().zip(&dists) {
        let name = path
            .as_ref()
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        for kind in ["cdf", "shortfall2", "excess"] {
            for &x in &xs {
                let y = match kind {
                    "cdf" => d.cdf(x),
                    "shortfall2" => d.shortfall2(x),
                    _ => d.excess2(x),
                };
                w.write_record([name.as_str(), kind, &x.to_string(), &y.to_string()])
                    .map_err(fail)?;
            }
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Failure::internal(e.to_string()))?;
    emit(out, &String::from_utf8_lossy(&bytes))
}

pub fn verify(x: &Path, y: &Path) -> Outcome {
    let (x, y) = (read_distribution(x)?, read_distribution(y)?);
    let formula = dist_to_dominating(&x, &y)?;
    let oracle = oracle_distance(&x, &y)?;
    let p = projection::project(&x, &y)?;
    let w1 = wasserstein(&x, &p.zhat, 1.0)?;
    let spread = [formula, oracle, w1]
        .iter()
        .map(|v| (v - formula).abs().max((v - oracle).abs()))
        .fold(0.0, f64::max);
    emit_json(
        None,
        &json!({
            "formula": formula,
            "oracle": oracle,
            "projection_w1": w1,
            "max_disagreement": spread,
        }),
    )?;
    if spread > VERIFY_TOL {
        return Err(Failure::internal(format!(
            "routes disagree by {spread:e} (tolerance {VERIFY_TOL:e})"
        )));
    }
    Ok(())
}

pub fn generate(
    family: Family,
    spec: Option<&Path>,
    seed: Option<u64>,
    kind: BenchmarkKind,
    shrink: f64,
    problem_out: &Path,
    benchmark_out: &Path,
) -> Outcome {
    let (prob, y) = instance(family, spec, seed, kind, shrink, &SolverConfig::default())?;
    emit_json(Some(problem_out), &prob)?;
    emit_json(Some(benchmark_out), &y)
}
