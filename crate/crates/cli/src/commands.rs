//! One function per subcommand. Each returns its files and summary; nothing
//! is written until every cell has finished.

use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use mfmls::experiments::{run_cell, CellInput, CellReport, RankSummary, Target};
use mfmls::geometry::{distance, format_f64, write_values_csv};
use mfmls::mls::{noise_study, MlsConfig, ShapeOperator};
use mfmls::rbf::{fit_power_rate, power_rung, PowerRung, PROBE_FACTOR};
use mfmls::stats::loglog_fit;
use mfmls::{basis_size, hilbert_dim_hypersurface, KernelSpec, PointCloud, PointSet};

use crate::config::{ExperimentConfig, Study};
use crate::domain::{stream_seed, Stream, StudyDomain};

/// Max error below which a polynomial target counts as reproduced.
pub const EXACT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub stage: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub error: String,
}

pub struct Report {
    pub files: Vec<(String, Vec<u8>)>,
    pub failures: Vec<Failure>,
    pub summary: Value,
}

impl Report {
    fn new(summary: Value) -> Self {
        Self {
            files: Vec::new(),
            failures: Vec::new(),
            summary,
        }
    }

    fn add(&mut self, name: impl Into<String>, body: impl Into<Vec<u8>>) {
        self.files.push((name.into(), body.into()));
    }
}

struct Csv(String);

impl Csv {
    fn new(header: &[&str]) -> Self {
        Self(header.join(",") + "\n")
    }

    fn row(&mut self, fields: &[String]) {
        self.0 += &fields.join(",");
        self.0.push('\n');
    }
}

fn f(v: f64) -> String {
    format_f64(v)
}

fn json_num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

pub struct Ctx {
    pub cfg: ExperimentConfig,
    pub domain: StudyDomain,
    pub seed: u64,
}

type CellResult = Result<(CellReport, ShapeOperator), String>;
type PowerResult = Result<(usize, PowerRung, PointSet, Vec<f64>), String>;

/// Successful `(delta, max_error)` pairs and failed cardinalities of one degree.
struct DegreeCells {
    m: usize,
    points: Vec<(f64, f64)>,
    excluded: Vec<usize>,
}

struct Rung {
    n: usize,
    cloud: PointCloud,
    probes: PointSet,
}

impl Ctx {
    pub fn new(cfg: ExperimentConfig, seed: u64) -> Result<Self> {
        let kind = cfg.surface.build().context("building surface")?;
        let region = cfg.restriction()?;
        Ok(Self {
            domain: StudyDomain::new(kind, region),
            cfg,
            seed,
        })
    }

    fn mls_config(&self, degree: usize) -> MlsConfig {
        let mut c = MlsConfig::new(degree);
        if let Some(t) = self.cfg.rank_threshold_factor {
            c.rank_threshold_factor = t;
        }
        c.escalate_delta = self.cfg.escalate_delta;
        c
    }

    fn sites(&self, n: usize) -> Result<PointCloud, String> {
        self.domain
            .sites(n, stream_seed(self.seed, Stream::Sites, n as u64))
            .map_err(|e| e.to_string())
    }

    /// Sites and fill-distance probes for every cardinality; failed
    /// cardinalities go to the report.
    fn ladder(&self, report: &mut Report) -> Vec<Rung> {
        let factor = self.cfg.probe_factor();
        let results: Vec<Result<Rung, String>> = self
            .cfg
            .cardinalities
            .par_iter()
            .map(|&n| {
                let cloud = self.sites(n)?;
                let probes = self
                    .domain
                    .probes(factor * cloud.len(), stream_seed(self.seed, Stream::Probes, n as u64))
                    .map_err(|e| e.to_string())?;
                Ok(Rung { n, cloud, probes })
            })
            .collect();
        let mut rungs = Vec::new();
        for (r, &n) in results.into_iter().zip(&self.cfg.cardinalities) {
            match r {
                Ok(rung) => rungs.push(rung),
                Err(error) => report.failures.push(Failure {
                    stage: "sampling",
                    m: None,
                    n,
                    sigma: None,
                    error,
                }),
            }
        }
        rungs
    }

    fn eval_points(&self) -> Result<PointSet> {
        self.domain
            .eval_points(self.cfg.eval_count(), stream_seed(self.seed, Stream::Eval, 0))
            .context("sampling evaluation points")
    }

    /// Runs every `(m, rung)` cell in parallel, in a fixed output order.
    fn cells<'a>(&self, rungs: &'a [Rung], eval: &PointSet, target: &Target) -> Vec<(usize, &'a Rung, CellResult)> {
        let pairs: Vec<(usize, &Rung)> = self
            .cfg
            .degrees
            .iter()
            .flat_map(|&m| rungs.iter().map(move |r| (m, r)))
            .collect();
        pairs
            .into_par_iter()
            .map(|(m, rung)| {
                let input = CellInput {
                    cloud: &rung.cloud,
                    eval_points: eval,
                    probes: Some(&rung.probes),
                    target,
                };
                let res = run_cell(&input, rung.n, &self.mls_config(m)).map_err(|e| e.to_string());
                (m, rung, res)
            })
            .collect()
    }
}

fn cell_failure(m: usize, n: usize, error: String) -> Failure {
    Failure {
        stage: "cell",
        m: Some(m),
        n,
        sigma: None,
        error,
    }
}

pub fn sample(ctx: &Ctx) -> Result<Report> {
    let mut report = Report::new(Value::Null);
    let results: Vec<Result<(PointCloud, f64, f64), String>> = ctx
        .cfg
        .cardinalities
        .par_iter()
        .map(|&n| {
            let cloud = ctx.sites(n)?;
            let stats = match cloud.stats() {
                Some(s) => s,
                None => {
                    let probes = ctx
                        .domain
                        .probes(
                            ctx.cfg.probe_factor() * cloud.len(),
                            stream_seed(ctx.seed, Stream::Probes, n as u64),
                        )
                        .map_err(|e| e.to_string())?;
                    cloud.density_stats(&probes).map_err(|e| e.to_string())?
                }
            };
            Ok((cloud, stats.h, stats.q))
        })
        .collect();
    let mut clouds = Vec::new();
    for (res, &n) in results.into_iter().zip(&ctx.cfg.cardinalities) {
        match res {
            Ok((cloud, h, q)) => {
                let mut buf = Vec::new();
                mfmls::geometry::write_points_csv(&mut buf, cloud.points())?;
                report.add(format!("points_N{n}.csv"), buf);
                clouds.push(json!({
                    "n_requested": n,
                    "n_points": cloud.len(),
                    "h": json_num(h),
                    "q": json_num(q),
                    "h_over_q": json_num(h / q),
                }));
            }
            Err(error) => report.failures.push(Failure {
                stage: "sampling",
                m: None,
                n,
                sigma: None,
                error,
            }),
        }
    }
    report.summary = json!({ "command": "sample", "clouds": clouds });
    Ok(report)
}

fn rank_fields(r: Option<RankSummary>) -> [String; 3] {
    match r {
        Some(r) => [r.min.to_string(), r.median.to_string(), r.max.to_string()],
        None => ["".into(), "".into(), "".into()],
    }
}

pub fn convergence(ctx: &Ctx) -> Result<Report> {
    let mut report = Report::new(Value::Null);
    let target = ctx.cfg.target()?;
    let eval = ctx.eval_points()?;
    let rungs = ctx.ladder(&mut report);
    let cells = ctx.cells(&rungs, &eval, &target);

    let mut table = Csv::new(&[
        "experiment",
        "m",
        "n_requested",
        "n_sites",
        "delta",
        "h",
        "q",
        "max_error",
        "rms_error",
        "lebesgue_constant",
        "rank_min",
        "rank_median",
        "rank_max",
        "n_failed_points",
        "status",
    ]);
    let mut timing = Csv::new(&["m", "n_requested", "wall_secs"]);
    let mut per_m: Vec<DegreeCells> = ctx
        .cfg
        .degrees
        .iter()
        .map(|&m| DegreeCells {
            m,
            points: Vec::new(),
            excluded: Vec::new(),
        })
        .collect();
    for (m, rung, res) in cells {
        let slot = per_m.iter_mut().find(|p| p.m == m).expect("degree listed");
        match res {
            Ok((c, _)) => {
                let [rmin, rmed, rmax] = rank_fields(c.ranks);
                table.row(&[
                    "convergence".into(),
                    m.to_string(),
                    rung.n.to_string(),
                    c.n_sites.to_string(),
                    f(c.delta),
                    f(c.h),
                    f(c.q),
                    f(c.max_error),
                    f(c.rms_error),
                    f(c.lebesgue_constant),
                    rmin,
                    rmed,
                    rmax,
                    c.n_failed.to_string(),
                    "ok".into(),
                ]);
                timing.row(&[m.to_string(), rung.n.to_string(), format!("{:.6}", c.wall_secs)]);
                slot.points.push((c.delta, c.max_error));
            }
            Err(e) => {
                let nan = f(f64::NAN);
                table.row(&[
                    "convergence".into(),
                    m.to_string(),
                    rung.n.to_string(),
                    rung.cloud.len().to_string(),
                    nan.clone(),
                    nan.clone(),
                    nan.clone(),
                    nan.clone(),
                    nan.clone(),
                    nan,
                    "".into(),
                    "".into(),
                    "".into(),
                    "".into(),
                    "failed".into(),
                ]);
                slot.excluded.push(rung.n);
                report.failures.push(cell_failure(m, rung.n, e));
            }
        }
    }
    for fail in report.failures.iter().filter(|f| f.stage == "sampling") {
        for slot in per_m.iter_mut() {
            slot.excluded.push(fail.n);
        }
    }

    let exact_degree = target.polynomial_degree();
    let rates: Vec<Value> = per_m
        .iter()
        .map(
            |DegreeCells {
                 m,
                 points: pts,
                 excluded,
             }| {
                let exact = exact_degree.is_some_and(|d| d as usize <= *m)
                    && !pts.is_empty()
                    && pts.iter().all(|p| p.1 <= EXACT_TOL);
                let fit = (!exact && pts.len() >= 2).then(|| {
                    let (d, e): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
                    loglog_fit(&d, &e)
                });
                json!({
                    "m": m,
                    "exact": exact,
                    "slope": fit.map_or(Value::Null, |l| json_num(l.slope)),
                    "intercept": fit.map_or(Value::Null, |l| json_num(l.intercept)),
                    "residual": fit.map_or(Value::Null, |l| json_num(l.rms_residual)),
                    "cells_used": pts.len(),
                    "excluded_n": excluded,
                })
            },
        )
        .collect();
    let rates_json = json!({ "target": target_name(&target), "rates": rates });
    report.add("convergence.csv", table.0);
    report.add("timing.csv", timing.0);
    report.add("rates.json", serde_json::to_string_pretty(&rates_json)? + "\n");
    report.summary = json!({ "command": "convergence", "rates": rates_json["rates"] });
    Ok(report)
}

fn target_name(t: &Target) -> &'static str {
    match t {
        Target::CyclideWave => "cyclide_wave",
        Target::SpotWave => "spot_wave",
        Target::Polynomial(_) => "polynomial",
        Target::Constant(_) => "constant",
    }
}

pub fn lebesgue(ctx: &Ctx) -> Result<Report> {
    let mut report = Report::new(Value::Null);
    let eval = ctx.eval_points()?;
    let rungs = ctx.ladder(&mut report);
    let cells = ctx.cells(&rungs, &eval, &Target::Constant(0.0));
    let region = ctx.domain.region();

    let mut table = Csv::new(&[
        "m",
        "n_requested",
        "n_sites",
        "delta",
        "lebesgue_constant",
        "boundary_max",
        "interior_max",
    ]);
    let mut constants = Vec::new();
    for (m, rung, res) in cells {
        let (c, op) = match res {
            Ok(x) => x,
            Err(e) => {
                report.failures.push(cell_failure(m, rung.n, e));
                continue;
            }
        };
        let values = op.lebesgue_function();
        // Band of width delta along the restriction sphere.
        let (mut boundary, mut interior) = (f64::NAN, f64::NAN);
        if let Some(ball) = region {
            for (x, &v) in eval.iter().zip(&values) {
                let near = distance(x, ball.center()) >= ball.radius() - c.delta;
                let slot = if near { &mut boundary } else { &mut interior };
                if !v.is_nan() && (slot.is_nan() || v > *slot) {
                    *slot = v;
                }
            }
        }
        table.row(&[
            m.to_string(),
            rung.n.to_string(),
            c.n_sites.to_string(),
            f(c.delta),
            f(c.lebesgue_constant),
            f(boundary),
            f(interior),
        ]);
        let mut buf = Vec::new();
        write_values_csv(&mut buf, &eval, &values, "value")?;
        report.add(format!("lebesgue_m{m}_N{}.csv", rung.n), buf);
        constants.push(json!({ "m": m, "n": rung.n, "lebesgue_constant": json_num(c.lebesgue_constant) }));
    }
    report.add("lebesgue.csv", table.0);
    report.summary = json!({ "command": "lebesgue", "constants": constants });
    Ok(report)
}

pub fn noise(ctx: &Ctx) -> Result<Report> {
    let mut report = Report::new(Value::Null);
    let target = ctx.cfg.target()?;
    let eval = ctx.eval_points()?;
    let exact = target.sample(&eval);
    let rungs = ctx.ladder(&mut report);
    let cells = ctx.cells(&rungs, &eval, &target);
    let trials = ctx.cfg.trials.expect("validated");

    let mut table = Csv::new(&[
        "m",
        "n_requested",
        "n_sites",
        "sigma",
        "trials",
        "mean_max_diff",
        "std_max_diff",
        "clean_max_error",
        "mean_noise_diff",
        "std_noise_diff",
        "lebesgue_constant",
    ]);
    let mut rows = Vec::new();
    for (m, rung, res) in cells {
        let (c, op) = match res {
            Ok(x) => x,
            Err(e) => {
                report.failures.push(cell_failure(m, rung.n, e));
                continue;
            }
        };
        let clean = target.sample(rung.cloud.points());
        // The same stream for every sigma, so the levels see scaled copies
        // of one noise draw.
        let seed = stream_seed(ctx.seed, Stream::Noise, rung.n as u64);
        for &sigma in &ctx.cfg.sigma_list {
            match noise_study(&op, &clean, &exact, sigma, trials, seed) {
                Ok(s) => {
                    table.row(&[
                        m.to_string(),
                        rung.n.to_string(),
                        c.n_sites.to_string(),
                        f(sigma),
                        trials.to_string(),
                        f(s.mean_max_diff),
                        f(s.std_max_diff),
                        f(s.clean_max_error),
                        f(s.mean_noise_diff),
                        f(s.std_noise_diff),
                        f(c.lebesgue_constant),
                    ]);
                    rows.push(json!({
                        "m": m, "n": rung.n, "sigma": sigma,
                        "mean_max_diff": json_num(s.mean_max_diff), "std_max_diff": json_num(s.std_max_diff),
                    }));
                }
                Err(e) => report.failures.push(Failure {
                    stage: "noise",
                    m: Some(m),
                    n: rung.n,
                    sigma: Some(sigma),
                    error: e.to_string(),
                }),
            }
        }
    }
    report.add("noise.csv", table.0);
    report.summary = json!({ "command": "noise", "rows": rows });
    Ok(report)
}

pub fn power(ctx: &Ctx) -> Result<Report> {
    let mut report = Report::new(Value::Null);
    let order = ctx.cfg.kernel_order.expect("validated");
    let spec = KernelSpec::matern(order)?;
    let results: Vec<PowerResult> = ctx
        .cfg
        .cardinalities
        .par_iter()
        .map(|&n| {
            let cloud = ctx.sites(n)?;
            let probes = ctx
                .domain
                .probes(
                    PROBE_FACTOR * cloud.len(),
                    stream_seed(ctx.seed, Stream::PowerProbes, n as u64),
                )
                .map_err(|e| e.to_string())?;
            let (rung, field) = power_rung(&spec, &cloud, &probes).map_err(|e| e.to_string())?;
            Ok((n, rung, probes, field))
        })
        .collect();
    let mut rungs = Vec::new();
    let mut requested = Vec::new();
    for (res, &n) in results.into_iter().zip(&ctx.cfg.cardinalities) {
        match res {
            Ok((n, rung, probes, field)) => {
                let mut buf = Vec::new();
                write_values_csv(&mut buf, &probes, &field, "power")?;
                report.add(format!("power_N{n}.csv"), buf);
                requested.push(n);
                rungs.push(rung);
            }
            Err(error) => report.failures.push(Failure {
                stage: "power",
                m: None,
                n,
                sigma: None,
                error,
            }),
        }
    }
    let rung_json: Vec<Value> = rungs
        .iter()
        .zip(&requested)
        .map(|(r, n)| {
            json!({
                "n_requested": n, "n_sites": r.n_sites, "h": json_num(r.h), "q": json_num(r.q),
                "sup_power": json_num(r.sup_power), "jitter": r.jitter,
            })
        })
        .collect();
    let monotone = rungs.windows(2).all(|w| w[1].sup_power < w[0].sup_power);
    let smoothness = spec.smoothness();
    let (slope, residual) = if rungs.len() >= 3 {
        let study = fit_power_rate(rungs);
        (json_num(study.slope), json_num(study.residual))
    } else {
        (Value::Null, Value::Null)
    };
    let rate = json!({
        "kernel_order": order,
        "smoothness": smoothness,
        "predicted_slope": smoothness as f64 / 2.0,
        "slope": slope,
        "residual": residual,
        "monotone": monotone,
        "rungs": rung_json,
    });
    report.add("power_rate.json", serde_json::to_string_pretty(&rate)? + "\n");
    report.summary = json!({ "command": "power", "slope": rate["slope"], "monotone": monotone });
    Ok(report)
}

pub fn info(ctx: &Ctx) -> Result<Report> {
    let mut report = Report::new(Value::Null);
    let n = ctx.cfg.cardinalities[0];
    let eval = ctx.eval_points()?;
    let cloud = ctx.sites(n).map_err(anyhow::Error::msg).context("sampling sites")?;
    let dim = ctx.domain.ambient_dim();
    let k = ctx.domain.surface_degree();
    let per_m: Vec<Value> = ctx
        .cfg
        .degrees
        .iter()
        .map(|&m| {
            let ranks = match ShapeOperator::build(&cloud, &eval, &ctx.mls_config(m)) {
                Ok(op) => RankSummary::from_operator(&op),
                Err(e) => {
                    report.failures.push(cell_failure(m, n, e.to_string()));
                    None
                }
            };
            json!({
                "m": m,
                "ambient_dim": basis_size(dim, m),
                "restricted_dim": k.map(|k| hilbert_dim_hypersurface(dim, k as usize, m)),
                "median_rank": ranks.map(|r| r.median),
                "min_rank": ranks.map(|r| r.min),
                "max_rank": ranks.map(|r| r.max),
            })
        })
        .collect();
    let out = json!({
        "command": "info",
        "ambient_dim": dim,
        "surface_degree": k,
        "n_sites": cloud.len(),
        "n_eval": eval.len(),
        "per_m": per_m,
    });
    report.add("info.json", serde_json::to_string_pretty(&out)? + "\n");
    report.summary = out;
    Ok(report)
}

pub fn run(study: Study, ctx: &Ctx) -> Result<Report> {
    let start = Instant::now();
    let mut report = match study {
        Study::Sample => sample(ctx),
        Study::Convergence => convergence(ctx),
        Study::Lebesgue => lebesgue(ctx),
        Study::Noise => noise(ctx),
        Study::Power => power(ctx),
        Study::Info => info(ctx),
    }?;
    if let Value::Object(map) = &mut report.summary {
        map.insert("wall_secs".into(), json!(start.elapsed().as_secs_f64()));
        map.insert("failed_cells".into(), json!(report.failures.len()));
    }
    Ok(report)
}
