//! The command layer behind the CLI: each stage reads its inputs, writes its
//! artifacts into an output directory and records their digests in a manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::analysis::{
    convolve_nas, estimate_pdown, fractal_dimension, qm_pdown, rmse, sensitivity_pairs, Curve, DimensionEstimate,
};
use crate::config::{parse_config, Config};
use crate::dynamics::{qm_timescale, trace_trajectory, DT_GUARD_RATIO};
use crate::ensemble::{calibrate, run_ensemble, CalibrationObjective, CalibrationResult, EnsembleResult, SearchSpace};
use crate::error::{Error, Result};
use crate::output::{
    curve_csv, dimension_report, field_csv, parse_curve_csv, parse_outcomes_csv, plot_svg, read_file, sha256_hex,
    trace_csv, write_file, FieldRow, RunManifest,
};

pub const OUTCOMES_FILE: &str = "outcomes.csv";
pub const SIMULATE_MANIFEST: &str = "manifest_simulate.txt";

/// Rectangular sampling grid; a single point when `nx == 1` and `nz == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub z_min: f64,
    pub z_max: f64,
    pub nz: usize,
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Samples the loop field, z-major. Points inside the wire exclusion are flagged.
pub fn cmd_field(config: &Config, grid: &FieldGrid) -> Result<Vec<FieldRow>> {
    if grid.nx == 0 || grid.nz == 0 {
        return Err(Error::domain("field grid needs at least one point per axis"));
    }
    let coil = config.coil();
    let mut rows = Vec::with_capacity(grid.nx * grid.nz);
    for z in axis(grid.z_min, grid.z_max, grid.nz) {
        for x in axis(grid.x_min, grid.x_max, grid.nx) {
            let field = match coil.field(x, z) {
                Ok(b) => Some(b),
                Err(Error::Singularity { .. }) => None,
                Err(e) => return Err(e),
            };
            rows.push(FieldRow { x, z, field });
        }
    }
    Ok(rows)
}

pub fn write_field(config: &Config, grid: &FieldGrid, out: &Path) -> Result<Vec<FieldRow>> {
    let rows = cmd_field(config, grid)?;
    let csv = field_csv(&rows);
    let mut manifest = RunManifest::new("field", config.master_seed, 1, config.snapshot_text());
    manifest.record("field.csv", csv.as_bytes());
    write_file(&out.join("field.csv"), csv.as_bytes())?;
    write_file(&out.join("manifest_field.txt"), manifest.render().as_bytes())?;
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulateOptions {
    pub n_angles: usize,
    pub n_runs: usize,
    pub master_seed: u64,
    pub workers: usize,
}

/// Runs the ensemble and writes the outcome table plus its manifest.
pub fn cmd_simulate(config: &Config, opts: &SimulateOptions, out: &Path) -> Result<EnsembleResult> {
    let started = Instant::now();
    let params = config.model_params()?;
    let result = run_ensemble(&params, opts.n_angles, opts.n_runs, opts.master_seed, opts.workers)?;
    let csv = crate::output::outcomes_csv(&result);

    let mut snapshot = config.clone();
    snapshot.master_seed = opts.master_seed;
    snapshot.n_angles = opts.n_angles;
    snapshot.n_runs = opts.n_runs;
    let mut manifest = RunManifest::new("simulate", opts.master_seed, opts.workers, snapshot.snapshot_text());
    manifest.perturbations = result.perturbations().to_vec();
    manifest.record(OUTCOMES_FILE, csv.as_bytes());
    manifest.wall_clock_secs = started.elapsed().as_secs_f64();
    write_file(&out.join(OUTCOMES_FILE), csv.as_bytes())?;
    write_file(&out.join(SIMULATE_MANIFEST), manifest.render().as_bytes())?;
    Ok(result)
}

/// Writes a per-step dump of one trajectory under the unperturbed parameters.
pub fn cmd_trace(config: &Config, theta_i: f64, stride: usize, out: &Path) -> Result<usize> {
    let points = trace_trajectory(theta_i, &config.model_params()?, stride)?;
    write_file(&out.join("trace.csv"), trace_csv(&points).as_bytes())?;
    Ok(points.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    pub half_width: usize,
    pub compare_half_width: usize,
    pub step_lengths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub raw: Curve,
    pub smoothed: Curve,
    pub compare: Curve,
    pub half_width: usize,
    pub compare_half_width: usize,
    pub rmse_raw: f64,
    pub rmse_smoothed: f64,
    pub rmse_compare: f64,
    pub dim_raw: DimensionEstimate,
    pub dim_smoothed: DimensionEstimate,
    pub dim_compare: DimensionEstimate,
    /// Largest smoothed value over the lowest tenth of the angles.
    pub low_decile_max: f64,
    /// Smallest smoothed value over the highest tenth of the angles.
    pub high_decile_min: f64,
    pub flips_per_run: f64,
    pub unsettled: usize,
}

fn reference(theta: f64) -> f64 {
    qm_pdown(theta).unwrap_or(f64::NAN)
}

/// Estimate, smooth at two widths, score against `sin^2(theta/2)` and measure dimensions.
pub fn analyze(result: &EnsembleResult, opts: &AnalyzeOptions) -> Result<Analysis> {
    let raw = estimate_pdown(result)?;
    let smoothed = convolve_nas(&raw, opts.half_width)?;
    let compare = convolve_nas(&raw, opts.compare_half_width)?;
    let n = raw.len();
    let decile = n.div_ceil(10);
    let ys = smoothed.ys();
    Ok(Analysis {
        rmse_raw: rmse(&raw, reference)?,
        rmse_smoothed: rmse(&smoothed, reference)?,
        rmse_compare: rmse(&compare, reference)?,
        dim_raw: fractal_dimension(&raw, &opts.step_lengths)?,
        dim_smoothed: fractal_dimension(&smoothed, &opts.step_lengths)?,
        dim_compare: fractal_dimension(&compare, &opts.step_lengths)?,
        low_decile_max: ys[..decile].iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        high_decile_min: ys[n - decile..].iter().cloned().fold(f64::INFINITY, f64::min),
        flips_per_run: sensitivity_pairs(result)?.per_run(),
        unsettled: result.unsettled_count(),
        raw,
        smoothed,
        compare,
        half_width: opts.half_width,
        compare_half_width: opts.compare_half_width,
    })
}

fn summary_text(a: &Analysis) -> String {
    format!(
        "rmse_raw = {}\nrmse_w{} = {}\nrmse_w{} = {}\nd_f_raw = {}\nd_f_w{} = {}\nd_f_w{} = {}\n\
         low_decile_max = {}\nhigh_decile_min = {}\nflips_per_run = {}\nunsettled = {}\n",
        a.rmse_raw,
        a.compare_half_width,
        a.rmse_compare,
        a.half_width,
        a.rmse_smoothed,
        a.dim_raw.d_f,
        a.compare_half_width,
        a.dim_compare.d_f,
        a.half_width,
        a.dim_smoothed.d_f,
        a.low_decile_max,
        a.high_decile_min,
        a.flips_per_run,
        a.unsettled,
    )
}

/// Reads an outcome table and writes curves, dimension reports and the RMSE summary.
pub fn cmd_analyze(outcomes: &Path, config: &Config, opts: &AnalyzeOptions, out: &Path) -> Result<Analysis> {
    let result = parse_outcomes_csv(&read_file(outcomes)?)?;
    let analysis = analyze(&result, opts)?;
    let mut manifest = RunManifest::new("analyze", config.master_seed, 1, config.snapshot_text());
    let (w, cw) = (opts.half_width, opts.compare_half_width);
    let files = [
        ("pdown_raw.csv".to_string(), curve_csv(&analysis.raw)),
        (format!("pdown_w{w}.csv"), curve_csv(&analysis.smoothed)),
        (format!("pdown_w{cw}.csv"), curve_csv(&analysis.compare)),
        ("dimension_raw.txt".to_string(), dimension_report(&analysis.dim_raw)),
        (format!("dimension_w{w}.txt"), dimension_report(&analysis.dim_smoothed)),
        (format!("dimension_w{cw}.txt"), dimension_report(&analysis.dim_compare)),
        ("summary.txt".to_string(), summary_text(&analysis)),
    ];
    manifest.record("input.outcomes", read_file(outcomes)?.as_bytes());
    for (name, contents) in &files {
        manifest.record(name, contents.as_bytes());
        write_file(&out.join(name), contents.as_bytes())?;
    }
    write_file(&out.join("manifest_analyze.txt"), manifest.render().as_bytes())?;
    Ok(analysis)
}

/// Plots the reference curve and, when given, one simulated curve file.
pub fn cmd_plot(curve: Option<&Path>, out: &Path) -> Result<String> {
    let simulation = curve.map(|p| read_file(p).and_then(|t| parse_curve_csv(&t))).transpose()?;
    let svg = plot_svg(simulation.as_ref());
    write_file(out, svg.as_bytes())?;
    Ok(svg)
}

/// Grid search over (b, I), logging every evaluated point.
pub fn cmd_calibrate(
    config: &Config,
    space: &SearchSpace,
    objective: &CalibrationObjective,
    out: &Path,
) -> Result<CalibrationResult> {
    let base = config.model_params()?;
    let result = calibrate(space, &base, objective)?;
    let mut csv = String::from("damping,inertia,objective\n");
    for e in &result.log {
        csv.push_str(&format!("{:e},{:e},{}\n", e.damping, e.inertia, e.objective));
    }
    let mut manifest = RunManifest::new("calibrate", objective.master_seed, objective.workers, config.snapshot_text());
    manifest.record("calibration.csv", csv.as_bytes());
    write_file(&out.join("calibration.csv"), csv.as_bytes())?;
    write_file(&out.join("manifest_calibrate.txt"), manifest.render().as_bytes())?;
    Ok(result)
}

/// One line of the acceptance summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.to_string(), passed, detail }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// Verifies a simulate manifest against the files next to it, re-analyzes the
/// outcomes and scores them against the statistical targets.
pub fn cmd_report(dir: &Path, full: bool) -> Result<Vec<Check>> {
    let manifest_path = dir.join(SIMULATE_MANIFEST);
    let (config_text, digests) = RunManifest::parse_sections(&read_file(&manifest_path)?)?;
    let config = parse_config(&config_text)?;
    let mut checks = Vec::new();

    let mut intact = !digests.is_empty();
    for (name, digest) in &digests {
        let path: PathBuf = dir.join(name);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        intact &= sha256_hex(&bytes) == *digest;
    }
    checks.push(Check::new("manifest digests", intact, format!("{} file(s) checked", digests.len())));

    let params = config.model_params()?;
    let tau = qm_timescale(params.mu, params.reference_field()?)?;
    checks.push(Check::new(
        "time-scale guard",
        params.dt <= DT_GUARD_RATIO * tau,
        format!("dt/qm_timescale = {:e}", params.dt / tau),
    ));

    let result = parse_outcomes_csv(&read_file(&dir.join(OUTCOMES_FILE))?)?;
    let scale = config.scale(full);
    let a = analyze(
        &result,
        &AnalyzeOptions {
            half_width: scale.half_width,
            compare_half_width: scale.compare_half_width,
            step_lengths: config.step_lengths(),
        },
    )?;
    let rmse_limit = if full { 0.06 } else { 0.08 };
    checks.push(Check::new(
        "endpoints",
        a.low_decile_max <= 0.1 && a.high_decile_min >= 0.9,
        format!("low decile max {:.3}, high decile min {:.3}", a.low_decile_max, a.high_decile_min),
    ));
    checks.push(Check::new(
        "rmse",
        a.rmse_smoothed <= rmse_limit,
        format!("w = {}: {:.4} (limit {rmse_limit})", a.half_width, a.rmse_smoothed),
    ));
    checks.push(Check::new(
        "sensitivity",
        a.flips_per_run >= 1.0,
        format!("{:.2} adjacent flips per run", a.flips_per_run),
    ));
    let (r, c, s) = (a.dim_raw.d_f, a.dim_compare.d_f, a.dim_smoothed.d_f);
    checks.push(Check::new(
        "dimension ordering",
        r > c && c > s && s >= 1.0,
        format!("raw {r:.3} > w{} {c:.3} > w{} {s:.3} >= 1", a.compare_half_width, a.half_width),
    ));
    Ok(checks)
}
