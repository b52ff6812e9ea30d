//! The statistical experiment: an odd grid of initial angles, integrated under
//! many slightly perturbed runs, plus the (b, I) calibration search.

use std::f64::consts::PI;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{convolve_nas, estimate_pdown, qm_pdown, rmse};
use crate::dynamics::{simulate_with_drive, DriveTable, ModelParams, Outcome};
use crate::error::{Error, Result};

/// `n` equally spaced angles `i pi / n`, `i = 0..n`. `n` must be odd so that
/// `pi/2` never appears.
pub fn angle_grid(n: usize) -> Result<Vec<f64>> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::domain(format!(
            "angle grid size must be odd and >= 3 (got {n})"
        )));
    }
    Ok((0..n).map(|i| i as f64 * PI / n as f64).collect())
}

/// Per-run change of time step and start position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunPerturbation {
    pub run_index: usize,
    /// Multiplies `dt`; uniform in `[0.95, 1.05]`.
    pub dt_factor: f64,
    /// Added to `x_start` (m); changes only its third significant digit.
    pub x_start_offset: f64,
    /// First word of the run's generator stream, recorded for audit.
    pub seed: u64,
}

/// Place value of the third significant digit of `x` (e.g. 0.001 for -0.200).
pub fn third_digit_unit(x: f64) -> f64 {
    10f64.powi(x.abs().log10().floor() as i32 - 2)
}

impl RunPerturbation {
    /// Derived from `(master_seed, run_index)` alone: ChaCha8 keyed by the
    /// master seed, one stream per run.
    pub fn derive(master_seed: u64, run_index: usize, x_start: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(run_index as u64);
        let seed = rng.next_u64();
        let dt_factor = rng.gen_range(0.95..=1.05);
        let x_start_offset = if x_start == 0.0 || !x_start.is_finite() {
            0.0
        } else {
            let unit = third_digit_unit(x_start);
            let digit = ((x_start.abs() / unit).round() as i64).rem_euclid(10);
            let choices: Vec<i64> = (-5..=5)
                .filter(|&k| k != 0 && (0..=9).contains(&(digit + k)))
                .collect();
            let shift = choices[rng.gen_range(0..choices.len())];
            x_start.signum() * shift as f64 * unit
        };
        Self {
            run_index,
            dt_factor,
            x_start_offset,
            seed,
        }
    }

    pub fn apply(&self, base: &ModelParams) -> ModelParams {
        let mut p = base.clone();
        p.dt = base.dt * self.dt_factor;
        p.traj.x_start = base.traj.x_start + self.x_start_offset;
        p
    }
}

/// Parameters for run `run_index` of an ensemble seeded by `master_seed`.
pub fn perturb_run(master_seed: u64, run_index: usize, base: &ModelParams) -> ModelParams {
    RunPerturbation::derive(master_seed, run_index, base.traj.x_start).apply(base)
}

/// Down indicators for every (angle, run) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    angles: Vec<f64>,
    n_runs: usize,
    /// Row-major `n_angles x n_runs`, entries 0 or 1.
    outcomes: Vec<u8>,
    unsettled: Vec<bool>,
    perturbations: Vec<RunPerturbation>,
}

impl EnsembleResult {
    /// Assembles a result from raw parts, checking shapes and entries.
    pub fn from_parts(
        angles: Vec<f64>,
        n_runs: usize,
        outcomes: Vec<u8>,
        unsettled: Vec<bool>,
        perturbations: Vec<RunPerturbation>,
    ) -> Result<Self> {
        let cells = angles.len() * n_runs;
        if outcomes.len() != cells || unsettled.len() != cells {
            return Err(Error::domain("outcome matrix shape does not match angles x runs"));
        }
        if outcomes.iter().any(|&d| d > 1) {
            return Err(Error::domain("down indicators must be 0 or 1"));
        }
        if angles.len() % 2 == 0 {
            return Err(Error::domain("ensemble angle count must be odd"));
        }
        Ok(Self {
            angles,
            n_runs,
            outcomes,
            unsettled,
            perturbations,
        })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn n_angles(&self) -> usize {
        self.angles.len()
    }

    pub fn n_runs(&self) -> usize {
        self.n_runs
    }

    pub fn get(&self, angle: usize, run: usize) -> u8 {
        self.outcomes[angle * self.n_runs + run]
    }

    pub fn is_unsettled(&self, angle: usize, run: usize) -> bool {
        self.unsettled[angle * self.n_runs + run]
    }

    /// Down indicators of every run for one angle.
    pub fn row(&self, angle: usize) -> &[u8] {
        &self.outcomes[angle * self.n_runs..(angle + 1) * self.n_runs]
    }

    pub fn perturbations(&self) -> &[RunPerturbation] {
        &self.perturbations
    }

    pub fn unsettled_count(&self) -> usize {
        self.unsettled.iter().filter(|&&u| u).count()
    }
}

/// Runs every (angle, run) trajectory. Results do not depend on `workers`.
pub fn run_ensemble(
    params: &ModelParams,
    n_angles: usize,
    n_runs: usize,
    master_seed: u64,
    workers: usize,
) -> Result<EnsembleResult> {
    params.validate()?;
    if n_runs == 0 {
        return Err(Error::domain("ensemble needs at least one run"));
    }
    let angles = angle_grid(n_angles)?;
    let perturbations: Vec<RunPerturbation> = (0..n_runs)
        .map(|r| RunPerturbation::derive(master_seed, r, params.traj.x_start))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::domain(format!("worker pool: {e}")))?;

    let columns: Vec<Vec<Outcome>> = pool.install(|| {
        perturbations
            .par_iter()
            .map(|pert| {
                let run = pert.run_index;
                let abort = |theta_index, source| Error::Trajectory {
                    theta_index,
                    run_index: run,
                    source: Box::new(source),
                };
                let p = pert.apply(params);
                p.validate().map_err(|e| abort(0, e))?;
                let drive = DriveTable::new(&p).map_err(|e| abort(0, e))?;
                angles
                    .par_iter()
                    .enumerate()
                    .map(|(i, &theta)| simulate_with_drive(theta, &p, &drive).map_err(|e| abort(i, e)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut outcomes = vec![0u8; n_angles * n_runs];
    let mut unsettled = vec![false; n_angles * n_runs];
    for (run, column) in columns.iter().enumerate() {
        for (i, o) in column.iter().enumerate() {
            outcomes[i * n_runs + run] = o.down_indicator();
            unsettled[i * n_runs + run] = o.unsettled;
        }
    }
    EnsembleResult::from_parts(angles, n_runs, outcomes, unsettled, perturbations)
}

/// How a candidate (b, I) is scored: RMSE of the smoothed down fraction of a
/// reduced ensemble against `sin^2(theta/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationObjective {
    pub n_angles: usize,
    pub n_runs: usize,
    pub master_seed: u64,
    pub half_width: usize,
    pub workers: usize,
}

impl CalibrationObjective {
    pub fn evaluate(&self, params: &ModelParams) -> Result<f64> {
        let result = run_ensemble(params, self.n_angles, self.n_runs, self.master_seed, self.workers)?;
        let smoothed = convolve_nas(&estimate_pdown(&result)?, self.half_width)?;
        rmse(&smoothed, |t| qm_pdown(t).unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationEntry {
    pub damping: f64,
    pub inertia: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub best: CalibrationEntry,
    /// Every evaluated point in evaluation order.
    pub log: Vec<CalibrationEntry>,
}

/// Grid over damping and inertia values, optionally refined around the best point.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub damping: Vec<f64>,
    pub inertia: Vec<f64>,
    /// Extra refinement passes; each lays a `refine_points^2` log grid spanning
    /// one coarse cell around the current best.
    pub refine_levels: usize,
    pub refine_points: usize,
}

impl SearchSpace {
    pub fn grid(damping: Vec<f64>, inertia: Vec<f64>) -> Self {
        Self {
            damping,
            inertia,
            refine_levels: 0,
            refine_points: 3,
        }
    }

    /// `n` log-spaced values over `[lo, hi]`.
    pub fn log_range(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n <= 1 {
            return vec![lo];
        }
        let step = (hi / lo).ln() / (n - 1) as f64;
        (0..n).map(|i| lo * (step * i as f64).exp()).collect()
    }

    fn log_spacing(values: &[f64]) -> f64 {
        if values.len() < 2 {
            return 0.0;
        }
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (hi / lo).ln() / (values.len() - 1) as f64
    }
}

fn is_better(candidate: &CalibrationEntry, best: &CalibrationEntry) -> bool {
    candidate.objective < best.objective
}

/// Coarse-to-fine grid search minimizing `objective`. Unsolvable points
/// (e.g. a violated dt guard) are logged with an infinite objective.
pub fn calibrate(
    space: &SearchSpace,
    base: &ModelParams,
    objective: &CalibrationObjective,
) -> Result<CalibrationResult> {
    if space.damping.is_empty() || space.inertia.is_empty() {
        return Err(Error::domain("calibration search space is empty"));
    }
    let mut log = Vec::new();
    let evaluate_grid = |damping: &[f64], inertia: &[f64], log: &mut Vec<CalibrationEntry>| {
        for &b in damping {
            for &i in inertia {
                let mut p = base.clone();
                p.damping = b;
                p.inertia = i;
                let value = objective.evaluate(&p).unwrap_or(f64::INFINITY);
                log.push(CalibrationEntry { damping: b, inertia: i, objective: value });
            }
        }
    };
    evaluate_grid(&space.damping, &space.inertia, &mut log);

    let best_of = |log: &[CalibrationEntry]| {
        let mut best = log[0].clone();
        for e in &log[1..] {
            if is_better(e, &best) {
                best = e.clone();
            }
        }
        best
    };

    let mut b_span = SearchSpace::log_spacing(&space.damping);
    let mut i_span = SearchSpace::log_spacing(&space.inertia);
    for _ in 0..space.refine_levels {
        let best = best_of(&log);
        let pts = space.refine_points.max(2);
        let around = |centre: f64, span: f64| {
            if span == 0.0 {
                vec![centre]
            } else {
                SearchSpace::log_range(centre * (-span).exp(), centre * span.exp(), pts)
            }
        };
        let damping = if best.damping == 0.0 { vec![0.0] } else { around(best.damping, b_span) };
        let inertia = around(best.inertia, i_span);
        evaluate_grid(&damping, &inertia, &mut log);
        b_span = 2.0 * b_span / (pts - 1) as f64;
        i_span = 2.0 * i_span / (pts - 1) as f64;
    }
    Ok(CalibrationResult { best: best_of(&log), log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use proptest::prelude::*;

    fn shipped() -> ModelParams {
        Config::default().model_params().unwrap()
    }

    fn reduced() -> CalibrationObjective {
        CalibrationObjective { n_angles: 101, n_runs: 20, master_seed: 7, half_width: 7, workers: 1 }
    }

    #[test]
    fn angle_grid_examples() {
        let g = angle_grid(1001).unwrap();
        assert_eq!(g.len(), 1001);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1000], 1000.0 * PI / 1001.0);
        assert!(g.iter().all(|&t| t != PI / 2.0));
        assert_eq!(angle_grid(3).unwrap(), vec![0.0, PI / 3.0, 2.0 * PI / 3.0]);
        assert!(angle_grid(4).is_err());
        assert!(angle_grid(1).is_err());
    }

    #[test]
    fn perturbation_is_a_pure_function_of_seed_and_run() {
        let a = RunPerturbation::derive(42, 3, -0.2);
        assert_eq!(a, RunPerturbation::derive(42, 3, -0.2));
        let r0 = RunPerturbation::derive(42, 0, -0.2);
        let r1 = RunPerturbation::derive(42, 1, -0.2);
        assert_ne!(r0.dt_factor, r1.dt_factor);
        assert_ne!(r0.seed, r1.seed);
        assert_ne!(RunPerturbation::derive(43, 3, -0.2), a);
    }

    #[test]
    fn start_offset_changes_only_the_third_digit() {
        assert!((third_digit_unit(-0.2) - 0.001).abs() < 1e-18);
        assert!((third_digit_unit(-0.195) - 0.001).abs() < 1e-18);
        let mut base = shipped();
        base.traj.x_start = -0.200;
        for run in 0..200 {
            let p = perturb_run(5, run, &base);
            let milli = (p.traj.x_start * 1000.0).round();
            assert!((p.traj.x_start * 1000.0 - milli).abs() < 1e-9);
            assert!((-209.0..=-201.0).contains(&milli), "{}", p.traj.x_start);
        }
    }

    proptest! {
        #[test]
        fn dt_factor_in_range(seed in any::<u64>(), run in 0usize..10_000) {
            let p = RunPerturbation::derive(seed, run, -0.195);
            prop_assert!((0.95..=1.05).contains(&p.dt_factor));
            let shifted = ((-0.195 + p.x_start_offset) * 1000.0).round() as i64;
            prop_assert!(shifted != -195 && (-199..=-190).contains(&shifted));
        }
    }

    #[test]
    fn equilibrium_row_is_all_up() {
        let r = run_ensemble(&shipped(), 3, 1, 0, 1).unwrap();
        assert_eq!(r.row(0), &[0]);
        assert_eq!(r.n_angles(), 3);
        assert_eq!(r.perturbations().len(), 1);
    }

    #[test]
    fn worker_count_does_not_change_outcomes() {
        let p = shipped();
        let one = run_ensemble(&p, 21, 6, 9, 1).unwrap();
        let many = run_ensemble(&p, 21, 6, 9, 8).unwrap();
        assert_eq!(one, many);
    }

    #[test]
    fn result_shape_is_checked() {
        let angles = angle_grid(3).unwrap();
        assert!(EnsembleResult::from_parts(angles.clone(), 2, vec![0; 5], vec![false; 6], vec![]).is_err());
        assert!(EnsembleResult::from_parts(angles, 1, vec![0, 2, 1], vec![false; 3], vec![]).is_err());
        assert!(run_ensemble(&shipped(), 5, 0, 0, 1).is_err());
    }

    #[test]
    fn single_point_search_returns_that_point() {
        let p = shipped();
        let space = SearchSpace::grid(vec![p.damping], vec![p.inertia]);
        let result = calibrate(&space, &p, &reduced()).unwrap();
        assert_eq!(result.log.len(), 1);
        assert_eq!((result.best.damping, result.best.inertia), (p.damping, p.inertia));
        assert!(result.best.objective <= 0.06, "{}", result.best.objective);
    }

    #[test]
    fn detuned_damping_scores_worse() {
        let p = shipped();
        let tuned = reduced().evaluate(&p).unwrap();
        let mut detuned = p.clone();
        detuned.damping *= 100.0;
        let worse = reduced().evaluate(&detuned).unwrap();
        assert!(worse > 2.0 * tuned, "{worse} vs {tuned}");
    }

    #[test]
    fn empty_space_is_an_error() {
        let p = shipped();
        assert!(calibrate(&SearchSpace::grid(vec![], vec![p.inertia]), &p, &reduced()).is_err());
    }

    #[test]
    fn refinement_extends_the_log() {
        let p = shipped();
        let mut space = SearchSpace::grid(vec![p.damping / 2.0, p.damping * 2.0], vec![p.inertia]);
        space.refine_levels = 1;
        let objective = CalibrationObjective { n_angles: 11, n_runs: 2, ..reduced() };
        let result = calibrate(&space, &p, &objective).unwrap();
        assert_eq!(result.log.len(), 2 + 3);
        assert!(result.log.iter().all(|e| e.objective >= result.best.objective));
    }

    #[test]
    fn log_range_endpoints() {
        let v = SearchSpace::log_range(1e-3, 1e1, 5);
        assert_eq!(v.len(), 5);
        assert!((v[2] / 1e-1 - 1.0).abs() < 1e-12);
        assert!((v[4] / 1e1 - 1.0).abs() < 1e-12);
    }
}
