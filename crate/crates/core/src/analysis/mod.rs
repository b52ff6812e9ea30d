//! Post-processing of ensemble outcomes: the quantum reference curve, nearest
//! neighbour smoothing in angle space, error metrics and curve dimension.

mod fractal;
mod smoothing;

use std::f64::consts::PI;

pub use fractal::{default_step_lengths, divider_dimension, fractal_dimension, geometric_steps, DimensionEstimate};
pub use smoothing::convolve_nas;

use crate::ensemble::EnsembleResult;
use crate::error::{Error, Result};

/// Sampled curve with strictly increasing abscissa.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Curve {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::domain(format!(
                "curve abscissa and ordinate lengths differ ({} vs {})",
                xs.len(),
                ys.len()
            )));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("curve abscissa must be strictly increasing"));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(Error::domain("curve contains non-finite values"));
        }
        Ok(Self { xs, ys })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Uniform spacing to a relative tolerance of 1e-9 of the mean step.
    pub fn is_uniform(&self) -> bool {
        if self.xs.len() < 3 {
            return true;
        }
        let n = self.xs.len() - 1;
        let mean = (self.xs[n] - self.xs[0]) / n as f64;
        self.xs
            .windows(2)
            .all(|w| ((w[1] - w[0]) - mean).abs() <= 1e-9 * mean)
    }

    pub(crate) fn with_ys(&self, ys: Vec<f64>) -> Self {
        Self { xs: self.xs.clone(), ys }
    }
}

/// Spin-down probability `sin^2(theta/2)` for a moment prepared at angle `theta`.
pub fn qm_pdown(theta: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::domain(format!("theta = {theta} outside [0, pi]")));
    }
    Ok((0.5 * theta).sin().powi(2))
}

/// Root-mean-square difference between `curve` and `reference` at its abscissa.
pub fn rmse(curve: &Curve, reference: impl Fn(f64) -> f64) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::domain("rmse of an empty curve"));
    }
    let sum: f64 = curve
        .xs
        .iter()
        .zip(&curve.ys)
        .map(|(&x, &y)| (y - reference(x)).powi(2))
        .sum();
    Ok((sum / curve.len() as f64).sqrt())
}

/// Per-angle mean of the down indicators over all runs.
pub fn estimate_pdown(result: &EnsembleResult) -> Result<Curve> {
    if result.n_angles() == 0 || result.n_runs() == 0 {
        return Err(Error::domain("empty ensemble result"));
    }
    let ys = (0..result.n_angles())
        .map(|i| {
            let ones: u32 = result.row(i).iter().map(|&d| u32::from(d)).sum();
            f64::from(ones) / result.n_runs() as f64
        })
        .collect();
    Curve::new(result.angles().to_vec(), ys)
}

/// Adjacent-angle outcome flips within a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    /// `(run, i)` where `outcome[i][run] != outcome[i + 1][run]`.
    pub pairs: Vec<(usize, usize)>,
    pub n_runs: usize,
    pub n_angles: usize,
}

impl SensitivityReport {
    pub fn count(&self) -> usize {
        self.pairs.len()
    }

    /// Mean number of flips per run.
    pub fn per_run(&self) -> f64 {
        self.pairs.len() as f64 / self.n_runs.max(1) as f64
    }

    /// Fraction of adjacent pairs that flip.
    pub fn density(&self) -> f64 {
        let slots = self.n_runs * self.n_angles.saturating_sub(1);
        if slots == 0 {
            0.0
        } else {
            self.pairs.len() as f64 / slots as f64
        }
    }
}

pub fn sensitivity_pairs(result: &EnsembleResult) -> Result<SensitivityReport> {
    if result.n_angles() < 2 {
        return Err(Error::domain("sensitivity needs at least two angles"));
    }
    let mut pairs = Vec::new();
    for run in 0..result.n_runs() {
        for i in 0..result.n_angles() - 1 {
            if result.get(i, run) != result.get(i + 1, run) {
                pairs.push((run, i));
            }
        }
    }
    Ok(SensitivityReport {
        pairs,
        n_runs: result.n_runs(),
        n_angles: result.n_angles(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn qm_reference_values() {
        assert_eq!(qm_pdown(0.0).unwrap(), 0.0);
        assert!((qm_pdown(PI / 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((qm_pdown(PI).unwrap() - 1.0).abs() < 1e-15);
        assert!(qm_pdown(-0.1).is_err());
        assert!(qm_pdown(PI + 1e-9).is_err());
    }

    proptest! {
        #[test]
        fn qm_normalization(theta in 0.0..=PI) {
            let total = qm_pdown(theta).unwrap() + (0.5 * theta).cos().powi(2);
            prop_assert!((total - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rmse_examples() {
        let c = Curve::new(vec![0.0, 1.0, 2.0], vec![0.0, 0.0, 0.0]).unwrap();
        assert_eq!(rmse(&c, |_| 1.0).unwrap(), 1.0);
        let q = Curve::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0f64.sin(), 2.0f64.sin()]).unwrap();
        assert_eq!(rmse(&q, f64::sin).unwrap(), 0.0);
    }

    #[test]
    fn curve_validation() {
        assert!(Curve::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(Curve::new(vec![0.0], vec![1.0, 2.0]).is_err());
        assert!(!Curve::new(vec![0.0, 1.0, 3.0], vec![0.0; 3]).unwrap().is_uniform());
    }
}
