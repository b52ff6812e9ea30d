//! Divider (ruler) estimate of the fractal dimension of a planar curve.
//!
//! A ruler of length `L` is walked along the curve, each step landing on the
//! first later point (linear interpolation between samples) at chord distance
//! `L`. The step count scales as `k ~ L^{-d_f}`, so `d_f` is minus the slope of
//! `ln k` against `ln L`.

use super::Curve;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionEstimate {
    pub d_f: f64,
    pub step_lengths: Vec<f64>,
    /// Ruler steps per length, including the fractional final step.
    pub counts: Vec<f64>,
    /// RMS residual of the `ln k` fit.
    pub fit_residual: f64,
}

/// Twelve geometrically spaced rulers from `1/2` down to `1/2048`.
pub fn default_step_lengths() -> Vec<f64> {
    geometric_steps(0.5, 1.0 / 2048.0, 12)
}

/// `count` geometrically spaced values from `largest` down to `smallest`.
pub fn geometric_steps(largest: f64, smallest: f64, count: usize) -> Vec<f64> {
    let ratio = (smallest / largest).powf(1.0 / (count - 1) as f64);
    (0..count).map(|i| largest * ratio.powi(i as i32)).collect()
}

type Point = (f64, f64);

fn normalize(curve: &Curve) -> Vec<Point> {
    let span = |v: &[f64]| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let width = hi - lo;
        (lo, if width > 0.0 { width } else { 1.0 })
    };
    let (x0, xw) = span(curve.xs());
    let (y0, yw) = span(curve.ys());
    curve
        .xs()
        .iter()
        .zip(curve.ys())
        .map(|(x, y)| ((x - x0) / xw, (y - y0) / yw))
        .collect()
}

fn dist(a: Point, b: Point) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Number of ruler steps of length `ruler` needed to cover `pts`.
fn divider_count(pts: &[Point], ruler: f64) -> f64 {
    let mut centre = pts[0];
    let mut seg = 0usize;
    let mut s = 0.0_f64;
    let mut steps = 0usize;
    let r2 = ruler * ruler;
    'walk: loop {
        while seg + 1 < pts.len() {
            let a = pts[seg];
            let b = pts[seg + 1];
            if (b.0 - centre.0).powi(2) + (b.1 - centre.1).powi(2) >= r2 {
                let d = (b.0 - a.0, b.1 - a.1);
                let f = (a.0 - centre.0, a.1 - centre.1);
                let dd = d.0 * d.0 + d.1 * d.1;
                let fd = f.0 * d.0 + f.1 * d.1;
                let ff = f.0 * f.0 + f.1 * f.1;
                let disc = (fd * fd - dd * (ff - r2)).max(0.0);
                let root = ((-fd + disc.sqrt()) / dd).clamp(s, 1.0);
                centre = (a.0 + root * d.0, a.1 + root * d.1);
                s = root;
                steps += 1;
                continue 'walk;
            }
            seg += 1;
            s = 0.0;
        }
        break;
    }
    steps as f64 + dist(centre, pts[pts.len() - 1]) / ruler
}

/// Dimension of a sampled curve after scaling both axes onto the unit square.
pub fn fractal_dimension(curve: &Curve, step_lengths: &[f64]) -> Result<DimensionEstimate> {
    if curve.len() < 2 {
        return Err(Error::domain("fractal dimension needs at least two points"));
    }
    divider_dimension(&normalize(curve), step_lengths)
}

/// Divider dimension of an arbitrary polyline, used as is.
pub fn divider_dimension(pts: &[(f64, f64)], step_lengths: &[f64]) -> Result<DimensionEstimate> {
    if pts.len() < 2 {
        return Err(Error::domain("fractal dimension needs at least two points"));
    }
    if pts.iter().any(|p| !(p.0.is_finite() && p.1.is_finite())) {
        return Err(Error::domain("curve points must be finite"));
    }
    if step_lengths.len() < 3 {
        return Err(Error::domain("fractal dimension needs at least three step lengths"));
    }
    if step_lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::domain("step lengths must be positive"));
    }
    let extent = pts.iter().map(|p| dist(pts[0], *p)).fold(0.0, f64::max);
    if let Some(l) = step_lengths.iter().find(|&&l| l >= extent) {
        return Err(Error::domain(format!(
            "step length {l} is not smaller than the normalized curve extent {extent}"
        )));
    }
    let lmax = step_lengths.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lmin = step_lengths.iter().cloned().fold(f64::INFINITY, f64::min);
    if lmax / lmin < 10.0 {
        return Err(Error::domain("step lengths must span at least one decade"));
    }

    let counts: Vec<f64> = step_lengths.iter().map(|&l| divider_count(pts, l)).collect();
    let xs: Vec<f64> = step_lengths.iter().map(|l| l.ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|k| k.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum();
    Ok(DimensionEstimate {
        d_f: -slope,
        step_lengths: step_lengths.to_vec(),
        counts,
        fit_residual: (ss / n).sqrt(),
    })
}
