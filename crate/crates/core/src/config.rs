//! Plain-text `key = value` configuration.
//!
//! Lines are `key = value [unit]`, `#` starts a comment, blank lines are
//! ignored. Every value is in SI units; an optional trailing unit token must
//! match the key's unit exactly. Missing keys take the shipped defaults.

use std::fmt::Write as _;

use crate::analysis::geometric_steps;
use crate::dynamics::{qm_timescale, ModelParams, BOHR_MAGNETON, DT_GUARD_RATIO};
use crate::ensemble::angle_grid;
use crate::error::{Error, Result};
use crate::magnetics::{LoopGeometry, TrajectorySpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub mu: f64,
    pub inertia: f64,
    pub damping: f64,
    /// `dt / qm_timescale(mu, B_ref)`; ignored when `dt` is set.
    pub dt_ratio: f64,
    /// Absolute step (s), overriding `dt_ratio`.
    pub dt: Option<f64>,
    pub loop_radius: f64,
    pub loop_current: f64,
    pub loop_center_x: f64,
    pub loop_center_z: f64,
    pub wire_exclusion: f64,
    pub x_start: f64,
    pub x_end: f64,
    pub z0: f64,
    pub v: f64,
    pub settle_factor: f64,
    pub n_angles: usize,
    pub n_runs: usize,
    pub master_seed: u64,
    pub half_width: usize,
    pub compare_half_width: usize,
    pub full_n_angles: usize,
    pub full_n_runs: usize,
    pub full_half_width: usize,
    pub full_compare_half_width: usize,
    pub ruler_largest: f64,
    pub ruler_smallest: f64,
    pub ruler_count: usize,
    pub output_dir: String,
}

impl Default for Config {
    /// The shipped calibrated configuration.
    ///
    /// Only the groups `kappa = mu B0 R^2 / (I v^2)` and `beta = b R / (I v)`
    /// shape the outcome statistics (`B0` is `Bz` at the path height above the
    /// loop center). A weak loop current keeps `qm_timescale` long enough for a
    /// desk-scale step count; (b, I) were chosen at `kappa = 8000`,
    /// `beta = 3.6` by the reduced-ensemble RMSE search.
    fn default() -> Self {
        Self {
            mu: BOHR_MAGNETON,
            inertia: 2.573535e-43,
            damping: 9.264726e-39,
            dt_ratio: 1e-3,
            dt: None,
            loop_radius: 0.05,
            loop_current: 0.005,
            loop_center_x: 0.0,
            loop_center_z: 0.0,
            wire_exclusion: 1e-6,
            x_start: -0.195,
            x_end: 0.2,
            z0: 0.05,
            v: 500.0,
            settle_factor: 1e-3,
            n_angles: 101,
            n_runs: 20,
            master_seed: 7,
            half_width: 7,
            compare_half_width: 2,
            full_n_angles: 1001,
            full_n_runs: 100,
            full_half_width: 75,
            full_compare_half_width: 25,
            ruler_largest: 0.5,
            ruler_smallest: 1.0 / 2048.0,
            ruler_count: 12,
            output_dir: "out".to_string(),
        }
    }
}

/// Ensemble size and smoothing widths for one run scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunScale {
    pub n_angles: usize,
    pub n_runs: usize,
    pub half_width: usize,
    /// Narrower width reported alongside `half_width` for the dimension ordering.
    pub compare_half_width: usize,
}

#[derive(Clone, Copy)]
enum Kind {
    Real(&'static str),
    Count,
    Seed,
    Text,
}

const KEYS: &[(&str, Kind)] = &[
    ("mu", Kind::Real("J/T")),
    ("inertia", Kind::Real("kg*m^2")),
    ("damping", Kind::Real("kg*m^2/s")),
    ("dt_ratio", Kind::Real("1")),
    ("dt", Kind::Real("s")),
    ("loop_radius", Kind::Real("m")),
    ("loop_current", Kind::Real("A")),
    ("loop_center_x", Kind::Real("m")),
    ("loop_center_z", Kind::Real("m")),
    ("wire_exclusion", Kind::Real("1")),
    ("x_start", Kind::Real("m")),
    ("x_end", Kind::Real("m")),
    ("z0", Kind::Real("m")),
    ("v", Kind::Real("m/s")),
    ("settle_factor", Kind::Real("1")),
    ("n_angles", Kind::Count),
    ("n_runs", Kind::Count),
    ("master_seed", Kind::Seed),
    ("half_width", Kind::Count),
    ("compare_half_width", Kind::Count),
    ("full_n_angles", Kind::Count),
    ("full_n_runs", Kind::Count),
    ("full_half_width", Kind::Count),
    ("full_compare_half_width", Kind::Count),
    ("ruler_largest", Kind::Real("1")),
    ("ruler_smallest", Kind::Real("1")),
    ("ruler_count", Kind::Count),
    ("output_dir", Kind::Text),
];

fn split_unit(key: &str, raw: &str, unit: &str) -> Result<String> {
    let mut parts = raw.split_whitespace();
    let number = parts.next().ok_or_else(|| Error::config(key, "missing value"))?;
    if let Some(found) = parts.next() {
        if found != unit {
            return Err(Error::config(key, format!("unit `{found}` given, expected `{unit}` (SI)")));
        }
    }
    if parts.next().is_some() {
        return Err(Error::config(key, format!("trailing text in `{raw}`")));
    }
    Ok(number.to_string())
}

fn parse_real(key: &str, raw: &str, unit: &str) -> Result<f64> {
    let number = split_unit(key, raw, unit)?;
    let value: f64 = number
        .parse()
        .map_err(|_| Error::config(key, format!("`{number}` is not a number")))?;
    if !value.is_finite() {
        return Err(Error::config(key, "value must be finite"));
    }
    Ok(value)
}

fn parse_int<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    let number = split_unit(key, raw, "1")?;
    number
        .parse()
        .map_err(|_| Error::config(key, format!("`{number}` is not a non-negative integer")))
}

impl Config {
    fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let kind = KEYS
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, kind)| *kind)
            .ok_or_else(|| Error::config(key, "unknown key"))?;
        let real = |unit| parse_real(key, raw, unit);
        match (key, kind) {
            ("output_dir", _) => {
                if raw.is_empty() {
                    return Err(Error::config(key, "empty path"));
                }
                self.output_dir = raw.to_string();
            }
            ("master_seed", _) => self.master_seed = parse_int(key, raw)?,
            (_, Kind::Count) => {
                let n: usize = parse_int(key, raw)?;
                *self.count_mut(key) = n;
            }
            (_, Kind::Real(unit)) => {
                let value = real(unit)?;
                if key == "dt" {
                    self.dt = Some(value);
                } else {
                    *self.real_mut(key) = value;
                }
            }
            (_, Kind::Seed | Kind::Text) => unreachable!("handled by key"),
        }
        Ok(())
    }

    fn real_mut(&mut self, key: &str) -> &mut f64 {
        match key {
            "mu" => &mut self.mu,
            "inertia" => &mut self.inertia,
            "damping" => &mut self.damping,
            "dt_ratio" => &mut self.dt_ratio,
            "loop_radius" => &mut self.loop_radius,
            "loop_current" => &mut self.loop_current,
            "loop_center_x" => &mut self.loop_center_x,
            "loop_center_z" => &mut self.loop_center_z,
            "wire_exclusion" => &mut self.wire_exclusion,
            "x_start" => &mut self.x_start,
            "x_end" => &mut self.x_end,
            "z0" => &mut self.z0,
            "v" => &mut self.v,
            "settle_factor" => &mut self.settle_factor,
            "ruler_largest" => &mut self.ruler_largest,
            "ruler_smallest" => &mut self.ruler_smallest,
            _ => unreachable!("not a real-valued key: {key}"),
        }
    }

    fn count_mut(&mut self, key: &str) -> &mut usize {
        match key {
            "n_angles" => &mut self.n_angles,
            "n_runs" => &mut self.n_runs,
            "half_width" => &mut self.half_width,
            "compare_half_width" => &mut self.compare_half_width,
            "full_n_angles" => &mut self.full_n_angles,
            "full_n_runs" => &mut self.full_n_runs,
            "full_half_width" => &mut self.full_half_width,
            "full_compare_half_width" => &mut self.full_compare_half_width,
            "ruler_count" => &mut self.ruler_count,
            _ => unreachable!("not a count key: {key}"),
        }
    }

    pub fn coil(&self) -> LoopGeometry {
        let mut coil = LoopGeometry::new(self.loop_radius, self.loop_current)
            .with_center(self.loop_center_x, self.loop_center_z);
        coil.exclusion = self.wire_exclusion;
        coil
    }

    pub fn trajectory(&self) -> TrajectorySpec {
        TrajectorySpec {
            x_start: self.x_start,
            x_end: self.x_end,
            z0: self.z0,
            v: self.v,
        }
    }

    /// Model parameters with `dt` resolved from `dt_ratio` unless set directly.
    pub fn model_params(&self) -> Result<ModelParams> {
        let mut params = ModelParams {
            mu: self.mu,
            inertia: self.inertia,
            damping: self.damping,
            dt: 1.0,
            coil: self.coil(),
            traj: self.trajectory(),
            settle_factor: self.settle_factor,
        };
        params.dt = match self.dt {
            Some(dt) => dt,
            None => qm_timescale(self.mu, params.reference_field()?)? * self.dt_ratio,
        };
        Ok(params)
    }

    pub fn scale(&self, full: bool) -> RunScale {
        if full {
            RunScale {
                n_angles: self.full_n_angles,
                n_runs: self.full_n_runs,
                half_width: self.full_half_width,
                compare_half_width: self.full_compare_half_width,
            }
        } else {
            RunScale {
                n_angles: self.n_angles,
                n_runs: self.n_runs,
                half_width: self.half_width,
                compare_half_width: self.compare_half_width,
            }
        }
    }

    /// Divider ruler lengths in normalized units.
    pub fn step_lengths(&self) -> Vec<f64> {
        geometric_steps(self.ruler_largest, self.ruler_smallest, self.ruler_count)
    }

    /// Checks every constraint, reporting the first failure against its key.
    pub fn validate(&self) -> Result<()> {
        for (key, n) in [("n_angles", self.n_angles), ("full_n_angles", self.full_n_angles)] {
            if n % 2 == 0 {
                return Err(Error::config(key, format!("{n} is even; the angle grid must be odd so pi/2 is skipped")));
            }
            angle_grid(n).map_err(|e| Error::config(key, e.to_string()))?;
        }
        for (key, n) in [("n_runs", self.n_runs), ("full_n_runs", self.full_n_runs)] {
            if n == 0 {
                return Err(Error::config(key, "must be >= 1"));
            }
        }
        let positive = [
            ("mu", self.mu),
            ("inertia", self.inertia),
            ("loop_radius", self.loop_radius),
            ("v", self.v),
            ("settle_factor", self.settle_factor),
            ("wire_exclusion", self.wire_exclusion),
            ("ruler_largest", self.ruler_largest),
            ("ruler_smallest", self.ruler_smallest),
        ];
        for (key, value) in positive {
            if value <= 0.0 {
                return Err(Error::config(key, format!("{value} must be > 0")));
            }
        }
        if self.damping < 0.0 {
            return Err(Error::config("damping", "must be >= 0"));
        }
        if self.loop_current == 0.0 {
            return Err(Error::config("loop_current", "must be nonzero"));
        }
        if self.x_start >= self.x_end {
            return Err(Error::config("x_end", "must exceed x_start"));
        }
        if self.ruler_count < 3 {
            return Err(Error::config("ruler_count", "need at least 3 ruler lengths"));
        }
        if self.ruler_smallest >= self.ruler_largest {
            return Err(Error::config("ruler_smallest", "must be below ruler_largest"));
        }
        match self.dt {
            None if !(self.dt_ratio > 0.0 && self.dt_ratio <= DT_GUARD_RATIO) => {
                return Err(Error::config(
                    "dt_ratio",
                    format!("{} violates dt <= qm_timescale/100", self.dt_ratio),
                ));
            }
            Some(dt) if dt <= 0.0 => return Err(Error::config("dt", "must be > 0")),
            _ => {}
        }
        let params = self.model_params().map_err(|e| Error::config("loop_current", e.to_string()))?;
        params.traj.validate(&params.coil).map_err(|e| Error::config("z0", e.to_string()))?;
        if self.dt.is_some() {
            params.validate().map_err(|e| Error::config("dt", e.to_string()))?;
        } else {
            params.validate().map_err(|e| Error::config("dt_ratio", e.to_string()))?;
        }
        Ok(())
    }

    /// Canonical text with `output_dir` reset to `.`, so manifests carry no host paths.
    pub fn snapshot_text(&self) -> String {
        let mut c = self.clone();
        c.output_dir = ".".to_string();
        c.to_text()
    }

    /// Canonical text form: every key in fixed order, round-trips through [`parse_config`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, kind) in KEYS {
            let value = match (*key, kind) {
                ("dt", _) => match self.dt {
                    Some(dt) => format!("{dt:e}"),
                    None => continue,
                },
                ("master_seed", _) => self.master_seed.to_string(),
                ("output_dir", _) => self.output_dir.clone(),
                (_, Kind::Count) => self.clone().count_mut(key).to_string(),
                (_, _) => format!("{:e}", self.clone().real_mut(key)),
            };
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }
}

/// Parses and validates a configuration; absent keys keep their defaults.
pub fn parse_config(text: &str) -> Result<Config> {
    let mut config = Config::default();
    let mut seen: Vec<String> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}", n + 1), format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if seen.iter().any(|k| k == key) {
            return Err(Error::config(key, "given more than once"));
        }
        config.set(key, value)?;
        seen.push(key.to_string());
    }
    config.validate()?;
    Ok(config)
}
