//! Magnetostatics of a single circular current loop, evaluated in the x-z plane.
//!
//! The loop lies in the plane `z = center.z` with its axis along z through
//! `center`. The 2-D slice used by the spin model is the `y = 0` plane, so the
//! cylindrical radial component maps onto `Bx` with the sign of `x - center.x`.

mod elliptic;

use std::f64::consts::PI;

pub use elliptic::elliptic_ke;

use crate::error::{Error, Result};

/// Vacuum permeability (T m / A).
pub const MU_0: f64 = 1.256_637_062_12e-6;

/// Field components in tesla at a point of the x-z plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldSample {
    pub bx: f64,
    pub bz: f64,
}

impl FieldSample {
    pub fn new(bx: f64, bz: f64) -> Self {
        Self { bx, bz }
    }

    pub fn magnitude(&self) -> f64 {
        self.bx.hypot(self.bz)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopGeometry {
    /// Loop radius (m).
    pub radius: f64,
    /// Loop current (A); positive current gives `Bz > 0` at the center.
    pub current: f64,
    pub center_x: f64,
    pub center_z: f64,
    /// Points closer than `exclusion * radius` to the wire are rejected.
    pub exclusion: f64,
}

impl LoopGeometry {
    pub fn new(radius: f64, current: f64) -> Self {
        Self {
            radius,
            current,
            center_x: 0.0,
            center_z: 0.0,
            exclusion: 1e-6,
        }
    }

    pub fn with_center(mut self, x: f64, z: f64) -> Self {
        self.center_x = x;
        self.center_z = z;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::domain(format!("loop radius {} must be > 0", self.radius)));
        }
        if !(self.current.is_finite() && self.current != 0.0) {
            return Err(Error::domain(format!(
                "loop current {} must be finite and nonzero",
                self.current
            )));
        }
        if !(self.center_x.is_finite() && self.center_z.is_finite()) {
            return Err(Error::domain("loop center must be finite"));
        }
        if !(self.exclusion.is_finite() && self.exclusion > 0.0) {
            return Err(Error::domain("wire exclusion radius must be > 0"));
        }
        Ok(())
    }

    /// Distance from a point in the x-z plane to the nearest wire crossing.
    pub fn wire_distance(&self, x: f64, z: f64) -> f64 {
        let rho = (x - self.center_x).abs();
        (rho - self.radius).hypot(z - self.center_z)
    }

    /// `(B_rho, B_z)` at cylindrical radius `rho >= 0` and axial offset `dz`.
    fn cylindrical_field(&self, rho: f64, dz: f64) -> Result<(f64, f64)> {
        let a = self.radius;
        if (rho - a).hypot(dz) <= self.exclusion * a {
            return Err(Error::Singularity {
                x: self.center_x + rho,
                z: self.center_z + dz,
            });
        }
        let prefactor = MU_0 * self.current / (2.0 * PI);
        if rho == 0.0 {
            let bz = MU_0 * self.current * a * a / (2.0 * (a * a + dz * dz).powf(1.5));
            return Ok((0.0, bz));
        }
        let alpha_sq = (a - rho).powi(2) + dz * dz;
        let beta_sq = (a + rho).powi(2) + dz * dz;
        let beta = beta_sq.sqrt();
        let m = 4.0 * a * rho / beta_sq;
        let (k, e) = elliptic_ke(m)?;
        let bz = prefactor / beta * (k + (a * a - rho * rho - dz * dz) / alpha_sq * e);
        let brho = prefactor * dz / (rho * beta) * (-k + (a * a + rho * rho + dz * dz) / alpha_sq * e);
        Ok((brho, bz))
    }

    /// Field at `(x, z)`. On the axis `Bx` is exactly zero.
    pub fn field(&self, x: f64, z: f64) -> Result<FieldSample> {
        let dx = x - self.center_x;
        let (brho, bz) = self.cylindrical_field(dx.abs(), z - self.center_z)?;
        let bx = if dx < 0.0 { -brho } else { brho };
        Ok(FieldSample { bx, bz })
    }

    /// Central-difference residual of the axisymmetric divergence
    /// `(1/rho) d(rho B_rho)/d rho + dB_z/dz` at `(x, z)`, in T/m.
    pub fn divergence_residual(&self, x: f64, z: f64, h: f64) -> Result<f64> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::domain(format!("stencil step h = {h} must be > 0")));
        }
        let rho = (x - self.center_x).abs();
        let dz = z - self.center_z;
        if rho <= h {
            return Err(Error::domain(
                "divergence stencil needs rho > h (axis inside the stencil)",
            ));
        }
        if (rho - self.radius).hypot(dz) <= h * std::f64::consts::SQRT_2 + self.exclusion * self.radius {
            return Err(Error::Singularity { x, z });
        }
        let (br_plus, _) = self.cylindrical_field(rho + h, dz)?;
        let (br_minus, _) = self.cylindrical_field(rho - h, dz)?;
        let (_, bz_plus) = self.cylindrical_field(rho, dz + h)?;
        let (_, bz_minus) = self.cylindrical_field(rho, dz - h)?;
        let radial = ((rho + h) * br_plus - (rho - h) * br_minus) / (2.0 * h * rho);
        let axial = (bz_plus - bz_minus) / (2.0 * h);
        Ok((radial + axial).abs())
    }
}

/// Straight-line, constant-speed path at fixed height `z0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySpec {
    pub x_start: f64,
    pub x_end: f64,
    pub z0: f64,
    /// Speed along +x (m/s).
    pub v: f64,
}

impl TrajectorySpec {
    pub fn duration(&self) -> f64 {
        (self.x_end - self.x_start) / self.v
    }

    pub fn position(&self, t: f64) -> f64 {
        self.x_start + self.v * t
    }

    pub fn validate(&self, coil: &LoopGeometry) -> Result<()> {
        if !(self.x_start.is_finite() && self.x_end.is_finite() && self.x_start < self.x_end) {
            return Err(Error::domain(format!(
                "trajectory needs x_start < x_end (got {} .. {})",
                self.x_start, self.x_end
            )));
        }
        if !(self.v.is_finite() && self.v > 0.0) {
            return Err(Error::domain(format!("speed v = {} must be > 0", self.v)));
        }
        if !self.z0.is_finite() {
            return Err(Error::domain("trajectory height must be finite"));
        }
        // The line only meets the wire in its own plane, at x = center.x +/- R.
        if (self.z0 - coil.center_z).abs() <= coil.exclusion * coil.radius {
            for wire_x in [coil.center_x - coil.radius, coil.center_x + coil.radius] {
                if wire_x >= self.x_start && wire_x <= self.x_end {
                    return Err(Error::domain("trajectory passes through the loop wire"));
                }
            }
        }
        Ok(())
    }

    /// Largest `|B|` met along the path, sampled at `samples` evenly spaced points.
    pub fn peak_field(&self, coil: &LoopGeometry, samples: usize) -> Result<f64> {
        let samples = samples.max(2);
        let mut peak = 0.0_f64;
        for i in 0..samples {
            let x = self.x_start + (self.x_end - self.x_start) * i as f64 / (samples - 1) as f64;
            peak = peak.max(coil.field(x, self.z0)?.magnitude());
        }
        // Closest approach to the axis is where the on-path field usually peaks.
        if coil.center_x > self.x_start && coil.center_x < self.x_end {
            peak = peak.max(coil.field(coil.center_x, self.z0)?.magnitude());
        }
        Ok(peak)
    }
}

/// Field seen by a particle on `traj` at time `t` (s).
pub fn field_along_trajectory(
    traj: &TrajectorySpec,
    coil: &LoopGeometry,
    t: f64,
) -> Result<FieldSample> {
    let duration = traj.duration();
    if !(0.0..=duration).contains(&t) {
        return Err(Error::domain(format!(
            "time {t} s outside trajectory duration [0, {duration}] s"
        )));
    }
    coil.field(traj.position(t), traj.z0)
}
