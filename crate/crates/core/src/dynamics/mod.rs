//! Semi-classical spin torque, the damped driven equation of motion and its
//! Euler-Cromer integration along a prescribed particle path.

pub mod pendulum;

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::magnetics::{field_along_trajectory, FieldSample, LoopGeometry, TrajectorySpec};

/// Reduced Planck constant (J s), CODATA 2018.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Bohr magneton (J/T).
pub const BOHR_MAGNETON: f64 = 9.274e-24;
/// Largest accepted `dt / qm_timescale`.
pub const DT_GUARD_RATIO: f64 = 1e-2;

/// Samples taken along the path when locating the peak field for the dt guard.
const PEAK_SAMPLES: usize = 4001;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Magnetic moment magnitude (J/T).
    pub mu: f64,
    /// Moment of inertia (kg m^2).
    pub inertia: f64,
    /// Damping coefficient (kg m^2 / s).
    pub damping: f64,
    /// Integration step (s).
    pub dt: f64,
    pub coil: LoopGeometry,
    pub traj: TrajectorySpec,
    /// Settle threshold as a fraction of the characteristic rate `sqrt(mu B_ref / I)`.
    pub settle_factor: f64,
}

impl ModelParams {
    /// Peak `|B|` along the path; the reference field for the time-scale rule.
    pub fn reference_field(&self) -> Result<f64> {
        self.traj.peak_field(&self.coil, PEAK_SAMPLES)
    }

    /// `sqrt(mu B_ref / I)`, the natural angular rate of the torque law.
    pub fn characteristic_rate(&self) -> Result<f64> {
        Ok((self.mu * self.reference_field()? / self.inertia).sqrt())
    }

    pub fn settle_threshold(&self) -> Result<f64> {
        Ok(self.settle_factor * self.characteristic_rate()?)
    }

    /// Number of whole steps that fit in the path duration.
    pub fn step_count(&self) -> usize {
        let ratio = self.traj.duration() / self.dt;
        // Absorb representation error when the duration is an exact multiple of dt.
        (ratio * (1.0 + 1e-12)).floor() as usize
    }

    /// Checks the physical constraints and the time-scale guard
    /// `dt <= qm_timescale(mu, B_ref) / 100`.
    pub fn validate(&self) -> Result<()> {
        self.coil.validate()?;
        self.traj.validate(&self.coil)?;
        for (name, value) in [("mu", self.mu), ("inertia", self.inertia), ("dt", self.dt)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::domain(format!("{name} = {value} must be > 0")));
            }
        }
        if !(self.damping.is_finite() && self.damping >= 0.0) {
            return Err(Error::domain(format!("damping = {} must be >= 0", self.damping)));
        }
        if !(self.settle_factor.is_finite() && self.settle_factor > 0.0) {
            return Err(Error::domain("settle_factor must be > 0"));
        }
        let tau = qm_timescale(self.mu, self.reference_field()?)?;
        if self.dt > DT_GUARD_RATIO * tau {
            return Err(Error::domain(format!(
                "dt = {:e} s exceeds qm_timescale/100 = {:e} s",
                self.dt,
                DT_GUARD_RATIO * tau
            )));
        }
        Ok(())
    }
}

/// Quantum time scale `hbar / (2 dE)` with `dE = 2 mu B`.
pub fn qm_timescale(mu: f64, b: f64) -> Result<f64> {
    if !(mu > 0.0 && b > 0.0 && mu.is_finite() && b.is_finite()) {
        return Err(Error::domain(format!(
            "qm_timescale needs mu > 0 and B > 0 (got {mu}, {b})"
        )));
    }
    let delta_e = 2.0 * mu * b;
    Ok(HBAR / (2.0 * delta_e))
}

/// Semi-classical torque (N m).
///
/// `s(theta) mu (Bx - Bz) sin^2(2 theta)` with `s = +1` below `pi/2`, `-1` above and
/// `0` at `pi/2`. Above `pi/2` the angle is mirrored to `pi - theta` before the
/// sine so the poles give an exact zero.
pub fn spin_torque(theta: f64, field: FieldSample, mu: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::domain(format!("theta = {theta} outside [0, pi]")));
    }
    Ok(spin_torque_unchecked(theta, field, mu))
}

#[inline]
fn spin_torque_unchecked(theta: f64, field: FieldSample, mu: f64) -> f64 {
    torque_from_difference(theta, field.bx - field.bz, mu)
}

/// Torque from the precomputed field difference `Bx - Bz`.
#[inline]
fn torque_from_difference(theta: f64, bx_minus_bz: f64, mu: f64) -> f64 {
    let drive = mu * bx_minus_bz;
    if theta < FRAC_PI_2 {
        let s = (2.0 * theta).sin();
        drive * s * s
    } else if theta > FRAC_PI_2 {
        let s = (2.0 * (PI - theta)).sin();
        -drive * s * s
    } else {
        0.0
    }
}

/// Classical dipole torque `-mu B sin(theta)`, kept as a reference model.
pub fn classical_torque(theta: f64, b: f64, mu: f64) -> f64 {
    -mu * b * theta.sin()
}

/// Value-type integration state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinState {
    pub theta: f64,
    /// Angular velocity (rad/s).
    pub y: f64,
    pub t: f64,
}

impl SpinState {
    pub fn at_rest(theta: f64) -> Self {
        Self { theta, y: 0.0, t: 0.0 }
    }
}

/// Right-hand side `(dtheta/dt, dy/dt)` of the spin equation of motion.
pub fn rhs(state: &SpinState, params: &ModelParams) -> Result<(f64, f64)> {
    let field = field_along_trajectory(&params.traj, &params.coil, state.t)?;
    let torque = spin_torque(state.theta, field, params.mu)?;
    Ok((state.y, acceleration(state.y, torque, params)))
}

#[inline]
fn acceleration(y: f64, torque: f64, params: &ModelParams) -> f64 {
    (-params.damping * y + torque) / params.inertia
}

/// Keeps a polar angle inside `[0, pi]` by mirroring at the poles.
#[inline]
pub fn reflect_at_poles(theta: f64, y: f64) -> (f64, f64) {
    if theta < 0.0 {
        (-theta, -y)
    } else if theta > PI {
        (2.0 * PI - theta, -y)
    } else {
        (theta, y)
    }
}

/// Semi-implicit Euler update: velocity first, then position with the new velocity.
#[inline]
pub fn euler_cromer(theta: f64, y: f64, accel: f64, dt: f64) -> (f64, f64) {
    let y_next = y + accel * dt;
    (theta + y_next * dt, y_next)
}

/// Explicit forward Euler; used only as a negative control for the stepper.
#[inline]
pub fn forward_euler(theta: f64, y: f64, accel: f64, dt: f64) -> (f64, f64) {
    (theta + y * dt, y + accel * dt)
}

/// One Euler-Cromer step of the spin model with pole reflection.
pub fn euler_cromer_step(state: &SpinState, params: &ModelParams) -> Result<SpinState> {
    let (_, accel) = rhs(state, params)?;
    let (theta, y) = euler_cromer(state.theta, state.y, accel, params.dt);
    let (theta, y) = reflect_at_poles(theta, y);
    Ok(SpinState { theta, y, t: state.t + params.dt })
}

/// Result of integrating one initial angle through the device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    /// True when the moment ends past `pi/2`.
    pub down: bool,
    pub final_theta: f64,
    pub final_y: f64,
    /// `|final_y|` exceeded the settle threshold.
    pub unsettled: bool,
}

impl Outcome {
    pub fn down_indicator(&self) -> u8 {
        u8::from(self.down)
    }
}

/// Drive `Bx - Bz` at `t_k = k dt` for every step of a path, shared by all
/// initial angles integrated under the same parameters.
#[derive(Debug, Clone)]
pub struct DriveTable {
    differences: Vec<f64>,
    settle_threshold: f64,
}

impl DriveTable {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let n = params.step_count();
        let differences = (0..n)
            .map(|k| {
                field_along_trajectory(&params.traj, &params.coil, k as f64 * params.dt)
                    .map(|b| b.bx - b.bz)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            differences,
            settle_threshold: params.settle_threshold()?,
        })
    }

    pub fn len(&self) -> usize {
        self.differences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.differences.is_empty()
    }
}

fn check_initial_angle(theta_i: f64) -> Result<()> {
    if !(0.0..=PI).contains(&theta_i) {
        return Err(Error::domain(format!("initial angle {theta_i} outside [0, pi]")));
    }
    if theta_i == FRAC_PI_2 {
        return Err(Error::domain("initial angle pi/2 is an unstable fixed point"));
    }
    Ok(())
}

#[inline]
fn advance(theta: f64, y: f64, bx_minus_bz: f64, params: &ModelParams) -> (f64, f64) {
    let torque = torque_from_difference(theta, bx_minus_bz, params.mu);
    let accel = acceleration(y, torque, params);
    let (theta, y) = euler_cromer(theta, y, accel, params.dt);
    reflect_at_poles(theta, y)
}

fn classify(theta: f64, y: f64, settle_threshold: f64) -> Outcome {
    Outcome {
        down: theta > FRAC_PI_2,
        final_theta: theta,
        final_y: y,
        unsettled: y.abs() > settle_threshold,
    }
}

/// Integrates from rest at `theta_i` over the whole path and classifies the end state.
pub fn simulate_trajectory(theta_i: f64, params: &ModelParams) -> Result<Outcome> {
    check_initial_angle(theta_i)?;
    let (mut theta, mut y) = (theta_i, 0.0_f64);
    for k in 0..params.step_count() {
        let b = field_along_trajectory(&params.traj, &params.coil, k as f64 * params.dt)?;
        (theta, y) = advance(theta, y, b.bx - b.bz, params);
    }
    Ok(classify(theta, y, params.settle_threshold()?))
}

/// Same as [`simulate_trajectory`] with the path field precomputed; bitwise identical.
pub fn simulate_with_drive(theta_i: f64, params: &ModelParams, drive: &DriveTable) -> Result<Outcome> {
    check_initial_angle(theta_i)?;
    let (mut theta, mut y) = (theta_i, 0.0_f64);
    for &d in &drive.differences {
        (theta, y) = advance(theta, y, d, params);
    }
    Ok(classify(theta, y, drive.settle_threshold))
}

/// One row of a per-trajectory path dump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub t: f64,
    pub theta: f64,
    pub y: f64,
    pub field: FieldSample,
}

/// Records every `stride`-th state along the path (the final state is always kept).
pub fn trace_trajectory(theta_i: f64, params: &ModelParams, stride: usize) -> Result<Vec<TracePoint>> {
    check_initial_angle(theta_i)?;
    let stride = stride.max(1);
    let n = params.step_count();
    let mut out = Vec::with_capacity(n / stride + 2);
    let (mut theta, mut y) = (theta_i, 0.0_f64);
    for k in 0..n {
        let t = k as f64 * params.dt;
        let field = field_along_trajectory(&params.traj, &params.coil, t)?;
        if k % stride == 0 {
            out.push(TracePoint { t, theta, y, field });
        }
        (theta, y) = advance(theta, y, field.bx - field.bz, params);
    }
    let t = n as f64 * params.dt;
    let field = field_along_trajectory(&params.traj, &params.coil, t.min(params.traj.duration()))?;
    out.push(TracePoint { t, theta, y, field });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    fn bz(b: f64) -> FieldSample {
        FieldSample::new(0.0, b)
    }

    fn shipped() -> ModelParams {
        Config::default().model_params().unwrap()
    }

    #[test]
    fn timescale_for_bohr_magneton_in_one_tesla() {
        let tau = qm_timescale(BOHR_MAGNETON, 1.0).unwrap();
        assert!((tau / 2.843e-12 - 1.0).abs() < 1e-3, "{tau}");
        assert_eq!(qm_timescale(BOHR_MAGNETON, 2.0).unwrap(), tau / 2.0);
        assert!(qm_timescale(BOHR_MAGNETON, 0.0).is_err());
    }

    #[test]
    fn torque_reference_values() {
        let mu = 2.0;
        for field in [bz(1.0), FieldSample::new(3.0, -1.0), FieldSample::new(-0.5, 0.0)] {
            assert_eq!(spin_torque(0.0, field, mu).unwrap(), 0.0);
            assert_eq!(spin_torque(FRAC_PI_2, field, mu).unwrap(), 0.0);
            assert_eq!(spin_torque(PI, field, mu).unwrap(), 0.0);
        }
        assert!((spin_torque(PI / 4.0, bz(1.5), mu).unwrap() + 3.0).abs() < 1e-15);
        assert!((spin_torque(3.0 * PI / 4.0, bz(1.5), mu).unwrap() - 3.0).abs() < 1e-14);
        assert!(spin_torque(-1e-3, bz(1.0), mu).is_err());
        assert!(spin_torque(PI + 1e-9, bz(1.0), mu).is_err());
    }

    #[test]
    fn torque_is_continuous_at_the_equator() {
        let field = FieldSample::new(0.7, -1.3);
        for eps in [1e-6, 1e-9, 1e-12] {
            let below = spin_torque(FRAC_PI_2 - eps, field, 1.0).unwrap();
            let above = spin_torque(FRAC_PI_2 + eps, field, 1.0).unwrap();
            assert!(below.abs() < 1e-10 && above.abs() < 1e-10);
        }
    }

    #[test]
    fn torque_sign_pattern() {
        let n = 10_000;
        for k in 0..n {
            let theta = (k as f64 + 0.5) * PI / n as f64;
            let poles = spin_torque(theta, bz(1.0), 1.0).unwrap();
            let equator = spin_torque(theta, FieldSample::new(1.0, 0.0), 1.0).unwrap();
            if theta < FRAC_PI_2 {
                assert!(poles < 0.0 && equator > 0.0, "theta {theta}");
            } else {
                assert!(poles > 0.0 && equator < 0.0, "theta {theta}");
            }
        }
    }

    #[test]
    fn rhs_examples() {
        let mut p = shipped();
        p.coil.current = 0.0;
        let s = SpinState { theta: 1.0, y: 0.0, t: 0.0 };
        assert_eq!(rhs(&s, &p).unwrap(), (0.0, 0.0));
        let s = SpinState { theta: 1.0, y: 1.0, t: 0.0 };
        let (d, a) = rhs(&s, &p).unwrap();
        assert_eq!(d, 1.0);
        assert!((a + p.damping / p.inertia).abs() <= 1e-12 * p.damping / p.inertia);
    }

    #[test]
    fn rhs_under_pure_bz() {
        let mut p = shipped();
        p.traj = TrajectorySpec { x_start: 0.0, x_end: 1e-3, z0: 0.0, v: 500.0 };
        let b = p.coil.field(0.0, 0.0).unwrap();
        assert_eq!(b.bx, 0.0);
        let s = SpinState { theta: PI / 4.0, y: 0.0, t: 0.0 };
        let (_, a) = rhs(&s, &p).unwrap();
        let expected = -p.mu * b.bz / p.inertia;
        assert!((a - expected).abs() <= 1e-12 * expected.abs());
    }

    #[test]
    fn step_with_zero_torque_only_advances_time() {
        let mut p = shipped();
        p.traj = TrajectorySpec { x_start: 0.0, x_end: 1e-3, z0: 0.0, v: 500.0 };
        let s = SpinState::at_rest(0.0);
        let next = euler_cromer_step(&s, &p).unwrap();
        assert_eq!((next.theta, next.y), (0.0, 0.0));
        assert_eq!(next.t, p.dt);
    }

    #[test]
    fn euler_cromer_constant_acceleration() {
        let (theta, y) = euler_cromer(0.3, 0.0, 2.0, 0.1);
        assert!((y - 0.2).abs() < 1e-15);
        assert!((theta - (0.3 + 2.0 * 0.01)).abs() < 1e-15);
        let (theta, y) = forward_euler(0.3, 0.0, 2.0, 0.1);
        assert_eq!((theta, y), (0.3, 0.2));
    }

    #[test]
    fn poles_reflect() {
        assert_eq!(reflect_at_poles(-0.1, -2.0), (0.1, 2.0));
        let (t, y) = reflect_at_poles(PI + 0.1, 2.0);
        assert!((t - (PI - 0.1)).abs() < 1e-15 && y == -2.0);
        assert_eq!(reflect_at_poles(1.0, 3.0), (1.0, 3.0));
    }

    // Potential of the torque under constant Bz = b: V = mu b (theta/2 - sin(4 theta)/8) below pi/2.
    fn energy(theta: f64, y: f64) -> f64 {
        0.5 * y * y + theta / 2.0 - (4.0 * theta).sin() / 8.0
    }

    fn oscillate(step: fn(f64, f64, f64, f64) -> (f64, f64), steps: usize) -> Vec<f64> {
        let (mut theta, mut y) = (0.4, 0.0);
        let dt = 1e-3;
        let mut energies = Vec::with_capacity(steps);
        for _ in 0..steps {
            let accel = spin_torque(theta, bz(1.0), 1.0).unwrap();
            let (t, v) = step(theta, y, accel, dt);
            (theta, y) = reflect_at_poles(t, v);
            energies.push(energy(theta, y));
        }
        energies
    }

    #[test]
    fn euler_cromer_bounds_energy_over_a_million_steps() {
        let e0 = energy(0.4, 0.0);
        let energies = oscillate(euler_cromer, 1_000_000);
        let window = |s: &[f64]| s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let early = window(&energies[..100_000]);
        let late = window(&energies[900_000..]);
        assert!(((late - early) / e0).abs() < 0.01, "envelope drift {}", (late - early) / e0);
        let worst = energies.iter().map(|e| ((e - e0) / e0).abs()).fold(0.0, f64::max);
        assert!(worst < 0.01, "{worst}");
    }

    #[test]
    fn forward_euler_gains_energy() {
        let energies = oscillate(forward_euler, 1_000_000);
        let peaks: Vec<f64> = energies
            .chunks(100_000)
            .map(|c| c.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        assert!(peaks.windows(2).all(|w| w[1] > w[0]), "{peaks:?}");
        assert!(peaks[peaks.len() - 1] > 1.01 * energy(0.4, 0.0));
    }

    #[test]
    fn equilibrium_and_near_pole_starts() {
        let p = shipped();
        assert_eq!(simulate_trajectory(0.0, &p).unwrap().down_indicator(), 0);
        assert_eq!(simulate_trajectory(1000.0 * PI / 1001.0, &p).unwrap().down_indicator(), 1);
        assert!(simulate_trajectory(FRAC_PI_2, &p).is_err());
        assert!(simulate_trajectory(-0.1, &p).is_err());
    }

    #[test]
    fn drive_table_matches_direct_integration() {
        let p = shipped();
        let drive = DriveTable::new(&p).unwrap();
        assert_eq!(drive.len(), p.step_count());
        for k in [1, 250, 313, 314, 500, 900] {
            let theta = k as f64 * PI / 1001.0;
            assert_eq!(simulate_trajectory(theta, &p).unwrap(), simulate_with_drive(theta, &p, &drive).unwrap());
        }
    }

    #[test]
    fn trace_ends_at_the_simulated_state() {
        let p = shipped();
        let theta = 0.9;
        let trace = trace_trajectory(theta, &p, 100).unwrap();
        let last = trace.last().unwrap();
        let outcome = simulate_trajectory(theta, &p).unwrap();
        assert_eq!((last.theta, last.y), (outcome.final_theta, outcome.final_y));
        assert_eq!(trace[0].theta, theta);
    }

    #[test]
    fn guard_rejects_coarse_step() {
        let mut p = shipped();
        let tau = qm_timescale(p.mu, p.reference_field().unwrap()).unwrap();
        p.dt = tau / 10.0;
        assert!(p.validate().is_err());
        p.dt = tau / 100.0;
        assert!(p.validate().is_ok());
    }
}
