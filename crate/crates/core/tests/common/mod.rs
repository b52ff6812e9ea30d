#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spinchaos::dynamics::pendulum::{Pendulum, PendulumParams, PendulumState};
use spinchaos::dynamics::{euler_cromer, forward_euler, reflect_at_poles, spin_torque};
use spinchaos::magnetics::{FieldSample, LoopGeometry, MU_0};

/// Biot-Savart sum over `n` equal arc elements of the loop (midpoint rule,
/// spectrally accurate for the periodic integrand away from the wire).
pub fn biot_savart(coil: &LoopGeometry, x: f64, z: f64, n: usize) -> FieldSample {
    let (px, pz) = (x - coil.center_x, z - coil.center_z);
    let dphi = TAU / n as f64;
    let (mut bx, mut bz) = (0.0, 0.0);
    for k in 0..n {
        let phi = (k as f64 + 0.5) * dphi;
        let (s, c) = phi.sin_cos();
        let (wx, wy) = (coil.radius * c, coil.radius * s);
        let (dlx, dly) = (-coil.radius * s * dphi, coil.radius * c * dphi);
        let (rx, ry, rz) = (px - wx, -wy, pz);
        let r3 = (rx * rx + ry * ry + rz * rz).powf(1.5);
        // dl x r with dl = (dlx, dly, 0)
        bx += dly * rz / r3;
        bz += (dlx * ry - dly * rx) / r3;
    }
    let k = MU_0 * coil.current / (4.0 * PI);
    FieldSample::new(k * bx, k * bz)
}

/// Random points in a box around the loop, at least `min_gap * R` from the wire.
pub fn off_wire_points(coil: &LoopGeometry, count: usize, min_gap: f64, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = coil.radius;
    let mut pts = Vec::with_capacity(count);
    while pts.len() < count {
        let x = coil.center_x + rng.gen_range(-3.0 * r..3.0 * r);
        let z = coil.center_z + rng.gen_range(-2.0 * r..2.0 * r);
        if coil.wire_distance(x, z) >= min_gap * r {
            pts.push((x, z));
        }
    }
    pts
}

/// Largest `|B_loop - B_oracle| / |B_oracle|` over the points.
pub fn worst_oracle_error(coil: &LoopGeometry, pts: &[(f64, f64)], segments: usize) -> f64 {
    pts.iter()
        .map(|&(x, z)| {
            let got = coil.field(x, z).unwrap();
            let want = biot_savart(coil, x, z, segments);
            (got.bx - want.bx).hypot(got.bz - want.bz) / want.magnitude()
        })
        .fold(0.0, f64::max)
}

/// Energy of the unit spin model under constant `Bz = 1`, below `pi/2`.
pub fn spin_energy(theta: f64, y: f64) -> f64 {
    0.5 * y * y + theta / 2.0 - (4.0 * theta).sin() / 8.0
}

/// Energy after each step of an undamped oscillation started at rest at `theta0`.
pub fn oscillation_energies(step: fn(f64, f64, f64, f64) -> (f64, f64), theta0: f64, dt: f64, steps: usize) -> Vec<f64> {
    let (mut theta, mut y) = (theta0, 0.0);
    let field = FieldSample::new(0.0, 1.0);
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let accel = spin_torque(theta, field, 1.0).unwrap();
        let (t, v) = step(theta, y, accel, dt);
        (theta, y) = reflect_at_poles(t, v);
        out.push(spin_energy(theta, y));
    }
    out
}

pub fn euler_cromer_step(theta: f64, y: f64, accel: f64, dt: f64) -> (f64, f64) {
    euler_cromer(theta, y, accel, dt)
}

pub fn forward_euler_step(theta: f64, y: f64, accel: f64, dt: f64) -> (f64, f64) {
    forward_euler(theta, y, accel, dt)
}

/// Peak energy in each of `chunks` equal windows.
pub fn envelope(energies: &[f64], chunks: usize) -> Vec<f64> {
    energies
        .chunks(energies.len() / chunks)
        .map(|c| c.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

pub fn canonical_pendulum(c: f64) -> Pendulum {
    let params = PendulumParams { a: 0.5, b: 1.0, c, drive_omega: 2.0 / 3.0 };
    Pendulum::new(params, params.drive_period() / 1000.0)
}

fn wrap(theta: f64) -> f64 {
    (theta + PI).rem_euclid(TAU) - PI
}

/// Spread of the stroboscopic samples after a transient; zero for a drive-periodic orbit.
pub fn poincare_spread(c: f64, transient: usize, samples: usize) -> f64 {
    let p = canonical_pendulum(c);
    let start = PendulumState { theta: 0.2, y: 0.0, t: 0.0 };
    let settled = p.poincare_section(start, transient).pop().unwrap();
    let section = p.poincare_section(settled, samples);
    let first = section[0];
    section
        .iter()
        .map(|s| wrap(s.theta - first.theta).abs().max((s.y - first.y).abs()))
        .fold(0.0, f64::max)
}

/// Drive periods until two starts `delta` apart differ by more than pi, if within `max_periods`.
pub fn separation_time(c: f64, theta0: f64, delta: f64, max_periods: usize) -> Option<usize> {
    let p = canonical_pendulum(c);
    let mut a = PendulumState { theta: theta0, y: 0.0, t: 0.0 };
    let mut b = PendulumState { theta: theta0 + delta, y: 0.0, t: 0.0 };
    for period in 1..=max_periods {
        a = p.poincare_section(a, 1)[0];
        b = p.poincare_section(b, 1)[0];
        if (a.theta - b.theta).abs() > PI {
            return Some(period);
        }
    }
    None
}

/// Koch curve on the unit segment after `depth` substitutions.
pub fn koch(depth: u32) -> Vec<(f64, f64)> {
    let mut pts = vec![(0.0, 0.0), (1.0, 0.0)];
    let (c, s) = (0.5, 3f64.sqrt() / 2.0);
    for _ in 0..depth {
        let mut next = Vec::with_capacity(4 * pts.len());
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let d = ((b.0 - a.0) / 3.0, (b.1 - a.1) / 3.0);
            let p1 = (a.0 + d.0, a.1 + d.1);
            let p3 = (a.0 + 2.0 * d.0, a.1 + 2.0 * d.1);
            let peak = (p1.0 + c * d.0 - s * d.1, p1.1 + s * d.0 + c * d.1);
            next.extend([a, p1, peak, p3]);
        }
        next.push(*pts.last().unwrap());
        pts = next;
    }
    pts
}
