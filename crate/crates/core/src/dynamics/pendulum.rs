//! Classical driven-damped pendulum `theta'' = -a y - b sin(theta) + c F(t)`,
//! used to validate the stepper and the chaos tooling on a well-known system.

use super::euler_cromer;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumParams {
    /// Damping per unit inertia.
    pub a: f64,
    /// Restoring strength (natural frequency squared).
    pub b: f64,
    /// Drive amplitude.
    pub c: f64,
    /// Angular frequency of the sinusoidal drive `F(t) = cos(omega t)`.
    pub drive_omega: f64,
}

impl PendulumParams {
    /// Drive-to-restoring ratio `c/b`; chaos needs it above one.
    pub fn drive_ratio(&self) -> f64 {
        self.c / self.b
    }

    pub fn drive_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.drive_omega
    }

    pub fn drive(&self, t: f64) -> f64 {
        (self.drive_omega * t).cos()
    }
}

/// `(dtheta/dt, dy/dt)` for an arbitrary drive `force(t)`.
pub fn pendulum_rhs(theta: f64, y: f64, t: f64, a: f64, b: f64, c: f64, force: impl Fn(f64) -> f64) -> (f64, f64) {
    (y, -a * y - b * theta.sin() + c * force(t))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumState {
    /// Unwrapped angle.
    pub theta: f64,
    pub y: f64,
    pub t: f64,
}

/// Euler-Cromer integration of the sinusoidally driven pendulum.
pub struct Pendulum {
    pub params: PendulumParams,
    pub dt: f64,
}

impl Pendulum {
    pub fn new(params: PendulumParams, dt: f64) -> Self {
        Self { params, dt }
    }

    pub fn step(&self, s: PendulumState) -> PendulumState {
        let p = &self.params;
        let (_, accel) = pendulum_rhs(s.theta, s.y, s.t, p.a, p.b, p.c, |t| p.drive(t));
        let (theta, y) = euler_cromer(s.theta, s.y, accel, self.dt);
        PendulumState { theta, y, t: s.t + self.dt }
    }

    /// Runs `steps` steps and returns the final state.
    pub fn run(&self, mut s: PendulumState, steps: usize) -> PendulumState {
        for _ in 0..steps {
            s = self.step(s);
        }
        s
    }

    /// Stroboscopic samples taken once per drive period, `periods` times.
    /// `dt` must divide the drive period evenly for exact phase locking.
    pub fn poincare_section(&self, mut s: PendulumState, periods: usize) -> Vec<PendulumState> {
        let per = (self.params.drive_period() / self.dt).round() as usize;
        let mut out = Vec::with_capacity(periods);
        for _ in 0..periods {
            s = self.run(s, per);
            out.push(s);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undriven_small_angle_is_damped_oscillator() {
        let (a, b) = (0.1, 4.0);
        let p = Pendulum::new(PendulumParams { a, b, c: 0.0, drive_omega: 1.0 }, 1e-4);
        let theta0 = 1e-3;
        let s0 = PendulumState { theta: theta0, y: 0.0, t: 0.0 };
        // Linearised solution: theta0 e^{-a t/2} (cos w t + (a/2w) sin w t), w = sqrt(b - a^2/4)
        let w = (b - a * a / 4.0).sqrt();
        let t_end = 5.0;
        let s = p.run(s0, (t_end / 1e-4) as usize);
        let exact = theta0 * (-a * t_end / 2.0).exp() * ((w * t_end).cos() + a / (2.0 * w) * (w * t_end).sin());
        assert!((s.theta - exact).abs() < 2e-5 * theta0.max(1.0) * 1e-0, "{} vs {}", s.theta, exact);
    }

    #[test]
    fn rhs_formula() {
        let (d, a) = pendulum_rhs(0.5, 2.0, 1.0, 0.3, 1.5, 0.7, |t| t * 2.0);
        assert_eq!(d, 2.0);
        assert!((a - (-0.6 - 1.5 * 0.5_f64.sin() + 1.4)).abs() < 1e-15);
    }
}
