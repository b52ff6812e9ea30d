mod common;

use std::time::Instant;

use spinchaos::magnetics::{LoopGeometry, MU_0};

fn coil() -> LoopGeometry {
    LoopGeometry::new(0.05, 2.5).with_center(0.01, -0.02)
}

#[test]
fn matches_biot_savart_at_random_points() {
    let c = coil();
    let pts = common::off_wire_points(&c, 100, 0.05, 11);
    let started = Instant::now();
    let worst = common::worst_oracle_error(&c, &pts, 100_000);
    assert!(worst < 1e-6, "worst relative error {worst:e}");
    assert!(started.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn off_axis_reference_point() {
    let c = LoopGeometry::new(0.05, 1.0);
    let (x, z) = (0.025, 0.025);
    let got = c.field(x, z).unwrap();
    let want = common::biot_savart(&c, x, z, 100_000);
    assert!((got.bx - want.bx).hypot(got.bz - want.bz) < 1e-6 * want.magnitude());
}

#[test]
fn on_axis_closed_form() {
    let c = coil();
    for k in 0..20 {
        let d = -0.3 + 0.6 * k as f64 / 19.0;
        let b = c.field(c.center_x, c.center_z + d).unwrap();
        let r = c.radius;
        let exact = MU_0 * c.current * r * r / (2.0 * (r * r + d * d).powf(1.5));
        assert!(((b.bz - exact) / b.bz).abs() < 1e-10, "d = {d}");
        assert_eq!(b.bx, 0.0);
    }
}

#[test]
fn divergence_converges_at_second_order() {
    let c = LoopGeometry::new(0.05, 1.0);
    let r = c.radius;
    let (x, z) = (r / 2.0, r);
    let residuals: Vec<f64> = [10.0, 20.0, 40.0, 80.0]
        .iter()
        .map(|n| c.divergence_residual(x, z, r / n).unwrap())
        .collect();
    for w in residuals.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.6..4.4).contains(&ratio), "ratio {ratio}");
    }
    let b = c.field(x, z).unwrap().magnitude();
    assert!(c.divergence_residual(x, z, r / 1e4).unwrap() < 1e-6 * b / r);
}
