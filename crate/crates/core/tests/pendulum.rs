mod common;

use std::f64::consts::PI;

#[test]
fn subcritical_drive_settles_to_a_drive_periodic_orbit() {
    assert!(common::canonical_pendulum(0.9).params.drive_ratio() < 1.0);
    let spread = common::poincare_spread(0.9, 300, 50);
    assert!(spread < 1e-6, "{spread}");
}

#[test]
fn subcritical_neighbours_never_separate() {
    assert_eq!(common::separation_time(0.9, 0.2, PI / 1001.0, 400), None);
}

#[test]
fn supercritical_adjacent_angles_separate() {
    assert!(common::canonical_pendulum(1.5).params.drive_ratio() > 1.0);
    let t = common::separation_time(1.5, 0.2, PI / 1001.0, 400);
    assert!(t.is_some());
    assert!(common::separation_time(1.5, 0.2, 1e-9, 400).is_some());
}

#[test]
fn supercritical_section_is_not_periodic() {
    assert!(common::poincare_spread(1.5, 300, 50) > 1.0);
}
