//! Complete elliptic integrals K(m) and E(m) by the arithmetic-geometric mean.
//!
//! Parameter convention matches scipy: `m = k^2`, valid on `0 <= m < 1`.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

const MAX_ITER: usize = 64;

/// Returns `(K(m), E(m))`.
///
/// The AGM sequence `a_{n+1} = (a_n + b_n)/2`, `b_{n+1} = sqrt(a_n b_n)` starting at
/// `(1, sqrt(1-m))` converges quadratically; `K = pi / (2 a_inf)` and
/// `E = K (1 - sum 2^{n-1} c_n^2)` with `c_0^2 = m`, `c_{n+1} = (a_n - b_n)/2`.
pub fn elliptic_ke(m: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&m) {
        return Err(Error::domain(format!(
            "elliptic modulus m = {m} outside [0, 1)"
        )));
    }
    let mut a = 1.0_f64;
    let mut b = (1.0 - m).sqrt();
    let mut weight = 0.5_f64;
    let mut sum = weight * m;
    for _ in 0..MAX_ITER {
        let c = 0.5 * (a - b);
        if c.abs() <= f64::EPSILON * a {
            break;
        }
        let a_next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = a_next;
        weight *= 2.0;
        sum += weight * c * c;
    }
    let k = FRAC_PI_2 / a;
    Ok((k, k * (1.0 - sum)))
}
