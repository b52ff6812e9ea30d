use super::Curve;
use crate::error::{Error, Result};

/// Moving average over the centre point and `half_width` neighbours per side.
///
/// The input is extended with `half_width` zeros below the first sample and
/// `half_width` ones above the last, matching the known boundary values
/// `P(0) = 0` and `P(pi) = 1`. Output keeps the input abscissa.
pub fn convolve_nas(curve: &Curve, half_width: usize) -> Result<Curve> {
    if !curve.is_uniform() {
        return Err(Error::domain("nearest-neighbour smoothing needs uniform spacing"));
    }
    if half_width == 0 {
        return Ok(curve.clone());
    }
    let n = curve.len();
    let mut padded = Vec::with_capacity(n + 2 * half_width);
    padded.extend(std::iter::repeat_n(0.0, half_width));
    padded.extend_from_slice(curve.ys());
    padded.extend(std::iter::repeat_n(1.0, half_width));

    let window = 2 * half_width + 1;
    let norm = window as f64;
    let ys = padded
        .windows(window)
        .map(|w| w.iter().sum::<f64>() / norm)
        .collect();
    Ok(curve.with_ys(ys))
}
