//! Central finite-difference gradient checking.

/// Relative error `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// `(f(x + h) - f(x - h)) / 2h` for coordinate `index` of `x`.
pub fn central_difference<F>(x: &mut [f64], index: usize, step: f64, mut f: F) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    let orig = x[index];
    x[index] = orig + step;
    let plus = f(x);
    x[index] = orig - step;
    let minus = f(x);
    x[index] = orig;
    (plus - minus) / (2.0 * step)
}
