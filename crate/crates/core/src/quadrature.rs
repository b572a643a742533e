//! Composite Simpson quadrature on uniform grids, plus small numeric helpers.

/// Integral of uniformly sampled `values` with spacing `h`.
/// Requires an even number of intervals (odd number of samples ≥ 3).
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    assert!(n >= 3 && n % 2 == 1, "simpson needs an odd sample count >= 3");
    let mut s = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

/// sin(x)/x with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        // series keeps full double precision below the threshold
        1.0 - x * x / 6.0 + x * x * x * x / 120.0
    } else {
        x.sin() / x
    }
}

/// Least-squares line y ≈ slope·x + intercept.
/// Returns (slope, intercept, standard error of the slope).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert!(x.len() == y.len() && x.len() >= 2, "linear_fit needs >= 2 points");
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|&v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(&u, &v)| (u - mx) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if x.len() > 2 {
        let ss_res: f64 = x
            .iter()
            .zip(y)
            .map(|(&u, &v)| {
                let r = v - slope * u - intercept;
                r * r
            })
            .sum();
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, stderr)
}
