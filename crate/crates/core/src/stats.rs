//! Small sample-statistics helpers shared by the estimators.

/// Sample mean and standard error of the mean (n-1 variance).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n as f64 - 1.0) / n as f64).sqrt())
}

/// Ratio of means `mean(num) / mean(den)` with a delta-method standard error.
///
/// With `R = X̄ / Ȳ`, the linearisation `X - R·Y` has mean zero and
/// `Var(R) ≈ Var(X - R·Y) / (n · Ȳ²)`.
pub fn ratio_of_means(num: &[f64], den: &[f64]) -> (f64, f64) {
    assert_eq!(num.len(), den.len());
    let n = num.len() as f64;
    let xbar = num.iter().sum::<f64>() / n;
    let ybar = den.iter().sum::<f64>() / n;
    let r = xbar / ybar;
    let resid: Vec<f64> = num.iter().zip(den).map(|(x, y)| x - r * y).collect();
    let (_, se_resid) = mean_stderr(&resid);
    (r, se_resid / ybar.abs())
}

/// Binomial standard deviation of a proportion estimated from `trials` draws.
pub fn binomial_sigma(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}
