//! Sample statistics, least-squares fits and the uniformity test.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StatsError {
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
}

/// Mean and standard error from the unbiased sample variance.
pub fn mean_stderr<R: Real>(xs: &[R]) -> (R, R) {
    let n = R::from_usize(xs.len()).unwrap();
    if xs.is_empty() {
        return (R::nan(), R::nan());
    }
    let mean = xs.iter().copied().sum::<R>() / n;
    if xs.len() < 2 {
        return (mean, R::zero());
    }
    let ss = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<R>();
    let var = ss / (n - R::one());
    (mean, (var / n).sqrt())
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct LinearFit<R> {
    pub slope: R,
    pub intercept: R,
    pub r2: R,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn linear_fit<R: Real>(x: &[R], y: &[R]) -> Result<LinearFit<R>, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::DegenerateInput("x and y differ in length"));
    }
    if x.len() < 3 {
        return Err(StatsError::DegenerateInput("fewer than 3 points"));
    }
    let n = R::from_usize(x.len()).unwrap();
    let mx = x.iter().copied().sum::<R>() / n;
    let my = y.iter().copied().sum::<R>() / n;
    let sxx = x.iter().map(|&a| (a - mx) * (a - mx)).sum::<R>();
    let sxy = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| (a - mx) * (b - my))
        .sum::<R>();
    let syy = y.iter().map(|&b| (b - my) * (b - my)).sum::<R>();
    if sxx <= R::zero() {
        return Err(StatsError::DegenerateInput("all x equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy <= R::zero() {
        R::one()
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Ok(LinearFit {
        slope,
        intercept,
        r2,
    })
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PowerLawFit<R> {
    pub exponent: R,
    pub constant: R,
    pub r2: R,
}

/// Least squares on `(ln x, ln y)`: `y ≈ constant · x^exponent`.
pub fn fit_power_law<R: Real>(points: &[(R, R)]) -> Result<PowerLawFit<R>, StatsError> {
    if points.len() < 3 {
        return Err(StatsError::DegenerateInput("fewer than 3 points"));
    }
    if points
        .iter()
        .any(|&(x, y)| !(x > R::zero() && y > R::zero()))
    {
        return Err(StatsError::DegenerateInput("non-positive value"));
    }
    let lx: Vec<R> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<R> = points.iter().map(|p| p.1.ln()).collect();
    let f = linear_fit(&lx, &ly)?;
    Ok(PowerLawFit {
        exponent: f.slope,
        constant: f.intercept.exp(),
        r2: f.r2,
    })
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson test of `counts` against the uniform distribution on its cells.
pub fn chi_square_uniform(counts: &[u64]) -> Result<ChiSquare, StatsError> {
    if counts.len() < 2 {
        return Err(StatsError::DegenerateInput("fewer than 2 cells"));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(StatsError::DegenerateInput("no observations"));
    }
    let expected = total as f64 / counts.len() as f64;
    let statistic = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dof = counts.len() - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: 1.0 - dist.cdf(statistic),
    })
}
