use serde::Serialize;

use super::special::f_upper_tail;
use super::AnalysisError;
use crate::scalar::Scalar;
use crate::session::PredictionEvent;

/// Ordinary least squares of `y` on a single predictor, with its ANOVA F-test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionResult<S> {
    pub n: usize,
    pub slope: S,
    pub intercept: S,
    /// `slope * sd(x) / sd(y)`; `None` when `y` has no variance.
    pub standardized_beta: Option<S>,
    pub r_squared: S,
    pub adjusted_r_squared: S,
    /// `None` when `y` has no variance (the test is undefined).
    pub f_stat: Option<S>,
    /// Numerator and denominator degrees of freedom, `(1, n - 2)`.
    pub df: (usize, usize),
    pub t_stat: Option<S>,
    pub p_value: Option<S>,
}

impl<S: Scalar> RegressionResult<S> {
    /// True when `y` was constant and the test statistics are undefined.
    pub fn degenerate_y(&self) -> bool {
        self.f_stat.is_none()
    }
}

/// Fits `y = intercept + slope * x`. Needs at least three points and some
/// variance in `x`.
pub fn simple_regression<S: Scalar>(xs: &[S], ys: &[S]) -> Result<RegressionResult<S>, AnalysisError> {
    assert_eq!(xs.len(), ys.len(), "x and y lengths differ");
    let n = xs.len();
    if n < 3 {
        return Err(AnalysisError::InsufficientData { needed: 3, found: n });
    }
    let nf = S::from_count(n);
    let mean_x = xs.iter().fold(S::zero(), |a, &x| a + x) / nf;
    let mean_y = ys.iter().fold(S::zero(), |a, &y| a + y) / nf;
    let (mut sxx, mut sxy, mut syy) = (S::zero(), S::zero(), S::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx = sxx + dx * dx;
        sxy = sxy + dx * dy;
        syy = syy + dy * dy;
    }
    if sxx <= S::zero() {
        return Err(AnalysisError::DegenerateX);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let df_resid = n - 2;

    if syy <= S::zero() {
        return Ok(RegressionResult {
            n,
            slope,
            intercept,
            standardized_beta: None,
            r_squared: S::zero(),
            adjusted_r_squared: S::zero(),
            f_stat: None,
            df: (1, df_resid),
            t_stat: None,
            p_value: None,
        });
    }

    let sse = xs.iter().zip(ys).fold(S::zero(), |acc, (&x, &y)| {
        let r = y - (intercept + slope * x);
        acc + r * r
    });
    let ssr = (syy - sse).max(S::zero());
    let r_squared = ssr / syy;
    let one = S::one();
    let adjusted_r_squared = one - (one - r_squared) * S::from_count(n - 1) / S::from_count(df_resid);
    let f_stat = if sse > S::zero() {
        ssr / (sse / S::from_count(df_resid))
    } else {
        S::infinity()
    };
    let t_stat = f_stat.sqrt() * slope.signum();
    let p_value = f_upper_tail(f_stat, one, S::from_count(df_resid));
    let standardized_beta = slope * (sxx / syy).sqrt();

    Ok(RegressionResult {
        n,
        slope,
        intercept,
        standardized_beta: Some(standardized_beta),
        r_squared,
        adjusted_r_squared,
        f_stat: Some(f_stat),
        df: (1, df_resid),
        t_stat: Some(t_stat),
        p_value: Some(p_value),
    })
}

/// Regresses confidence on correctness (1 = correct, 0 = error).
///
/// No-recognition events carry no confidence and are left out.
pub fn confidence_regression<S: Scalar>(events: &[PredictionEvent]) -> Result<RegressionResult<S>, AnalysisError> {
    let (xs, ys): (Vec<S>, Vec<S>) = events
        .iter()
        .filter_map(|e| {
            e.confidence.map(|c| {
                let x = if e.correct { S::one() } else { S::zero() };
                (x, S::lit(c as f64))
            })
        })
        .unzip();
    simple_regression(&xs, &ys)
}
