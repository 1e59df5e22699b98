//! Gauss hypergeometric series and the identities used to sum the
//! sequence-averaged generating function.
//!
//! Terms are generated by the running-ratio recursion
//! `t_{r+1} = t_r (a+r)(b+r) / ((c+r)(r+1)) z` and accumulated in
//! double-double arithmetic. The terminating polynomials that appear here
//! cancel heavily for negative `z`, and plain `f64` accumulation loses about
//! three digits of the result.

use twofloat::TwoFloat;

use crate::error::{Error, Result};

const MAX_TERMS: usize = 100_000;

fn nonpositive_integer(x: f64) -> Option<usize> {
    (x <= 0.0 && x.fract() == 0.0 && x > -4.0e15).then(|| (-x) as usize)
}

/// `2F1(a, b; c; z)`. Terminates when `a` or `b` is a nonpositive integer;
/// otherwise the series is summed for `|z| < 1` until the terms stop
/// contributing.
pub fn hyp2f1_terminating(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let degree = match (nonpositive_integer(a), nonpositive_integer(b)) {
        (Some(da), Some(db)) => Some(da.min(db)),
        (Some(d), None) | (None, Some(d)) => Some(d),
        (None, None) => None,
    };
    if degree.is_none() && z.abs() >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "non-terminating 2F1 needs |z| < 1, got z = {z}"
        )));
    }
    let limit = degree.unwrap_or(MAX_TERMS);
    let mut term = TwoFloat::from(1.0);
    let mut sum = TwoFloat::from(1.0);
    for r in 0..limit {
        let r_f = r as f64;
        if c + r_f == 0.0 {
            return Err(Error::PoleInC);
        }
        term = term * TwoFloat::from(a + r_f) * TwoFloat::from(b + r_f)
            / (TwoFloat::from(c + r_f) * TwoFloat::from(r_f + 1.0))
            * TwoFloat::from(z);
        sum += term;
        if degree.is_none() && term.hi().abs() <= 1e-20 * sum.hi().abs() {
            return Ok(f64::from(sum));
        }
    }
    match degree {
        Some(_) => Ok(f64::from(sum)),
        None => Err(Error::NotConverged { terms: MAX_TERMS }),
    }
}

/// Exact binomial coefficient as `f64` (exact for the sizes used here).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as f64
}

/// `sum_{s=1}^{k ^ (N-k)} C(k,s) C(N-k-1,s-1) z^s` by direct summation.
pub fn binomial_sum(k: usize, n: usize, z: f64) -> f64 {
    assert!(k >= 1 && k < n, "need 1 <= k < N");
    (1..=k.min(n - k))
        .map(|s| binomial(k, s) * binomial(n - k - 1, s - 1) * z.powi(s as i32))
        .sum()
}

/// Hypergeometric form of [`binomial_sum`]: `z k 2F1(1-k, k+1-N; 2; z)`.
pub fn binomial_sum_hypergeometric(k: usize, n: usize, z: f64) -> Result<f64> {
    let (k_f, n_f) = (k as f64, n as f64);
    Ok(z * k_f * hyp2f1_terminating(1.0 - k_f, k_f + 1.0 - n_f, 2.0, z)?)
}

/// Residual `LHS - RHS` of the contiguous relation
/// `z(N-k) F(1-k, k+1-N; 2; z) = -(1-z) F(1-k, k+1-N; 1; z) + F(-k, k+1-N; 1; z)`.
pub fn check_contiguous(k: usize, n: usize, z: f64) -> Result<f64> {
    if k < 1 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "contiguous relation needs 1 <= k <= N-1, got k = {k}, N = {n}"
        )));
    }
    let (k_f, n_f) = (k as f64, n as f64);
    let b = k_f + 1.0 - n_f;
    let lhs = z * (n_f - k_f) * hyp2f1_terminating(1.0 - k_f, b, 2.0, z)?;
    let first = (1.0 - z) * hyp2f1_terminating(1.0 - k_f, b, 1.0, z)?;
    let second = hyp2f1_terminating(-k_f, b, 1.0, z)?;
    Ok(lhs + first - second)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct JacobiCheck {
    pub lhs_partial: f64,
    pub rhs: f64,
}

/// Partial sum of `sum_r (c)_r / r! 2F1(-r, r+a; c; z) t^r` against its
/// closed form
/// `(1/S) ((S + t - 1) / (2tz))^(c-1) ((S + t + 1)/2)^(c-a)`,
/// `S = sqrt(1 - 2(1-2z)t + t^2)`.
pub fn jacobi_gf_identity(a: f64, c: f64, z: f64, t: f64, r_max: usize) -> Result<JacobiCheck> {
    if c <= 0.0 {
        return Err(Error::InvalidArgument(format!("need c > 0, got {c}")));
    }
    let mut weight = 1.0; // (c)_r / r! * t^r
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    for r in 0..=r_max {
        let r_f = r as f64;
        last = weight * hyp2f1_terminating(-r_f, r_f + a, c, z)?;
        sum += last;
        weight *= (c + r_f) / (r_f + 1.0) * t;
    }
    if !(last.abs() < 1e-14 * sum.abs()) {
        return Err(Error::NotConverged { terms: r_max + 1 });
    }
    let s = (1.0 - 2.0 * (1.0 - 2.0 * z) * t + t * t).sqrt();
    let first = if c == 1.0 {
        1.0
    } else {
        ((s + t - 1.0) / (2.0 * t * z)).powf(c - 1.0)
    };
    let rhs = first * ((s + t + 1.0) / 2.0).powf(c - a) / s;
    Ok(JacobiCheck {
        lhs_partial: sum,
        rhs,
    })
}
