//! The sequence-averaged generating function `<Z_{hdc's on xi_N}(-u,-v,w)>`.
//!
//! Four independent routes are provided: the binomial double sum, the
//! `(1,1)` entry of the `N`-th power of the mean matrix `(B + R)/2`, the
//! second-order linear recurrence, and the closed form in terms of the two
//! nontrivial eigenvalues `nu_+-` of the mean matrix.

use nalgebra::DMatrix;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::coupling::CouplingPoint;
use crate::error::{Error, Result};
use crate::hypergeo::binomial;
use crate::linalg;
use crate::transfer::build_matrices;

/// Below this `|S|` the closed form switches to the confluent (double-root)
/// expression.
pub const CONFLUENT_THRESHOLD: f64 = 1e-9;

/// `S^2` values this close to zero are treated as exactly zero.
pub const S_SQUARED_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanMethod {
    Brute,
    DoubleSum,
    MatrixPower,
    Recurrence,
    ClosedForm,
    ClosedFormTwoTerm,
}

impl std::str::FromStr for MeanMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "brute" => Ok(Self::Brute),
            "double_sum" => Ok(Self::DoubleSum),
            "matrix_power" => Ok(Self::MatrixPower),
            "recurrence" => Ok(Self::Recurrence),
            "closed_form" | "closed_one" => Ok(Self::ClosedForm),
            "closed_form_two_term" | "closed_two" => Ok(Self::ClosedFormTwoTerm),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSeriesResult {
    #[serde(rename = "N")]
    pub n: usize,
    pub value: f64,
    pub method: MeanMethod,
}

/// Constants of the closed form; none depends on `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanClosedForm {
    pub z: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "C_tilde")]
    pub c_tilde: f64,
    pub nu_plus: f64,
    pub nu_minus: f64,
    #[serde(rename = "C_tilde_minus")]
    pub c_tilde_minus: f64,
}

/// `S^2 = (1 - w/2)^2 - (u + v)`, equal to `1 - (1-2z)w + w^2/4`.
pub fn s_squared(point: &CouplingPoint) -> f64 {
    (1.0 - point.w / 2.0).powi(2) - point.uv_sum()
}

pub fn closed_form_params(point: &CouplingPoint) -> Result<MeanClosedForm> {
    if point.w == 0.0 {
        return Err(Error::InvalidArgument("w = 0 leaves z undefined".into()));
    }
    let mut s2 = s_squared(point);
    if s2.abs() <= S_SQUARED_SNAP {
        s2 = 0.0;
    }
    if s2 < 0.0 {
        return Err(Error::OutsideRegionB { s_squared: s2 });
    }
    let CouplingPoint { u, v, w } = *point;
    let s = s2.sqrt();
    let half_w = w / 2.0;
    Ok(MeanClosedForm {
        z: -(u + v) / (2.0 * w),
        s,
        c_tilde: (s + 1.0 - (u + v + w) / 2.0) / 2.0,
        nu_plus: (1.0 + s + half_w) / 2.0,
        nu_minus: (1.0 - s + half_w) / 2.0,
        c_tilde_minus: (1.0 - s - (u + v + w) / 2.0) / 2.0,
    })
}

fn log_binomial(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `C(n, k)`, exact integer arithmetic up to `n = 60`, log-gamma beyond.
fn binomial_large(n: usize, k: usize) -> f64 {
    if n <= 60 {
        binomial(n, k)
    } else {
        log_binomial(n, k).exp()
    }
}

/// `1 + sum_{k=1}^{N-1} sum_{s=1}^{k ^ (N-k)} C(k,s) C(N-k-1,s-1) z^s (w/2)^(N-k)`.
pub fn mean_double_sum(n: usize, point: &CouplingPoint) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    if point.w == 0.0 {
        return Err(Error::InvalidArgument("w = 0 leaves z undefined".into()));
    }
    let z = -point.uv_sum() / (2.0 * point.w);
    let half_w = point.w / 2.0;
    let mut total = 1.0;
    for k in 1..n {
        let outer = half_w.powi((n - k) as i32);
        let inner: f64 = (1..=k.min(n - k))
            .map(|s| binomial_large(k, s) * binomial_large(n - k - 1, s - 1) * z.powi(s as i32))
            .sum();
        total += inner * outer;
    }
    Ok(total)
}

pub fn mean_matrix_power(n: usize, point: &CouplingPoint) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let mean = build_matrices(point).mean_matrix();
    let m = DMatrix::from_fn(3, 3, |i, j| mean[(i, j)]);
    Ok(linalg::matrix_power(&m, n)[(0, 0)])
}

/// `Z_N = (1 + w/2) Z_{N-1} - (w/2 + (u+v)/4) Z_{N-2}`, `Z_1 = 1`,
/// `Z_2 = 1 - (u+v)/4`.
pub fn mean_recurrence(n: usize, point: &CouplingPoint) -> Result<f64> {
    Ok(*mean_recurrence_table(n, point)?.last().unwrap())
}

/// `[Z_1, ..., Z_N]` from the recurrence.
pub fn mean_recurrence_table(n: usize, point: &CouplingPoint) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let trace = 1.0 + point.w / 2.0;
    let det = point.w / 2.0 + point.uv_sum() / 4.0;
    let mut out = vec![1.0, 1.0 - point.uv_sum() / 4.0];
    while out.len() < n {
        let len = out.len();
        out.push(trace * out[len - 1] - det * out[len - 2]);
    }
    out.truncate(n);
    Ok(out)
}

/// One-term mode: `(C~/S) nu_+^(N-1)`, the closed form as stated.
/// Two-term mode: `(C~ nu_+^(N-1) - C~_- nu_-^(N-1)) / S`, which keeps the
/// `nu_-` mode and reproduces the exact mean.
pub fn mean_closed_form(n: usize, point: &CouplingPoint, two_term: bool) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let cf = closed_form_params(point)?;
    let e = (n - 1) as i32;
    if cf.s < CONFLUENT_THRESHOLD {
        // Double root nu = (1 + w/2)/2: Z_N = (c1 + c2 (N-1)) nu^(N-1),
        // fitted to Z_1 = 1 and Z_2 = 1 - (u+v)/4.
        let nu = (1.0 + point.w / 2.0) / 2.0;
        let c2 = (1.0 - point.uv_sum() / 4.0) / nu - 1.0;
        return Ok((1.0 + c2 * (n - 1) as f64) * nu.powi(e));
    }
    Ok(if two_term {
        (cf.c_tilde * cf.nu_plus.powi(e) - cf.c_tilde_minus * cf.nu_minus.powi(e)) / cf.s
    } else {
        cf.c_tilde / cf.s * cf.nu_plus.powi(e)
    })
}

pub fn mean_by_method(n: usize, point: &CouplingPoint, method: MeanMethod) -> Result<MeanSeriesResult> {
    let value = match method {
        MeanMethod::Brute => crate::dimer::brute_force_mean(n, &[*point])?[0],
        MeanMethod::DoubleSum => mean_double_sum(n, point)?,
        MeanMethod::MatrixPower => mean_matrix_power(n, point)?,
        MeanMethod::Recurrence => mean_recurrence(n, point)?,
        MeanMethod::ClosedForm => mean_closed_form(n, point, false)?,
        MeanMethod::ClosedFormTwoTerm => mean_closed_form(n, point, true)?,
    };
    Ok(MeanSeriesResult { n, value, method })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanComparisonRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub brute: f64,
    pub double_sum: f64,
    pub matrix_power: f64,
    pub recurrence: f64,
    pub closed_one: f64,
    pub closed_two: f64,
}

/// Every route for `N = 1..=max_n`. The closed-form columns are NaN outside
/// region B.
pub fn mean_comparison(max_n: usize, point: &CouplingPoint) -> Result<Vec<MeanComparisonRow>> {
    (1..=max_n)
        .map(|n| {
            Ok(MeanComparisonRow {
                n,
                brute: crate::dimer::brute_force_mean(n, &[*point])?[0],
                double_sum: mean_double_sum(n, point)?,
                matrix_power: mean_matrix_power(n, point)?,
                recurrence: mean_recurrence(n, point)?,
                closed_one: mean_closed_form(n, point, false).unwrap_or(f64::NAN),
                closed_two: mean_closed_form(n, point, true).unwrap_or(f64::NAN),
            })
        })
        .collect()
}

pub fn mean_comparison_csv(rows: &[MeanComparisonRow]) -> String {
    let mut out = String::from("N,brute,double_sum,matrix_power,recurrence,closed_one,closed_two\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.n, r.brute, r.double_sum, r.matrix_power, r.recurrence, r.closed_one, r.closed_two
        ));
    }
    out
}
