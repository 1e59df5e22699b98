//! Summed propagator in geometric-series form, the renormalized bare
//! coupling `gamma'`, the canonical scaling map, the discrete volume and the
//! extremum analysis of the inverse mean on the `u = v` slice.
//!
//! `ln Z` in the volume observable is taken to be the logarithm of the
//! geometric-series value returned by [`zbar_geometric`].

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;

use crate::coupling::CouplingPoint;
use crate::error::{Error, Result};
use crate::lyapunov::moment_exponents;
use crate::mean::closed_form_params;
use crate::transfer::region_membership;

/// Exponents this close to zero count as zero (divergent).
pub const EXPONENT_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesEvaluation {
    pub gamma: f64,
    pub gamma_prime: f64,
    /// `(ln 2 - gamma) + ln nu2 - 3 ln nu1`
    pub exponent: f64,
    /// `(nu1 / C~) / (1 - e^exponent)`, `+inf` when divergent.
    pub value: f64,
    /// Same series with the omitted factor `S` restored.
    pub value_with_s: f64,
    pub convergent: bool,
    pub nu1: f64,
    pub nu2: f64,
    pub c_tilde: f64,
    pub s: f64,
}

fn critical_log_ratio() -> f64 {
    static CACHE: OnceLock<f64> = OnceLock::new();
    *CACHE.get_or_init(|| {
        let m = moment_exponents(&CouplingPoint::critical())
            .expect("moment exponents exist at the critical point");
        m.l2 - 3.0 * m.l1
    })
}

/// `gamma' = ln 2 + (ln nu2 - 3 ln nu1)` at the critical point, the value
/// that puts the series exponent at exactly zero there.
pub fn gamma_prime() -> f64 {
    std::f64::consts::LN_2 + critical_log_ratio()
}

/// `ln 2 + (3 ln nu1 - ln nu2)` at the critical point. With this sign the
/// exponent at the critical point is `2 (ln nu2 - 3 ln nu1) > 0`.
pub fn gamma_prime_opposite_sign() -> f64 {
    std::f64::consts::LN_2 - critical_log_ratio()
}

/// Needs the point in region B (for `C~`).
pub fn zbar_geometric(point: &CouplingPoint, gamma: f64) -> Result<SeriesEvaluation> {
    let cf = closed_form_params(point)?;
    let m = moment_exponents(point)?;
    let mut exponent = (std::f64::consts::LN_2 - gamma) + (m.l2 - 3.0 * m.l1);
    if exponent.abs() < EXPONENT_SNAP {
        exponent = 0.0;
    }
    let convergent = exponent < 0.0;
    let value = if convergent {
        (m.nu1 / cf.c_tilde) / (1.0 - exponent.exp())
    } else {
        f64::INFINITY
    };
    Ok(SeriesEvaluation {
        gamma,
        gamma_prime: gamma_prime(),
        exponent,
        value,
        value_with_s: if convergent { cf.s * value } else { f64::INFINITY },
        convergent,
        nu1: m.nu1,
        nu2: m.nu2,
        c_tilde: cf.c_tilde,
        s: cf.s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeConfig {
    pub b1: f64,
    pub b2: f64,
    /// Relative finite-difference step.
    pub h: f64,
}

impl Default for VolumeConfig {
    fn default() -> Self {
        VolumeConfig { b1: 1.0, b2: 1.0, h: 1e-5 }
    }
}

impl VolumeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 1e-8 && self.h < 1e-2) {
            return Err(Error::InvalidArgument(format!(
                "step h must lie in (1e-8, 1e-2), got {}",
                self.h
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingInput {
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    pub a: f64,
}

pub fn scaling_map(input: &ScalingInput, cfg: &VolumeConfig) -> Result<CouplingPoint> {
    if !(input.a > 0.0) {
        return Err(Error::InvalidArgument(format!("need a > 0, got {}", input.a)));
    }
    let ScalingInput { x, y, lambda, a } = *input;
    let a2 = a * a;
    let a3 = a2 * a;
    let point = CouplingPoint::new(
        2.0 / 9.0 * (-2.0 * a2 * x - 2.0 * a3 * cfg.b1 * lambda).exp(),
        2.0 / 9.0 * (-2.0 * a2 * y - 2.0 * a3 * cfg.b1 * lambda).exp(),
        2.0 / 3.0 * (-a3 * cfg.b2 * lambda).exp(),
    );
    let open = |t: f64| t > 0.0 && t < 1.0;
    if !(open(point.u) && open(point.v) && open(point.w)) {
        return Err(Error::OutsideUnitCube { u: point.u, v: point.v, w: point.w });
    }
    Ok(point)
}

fn ln_zbar(point: &CouplingPoint, gamma: f64) -> Result<f64> {
    let s = zbar_geometric(point, gamma)?;
    if !s.convergent {
        return Err(Error::StencilDivergence);
    }
    Ok(s.value.ln())
}

/// `(2 b1 u d_u + 2 b1 v d_v + b2 w d_w) ln zbar`. Each `x d_x` is a
/// central difference in `ln x` with step `h`.
pub fn discrete_volume(point: &CouplingPoint, gamma: f64, cfg: &VolumeConfig) -> Result<f64> {
    cfg.validate()?;
    ln_zbar(point, gamma)?;
    let h = cfg.h;
    let euler = |scale: fn(&CouplingPoint, f64) -> CouplingPoint| -> Result<f64> {
        let plus = ln_zbar(&scale(point, 1.0 + h), gamma)?;
        let minus = ln_zbar(&scale(point, 1.0 - h), gamma)?;
        Ok((plus - minus) / (2.0 * h))
    };
    let du = euler(|p, f| CouplingPoint::new(p.u * f, p.v, p.w))?;
    let dv = euler(|p, f| CouplingPoint::new(p.u, p.v * f, p.w))?;
    let dw = euler(|p, f| CouplingPoint::new(p.u, p.v, p.w * f))?;
    Ok(2.0 * cfg.b1 * du + 2.0 * cfg.b1 * dv + cfg.b2 * dw)
}

fn appendix_s_squared(u: f64, w: f64) -> f64 {
    (1.0 - w / 2.0).powi(2) - 2.0 * u
}

/// `D1 = (1 + w/2)^(1-N)`, `D2 = S (1 + S/(1 + w/2))^(1-N)` with
/// `S^2 = (1 - w/2)^2 - 2u`.
pub fn d_factors(n: usize, u: f64, w: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let s2 = appendix_s_squared(u, w);
    if !(s2 > 0.0) {
        return Err(Error::OutsideRegionB { s_squared: s2 });
    }
    let s = s2.sqrt();
    let e = 1.0 - n as f64;
    let c = 1.0 + w / 2.0;
    Ok((c.powf(e), s * (1.0 + s / c).powf(e)))
}

/// `D1 D2`, zero where `S^2 <= 0`.
pub fn d_product(n: usize, u: f64, w: f64) -> f64 {
    d_factors(n, u, w).map(|(d1, d2)| d1 * d2).unwrap_or(0.0)
}

/// Maximizer of `u -> D2(u, w)`.
pub fn appendix_ustar(n: usize, w: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("u* needs N >= 3, got {n}")));
    }
    let nf = n as f64;
    let num = 12.0 - 16.0 * nf + 4.0 * nf * nf - 20.0 * w + 16.0 * nf * w - 4.0 * nf * nf * w
        + 3.0 * w * w
        - 4.0 * nf * w * w
        + nf * nf * w * w;
    Ok(num / (8.0 * (nf - 2.0).powi(2)))
}

/// Both roots of `u*(N, w) = 2/9`, smaller first.
pub fn appendix_w_roots(n: usize) -> Result<(f64, f64)> {
    if n < 4 {
        return Err(Error::InvalidArgument(format!("w1 needs N >= 4, got {n}")));
    }
    let nf = n as f64;
    let root = (48.0 - 64.0 * nf + 32.0 * nf.powi(2) - 8.0 * nf.powi(3) + nf.powi(4)).sqrt();
    let base = 15.0 - 12.0 * nf + 3.0 * nf * nf;
    let den = 3.0 * (3.0 - 4.0 * nf + nf * nf);
    Ok((2.0 * (base - 2.0 * root) / den, 2.0 * (base + 2.0 * root) / den))
}

pub fn appendix_w1(n: usize) -> Result<f64> {
    Ok(appendix_w_roots(n)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthCheck {
    #[serde(rename = "N")]
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_dev: f64,
}

/// `D1(w1) D2(2/9, w1)` against `(3/4)^(N-2) / (e N)`.
pub fn appendix_growth_check(n: usize) -> Result<GrowthCheck> {
    let w1 = appendix_w1(n)?;
    let (d1, d2) = d_factors(n, 2.0 / 9.0, w1)?;
    let lhs = d1 * d2;
    let rhs = 0.75f64.powi(n as i32 - 2) / (std::f64::consts::E * n as f64);
    Ok(GrowthCheck { n, lhs, rhs, rel_dev: (lhs - rhs).abs() / rhs.abs() })
}

/// Golden-section search for the maximizer of a unimodal `f` on `[lo, hi]`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    (lo + hi) / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppendixReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub w1: f64,
    /// `(w, u*(N, w))` samples on `[0, 2/3]`.
    pub ustar_at: Vec<(f64, f64)>,
    pub growth_lhs: f64,
    pub growth_rhs: f64,
    pub growth_rel_dev: f64,
    /// `(u, w)` maximizing `D1 D2` on `[0, 2/9] x [0, 2/3]`.
    pub argmax: (f64, f64),
    pub max_value: f64,
    pub grid_argmax: (f64, f64),
    /// Grid spacings in `u` and `w`.
    pub cell: (f64, f64),
    pub distance_to_w1_point: f64,
    pub distance_to_critical: f64,
}

const U_MAX: f64 = 2.0 / 9.0;
const W_MAX: f64 = 2.0 / 3.0;

/// Grid argmax of `D1 D2` followed by cyclic golden-section refinement
/// inside the neighbouring cells.
pub fn maxima_scan(n: usize, grid_u: usize, grid_w: usize) -> Result<AppendixReport> {
    if grid_u < 64 || grid_w < 64 {
        return Err(Error::InvalidArgument(format!(
            "grids must have at least 64 points, got {grid_u} x {grid_w}"
        )));
    }
    let growth = appendix_growth_check(n)?;
    let w1 = appendix_w1(n)?;
    let du = U_MAX / (grid_u - 1) as f64;
    let dw = W_MAX / (grid_w - 1) as f64;

    let (best_idx, _) = (0..grid_u * grid_w)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / grid_w, idx % grid_w);
            (idx, d_product(n, i as f64 * du, j as f64 * dw))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    let (gi, gj) = (best_idx / grid_w, best_idx % grid_w);
    let grid_argmax = (gi as f64 * du, gj as f64 * dw);

    let u_lo = (grid_argmax.0 - du).max(0.0);
    let u_hi = (grid_argmax.0 + du).min(U_MAX);
    let w_lo = (grid_argmax.1 - dw).max(0.0);
    let w_hi = (grid_argmax.1 + dw).min(W_MAX);
    let (mut u, mut w) = grid_argmax;
    for _ in 0..20 {
        w = golden_section_max(|t| d_product(n, u, t), w_lo, w_hi, 1e-13);
        u = golden_section_max(|t| d_product(n, t, w), u_lo, u_hi, 1e-13);
    }
    if d_product(n, u, w) < d_product(n, grid_argmax.0, grid_argmax.1) {
        (u, w) = grid_argmax;
    }

    let ustar_at = (0..=8)
        .map(|k| {
            let wk = W_MAX * k as f64 / 8.0;
            Ok((wk, appendix_ustar(n, wk)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AppendixReport {
        n,
        w1,
        ustar_at,
        growth_lhs: growth.lhs,
        growth_rhs: growth.rhs,
        growth_rel_dev: growth.rel_dev,
        argmax: (u, w),
        max_value: d_product(n, u, w),
        grid_argmax,
        cell: (du, dw),
        distance_to_w1_point: (u - U_MAX).hypot(w - w1),
        distance_to_critical: (u - U_MAX).hypot(w - W_MAX),
    })
}

pub const FIG3_WS: [f64; 7] = [0.5, 0.55, 0.6, 0.65, 2.0 / 3.0, 0.7, 0.75];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub w: f64,
    pub u: f64,
    pub value: f64,
}

/// `2^(N-1) D1(w) D2(u, w)` for `u` on `[0, 0.5]`, where defined.
pub fn fig3_curves(n: usize, points: usize) -> Result<Vec<CurvePoint>> {
    if points < 2 {
        return Err(Error::InvalidArgument("need at least two u samples".into()));
    }
    let scale = 2f64.powi(n as i32 - 1);
    let mut out = Vec::new();
    for &w in &FIG3_WS {
        for k in 0..points {
            let u = 0.5 * k as f64 / (points - 1) as f64;
            if let Ok((d1, d2)) = d_factors(n, u, w) {
                out.push(CurvePoint { w, u, value: scale * d1 * d2 });
            }
        }
    }
    Ok(out)
}

pub fn fig3_csv(curves: &[CurvePoint]) -> String {
    let mut out = String::from("w,u,value\n");
    for c in curves {
        out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", c.w, c.u, c.value));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZbarCell {
    pub u: f64,
    pub w: f64,
    pub exponent: f64,
    pub value: f64,
    pub convergent: bool,
}

/// `zbar_geometric` on cell midpoints of the `u = v` slice
/// `(0, 1/2) x (0, 1)`; cells outside region B are skipped.
pub fn zbar_grid(gamma: f64, steps: usize) -> Vec<ZbarCell> {
    (0..steps * steps)
        .into_par_iter()
        .filter_map(|idx| {
            let u = 0.5 * ((idx / steps) as f64 + 0.5) / steps as f64;
            let w = ((idx % steps) as f64 + 0.5) / steps as f64;
            zbar_geometric(&CouplingPoint::new(u, u, w), gamma)
                .ok()
                .map(|s| ZbarCell { u, w, exponent: s.exponent, value: s.value, convergent: s.convergent })
        })
        .collect()
}

pub fn zbar_grid_csv(cells: &[ZbarCell]) -> String {
    let mut out = String::from("u,w,exponent,value,convergent\n");
    for c in cells {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            c.u, c.w, c.exponent, c.value, c.convergent
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityCell {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub beta2: f64,
    pub beta2_larger: f64,
    pub holds: bool,
}

/// Compares `beta2_moment(u, v, w)` with `beta2_moment(u + d, v + d, w)` on
/// a coarse grid, keeping cells where both points lie in A, B and C.
pub fn beta2_monotonicity_probe(steps: usize) -> Vec<MonotonicityCell> {
    let d = 0.25 / steps as f64;
    let in_abc = |p: &CouplingPoint| {
        region_membership(p).map(|r| r.in_a && r.in_b && r.in_c).unwrap_or(false)
    };
    (0..steps * steps * steps)
        .into_par_iter()
        .filter_map(|idx| {
            let i = idx / (steps * steps);
            let j = (idx / steps) % steps;
            let k = idx % steps;
            let lower = CouplingPoint::new((i as f64 + 0.5) * d, (j as f64 + 0.5) * d, (k as f64 + 0.5) / steps as f64);
            let upper = CouplingPoint::new(lower.u + d, lower.v + d, lower.w);
            if !(in_abc(&lower) && in_abc(&upper)) {
                return None;
            }
            let b_lo = moment_exponents(&lower).ok()?.beta2_moment;
            let b_hi = moment_exponents(&upper).ok()?.beta2_moment;
            Some(MonotonicityCell {
                u: lower.u,
                v: lower.v,
                w: lower.w,
                beta2: b_lo,
                beta2_larger: b_hi,
                holds: b_lo < b_hi,
            })
        })
        .collect()
}
