//! Random products of `B` and `R`: Monte Carlo estimates of the Lyapunov
//! exponent and CLT variance of `ln |(S_N)_11|`, and the moment exponents
//! obtained from the mean and Kronecker-mean matrices.
//!
//! Sample `i` of a run draws its word from a ChaCha8 stream keyed by
//! `(seed, i)`, and per-sample results are reduced with a fixed pairwise
//! tree, so the output does not depend on how rayon splits the work.

use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coupling::CouplingPoint;
use crate::dimer::{Colour, ColourSequence};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat3};
use crate::mean::{closed_form_params, mean_recurrence};
use crate::stats;
use crate::transfer::{build_matrices, region_membership, z_via_transfer, TransferPair};

/// Factors between two renormalizations of the running product.
pub const RENORMALIZE_EVERY: usize = 32;

pub const E1: [f64; 3] = [1.0, 0.0, 0.0];

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// i.i.d. uniform colours, deterministic in `(seed, stream)`.
pub fn sample_word(len: usize, seed: u64, stream: u64) -> Result<ColourSequence> {
    let mut rng = stream_rng(seed, stream);
    let mut sites = Vec::with_capacity(len);
    let mut bits = 0u64;
    for i in 0..len {
        if i % 64 == 0 {
            bits = rng.next_u64();
        }
        sites.push(if bits >> (i % 64) & 1 == 1 {
            Colour::Red
        } else {
            Colour::Blue
        });
    }
    ColourSequence::new(sites)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogStat {
    /// `ln |<lambda, S_N gamma>|`, `-inf` for an exact zero.
    pub log_abs: f64,
    /// `-1`, `0` or `+1`.
    pub sign: i8,
}

impl LogStat {
    pub fn value(&self) -> f64 {
        self.sign as f64 * self.log_abs.exp()
    }
}

fn bilinear(lambda: &[f64; 3], m: &Mat3, gamma: &[f64; 3]) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            acc += lambda[i] * m[(i, j)] * gamma[j];
        }
    }
    acc
}

fn fold_log_product<I: Iterator<Item = Colour>>(
    colours: I,
    pair: &TransferPair,
    lambda: &[f64; 3],
    gamma: &[f64; 3],
) -> LogStat {
    let mut running = Mat3::identity();
    let mut log_scale = 0.0;
    for (i, c) in colours.enumerate() {
        running *= pair.matrix_for(c);
        if (i + 1) % RENORMALIZE_EVERY == 0 {
            let norm = running.amax();
            if norm == 0.0 {
                return LogStat { log_abs: f64::NEG_INFINITY, sign: 0 };
            }
            running /= norm;
            log_scale += norm.ln();
        }
    }
    let entry = bilinear(lambda, &running, gamma);
    if entry == 0.0 {
        LogStat { log_abs: f64::NEG_INFINITY, sign: 0 }
    } else {
        LogStat {
            log_abs: entry.abs().ln() + log_scale,
            sign: if entry > 0.0 { 1 } else { -1 },
        }
    }
}

/// `ln |(S_N)_11|` and its sign, with max-norm renormalization every
/// [`RENORMALIZE_EVERY`] factors.
pub fn log_product_stat(seq: &ColourSequence, point: &CouplingPoint) -> LogStat {
    log_product_stat_with(seq, &build_matrices(point), &E1, &E1)
}

/// As [`log_product_stat`] for the matrix element `<lambda, S_N gamma>`.
pub fn log_product_stat_with(
    seq: &ColourSequence,
    pair: &TransferPair,
    lambda: &[f64; 3],
    gamma: &[f64; 3],
) -> LogStat {
    fold_log_product(seq.sites().iter().copied(), pair, lambda, gamma)
}

/// Draws sample `stream` without materializing the word.
fn sampled_log_stat(
    len: usize,
    seed: u64,
    stream: u64,
    pair: &TransferPair,
    lambda: &[f64; 3],
    gamma: &[f64; 3],
) -> LogStat {
    let mut rng = stream_rng(seed, stream);
    let mut bits = 0u64;
    let colours = (0..len).map(|i| {
        if i % 64 == 0 {
            bits = rng.next_u64();
        }
        if bits >> (i % 64) & 1 == 1 {
            Colour::Red
        } else {
            Colour::Blue
        }
    });
    fold_log_product(colours, pair, lambda, gamma)
}

/// Per-sample statistics for streams `0..samples`, in stream order.
pub fn sample_log_stats(
    point: &CouplingPoint,
    len: usize,
    samples: usize,
    seed: u64,
    lambda: &[f64; 3],
    gamma: &[f64; 3],
) -> Vec<LogStat> {
    let pair = build_matrices(point);
    (0..samples as u64)
        .into_par_iter()
        .map(|stream| sampled_log_stat(len, seed, stream, &pair, lambda, gamma))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovEstimate {
    #[serde(rename = "N")]
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub alpha_hat: f64,
    pub alpha_se: f64,
    pub beta2_hat: f64,
    pub beta2_se: f64,
    pub ks_statistic: f64,
    pub zero_hits: usize,
    pub negative_fraction: f64,
    pub in_region_c: bool,
}

/// Summary of per-sample log statistics. Exact zeros are counted in
/// `zero_hits` and left out of the moments.
pub fn summarize(n: usize, seed: u64, stats_in: &[LogStat], in_region_c: bool) -> Result<LyapunovEstimate> {
    let samples = stats_in.len();
    let logs: Vec<f64> = stats_in
        .iter()
        .filter(|s| s.sign != 0)
        .map(|s| s.log_abs)
        .collect();
    let zero_hits = samples - logs.len();
    if logs.is_empty() {
        return Err(Error::DegenerateProducts { samples });
    }
    if logs.len() < 2 {
        return Err(Error::InvalidArgument("need at least two nonzero samples".into()));
    }
    let count = logs.len() as f64;
    let n_f = n as f64;
    let mean_log = stats::mean(&logs);
    let var_log = stats::sample_variance(&logs);
    let centered4: Vec<f64> = logs.iter().map(|x| (x - mean_log).powi(4)).collect();
    let m4 = stats::mean(&centered4);
    let var_of_var = ((m4 - (count - 3.0) / (count - 1.0) * var_log * var_log) / count).max(0.0);

    let ks_statistic = if var_log > 0.0 {
        let sd = var_log.sqrt();
        let standardized: Vec<f64> = logs.iter().map(|x| (x - mean_log) / sd).collect();
        stats::ks_statistic_normal(&standardized)
    } else {
        f64::NAN
    };
    let negatives = stats_in.iter().filter(|s| s.sign < 0).count();
    Ok(LyapunovEstimate {
        n,
        samples,
        seed,
        alpha_hat: mean_log / n_f,
        alpha_se: (var_log / count).sqrt() / n_f,
        beta2_hat: var_log / n_f,
        beta2_se: var_of_var.sqrt() / n_f,
        ks_statistic,
        zero_hits,
        negative_fraction: negatives as f64 / samples as f64,
        in_region_c,
    })
}

fn in_region_c(point: &CouplingPoint) -> bool {
    region_membership(point).map(|r| r.in_c).unwrap_or(false)
}

pub fn estimate_clt(point: &CouplingPoint, n: usize, samples: usize, seed: u64) -> Result<LyapunovEstimate> {
    estimate_clt_with_vectors(point, n, samples, seed, &E1, &E1)
}

/// [`estimate_clt`] for the matrix element `<lambda, S_N gamma>`. Points
/// outside region C are estimated anyway; `in_region_c` records it.
pub fn estimate_clt_with_vectors(
    point: &CouplingPoint,
    n: usize,
    samples: usize,
    seed: u64,
    lambda: &[f64; 3],
    gamma: &[f64; 3],
) -> Result<LyapunovEstimate> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    if samples < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 samples, got {samples}")));
    }
    let logs = sample_log_stats(point, n, samples, seed, lambda, gamma);
    summarize(n, seed, &logs, in_region_c(point))
}

/// Histogram of `(ln|S_11| - N alpha_hat) / sqrt(N beta2_hat)` on `[-5, 5)`.
pub fn standardized_histogram(
    point: &CouplingPoint,
    n: usize,
    samples: usize,
    seed: u64,
    bins: usize,
) -> Result<Vec<stats::HistogramBin>> {
    let logs = sample_log_stats(point, n, samples, seed, &E1, &E1);
    let est = summarize(n, seed, &logs, in_region_c(point))?;
    let centre = est.alpha_hat * n as f64;
    let sd = (est.beta2_hat * n as f64).sqrt();
    let standardized: Vec<f64> = logs
        .iter()
        .filter(|s| s.sign != 0)
        .map(|s| (s.log_abs - centre) / sd)
        .collect();
    Ok(stats::histogram(&standardized, -5.0, 5.0, bins))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentExponents {
    pub nu1: f64,
    pub nu2: f64,
    #[serde(rename = "L1")]
    pub l1: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
    pub alpha_moment: f64,
    pub beta2_moment: f64,
}

pub fn mean_matrix(point: &CouplingPoint) -> DMatrix<f64> {
    let m = build_matrices(point).mean_matrix();
    DMatrix::from_fn(3, 3, |i, j| m[(i, j)])
}

/// `(B (x) B + R (x) R) / 2`; `e_1 (x) e_1` is the first basis vector.
pub fn kronecker_mean_matrix(point: &CouplingPoint) -> DMatrix<f64> {
    let pair = build_matrices(point);
    let b = DMatrix::from_fn(3, 3, |i, j| pair.b[(i, j)]);
    let r = DMatrix::from_fn(3, 3, |i, j| pair.r[(i, j)]);
    (b.kronecker(&b) + r.kronecker(&r)) * 0.5
}

/// Relative radius of the eigenvalue cluster averaged into `nu2`.
pub const NU2_CLUSTER_TOLERANCE: f64 = 1e-4;

fn real_dominant(m: &DMatrix<f64>) -> Result<f64> {
    let lead = linalg::dominant_eigenvalue_clustered(m, NU2_CLUSTER_TOLERANCE);
    if lead.im.abs() > 1e-9 * lead.norm() || lead.re <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "dominant eigenvalue {lead} is not real positive"
        )));
    }
    Ok(lead.re)
}

/// `nu1`, `nu2` from direct (Schur) eigensolves of the 3x3 mean matrix and
/// the 9x9 Kronecker mean, then `alpha = 2 L1 - L2/2`, `beta^2 = L2 - 2 L1`.
pub fn moment_exponents(point: &CouplingPoint) -> Result<MomentExponents> {
    // Spectrum of the mean matrix is {w/2, nu_+, nu_-}; the closed form
    // avoids the sqrt(eps) error of a generic solver at the confluent point.
    let nu1 = match closed_form_params(point) {
        Ok(cf) => cf.nu_plus.max(point.w / 2.0),
        Err(_) => real_dominant(&mean_matrix(point))?,
    };
    let nu2 = real_dominant(&kronecker_mean_matrix(point))?;
    let (l1, l2) = (nu1.ln(), nu2.ln());
    Ok(MomentExponents {
        nu1,
        nu2,
        l1,
        l2,
        alpha_moment: 2.0 * l1 - l2 / 2.0,
        beta2_moment: -2.0 * l1 + l2,
    })
}

/// `<(S_N)_11^2>` as the corner entry of the `N`-th Kronecker-mean power.
pub fn second_moment_exact(n: usize, point: &CouplingPoint) -> Result<f64> {
    let (mantissa, log_scale) = second_moment_scaled(n, point)?;
    Ok(mantissa * log_scale.exp())
}

/// `(1/N) ln <(S_N)_11^2>` without under- or overflow.
pub fn second_moment_log_rate(n: usize, point: &CouplingPoint) -> Result<f64> {
    let (mantissa, log_scale) = second_moment_scaled(n, point)?;
    Ok((mantissa.ln() + log_scale) / n as f64)
}

fn second_moment_scaled(n: usize, point: &CouplingPoint) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    Ok(linalg::corner_entry_power_scaled(&kronecker_mean_matrix(point), n))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InverseMeanReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    /// The `<1/|Z|>` side was computed over all `2^N` words.
    pub exhaustive: bool,
    pub inverse_mean: f64,
    pub inverse_mean_se: f64,
    pub mean_z: f64,
    pub beta2_clt: f64,
    pub beta2_moment: f64,
    pub prediction_clt: f64,
    pub prediction_moment: f64,
    pub log_ratio_clt: f64,
    pub log_ratio_moment: f64,
    pub zero_hits: usize,
    pub negative_fraction: f64,
    pub reliable: bool,
}

/// Largest `N` for which the `<1/|Z|>` side is averaged exhaustively.
pub const EXHAUSTIVE_INVERSE_MAX_N: usize = 12;

/// Compares `<1/|Z|>` with `e^(N beta^2) / <Z>` for `beta^2` from the
/// Monte Carlo estimator and from the moment exponents.
pub fn inverse_mean_experiment(
    point: &CouplingPoint,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<InverseMeanReport> {
    if samples < 1000 {
        return Err(Error::InvalidArgument(format!("need at least 1000 samples, got {samples}")));
    }
    let logs = sample_log_stats(point, n, samples, seed, &E1, &E1);
    let clt = summarize(n, seed, &logs, in_region_c(point))?;
    let moments = moment_exponents(point)?;

    let exhaustive = n <= EXHAUSTIVE_INVERSE_MAX_N;
    let (inverse_mean, inverse_mean_se, zero_hits, negative_fraction) = if exhaustive {
        let zs: Vec<f64> = ColourSequence::all_of_length(n)
            .map(|s| z_via_transfer(&s, point))
            .collect();
        let zero_hits = zs.iter().filter(|z| **z == 0.0).count();
        let inv: Vec<f64> = zs.iter().filter(|z| **z != 0.0).map(|z| 1.0 / z.abs()).collect();
        let negatives = zs.iter().filter(|z| **z < 0.0).count();
        (stats::mean(&inv), 0.0, zero_hits, negatives as f64 / zs.len() as f64)
    } else {
        let inv: Vec<f64> = logs
            .iter()
            .filter(|s| s.sign != 0)
            .map(|s| (-s.log_abs).exp())
            .collect();
        let se = if inv.len() > 1 {
            (stats::sample_variance(&inv) / inv.len() as f64).sqrt()
        } else {
            f64::NAN
        };
        (stats::mean(&inv), se, clt.zero_hits, clt.negative_fraction)
    };

    let mean_z = mean_recurrence(n, point)?;
    let n_f = n as f64;
    let prediction_clt = (n_f * clt.beta2_hat).exp() / mean_z;
    let prediction_moment = (n_f * moments.beta2_moment).exp() / mean_z;
    Ok(InverseMeanReport {
        n,
        samples,
        seed,
        exhaustive,
        inverse_mean,
        inverse_mean_se,
        mean_z,
        beta2_clt: clt.beta2_hat,
        beta2_moment: moments.beta2_moment,
        prediction_clt,
        prediction_moment,
        log_ratio_clt: (inverse_mean / prediction_clt).ln(),
        log_ratio_moment: (inverse_mean / prediction_moment).ln(),
        zero_hits,
        negative_fraction,
        reliable: zero_hits == 0,
    })
}

pub fn inverse_mean_trend_csv(reports: &[InverseMeanReport]) -> String {
    let mut out = String::from(
        "N,exhaustive,inverse_mean,inverse_mean_se,prediction_clt,prediction_moment,log_ratio_clt,log_ratio_moment,zero_hits\n",
    );
    for r in reports {
        out.push_str(&format!(
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            r.n,
            r.exhaustive,
            r.inverse_mean,
            r.inverse_mean_se,
            r.prediction_clt,
            r.prediction_moment,
            r.log_ratio_clt,
            r.log_ratio_moment,
            r.zero_hits
        ));
    }
    out
}
