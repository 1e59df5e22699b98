use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use dimerlab::dimer::ColourSequence;
use dimerlab::lyapunov::{
    estimate_clt, estimate_clt_with_vectors, log_product_stat, moment_exponents, second_moment_log_rate, E1,
};
use dimerlab::mean::mean_double_sum;
use dimerlab::stats::mean;
use dimerlab::CouplingPoint;

const P: CouplingPoint = CouplingPoint::new(0.1, 0.1, 0.5);

#[test]
fn exhaustive_log_statistics_reproduce_mean() {
    for n in 1..=12 {
        let values: Vec<f64> = ColourSequence::all_of_length(n).map(|s| log_product_stat(&s, &P).value()).collect();
        assert!((mean(&values) - mean_double_sum(n, &P).unwrap()).abs() < 1e-10, "N = {n}");
    }
}

#[test]
fn alpha_estimate_is_stable_in_length() {
    let short = estimate_clt(&P, 1000, 10_000, 42).unwrap();
    let long = estimate_clt(&P, 4000, 10_000, 42).unwrap();
    let se = short.alpha_se.hypot(long.alpha_se);
    let diff = (short.alpha_hat - long.alpha_hat).abs();
    assert!(
        diff < 3.0 * se,
        "alpha_hat(1000) = {}, alpha_hat(4000) = {}, |diff| = {diff:.3e}, 3 SE = {:.3e}",
        short.alpha_hat,
        long.alpha_hat,
        3.0 * se
    );
}

#[test]
fn alpha_estimate_is_vector_independent() {
    let base = estimate_clt_with_vectors(&P, 2000, 10_000, 42, &E1, &E1).unwrap();
    let other = estimate_clt_with_vectors(&P, 2000, 10_000, 44, &[1.0, 1.0, 0.0], &[1.0, 0.0, 1.0]).unwrap();
    let se = base.alpha_se.hypot(other.alpha_se);
    let diff = (base.alpha_hat - other.alpha_hat).abs();
    assert!(
        diff < 3.0 * se,
        "alpha_hat e1/e1 = {}, (1,1,0)/(1,0,1) = {}, |diff| = {diff:.3e}, 3 SE = {:.3e}",
        base.alpha_hat,
        other.alpha_hat,
        3.0 * se
    );
}

#[test]
fn beta2_is_positive_in_region_c() {
    for p in [P, CouplingPoint::new(0.05, 0.15, 0.3), CouplingPoint::new(0.2, 0.1, 0.45)] {
        let est = estimate_clt(&p, 500, 2000, 7).unwrap();
        assert!(est.in_region_c);
        assert!(est.beta2_hat > 0.0, "{p:?}");
        assert!(moment_exponents(&p).unwrap().beta2_moment > 0.0);
    }
}

#[test]
fn second_moment_rate_approaches_l2() {
    let l2 = moment_exponents(&P).unwrap().l2;
    assert!((second_moment_log_rate(4000, &P).unwrap() - l2).abs() < 1e-3);
}

#[test]
fn lognormal_harness_sanity() {
    let (mu, sigma) = (0.3, 0.4);
    let dist = LogNormal::new(mu, sigma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ys: Vec<f64> = (0..1_000_000).map(|_| dist.sample(&mut rng)).collect();
    let inv: Vec<f64> = ys.iter().map(|y| 1.0 / y).collect();
    let half_var = sigma * sigma / 2.0;
    assert!((mean(&ys) / (mu + half_var).exp() - 1.0).abs() < 0.01);
    assert!((mean(&inv) / (-mu + half_var).exp() - 1.0).abs() < 0.01);
}
