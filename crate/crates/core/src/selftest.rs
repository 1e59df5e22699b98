//! Embedded fixture suite used as a release gate.

use serde::Serialize;

use crate::coupling::CouplingPoint;
use crate::dimer::{brute_force_mean, enumerate_hdcs, parse_sequence};
use crate::hypergeo::check_contiguous;
use crate::mean::{mean_closed_form, mean_double_sum, mean_matrix_power};
use crate::transfer::degenerate_locus;

/// The two-colour word of the worked example with a configuration of one
/// blue dimer, two red dimers, three mixed points and four singles.
pub const FIGURE_ONE_SEQUENCE: &str = "RBBRBRRBRBBBR";

pub const SELFTEST_POINTS: [CouplingPoint; 3] = [
    CouplingPoint::new(0.1, 0.1, 0.5),
    CouplingPoint::new(0.05, 0.15, 0.3),
    CouplingPoint::new(0.15, 0.02, 0.6),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fixture {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub fixtures: Vec<Fixture>,
    pub passed: bool,
}

fn fixture(name: &str, outcome: std::result::Result<String, String>) -> Fixture {
    let passed = outcome.is_ok();
    Fixture {
        name: name.to_string(),
        passed,
        detail: outcome.unwrap_or_else(|e| e),
    }
}

fn figure_one() -> std::result::Result<String, String> {
    let seq = parse_sequence(FIGURE_ONE_SEQUENCE).map_err(|e| e.to_string())?;
    let configs = enumerate_hdcs(&seq).map_err(|e| e.to_string())?;
    let hit = configs
        .iter()
        .map(|c| c.statistics(seq.len()))
        .find(|st| (st.s_b, st.s_r, st.m) == (1, 2, 3) && st.singles == 4);
    match hit {
        Some(_) => Ok(format!(
            "{} configurations on {FIGURE_ONE_SEQUENCE}; (s_b, s_r, m) = (1, 2, 3) with 4 singles present",
            configs.len()
        )),
        None => Err("no configuration with (s_b, s_r, m) = (1, 2, 3) and 4 singles".into()),
    }
}

fn mean_agreement() -> std::result::Result<String, String> {
    let mut worst = 0.0f64;
    for n in 1..=10 {
        let brute = brute_force_mean(n, &SELFTEST_POINTS).map_err(|e| e.to_string())?;
        for (p, b) in SELFTEST_POINTS.iter().zip(brute) {
            let others = [
                mean_double_sum(n, p),
                mean_matrix_power(n, p),
                mean_closed_form(n, p, true),
            ];
            for v in others {
                let v = v.map_err(|e| e.to_string())?;
                worst = worst.max((v - b).abs());
            }
        }
    }
    if worst <= 1e-10 {
        Ok(format!("N <= 10, max pairwise deviation {worst:.3e}"))
    } else {
        Err(format!("max deviation {worst:.3e} exceeds 1e-10"))
    }
}

fn contiguous_residuals() -> std::result::Result<String, String> {
    let mut worst = 0.0f64;
    for n in 2..=30 {
        for k in 1..n {
            for z in [-0.5, -0.2, 0.3] {
                worst = worst.max(check_contiguous(k, n, z).map_err(|e| e.to_string())?.abs());
            }
        }
    }
    if worst <= 1e-11 {
        Ok(format!("1 <= k < N <= 30, max |residual| {worst:.3e}"))
    } else {
        Err(format!("max |residual| {worst:.3e} exceeds 1e-11"))
    }
}

fn critical_locus() -> std::result::Result<String, String> {
    let locus = degenerate_locus(&CouplingPoint::critical());
    if locus.abs() < 1e-15 {
        Ok(format!("|locus(2/9, 2/9, 2/3)| = {:.3e}", locus.abs()))
    } else {
        Err(format!("|locus(2/9, 2/9, 2/3)| = {:.3e}", locus.abs()))
    }
}

pub fn run_selftest() -> SelftestReport {
    let fixtures = vec![
        fixture("figure-one", figure_one()),
        fixture("mean-four-way", mean_agreement()),
        fixture("contiguous-relation", contiguous_residuals()),
        fixture("critical-locus", critical_locus()),
    ];
    let passed = fixtures.iter().all(|f| f.passed);
    SelftestReport { fixtures, passed }
}
