//! The 3x3 representation of the hard-dimer generating function.
//!
//! `B` carries a blue site and `R` a red site. For a word `xi_N` the ordered
//! product `S_N = M_1 M_2 ... M_N` (site 1 leftmost) has
//! `(S_N)_11 = Z_{hdc's on xi}(-u, -v, w)`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::coupling::CouplingPoint;
use crate::dimer::{Colour, ColourSequence};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat3};

/// Branch tolerance on the cubic discriminant.
pub const DELTA_TOLERANCE: f64 = 1e-12;

/// Slack used when a contractivity clause tests an equality such as
/// `u = w(1-w)`. Points this close to a clause boundary are treated as on it.
pub const CLAUSE_TOLERANCE: f64 = 1e-6;

/// Rounding slack on the region A and B inequalities, so that exactly
/// representable boundary points such as the critical point land on the
/// boundary rather than on whichever side rounding puts them.
pub const MARGIN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TransferPair {
    pub b: Mat3,
    pub r: Mat3,
    pub lambda: [f64; 3],
    pub gamma: [f64; 3],
}

pub fn build_matrices(point: &CouplingPoint) -> TransferPair {
    let CouplingPoint { u, v, w } = *point;
    TransferPair {
        b: Mat3::new(1.0, 1.0, 0.0, -u, 0.0, 0.0, 0.0, 0.0, w),
        r: Mat3::new(1.0, 0.0, 1.0, 0.0, w, 0.0, -v, 0.0, 0.0),
        lambda: [1.0, 0.0, 0.0],
        gamma: [1.0, 0.0, 0.0],
    }
}

impl TransferPair {
    pub fn matrix_for(&self, colour: Colour) -> &Mat3 {
        match colour {
            Colour::Blue => &self.b,
            Colour::Red => &self.r,
        }
    }

    /// `(B + R) / 2`, the mean of the two-point measure.
    pub fn mean_matrix(&self) -> Mat3 {
        (self.b + self.r) * 0.5
    }
}

pub fn word_product(seq: &ColourSequence, pair: &TransferPair) -> Mat3 {
    seq.sites()
        .iter()
        .fold(Mat3::identity(), |acc, &c| acc * pair.matrix_for(c))
}

pub fn z_via_transfer(seq: &ColourSequence, point: &CouplingPoint) -> f64 {
    word_product(seq, &build_matrices(point))[(0, 0)]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Word {
    B,
    R,
    BR,
    RB,
}

impl Word {
    pub const ALL: [Word; 4] = [Word::B, Word::R, Word::BR, Word::RB];

    pub fn matrix(self, pair: &TransferPair) -> Mat3 {
        match self {
            Word::B => pair.b,
            Word::R => pair.r,
            Word::BR => pair.b * pair.r,
            Word::RB => pair.r * pair.b,
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Word::B => "B",
            Word::R => "R",
            Word::BR => "BR",
            Word::RB => "RB",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "B" => Ok(Word::B),
            "R" => Ok(Word::R),
            "BR" => Ok(Word::BR),
            "RB" => Ok(Word::RB),
            other => Err(Error::InvalidArgument(format!("unknown word {other:?}"))),
        }
    }
}

fn serialize_eigenvalues<S: Serializer>(values: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let pairs: Vec<[f64; 2]> = values.iter().map(|z| [z.re, z.im]).collect();
    pairs.serialize(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub word: Word,
    #[serde(serialize_with = "serialize_eigenvalues")]
    pub eigenvalues: Vec<Complex64>,
    pub sum_geometric_multiplicities: usize,
    /// Cubic discriminant `q^2/4 + p^3/27`; only for `BR` and `RB`.
    #[serde(rename = "delta")]
    pub discriminant_delta: Option<f64>,
    pub degenerate: bool,
    #[serde(rename = "locus")]
    pub locus_value: Option<f64>,
}

/// `(1 +- sqrt(1 - 4x)) / 2`, complex when `x > 1/4`.
fn quadratic_pair(x: f64) -> [Complex64; 2] {
    let disc = 1.0 - 4.0 * x;
    let root = if disc >= 0.0 {
        Complex64::new(disc.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-disc).sqrt())
    };
    [(1.0 + root) / 2.0, (1.0 - root) / 2.0]
}

/// Depressed-cubic coefficients of `lambda^3 - lambda^2 + w(u+v) lambda - u v w^2`
/// under `lambda = t + 1/3`.
pub fn cubic_pq(point: &CouplingPoint) -> (f64, f64) {
    let CouplingPoint { u, v, w } = *point;
    let s = w * (u + v);
    (s - 1.0 / 3.0, -u * v * w * w + s / 3.0 - 2.0 / 27.0)
}

pub fn cubic_discriminant(point: &CouplingPoint) -> f64 {
    let (p, q) = cubic_pq(point);
    q * q / 4.0 + p * p * p / 27.0
}

/// Roots of `t^3 + p t + q`, by Cardano (one real root), the trigonometric
/// form (three real roots) or the repeated-root formulas when `|delta|` is
/// within [`DELTA_TOLERANCE`].
fn depressed_cubic_roots(p: f64, q: f64) -> [Complex64; 3] {
    let delta = q * q / 4.0 + p * p * p / 27.0;
    let re = |x: f64| Complex64::new(x, 0.0);
    if delta.abs() <= DELTA_TOLERANCE {
        if p.abs() <= DELTA_TOLERANCE {
            return [re(0.0); 3];
        }
        let simple = 3.0 * q / p;
        let double = -3.0 * q / (2.0 * p);
        return [re(simple), re(double), re(double)];
    }
    if delta > 0.0 {
        let sq = delta.sqrt();
        let a = (-q / 2.0 + sq).cbrt();
        let b = (-q / 2.0 - sq).cbrt();
        let real = a + b;
        let imag = (3.0f64).sqrt() / 2.0 * (a - b);
        [
            re(real),
            Complex64::new(-real / 2.0, imag),
            Complex64::new(-real / 2.0, -imag),
        ]
    } else {
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        [0.0, 1.0, 2.0].map(|k| re(r * (phi - 2.0 * PI * k / 3.0).cos()))
    }
}

fn word_eigenvalues(word: Word, point: &CouplingPoint) -> Vec<Complex64> {
    let w = Complex64::new(point.w, 0.0);
    match word {
        Word::B => {
            let [a, b] = quadratic_pair(point.u);
            vec![a, b, w]
        }
        Word::R => {
            let [a, b] = quadratic_pair(point.v);
            vec![a, b, w]
        }
        Word::BR | Word::RB => {
            let (p, q) = cubic_pq(point);
            depressed_cubic_roots(p, q)
                .iter()
                .map(|t| t + 1.0 / 3.0)
                .collect()
        }
    }
}

/// Sum over distinct eigenvalues of `3 - rank(M - lambda I)`.
pub fn sum_geometric_multiplicities(m: &Mat3, eigenvalues: &[Complex64]) -> usize {
    linalg::cluster_eigenvalues(eigenvalues, 1e-9)
        .iter()
        .map(|(lambda, _)| linalg::geometric_multiplicity(m, *lambda))
        .sum()
}

pub fn spectral_report(word: Word, point: &CouplingPoint) -> SpectralReport {
    let pair = build_matrices(point);
    let m = word.matrix(&pair);
    let mut eigenvalues = word_eigenvalues(word, point);
    linalg::sort_eigenvalues(&mut eigenvalues);
    let sum_geometric_multiplicities = sum_geometric_multiplicities(&m, &eigenvalues);
    let (discriminant_delta, locus_value, degenerate) = match word {
        Word::BR | Word::RB => {
            let delta = cubic_discriminant(point);
            (Some(delta), Some(degenerate_locus(point)), delta.abs() <= DELTA_TOLERANCE)
        }
        Word::B | Word::R => {
            let repeated = linalg::cluster_eigenvalues(&eigenvalues, 1e-9).len() < 3;
            (None, None, repeated)
        }
    };
    SpectralReport {
        word,
        eigenvalues,
        sum_geometric_multiplicities,
        discriminant_delta,
        degenerate,
        locus_value,
    }
}

/// `27u^2v^2w^2 - (u+v)^2 - 18uvw(u+v) + 4uv + 4w(u+v)^3`; vanishes exactly
/// where `BR` has a repeated eigenvalue. Equals `108 delta / w^2`.
pub fn degenerate_locus(point: &CouplingPoint) -> f64 {
    let CouplingPoint { u, v, w } = *point;
    let s = u + v;
    27.0 * u * u * v * v * w * w - s * s - 18.0 * u * v * w * s + 4.0 * u * v + 4.0 * w * s * s * s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionMembership {
    #[serde(rename = "in_A")]
    pub in_a: bool,
    #[serde(rename = "in_B")]
    pub in_b: bool,
    #[serde(rename = "in_C")]
    pub in_c: bool,
    pub a_margin: f64,
    pub b_margin: f64,
    pub c_reason: String,
}

struct Clause {
    holds: bool,
    name: &'static str,
}

/// Contractivity clause for one matrix with off-diagonal weight `x`
/// (`u` for `B`, `v` for `R`).
fn contractivity_clause(x: f64, w: f64) -> Clause {
    if (x - 0.25).abs() <= CLAUSE_TOLERANCE {
        Clause {
            holds: w > 0.5 + CLAUSE_TOLERANCE,
            name: "=1/4,w>1/2",
        }
    } else if x > 0.25 {
        Clause {
            holds: w * w > x,
            name: ">1/4,w^2>x",
        }
    } else {
        Clause {
            holds: (x - w * (1.0 - w)).abs() > CLAUSE_TOLERANCE,
            name: "<1/4,x!=w(1-w)",
        }
    }
}

pub fn region_membership(point: &CouplingPoint) -> Result<RegionMembership> {
    point.require_unit_cube()?;
    let CouplingPoint { u, v, w } = *point;
    let a_margin = (w - (u + v) / 2.0).min(2.0 - w);
    let in_a = a_margin >= -MARGIN_TOLERANCE;
    let b_margin = (1.0 - w / 2.0).powi(2) - (u + v);
    let in_b = in_a && b_margin > MARGIN_TOLERANCE;

    let by_b = contractivity_clause(u, w);
    let by_r = contractivity_clause(v, w);
    let (in_c, c_reason) = if by_b.holds {
        (true, format!("B:u{}", by_b.name))
    } else if by_r.holds {
        (true, format!("R:v{}", by_r.name))
    } else {
        (false, format!("none:u{}+v{}", by_b.name, by_r.name))
    };
    Ok(RegionMembership {
        in_a,
        in_b,
        in_c,
        a_margin,
        b_margin,
        c_reason,
    })
}

/// Eigenvectors of `B`: `(-lambda/u, 1, 0)` for the two roots of the
/// quadratic and `e_3` for `w`.
pub fn b_eigenvectors(point: &CouplingPoint) -> [[Complex64; 3]; 3] {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let [l1, l2] = quadratic_pair(point.u);
    [
        [-l1 / point.u, one, zero],
        [-l2 / point.u, one, zero],
        [zero, zero, one],
    ]
}

/// Eigenvectors of `R`: `(-lambda/v, 0, 1)` and `e_2` for `w`.
pub fn r_eigenvectors(point: &CouplingPoint) -> [[Complex64; 3]; 3] {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let [l1, l2] = quadratic_pair(point.v);
    [
        [-l1 / point.v, zero, one],
        [-l2 / point.v, zero, one],
        [zero, one, zero],
    ]
}

fn parallel(x: &[Complex64; 3], y: &[Complex64; 3]) -> bool {
    let inner: Complex64 = x.iter().zip(y).map(|(a, b)| a.conj() * b).sum();
    let nx: f64 = x.iter().map(|a| a.norm_sqr()).sum();
    let ny: f64 = y.iter().map(|a| a.norm_sqr()).sum();
    (nx * ny - inner.norm_sqr()).abs() <= 1e-12 * nx * ny
}

/// True iff no eigenvector of `B` is parallel to an eigenvector of `R`.
pub fn eigenvector_distinctness(point: &CouplingPoint) -> bool {
    let bs = b_eigenvectors(point);
    let rs = r_eigenvectors(point);
    bs.iter().all(|x| rs.iter().all(|y| !parallel(x, y)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionCell {
    pub u: f64,
    pub w: f64,
    #[serde(rename = "in_A")]
    pub in_a: bool,
    #[serde(rename = "in_B")]
    pub in_b: bool,
    #[serde(rename = "in_C")]
    pub in_c: bool,
}

/// Region diagram on the `u = v` slice: interior grid of `(0,1)^2` with
/// `steps` points per axis.
pub fn region_grid(steps: usize) -> Vec<RegionCell> {
    let coord = |i: usize| (i as f64 + 0.5) / steps as f64;
    let mut out = Vec::with_capacity(steps * steps);
    for i in 0..steps {
        for j in 0..steps {
            let (u, w) = (coord(i), coord(j));
            let m = region_membership(&CouplingPoint::new(u, u, w)).unwrap();
            out.push(RegionCell {
                u,
                w,
                in_a: m.in_a,
                in_b: m.in_b,
                in_c: m.in_c,
            });
        }
    }
    out
}

pub fn region_grid_csv(cells: &[RegionCell]) -> String {
    let mut out = String::from("u,w,in_A,in_B,in_C\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            c.u, c.w, c.in_a as u8, c.in_b as u8, c.in_c as u8
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimer::parse_sequence;
    use approx::assert_abs_diff_eq;

    fn p(u: f64, v: f64, w: f64) -> CouplingPoint {
        CouplingPoint::new(u, v, w)
    }

    #[test]
    fn matrices_match_representation() {
        let pair = build_matrices(&p(0.1, 0.2, 0.5));
        assert_eq!(pair.b.row(1).iter().copied().collect::<Vec<_>>(), vec![-0.1, 0.0, 0.0]);
        assert_eq!(pair.r.row(2).iter().copied().collect::<Vec<_>>(), vec![-0.2, 0.0, 0.0]);
        assert_abs_diff_eq!(pair.b.determinant(), 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(pair.r.determinant(), 0.10, epsilon = 1e-15);
    }

    #[test]
    fn word_products_match_displayed_matrices() {
        let pt = p(0.13, 0.29, 0.41);
        let (u, v, w) = (pt.u, pt.v, pt.w);
        let pair = build_matrices(&pt);
        let br = word_product(&parse_sequence("BR").unwrap(), &pair);
        let expect_br = Mat3::new(1.0, w, 1.0, -u, 0.0, -u, -v * w, 0.0, 0.0);
        assert!((br - expect_br).amax() < 1e-15);
        let rb = word_product(&parse_sequence("RB").unwrap(), &pair);
        let expect_rb = Mat3::new(1.0, 1.0, w, -u * w, 0.0, 0.0, -v, -v, 0.0);
        assert!((rb - expect_rb).amax() < 1e-15);
        assert_eq!(word_product(&parse_sequence("B").unwrap(), &pair), pair.b);
    }

    #[test]
    fn z_via_transfer_small_words() {
        let pt = p(0.1, 0.3, 0.5);
        assert_abs_diff_eq!(z_via_transfer(&parse_sequence("BB").unwrap(), &pt), 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(z_via_transfer(&parse_sequence("BRB").unwrap(), &pt), 0.95, epsilon = 1e-15);
        assert_eq!(z_via_transfer(&parse_sequence("B").unwrap(), &pt), 1.0);
    }

    #[test]
    fn b_spectrum_closed_form() {
        let rep = spectral_report(Word::B, &p(3.0 / 16.0, 0.1, 0.4));
        let re: Vec<f64> = rep.eigenvalues.iter().map(|z| z.re).collect();
        assert_abs_diff_eq!(re[0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(re[1], 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(re[2], 0.25, epsilon = 1e-15);
        assert_eq!(rep.sum_geometric_multiplicities, 3);
    }

    #[test]
    fn b_at_quarter_has_jordan_block() {
        let rep = spectral_report(Word::B, &p(0.25, 0.1, 0.3));
        assert_eq!(rep.sum_geometric_multiplicities, 2);
        assert!(rep.degenerate);
        // triple eigenvalue 1/2 at w = 1/2
        let rep = spectral_report(Word::B, &p(0.25, 0.1, 0.5));
        assert_eq!(rep.sum_geometric_multiplicities, 2);
    }

    #[test]
    fn critical_point_is_on_the_locus() {
        let c = CouplingPoint::critical();
        assert!(degenerate_locus(&c).abs() < 1e-15);
        let rep = spectral_report(Word::BR, &c);
        assert!(rep.degenerate);
        assert_eq!(rep.locus_value, Some(degenerate_locus(&c)));
    }

    #[test]
    fn locus_at_zero_w() {
        for (u, v) in [(0.1, 0.3), (0.2, 0.2), (0.7, 0.05)] {
            assert_abs_diff_eq!(degenerate_locus(&p(u, v, 0.0)), -(u - v) * (u - v), epsilon = 1e-15);
        }
    }

    #[test]
    fn locus_is_scaled_discriminant() {
        let pt = p(0.1, 0.1, 0.5);
        let delta = cubic_discriminant(&pt);
        assert!(delta.abs() > DELTA_TOLERANCE);
        assert_abs_diff_eq!(degenerate_locus(&pt), 108.0 * delta / 0.25, epsilon = 1e-13);
    }

    #[test]
    fn cubic_roots_satisfy_characteristic_polynomial() {
        for pt in [p(0.1, 0.1, 0.5), p(0.6, 0.3, 0.9), p(0.05, 0.4, 0.2), CouplingPoint::critical()] {
            let pair = build_matrices(&pt);
            let br = Word::BR.matrix(&pair);
            let [c2, c1, c0] = linalg::char_poly3(&br);
            for lam in spectral_report(Word::BR, &pt).eigenvalues {
                let val = lam * lam * lam + lam * lam * c2 + lam * c1 + c0;
                assert!(val.norm() < 1e-7, "{pt:?} {lam}");
            }
        }
    }

    #[test]
    fn region_examples() {
        let crit = region_membership(&CouplingPoint::critical()).unwrap();
        assert!(crit.in_a);
        assert!(!crit.in_b);
        assert!(crit.b_margin.abs() < 1e-15);
        assert!(!crit.in_c);

        let r = region_membership(&p(0.1, 0.1, 0.5)).unwrap();
        assert!(r.in_a && r.in_b && r.in_c);
        assert_eq!(r.c_reason, "B:u<1/4,x!=w(1-w)");

        let r = region_membership(&p(0.24, 0.1, 0.4)).unwrap();
        assert!(r.in_c);
        assert_eq!(r.c_reason, "R:v<1/4,x!=w(1-w)");

        assert!(region_membership(&p(0.0, 0.1, 0.4)).is_err());
        assert!(region_membership(&p(0.5, 0.1, 1.0)).is_err());
    }

    #[test]
    fn region_at_rounded_critical_point() {
        let r = region_membership(&p(0.2222222, 0.2222222, 0.6666667)).unwrap();
        assert!(!r.in_c);
        assert!(r.c_reason.starts_with("none"));
    }

    #[test]
    fn quarter_clause_requires_w_above_half() {
        assert!(!region_membership(&p(0.25, 0.25, 0.5)).unwrap().in_c);
        assert!(region_membership(&p(0.25, 0.25, 0.6)).unwrap().in_c);
        let r = region_membership(&p(0.3, 0.3, 0.6)).unwrap();
        assert!(r.in_c && r.c_reason == "B:u>1/4,w^2>x");
        // w^2 = 0.49 < 0.5
        assert!(!region_membership(&p(0.5, 0.5, 0.7)).unwrap().in_c);
    }

    #[test]
    fn closed_form_eigenvectors_are_eigenvectors() {
        for pt in [p(0.1, 0.1, 0.5), p(0.2, 0.05, 0.7), p(0.4, 0.3, 0.6)] {
            let pair = build_matrices(&pt);
            let bm = linalg::to_complex(&pair.b);
            let rm = linalg::to_complex(&pair.r);
            let bv = b_eigenvectors(&pt);
            let rv = r_eigenvectors(&pt);
            let mut bl = word_eigenvalues(Word::B, &pt);
            let mut rl = word_eigenvalues(Word::R, &pt);
            for (vecs, vals, m) in [(&bv, &mut bl, &bm), (&rv, &mut rl, &rm)] {
                for (x, lam) in vecs.iter().zip(vals.iter()) {
                    let xv = nalgebra::DVector::from_column_slice(x);
                    let resid = m * &xv - xv.clone() * *lam;
                    assert!(resid.norm() < 1e-12, "{pt:?}");
                }
            }
        }
    }

    #[test]
    fn eigenvectors_distinct_examples() {
        assert!(eigenvector_distinctness(&p(0.1, 0.1, 0.5)));
        assert!(eigenvector_distinctness(&p(0.2, 0.05, 0.7)));
    }

    #[test]
    fn region_grid_csv_shape() {
        let cells = region_grid(4);
        let csv = region_grid_csv(&cells);
        assert_eq!(csv.lines().count(), 17);
        assert!(csv.starts_with("u,w,in_A,in_B,in_C\n"));
    }
}
