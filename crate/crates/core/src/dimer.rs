//! Colour sequences and coloured hard-dimer configurations.
//!
//! A dimer joins two sites of the same colour with no site of that colour
//! strictly between them. A configuration is a set of dimers whose closed
//! index intervals are pairwise disjoint, so a dimer also blocks the sites of
//! the opposite colour that it spans (the "mixed" points).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::coupling::CouplingPoint;
use crate::error::{Error, Result};

/// Default upper bound on `N` for exhaustive enumeration.
pub const ENUMERATION_GUARD: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Colour {
    Blue,
    Red,
}

impl Colour {
    pub fn swapped(self) -> Self {
        match self {
            Colour::Blue => Colour::Red,
            Colour::Red => Colour::Blue,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Colour::Blue => 'B',
            Colour::Red => 'R',
        }
    }
}

/// A word `xi_N` over `{Blue, Red}` with `N >= 1` sites.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColourSequence {
    sites: Vec<Colour>,
}

impl ColourSequence {
    pub fn new(sites: Vec<Colour>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::EmptySequence);
        }
        Ok(Self { sites })
    }

    /// Decodes the compact form: bit `i` set means site `i` is red.
    pub fn from_bits(bits: u64, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::EmptySequence);
        }
        if len > 64 {
            return Err(Error::InvalidArgument(format!(
                "bit encoding holds at most 64 sites, got {len}"
            )));
        }
        let sites = (0..len)
            .map(|i| {
                if bits >> i & 1 == 1 {
                    Colour::Red
                } else {
                    Colour::Blue
                }
            })
            .collect();
        Ok(Self { sites })
    }

    /// Compact encoding, `None` when the sequence is longer than 64 sites.
    pub fn to_bits(&self) -> Option<u64> {
        if self.sites.len() > 64 {
            return None;
        }
        Some(
            self.sites
                .iter()
                .enumerate()
                .filter(|(_, c)| **c == Colour::Red)
                .fold(0u64, |acc, (i, _)| acc | 1 << i),
        )
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Colour] {
        &self.sites
    }

    pub fn swapped(&self) -> Self {
        Self {
            sites: self.sites.iter().map(|c| c.swapped()).collect(),
        }
    }

    pub fn reversed(&self) -> Self {
        Self {
            sites: self.sites.iter().rev().copied().collect(),
        }
    }

    /// Every sequence of length `len`, in bit-encoding order.
    pub fn all_of_length(len: usize) -> impl Iterator<Item = ColourSequence> {
        assert!((1..64).contains(&len), "length must be in 1..64");
        (0..1u64 << len).map(move |bits| ColourSequence::from_bits(bits, len).unwrap())
    }
}

impl fmt::Display for ColourSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.sites {
            write!(f, "{}", c.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for ColourSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_sequence(s)
    }
}

/// Parses a single line over the alphabet `{B, R}`.
pub fn parse_sequence(text: &str) -> Result<ColourSequence> {
    let text = text.trim_end_matches(['\n', '\r']);
    if text.is_empty() {
        return Err(Error::EmptySequence);
    }
    let sites = text
        .chars()
        .enumerate()
        .map(|(position, ch)| match ch {
            'B' => Ok(Colour::Blue),
            'R' => Ok(Colour::Red),
            found => Err(Error::IllegalCharacter { position, found }),
        })
        .collect::<Result<Vec<_>>>()?;
    ColourSequence::new(sites)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Dimer {
    pub left: usize,
    pub right: usize,
    pub colour: Colour,
    pub mixed_count: usize,
}

impl Dimer {
    fn overlaps(&self, other: &Dimer) -> bool {
        self.left <= other.right && other.left <= self.right
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct DimerStatistics {
    pub s_b: usize,
    pub s_r: usize,
    pub s: usize,
    pub m: usize,
    pub k: usize,
    pub singles: usize,
}

impl DimerStatistics {
    pub fn from_counts(len: usize, s_b: usize, s_r: usize, m: usize) -> Self {
        let s = s_b + s_r;
        Self {
            s_b,
            s_r,
            s,
            m,
            k: len - s - m,
            singles: len - 2 * s - m,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct HardDimerConfig {
    pub dimers: Vec<Dimer>,
}

impl HardDimerConfig {
    pub fn is_hard(&self) -> bool {
        self.dimers
            .iter()
            .enumerate()
            .all(|(i, a)| self.dimers[i + 1..].iter().all(|b| !a.overlaps(b)))
    }

    pub fn statistics(&self, len: usize) -> DimerStatistics {
        let s_b = self
            .dimers
            .iter()
            .filter(|d| d.colour == Colour::Blue)
            .count();
        let s_r = self.dimers.len() - s_b;
        let m = self.dimers.iter().map(|d| d.mixed_count).sum();
        DimerStatistics::from_counts(len, s_b, s_r, m)
    }
}

/// All admissible dimers of `seq`, sorted by left endpoint.
pub fn candidate_dimers(seq: &ColourSequence) -> Vec<Dimer> {
    let sites = seq.sites();
    sites
        .iter()
        .enumerate()
        .filter_map(|(left, &colour)| {
            sites[left + 1..]
                .iter()
                .position(|&c| c == colour)
                .map(|offset| Dimer {
                    left,
                    right: left + 1 + offset,
                    colour,
                    mixed_count: offset,
                })
        })
        .collect()
}

fn check_guard(seq: &ColourSequence, guard: usize) -> Result<()> {
    if seq.len() > guard {
        Err(Error::TooLong {
            len: seq.len(),
            guard,
        })
    } else {
        Ok(())
    }
}

/// Depth-first walk over hard-dimer configurations. `free_from` is the first
/// site not covered by an already chosen dimer.
fn walk<F: FnMut(&[usize])>(
    cands: &[Dimer],
    next: usize,
    free_from: usize,
    chosen: &mut Vec<usize>,
    visit: &mut F,
) {
    visit(chosen);
    for idx in next..cands.len() {
        let d = &cands[idx];
        if d.left >= free_from {
            chosen.push(idx);
            walk(cands, idx + 1, d.right + 1, chosen, visit);
            chosen.pop();
        }
    }
}

fn for_each_config<F: FnMut(&[Dimer], &[usize])>(seq: &ColourSequence, mut f: F) {
    let cands = candidate_dimers(seq);
    let mut chosen = Vec::with_capacity(seq.len() / 2);
    walk(&cands, 0, 0, &mut chosen, &mut |idx| f(&cands, idx));
}

pub fn enumerate_hdcs(seq: &ColourSequence) -> Result<Vec<HardDimerConfig>> {
    enumerate_hdcs_with_guard(seq, ENUMERATION_GUARD)
}

pub fn enumerate_hdcs_with_guard(
    seq: &ColourSequence,
    guard: usize,
) -> Result<Vec<HardDimerConfig>> {
    check_guard(seq, guard)?;
    let mut out = Vec::new();
    for_each_config(seq, |cands, idx| {
        out.push(HardDimerConfig {
            dimers: idx.iter().map(|&i| cands[i]).collect(),
        })
    });
    Ok(out)
}

/// Histogram `N_xi(s_b, s_r, m)` of configuration statistics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountTable {
    pub len: usize,
    pub counts: BTreeMap<(usize, usize, usize), u64>,
}

impl CountTable {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn get(&self, s_b: usize, s_r: usize, m: usize) -> u64 {
        self.counts.get(&(s_b, s_r, m)).copied().unwrap_or(0)
    }

    /// `sum N(s_b, s_r, m) u^s_b v^s_r w^m`, at `(-u, -v, w)` when `signed`.
    pub fn evaluate(&self, point: &CouplingPoint, signed: bool) -> f64 {
        let sign = if signed { -1.0 } else { 1.0 };
        let (u, v, w) = (sign * point.u, sign * point.v, point.w);
        self.counts
            .iter()
            .map(|(&(sb, sr, m), &count)| {
                count as f64 * u.powi(sb as i32) * v.powi(sr as i32) * w.powi(m as i32)
            })
            .sum()
    }

    pub fn evaluate_exact(
        &self,
        u: &BigRational,
        v: &BigRational,
        w: &BigRational,
        signed: bool,
    ) -> BigRational {
        let (u, v) = if signed {
            (-u.clone(), -v.clone())
        } else {
            (u.clone(), v.clone())
        };
        let pow = |base: &BigRational, e: usize| -> BigRational {
            (0..e).fold(BigRational::one(), |acc, _| acc * base)
        };
        self.counts
            .iter()
            .fold(BigRational::zero(), |acc, (&(sb, sr, m), &count)| {
                acc + BigRational::from_integer(BigInt::from(count))
                    * pow(&u, sb)
                    * pow(&v, sr)
                    * pow(w, m)
            })
    }

    /// CSV with header `s_b,s_r,m,count`, rows in lexicographic order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s_b,s_r,m,count\n");
        for ((sb, sr, m), count) in &self.counts {
            out.push_str(&format!("{sb},{sr},{m},{count}\n"));
        }
        out
    }
}

pub fn count_table(seq: &ColourSequence) -> Result<CountTable> {
    check_guard(seq, ENUMERATION_GUARD)?;
    let mut counts = BTreeMap::new();
    for_each_config(seq, |cands, idx| {
        let (mut sb, mut sr, mut m) = (0, 0, 0);
        for d in idx.iter().map(|&i| &cands[i]) {
            match d.colour {
                Colour::Blue => sb += 1,
                Colour::Red => sr += 1,
            }
            m += d.mixed_count;
        }
        *counts.entry((sb, sr, m)).or_insert(0u64) += 1;
    });
    Ok(CountTable {
        len: seq.len(),
        counts,
    })
}

/// `Z_{hdc's on xi}(u, v, w)`, or its physical evaluation at `(-u, -v, w)`
/// when `signed` is set.
pub fn generating_function(seq: &ColourSequence, point: &CouplingPoint, signed: bool) -> Result<f64> {
    check_guard(seq, ENUMERATION_GUARD)?;
    let sign = if signed { -1.0 } else { 1.0 };
    let (u, v, w) = (sign * point.u, sign * point.v, point.w);
    let mut total = 0.0;
    for_each_config(seq, |cands, idx| {
        total += idx.iter().map(|&i| &cands[i]).fold(1.0, |acc, d| {
            let weight = match d.colour {
                Colour::Blue => u,
                Colour::Red => v,
            };
            acc * weight * w.powi(d.mixed_count as i32)
        });
    });
    Ok(total)
}

/// Exact rational evaluation, used to cross-check the signed sum where terms
/// alternate in sign.
pub fn generating_function_exact(
    seq: &ColourSequence,
    u: &BigRational,
    v: &BigRational,
    w: &BigRational,
    signed: bool,
) -> Result<BigRational> {
    Ok(count_table(seq)?.evaluate_exact(u, v, w, signed))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactValue {
    /// `p/q` in lowest terms.
    pub rational: String,
    pub value: f64,
}

/// [`generating_function_exact`] at the binary values of `point`'s
/// coordinates.
pub fn generating_function_exact_at(
    seq: &ColourSequence,
    point: &CouplingPoint,
    signed: bool,
) -> Result<ExactValue> {
    let exact = |x: f64| {
        BigRational::from_float(x)
            .ok_or_else(|| Error::InvalidArgument(format!("non-finite coordinate {x}")))
    };
    let r = generating_function_exact(seq, &exact(point.u)?, &exact(point.v)?, &exact(point.w)?, signed)?;
    Ok(ExactValue {
        value: num_traits::ToPrimitive::to_f64(&r).unwrap_or(f64::NAN),
        rational: r.to_string(),
    })
}

/// Average of the signed generating function over all `2^N` sequences.
/// Each sequence's count table is built once and evaluated at every point.
pub fn brute_force_mean(len: usize, points: &[CouplingPoint]) -> Result<Vec<f64>> {
    use rayon::prelude::*;

    if len == 0 {
        return Err(Error::EmptySequence);
    }
    if len > 20 {
        return Err(Error::TooLong { len, guard: 20 });
    }
    let per_sequence: Vec<Vec<f64>> = (0..1u64 << len)
        .into_par_iter()
        .map(|bits| {
            let seq = ColourSequence::from_bits(bits, len).unwrap();
            let table = count_table(&seq).unwrap();
            points.iter().map(|p| table.evaluate(p, true)).collect()
        })
        .collect();
    let scale = (len as f64).exp2();
    Ok((0..points.len())
        .map(|j| {
            let column: Vec<f64> = per_sequence.iter().map(|row| row[j]).collect();
            crate::stats::pairwise_sum(&column) / scale
        })
        .collect())
}
