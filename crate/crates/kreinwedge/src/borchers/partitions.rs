//! Set partitions and the truncated ↔ full recursion
//! W(S) = Σ_{λ ∈ 𝒫(S)} Π_l W^T(λ_l).
//!
//! Functional data are indexed by subsets of {0, …, n−1} encoded as bit
//! masks; a block keeps the internal order of its elements, so a mask fully
//! determines the ordered block.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::testfunctions::C64;

/// Values that can be combined by the recursion.
pub trait PartitionValue: Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {
    fn zero() -> Self;
    fn one() -> Self;
}

impl PartitionValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
}

impl PartitionValue for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
}

pub type PartitionData<V> = BTreeMap<u32, V>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoebiusDirection {
    TruncatedToFull,
    FullToTruncated,
}

pub const MAX_PARTITION_SIZE: usize = 8;

/// All set partitions of the elements of `mask`, each as a list of block
/// masks, via restricted growth strings.
pub fn set_partitions(mask: u32) -> Vec<Vec<u32>> {
    let elems: Vec<u32> = (0..32).filter(|i| mask >> i & 1 == 1).collect();
    let n = elems.len();
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    loop {
        let nblocks = rgs.iter().max().map_or(0, |m| m + 1);
        let mut blocks = vec![0u32; nblocks];
        for (e, b) in elems.iter().zip(&rgs) {
            blocks[*b] |= 1 << e;
        }
        out.push(blocks);
        // Next restricted growth string.
        let mut i = n - 1;
        loop {
            if i == 0 {
                return out;
            }
            let max_prefix = rgs[..i].iter().max().copied().unwrap_or(0);
            if rgs[i] <= max_prefix {
                rgs[i] += 1;
                for r in rgs.iter_mut().skip(i + 1) {
                    *r = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

/// Bell number B_n by the triangle recurrence.
pub fn bell_number(n: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = vec![*row.last().expect("nonempty row")];
        for x in &row {
            let v = next.last().expect("nonempty row") + x;
            next.push(v);
        }
        row = next;
    }
    row[0]
}

/// Perfect matchings of `0..n` as lists of pairs (i, j) with i < j, in a
/// fixed order.
pub fn pairings(n: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(rest: &[usize], acc: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if rest.is_empty() {
            out.push(acc.clone());
            return;
        }
        let first = rest[0];
        for k in 1..rest.len() {
            let second = rest[k];
            let remaining: Vec<usize> = rest[1..].iter().copied().filter(|&x| x != second).collect();
            acc.push((first, second));
            rec(&remaining, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    if n % 2 == 0 {
        let all: Vec<usize> = (0..n).collect();
        rec(&all, &mut Vec::new(), &mut out);
    }
    out
}

fn check_n(n: usize) -> Result<u32> {
    if n > MAX_PARTITION_SIZE {
        return Err(Error::InvalidArgument(format!("partition transform supports n ≤ {MAX_PARTITION_SIZE}, got {n}")));
    }
    Ok(if n == 0 { 0 } else { (1u32 << n) - 1 })
}

fn product<V: PartitionValue>(blocks: &[u32], data: &PartitionData<V>) -> V {
    blocks.iter().fold(V::one(), |acc, b| acc * data.get(b).cloned().unwrap_or_else(V::zero))
}

/// Apply the partition recursion on every nonempty subset of {0..n−1}.
///
/// Missing entries count as zero. The returned map has an entry for every
/// nonempty subset.
pub fn moebius_transform<V: PartitionValue>(values: &PartitionData<V>, direction: MoebiusDirection, n: usize) -> Result<PartitionData<V>> {
    let full = check_n(n)?;
    let mut masks: Vec<u32> = (1..=full).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    let mut out = PartitionData::new();
    match direction {
        MoebiusDirection::TruncatedToFull => {
            for &s in &masks {
                let mut acc = V::zero();
                for blocks in set_partitions(s) {
                    acc = acc + product(&blocks, values);
                }
                out.insert(s, acc);
            }
        }
        MoebiusDirection::FullToTruncated => {
            for &s in &masks {
                let mut acc = values.get(&s).cloned().unwrap_or_else(V::zero);
                for blocks in set_partitions(s) {
                    if blocks.len() > 1 {
                        acc = acc - product(&blocks, &out);
                    }
                }
                out.insert(s, acc);
            }
        }
    }
    Ok(out)
}

/// Polynomial with integer coefficients in variables indexed by u32; used as
/// an exact symbolic placeholder for functional values.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly(pub BTreeMap<Vec<u32>, i64>);

impl Poly {
    pub fn var(i: u32) -> Poly {
        Poly(BTreeMap::from([(vec![i], 1)]))
    }

    pub fn constant(c: i64) -> Poly {
        if c == 0 {
            Poly::default()
        } else {
            Poly(BTreeMap::from([(Vec::new(), c)]))
        }
    }

    pub fn monomial_count(&self) -> usize {
        self.0.len()
    }

    fn add_term(&mut self, mono: Vec<u32>, c: i64) {
        let e = self.0.entry(mono).or_insert(0);
        *e += c;
        if *e == 0 {
            self.0.retain(|_, v| *v != 0);
        }
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(mut self, o: Poly) -> Poly {
        for (m, c) in o.0 {
            self.add_term(m, c);
        }
        self
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(mut self, o: Poly) -> Poly {
        for (m, c) in o.0 {
            self.add_term(m, -c);
        }
        self
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, o: Poly) -> Poly {
        let mut out = Poly::default();
        for (ma, ca) in &self.0 {
            for (mb, cb) in &o.0 {
                let mut m = ma.clone();
                m.extend_from_slice(mb);
                m.sort_unstable();
                out.add_term(m, ca * cb);
            }
        }
        out
    }
}

impl PartitionValue for Poly {
    fn zero() -> Self {
        Poly::default()
    }
    fn one() -> Self {
        Poly::constant(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partitions_of_four() {
        assert_eq!(set_partitions(0b1111).len(), 15);
        assert_eq!(bell_number(4), 15);
        assert_eq!(pairings(4).len(), 3);
        assert_eq!(pairings(6).len(), 15);
    }

    #[test]
    fn two_point_case() {
        let mut wt = PartitionData::new();
        wt.insert(0b01, 2.0);
        wt.insert(0b10, 3.0);
        wt.insert(0b11, 5.0);
        let w = moebius_transform(&wt, MoebiusDirection::TruncatedToFull, 2).unwrap();
        assert_eq!(w[&0b11], 2.0 * 3.0 + 5.0);
    }
}
