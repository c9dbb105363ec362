use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

/// Exponent vector, one entry per roster variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(SmallVec<[u16; 8]>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(SmallVec::from_elem(0, n))
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut m = Self::zero(n);
        m.0[i] = 1;
        m
    }

    pub fn from_slice(e: &[u16]) -> Self {
        MultiIndex(SmallVec::from_slice(e))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn exps(&self) -> &[u16] {
        &self.0
    }

    pub fn get(&self, i: usize) -> u16 {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, v: u16) {
        self.0[i] = v;
    }

    pub fn add(&self, o: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    /// Lower exponent `i` by one; `None` if it is already zero.
    pub fn dec(&self, i: usize) -> Option<MultiIndex> {
        if self.0[i] == 0 {
            return None;
        }
        let mut m = self.clone();
        m.0[i] -= 1;
        Some(m)
    }

    pub fn inc(&self, i: usize) -> MultiIndex {
        let mut m = self.clone();
        m.0[i] += 1;
        m
    }

    /// Exponents permuted by `perm` (entry `i` moves to `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> MultiIndex {
        let mut m = Self::zero(self.len());
        for (i, &e) in self.0.iter().enumerate() {
            m.0[perm[i]] = e;
        }
        m
    }

    /// Sum of exponents over the listed positions.
    pub fn partial_degree(&self, idx: &[usize]) -> u32 {
        idx.iter().map(|&i| self.0[i] as u32).sum()
    }

    /// All exponent vectors of `n` variables with total degree exactly `d`,
    /// in the canonical order.
    pub fn all_of_degree(n: usize, d: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0u16; n];
        fn rec(i: usize, left: u32, cur: &mut Vec<u16>, out: &mut Vec<MultiIndex>) {
            let n = cur.len();
            if i + 1 == n {
                cur[i] = left as u16;
                out.push(MultiIndex::from_slice(cur));
                return;
            }
            for e in (0..=left).rev() {
                cur[i] = e as u16;
                rec(i + 1, left - e, cur, out);
            }
            cur[i] = 0;
        }
        if n == 0 {
            return out;
        }
        rec(0, d, &mut cur, &mut out);
        out
    }
}

/// Graded lexicographic: lower degree first, then larger exponent on earlier
/// variables first (`x^2 < x y < y^2`).
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
