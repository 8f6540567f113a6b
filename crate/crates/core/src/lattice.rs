//! Multi-index bookkeeping on total-degree truncations of `ℕᵈ`.
//!
//! Indices are enumerated in graded order: ascending total degree, ties
//! broken lexicographically ascending. Every truncation of lower degree is
//! therefore a prefix of a higher one, which the rest of the crate relies on
//! when storing per-index data in flat vectors.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// A point `α ∈ ℕᵈ`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("multi-index needs d >= 1 components".into()));
        }
        Ok(Self(components))
    }

    pub fn zero(d: usize) -> Self {
        Self(vec![0; d])
    }

    /// The unit index `ε_j` (0-based direction).
    pub fn unit(d: usize, j: usize) -> Self {
        let mut c = vec![0; d];
        c[j] = 1;
        Self(c)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn components(&self) -> &[u32] {
        &self.0
    }

    /// Total degree `|α|`.
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&c| c as usize).sum()
    }

    /// `α + ε_j`.
    pub fn raised(&self, j: usize) -> Self {
        let mut c = self.0.clone();
        c[j] += 1;
        Self(c)
    }

    /// `α − ε_j`, or `None` when `α_j = 0`.
    pub fn lowered(&self, j: usize) -> Option<Self> {
        if self.0[j] == 0 {
            return None;
        }
        let mut c = self.0.clone();
        c[j] -= 1;
        Some(Self(c))
    }

    /// `ln α! = Σ ln(α_i!)`.
    pub fn ln_factorial(&self) -> f64 {
        self.0.iter().map(|&c| (2..=c).map(|k| (k as f64).ln()).sum::<f64>()).sum()
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// One step of a lattice path: from `from` along direction `direction` (0-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub from: MultiIndex,
    pub direction: usize,
}

/// `binomial(n, k)` as `usize`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// All indices with `|α| ≤ max_degree` in graded order.
pub fn enumerate(d: usize, max_degree: usize) -> Vec<MultiIndex> {
    assert!(d >= 1, "dimension must be positive");
    let mut out = Vec::with_capacity(binomial(max_degree + d, d));
    let mut current = vec![0u32; d];
    for degree in 0..=max_degree {
        compositions(degree as u32, 0, &mut current, &mut out);
    }
    out
}

// Lexicographically ascending compositions of `remaining` into the slots from `slot` on.
fn compositions(remaining: u32, slot: usize, current: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    let d = current.len();
    if slot == d - 1 {
        current[slot] = remaining;
        out.push(MultiIndex(current.clone()));
        return;
    }
    for first in 0..=remaining {
        current[slot] = first;
        compositions(remaining - first, slot + 1, current, out);
    }
    current[slot] = 0;
}

/// Canonical path from `0` to `α`: coordinate 1 is raised fully, then coordinate 2, and so on.
pub fn monotone_path(alpha: &MultiIndex) -> Vec<Step> {
    path_in_order(alpha, 0..alpha.dim())
}

/// Reverse coordinate-major path: the last coordinate is raised first.
pub fn reverse_path(alpha: &MultiIndex) -> Vec<Step> {
    path_in_order(alpha, (0..alpha.dim()).rev())
}

fn path_in_order(alpha: &MultiIndex, order: impl Iterator<Item = usize>) -> Vec<Step> {
    let mut at = MultiIndex::zero(alpha.dim());
    let mut steps = Vec::with_capacity(alpha.degree());
    for j in order {
        for _ in 0..alpha.0[j] {
            steps.push(Step { from: at.clone(), direction: j });
            at = at.raised(j);
        }
    }
    steps
}

/// Finite simplex `{α ∈ ℕᵈ : |α| ≤ max_degree}` with lookup and shift tables.
#[derive(Clone, PartialEq, Eq)]
pub struct Truncation {
    d: usize,
    max_degree: usize,
    indices: Vec<MultiIndex>,
    positions: HashMap<MultiIndex, usize>,
    up: Vec<Vec<Option<usize>>>,
    down: Vec<Vec<Option<usize>>>,
}

impl fmt::Debug for Truncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Truncation(d={}, N={}, len={})", self.d, self.max_degree, self.indices.len())
    }
}

impl Truncation {
    pub fn new(d: usize, max_degree: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension d must be at least 1".into()));
        }
        let indices = enumerate(d, max_degree);
        let positions: HashMap<MultiIndex, usize> = indices.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        let up = (0..d).map(|j| indices.iter().map(|a| positions.get(&a.raised(j)).copied()).collect()).collect();
        let down = (0..d)
            .map(|j| indices.iter().map(|a| a.lowered(j).and_then(|b| positions.get(&b).copied())).collect())
            .collect();
        Ok(Self { d, max_degree, indices, positions, up, down })
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn index(&self, pos: usize) -> &MultiIndex {
        &self.indices[pos]
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.positions.get(alpha).copied()
    }

    /// Position of `α + ε_j`, if inside the truncation.
    #[inline]
    pub fn up(&self, pos: usize, j: usize) -> Option<usize> {
        self.up[j][pos]
    }

    /// Position of `α − ε_j`, if `α_j > 0`.
    #[inline]
    pub fn down(&self, pos: usize, j: usize) -> Option<usize> {
        self.down[j][pos]
    }

    /// Number of indices with degree at most `k` (a prefix of the graded order).
    pub fn prefix_len(&self, k: usize) -> usize {
        binomial(k.min(self.max_degree) + self.d, self.d)
    }
}
