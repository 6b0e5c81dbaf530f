//! Finite matroids behind a rank oracle.
//!
//! Matroids are exposed through `rank` only; closure, circuits, bases and
//! hyperplanes are derived queries. Ground sets are capped at 64 elements so
//! subsets are bitmasks.

use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ratio::serde_rational_vec;

/// Maximum ground set size; subsets are `u64` bitmasks.
pub const MAX_GROUND: usize = 64;

/// An element of the ground set, identified by a dense index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Element(pub usize);

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A subset of the ground set as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Subset(pub u64);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn singleton(e: Element) -> Self {
        Subset(1u64 << e.0)
    }

    pub fn full(n: usize) -> Self {
        if n == 64 {
            Subset(u64::MAX)
        } else {
            Subset((1u64 << n) - 1)
        }
    }

    pub fn contains(self, e: Element) -> bool {
        self.0 >> e.0 & 1 == 1
    }

    pub fn insert(self, e: Element) -> Self {
        Subset(self.0 | 1u64 << e.0)
    }

    pub fn remove(self, e: Element) -> Self {
        Subset(self.0 & !(1u64 << e.0))
    }

    pub fn union(self, other: Subset) -> Self {
        Subset(self.0 | other.0)
    }

    pub fn intersect(self, other: Subset) -> Self {
        Subset(self.0 & other.0)
    }

    pub fn minus(self, other: Subset) -> Self {
        Subset(self.0 & !other.0)
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Element> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(Element(i))
            }
        })
    }
}

impl FromIterator<Element> for Subset {
    fn from_iter<I: IntoIterator<Item = Element>>(iter: I) -> Self {
        iter.into_iter()
            .fold(Subset::EMPTY, |acc, e| acc.insert(e))
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Error)]
pub enum MatroidError {
    #[error("ground set is empty")]
    EmptyGround,
    #[error("ground set of size {0} exceeds the {MAX_GROUND}-element cap")]
    GroundTooLarge(usize),
    #[error("element id {id} out of range for ground set of size {n}")]
    ElementOutOfRange { id: usize, n: usize },
    #[error("malformed partition: {0}")]
    MalformedPartition(String),
    #[error("linear matroid vectors have mismatched dimensions")]
    DimensionMismatch,
    #[error("truncation rank {requested} exceeds matroid rank {actual}")]
    TruncationRank { requested: usize, actual: usize },
    #[error("uniform matroid needs k <= n, got k={k}, n={n}")]
    UniformRank { n: usize, k: usize },
}

/// JSON shape for constructing matroids.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatroidSpec {
    Uniform {
        n: usize,
        k: usize,
    },
    Partition {
        parts: Vec<Vec<usize>>,
    },
    Linear {
        vectors: Vec<VectorSpec>,
    },
    Truncate {
        rank: usize,
        inner: Box<MatroidSpec>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VectorSpec(#[serde(with = "serde_rational_vec")] pub Vec<BigRational>);

#[derive(Debug)]
enum Kind {
    Uniform { k: usize },
    Partition { part_of: Vec<usize> },
    Linear { rows: Vec<Vec<BigInt>> },
    Truncated { inner: Box<Matroid>, cap: usize },
}

/// How a subset sits in the independence structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetKind {
    Independent,
    Circuit,
    DependentNonCircuit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub kind: SetKind,
    pub is_basis: bool,
}

/// A flat: a closed set together with its rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flat {
    pub elements: Subset,
    pub rank: usize,
}

/// A finite matroid given by a rank oracle over `0..ground_size()`.
#[derive(Debug)]
pub struct Matroid {
    n: usize,
    kind: Kind,
    rank_cache: Mutex<HashMap<u64, usize>>,
}

impl Matroid {
    pub fn uniform(n: usize, k: usize) -> Result<Self, MatroidError> {
        check_ground(n)?;
        if k > n {
            return Err(MatroidError::UniformRank { n, k });
        }
        Ok(Self::new(n, Kind::Uniform { k }))
    }

    /// Partition matroid with one pick per part; parts must partition `0..n`.
    pub fn partition(parts: &[Vec<usize>]) -> Result<Self, MatroidError> {
        let n: usize = parts.iter().map(|p| p.len()).sum();
        check_ground(n)?;
        let mut part_of = vec![usize::MAX; n];
        for (pi, part) in parts.iter().enumerate() {
            if part.is_empty() {
                return Err(MatroidError::MalformedPartition(format!(
                    "part {pi} is empty"
                )));
            }
            for &e in part {
                if e >= n {
                    return Err(MatroidError::MalformedPartition(format!(
                        "element {e} out of range 0..{n}"
                    )));
                }
                if part_of[e] != usize::MAX {
                    return Err(MatroidError::MalformedPartition(format!(
                        "element {e} appears in two parts"
                    )));
                }
                part_of[e] = pi;
            }
        }
        // Disjointness plus the size count rules out gaps, but check anyway.
        if let Some(e) = part_of.iter().position(|&p| p == usize::MAX) {
            return Err(MatroidError::MalformedPartition(format!(
                "element {e} is in no part"
            )));
        }
        Ok(Self::new(n, Kind::Partition { part_of }))
    }

    /// Linear matroid of rational vectors; rank is exact linear-algebra rank.
    pub fn linear(vectors: &[Vec<BigRational>]) -> Result<Self, MatroidError> {
        check_ground(vectors.len())?;
        let dim = vectors[0].len();
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(MatroidError::DimensionMismatch);
        }
        // Scale each vector to integers; per-vector scaling preserves rank.
        let rows = vectors
            .iter()
            .map(|v| {
                let lcm = v
                    .iter()
                    .fold(BigInt::from(1), |acc, c| num_integer::lcm(acc, c.denom().clone()));
                v.iter()
                    .map(|c| c.numer() * (&lcm / c.denom()))
                    .collect::<Vec<_>>()
            })
            .collect();
        Ok(Self::new(vectors.len(), Kind::Linear { rows }))
    }

    /// Rank truncation: `r'(A) = min(r(A), cap)`.
    pub fn truncate(inner: Matroid, cap: usize) -> Result<Self, MatroidError> {
        let actual = inner.rank_full();
        if cap > actual {
            return Err(MatroidError::TruncationRank {
                requested: cap,
                actual,
            });
        }
        let n = inner.n;
        Ok(Self::new(
            n,
            Kind::Truncated {
                inner: Box::new(inner),
                cap,
            },
        ))
    }

    pub fn from_spec(spec: &MatroidSpec) -> Result<Self, MatroidError> {
        match spec {
            MatroidSpec::Uniform { n, k } => Self::uniform(*n, *k),
            MatroidSpec::Partition { parts } => Self::partition(parts),
            MatroidSpec::Linear { vectors } => {
                let vecs: Vec<Vec<BigRational>> =
                    vectors.iter().map(|v| v.0.clone()).collect();
                Self::linear(&vecs)
            }
            MatroidSpec::Truncate { rank, inner } => {
                Self::truncate(Self::from_spec(inner)?, *rank)
            }
        }
    }

    fn new(n: usize, kind: Kind) -> Self {
        Matroid {
            n,
            kind,
            rank_cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn ground_set(&self) -> Subset {
        Subset::full(self.n)
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            Kind::Uniform { .. } => "uniform",
            Kind::Partition { .. } => "partition",
            Kind::Linear { .. } => "linear",
            Kind::Truncated { .. } => "truncated",
        }
    }

    fn check_subset(&self, set: Subset) -> Result<(), MatroidError> {
        if !set.is_subset_of(self.ground_set()) {
            let id = set.minus(self.ground_set()).iter().next().unwrap().0;
            return Err(MatroidError::ElementOutOfRange { id, n: self.n });
        }
        Ok(())
    }

    /// Rank of the whole matroid.
    pub fn rank_full(&self) -> usize {
        self.rank_unchecked(self.ground_set())
    }

    pub fn rank(&self, set: Subset) -> Result<usize, MatroidError> {
        self.check_subset(set)?;
        Ok(self.rank_unchecked(set))
    }

    pub(crate) fn rank_unchecked(&self, set: Subset) -> usize {
        match &self.kind {
            Kind::Uniform { k } => set.len().min(*k),
            Kind::Partition { part_of } => {
                let mut hit = 0u64;
                for e in set.iter() {
                    hit |= 1u64 << part_of[e.0];
                }
                hit.count_ones() as usize
            }
            Kind::Linear { rows } => {
                if let Some(&r) = self.rank_cache.lock().unwrap().get(&set.0) {
                    return r;
                }
                let chosen: Vec<&Vec<BigInt>> = set.iter().map(|e| &rows[e.0]).collect();
                let r = bareiss_rank(&chosen);
                self.rank_cache.lock().unwrap().insert(set.0, r);
                r
            }
            Kind::Truncated { inner, cap } => inner.rank_unchecked(set).min(*cap),
        }
    }

    pub fn is_independent(&self, set: Subset) -> Result<bool, MatroidError> {
        Ok(self.rank(set)? == set.len())
    }

    pub fn classify(&self, set: Subset) -> Result<Classification, MatroidError> {
        self.check_subset(set)?;
        let r = self.rank_unchecked(set);
        let size = set.len();
        let kind = if r == size {
            SetKind::Independent
        } else if r == size - 1
            && set
                .iter()
                .all(|e| self.rank_unchecked(set.remove(e)) == size - 1)
        {
            SetKind::Circuit
        } else {
            SetKind::DependentNonCircuit
        };
        Ok(Classification {
            kind,
            is_basis: kind == SetKind::Independent && size == self.rank_full(),
        })
    }

    pub(crate) fn is_circuit_unchecked(&self, set: Subset) -> bool {
        let size = set.len();
        if size == 0 {
            return false;
        }
        self.rank_unchecked(set) == size - 1
            && set
                .iter()
                .all(|e| self.rank_unchecked(set.remove(e)) == size - 1)
    }

    /// `cl(A) = { x : rank(A) = rank(A + x) }`.
    pub fn closure(&self, set: Subset) -> Result<Flat, MatroidError> {
        self.check_subset(set)?;
        Ok(self.closure_unchecked(set))
    }

    pub(crate) fn closure_unchecked(&self, set: Subset) -> Flat {
        let r = self.rank_unchecked(set);
        let mut flat = set;
        for e in self.ground_set().minus(set).iter() {
            if self.rank_unchecked(set.insert(e)) == r {
                flat = flat.insert(e);
            }
        }
        Flat {
            elements: flat,
            rank: r,
        }
    }

    /// Elements whose singleton rank is zero.
    pub fn loops(&self) -> Subset {
        self.closure_unchecked(Subset::EMPTY).elements
    }

    /// All flats of rank `rank_full() - 1`, via closures of independent
    /// `(k-1)`-subsets. Sorted by bitmask for determinism.
    pub fn hyperplanes(&self) -> Vec<Flat> {
        let k = self.rank_full();
        if k == 0 {
            return Vec::new();
        }
        let mut found: Vec<Flat> = Vec::new();
        let mut stack = vec![(Subset::EMPTY, 0usize)];
        while let Some((set, next)) = stack.pop() {
            if set.len() == k - 1 {
                let flat = self.closure_unchecked(set);
                if !found.iter().any(|f| f.elements == flat.elements) {
                    found.push(flat);
                }
                continue;
            }
            for e in next..self.n {
                let ext = set.insert(Element(e));
                if self.rank_unchecked(ext) == ext.len() {
                    stack.push((ext, e + 1));
                }
            }
        }
        found.sort_by_key(|f| f.elements.0);
        found
    }
}

fn check_ground(n: usize) -> Result<(), MatroidError> {
    if n == 0 {
        Err(MatroidError::EmptyGround)
    } else if n > MAX_GROUND {
        Err(MatroidError::GroundTooLarge(n))
    } else {
        Ok(())
    }
}

/// Fraction-free Gaussian elimination rank of integer rows.
fn bareiss_rank(rows: &[&Vec<BigInt>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mut m: Vec<Vec<BigInt>> = rows.iter().map(|r| (*r).clone()).collect();
    let nrows = m.len();
    let ncols = m[0].len();
    let mut prev = BigInt::from(1);
    let mut rank = 0;
    let mut row = 0;
    for col in 0..ncols {
        if row == nrows {
            break;
        }
        let Some(pivot) = (row..nrows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, pivot);
        for r in row + 1..nrows {
            for c in col + 1..ncols {
                let val = (&m[row][col] * &m[r][c] - &m[r][col] * &m[row][c]) / &prev;
                m[r][c] = val;
            }
            m[r][col] = BigInt::zero();
        }
        prev = m[row][col].clone();
        row += 1;
        rank += 1;
    }
    rank
}
