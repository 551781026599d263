//! Points of F_q^n, dense integer indexing, and point-set containers.
//!
//! Points are indexed mixed-radix base q with coordinate 0 least significant,
//! so a point set over the whole space is a dense bit array of length q^n.
//! The theorem checkers sweep every center y in the space, which is why the
//! dense layout is used instead of hash sets.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::gf::{Elem, FieldSpec};
use crate::grassmann::Subspace;
use crate::SeededRng;

/// Default cap on q^n (bit-array size) for a newly created space.
pub const DEFAULT_MAX_SPACE: usize = 1 << 24;

/// A point is a length-n coordinate vector over the ambient field.
pub type Point = Vec<Elem>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AmbientError {
    DimensionMismatch { expected: usize, got: usize },
    CoordinateOutOfRange { coord: u32, q: u32 },
    IndexOutOfRange { index: usize, size: usize },
    SizeTooLarge { requested: usize, available: usize },
    SpaceTooLarge { q: u32, n: usize, budget: usize },
}

impl fmt::Display for AmbientError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AmbientError::DimensionMismatch { expected, got } => {
                write!(f, "expected {} coordinates, got {}", expected, got)
            }
            AmbientError::CoordinateOutOfRange { coord, q } => {
                write!(f, "coordinate {} outside [0, {})", coord, q)
            }
            AmbientError::IndexOutOfRange { index, size } => {
                write!(f, "point index {} outside [0, {})", index, size)
            }
            AmbientError::SizeTooLarge { requested, available } => {
                write!(f, "requested {} points, only {} available", requested, available)
            }
            AmbientError::SpaceTooLarge { q, n, budget } => {
                write!(f, "{}^{} exceeds the space budget {}", q, n, budget)
            }
        }
    }
}

impl std::error::Error for AmbientError {}

struct SpaceInner {
    field: FieldSpec,
    n: usize,
    size: usize,
    /// pow[i] = q^i for i in 0..=n.
    pow: Vec<usize>,
}

/// The space F_q^n. Cheap to clone; immutable after construction.
///
/// Dimension 0 is permitted (a single point with no coordinates); it arises
/// as the target of a quotient by the full space.
#[derive(Clone)]
pub struct AmbientSpace {
    inner: Arc<SpaceInner>,
}

impl AmbientSpace {
    pub fn new(field: FieldSpec, n: usize) -> Result<AmbientSpace, AmbientError> {
        AmbientSpace::with_budget(field, n, DEFAULT_MAX_SPACE)
    }

    pub fn with_budget(
        field: FieldSpec,
        n: usize,
        budget: usize,
    ) -> Result<AmbientSpace, AmbientError> {
        let q = field.q() as usize;
        let mut pow = Vec::with_capacity(n + 1);
        let mut size: usize = 1;
        pow.push(1);
        for _ in 0..n {
            size = size
                .checked_mul(q)
                .filter(|&s| s <= budget)
                .ok_or(AmbientError::SpaceTooLarge { q: field.q(), n, budget })?;
            pow.push(size);
        }
        Ok(AmbientSpace { inner: Arc::new(SpaceInner { field, n, size, pow }) })
    }

    pub fn field(&self) -> &FieldSpec {
        &self.inner.field
    }

    pub fn q(&self) -> u32 {
        self.inner.field.q()
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    /// q^n, the number of points.
    pub fn size(&self) -> usize {
        self.inner.size
    }

    /// q^i for i <= n.
    pub fn pow_q(&self, i: usize) -> usize {
        self.inner.pow[i]
    }

    /// Mixed-radix index of a point, coordinate 0 least significant.
    pub fn point_index(&self, x: &[Elem]) -> Result<usize, AmbientError> {
        if x.len() != self.inner.n {
            return Err(AmbientError::DimensionMismatch { expected: self.inner.n, got: x.len() });
        }
        let q = self.q();
        let mut idx = 0usize;
        for &c in x.iter().rev() {
            if c as u32 >= q {
                return Err(AmbientError::CoordinateOutOfRange { coord: c as u32, q });
            }
            idx = idx * q as usize + c as usize;
        }
        Ok(idx)
    }

    /// Index of a point already known to be valid.
    #[inline]
    pub(crate) fn index_unchecked(&self, x: &[Elem]) -> usize {
        let q = self.q() as usize;
        let mut idx = 0usize;
        for &c in x.iter().rev() {
            idx = idx * q + c as usize;
        }
        idx
    }

    /// Inverse of [`point_index`](Self::point_index).
    pub fn index_point(&self, index: usize) -> Point {
        let mut out = vec![0; self.inner.n];
        self.decode_into(index, &mut out);
        out
    }

    #[inline]
    pub fn decode_into(&self, index: usize, out: &mut [Elem]) {
        debug_assert!(index < self.inner.size);
        let q = self.q() as usize;
        let mut rest = index;
        for c in out.iter_mut() {
            *c = (rest % q) as Elem;
            rest /= q;
        }
    }

    pub fn zero_point(&self) -> Point {
        vec![0; self.inner.n]
    }

    /// Coordinate-wise sum.
    pub fn add_points(&self, a: &[Elem], b: &[Elem]) -> Point {
        let f = self.field();
        a.iter().zip(b).map(|(&x, &y)| f.add(x, y)).collect()
    }

    /// Coordinate-wise difference a - b.
    pub fn sub_points(&self, a: &[Elem], b: &[Elem]) -> Point {
        let f = self.field();
        a.iter().zip(b).map(|(&x, &y)| f.sub(x, y)).collect()
    }

    /// Scalar multiple c * a.
    pub fn scale_point(&self, c: Elem, a: &[Elem]) -> Point {
        let f = self.field();
        a.iter().map(|&x| f.mul(c, x)).collect()
    }

    /// All points in increasing index order.
    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.size()).map(move |i| self.index_point(i))
    }

    /// Uniformly random point.
    pub fn random_point(&self, rng: &mut SeededRng) -> Point {
        let idx = rng.gen_range(0..self.size());
        self.index_point(idx)
    }
}

impl PartialEq for AmbientSpace {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.q() == other.q() && self.n() == other.n())
    }
}

impl Eq for AmbientSpace {}

impl fmt::Debug for AmbientSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AmbientSpace(q={}, n={})", self.q(), self.n())
    }
}

/// Dense membership structure over all q^n points, with a cached cardinality.
#[derive(Clone)]
pub struct PointSet {
    space: AmbientSpace,
    words: Vec<u64>,
    len: usize,
}

impl PointSet {
    pub fn new(space: AmbientSpace) -> PointSet {
        let words = vec![0u64; space.size().div_ceil(64)];
        PointSet { space, words, len: 0 }
    }

    pub fn full(space: AmbientSpace) -> PointSet {
        let mut s = PointSet::new(space);
        for i in 0..s.space.size() {
            s.insert(i);
        }
        s
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(
        space: AmbientSpace,
        indices: I,
    ) -> Result<PointSet, AmbientError> {
        let mut s = PointSet::new(space);
        for i in indices {
            if i >= s.space.size() {
                return Err(AmbientError::IndexOutOfRange { index: i, size: s.space.size() });
            }
            s.insert(i);
        }
        Ok(s)
    }

    pub fn space(&self) -> &AmbientSpace {
        &self.space
    }

    /// Number of points in the set.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Inserts by index; returns true if newly added. Panics if out of range.
    pub fn insert(&mut self, index: usize) -> bool {
        assert!(index < self.space.size(), "index {} out of range", index);
        let (w, mask) = (index / 64, 1u64 << (index % 64));
        let newly = self.words[w] & mask == 0;
        if newly {
            self.words[w] |= mask;
            self.len += 1;
        }
        newly
    }

    pub fn insert_point(&mut self, x: &[Elem]) -> Result<bool, AmbientError> {
        let idx = self.space.point_index(x)?;
        Ok(self.insert(idx))
    }

    /// Membership by index. Panics if out of range.
    pub fn contains(&self, index: usize) -> bool {
        assert!(index < self.space.size(), "index {} out of range", index);
        self.words[index / 64] & (1u64 << (index % 64)) != 0
    }

    pub fn contains_point(&self, x: &[Elem]) -> Result<bool, AmbientError> {
        let idx = self.space.point_index(x)?;
        Ok(self.contains(idx))
    }

    /// Indices in increasing order.
    pub fn iter_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &bits)| {
            let base = w * 64;
            BitIter { bits }.map(move |b| base + b)
        })
    }

    /// Points in increasing index order.
    pub fn iter_points(&self) -> impl Iterator<Item = Point> + '_ {
        self.iter_indices().map(|i| self.space.index_point(i))
    }
}

impl PartialEq for PointSet {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.len == other.len && self.words == other.words
    }
}

impl Eq for PointSet {}

impl fmt::Debug for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PointSet(q={}, n={}, |S|={})", self.space.q(), self.space.n(), self.len)
    }
}

struct BitIter {
    bits: u64,
}

impl Iterator for BitIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.bits == 0 {
            return None;
        }
        let b = self.bits.trailing_zeros() as usize;
        self.bits &= self.bits - 1;
        Some(b)
    }
}

/// Uniformly random m-subset of the space, by partial Fisher-Yates over the
/// index range (virtual swaps, O(m) memory).
pub fn random_subset(
    space: &AmbientSpace,
    m: usize,
    rng: &mut SeededRng,
) -> Result<PointSet, AmbientError> {
    let size = space.size();
    if m > size {
        return Err(AmbientError::SizeTooLarge { requested: m, available: size });
    }
    let mut set = PointSet::new(space.clone());
    let mut swapped: HashMap<usize, usize> = HashMap::new();
    for i in 0..m {
        let j = rng.gen_range(i..size);
        let vj = *swapped.get(&j).unwrap_or(&j);
        let vi = *swapped.get(&i).unwrap_or(&i);
        swapped.insert(j, vi);
        set.insert(vj);
    }
    Ok(set)
}

/// Uniformly random m-subset of the affine plane translate + gamma.
pub fn plane_subset(
    space: &AmbientSpace,
    gamma: &Subspace,
    translate: &[Elem],
    m: usize,
    rng: &mut SeededRng,
) -> Result<PointSet, AmbientError> {
    let coset = coset_indices(space, gamma, translate)?;
    if m > coset.len() {
        return Err(AmbientError::SizeTooLarge { requested: m, available: coset.len() });
    }
    let mut picked = coset;
    // Partial Fisher-Yates over the coset's own index vector.
    for i in 0..m {
        let j = rng.gen_range(i..picked.len());
        picked.swap(i, j);
    }
    picked.truncate(m);
    PointSet::from_indices(space.clone(), picked)
}

/// Indices of the coset translate + gamma, in increasing order.
pub fn coset_indices(
    space: &AmbientSpace,
    gamma: &Subspace,
    translate: &[Elem],
) -> Result<Vec<usize>, AmbientError> {
    if gamma.space() != space {
        return Err(AmbientError::DimensionMismatch { expected: space.n(), got: gamma.space().n() });
    }
    space.point_index(translate)?;
    let mut out: Vec<usize> = gamma
        .member_points()
        .map(|g| space.index_unchecked(&space.add_points(translate, &g)))
        .collect();
    out.sort_unstable();
    out
        .windows(2)
        .for_each(|w| debug_assert!(w[0] != w[1], "coset points must be distinct"));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::field_new;
    use rand::SeedableRng;

    fn space(q: u32, n: usize) -> AmbientSpace {
        AmbientSpace::new(field_new(q).unwrap(), n).unwrap()
    }

    #[test]
    fn index_examples() {
        let s = space(3, 2);
        assert_eq!(s.point_index(&[0, 0]).unwrap(), 0);
        assert_eq!(s.point_index(&[2, 1]).unwrap(), 5); // 2 + 1*3
        let s = space(2, 3);
        assert_eq!(s.point_index(&[1, 1, 1]).unwrap(), 7); // 1 + 2 + 4
    }

    #[test]
    fn index_roundtrip_exhaustive() {
        for (q, n) in [(2, 4), (3, 3), (4, 2), (5, 2)] {
            let s = space(q, n);
            for i in 0..s.size() {
                let p = s.index_point(i);
                assert_eq!(s.point_index(&p).unwrap(), i);
            }
        }
    }

    #[test]
    fn index_errors() {
        let s = space(3, 2);
        assert!(matches!(
            s.point_index(&[1, 2, 0]),
            Err(AmbientError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            s.point_index(&[3, 0]),
            Err(AmbientError::CoordinateOutOfRange { .. })
        ));
    }

    #[test]
    fn space_budget_enforced() {
        let f = field_new(2).unwrap();
        assert!(matches!(
            AmbientSpace::with_budget(f, 11, 1 << 10),
            Err(AmbientError::SpaceTooLarge { .. })
        ));
    }

    #[test]
    fn insert_is_idempotent() {
        let s = space(3, 2);
        let mut set = PointSet::new(s);
        assert!(set.insert_point(&[0, 0]).unwrap());
        assert!(!set.insert_point(&[0, 0]).unwrap());
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn empty_and_full() {
        let s = space(2, 2);
        assert_eq!(PointSet::new(s.clone()).len(), 0);
        let full = PointSet::full(s);
        assert_eq!(full.len(), 4);
    }

    #[test]
    fn iteration_in_index_order() {
        let s = space(3, 2);
        let set = PointSet::from_indices(s, [7, 2, 5]).unwrap();
        let got: Vec<usize> = set.iter_indices().collect();
        assert_eq!(got, vec![2, 5, 7]);
    }

    #[test]
    fn random_subset_bounds_and_determinism() {
        let s = space(3, 2);
        let mut rng = SeededRng::seed_from_u64(42);
        assert_eq!(random_subset(&s, 0, &mut rng).unwrap().len(), 0);
        let mut rng = SeededRng::seed_from_u64(42);
        let full = random_subset(&s, 9, &mut rng).unwrap();
        assert_eq!(full.len(), 9);

        let mut r1 = SeededRng::seed_from_u64(42);
        let mut r2 = SeededRng::seed_from_u64(42);
        let a = random_subset(&s, 4, &mut r1).unwrap();
        let b = random_subset(&s, 4, &mut r2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);

        assert!(matches!(
            random_subset(&s, 10, &mut r1),
            Err(AmbientError::SizeTooLarge { .. })
        ));
    }

    #[test]
    fn random_subset_frequency() {
        // Each point should be hit with empirical frequency m/q^n within
        // five standard deviations.
        let s = space(3, 2);
        let (m, trials) = (3usize, 3000usize);
        let mut counts = vec![0usize; s.size()];
        for t in 0..trials {
            let mut rng = SeededRng::seed_from_u64(1000 + t as u64);
            let set = random_subset(&s, m, &mut rng).unwrap();
            for i in set.iter_indices() {
                counts[i] += 1;
            }
        }
        let p = m as f64 / s.size() as f64;
        let mean = trials as f64 * p;
        let sd = (trials as f64 * p * (1.0 - p)).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - mean).abs() <= 5.0 * sd,
                "point {} hit {} times, expected {:.1} +- {:.1}",
                i,
                c,
                mean,
                5.0 * sd
            );
        }
    }
}
