//! Linear subspaces of F_q^n: canonical forms, counting, enumeration, and
//! uniform sampling.
//!
//! A subspace is stored as its reduced-row-echelon basis, which is unique,
//! so equality and hashing are structural. Enumeration walks pivot-column
//! patterns in lexicographic order and fills free entries mixed-radix.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::One;
use rand::Rng;

use crate::ambient::{AmbientSpace, Point};
use crate::gf::{Elem, FieldSpec};
use crate::SeededRng;

/// Default cap on the number of subspaces an enumeration may visit.
pub const DEFAULT_ENUM_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GrassmannError {
    InvalidRange { n: usize, k: usize },
    BudgetExceeded { count: BigUint, budget: u64 },
    Parse(String),
}

impl fmt::Display for GrassmannError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrassmannError::InvalidRange { n, k } => {
                write!(f, "dimension {} out of range for ambient dimension {}", k, n)
            }
            GrassmannError::BudgetExceeded { count, budget } => {
                write!(f, "Grassmannian has {} subspaces, budget is {}", count, budget)
            }
            GrassmannError::Parse(msg) => write!(f, "subspace parse error: {}", msg),
        }
    }
}

impl std::error::Error for GrassmannError {}

/// A k-dimensional linear subspace, held as a k x n RREF basis matrix.
#[derive(Clone)]
pub struct Subspace {
    space: AmbientSpace,
    rows: Vec<Vec<Elem>>,
    pivots: Vec<usize>,
}

impl Subspace {
    /// The zero subspace {0}.
    pub fn zero(space: AmbientSpace) -> Subspace {
        Subspace { space, rows: Vec::new(), pivots: Vec::new() }
    }

    /// The full space.
    pub fn full(space: AmbientSpace) -> Subspace {
        let n = space.n();
        let rows: Vec<Vec<Elem>> = (0..n)
            .map(|i| {
                let mut r = vec![0; n];
                r[i] = 1;
                r
            })
            .collect();
        let pivots = (0..n).collect();
        Subspace { space, rows, pivots }
    }

    /// Span of the given vectors, reduced to canonical form. Zero rows are
    /// dropped, so the dimension is the rank of the input.
    pub fn from_spanning(
        space: AmbientSpace,
        vectors: &[Vec<Elem>],
    ) -> Result<Subspace, GrassmannError> {
        for v in vectors {
            if v.len() != space.n() || v.iter().any(|&c| c as u32 >= space.q()) {
                return Err(GrassmannError::Parse(format!(
                    "vector {:?} is not in F_{}^{}",
                    v,
                    space.q(),
                    space.n()
                )));
            }
        }
        let mut rows: Vec<Vec<Elem>> = vectors.to_vec();
        let pivots = rref(space.field(), &mut rows);
        Ok(Subspace { space, rows, pivots })
    }

    pub(crate) fn from_rref_unchecked(
        space: AmbientSpace,
        rows: Vec<Vec<Elem>>,
        pivots: Vec<usize>,
    ) -> Subspace {
        Subspace { space, rows, pivots }
    }

    pub fn space(&self) -> &AmbientSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// The RREF basis rows.
    pub fn basis(&self) -> &[Vec<Elem>] {
        &self.rows
    }

    /// Strictly increasing pivot columns, one per basis row.
    pub fn pivot_cols(&self) -> &[usize] {
        &self.pivots
    }

    /// True when the basis is in reduced row echelon form with rank dim().
    pub fn is_canonical(&self) -> bool {
        let mut copy = self.rows.clone();
        let pivots = rref(self.space.field(), &mut copy);
        copy == self.rows && pivots == self.pivots
    }

    /// Membership test by reducing x against the basis.
    pub fn contains_point(&self, x: &[Elem]) -> bool {
        let f = self.space.field();
        let mut r = x.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let c = r[p];
            if c != 0 {
                for (ri, &bi) in r.iter_mut().zip(row) {
                    *ri = f.sub(*ri, f.mul(c, bi));
                }
            }
        }
        r.iter().all(|&c| c == 0)
    }

    /// All q^dim member points, in odometer order over basis coefficients.
    pub fn member_points(&self) -> impl Iterator<Item = Point> + '_ {
        let q = self.space.q() as usize;
        let m = self.dim();
        let total = q.pow(m as u32);
        (0..total).map(move |idx| {
            let f = self.space.field();
            let mut acc = self.space.zero_point();
            let mut rest = idx;
            for row in &self.rows {
                let c = (rest % q) as Elem;
                rest /= q;
                if c != 0 {
                    for (a, &b) in acc.iter_mut().zip(row) {
                        *a = f.add(*a, f.mul(c, b));
                    }
                }
            }
            acc
        })
    }

    /// Standard basis vectors at the non-pivot columns, in column order.
    /// Together with the basis rows they span the whole space.
    pub fn extend_to_complement(&self) -> Vec<Point> {
        let n = self.space.n();
        (0..n)
            .filter(|c| !self.pivots.contains(c))
            .map(|c| {
                let mut v = vec![0; n];
                v[c] = 1;
                v
            })
            .collect()
    }
}

impl PartialEq for Subspace {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.rows == other.rows
    }
}

impl Eq for Subspace {}

impl std::hash::Hash for Subspace {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.space.q().hash(state);
        self.space.n().hash(state);
        self.rows.hash(state);
    }
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// Serialization: `G(q,n,k):` then row-major base-10 entries, entries
/// comma-separated within a row, rows separated by `;`.
impl fmt::Display for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G({},{},{}):", self.space.q(), self.space.n(), self.dim())?;
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                write!(f, ";")?;
            }
            for (j, c) in row.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", c)?;
            }
        }
        Ok(())
    }
}

impl FromStr for Subspace {
    type Err = GrassmannError;

    fn from_str(s: &str) -> Result<Subspace, GrassmannError> {
        let bad = |msg: &str| GrassmannError::Parse(msg.to_string());
        let rest = s.strip_prefix("G(").ok_or_else(|| bad("expected G( prefix"))?;
        let (head, body) = rest.split_once("):").ok_or_else(|| bad("expected ):"))?;
        let parts: Vec<&str> = head.split(',').collect();
        if parts.len() != 3 {
            return Err(bad("expected G(q,n,k)"));
        }
        let q: u32 = parts[0].trim().parse().map_err(|_| bad("bad q"))?;
        let n: usize = parts[1].trim().parse().map_err(|_| bad("bad n"))?;
        let k: usize = parts[2].trim().parse().map_err(|_| bad("bad k"))?;
        let field = FieldSpec::new(q).map_err(|e| GrassmannError::Parse(e.to_string()))?;
        let space =
            AmbientSpace::new(field, n).map_err(|e| GrassmannError::Parse(e.to_string()))?;
        let mut rows = Vec::new();
        if !body.is_empty() {
            for row_s in body.split(';') {
                let row: Vec<Elem> = row_s
                    .split(',')
                    .map(|t| t.trim().parse::<Elem>().map_err(|_| bad("bad entry")))
                    .collect::<Result<_, _>>()?;
                rows.push(row);
            }
        }
        let sub = Subspace::from_spanning(space, &rows)?;
        if sub.dim() != k {
            return Err(bad(&format!("declared k={} but rank is {}", k, sub.dim())));
        }
        Ok(sub)
    }
}

/// In-place reduction to RREF; returns the pivot columns. Zero rows are
/// removed, so `rows.len()` afterwards is the rank.
pub(crate) fn rref(field: &FieldSpec, rows: &mut Vec<Vec<Elem>>) -> Vec<usize> {
    let n = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0usize;
    for col in 0..n {
        let Some(pr) = (r..rows.len()).find(|&i| rows[i][col] != 0) else {
            continue;
        };
        rows.swap(r, pr);
        let lead = rows[r][col];
        if lead != 1 {
            let inv = field.inv(lead).expect("nonzero pivot");
            for c in rows[r].iter_mut() {
                *c = field.mul(inv, *c);
            }
        }
        for i in 0..rows.len() {
            if i != r && rows[i][col] != 0 {
                let factor = rows[i][col];
                let (head, tail) = rows.split_at_mut(r.max(i));
                let (src, dst) = if i < r { (&tail[0], &mut head[i]) } else { (&head[r], &mut tail[0]) };
                for (d, &s) in dst.iter_mut().zip(src.iter()) {
                    *d = field.sub(*d, field.mul(factor, s));
                }
            }
        }
        pivots.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    debug_assert_eq!(rows.len(), pivots.len());
    pivots
}

/// The Gaussian binomial coefficient: the number of k-dimensional subspaces
/// of F_q^n, computed exactly as
/// prod_{i<k} (q^n - q^i) / prod_{i<k} (q^k - q^i).
pub fn gaussian_binomial(n: usize, k: usize, q: u32) -> Result<BigUint, GrassmannError> {
    if k > n || q < 2 {
        return Err(GrassmannError::InvalidRange { n, k });
    }
    let q = BigUint::from(q);
    let qn = q.pow(n as u32);
    let qk = q.pow(k as u32);
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    let mut qi = BigUint::one();
    for _ in 0..k {
        num *= &qn - &qi;
        den *= &qk - &qi;
        qi *= &q;
    }
    Ok(num / den)
}

/// Number of k-dimensional subspaces containing a fixed l-dimensional one.
pub fn count_containing(n: usize, k: usize, l: usize, q: u32) -> Result<BigUint, GrassmannError> {
    if l > k || k > n {
        return Err(GrassmannError::InvalidRange { n, k });
    }
    gaussian_binomial(n - l, k - l, q)
}

/// Deterministic stream of every k-dimensional subspace, in lexicographic
/// order of (pivot-column pattern, free entries).
pub fn enumerate_grassmannian(
    space: &AmbientSpace,
    k: usize,
) -> Result<GrassmannianIter, GrassmannError> {
    enumerate_grassmannian_with_budget(space, k, DEFAULT_ENUM_BUDGET)
}

pub fn enumerate_grassmannian_with_budget(
    space: &AmbientSpace,
    k: usize,
    budget: u64,
) -> Result<GrassmannianIter, GrassmannError> {
    let n = space.n();
    let count = gaussian_binomial(n, k, space.q())?;
    if count > BigUint::from(budget) {
        return Err(GrassmannError::BudgetExceeded { count, budget });
    }
    Ok(GrassmannianIter::new(space.clone(), k))
}

pub struct GrassmannianIter {
    space: AmbientSpace,
    k: usize,
    /// Current pivot-column pattern; empty pattern means k = 0.
    pattern: Vec<usize>,
    /// Free coordinates (row, col) for the current pattern, row-major.
    free: Vec<(usize, usize)>,
    /// Odometer over the free coordinates, last digit least significant.
    values: Vec<Elem>,
    done: bool,
}

impl GrassmannianIter {
    fn new(space: AmbientSpace, k: usize) -> GrassmannianIter {
        let pattern: Vec<usize> = (0..k).collect();
        let mut it = GrassmannianIter { space, k, pattern, free: Vec::new(), values: Vec::new(), done: false };
        it.reset_free();
        it
    }

    fn reset_free(&mut self) {
        self.free.clear();
        for (i, &p) in self.pattern.iter().enumerate() {
            for c in p + 1..self.space.n() {
                if !self.pattern.contains(&c) {
                    self.free.push((i, c));
                }
            }
        }
        self.values = vec![0; self.free.len()];
    }

    fn current(&self) -> Subspace {
        let n = self.space.n();
        let mut rows: Vec<Vec<Elem>> = self
            .pattern
            .iter()
            .map(|&p| {
                let mut r = vec![0; n];
                r[p] = 1;
                r
            })
            .collect();
        for (&(i, c), &v) in self.free.iter().zip(&self.values) {
            rows[i][c] = v;
        }
        Subspace::from_rref_unchecked(self.space.clone(), rows, self.pattern.clone())
    }

    /// Advances the free-entry odometer; false when it wraps.
    fn advance_values(&mut self) -> bool {
        let q = self.space.q() as u32;
        for v in self.values.iter_mut().rev() {
            if (*v as u32) + 1 < q {
                *v += 1;
                return true;
            }
            *v = 0;
        }
        false
    }

    /// Next k-combination of 0..n in lexicographic order; false at the end.
    fn advance_pattern(&mut self) -> bool {
        let n = self.space.n();
        let k = self.k;
        if k == 0 {
            return false;
        }
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.pattern[i] < n - k + i {
                self.pattern[i] += 1;
                for j in i + 1..k {
                    self.pattern[j] = self.pattern[j - 1] + 1;
                }
                self.reset_free();
                return true;
            }
        }
        false
    }
}

impl Iterator for GrassmannianIter {
    type Item = Subspace;

    fn next(&mut self) -> Option<Subspace> {
        if self.done {
            return None;
        }
        let out = self.current();
        if !self.advance_values() && !self.advance_pattern() {
            self.done = true;
        }
        Some(out)
    }
}

/// Draws a uniformly random k-dimensional subspace by rejection: random k x n
/// matrices until one has rank k, then reduce to RREF. Every subspace has the
/// same number of rank-k spanning matrices, so acceptance is exactly uniform;
/// expected trials are below 4 for all q >= 2.
pub fn sample_uniform_subspace(
    space: &AmbientSpace,
    k: usize,
    rng: &mut SeededRng,
) -> Result<Subspace, GrassmannError> {
    let n = space.n();
    if k > n {
        return Err(GrassmannError::InvalidRange { n, k });
    }
    let q = space.q();
    loop {
        let mut rows: Vec<Vec<Elem>> = (0..k)
            .map(|_| (0..n).map(|_| rng.gen_range(0..q) as Elem).collect())
            .collect();
        let pivots = rref(space.field(), &mut rows);
        if rows.len() == k {
            return Ok(Subspace::from_rref_unchecked(space.clone(), rows, pivots));
        }
    }
}
