//! Radial projections pi^y and quotient projections pi_Gamma, with fibers
//! and collision statistics.
//!
//! A radial image is counted over canonical projective directions (the
//! difference vector scaled so its first nonzero coordinate is 1) rather
//! than materialized line point-sets: O(|E|) per center, which is the hot
//! loop of every bound-checker sweep.

use num_bigint::BigUint;

use crate::ambient::{AmbientError, AmbientSpace, Point, PointSet};
use crate::gf::Elem;
use crate::grassmann::Subspace;

/// The set of projective directions realized from a center y.
#[derive(Clone, Debug)]
pub struct RadialImage {
    space: AmbientSpace,
    center: Point,
    /// Point indices of canonical direction vectors, strictly increasing.
    dir_indices: Vec<u32>,
}

impl RadialImage {
    /// Number of distinct lines through the center meeting E \ {y}.
    pub fn size(&self) -> usize {
        self.dir_indices.len()
    }

    pub fn center(&self) -> &[Elem] {
        &self.center
    }

    /// Canonical direction vectors (first nonzero coordinate 1).
    pub fn directions(&self) -> impl Iterator<Item = Point> + '_ {
        self.dir_indices.iter().map(|&i| self.space.index_point(i as usize))
    }
}

/// pi^y(E): the direction classes of x - y over x in E \ {y}.
pub fn radial_projection(e: &PointSet, y: &[Elem]) -> Result<RadialImage, AmbientError> {
    let space = e.space().clone();
    space.point_index(y)?;
    let mut counter = DirectionCounter::new(&space);
    let coords = flatten_points(e);
    let mut indices = counter.collect_indices(&space, &coords, y);
    indices.sort_unstable();
    Ok(RadialImage { space, center: y.to_vec(), dir_indices: indices })
}

/// Scratch state for repeated radial-size counts over many centers.
/// Uses generation stamps so nothing is cleared between centers.
pub(crate) struct DirectionCounter {
    seen: Vec<u32>,
    stamp: u32,
    diff: Vec<Elem>,
}

impl DirectionCounter {
    pub(crate) fn new(space: &AmbientSpace) -> DirectionCounter {
        DirectionCounter { seen: vec![0; space.size()], stamp: 0, diff: vec![0; space.n()] }
    }

    fn bump(&mut self) {
        if self.stamp == u32::MAX {
            self.seen.fill(0);
            self.stamp = 0;
        }
        self.stamp += 1;
    }

    /// |pi^y(E)| where `coords` is E's points flattened n at a time.
    pub(crate) fn count(&mut self, space: &AmbientSpace, coords: &[Elem], y: &[Elem]) -> usize {
        self.bump();
        let n = space.n();
        let f = space.field();
        let mut total = 0usize;
        for x in coords.chunks_exact(n) {
            for (d, (&a, &b)) in self.diff.iter_mut().zip(x.iter().zip(y)) {
                *d = f.sub(a, b);
            }
            let Some(j) = self.diff.iter().position(|&c| c != 0) else {
                continue; // x == y contributes nothing
            };
            let mut idx = space.pow_q(j);
            let s = f.inv(self.diff[j]).expect("nonzero leading coordinate");
            for l in j + 1..n {
                idx += f.mul(s, self.diff[l]) as usize * space.pow_q(l);
            }
            if self.seen[idx] != self.stamp {
                self.seen[idx] = self.stamp;
                total += 1;
            }
        }
        total
    }

    fn collect_indices(&mut self, space: &AmbientSpace, coords: &[Elem], y: &[Elem]) -> Vec<u32> {
        self.bump();
        let n = space.n();
        let f = space.field();
        let mut out = Vec::new();
        for x in coords.chunks_exact(n) {
            for (d, (&a, &b)) in self.diff.iter_mut().zip(x.iter().zip(y)) {
                *d = f.sub(a, b);
            }
            let Some(j) = self.diff.iter().position(|&c| c != 0) else {
                continue;
            };
            let mut idx = space.pow_q(j);
            let s = f.inv(self.diff[j]).expect("nonzero leading coordinate");
            for l in j + 1..n {
                idx += f.mul(s, self.diff[l]) as usize * space.pow_q(l);
            }
            if self.seen[idx] != self.stamp {
                self.seen[idx] = self.stamp;
                out.push(idx as u32);
            }
        }
        out
    }
}

/// E's points flattened into one buffer, n coordinates per point, in index order.
pub(crate) fn flatten_points(e: &PointSet) -> Vec<Elem> {
    let n = e.space().n();
    let mut out = vec![0; e.len() * n];
    for (slot, idx) in out.chunks_exact_mut(n).zip(e.iter_indices()) {
        e.space().decode_into(idx, slot);
    }
    out
}

/// The quotient map x -> x + Gamma, identified with a map onto F_q^t where
/// t = n - dim(Gamma), via the standard-basis completion of Gamma's RREF.
#[derive(Clone, Debug)]
pub struct QuotientMap {
    gamma: Subspace,
    /// Non-pivot columns of gamma's basis, increasing; the target reads its
    /// coordinates at these columns after reduction by gamma.
    completion_cols: Vec<usize>,
    target: AmbientSpace,
}

/// Builds the quotient map for any subspace; the target space has dimension
/// n - dim(gamma) (0 when gamma is the full space).
pub fn quotient_map_new(gamma: Subspace) -> QuotientMap {
    let space = gamma.space().clone();
    let n = space.n();
    let completion_cols: Vec<usize> =
        (0..n).filter(|c| !gamma.pivot_cols().contains(c)).collect();
    let target = AmbientSpace::with_budget(
        space.field().clone(),
        completion_cols.len(),
        space.size().max(1),
    )
    .expect("target is no larger than the source space");
    QuotientMap { gamma, completion_cols, target }
}

impl QuotientMap {
    pub fn gamma(&self) -> &Subspace {
        &self.gamma
    }

    pub fn source(&self) -> &AmbientSpace {
        self.gamma.space()
    }

    pub fn target(&self) -> &AmbientSpace {
        &self.target
    }

    /// Coordinates of x along the completion basis after reducing by gamma:
    /// w_j = x[c_j] - sum_i x[p_i] * row_i[c_j].
    pub fn apply_point(&self, x: &[Elem]) -> Result<Point, AmbientError> {
        self.source().point_index(x)?;
        let mut out = vec![0; self.completion_cols.len()];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    #[inline]
    pub(crate) fn apply_into(&self, x: &[Elem], out: &mut [Elem]) {
        let f = self.source().field();
        for (o, &c) in out.iter_mut().zip(&self.completion_cols) {
            let mut acc = x[c];
            for (row, &p) in self.gamma.basis().iter().zip(self.gamma.pivot_cols()) {
                let a = x[p];
                if a != 0 {
                    acc = f.sub(acc, f.mul(a, row[c]));
                }
            }
            *o = acc;
        }
    }

    /// Index-to-index application.
    pub fn apply_index(&self, index: usize) -> usize {
        let x = self.source().index_point(index);
        let mut out = vec![0; self.completion_cols.len()];
        self.apply_into(&x, &mut out);
        self.target.index_unchecked(&out)
    }

    /// Full source-index -> target-index table.
    pub fn apply_table(&self) -> Vec<u32> {
        let n = self.source().n();
        let mut x = vec![0; n];
        let mut out = vec![0; self.completion_cols.len()];
        (0..self.source().size())
            .map(|i| {
                self.source().decode_into(i, &mut x);
                self.apply_into(&x, &mut out);
                self.target.index_unchecked(&out) as u32
            })
            .collect()
    }

    /// Image set pi_Gamma(S) in the target space.
    pub fn project_set(&self, s: &PointSet) -> PointSet {
        let mut image = PointSet::new(self.target.clone());
        let n = self.source().n();
        let mut x = vec![0; n];
        let mut out = vec![0; self.completion_cols.len()];
        for idx in s.iter_indices() {
            self.source().decode_into(idx, &mut x);
            self.apply_into(&x, &mut out);
            image.insert(self.target.index_unchecked(&out));
        }
        image
    }

    /// The coset mapping to w: exactly q^dim(gamma) points.
    pub fn fiber(&self, w: &[Elem]) -> Result<PointSet, AmbientError> {
        self.target.point_index(w)?;
        let n = self.source().n();
        let mut rep = vec![0; n];
        for (&c, &wc) in self.completion_cols.iter().zip(w) {
            rep[c] = wc;
        }
        let mut out = PointSet::new(self.source().clone());
        for g in self.gamma.member_points() {
            let p = self.source().add_points(&rep, &g);
            out.insert(self.source().index_unchecked(&p));
        }
        debug_assert_eq!(out.len(), self.source().pow_q(self.gamma.dim()));
        Ok(out)
    }

    /// X(w) = |X ∩ fiber(w)| for every target point w, dense by target index.
    /// The counts sum to |X|; the support size equals |project_set(X)|.
    pub fn fiber_counts(&self, x: &PointSet) -> Vec<u64> {
        let mut counts = vec![0u64; self.target.size()];
        let n = self.source().n();
        let mut p = vec![0; n];
        let mut out = vec![0; self.completion_cols.len()];
        for idx in x.iter_indices() {
            self.source().decode_into(idx, &mut p);
            self.apply_into(&p, &mut out);
            counts[self.target.index_unchecked(&out)] += 1;
        }
        counts
    }

    /// Number of unordered pairs of distinct X-points sharing a fiber:
    /// sum over w of C(X(w), 2).
    pub fn collision_count(&self, x: &PointSet) -> BigUint {
        BigUint::from(self.collision_count_u128(x))
    }

    pub(crate) fn collision_count_u128(&self, x: &PointSet) -> u128 {
        self.fiber_counts(x)
            .iter()
            .map(|&c| (c as u128) * (c.saturating_sub(1) as u128) / 2)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::random_subset;
    use crate::gf::field_new;
    use crate::grassmann::{enumerate_grassmannian, sample_uniform_subspace};
    use crate::SeededRng;
    use rand::{Rng, SeedableRng};

    fn space(q: u32, n: usize) -> AmbientSpace {
        AmbientSpace::new(field_new(q).unwrap(), n).unwrap()
    }

    fn set_of(space: &AmbientSpace, pts: &[&[Elem]]) -> PointSet {
        let mut s = PointSet::new(space.clone());
        for p in pts {
            s.insert_point(p).unwrap();
        }
        s
    }

    #[test]
    fn radial_center_only_sees_nothing() {
        let s = space(3, 2);
        let e = set_of(&s, &[&[1, 2]]);
        assert_eq!(radial_projection(&e, &[1, 2]).unwrap().size(), 0);
    }

    #[test]
    fn radial_line_from_off_line_center() {
        let s = space(3, 2);
        let e = set_of(&s, &[&[0, 0], &[1, 0], &[2, 0]]);
        // Off the line: three projectively distinct directions.
        assert_eq!(radial_projection(&e, &[0, 1]).unwrap().size(), 3);
        // On the line: the remaining points are collinear with the center.
        assert_eq!(radial_projection(&e, &[1, 0]).unwrap().size(), 1);
    }

    #[test]
    fn radial_full_space_sees_every_line() {
        for (q, n) in [(2, 2), (3, 2), (2, 3), (4, 2)] {
            let s = space(q, n);
            let e = PointSet::full(s.clone());
            let lines = (s.size() - 1) / (q as usize - 1);
            for y in s.points() {
                assert_eq!(radial_projection(&e, &y).unwrap().size(), lines);
            }
        }
    }

    #[test]
    fn radial_directions_are_canonical() {
        let s = space(5, 2);
        let mut rng = SeededRng::seed_from_u64(4);
        let e = random_subset(&s, 10, &mut rng).unwrap();
        let img = radial_projection(&e, &[2, 3]).unwrap();
        for d in img.directions() {
            let first = d.iter().find(|&&c| c != 0);
            assert_eq!(first, Some(&1));
        }
    }

    #[test]
    fn quotient_by_zero_subspace_is_bijective() {
        let s = space(3, 2);
        let qm = quotient_map_new(Subspace::zero(s.clone()));
        assert_eq!(qm.target().n(), 2);
        let mut seen = std::collections::HashSet::new();
        for i in 0..s.size() {
            assert!(seen.insert(qm.apply_index(i)));
        }
    }

    #[test]
    fn quotient_by_full_space_collapses_everything() {
        let s = space(3, 2);
        let qm = quotient_map_new(Subspace::full(s.clone()));
        assert_eq!(qm.target().n(), 0);
        assert_eq!(qm.target().size(), 1);
        for i in 0..s.size() {
            assert_eq!(qm.apply_index(i), 0);
        }
    }

    #[test]
    fn quotient_example_q3() {
        // gamma = span{(1,0)}: (2,1) and (0,1) share the coset (0,1) + gamma.
        let s = space(3, 2);
        let gamma = Subspace::from_spanning(s.clone(), &[vec![1, 0]]).unwrap();
        let qm = quotient_map_new(gamma);
        assert_eq!(qm.apply_point(&[2, 1]).unwrap(), vec![1]);
        assert_eq!(qm.apply_point(&[0, 1]).unwrap(), vec![1]);
    }

    #[test]
    fn project_set_edges() {
        let s = space(2, 3);
        let gamma = Subspace::from_spanning(s.clone(), &[vec![1, 1, 0]]).unwrap();
        let qm = quotient_map_new(gamma);

        let empty = PointSet::new(s.clone());
        assert!(qm.project_set(&empty).is_empty());

        // One full fiber collapses to a single point.
        let fiber = qm.fiber(&[1, 0]).unwrap();
        assert_eq!(fiber.len(), 2);
        let image = qm.project_set(&fiber);
        assert_eq!(image.len(), 1);

        // The full space surjects onto the full target.
        let full = PointSet::full(s.clone());
        let image = qm.project_set(&full);
        assert_eq!(image.len(), 4);
    }

    #[test]
    fn fiber_constancy_and_partition() {
        let s = space(3, 3);
        let mut rng = SeededRng::seed_from_u64(8);
        let gamma = sample_uniform_subspace(&s, 1, &mut rng).unwrap();
        let qm = quotient_map_new(gamma);
        let mut covered = PointSet::new(s.clone());
        for w in qm.target().points() {
            let fiber = qm.fiber(&w).unwrap();
            assert_eq!(fiber.len(), 3);
            for p in fiber.iter_points() {
                assert_eq!(qm.apply_point(&p).unwrap(), w);
                assert!(covered.insert(s.point_index(&p).unwrap()), "fibers overlap");
            }
        }
        assert_eq!(covered.len(), s.size());
    }

    #[test]
    fn fiber_counts_example() {
        let s = space(2, 2);
        let gamma = Subspace::from_spanning(s.clone(), &[vec![1, 0]]).unwrap();
        let qm = quotient_map_new(gamma);
        let x = set_of(&s, &[&[0, 0], &[1, 0], &[0, 1]]);
        let counts = qm.fiber_counts(&x);
        assert_eq!(counts, vec![2, 1]);
        assert_eq!(counts.iter().sum::<u64>(), 3);
    }

    #[test]
    fn fiber_counts_sum_and_support() {
        let s = space(3, 3);
        let mut rng = SeededRng::seed_from_u64(12);
        for _ in 0..10 {
            let gamma = sample_uniform_subspace(&s, 1, &mut rng).unwrap();
            let qm = quotient_map_new(gamma);
            let x = random_subset(&s, 11, &mut rng).unwrap();
            let counts = qm.fiber_counts(&x);
            assert_eq!(counts.iter().sum::<u64>(), 11);
            let support = counts.iter().filter(|&&c| c > 0).count();
            assert_eq!(support, qm.project_set(&x).len());
        }
    }

    #[test]
    fn collision_count_examples() {
        let s = space(2, 2);
        let gamma = Subspace::from_spanning(s.clone(), &[vec![1, 0]]).unwrap();
        let qm = quotient_map_new(gamma.clone());

        let small = set_of(&s, &[&[0, 0]]);
        assert_eq!(qm.collision_count(&small), BigUint::from(0u32));

        let fiber = qm.fiber(&[0]).unwrap();
        assert_eq!(qm.collision_count(&fiber), BigUint::from(1u32)); // C(2,2)

        // Full plane, 2 fibers of size 2: 2 collisions, for every line gamma.
        let full = PointSet::full(s.clone());
        for g in enumerate_grassmannian(&s, 1).unwrap() {
            let qm = quotient_map_new(g);
            assert_eq!(qm.collision_count(&full), BigUint::from(2u32));
        }
    }

    #[test]
    fn projection_size_bounds() {
        // |S| / q^dim(gamma) <= |pi(S)| <= |S|
        let s = space(3, 3);
        let mut rng = SeededRng::seed_from_u64(21);
        for dim in 0..=3 {
            let gamma = sample_uniform_subspace(&s, dim, &mut rng).unwrap();
            let qm = quotient_map_new(gamma);
            let x = random_subset(&s, 13, &mut rng).unwrap();
            let img = qm.project_set(&x).len();
            assert!(img <= 13);
            assert!(img * s.pow_q(dim) >= 13);
        }
    }

    #[test]
    fn line_collapse_monotonicity_exhaustive_small() {
        // |pi^{pi(y)}(pi(E))| <= |pi^y(E)| for all E, y over tiny spaces.
        for (q, n) in [(2, 2), (2, 3)] {
            let s = space(q, n);
            let size = s.size();
            for dim in 1..n {
                for gamma in enumerate_grassmannian(&s, dim).unwrap() {
                    let qm = quotient_map_new(gamma);
                    for mask in 0..(1u32 << size) {
                        let e = PointSet::from_indices(
                            s.clone(),
                            (0..size).filter(|i| mask >> i & 1 == 1),
                        )
                        .unwrap();
                        let pe = qm.project_set(&e);
                        for y in s.points() {
                            let upstairs = radial_projection(&e, &y).unwrap().size();
                            let w = qm.apply_point(&y).unwrap();
                            let downstairs = radial_projection(&pe, &w).unwrap().size();
                            assert!(
                                downstairs <= upstairs,
                                "q={} n={} mask={:b} y={:?}",
                                q,
                                n,
                                mask,
                                y
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn cauchy_schwarz_consequence_random() {
        // |X|^2 <= |pi(X)| * sum X(w)^2
        let s = space(4, 3);
        let mut rng = SeededRng::seed_from_u64(30);
        for _ in 0..50 {
            let dim = rng.gen_range(0..=3);
            let gamma = sample_uniform_subspace(&s, dim, &mut rng).unwrap();
            let qm = quotient_map_new(gamma);
            let m = rng.gen_range(0..=40);
            let x = random_subset(&s, m, &mut rng).unwrap();
            let counts = qm.fiber_counts(&x);
            let sumsq: u64 = counts.iter().map(|&c| c * c).sum();
            let img = qm.project_set(&x).len() as u64;
            assert!((m as u64 * m as u64) <= img * sumsq || m == 0);
        }
    }
}
