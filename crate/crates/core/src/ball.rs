//! Open quasi-metric balls and the deduplicated ball family of a space.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::bitset::PointSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::QuasiMetricSpace;

/// `B(center, radius) = { y : d(center, y) < radius }`.
#[derive(Clone, Debug)]
pub struct Ball<T> {
    pub center: usize,
    pub radius: T,
    /// Members in ascending index order.
    pub members: Vec<usize>,
    pub set: PointSet,
    pub measure: T,
    /// `Some((lo, hi))` when the members are exactly `lo..=hi`.
    pub span: Option<(usize, usize)>,
}

impl<T: Scalar> Ball<T> {
    fn new(space: &QuasiMetricSpace<T>, center: usize, radius: T) -> Self {
        let members: Vec<usize> = space
            .row(center)
            .iter()
            .enumerate()
            .filter(|(_, d)| **d < radius)
            .map(|(y, _)| y)
            .collect();
        let measure = members.iter().map(|&y| space.mass()[y]).sum();
        let span = match (members.first(), members.last()) {
            (Some(&lo), Some(&hi)) if hi - lo + 1 == members.len() => Some((lo, hi)),
            _ => None,
        };
        Self {
            center,
            radius,
            set: PointSet::from_indices(space.len(), members.iter().copied()),
            members,
            measure,
            span,
        }
    }

    pub fn contains(&self, x: usize) -> bool {
        self.set.contains(x)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_subset_of(&self, other: &Ball<T>) -> bool {
        match (self.span, other.span) {
            (Some((a, b)), Some((c, d))) => c <= a && b <= d,
            _ => self.members.len() <= other.members.len() && self.set.is_subset(&other.set),
        }
    }

    pub fn label(&self) -> BallLabel {
        BallLabel {
            center: self.center,
            radius: self.radius.to_f64_lossy(),
        }
    }
}

/// Serializable `(center, radius)` identification of a ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BallLabel {
    pub center: usize,
    pub radius: f64,
}

/// Radii realizing every distinct member set around `center`: midpoints between
/// consecutive distinct distances, then one radius past the largest.
fn radii_for<T: Scalar>(row: &[T]) -> Vec<T> {
    let mut values: Vec<T> = row.to_vec();
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    values.dedup();
    let two = T::of(2.0);
    let mut radii: Vec<T> = values.windows(2).map(|w| (w[0] + w[1]) / two).collect();
    let max = *values.last().expect("row is nonempty");
    radii.push(if max > T::zero() { max * two } else { T::one() });
    radii
}

/// Every distinct ball, keeping the lexicographically first `(center, radius)`
/// for each member set.
pub fn enumerate_balls<T: Scalar>(space: &QuasiMetricSpace<T>) -> Vec<Ball<T>> {
    let mut seen: HashSet<PointSet> = HashSet::new();
    let mut balls = Vec::new();
    for center in 0..space.len() {
        for radius in radii_for(space.row(center)) {
            let ball = Ball::new(space, center, radius);
            if seen.insert(ball.set.clone()) {
                balls.push(ball);
            }
        }
    }
    balls
}

/// A space together with its enumerated balls and a point-to-ball incidence index.
///
/// Every operator in the crate works against a `Domain`.
#[derive(Clone, Debug)]
pub struct Domain<T> {
    space: QuasiMetricSpace<T>,
    balls: Vec<Ball<T>>,
    containing: Vec<Vec<usize>>,
    index: HashMap<PointSet, usize>,
    contiguous: bool,
    /// Sum of all ball cardinalities.
    incidences: usize,
    /// Recently used `mu(B)^e` tables, keyed by `e`.
    powers: Arc<Mutex<Vec<(T, Arc<Vec<T>>)>>>,
}

impl<T: Scalar> Domain<T> {
    pub fn new(space: QuasiMetricSpace<T>) -> Self {
        let balls = enumerate_balls(&space);
        let mut containing = vec![Vec::new(); space.len()];
        for (i, ball) in balls.iter().enumerate() {
            for &y in &ball.members {
                containing[y].push(i);
            }
        }
        let index = balls
            .iter()
            .enumerate()
            .map(|(i, b)| (b.set.clone(), i))
            .collect();
        let contiguous = balls.iter().all(|b| b.span.is_some());
        let incidences = balls.iter().map(|b| b.len()).sum();
        Self {
            space,
            balls,
            containing,
            index,
            contiguous,
            incidences,
            powers: Arc::default(),
        }
    }

    pub fn space(&self) -> &QuasiMetricSpace<T> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn mass(&self) -> &[T] {
        self.space.mass()
    }

    pub fn balls(&self) -> &[Ball<T>] {
        &self.balls
    }

    pub fn ball(&self, index: usize) -> Result<&Ball<T>> {
        self.balls.get(index).ok_or(Error::BallOutOfRange {
            index,
            count: self.balls.len(),
        })
    }

    /// Indices of the balls containing `x`.
    pub fn containing(&self, x: usize) -> &[usize] {
        &self.containing[x]
    }

    /// True when every ball is an index interval (grids and trees in leaf order).
    pub fn is_contiguous(&self) -> bool {
        self.contiguous
    }

    pub fn find(&self, set: &PointSet) -> Option<usize> {
        self.index.get(set).copied()
    }

    /// The ball equal to the whole space.
    pub fn full_ball(&self) -> usize {
        self.find(&PointSet::from_indices(self.len(), 0..self.len()))
            .expect("the whole space is always a ball")
    }

    /// Sum of `g(y) * mass(y)` over a ball, accumulated in ascending index order.
    #[inline]
    pub fn ball_sum(&self, ball: &Ball<T>, g: &[T]) -> T {
        let mass = self.space.mass();
        match ball.span {
            Some((lo, hi)) => g[lo..=hi]
                .iter()
                .zip(&mass[lo..=hi])
                .fold(T::zero(), |acc, (v, m)| acc + *v * *m),
            None => ball
                .members
                .iter()
                .fold(T::zero(), |acc, &y| acc + g[y] * mass[y]),
        }
    }

    /// `ball_sum` for every ball.
    ///
    /// Contiguous domains use compensated prefix sums, so each ball costs O(1)
    /// and the result is the correctly rounded sum up to a few ulps.
    pub fn ball_sums(&self, g: &[T]) -> Vec<T> {
        use rayon::prelude::*;
        if self.contiguous && self.incidences > 4 * self.len() {
            let prefix = compensated_prefix(g, self.mass());
            return self
                .balls
                .iter()
                .map(|b| {
                    let (lo, hi) = b.span.expect("contiguous domain");
                    prefix_diff(&prefix, lo, hi + 1)
                })
                .collect();
        }
        self.balls.par_iter().map(|b| self.ball_sum(b, g)).collect()
    }

    /// `sum_{lo..=hi} g dmu` on an index interval, via compensated prefix sums.
    pub(crate) fn interval_sums(&self, g: &[T]) -> Vec<(T, T)> {
        compensated_prefix(g, self.mass())
    }

    /// `mu(B)^e` for every ball, cached across calls with the same exponent.
    pub fn measure_powers(&self, e: T) -> Arc<Vec<T>> {
        let mut cache = self.powers.lock().unwrap_or_else(|p| p.into_inner());
        if let Some((_, table)) = cache.iter().find(|(k, _)| *k == e) {
            return table.clone();
        }
        let table: Arc<Vec<T>> = Arc::new(self.balls.iter().map(|b| b.measure.powf(e)).collect());
        if cache.len() >= 8 {
            cache.remove(0);
        }
        cache.push((e, table.clone()));
        table
    }

    /// Sum of all ball cardinalities.
    pub fn incidences(&self) -> usize {
        self.incidences
    }

    /// `out[x] = max { per_ball[i] : ball i contains x }`.
    pub fn sup_over_containing(&self, per_ball: &[T]) -> Vec<T> {
        use rayon::prelude::*;
        let n = self.len();
        if self.contiguous && n * n < self.incidences {
            let spans = self.balls.iter().zip(per_ball).map(|(b, v)| {
                let (lo, hi) = b.span.expect("contiguous domain");
                (lo, hi, *v)
            });
            return interval_sup(0, n, spans);
        }
        (0..n)
            .into_par_iter()
            .map(|x| {
                self.containing[x]
                    .iter()
                    .fold(T::neg_infinity(), |acc, &i| acc.max(per_ball[i]))
            })
            .collect()
    }

}

/// Pointwise max of interval-valued data on `offset..offset + m`, in O(m^2 + items).
///
/// Each item `(lo, hi, v)` raises every point of `lo..=hi` to at least `v`.
pub(crate) fn interval_sup<T: Scalar>(
    offset: usize,
    m: usize,
    items: impl Iterator<Item = (usize, usize, T)>,
) -> Vec<T> {
    let mut table = vec![T::neg_infinity(); m * m];
    for (lo, hi, v) in items {
        let cell = &mut table[(lo - offset) * m + (hi - offset)];
        if v > *cell {
            *cell = v;
        }
    }
    let mut out = vec![T::neg_infinity(); m];
    for lo in 0..m {
        let row = &mut table[lo * m..(lo + 1) * m];
        // suffix max: row[h] becomes the best value over intervals lo..=hi with hi >= h
        for h in (lo..m - 1).rev() {
            if row[h + 1] > row[h] {
                row[h] = row[h + 1];
            }
        }
        for x in lo..m {
            if row[x] > out[x] {
                out[x] = row[x];
            }
        }
    }
    out
}

/// `(hi, lo)` double-word prefix sums of `g * mass`, with `prefix[0] = 0`.
fn compensated_prefix<T: Scalar>(g: &[T], mass: &[T]) -> Vec<(T, T)> {
    let mut out = Vec::with_capacity(g.len() + 1);
    let (mut hi, mut lo) = (T::zero(), T::zero());
    out.push((hi, lo));
    for (v, m) in g.iter().zip(mass) {
        let prod = *v * *m;
        let prod_err = v.mul_add(*m, -prod);
        let (s, e) = two_sum(hi, prod);
        let (h, l) = fast_two_sum(s, e + lo + prod_err);
        hi = h;
        lo = l;
        out.push((hi, lo));
    }
    out
}

/// `sum` over indices `a..b` from a compensated prefix table.
pub(crate) fn prefix_diff<T: Scalar>(prefix: &[(T, T)], a: usize, b: usize) -> T {
    let (ah, al) = prefix[a];
    let (bh, bl) = prefix[b];
    let (s, e) = two_sum(bh, -ah);
    s + (e + (bl - al))
}

fn two_sum<T: Scalar>(a: T, b: T) -> (T, T) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn fast_two_sum<T: Scalar>(a: T, b: T) -> (T, T) {
    let s = a + b;
    (s, b - (s - a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_grid_1d, build_ultrametric_tree, Masses};

    fn x4() -> Domain<f64> {
        Domain::new(build_grid_1d(4, Masses::Uniform(1.0), 1.0).unwrap())
    }

    #[test]
    fn x4_has_nine_balls() {
        let d = x4();
        let mut sets: Vec<Vec<usize>> = d.balls().iter().map(|b| b.members.clone()).collect();
        sets.sort();
        let mut expected = vec![
            vec![0],
            vec![1],
            vec![2],
            vec![3],
            vec![0, 1],
            vec![2, 3],
            vec![0, 1, 2],
            vec![1, 2, 3],
            vec![0, 1, 2, 3],
        ];
        expected.sort();
        assert_eq!(sets, expected);
        assert!(d.is_contiguous());
    }

    #[test]
    fn dedup_keeps_first_center_and_radius() {
        let d = x4();
        let full = d.ball(d.full_ball()).unwrap();
        assert_eq!(full.center, 0);
        let pair = d
            .find(&PointSet::from_indices(4, [2, 3]))
            .map(|i| d.balls()[i].label())
            .unwrap();
        assert_eq!(pair.center, 3);
    }

    #[test]
    fn interval_sup_matches_direct_sweep() {
        let d = Domain::new(build_grid_1d::<f64>(40, Masses::Uniform(1.0), 1.0).unwrap());
        let per_ball: Vec<f64> = (0..d.balls().len()).map(|i| ((i * 7919) % 101) as f64).collect();
        let spans = d.balls().iter().zip(&per_ball).map(|(b, v)| (b.span.unwrap().0, b.span.unwrap().1, *v));
        let fast = interval_sup(0, d.len(), spans);
        for x in 0..d.len() {
            let direct = d.containing(x).iter().map(|&i| per_ball[i]).fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(fast[x], direct);
        }
    }

    #[test]
    fn prefix_sums_are_accurate() {
        let d = Domain::new(build_grid_1d::<f64>(60, Masses::Uniform(0.1), 1.0).unwrap());
        let g: Vec<f64> = (0..60).map(|i| if i % 3 == 0 { 1e8 } else { 1e-3 * i as f64 }).collect();
        let sums = d.ball_sums(&g);
        for (b, s) in d.balls().iter().zip(sums) {
            let exact: f64 = b.members.iter().map(|&y| g[y] * 0.1).sum();
            assert!((s - exact).abs() <= 1e-13 * exact.abs(), "{s} {exact}");
        }
    }

    #[test]
    fn one_point_space_has_one_ball() {
        let d = Domain::new(build_grid_1d::<f64>(1, Masses::Uniform(2.0), 1.0).unwrap());
        assert_eq!(d.balls().len(), 1);
        assert_eq!(d.balls()[0].measure, 2.0);
    }

    #[test]
    fn singletons_are_balls_and_balls_contain_centers() {
        let d = Domain::new(build_ultrametric_tree::<f64>(3, 2, Masses::Uniform(1.0), 64).unwrap());
        for x in 0..d.len() {
            assert!(d.find(&PointSet::from_indices(d.len(), [x])).is_some());
        }
        for b in d.balls() {
            assert!(b.contains(b.center));
            assert!(b.measure > 0.0);
        }
        assert!(d.is_contiguous());
    }
}
