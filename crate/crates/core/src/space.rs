//! Finite quasi-metric measure spaces and their constructors.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::scalar::Scalar;

/// Default cap on the number of leaves an ultrametric tree may have.
pub const DEFAULT_POINT_BUDGET: usize = 4096;

/// Default dilation factors probed when fitting the upper dimension.
pub const DEFAULT_LAMBDA_GRID: [f64; 6] = [1.5, 2.0, 3.0, 4.0, 6.0, 8.0];

/// Point masses: one value for every point, or an explicit list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Masses {
    Uniform(f64),
    Explicit(Vec<f64>),
}

impl Default for Masses {
    fn default() -> Self {
        Masses::Uniform(1.0)
    }
}

impl Masses {
    fn resolve<T: Scalar>(&self, n: usize) -> Result<Vec<T>> {
        let values = match self {
            Masses::Uniform(m) => vec![*m; n],
            Masses::Explicit(v) => {
                if v.len() != n {
                    return Err(Error::Length {
                        expected: n,
                        got: v.len(),
                    });
                }
                v.clone()
            }
        };
        check_masses(&values)?;
        Ok(values.into_iter().map(T::of).collect())
    }
}

fn check_masses(values: &[f64]) -> Result<()> {
    match values.iter().position(|m| !(m.is_finite() && *m > 0.0)) {
        Some(index) => Err(Error::NonPositiveMass {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

/// How a space was produced; carried along in its serialized form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Builder {
    Grid1d {
        n: usize,
        theta: f64,
        masses: Masses,
    },
    UltrametricTree {
        depth: u32,
        arity: u32,
        masses: Masses,
    },
    Explicit,
}

/// A finite set of points with a quasi-metric and strictly positive point masses.
#[derive(Clone, Debug)]
pub struct QuasiMetricSpace<T> {
    n: usize,
    dist: Vec<T>,
    mass: Vec<T>,
    a0: T,
    builder: Builder,
}

impl<T: Scalar> QuasiMetricSpace<T> {
    /// Validates the quasi-metric axioms and computes the smallest quasi-triangle constant.
    pub fn from_parts(dist: Vec<Vec<T>>, mass: Vec<T>, builder: Builder) -> Result<Self> {
        let n = mass.len();
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        if dist.len() != n || dist.iter().any(|row| row.len() != n) {
            return Err(Error::DistanceShape { n });
        }
        let masses: Vec<f64> = mass.iter().map(|m| m.to_f64_lossy()).collect();
        check_masses(&masses)?;
        let flat: Vec<T> = dist.into_iter().flatten().collect();
        let mut space = Self {
            n,
            dist: flat,
            mass,
            a0: T::one(),
            builder,
        };
        space.a0 = verify_quasi_triangle(&space)?;
        Ok(space)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dist(&self, x: usize, y: usize) -> T {
        self.dist[x * self.n + y]
    }

    pub fn row(&self, x: usize) -> &[T] {
        &self.dist[x * self.n..(x + 1) * self.n]
    }

    pub fn mass(&self) -> &[T] {
        &self.mass
    }

    pub fn total_mass(&self) -> T {
        self.mass.iter().copied().sum()
    }

    pub fn a0(&self) -> T {
        self.a0
    }

    pub fn builder(&self) -> &Builder {
        &self.builder
    }

    /// Measure of the open ball `{y : d(x,y) < r}`.
    pub fn ball_measure(&self, x: usize, r: T) -> T {
        self.row(x)
            .iter()
            .zip(&self.mass)
            .filter(|(d, _)| **d < r)
            .map(|(_, m)| *m)
            .sum()
    }
}

/// Points `0..n` on a line with `d(i,j) = |i-j|^theta`.
pub fn build_grid_1d<T: Scalar>(n: usize, masses: Masses, theta: f64) -> Result<QuasiMetricSpace<T>> {
    if n == 0 {
        return Err(Error::EmptySpace);
    }
    if !(theta >= 1.0) || !theta.is_finite() {
        return Err(Error::MetricExponent(theta));
    }
    let mass = masses.resolve::<T>(n)?;
    let exponent = T::of(theta);
    let dist = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let gap = T::of(i.abs_diff(j) as f64);
                    if theta == 1.0 {
                        gap
                    } else {
                        gap.powf(exponent)
                    }
                })
                .collect()
        })
        .collect();
    QuasiMetricSpace::from_parts(dist, mass, Builder::Grid1d { n, theta, masses })
}

/// Leaves of a complete `arity`-ary tree of the given depth, in depth-first order.
///
/// Two leaves whose lowest common ancestor sits at depth `l` are at distance
/// `arity^(-l)`, so siblings under the root are at distance 1.
pub fn build_ultrametric_tree<T: Scalar>(
    depth: u32,
    arity: u32,
    masses: Masses,
    point_budget: usize,
) -> Result<QuasiMetricSpace<T>> {
    if depth < 1 || arity < 2 {
        return Err(Error::TreeShape { depth, arity });
    }
    let n = (arity as usize)
        .checked_pow(depth)
        .filter(|&n| n <= point_budget)
        .ok_or(Error::PointBudget {
            arity,
            depth,
            budget: point_budget,
        })?;
    let mass = masses.resolve::<T>(n)?;
    let base = T::of(arity as f64);
    let digits = |mut i: usize| {
        let mut out = vec![0usize; depth as usize];
        for slot in out.iter_mut().rev() {
            *slot = i % arity as usize;
            i /= arity as usize;
        }
        out
    };
    let paths: Vec<Vec<usize>> = (0..n).map(digits).collect();
    let dist = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        return T::zero();
                    }
                    let shared = paths[i]
                        .iter()
                        .zip(&paths[j])
                        .take_while(|(a, b)| a == b)
                        .count();
                    base.powi(-(shared as i32))
                })
                .collect()
        })
        .collect();
    QuasiMetricSpace::from_parts(dist, mass, Builder::UltrametricTree { depth, arity, masses })
}

/// Smallest `A0 >= 1` with `d(x,y) <= A0 (d(x,z) + d(z,y))` over all triples.
///
/// Also checks symmetry, zero diagonal and positivity off the diagonal.
pub fn verify_quasi_triangle<T: Scalar>(space: &QuasiMetricSpace<T>) -> Result<T> {
    let n = space.len();
    for x in 0..n {
        for y in 0..n {
            let d = space.dist(x, y);
            if !d.is_finite() || d < T::zero() {
                return Err(Error::BadDistance {
                    x,
                    y,
                    value: d.to_f64_lossy(),
                });
            }
            if x == y && d != T::zero() {
                return Err(Error::NonzeroDiagonal(x));
            }
            if x != y && d == T::zero() {
                return Err(Error::ZeroDistance { x, y });
            }
            if d != space.dist(y, x) {
                return Err(Error::Asymmetric { x, y });
            }
        }
    }
    let mut a0 = T::one();
    for x in 0..n {
        for y in (x + 1)..n {
            let dxy = space.dist(x, y);
            for z in 0..n {
                let ratio = dxy / (space.dist(x, z) + space.dist(z, y));
                if ratio > a0 {
                    a0 = ratio;
                }
            }
        }
    }
    Ok(a0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DoublingReport<T> {
    pub c_mu: T,
    pub upper_dim: T,
    /// `(center, radius)` attaining `c_mu`.
    pub worst_pair: (usize, T),
}

/// One radius strictly inside each interval on which `r -> (B(x,r), B(x,2r))` is constant.
fn doubling_radii<T: Scalar>(row: &[T]) -> Vec<T> {
    let two = T::of(2.0);
    let mut breaks: Vec<T> = row
        .iter()
        .filter(|d| **d > T::zero())
        .flat_map(|&d| [d, d / two])
        .collect();
    breaks.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    breaks.dedup();
    let mut radii = Vec::with_capacity(breaks.len() + 1);
    let mut prev = T::zero();
    for &b in &breaks {
        radii.push((prev + b) / two);
        prev = b;
    }
    radii.push(if prev > T::zero() { prev * two } else { T::one() });
    radii
}

/// Doubling constant over every distinct `(B(x,r), B(x,2r))` configuration,
/// plus an upper-dimension estimate over `lambda_grid`.
pub fn doubling_constant<T: Scalar>(space: &QuasiMetricSpace<T>, lambda_grid: &[f64]) -> DoublingReport<T> {
    let two = T::of(2.0);
    let mut c_mu = T::one();
    let mut worst = (0, T::zero());
    let per_center: Vec<Vec<T>> = (0..space.len()).map(|x| doubling_radii(space.row(x))).collect();
    for (x, radii) in per_center.iter().enumerate() {
        for &r in radii {
            let ratio = space.ball_measure(x, two * r) / space.ball_measure(x, r);
            if ratio > c_mu {
                c_mu = ratio;
                worst = (x, r);
            }
        }
    }
    if worst.1 == T::zero() {
        worst = (0, per_center[0][0]);
    }
    let mut upper_dim = T::zero();
    for (x, radii) in per_center.iter().enumerate() {
        for &r in radii {
            let inner = space.ball_measure(x, r);
            for &lambda in lambda_grid.iter().filter(|l| **l > 1.0) {
                let lam = T::of(lambda);
                let ratio = space.ball_measure(x, lam * r) / (c_mu * inner);
                let exponent = ratio.ln() / lam.ln();
                if exponent > upper_dim {
                    upper_dim = exponent;
                }
            }
        }
    }
    DoublingReport {
        c_mu,
        upper_dim,
        worst_pair: worst,
    }
}

/// Serialized form of a space, always at full binary64 precision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceDocument {
    pub n: usize,
    pub dist: Vec<Vec<f64>>,
    pub mass: Vec<f64>,
    pub a0: f64,
    pub builder: Builder,
}

impl<T: Scalar> QuasiMetricSpace<T> {
    pub fn to_document(&self) -> SpaceDocument {
        SpaceDocument {
            n: self.n,
            dist: (0..self.n)
                .map(|x| self.row(x).iter().map(|d| d.to_f64_lossy()).collect())
                .collect(),
            mass: self.mass.iter().map(|m| m.to_f64_lossy()).collect(),
            a0: self.a0.to_f64_lossy(),
            builder: self.builder.clone(),
        }
    }

    /// Rebuilds a space; `a0` is recomputed rather than trusted.
    pub fn from_document(doc: &SpaceDocument) -> Result<Self> {
        if doc.n != doc.mass.len() {
            return Err(Error::Length {
                expected: doc.n,
                got: doc.mass.len(),
            });
        }
        let dist = doc
            .dist
            .iter()
            .map(|row| row.iter().map(|&d| T::of(d)).collect())
            .collect();
        let mass = doc.mass.iter().map(|&m| T::of(m)).collect();
        Self::from_parts(dist, mass, doc.builder.clone())
    }
}

pub(crate) fn check_point<T>(space: &QuasiMetricSpace<T>, point: usize) -> Result<()> {
    if point < space.n {
        Ok(())
    } else {
        Err(Error::PointOutOfRange { point, n: space.n })
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(param(name, value, "must be a finite positive number"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, theta: f64) -> QuasiMetricSpace<f64> {
        build_grid_1d(n, Masses::Uniform(1.0), theta).unwrap()
    }

    #[test]
    fn metric_grid_has_unit_constant() {
        assert_eq!(grid(4, 1.0).a0(), 1.0);
    }

    #[test]
    fn squared_grid_constant_matches_triple_sweep() {
        // 0 -> 2 through 1: 4 / (1 + 1)
        assert_eq!(grid(3, 2.0).a0(), 2.0);
    }

    #[test]
    fn single_point_space() {
        let s = grid(1, 1.0);
        assert_eq!(s.len(), 1);
        assert_eq!(s.a0(), 1.0);
        let rep = doubling_constant(&s, &DEFAULT_LAMBDA_GRID);
        assert_eq!(rep.c_mu, 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            build_grid_1d::<f64>(3, Masses::Explicit(vec![1.0, 0.0, 1.0]), 1.0),
            Err(Error::NonPositiveMass { index: 1, .. })
        ));
        assert!(matches!(
            build_grid_1d::<f64>(3, Masses::Uniform(1.0), 0.5),
            Err(Error::MetricExponent(_))
        ));
        assert!(matches!(
            build_ultrametric_tree::<f64>(20, 2, Masses::Uniform(1.0), 1000),
            Err(Error::PointBudget { .. })
        ));
        assert!(matches!(
            build_ultrametric_tree::<f64>(0, 2, Masses::Uniform(1.0), 1000),
            Err(Error::TreeShape { .. })
        ));
    }

    #[test]
    fn zero_off_diagonal_distance_is_rejected() {
        let dist = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        assert!(matches!(
            QuasiMetricSpace::from_parts(dist, vec![1.0, 1.0], Builder::Explicit),
            Err(Error::ZeroDistance { x: 0, y: 1 })
        ));
    }

    #[test]
    fn tree_distances() {
        let t = build_ultrametric_tree::<f64>(1, 2, Masses::Uniform(1.0), 64).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.dist(0, 1), 1.0);
        let t = build_ultrametric_tree::<f64>(2, 2, Masses::Uniform(1.0), 64).unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(t.dist(0, 1), 0.5);
        assert_eq!(t.dist(0, 2), 1.0);
        assert_eq!(t.dist(1, 3), 1.0);
        assert_eq!(t.a0(), 1.0);
    }

    #[test]
    fn x4_doubling_constant() {
        let rep = doubling_constant(&grid(4, 1.0), &DEFAULT_LAMBDA_GRID);
        assert_eq!(rep.c_mu, 3.0);
        assert_eq!(rep.worst_pair, (1, 0.75));
        assert!(rep.upper_dim >= 0.0);
    }

    #[test]
    fn document_round_trip_preserves_bits() {
        let s = build_grid_1d::<f64>(5, Masses::Explicit(vec![0.1, 0.2, 0.3, 1e-7, 3.0]), 1.3).unwrap();
        let text = serde_json::to_string(&s.to_document()).unwrap();
        let doc: SpaceDocument = serde_json::from_str(&text).unwrap();
        let back = QuasiMetricSpace::<f64>::from_document(&doc).unwrap();
        assert_eq!(back.to_document(), s.to_document());
    }
}
