//! Real-valued functions on the points of a space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ball::Domain;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::{check_point, positive};

#[derive(Clone, Debug, PartialEq)]
pub struct PointFunction<T> {
    values: Vec<T>,
}

impl<T: Scalar> PointFunction<T> {
    /// Rejects non-finite entries.
    pub fn new(values: Vec<T>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { values })
    }

    /// Checks the length against a domain as well.
    pub fn on(domain: &Domain<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::Length {
                expected: domain.len(),
                got: values.len(),
            });
        }
        Self::new(values)
    }

    pub(crate) fn from_vec_unchecked(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn constant(n: usize, c: T) -> Self {
        Self { values: vec![c; n] }
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, T::zero())
    }

    /// `chi_B` for the ball with the given index.
    pub fn indicator(domain: &Domain<T>, ball: usize) -> Result<Self> {
        let ball = domain.ball(ball)?;
        let mut values = vec![T::zero(); domain.len()];
        for &y in &ball.members {
            values[y] = T::one();
        }
        Ok(Self { values })
    }

    /// 1 at points with index `>= threshold_point`, 0 before.
    pub fn step(domain: &Domain<T>, threshold_point: usize) -> Result<Self> {
        check_point(domain.space(), threshold_point)?;
        Ok(Self {
            values: (0..domain.len())
                .map(|y| if y >= threshold_point { T::one() } else { T::zero() })
                .collect(),
        })
    }

    /// `log(epsilon + d(center, y))`.
    pub fn log_dist(domain: &Domain<T>, center: usize, epsilon: f64) -> Result<Self> {
        check_point(domain.space(), center)?;
        positive("epsilon", epsilon)?;
        let eps = T::of(epsilon);
        Ok(Self {
            values: domain.space().row(center).iter().map(|&d| (eps + d).ln()).collect(),
        })
    }

    /// Independent fair `+1 / -1` signs from a seeded ChaCha stream.
    pub fn random_pm(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            values: (0..n)
                .map(|_| if rng.random::<bool>() { T::one() } else { -T::one() })
                .collect(),
        }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, op: impl Fn(T) -> T) -> Self {
        Self {
            values: self.values.iter().map(|&v| op(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, op: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.len(), other.len(), "functions live on different spaces");
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        }
    }

    pub fn abs(&self) -> Self {
        self.map(T::abs)
    }

    /// `b+ = max(b, 0)`.
    pub fn pos_part(&self) -> Self {
        self.map(|v| v.max(T::zero()))
    }

    /// `b- = max(-b, 0)`, so that `b = b+ - b-` and `|b| = b+ + b-`.
    pub fn neg_part(&self) -> Self {
        self.map(|v| (-v).max(T::zero()))
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    pub fn shift(&self, c: T) -> Self {
        self.map(|v| v + c)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|v| *v >= T::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == T::zero())
    }

    /// Zero outside the given ball.
    pub fn restrict(&self, domain: &Domain<T>, ball: usize) -> Result<Self> {
        let ball = domain.ball(ball)?;
        let mut values = vec![T::zero(); self.len()];
        for &y in &ball.members {
            values[y] = self.values[y];
        }
        Ok(Self { values })
    }
}

impl<T> std::ops::Index<usize> for PointFunction<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.values[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parts_of_a_small_function() {
        let b = PointFunction::new(vec![-1.0, 2.0]).unwrap();
        assert_eq!(b.neg_part().values(), &[1.0, 0.0]);
        assert_eq!(b.pos_part().values(), &[0.0, 2.0]);
        assert_eq!(b.pos_part().sub(&b.neg_part()), b);
        assert_eq!(b.sup_norm(), 2.0);
    }

    #[test]
    fn nonnegative_has_zero_negative_part() {
        let b = PointFunction::new(vec![0.0, 3.0, 1.5]).unwrap();
        assert!(b.neg_part().is_zero());
    }

    #[test]
    fn rejects_non_finite() {
        assert_eq!(
            PointFunction::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        );
    }

    #[test]
    fn random_signs_are_seed_determined() {
        let a = PointFunction::<f64>::random_pm(50, 7);
        assert_eq!(a, PointFunction::random_pm(50, 7));
        assert_ne!(a, PointFunction::random_pm(50, 8));
        assert!(a.values().iter().all(|v| v.abs() == 1.0));
    }

    proptest! {
        #[test]
        fn modulus_is_sum_of_parts(values in prop::collection::vec(-1e6f64..1e6, 1..40)) {
            let b = PointFunction::new(values).unwrap();
            let sum = b.pos_part().add(&b.neg_part());
            prop_assert_eq!(sum, b.abs());
        }
    }
}
