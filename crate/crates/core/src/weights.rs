//! Weights and their Muckenhoupt-type constants.
//!
//! Every sup over balls is evaluated after dividing the weight by its largest
//! value on the ball. The defining products are homogeneous of degree zero, so
//! the normalization does not change them, and a constant weight yields
//! exactly one.

use rayon::prelude::*;
use serde::Serialize;

use crate::ball::{Ball, BallLabel, Domain};
use crate::error::{param, Error, Result};
use crate::function::PointFunction;
use crate::maximal::hl_maximal;
use crate::scalar::Scalar;
use crate::space::{check_point, positive};

/// A strictly positive density with respect to the point masses.
#[derive(Clone, Debug, PartialEq)]
pub struct Weight<T> {
    values: Vec<T>,
}

impl<T: Scalar> Weight<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !(v.is_finite() && *v > T::zero())) {
            return Err(Error::NonPositiveWeight {
                index,
                value: values[index].to_f64_lossy(),
            });
        }
        Ok(Self { values })
    }

    pub fn on(domain: &Domain<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::Length {
                expected: domain.len(),
                got: values.len(),
            });
        }
        Self::new(values)
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            values: vec![T::one(); n],
        }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `omega^e`, still strictly positive.
    pub fn pow(&self, e: T) -> Self {
        Self {
            values: self.values.iter().map(|v| v.powf(e)).collect(),
        }
    }

    pub fn scale(&self, c: T) -> Result<Self> {
        Self::new(self.values.iter().map(|v| *v * c).collect())
    }

    /// `omega(B) = sum_B omega dmu`.
    pub fn measure(&self, domain: &Domain<T>, ball: &Ball<T>) -> T {
        domain.ball_sum(ball, &self.values)
    }

    pub fn ball_measures(&self, domain: &Domain<T>) -> Vec<T> {
        domain.ball_sums(&self.values)
    }

    pub fn as_function(&self) -> PointFunction<T> {
        PointFunction::from_vec_unchecked(self.values.clone())
    }
}

/// `(epsilon + d(center, y))^alpha`.
pub fn gen_power_weight<T: Scalar>(domain: &Domain<T>, center: usize, alpha: f64, epsilon: f64) -> Result<Weight<T>> {
    check_point(domain.space(), center)?;
    positive("epsilon", epsilon)?;
    if !alpha.is_finite() {
        return Err(param("alpha", alpha, "must be finite"));
    }
    let (eps, a) = (T::of(epsilon), T::of(alpha));
    Weight::new(domain.space().row(center).iter().map(|&d| (eps + d).powf(a)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightClassReport<T> {
    pub constant: T,
    pub p: T,
    /// Index of the ball attaining the sup.
    pub witness: usize,
    pub witness_ball: BallLabel,
    /// For `A_1`: the point attaining `max M(omega)/omega`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_point: Option<usize>,
}

/// Largest value of `per_ball`, first index on ties.
fn argmax<T: Scalar>(values: &[T]) -> (usize, T) {
    values
        .iter()
        .copied()
        .enumerate()
        .fold((0, T::neg_infinity()), |best, (i, v)| if v > best.1 { (i, v) } else { best })
}

fn report<T: Scalar>(domain: &Domain<T>, per_ball: &[T], p: T) -> WeightClassReport<T> {
    let (witness, constant) = argmax(per_ball);
    WeightClassReport {
        constant,
        p,
        witness,
        witness_ball: domain.balls()[witness].label(),
        witness_point: None,
    }
}

/// Mean of `phi(omega / max_B omega)` over the ball.
fn normalized_mean<T: Scalar>(domain: &Domain<T>, ball: &Ball<T>, w: &[T], top: T, phi: impl Fn(T) -> T) -> T {
    let mass = domain.mass();
    let s = ball
        .members
        .iter()
        .fold(T::zero(), |acc, &y| acc + phi(w[y] / top) * mass[y]);
    s / ball.measure
}

fn ball_max<T: Scalar>(ball: &Ball<T>, w: &[T]) -> T {
    ball.members.iter().fold(T::zero(), |acc, &y| acc.max(w[y]))
}

fn ball_min<T: Scalar>(ball: &Ball<T>, w: &[T]) -> T {
    ball.members.iter().fold(T::infinity(), |acc, &y| acc.min(w[y]))
}

/// `[omega]_{A_p}`: for `p > 1` the sup over balls of
/// `avg(omega) * avg(omega^(1-p'))^(p-1)`; for `p = 1` the ratio `max M(omega)/omega`.
pub fn ap_constant<T: Scalar>(domain: &Domain<T>, omega: &Weight<T>, p: T) -> Result<WeightClassReport<T>> {
    if !(p >= T::one() && p.is_finite()) {
        return Err(param("p", p.to_f64_lossy(), "must satisfy 1 <= p < inf"));
    }
    Weight::new(omega.values.clone())?;
    let w = omega.values();
    if p == T::one() {
        let m = hl_maximal(domain, &omega.as_function(), T::one())?;
        let (point, constant) = argmax(
            &m.values()
                .iter()
                .zip(w)
                .map(|(a, b)| *a / *b)
                .collect::<Vec<_>>(),
        );
        // the ball realizing M(omega) at the extremal point
        let witness = domain
            .containing(point)
            .iter()
            .copied()
            .find(|&i| {
                let ball = &domain.balls()[i];
                omega.measure(domain, ball) / ball.measure == m[point]
            })
            .unwrap_or_else(|| domain.containing(point)[0]);
        return Ok(WeightClassReport {
            constant,
            p,
            witness,
            witness_ball: domain.balls()[witness].label(),
            witness_point: Some(point),
        });
    }
    let dual = -(p - T::one()).recip(); // 1 - p'
    let per_ball: Vec<T> = domain
        .balls()
        .par_iter()
        .map(|ball| {
            let top = ball_max(ball, w);
            let a = normalized_mean(domain, ball, w, top, |u| u);
            let b = normalized_mean(domain, ball, w, top, |u| u.powf(dual));
            a * b.powf(p - T::one())
        })
        .collect();
    Ok(report(domain, &per_ball, p))
}

/// How the `p = 1` case of the `A_{p,q}` constant treats the sup factor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ApqConvention {
    /// `(avg omega^q)^(1/q) * max_B omega^(-1)`.
    #[default]
    Standard,
    /// The display with exponent `1/p' = 0` on the sup factor and no root on the
    /// average, which reduces to `sup_B avg_B omega^q`.
    Literal,
}

/// `sup_B (avg omega^s)^(1/s) (avg omega^(-t'))^(1/t')` with `1/t + 1/t' = 1`,
/// without any ordering constraint between `s` and `t`. For `t = 1` the second
/// factor is `max_B omega^(-1)`.
pub fn mixed_product<T: Scalar>(domain: &Domain<T>, omega: &Weight<T>, s: T, t: T) -> Result<WeightClassReport<T>> {
    if !(s > T::zero() && s.is_finite()) {
        return Err(param("q", s.to_f64_lossy(), "must be positive"));
    }
    if !(t >= T::one() && t.is_finite()) {
        return Err(param("p", t.to_f64_lossy(), "must satisfy 1 <= p < inf"));
    }
    let w = omega.values();
    let per_ball: Vec<T> = domain
        .balls()
        .par_iter()
        .map(|ball| {
            let top = ball_max(ball, w);
            let first = normalized_mean(domain, ball, w, top, |u| u.powf(s)).powf(s.recip());
            let second = if t == T::one() {
                top / ball_min(ball, w)
            } else {
                let t_dual = t / (t - T::one());
                normalized_mean(domain, ball, w, top, |u| u.powf(-t_dual)).powf(t_dual.recip())
            };
            first * second
        })
        .collect();
    Ok(report(domain, &per_ball, t))
}

/// `[omega]_{A_{p,q}}` for `1 <= p < q`.
pub fn apq_constant<T: Scalar>(domain: &Domain<T>, omega: &Weight<T>, p: T, q: T) -> Result<WeightClassReport<T>> {
    apq_constant_with(domain, omega, p, q, ApqConvention::Standard)
}

pub fn apq_constant_with<T: Scalar>(
    domain: &Domain<T>,
    omega: &Weight<T>,
    p: T,
    q: T,
    convention: ApqConvention,
) -> Result<WeightClassReport<T>> {
    if !(p >= T::one() && p.is_finite()) {
        return Err(param("p", p.to_f64_lossy(), "must satisfy 1 <= p < inf"));
    }
    if !(q > p && q.is_finite()) {
        return Err(param("q", q.to_f64_lossy(), "must satisfy p < q < inf"));
    }
    if p == T::one() && convention == ApqConvention::Literal {
        let wq = omega.pow(q);
        let per_ball: Vec<T> = domain
            .balls()
            .par_iter()
            .map(|ball| wq.measure(domain, ball) / ball.measure)
            .collect();
        return Ok(report(domain, &per_ball, p));
    }
    let mut rep = mixed_product(domain, omega, q, p)?;
    rep.p = p;
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NamedConstant<T> {
    pub name: &'static str,
    /// Class exponent the constant refers to.
    pub exponent: T,
    pub report: WeightClassReport<T>,
}

/// Constants of the weights derived from an `A_{p,q}` weight, for `1 < p < q`:
/// `[omega^q]_{A_t}` with `t = 1 + q/p'`, `[omega^(-p')]_{A_t'}`, the
/// `A_{q,p}` product with the roles of `p` and `q` exchanged,
/// `[omega^p]_{A_p}` and `[omega^q]_{A_q}`.
pub fn derived_weight_report<T: Scalar>(
    domain: &Domain<T>,
    omega: &Weight<T>,
    p: T,
    q: T,
) -> Result<Vec<NamedConstant<T>>> {
    if !(p > T::one() && p.is_finite()) {
        return Err(param("p", p.to_f64_lossy(), "must satisfy 1 < p < inf"));
    }
    if !(q > p && q.is_finite()) {
        return Err(param("q", q.to_f64_lossy(), "must satisfy p < q < inf"));
    }
    let p_dual = p / (p - T::one());
    let t = T::one() + q / p_dual;
    let t_dual = t / (t - T::one());
    let mut swapped = mixed_product(domain, omega, p, q)?;
    swapped.p = q;
    Ok(vec![
        NamedConstant {
            name: "omega^q in A_t",
            exponent: t,
            report: ap_constant(domain, &omega.pow(q), t)?,
        },
        NamedConstant {
            name: "omega^(-p') in A_t'",
            exponent: t_dual,
            report: ap_constant(domain, &omega.pow(-p_dual), t_dual)?,
        },
        NamedConstant {
            name: "omega in A_{q,p}",
            exponent: q,
            report: swapped,
        },
        NamedConstant {
            name: "omega^p in A_p",
            exponent: p,
            report: ap_constant(domain, &omega.pow(p), p)?,
        },
        NamedConstant {
            name: "omega^q in A_q",
            exponent: q,
            report: ap_constant(domain, &omega.pow(q), q)?,
        },
    ])
}
