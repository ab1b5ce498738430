//! Ball averages, weighted Morrey norms and BMO norms.

use rayon::prelude::*;

use crate::ball::{Ball, Domain};
use crate::error::{param, Result};
use crate::function::PointFunction;
use crate::maximal::mean_oscillations;
use crate::scalar::{max_of, Scalar};
use crate::weights::Weight;

/// `f_B = (1/mu(B)) sum_B f dmu`.
pub fn ball_average<T: Scalar>(domain: &Domain<T>, f: &PointFunction<T>, ball: &Ball<T>) -> T {
    domain.ball_sum(ball, f.values()) / ball.measure
}

/// Exponents and weights of `L^{p,kappa}_{omega,nu}`: the integrand carries
/// `omega`, the normalizing power `nu(B)^kappa` carries `nu`.
#[derive(Clone, Debug, PartialEq)]
pub struct MorreyParams<T> {
    pub p: T,
    pub kappa: T,
    pub integrand: Weight<T>,
    pub denominator: Weight<T>,
}

impl<T: Scalar> MorreyParams<T> {
    /// Two-weight space; requires `p >= 1` and `0 <= kappa < 1`.
    pub fn two_weight(p: T, kappa: T, integrand: Weight<T>, denominator: Weight<T>) -> Result<Self> {
        if !(kappa >= T::zero() && kappa < T::one()) {
            return Err(param("kappa", kappa.to_f64_lossy(), "must lie in [0, 1)"));
        }
        Self::unchecked_kappa(p, kappa, integrand, denominator)
    }

    /// One-weight space `L^{p,kappa}_omega`.
    pub fn one_weight(p: T, kappa: T, omega: Weight<T>) -> Result<Self> {
        Self::two_weight(p, kappa, omega.clone(), omega)
    }

    /// Accepts any `kappa >= 0`. Target spaces of the fractional theorem have
    /// exponent `kappa q / p`, which can reach 1 even though `kappa < 1`.
    pub fn unchecked_kappa(p: T, kappa: T, integrand: Weight<T>, denominator: Weight<T>) -> Result<Self> {
        if !(p >= T::one() && p.is_finite()) {
            return Err(param("p", p.to_f64_lossy(), "must satisfy 1 <= p < inf"));
        }
        if !(kappa >= T::zero() && kappa.is_finite()) {
            return Err(param("kappa", kappa.to_f64_lossy(), "must be nonnegative"));
        }
        Ok(Self {
            p,
            kappa,
            integrand,
            denominator,
        })
    }
}

/// A Morrey norm with the per-ball normalizations precomputed, for repeated use.
#[derive(Clone, Debug)]
pub struct MorreyEvaluator<'a, T> {
    domain: &'a Domain<T>,
    p: T,
    integrand: Vec<T>,
    /// `nu(B)^(-kappa)` per ball.
    scale: Vec<T>,
}

impl<'a, T: Scalar> MorreyEvaluator<'a, T> {
    pub fn new(domain: &'a Domain<T>, params: &MorreyParams<T>) -> Self {
        let kappa = params.kappa;
        let scale = params
            .denominator
            .ball_measures(domain)
            .into_iter()
            .map(|m| if kappa == T::zero() { T::one() } else { m.powf(-kappa) })
            .collect();
        Self {
            domain,
            p: params.p,
            integrand: params.integrand.values().to_vec(),
            scale,
        }
    }

    /// `(nu(B)^(-kappa) sum_B |f|^p omega dmu)` for every ball, before the root.
    pub fn ball_terms(&self, f: &PointFunction<T>) -> Vec<T> {
        let g: Vec<T> = f
            .values()
            .iter()
            .zip(&self.integrand)
            .map(|(v, w)| self.power(v.abs()) * *w)
            .collect();
        self.domain
            .ball_sums(&g)
            .into_iter()
            .zip(&self.scale)
            .map(|(sum, s)| *s * sum)
            .collect()
    }

    fn power(&self, v: T) -> T {
        if self.p == T::one() {
            v
        } else {
            v.powf(self.p)
        }
    }

    pub(crate) fn root(&self, v: T) -> T {
        if self.p == T::one() {
            v
        } else {
            v.powf(self.p.recip())
        }
    }

    pub fn norm(&self, f: &PointFunction<T>) -> T {
        self.root(max_of(&self.ball_terms(f)).max(T::zero()))
    }

    pub fn domain(&self) -> &'a Domain<T> {
        self.domain
    }
}

/// `sup_B (nu(B)^(-kappa) sum_B |f|^p omega dmu)^(1/p)` over the enumerated balls.
pub fn morrey_norm<T: Scalar>(domain: &Domain<T>, f: &PointFunction<T>, params: &MorreyParams<T>) -> T {
    MorreyEvaluator::new(domain, params).norm(f)
}

/// `sup_B avg_B |b - b_B|`.
pub fn bmo_norm<T: Scalar>(domain: &Domain<T>, b: &PointFunction<T>) -> T {
    max_of(&mean_oscillations(domain, b)).max(T::zero())
}

/// `sup_B min_c avg_B |b - c|`, the minimum taken at a weighted median of `b` on `B`.
pub fn bmo_norm_inf<T: Scalar>(domain: &Domain<T>, b: &PointFunction<T>) -> T {
    let values = b.values();
    let mass = domain.mass();
    let per_ball: Vec<T> = domain
        .balls()
        .par_iter()
        .map(|ball| {
            let mut order = ball.members.clone();
            order.sort_by(|&x, &y| values[x].partial_cmp(&values[y]).expect("finite values"));
            let half = ball.measure / T::of(2.0);
            let mut acc = T::zero();
            let k = order
                .iter()
                .position(|&y| {
                    acc = acc + mass[y];
                    acc >= half
                })
                .unwrap_or(order.len() - 1);
            let objective = |c: T| {
                ball.members
                    .iter()
                    .fold(T::zero(), |s, &y| s + (values[y] - c).abs() * mass[y])
            };
            let lo = k.saturating_sub(1);
            let hi = (k + 1).min(order.len() - 1);
            (lo..=hi)
                .map(|i| objective(values[order[i]]))
                .fold(T::infinity(), T::min)
                / ball.measure
        })
        .collect();
    max_of(&per_ball).max(T::zero())
}
