//! Commutators `[T, b] f = b * T f - T(b f)` and operator-norm lower bounds.

use log::debug;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ball::Domain;
use crate::error::{Error, Result};
use crate::function::PointFunction;
use crate::maximal::{check_gamma, check_p, fractional_maximal, hl_maximal, sharp_maximal};
use crate::norms::{MorreyEvaluator, MorreyParams};
use crate::scalar::Scalar;

/// The operators that get commutated with a symbol.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CommutedOperator<T> {
    Hl { p: T },
    Sharp,
    Fractional { gamma: T },
}

impl<T: Scalar> CommutedOperator<T> {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CommutedOperator::Hl { p } => check_p(p),
            CommutedOperator::Sharp => Ok(()),
            CommutedOperator::Fractional { gamma } => check_gamma(gamma),
        }
    }

    pub fn apply(&self, domain: &Domain<T>, f: &PointFunction<T>) -> PointFunction<T> {
        match *self {
            CommutedOperator::Hl { p } => hl_maximal(domain, f, p).expect("validated"),
            CommutedOperator::Sharp => sharp_maximal(domain, f),
            CommutedOperator::Fractional { gamma } => fractional_maximal(domain, f, gamma).expect("validated"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommutatorSpec<T> {
    pub operator: CommutedOperator<T>,
    pub symbol: PointFunction<T>,
}

impl<T: Scalar> CommutatorSpec<T> {
    pub fn new(operator: CommutedOperator<T>, symbol: PointFunction<T>) -> Result<Self> {
        operator.validate()?;
        Ok(Self { operator, symbol })
    }
}

/// `[T, b] f = b * T f - T(b f)`.
pub fn commutator<T: Scalar>(domain: &Domain<T>, spec: &CommutatorSpec<T>, f: &PointFunction<T>) -> PointFunction<T> {
    let tf = spec.operator.apply(domain, f);
    let tbf = spec.operator.apply(domain, &spec.symbol.mul(f));
    spec.symbol.mul(&tf).sub(&tbf)
}

/// A labelled test input for operator-norm estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyMember<T> {
    pub label: String,
    pub function: PointFunction<T>,
    pub is_indicator: bool,
}

/// Every ball indicator, then `b`, `|b|`, `b-`, then `random_count` seeded sign patterns.
pub fn default_family<T: Scalar>(
    domain: &Domain<T>,
    b: &PointFunction<T>,
    seed: u64,
    random_count: usize,
) -> Vec<FamilyMember<T>> {
    let mut family: Vec<FamilyMember<T>> = (0..domain.balls().len())
        .map(|i| FamilyMember {
            label: format!("indicator:{i}"),
            function: PointFunction::indicator(domain, i).expect("index in range"),
            is_indicator: true,
        })
        .collect();
    for (label, function) in [("b", b.clone()), ("|b|", b.abs()), ("b-", b.neg_part())] {
        family.push(FamilyMember {
            label: label.to_string(),
            function,
            is_indicator: false,
        });
    }
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..random_count {
        family.push(FamilyMember {
            label: format!("random_pm:{i}"),
            function: PointFunction::random_pm(domain.len(), seeds.next_u64()),
            is_indicator: false,
        });
    }
    family
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OpnormBound<T> {
    /// `max ||Tf||_out / ||f||_in` over the family.
    pub value: T,
    pub best_member: String,
    /// The same maximum over indicator members only.
    pub indicator_sup: T,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Lower bound on the norm of `operator` from `in_params` to `out_params`.
///
/// Members with zero input norm are skipped with a warning.
pub fn opnorm_lower_bound_with<T, F>(
    domain: &Domain<T>,
    in_params: &MorreyParams<T>,
    out_params: &MorreyParams<T>,
    family: &[FamilyMember<T>],
    operator: F,
) -> Result<OpnormBound<T>>
where
    T: Scalar,
    F: Fn(&PointFunction<T>) -> PointFunction<T> + Sync,
{
    let input = MorreyEvaluator::new(domain, in_params);
    let output = MorreyEvaluator::new(domain, out_params);
    let ratios: Vec<Option<T>> = family
        .par_iter()
        .map(|member| {
            let denom = input.norm(&member.function);
            if denom <= T::zero() {
                return None;
            }
            Some(output.norm(&operator(&member.function)) / denom)
        })
        .collect();
    let mut bound = OpnormBound {
        value: T::neg_infinity(),
        best_member: String::new(),
        indicator_sup: T::zero(),
        evaluated: 0,
        skipped: 0,
    };
    for (member, ratio) in family.iter().zip(ratios) {
        match ratio {
            None => {
                debug!("skipping family member {} with zero input norm", member.label);
                bound.skipped += 1;
            }
            Some(r) => {
                bound.evaluated += 1;
                if r > bound.value {
                    bound.value = r;
                    bound.best_member = member.label.clone();
                }
                if member.is_indicator && r > bound.indicator_sup {
                    bound.indicator_sup = r;
                }
            }
        }
    }
    if bound.evaluated == 0 {
        return Err(Error::EmptyFamily);
    }
    Ok(bound)
}

pub fn opnorm_lower_bound<T: Scalar>(
    domain: &Domain<T>,
    spec: &CommutatorSpec<T>,
    in_params: &MorreyParams<T>,
    out_params: &MorreyParams<T>,
    family: &[FamilyMember<T>],
) -> Result<OpnormBound<T>> {
    opnorm_lower_bound_with(domain, in_params, out_params, family, |f| commutator(domain, spec, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_grid_1d, Masses};
    use crate::weights::Weight;

    fn x4() -> Domain<f64> {
        Domain::new(build_grid_1d(4, Masses::Uniform(1.0), 1.0).unwrap())
    }

    #[test]
    fn nonnegative_constant_symbol_commutes() {
        let d = x4();
        let spec = CommutatorSpec::new(CommutedOperator::Hl { p: 2.0 }, PointFunction::constant(4, 3.0)).unwrap();
        let f = PointFunction::new(vec![1.0, -2.0, 0.5, 4.0]).unwrap();
        let c = commutator(&d, &spec, &f);
        assert!(c.values().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn negative_constant_symbol_doubles() {
        let d = x4();
        let spec = CommutatorSpec::new(CommutedOperator::Hl { p: 1.0 }, PointFunction::constant(4, -2.0)).unwrap();
        let f = PointFunction::new(vec![1.0, 0.0, 0.5, 4.0]).unwrap();
        let c = commutator(&d, &spec, &f);
        let m = hl_maximal(&d, &f, 1.0).unwrap();
        for x in 0..4 {
            assert!((c[x] - (-4.0) * m[x]).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_norm_members_are_skipped() {
        let d = x4();
        let params = MorreyParams::one_weight(2.0, 0.5, Weight::uniform(4)).unwrap();
        let spec = CommutatorSpec::new(CommutedOperator::Sharp, PointFunction::constant(4, 1.0)).unwrap();
        let family = vec![FamilyMember {
            label: "zero".into(),
            function: PointFunction::zeros(4),
            is_indicator: false,
        }];
        assert_eq!(
            opnorm_lower_bound(&d, &spec, &params, &params, &family),
            Err(Error::EmptyFamily)
        );
    }

    #[test]
    fn family_layout() {
        let d = x4();
        let b = PointFunction::new(vec![0.0, -1.0, 1.0, 1.0]).unwrap();
        let fam = default_family(&d, &b, 3, 2);
        assert_eq!(fam.len(), 9 + 3 + 2);
        assert_eq!(fam.iter().filter(|m| m.is_indicator).count(), 9);
        assert_eq!(fam, default_family(&d, &b, 3, 2));
    }
}
