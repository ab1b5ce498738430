//! Condition-(iii) sup-ratios of the four characterization theorems and the
//! matching operator-norm lower bounds.
//!
//! Every ratio is reported in two forms. The *literal* form divides the full
//! Morrey norm of the residual `g_B` by the Morrey norm of `chi_B`, both as
//! suprema over all balls. The *ball-local* form keeps only the ball `B`
//! itself: `((1/W(B)) sum_B |g_B|^s W dmu)^(1/s)` with `W` the integrand weight.
//! The two agree when the supremum in the numerator is attained at `B`; the
//! report carries their largest gap.

use rayon::prelude::*;
use serde::Serialize;

use crate::ball::{BallLabel, Domain};
use crate::commutator::{
    commutator, default_family, opnorm_lower_bound_with, CommutatorSpec, CommutedOperator, OpnormBound,
};
use crate::error::{param, Result};
use crate::function::PointFunction;
use crate::maximal::{
    check_gamma, check_p, fractional_averages, maximal_commutator, power_means, restricted_sup, sharp_maximal,
};
use crate::norms::{bmo_norm, MorreyEvaluator, MorreyParams};
use crate::scalar::Scalar;
use crate::weights::Weight;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum TheoremId {
    #[serde(rename = "1.1")]
    HardyLittlewood,
    #[serde(rename = "1.2")]
    MaximalCommutator,
    #[serde(rename = "1.4")]
    Sharp,
    #[serde(rename = "1.5")]
    Fractional,
}

impl TheoremId {
    pub const ALL: [TheoremId; 4] = [
        TheoremId::HardyLittlewood,
        TheoremId::MaximalCommutator,
        TheoremId::Sharp,
        TheoremId::Fractional,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TheoremId::HardyLittlewood => "1.1",
            TheoremId::MaximalCommutator => "1.2",
            TheoremId::Sharp => "1.4",
            TheoremId::Fractional => "1.5",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

/// Which function the sharp-maximal residual subtracts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SharpVariant {
    /// `b - 2 M#(b chi_B)` on `B`.
    #[default]
    Localized,
    /// `b - 2 M#(b)` on `B`.
    Global,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioResult<T> {
    pub literal: T,
    pub ball_local: T,
    /// Ball attaining the literal sup.
    pub witness: usize,
    pub witness_ball: BallLabel,
    pub ball_local_witness: BallLabel,
    /// `max_B (literal(B) - ball_local(B))`; can be negative when the target
    /// exponent reaches 1 and `||chi_B||` exceeds its closed form.
    pub max_discrepancy: T,
}

/// Evaluates `residual(B)` for every ball and forms both ratio forms in `params`.
fn sup_ratio<T, F>(domain: &Domain<T>, params: &MorreyParams<T>, residual: F) -> RatioResult<T>
where
    T: Scalar,
    F: Fn(usize) -> PointFunction<T> + Sync,
{
    let eval = MorreyEvaluator::new(domain, params);
    let w = params.integrand.values();
    let mass = domain.mass();
    let s = params.p;
    let per_ball: Vec<(T, T)> = (0..domain.balls().len())
        .into_par_iter()
        .map(|i| {
            let ball = &domain.balls()[i];
            let g = residual(i);
            let chi = PointFunction::indicator(domain, i).expect("index in range");
            let literal = eval.norm(&g) / eval.norm(&chi);
            let (mut num, mut den) = (T::zero(), T::zero());
            for &y in &ball.members {
                num = num + g[y].abs().powf(s) * w[y] * mass[y];
                den = den + w[y] * mass[y];
            }
            (literal, (num / den).powf(s.recip()))
        })
        .collect();
    let pick = |sel: fn(&(T, T)) -> T| {
        per_ball
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |best, (i, v)| if sel(v) > best.1 { (i, sel(v)) } else { best })
    };
    let (witness, literal) = pick(|v| v.0);
    let (local_witness, ball_local) = pick(|v| v.1);
    let max_discrepancy = per_ball
        .iter()
        .map(|(a, b)| *a - *b)
        .fold(T::neg_infinity(), T::max);
    RatioResult {
        literal,
        ball_local,
        witness,
        witness_ball: domain.balls()[witness].label(),
        ball_local_witness: domain.balls()[local_witness].label(),
        max_discrepancy,
    }
}

fn check_kappa<T: Scalar>(kappa: T) -> Result<()> {
    if kappa > T::zero() && kappa < T::one() {
        Ok(())
    } else {
        Err(param("kappa", kappa.to_f64_lossy(), "must lie in (0, 1)"))
    }
}

fn check_exponent_above_one<T: Scalar>(name: &'static str, v: T) -> Result<()> {
    if v > T::one() && v.is_finite() {
        Ok(())
    } else {
        Err(param(name, v.to_f64_lossy(), "must satisfy 1 < value < inf"))
    }
}

/// `sup_B ||(b - M_{p,B} b) chi_B|| / ||chi_B||` in `L^{q,kappa}_omega`, `1 < p < q`.
pub fn theorem11_ratio<T: Scalar>(
    domain: &Domain<T>,
    b: &PointFunction<T>,
    p: T,
    q: T,
    kappa: T,
    omega: &Weight<T>,
) -> Result<RatioResult<T>> {
    check_exponent_above_one("p", p)?;
    if !(q > p && q.is_finite()) {
        return Err(param("q", q.to_f64_lossy(), "must satisfy p < q < inf"));
    }
    check_kappa(kappa)?;
    let params = MorreyParams::one_weight(q, kappa, omega.clone())?;
    let means = power_means(domain, b, p);
    Ok(sup_ratio(domain, &params, |i| {
        let local = restricted_sup(domain, &means, i).expect("index in range");
        let mut g = vec![T::zero(); domain.len()];
        for (y, m) in local.iter() {
            g[y] = b[y] - m;
        }
        PointFunction::from_vec_unchecked(g)
    }))
}

/// `sup_B ||C_b(chi_B)|| / ||chi_B||` in `L^{p,kappa}_omega`.
pub fn theorem12_ratio<T: Scalar>(
    domain: &Domain<T>,
    b: &PointFunction<T>,
    p: T,
    kappa: T,
    omega: &Weight<T>,
) -> Result<RatioResult<T>> {
    check_exponent_above_one("p", p)?;
    check_kappa(kappa)?;
    let params = MorreyParams::one_weight(p, kappa, omega.clone())?;
    Ok(sup_ratio(domain, &params, |i| {
        maximal_commutator(domain, b, &PointFunction::indicator(domain, i).expect("index in range"))
    }))
}

/// `sup_B ||(b - 2 M#(b chi_B)) chi_B|| / ||chi_B||` in `L^{q,kappa}_omega`
/// (or with `M#(b)` for [`SharpVariant::Global`]).
pub fn theorem14_ratio<T: Scalar>(
    domain: &Domain<T>,
    b: &PointFunction<T>,
    q: T,
    kappa: T,
    omega: &Weight<T>,
    variant: SharpVariant,
) -> Result<RatioResult<T>> {
    check_exponent_above_one("q", q)?;
    check_kappa(kappa)?;
    let params = MorreyParams::one_weight(q, kappa, omega.clone())?;
    let two = T::of(2.0);
    let global = match variant {
        SharpVariant::Global => Some(sharp_maximal(domain, b)),
        SharpVariant::Localized => None,
    };
    Ok(sup_ratio(domain, &params, |i| {
        let sharp = match &global {
            Some(g) => g.clone(),
            None => sharp_maximal(domain, &b.restrict(domain, i).expect("index in range")),
        };
        let mut g = vec![T::zero(); domain.len()];
        for &y in &domain.balls()[i].members {
            g[y] = b[y] - two * sharp[y];
        }
        PointFunction::from_vec_unchecked(g)
    }))
}

/// The exponent `q` with `1/q = 1/p - gamma`.
pub fn sobolev_exponent<T: Scalar>(p: T, gamma: T) -> Result<T> {
    check_gamma(gamma)?;
    check_exponent_above_one("p", p)?;
    if p * gamma >= T::one() {
        return Err(param("p", p.to_f64_lossy(), "must satisfy p < 1/gamma"));
    }
    Ok((p.recip() - gamma).recip())
}

/// Source `L^{p,kappa}_{(omega^p, omega^q)}` and target `L^{q,kappa q/p}_{omega^q}`.
pub fn fractional_spaces<T: Scalar>(
    p: T,
    q: T,
    kappa: T,
    omega: &Weight<T>,
) -> Result<(MorreyParams<T>, MorreyParams<T>)> {
    let wq = omega.pow(q);
    let source = MorreyParams::two_weight(p, kappa, omega.pow(p), wq.clone())?;
    let target = MorreyParams::unchecked_kappa(q, kappa * q / p, wq.clone(), wq)?;
    Ok((source, target))
}

/// `sup_B ||(b - mu(B)^(-gamma) M_{gamma,B} b) chi_B|| / ||chi_B||` in
/// `L^{q, kappa q/p}_{omega^q}` with `1/q = 1/p - gamma`.
pub fn theorem15_ratio<T: Scalar>(
    domain: &Domain<T>,
    b: &PointFunction<T>,
    gamma: T,
    p: T,
    q: T,
    kappa: T,
    omega: &Weight<T>,
) -> Result<RatioResult<T>> {
    let expected = sobolev_exponent(p, gamma)?;
    if ((q.recip() - expected.recip()) * p).abs() > T::of(1e-12).max(T::epsilon() * T::of(16.0)) {
        return Err(param("q", q.to_f64_lossy(), "must satisfy 1/q = 1/p - gamma"));
    }
    check_kappa(kappa)?;
    let (_, target) = fractional_spaces(p, expected, kappa, omega)?;
    let averages = fractional_averages(domain, b, gamma);
    Ok(sup_ratio(domain, &target, |i| {
        let ball = &domain.balls()[i];
        let local = restricted_sup(domain, &averages, i).expect("index in range");
        let prefactor = ball.measure.powf(-gamma);
        let mut g = vec![T::zero(); domain.len()];
        for (y, m) in local.iter() {
            g[y] = b[y] - prefactor * m;
        }
        PointFunction::from_vec_unchecked(g)
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoremParams<T> {
    pub p: T,
    pub q: T,
    pub kappa: T,
    pub gamma: T,
}

#[derive(Clone, Debug)]
pub struct CharacterizeOptions {
    pub seed: u64,
    pub random_family_size: usize,
    pub opnorm: bool,
    pub sharp_statement_variant: bool,
}

impl Default for CharacterizeOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            random_family_size: 8,
            opnorm: true,
            sharp_statement_variant: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CharacterizationReport<T> {
    pub theorem: TheoremId,
    /// Exponents actually used; for 1.5 `q` is derived from `p` and `gamma`.
    pub params: TheoremParams<T>,
    pub ratio: RatioResult<T>,
    /// Ratio with the global `M#(b)` in place of `M#(b chi_B)` (theorem 1.4 only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub statement_variant_ratio: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub opnorm: Option<OpnormBound<T>>,
    pub bmo: T,
    pub neg_part_sup: T,
}

/// Validates parameters for one theorem before any computation.
pub fn validate<T: Scalar>(theorem: TheoremId, params: &TheoremParams<T>) -> Result<TheoremParams<T>> {
    let TheoremParams { p, q, kappa, gamma } = *params;
    check_kappa(kappa)?;
    match theorem {
        TheoremId::HardyLittlewood => {
            check_exponent_above_one("p", p)?;
            if !(q > p && q.is_finite()) {
                return Err(param("q", q.to_f64_lossy(), "must satisfy p < q < inf"));
            }
            Ok(params.clone())
        }
        TheoremId::MaximalCommutator => {
            check_exponent_above_one("p", p)?;
            Ok(params.clone())
        }
        TheoremId::Sharp => {
            check_exponent_above_one("q", q)?;
            Ok(params.clone())
        }
        TheoremId::Fractional => {
            let q = sobolev_exponent(p, gamma)?;
            Ok(TheoremParams { p, q, kappa, gamma })
        }
    }
}

/// Full condition-(iii) and condition-(ii) report for one theorem and symbol.
pub fn characterize<T: Scalar>(
    domain: &Domain<T>,
    b: &PointFunction<T>,
    omega: &Weight<T>,
    theorem: TheoremId,
    params: &TheoremParams<T>,
    options: &CharacterizeOptions,
) -> Result<CharacterizationReport<T>> {
    let params = validate(theorem, params)?;
    let TheoremParams { p, q, kappa, gamma } = params;
    let one_weight_q = || MorreyParams::one_weight(q, kappa, omega.clone());
    let family = || default_family(domain, b, options.seed, options.random_family_size);
    let mut statement_variant_ratio = None;
    let (ratio, opnorm) = match theorem {
        TheoremId::HardyLittlewood => {
            let ratio = theorem11_ratio(domain, b, p, q, kappa, omega)?;
            let opnorm = if options.opnorm {
                let spec = CommutatorSpec::new(CommutedOperator::Hl { p }, b.clone())?;
                let space = one_weight_q()?;
                Some(opnorm_lower_bound_with(domain, &space, &space, &family(), |f| {
                    commutator(domain, &spec, f)
                })?)
            } else {
                None
            };
            (ratio, opnorm)
        }
        TheoremId::MaximalCommutator => {
            let ratio = theorem12_ratio(domain, b, p, kappa, omega)?;
            // Indicator members reproduce the literal ratio exactly, so only
            // the remaining members are evaluated here.
            let opnorm = if options.opnorm {
                let space = MorreyParams::one_weight(p, kappa, omega.clone())?;
                let rest: Vec<_> = family().into_iter().filter(|m| !m.is_indicator).collect();
                let mut bound = opnorm_lower_bound_with(domain, &space, &space, &rest, |f| {
                    maximal_commutator(domain, b, f)
                })?;
                bound.evaluated += domain.balls().len();
                bound.indicator_sup = ratio.literal;
                if ratio.literal >= bound.value {
                    bound.value = ratio.literal;
                    bound.best_member = format!("indicator:{}", ratio.witness);
                }
                Some(bound)
            } else {
                None
            };
            (ratio, opnorm)
        }
        TheoremId::Sharp => {
            let ratio = theorem14_ratio(domain, b, q, kappa, omega, SharpVariant::Localized)?;
            if options.sharp_statement_variant {
                statement_variant_ratio =
                    Some(theorem14_ratio(domain, b, q, kappa, omega, SharpVariant::Global)?.literal);
            }
            let opnorm = if options.opnorm {
                let spec = CommutatorSpec::new(CommutedOperator::Sharp, b.clone())?;
                let space = one_weight_q()?;
                Some(opnorm_lower_bound_with(domain, &space, &space, &family(), |f| {
                    commutator(domain, &spec, f)
                })?)
            } else {
                None
            };
            (ratio, opnorm)
        }
        TheoremId::Fractional => {
            check_p(p)?;
            let ratio = theorem15_ratio(domain, b, gamma, p, q, kappa, omega)?;
            let opnorm = if options.opnorm {
                let spec = CommutatorSpec::new(CommutedOperator::Fractional { gamma }, b.clone())?;
                let (source, target) = fractional_spaces(p, q, kappa, omega)?;
                Some(opnorm_lower_bound_with(domain, &source, &target, &family(), |f| {
                    commutator(domain, &spec, f)
                })?)
            } else {
                None
            };
            (ratio, opnorm)
        }
    };
    Ok(CharacterizationReport {
        theorem,
        params,
        ratio,
        statement_variant_ratio,
        opnorm,
        bmo: bmo_norm(domain, b),
        neg_part_sup: b.neg_part().sup_norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_grid_1d, Masses};

    fn x4() -> Domain<f64> {
        Domain::new(build_grid_1d(4, Masses::Uniform(1.0), 1.0).unwrap())
    }

    #[test]
    fn nonnegative_constants_give_zero_ratios() {
        let d = x4();
        let w = Weight::uniform(4);
        let c = PointFunction::constant(4, 2.5);
        let r = theorem11_ratio(&d, &c, 2.0, 4.0, 0.5, &w).unwrap();
        assert!(r.literal.abs() < 1e-14 && r.ball_local.abs() < 1e-14);
        let r = theorem15_ratio(&d, &c, 0.25, 2.0, 4.0, 0.5, &w).unwrap();
        assert!(r.literal.abs() < 1e-14 && r.ball_local.abs() < 1e-14);
        let r = theorem12_ratio(&d, &c, 2.0, 0.5, &w).unwrap();
        assert_eq!(r.literal, 0.0);
    }

    #[test]
    fn sharp_ratio_of_constant_is_not_assumed_zero() {
        let d = x4();
        let r = theorem14_ratio(&d, &PointFunction::constant(4, 1.0), 2.0, 0.5, &Weight::uniform(4), SharpVariant::Localized)
            .unwrap();
        assert!(r.literal > 0.0);
        let zero = theorem14_ratio(&d, &PointFunction::zeros(4), 2.0, 0.5, &Weight::uniform(4), SharpVariant::Localized)
            .unwrap();
        assert_eq!(zero.literal, 0.0);
    }

    #[test]
    fn parameter_constraints() {
        let d = x4();
        let w = Weight::uniform(4);
        let b = PointFunction::zeros(4);
        assert!(theorem11_ratio(&d, &b, 2.0, 2.0, 0.5, &w).is_err());
        assert!(theorem11_ratio(&d, &b, 2.0, 3.0, 0.0, &w).is_err());
        assert!(theorem15_ratio(&d, &b, 0.5, 2.0, 4.0, 0.5, &w).is_err());
        assert!(theorem15_ratio(&d, &b, 0.25, 2.0, 3.0, 0.5, &w).is_err());
        assert!(sobolev_exponent(2.0, 0.25).unwrap() == 4.0);
    }

    #[test]
    fn literal_dominates_ball_local_when_kappa_below_one() {
        let d = x4();
        let b = PointFunction::new(vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let r = theorem11_ratio(&d, &b, 2.0, 4.0, 0.5, &Weight::uniform(4)).unwrap();
        assert!(r.literal >= r.ball_local);
        assert!(r.max_discrepancy >= -1e-15);
    }

    #[test]
    fn theorem_ids_round_trip() {
        for t in TheoremId::ALL {
            assert_eq!(TheoremId::parse(t.as_str()), Some(t));
        }
        assert_eq!(TheoremId::parse("1.3"), None);
    }
}
