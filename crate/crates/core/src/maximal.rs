//! Maximal-type operators evaluated by sweeping the enumerated balls.
//!
//! Each operator first reduces the input to one aggregate per ball (a power
//! mean, a mean oscillation, a fractional average, ...) and then takes, at every
//! point, the largest aggregate among the balls containing it. The maximal
//! commutators depend on the evaluation point inside the integrand and are
//! handled separately: on spaces whose balls are index intervals the inner sums
//! are accumulated outward from the evaluation point, which keeps every term
//! nonnegative and the cost linear in the number of (point, ball) incidences.

use rayon::prelude::*;

use crate::ball::{interval_sup, prefix_diff, Domain};
use crate::error::{param, Error, Result};
use crate::function::PointFunction;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum OperatorKind<T> {
    /// `M_p`
    Hl { p: T },
    /// `M_{p,B0}`, zero-extended outside the base ball.
    HlRestricted { p: T, base: usize },
    /// `M#`
    Sharp,
    /// `M_gamma`
    Fractional { gamma: T },
    /// `M_{gamma,B0}`, zero-extended outside the base ball.
    FractionalRestricted { gamma: T, base: usize },
    /// `C_b`
    MaximalCommutator { b: PointFunction<T> },
    /// `M_{gamma,b}`
    FractionalMaximalCommutator { gamma: T, b: PointFunction<T> },
    /// `M^2 = M o M`
    Iterated,
}

impl<T: Scalar> OperatorKind<T> {
    pub fn name(&self) -> &'static str {
        match self {
            OperatorKind::Hl { .. } => "hl",
            OperatorKind::HlRestricted { .. } => "hl_restricted",
            OperatorKind::Sharp => "sharp",
            OperatorKind::Fractional { .. } => "frac",
            OperatorKind::FractionalRestricted { .. } => "frac_restricted",
            OperatorKind::MaximalCommutator { .. } => "cb",
            OperatorKind::FractionalMaximalCommutator { .. } => "frac_cb",
            OperatorKind::Iterated => "m2",
        }
    }

    pub fn apply(&self, domain: &Domain<T>, f: &PointFunction<T>) -> Result<PointFunction<T>> {
        match self {
            OperatorKind::Hl { p } => hl_maximal(domain, f, *p),
            OperatorKind::HlRestricted { p, base } => {
                Ok(hl_maximal_restricted(domain, f, *p, *base)?.zero_extended(domain.len()))
            }
            OperatorKind::Sharp => Ok(sharp_maximal(domain, f)),
            OperatorKind::Fractional { gamma } => fractional_maximal(domain, f, *gamma),
            OperatorKind::FractionalRestricted { gamma, base } => Ok(
                fractional_maximal_restricted(domain, f, *gamma, *base)?.zero_extended(domain.len()),
            ),
            OperatorKind::MaximalCommutator { b } => Ok(maximal_commutator(domain, b, f)),
            OperatorKind::FractionalMaximalCommutator { gamma, b } => {
                fractional_maximal_commutator(domain, b, f, *gamma)
            }
            OperatorKind::Iterated => Ok(iterated_maximal(domain, f)),
        }
    }
}

pub(crate) fn check_p<T: Scalar>(p: T) -> Result<()> {
    if p >= T::one() && p.is_finite() {
        Ok(())
    } else {
        Err(param("p", p.to_f64_lossy(), "must satisfy 1 <= p < inf"))
    }
}

pub(crate) fn check_gamma<T: Scalar>(gamma: T) -> Result<()> {
    if gamma > T::zero() && gamma < T::one() {
        Ok(())
    } else {
        Err(param("gamma", gamma.to_f64_lossy(), "must lie in (0, 1)"))
    }
}

/// A function known only on the members of a base ball.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalFunction<T> {
    pub base: usize,
    members: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> LocalFunction<T> {
    /// Value at `x`; points outside the base ball are rejected.
    pub fn get(&self, x: usize) -> Result<T> {
        self.members
            .binary_search(&x)
            .map(|i| self.values[i])
            .map_err(|_| Error::OutsideBase { point: x })
    }

    /// `(point, value)` pairs in ascending point order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.members.iter().copied().zip(self.values.iter().copied())
    }

    pub fn zero_extended(&self, n: usize) -> PointFunction<T> {
        let mut out = vec![T::zero(); n];
        for (x, v) in self.iter() {
            out[x] = v;
        }
        PointFunction::from_vec_unchecked(out)
    }
}

/// `(avg_B |f|^p)^(1/p)` for every ball.
pub fn power_means<T: Scalar>(domain: &Domain<T>, f: &PointFunction<T>, p: T) -> Vec<T> {
    let powered: Vec<T> = if p == T::one() {
        f.values().iter().map(|v| v.abs()).collect()
    } else {
        f.values().iter().map(|v| v.abs().powf(p)).collect()
    };
    let inv = p.recip();
    domain
        .ball_sums(&powered)
        .into_iter()
        .zip(domain.balls())
        .map(|(sum, ball)| {
            let mean = sum / ball.measure;
            if p == T::one() {
                mean
            } else {
                mean.powf(inv)
            }
        })
        .collect()
}

/// `mu(B)^(gamma-1) sum_B |f| dmu` for every ball.
pub fn fractional_averages<T: Scalar>(domain: &Domain<T>, f: &PointFunction<T>, gamma: T) -> Vec<T> {
    let modulus: Vec<T> = f.values().iter().map(|v| v.abs()).collect();
    let scales = domain.measure_powers(gamma - T::one());
    domain
        .ball_sums(&modulus)
        .into_iter()
        .zip(scales.iter())
        .map(|(sum, s)| sum * *s)
        .collect()
}

/// Mean oscillation `avg_B |f - f_B|` for every ball.
pub fn mean_oscillations<T: Scalar>(domain: &Domain<T>, f: &PointFunction<T>) -> Vec<T> {
    let values = f.values();
    let mass = domain.mass();
    let means: Vec<T> = domain
        .ball_sums(values)
        .into_iter()
        .zip(domain.balls())
        .map(|(sum, ball)| sum / ball.measure)
        .collect();
    // On interval domains only the support of f needs a sweep; the zeros
    // outside contribute |f_B| times the mass they carry.
    let support = values.iter().position(|v| *v != T::zero()).map(|first| {
        let last = values.iter().rposition(|v| *v != T::zero()).expect("nonempty support");
        (first, last)
    });
    let Some((s, t)) = support else {
        return vec![T::zero(); domain.balls().len()];
    };
    let sparse = domain.is_contiguous() && (t - s + 1) * 2 <= domain.len();
    let mass_prefix = sparse.then(|| domain.interval_sums(&vec![T::one(); domain.len()]));
    domain
        .balls()
        .par_iter()
        .zip(&means)
        .map(|(ball, &mean)| {
            let dev = match (&mass_prefix, ball.span) {
                (Some(prefix), Some((lo, hi))) => {
                    if hi < s || lo > t {
                        return T::zero();
                    }
                    let (a, b) = (lo.max(s), hi.min(t));
                    let inside = (a..=b).fold(T::zero(), |acc, y| acc + (values[y] - mean).abs() * mass[y]);
                    let outside = prefix_diff(prefix, lo, a) + prefix_diff(prefix, b + 1, hi + 1);
                    inside + mean.abs() * outside
                }
                _ => ball
                    .members
                    .iter()
                    .fold(T::zero(), |acc, &y| acc + (values[y] - mean).abs() * mass[y]),
            };
            dev / ball.measure
        })
        .collect()
}

pub fn hl_maximal<T: Scalar>(domain: &Domain<T>, f: &PointFunction<T>, p: T) -> Result<PointFunction<T>> {
    check_p(p)?;
    if p == T::one() {
        return Ok(PointFunction::from_vec_unchecked(
            domain.sup_over_containing(&power_means(domain, f, p)),
        ));
    }
    // The root is monotone, so it is taken once per point after the sup.
    let powered: Vec<T> = f.values().iter().map(|v| v.abs().powf(p)).collect();
    let means: Vec<T> = domain
        .ball_sums(&powered)
        .into_iter()
        .zip(domain.balls())
        .map(|(sum, ball)| sum / ball.measure)
        .collect();
    let inv = p.recip();
    Ok(PointFunction::from_vec_unchecked(
        domain
            .sup_over_containing(&means)
            .into_iter()
            .map(|v| v.powf(inv))
            .collect(),
    ))
}

pub fn sharp_maximal<T: Scalar>(domain: &Domain<T>, f: &PointFunction<T>) -> PointFunction<T> {
    PointFunction::from_vec_unchecked(domain.sup_over_containing(&mean_oscillations(domain, f)))
}

pub fn fractional_maximal<T: Scalar>(
    domain: &Domain<T>,
    f: &PointFunction<T>,
    gamma: T,
) -> Result<PointFunction<T>> {
    check_gamma(gamma)?;
    Ok(PointFunction::from_vec_unchecked(
        domain.sup_over_containing(&fractional_averages(domain, f, gamma)),
    ))
}

/// At each `x` in the base ball, the largest aggregate over balls `B` with `x in B ⊆ base`.
pub fn restricted_sup<T: Scalar>(domain: &Domain<T>, per_ball: &[T], base: usize) -> Result<LocalFunction<T>> {
    let base_ball = domain.ball(base)?;
    let members = base_ball.members.clone();
    let subs: Vec<usize> = (0..domain.balls().len())
        .filter(|&i| domain.balls()[i].is_subset_of(base_ball))
        .collect();
    let m = members.len();
    let work: usize = subs.iter().map(|&i| domain.balls()[i].len()).sum();
    if let (Some((lo, _)), true) = (base_ball.span, domain.is_contiguous() && m * m < work) {
        let spans = subs.iter().map(|&i| {
            let (a, b) = domain.balls()[i].span.expect("contiguous domain");
            (a, b, per_ball[i])
        });
        let values = interval_sup(lo, m, spans);
        return Ok(LocalFunction { base, members, values });
    }
    let mut values = vec![T::neg_infinity(); m];
    let slot = |y: usize| match base_ball.span {
        Some((lo, _)) => y - lo,
        None => members.binary_search(&y).expect("sub-ball member lies in base"),
    };
    for &i in &subs {
        let v = per_ball[i];
        for &y in &domain.balls()[i].members {
            let s = slot(y);
            if v > values[s] {
                values[s] = v;
            }
        }
    }
    Ok(LocalFunction { base, members, values })
}

pub fn hl_maximal_restricted<T: Scalar>(
    domain: &Domain<T>,
    f: &PointFunction<T>,
    p: T,
    base: usize,
) -> Result<LocalFunction<T>> {
    check_p(p)?;
    restricted_sup(domain, &power_means(domain, f, p), base)
}

pub fn fractional_maximal_restricted<T: Scalar>(
    domain: &Domain<T>,
    f: &PointFunction<T>,
    gamma: T,
    base: usize,
) -> Result<LocalFunction<T>> {
    check_gamma(gamma)?;
    restricted_sup(domain, &fractional_averages(domain, f, gamma), base)
}

/// `sup_{B ∋ x} scale(mu(B)) * sum_{y in B} |b(x) - b(y)| |f(y)| dmu(y)`.
fn commutator_sweep<T: Scalar>(
    domain: &Domain<T>,
    b: &PointFunction<T>,
    f: &PointFunction<T>,
    scales: &[T],
) -> Vec<T> {
    let n = domain.len();
    let bv = b.values();
    let weight: Vec<T> = f
        .values()
        .iter()
        .zip(domain.mass())
        .map(|(v, m)| v.abs() * *m)
        .collect();
    let balls = domain.balls();
    if domain.is_contiguous() && n * n <= domain.incidences() {
        // left[lo * n + x] = sum over lo..x, right[hi * n + x] = sum over x..=hi,
        // so each ball sweeps its members with unit stride.
        let mut left = vec![T::zero(); n * n];
        let mut right = vec![T::zero(); n * n];
        for x in 0..n {
            let bx = bv[x];
            for y in (0..x).rev() {
                left[y * n + x] = left[(y + 1) * n + x] + (bx - bv[y]).abs() * weight[y];
            }
            let mut acc = T::zero();
            for y in x..n {
                acc = acc + (bx - bv[y]).abs() * weight[y];
                right[y * n + x] = acc;
            }
        }
        let mut out = vec![T::neg_infinity(); n];
        for (ball, s) in balls.iter().zip(scales) {
            let (lo, hi) = ball.span.expect("contiguous domain");
            let l = &left[lo * n + lo..=lo * n + hi];
            let r = &right[hi * n + lo..=hi * n + hi];
            for ((o, a), c) in out[lo..=hi].iter_mut().zip(l).zip(r) {
                let v = *s * (*a + *c);
                if v > *o {
                    *o = v;
                }
            }
        }
        return out;
    }
    let spans: Vec<(u32, u32)> = if domain.is_contiguous() {
        balls
            .iter()
            .map(|b| {
                let (lo, hi) = b.span.expect("contiguous domain");
                (lo as u32, hi as u32)
            })
            .collect()
    } else {
        Vec::new()
    };
    (0..n)
        .into_par_iter()
        .map(|x| {
            let bx = bv[x];
            let containing = domain.containing(x);
            if domain.is_contiguous() {
                // left[lo] = sum over lo..x, right[hi] = sum over x..=hi
                let mut left = vec![T::zero(); x + 1];
                for y in (0..x).rev() {
                    left[y] = left[y + 1] + (bx - bv[y]).abs() * weight[y];
                }
                let mut right = vec![T::zero(); n];
                let mut acc = T::zero();
                for y in x..n {
                    acc = acc + (bx - bv[y]).abs() * weight[y];
                    right[y] = acc;
                }
                containing.iter().fold(T::neg_infinity(), |best, &i| {
                    let (lo, hi) = spans[i];
                    best.max(scales[i] * (left[lo as usize] + right[hi as usize]))
                })
            } else {
                containing.iter().fold(T::neg_infinity(), |best, &i| {
                    let s = balls[i]
                        .members
                        .iter()
                        .fold(T::zero(), |acc, &y| acc + (bx - bv[y]).abs() * weight[y]);
                    best.max(scales[i] * s)
                })
            }
        })
        .collect()
}

/// `C_b f(x) = sup_{B ∋ x} avg_B |b(x) - b(y)| |f(y)|`.
pub fn maximal_commutator<T: Scalar>(
    domain: &Domain<T>,
    b: &PointFunction<T>,
    f: &PointFunction<T>,
) -> PointFunction<T> {
    PointFunction::from_vec_unchecked(commutator_sweep(
        domain,
        b,
        f,
        &domain.balls().iter().map(|ball| ball.measure.recip()).collect::<Vec<_>>(),
    ))
}

/// `M_{gamma,b} f(x) = sup_{B ∋ x} mu(B)^(gamma-1) sum_B |b(x) - b(y)| |f(y)| dmu`.
pub fn fractional_maximal_commutator<T: Scalar>(
    domain: &Domain<T>,
    b: &PointFunction<T>,
    f: &PointFunction<T>,
    gamma: T,
) -> Result<PointFunction<T>> {
    check_gamma(gamma)?;
    Ok(PointFunction::from_vec_unchecked(commutator_sweep(
        domain,
        b,
        f,
        &domain.measure_powers(gamma - T::one()),
    )))
}

/// `M^2 f = M(M f)`.
pub fn iterated_maximal<T: Scalar>(domain: &Domain<T>, f: &PointFunction<T>) -> PointFunction<T> {
    let once = hl_maximal(domain, f, T::one()).expect("p = 1 is valid");
    hl_maximal(domain, &once, T::one()).expect("p = 1 is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_grid_1d, Masses};

    fn x4() -> Domain<f64> {
        Domain::new(build_grid_1d(4, Masses::Uniform(1.0), 1.0).unwrap())
    }

    fn func(v: &[f64]) -> PointFunction<f64> {
        PointFunction::new(v.to_vec()).unwrap()
    }

    #[test]
    fn constant_input() {
        let d = x4();
        let c = PointFunction::constant(4, -3.0);
        assert!(hl_maximal(&d, &c, 2.0).unwrap().values().iter().all(|v| (*v - 3.0).abs() < 1e-15));
        assert!(sharp_maximal(&d, &c).is_zero());
        assert!(maximal_commutator(&d, &c, &func(&[1.0, 2.0, 3.0, 4.0])).is_zero());
        assert!(iterated_maximal(&d, &c).values().iter().all(|v| *v == 3.0));
    }

    #[test]
    fn x4_reference_values() {
        let d = x4();
        let f = func(&[1.0, 0.0, 0.0, 8.0]);
        let m = hl_maximal(&d, &f, 1.0).unwrap();
        assert_eq!(m.values(), &[2.25, 8.0 / 3.0, 4.0, 8.0]);
        assert_eq!(sharp_maximal(&d, &f)[0], 2.875);
        // two-pass oracle: (9/4 + 8/3 + 4 + 8) / 4
        assert!((iterated_maximal(&d, &f)[0] - 203.0 / 48.0).abs() < 1e-14);
    }

    #[test]
    fn x4_commutators() {
        let d = x4();
        let b = func(&[0.0, 0.0, 1.0, 1.0]);
        let one = PointFunction::constant(4, 1.0);
        assert_eq!(maximal_commutator(&d, &b, &one)[0], 0.5);
        let v = fractional_maximal_commutator(&d, &b, &one, 0.5).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fractional_indicator() {
        let d = x4();
        let q = d.find(&crate::bitset::PointSet::from_indices(4, [0, 1])).unwrap();
        let chi = PointFunction::indicator(&d, q).unwrap();
        let v = fractional_maximal(&d, &chi, 0.5).unwrap();
        assert!((v[0] - 2f64.sqrt()).abs() < 1e-15);
        assert!(fractional_maximal(&d, &PointFunction::zeros(4), 0.5).unwrap().is_zero());
    }

    #[test]
    fn restricted_operator_edges() {
        let d = x4();
        let f = func(&[1.0, -5.0, 0.0, 8.0]);
        let full = d.full_ball();
        let r = hl_maximal_restricted(&d, &f, 1.5, full).unwrap();
        let m = hl_maximal(&d, &f, 1.5).unwrap();
        for x in 0..4 {
            assert_eq!(r.get(x).unwrap(), m[x]);
        }
        let single = d.find(&crate::bitset::PointSet::from_indices(4, [1])).unwrap();
        let r = hl_maximal_restricted(&d, &f, 2.0, single).unwrap();
        assert!((r.get(1).unwrap() - 5.0).abs() < 1e-14);
        assert_eq!(r.get(0), Err(Error::OutsideBase { point: 0 }));
    }

    #[test]
    fn parameter_validation() {
        let d = x4();
        let f = PointFunction::zeros(4);
        assert!(hl_maximal(&d, &f, 0.5).is_err());
        assert!(fractional_maximal(&d, &f, 1.0).is_err());
        assert!(fractional_maximal(&d, &f, 0.0).is_err());
        assert!(fractional_maximal_commutator(&d, &f, &f, 1.5).is_err());
    }
}
