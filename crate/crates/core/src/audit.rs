//! Pointwise audit of the identities and inequalities the characterization
//! proofs rely on, evaluated on the discrete definitions.
//!
//! Every check returns a [`CheckResult`]. Inequality checks report the largest
//! amount by which the left side exceeds the right side (zero when the check
//! holds). Constant checks (`g`, `h`) report the smallest admissible constant
//! instead, and check `j` reports the largest ratio.

use rayon::prelude::*;
use serde::Serialize;

use crate::ball::{BallLabel, Domain};
use crate::commutator::FamilyMember;
use crate::error::{param, Result};
use crate::function::PointFunction;
use crate::maximal::{
    check_gamma, check_p, fractional_averages, fractional_maximal, fractional_maximal_commutator, hl_maximal,
    iterated_maximal, maximal_commutator, power_means, restricted_sup, sharp_maximal,
};
use crate::norms::{ball_average, bmo_norm};
use crate::scalar::Scalar;
use crate::weights::{ap_constant, Weight};

/// Ratios above `1 + RATIO_FLAG` in check `j` are flagged.
pub const RATIO_FLAG: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AuditParams<T> {
    /// Exponent of `M_p` in checks a, d, j, k, l.
    pub p: T,
    /// Exponent of the `A_q` constant in check l.
    pub q: T,
    pub gamma: T,
}

impl<T: Scalar> AuditParams<T> {
    pub fn validate(&self) -> Result<()> {
        check_p(self.p)?;
        check_gamma(self.gamma)?;
        if !(self.q > T::one() && self.q.is_finite()) {
            return Err(param("q", self.q.to_f64_lossy(), "must satisfy 1 < q < inf"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AuditWitness {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ball: Option<BallLabel>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult<T> {
    pub name: &'static str,
    pub max_violation: T,
    /// Smallest constant for `g`, `h`; largest ratio for `j`; `A_q` for `l`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constant: Option<T>,
    pub witness: AuditWitness,
    /// Set when `j` exceeds `1 + RATIO_FLAG`.
    pub flagged: bool,
    pub evaluations: usize,
    pub skipped: usize,
}

/// Running maximum with the place it was attained.
struct Tracker<T> {
    best: T,
    witness: AuditWitness,
    evaluations: usize,
    skipped: usize,
}

impl<T: Scalar> Tracker<T> {
    fn new(floor: T) -> Self {
        Self {
            best: floor,
            witness: AuditWitness::default(),
            evaluations: 0,
            skipped: 0,
        }
    }

    fn offer(&mut self, value: T, witness: impl FnOnce() -> AuditWitness) {
        self.evaluations += 1;
        if value > self.best {
            self.best = value;
            self.witness = witness();
        }
    }

    fn merge(mut self, other: Tracker<T>) -> Self {
        self.evaluations += other.evaluations;
        self.skipped += other.skipped;
        if other.best > self.best {
            self.best = other.best;
            self.witness = other.witness;
        }
        self
    }

    fn violation(self, name: &'static str) -> CheckResult<T> {
        CheckResult {
            name,
            max_violation: self.best,
            constant: None,
            witness: self.witness,
            flagged: false,
            evaluations: self.evaluations,
            skipped: self.skipped,
        }
    }

    /// A constant check; `None` when nothing was evaluated.
    fn constant(self, name: &'static str) -> CheckResult<T> {
        CheckResult {
            name,
            max_violation: T::zero(),
            constant: (self.evaluations > 0).then_some(self.best),
            witness: self.witness,
            flagged: false,
            evaluations: self.evaluations,
            skipped: self.skipped,
        }
    }
}

fn at_point(function: &str, x: usize) -> AuditWitness {
    AuditWitness {
        function: Some(function.to_string()),
        point: Some(x),
        ball: None,
    }
}

fn at_ball<T: Scalar>(domain: &Domain<T>, i: usize, x: Option<usize>) -> AuditWitness {
    AuditWitness {
        function: None,
        point: x,
        ball: Some(domain.balls()[i].label()),
    }
}

/// Runs `per_ball` on every ball in parallel and merges in ball order.
fn over_balls<T, F>(domain: &Domain<T>, per_ball: F) -> Tracker<T>
where
    T: Scalar,
    F: Fn(usize, &mut Tracker<T>) + Sync,
{
    (0..domain.balls().len())
        .into_par_iter()
        .map(|i| {
            let mut t = Tracker::new(T::zero());
            per_ball(i, &mut t);
            t
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Tracker::new(T::zero()), Tracker::merge)
}

fn over_family<T, F>(family: &[FamilyMember<T>], floor: T, per_member: F) -> Tracker<T>
where
    T: Scalar,
    F: Fn(&FamilyMember<T>, &mut Tracker<T>) + Sync,
{
    family
        .par_iter()
        .map(|m| {
            let mut t = Tracker::new(floor);
            per_member(m, &mut t);
            t
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Tracker::new(floor), Tracker::merge)
}

/// `(a)` `M_p(chi_B) = 1` on `B`, relative error.
pub fn check_hl_indicator<T: Scalar>(domain: &Domain<T>, p: T) -> CheckResult<T> {
    over_balls(domain, |i, t| {
        let chi = PointFunction::indicator(domain, i).expect("index in range");
        let m = hl_maximal(domain, &chi, p).expect("validated");
        for &x in &domain.balls()[i].members {
            t.offer((m[x] - T::one()).abs(), || at_ball(domain, i, Some(x)));
        }
    })
    .violation("a_hl_indicator")
}

/// `(b)` `M_gamma(chi_Q) = mu(Q)^gamma` on `Q`, relative error.
pub fn check_fractional_indicator<T: Scalar>(domain: &Domain<T>, gamma: T) -> CheckResult<T> {
    over_balls(domain, |i, t| {
        let ball = &domain.balls()[i];
        let chi = PointFunction::indicator(domain, i).expect("index in range");
        let m = fractional_maximal(domain, &chi, gamma).expect("validated");
        let target = ball.measure.powf(gamma);
        for &x in &ball.members {
            t.offer((m[x] - target).abs() / target, || at_ball(domain, i, Some(x)));
        }
    })
    .violation("b_fractional_indicator")
}

/// `(c)` `M# f <= 2 M f`.
pub fn check_sharp_le_twice_hl<T: Scalar>(domain: &Domain<T>, family: &[FamilyMember<T>]) -> CheckResult<T> {
    let two = T::of(2.0);
    over_family(family, T::zero(), |m, t| {
        let sharp = sharp_maximal(domain, &m.function);
        let hl = hl_maximal(domain, &m.function, T::one()).expect("p = 1");
        for x in 0..domain.len() {
            t.offer(sharp[x] - two * hl[x], || at_point(&m.label, x));
        }
    })
    .violation("c_sharp_le_2m")
}

/// `[T, b] f` for a pointwise operator `T`.
fn commute<T: Scalar>(
    b: &PointFunction<T>,
    f: &PointFunction<T>,
    op: &impl Fn(&PointFunction<T>) -> PointFunction<T>,
) -> PointFunction<T> {
    b.mul(&op(f)).sub(&op(&b.mul(f)))
}

/// `(d)` `[T,b]f - [T,|b|]f = -2 b- T f` for `T` in `{M_p, M_gamma}`.
pub fn check_modulus_commutator<T: Scalar>(
    domain: &Domain<T>,
    b: &PointFunction<T>,
    family: &[FamilyMember<T>],
    p: T,
    gamma: T,
) -> CheckResult<T> {
    let abs_b = b.abs();
    let neg = b.neg_part();
    let two = T::of(2.0);
    over_family(family, T::zero(), |m, t| {
        let hl = |g: &PointFunction<T>| hl_maximal(domain, g, p).expect("validated");
        let frac = |g: &PointFunction<T>| fractional_maximal(domain, g, gamma).expect("validated");
        for (op, tag) in [
            (&hl as &dyn Fn(&PointFunction<T>) -> PointFunction<T>, "hl"),
            (&frac as &dyn Fn(&PointFunction<T>) -> PointFunction<T>, "frac"),
        ] {
            let lhs = commute(b, &m.function, &op).sub(&commute(&abs_b, &m.function, &op));
            let tf = op(&m.function);
            for x in 0..domain.len() {
                let rhs = -two * neg[x] * tf[x];
                t.offer((lhs[x] - rhs).abs(), || at_point(&format!("{}/{tag}", m.label), x));
            }
        }
    })
    .violation("d_modulus_commutator")
}

/// `(e)` `|[M#,b]f - [M#,|b|]f| <= 2 (b- M# f + M#(b- f))`.
pub fn check_sharp_modulus_bound<T: Scalar>(
    domain: &Domain<T>,
    b: &PointFunction<T>,
    family: &[FamilyMember<T>],
) -> CheckResult<T> {
    let abs_b = b.abs();
    let neg = b.neg_part();
    let two = T::of(2.0);
    let op = |g: &PointFunction<T>| sharp_maximal(domain, g);
    over_family(family, T::zero(), |m, t| {
        let f = &m.function;
        let lhs = commute(b, f, &op).sub(&commute(&abs_b, f, &op));
        let tf = op(f);
        let t_neg = op(&neg.mul(f));
        for x in 0..domain.len() {
            let rhs = two * (neg[x] * tf[x] + t_neg[x]);
            t.offer(lhs[x].abs() - rhs, || at_point(&m.label, x));
        }
    })
    .violation("e_sharp_modulus_bound")
}

/// `(f)` `|[b, M_gamma] f| <= M_{gamma,b} f + 2 b- M_gamma f`.
pub fn check_fractional_commutator_bound<T: Scalar>(
    domain: &Domain<T>,
    b: &PointFunction<T>,
    family: &[FamilyMember<T>],
    gamma: T,
) -> CheckResult<T> {
    let neg = b.neg_part();
    let two = T::of(2.0);
    let op = |g: &PointFunction<T>| fractional_maximal(domain, g, gamma).expect("validated");
    over_family(family, T::zero(), |m, t| {
        let f = &m.function;
        let lhs = commute(b, f, &op);
        let mb = fractional_maximal_commutator(domain, b, f, gamma).expect("validated");
        let tf = op(f);
        for x in 0..domain.len() {
            t.offer(lhs[x].abs() - (mb[x] + two * neg[x] * tf[x]), || at_point(&m.label, x));
        }
    })
    .violation("f_fractional_commutator_bound")
}

/// `(g)` smallest `C` with `C_b f <= C ||b||_BMO M^2 f`.
pub fn check_cb_bmo_constant<T: Scalar>(
    domain: &Domain<T>,
    b: &PointFunction<T>,
    family: &[FamilyMember<T>],
) -> CheckResult<T> {
    let bmo = bmo_norm(domain, b);
    over_family(family, T::zero(), |m, t| {
        let cb = maximal_commutator(domain, b, &m.function);
        let m2 = iterated_maximal(domain, &m.function);
        for x in 0..domain.len() {
            let denom = bmo * m2[x];
            if denom > T::zero() {
                t.offer(cb[x] / denom, || at_point(&m.label, x));
            } else {
                t.skipped += 1;
            }
        }
    })
    .constant("g_cb_bmo_constant")
}

/// `(h)` smallest `C` with `M_{gamma,b} f <= C ||b||_BMO (M(M_gamma f) + M_gamma(M f))`.
pub fn check_fractional_cb_constant<T: Scalar>(
    domain: &Domain<T>,
    b: &PointFunction<T>,
    family: &[FamilyMember<T>],
    gamma: T,
) -> CheckResult<T> {
    let bmo = bmo_norm(domain, b);
    over_family(family, T::zero(), |m, t| {
        let f = &m.function;
        let mb = fractional_maximal_commutator(domain, b, f, gamma).expect("validated");
        let m_of_frac = hl_maximal(domain, &fractional_maximal(domain, f, gamma).expect("validated"), T::one())
            .expect("p = 1");
        let frac_of_m = fractional_maximal(domain, &hl_maximal(domain, f, T::one()).expect("p = 1"), gamma)
            .expect("validated");
        for x in 0..domain.len() {
            let denom = bmo * (m_of_frac[x] + frac_of_m[x]);
            if denom > T::zero() {
                t.offer(mb[x] / denom, || at_point(&m.label, x));
            } else {
                t.skipped += 1;
            }
        }
    })
    .constant("h_fractional_cb_constant")
}

/// `(i)` `|[M#,b] f| <= 2 C_b(f)` for `f = |member|`, at points where `b >= 0`.
///
/// At points with `b(t) < 0` the bound can fail (take `b = -1`), so those
/// points are counted as skipped.
pub fn check_sharp_commutator_cb<T: Scalar>(
    domain: &Domain<T>,
    b: &PointFunction<T>,
    family: &[FamilyMember<T>],
) -> CheckResult<T> {
    let two = T::of(2.0);
    let op = |g: &PointFunction<T>| sharp_maximal(domain, g);
    over_family(family, T::zero(), |m, t| {
        let f = m.function.abs();
        let lhs = commute(b, &f, &op);
        let cb = maximal_commutator(domain, b, &f);
        for x in 0..domain.len() {
            if b[x] < T::zero() {
                t.skipped += 1;
                continue;
            }
            t.offer(lhs[x].abs() - two * cb[x], || at_point(&m.label, x));
        }
    })
    .violation("i_sharp_commutator_cb")
}

/// `(j)` largest `M_p(b chi_B) / M_{p,B}(b)` over `x in B`.
pub fn check_restricted_ratio<T: Scalar>(domain: &Domain<T>, b: &PointFunction<T>, p: T) -> CheckResult<T> {
    let means = power_means(domain, b, p);
    let tracker = over_balls(domain, |i, t| {
        let local = restricted_sup(domain, &means, i).expect("index in range");
        let global = hl_maximal(domain, &b.restrict(domain, i).expect("index in range"), p).expect("validated");
        for (x, v) in local.iter() {
            if v > T::zero() {
                t.offer(global[x] / v, || at_ball(domain, i, Some(x)));
            } else {
                t.skipped += 1;
            }
        }
    });
    let ratio = tracker.best;
    let evaluated = tracker.evaluations > 0;
    let mut result = tracker.constant("j_restricted_ratio");
    if evaluated {
        result.max_violation = (ratio - T::one()).max(T::zero());
        result.flagged = ratio > T::one() + T::of(RATIO_FLAG);
    }
    result
}

/// `sum_B |b - M_{p,B} b|^s w dmu` and the mean oscillation of `b` on ball `i`.
fn local_deviation<T: Scalar>(domain: &Domain<T>, b: &PointFunction<T>, means: &[T], i: usize, s: T, w: &[T]) -> T {
    let mass = domain.mass();
    restricted_sup(domain, means, i)
        .expect("index in range")
        .iter()
        .fold(T::zero(), |acc, (y, m)| acc + (b[y] - m).abs().powf(s) * w[y] * mass[y])
}

fn oscillation<T: Scalar>(domain: &Domain<T>, b: &PointFunction<T>, i: usize) -> T {
    let ball = &domain.balls()[i];
    let avg = ball_average(domain, b, ball);
    let mass = domain.mass();
    ball.members
        .iter()
        .fold(T::zero(), |acc, &y| acc + (b[y] - avg).abs() * mass[y])
        / ball.measure
}

/// `(k)` `avg_B |b - b_B| <= (2/mu(B)) sum_B |b - M_{p,B} b|`.
pub fn check_e_set_chain<T: Scalar>(domain: &Domain<T>, b: &PointFunction<T>, p: T) -> CheckResult<T> {
    let means = power_means(domain, b, p);
    let ones = vec![T::one(); domain.len()];
    let two = T::of(2.0);
    over_balls(domain, |i, t| {
        let rhs = two * local_deviation(domain, b, &means, i, T::one(), &ones) / domain.balls()[i].measure;
        t.offer(oscillation(domain, b, i) - rhs, || at_ball(domain, i, None));
    })
    .violation("k_e_set_chain")
}

/// `(l)` `avg_B |b - b_B| <= 2 [omega]_{A_q}^(1/q) ((1/omega(B)) sum_B |b - M_{p,B} b|^q omega)^(1/q)`.
pub fn check_weighted_chain<T: Scalar>(
    domain: &Domain<T>,
    b: &PointFunction<T>,
    omega: &Weight<T>,
    p: T,
    q: T,
) -> Result<CheckResult<T>> {
    let aq = ap_constant(domain, omega, q)?.constant;
    let means = power_means(domain, b, p);
    let w = omega.values();
    let factor = T::of(2.0) * aq.powf(q.recip());
    let mut result = over_balls(domain, |i, t| {
        let local = local_deviation(domain, b, &means, i, q, w) / omega.measure(domain, &domain.balls()[i]);
        let rhs = factor * local.powf(q.recip());
        t.offer(oscillation(domain, b, i) - rhs, || at_ball(domain, i, None));
    })
    .violation("l_weighted_chain");
    result.constant = Some(aq);
    Ok(result)
}

/// `(m)` `|b_Q| <= mu(Q)^(-gamma) M_{gamma,Q}(b)(x)` for `x in Q`.
pub fn check_fractional_average_bound<T: Scalar>(domain: &Domain<T>, b: &PointFunction<T>, gamma: T) -> CheckResult<T> {
    let averages = fractional_averages(domain, b, gamma);
    over_balls(domain, |i, t| {
        let ball = &domain.balls()[i];
        let lhs = ball_average(domain, b, ball).abs();
        let scale = ball.measure.powf(-gamma);
        for (x, v) in restricted_sup(domain, &averages, i).expect("index in range").iter() {
            t.offer(lhs - scale * v, || at_ball(domain, i, Some(x)));
        }
    })
    .violation("m_fractional_average_bound")
}

/// `(n)` `avg_B |b(t) - b| <= C_b(chi_B)(t)` for `t in B`.
pub fn check_cb_indicator<T: Scalar>(domain: &Domain<T>, b: &PointFunction<T>) -> CheckResult<T> {
    let mass = domain.mass();
    over_balls(domain, |i, t| {
        let ball = &domain.balls()[i];
        let cb = maximal_commutator(domain, b, &PointFunction::indicator(domain, i).expect("index in range"));
        for &x in &ball.members {
            let avg = ball
                .members
                .iter()
                .fold(T::zero(), |acc, &y| acc + (b[x] - b[y]).abs() * mass[y])
                / ball.measure;
            t.offer(avg - cb[x], || at_ball(domain, i, Some(x)));
        }
    })
    .violation("n_cb_indicator")
}

/// Every check, sorted by name.
pub fn audit_identities<T: Scalar>(
    domain: &Domain<T>,
    omega: &Weight<T>,
    b: &PointFunction<T>,
    family: &[FamilyMember<T>],
    params: &AuditParams<T>,
) -> Result<Vec<CheckResult<T>>> {
    params.validate()?;
    let AuditParams { p, q, gamma } = *params;
    let jobs: Vec<Box<dyn Fn() -> Result<CheckResult<T>> + Sync + '_>> = vec![
        Box::new(|| Ok(check_hl_indicator(domain, p))),
        Box::new(|| Ok(check_fractional_indicator(domain, gamma))),
        Box::new(|| Ok(check_sharp_le_twice_hl(domain, family))),
        Box::new(|| Ok(check_modulus_commutator(domain, b, family, p, gamma))),
        Box::new(|| Ok(check_sharp_modulus_bound(domain, b, family))),
        Box::new(|| Ok(check_fractional_commutator_bound(domain, b, family, gamma))),
        Box::new(|| Ok(check_cb_bmo_constant(domain, b, family))),
        Box::new(|| Ok(check_fractional_cb_constant(domain, b, family, gamma))),
        Box::new(|| Ok(check_sharp_commutator_cb(domain, b, family))),
        Box::new(|| Ok(check_restricted_ratio(domain, b, p))),
        Box::new(|| Ok(check_e_set_chain(domain, b, p))),
        Box::new(|| check_weighted_chain(domain, b, omega, p, q)),
        Box::new(|| Ok(check_fractional_average_bound(domain, b, gamma))),
        Box::new(|| Ok(check_cb_indicator(domain, b))),
    ];
    let mut results = jobs.par_iter().map(|job| job()).collect::<Result<Vec<_>>>()?;
    results.sort_by_key(|r| r.name);
    Ok(results)
}
