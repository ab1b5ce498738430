mod common;

use common::{assert_close_vec, close, corpus};
use morreylab::maximal::OperatorKind;
use morreylab::norms::{bmo_norm, bmo_norm_inf, morrey_norm};
use morreylab::weights::ap_constant;
use morreylab::MorreyParams;

const REL: f64 = 1e-12;

#[test]
fn ball_families_match() {
    for inst in corpus() {
        let mut ours: Vec<Vec<usize>> = inst.domain.balls().iter().map(|b| b.members.clone()).collect();
        ours.sort();
        assert_eq!(ours, inst.oracle.distinct_balls(), "{}", inst.name);
        assert!(close(inst.domain.space().a0(), inst.oracle.quasi_triangle(), REL));
    }
}

#[test]
fn all_operator_kinds_match() {
    for inst in corpus() {
        let d = &inst.domain;
        let o = &inst.oracle;
        let bases = [0, d.balls().len() / 2, d.full_ball()];
        for (fname, f) in &inst.functions {
            let fv = f.values();
            let label = |op: &str| format!("{}/{fname}/{op}", inst.name);
            for p in [1.0, 1.5, 3.0] {
                let got = OperatorKind::Hl { p }.apply(d, f).unwrap();
                assert_close_vec(&label("hl"), got.values(), &o.hl(fv, p), REL);
            }
            let got = OperatorKind::Sharp.apply(d, f).unwrap();
            assert_close_vec(&label("sharp"), got.values(), &o.sharp(fv), REL);
            for gamma in [0.25, 0.5] {
                let got = OperatorKind::Fractional { gamma }.apply(d, f).unwrap();
                assert_close_vec(&label("frac"), got.values(), &o.fractional(fv, gamma), REL);
            }
            let got = OperatorKind::Iterated.apply(d, f).unwrap();
            assert_close_vec(&label("m2"), got.values(), &o.m2(fv), REL);
            for &base in &bases {
                let members = &d.balls()[base].members;
                let got = OperatorKind::HlRestricted { p: 2.0, base }.apply(d, f).unwrap();
                assert_close_vec(&label("hl_restricted"), got.values(), &o.hl_restricted(fv, 2.0, members), REL);
                let got = OperatorKind::FractionalRestricted { gamma: 0.25, base }.apply(d, f).unwrap();
                assert_close_vec(
                    &label("frac_restricted"),
                    got.values(),
                    &o.fractional_restricted(fv, 0.25, members),
                    REL,
                );
            }
            for (bname, b) in &inst.symbols {
                let bl = |op: &str| format!("{}/{bname}/{fname}/{op}", inst.name);
                let got = OperatorKind::MaximalCommutator { b: b.clone() }.apply(d, f).unwrap();
                assert_close_vec(&bl("cb"), got.values(), &o.cb(b.values(), fv), REL);
                let got = OperatorKind::FractionalMaximalCommutator { gamma: 0.25, b: b.clone() }
                    .apply(d, f)
                    .unwrap();
                assert_close_vec(&bl("frac_cb"), got.values(), &o.fractional_cb(b.values(), fv, 0.25), REL);
            }
        }
    }
}

#[test]
fn norms_and_weight_constants_match() {
    for inst in corpus() {
        let d = &inst.domain;
        let o = &inst.oracle;
        let w = inst.weight.values();
        let ones = vec![1.0; d.len()];
        for (name, b) in &inst.symbols {
            assert!(close(bmo_norm(d, b), o.bmo(b.values()), REL), "{}/{name}", inst.name);
            assert!(close(bmo_norm_inf(d, b), o.bmo_inf(b.values()), REL), "{}/{name}", inst.name);
            for (p, kappa) in [(2.0, 0.5), (1.0, 0.0), (4.0, 0.75)] {
                let params = MorreyParams::one_weight(p, kappa, inst.weight.clone()).unwrap();
                let want = o.morrey(b.values(), p, kappa, w, w);
                assert!(close(morrey_norm(d, b, &params), want, REL), "{}/{name}/morrey", inst.name);
                let params = MorreyParams::two_weight(p, kappa, inst.weight.clone(), morreylab::Weight::uniform(d.len())).unwrap();
                let want = o.morrey(b.values(), p, kappa, w, &ones);
                assert!(close(morrey_norm(d, b, &params), want, REL), "{}/{name}/morrey2", inst.name);
            }
        }
        for p in [1.5, 2.0, 3.0, 4.0] {
            let got = ap_constant(d, &inst.weight, p).unwrap().constant;
            assert!(close(got, o.ap(w, p), REL), "{} A_{p}: {got} vs {}", inst.name, o.ap(w, p));
        }
    }
}

#[test]
fn x4_weight_constant_is_exact() {
    let d = common::x4();
    let w = morreylab::Weight::new(vec![1.0, 1.0, 1.0, 4.0]).unwrap();
    assert_eq!(ap_constant(&d, &w, 2.0).unwrap().constant, 25.0 / 16.0);
    assert_eq!(common::oracle_of(&d).ap(w.values(), 2.0), 25.0 / 16.0);
}
