//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command as Process, Stdio};
use std::time::Instant;

use morreylab::audit::{audit_identities, check_fractional_indicator, check_hl_indicator, AuditParams};
use morreylab::characterize::{characterize, CharacterizeOptions, TheoremId};
use morreylab::maximal::OperatorKind;
use morreylab::norms::{bmo_norm, bmo_norm_inf, morrey_norm, MorreyParams};
use morreylab::weights::ap_constant;
use morreylab::{Domain64, Function64, PointFunction, Weight};
use morreylab_cli::config::Experiment;
use morreylab_cli::run::{cmd_audit, cmd_characterize};
use morreylab_cli::{corpus, Format};
use morreylab_oracle::Space;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn small() -> Vec<Experiment> {
    corpus::small().into_iter().map(|c| Experiment::build(c).unwrap()).collect()
}

fn everything() -> Vec<Experiment> {
    corpus::SHIPPED
        .iter()
        .map(|(name, _)| Experiment::build(corpus::shipped(name).unwrap()).unwrap())
        .collect()
}

fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
}

fn oracle_of(domain: &Domain64) -> Space {
    let dist = (0..domain.len()).map(|x| domain.space().row(x).to_vec()).collect();
    Space::new(dist, domain.mass().to_vec())
}

fn vec_close(label: &str, got: &Function64, want: &[f64], rel: f64) -> Result<(), String> {
    for (x, (g, w)) in got.values().iter().zip(want).enumerate() {
        ensure!(rel_close(*g, *w, rel), "{label} at point {x}: {g} vs {w}");
    }
    Ok(())
}

fn indicator_identities() -> Check {
    let start = Instant::now();
    let mut balls = 0;
    for exp in everything() {
        let d = &exp.domain;
        let name = &exp.config.name;
        let params = &exp.config.params;
        for p in [1.0, params.p] {
            let a = check_hl_indicator(d, p);
            ensure!(a.max_violation <= 1e-12, "{name}: M_{p}(chi_B) off by {}", a.max_violation);
        }
        let b = check_fractional_indicator(d, params.gamma);
        ensure!(b.max_violation <= 1e-12, "{name}: M_gamma(chi_Q) off by {}", b.max_violation);
        let space = MorreyParams::one_weight(params.q, params.kappa, exp.weight.clone()).unwrap();
        for (i, ball) in d.balls().iter().enumerate() {
            let chi = PointFunction::indicator(d, i).unwrap();
            let got = morrey_norm(d, &chi, &space);
            let want = exp.weight.measure(d, ball).powf((1.0 - params.kappa) / params.q);
            ensure!(rel_close(got, want, 1e-12), "{name} ball {i}: ||chi_B|| = {got}, closed form {want}");
        }
        balls += d.balls().len();
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs <= 60.0, "took {secs:.1} s");
    Ok(format!("{balls} balls over the shipped corpus in {secs:.1} s"))
}

fn operator_identities() -> Check {
    let mut triples = 0;
    let mut worst: f64 = 0.0;
    for exp in small() {
        let d = &exp.domain;
        let name = &exp.config.name;
        let params = AuditParams {
            p: exp.config.params.p,
            q: exp.config.params.q,
            gamma: exp.config.params.gamma,
        };
        for member in &exp.functions {
            let f = &member.function;
            for p in [1.5, 2.0, 3.0] {
                let direct = OperatorKind::Hl { p }.apply(d, f).unwrap();
                let powered = PointFunction::new(f.values().iter().map(|v| v.abs().powf(p)).collect()).unwrap();
                let via = OperatorKind::Hl { p: 1.0 }.apply(d, &powered).unwrap();
                for (x, (a, b)) in direct.values().iter().zip(via.values()).enumerate() {
                    let gap = (a - b.powf(p.recip())).abs();
                    worst = worst.max(gap);
                    ensure!(gap <= 1e-10, "{name}/{}: M_{p} mismatch {gap} at {x}", member.label);
                }
            }
            let sharp = OperatorKind::Sharp.apply(d, f).unwrap();
            let m = OperatorKind::Hl { p: 1.0 }.apply(d, f).unwrap();
            for (x, (s, m)) in sharp.values().iter().zip(m.values()).enumerate() {
                ensure!(*s <= 2.0 * m + 1e-10, "{name}/{}: M# = {s} > 2M = {} at {x}", member.label, 2.0 * m);
            }
        }
        for (bname, b) in &exp.symbols {
            let checks = audit_identities(d, &exp.weight, b, &exp.functions, &params).unwrap();
            for c in &checks {
                let required = ["d_", "e_", "f_", "i_", "k_", "m_"].iter().any(|p| c.name.starts_with(p));
                if required {
                    worst = worst.max(c.max_violation);
                    ensure!(c.max_violation <= 1e-10, "{name}/{bname}: {} violated by {}", c.name, c.max_violation);
                }
            }
            triples += exp.functions.len();
        }
    }
    ensure!(triples >= 30, "only {triples} (space, b, f) triples");
    Ok(format!("{triples} (space, b, f) triples, largest residual {worst:e}"))
}

fn oracle_equivalence() -> Check {
    const REL: f64 = 1e-12;
    let mut comparisons = 0;
    for exp in small() {
        let d = &exp.domain;
        let o = oracle_of(d);
        let name = &exp.config.name;
        let bases = [0, d.balls().len() / 2, d.full_ball()];
        let inputs: Vec<(&str, &Function64)> = exp
            .functions
            .iter()
            .map(|m| (m.label.as_str(), &m.function))
            .chain(exp.symbols.iter().map(|(n, f)| (n.as_str(), f)))
            .collect();
        for (fname, f) in &inputs {
            let fv = f.values();
            let l = |op: &str| format!("{name}/{fname}/{op}");
            vec_close(&l("hl"), &OperatorKind::Hl { p: 2.0 }.apply(d, f).unwrap(), &o.hl(fv, 2.0), REL)?;
            vec_close(&l("sharp"), &OperatorKind::Sharp.apply(d, f).unwrap(), &o.sharp(fv), REL)?;
            let frac = OperatorKind::Fractional { gamma: 0.25 }.apply(d, f).unwrap();
            vec_close(&l("frac"), &frac, &o.fractional(fv, 0.25), REL)?;
            vec_close(&l("m2"), &OperatorKind::Iterated.apply(d, f).unwrap(), &o.m2(fv), REL)?;
            comparisons += 4;
            for &base in &bases {
                let members = &d.balls()[base].members;
                let got = OperatorKind::HlRestricted { p: 2.0, base }.apply(d, f).unwrap();
                vec_close(&l("hl_restricted"), &got, &o.hl_restricted(fv, 2.0, members), REL)?;
                let got = OperatorKind::FractionalRestricted { gamma: 0.25, base }.apply(d, f).unwrap();
                vec_close(&l("frac_restricted"), &got, &o.fractional_restricted(fv, 0.25, members), REL)?;
                comparisons += 2;
            }
            for (bname, b) in &exp.symbols {
                let got = OperatorKind::MaximalCommutator { b: b.clone() }.apply(d, f).unwrap();
                vec_close(&l(&format!("cb[{bname}]")), &got, &o.cb(b.values(), fv), REL)?;
                let got = OperatorKind::FractionalMaximalCommutator { gamma: 0.25, b: b.clone() }
                    .apply(d, f)
                    .unwrap();
                vec_close(&l(&format!("frac_cb[{bname}]")), &got, &o.fractional_cb(b.values(), fv, 0.25), REL)?;
                comparisons += 2;
            }
        }
    }
    Ok(format!("{comparisons} operator evaluations agree with the naive oracle, eight kinds"))
}

fn weight_properties() -> Check {
    let exps = everything();
    let mut weights: Vec<(String, &Domain64, Weight<f64>)> = exps
        .iter()
        .map(|e| (e.config.name.clone(), &e.domain, e.weight.clone()))
        .collect();
    let x4 = exps.iter().find(|e| e.config.name == "x4").unwrap();
    weights.push(("x4/(1,1,1,4)".into(), &x4.domain, Weight::new(vec![1.0, 1.0, 1.0, 4.0]).unwrap()));
    let grid = [1.5, 2.0, 3.0, 4.0];
    let mut pairs = 0;
    for (name, d, w) in &weights {
        let consts: Vec<f64> = grid.iter().map(|&p| ap_constant(d, w, p).unwrap().constant).collect();
        for i in 0..grid.len() {
            for j in i + 1..grid.len() {
                ensure!(
                    consts[j] <= consts[i] * (1.0 + 1e-12),
                    "{name}: A_{} = {} exceeds A_{} = {}",
                    grid[j],
                    consts[j],
                    grid[i],
                    consts[i]
                );
                pairs += 1;
            }
            let scaled = ap_constant(d, &w.scale(3.7).unwrap(), grid[i]).unwrap().constant;
            ensure!(rel_close(scaled, consts[i], 1e-12), "{name}: A_{} not scale invariant", grid[i]);
        }
    }
    let w = Weight::new(vec![1.0, 1.0, 1.0, 4.0]).unwrap();
    let ours = ap_constant(&x4.domain, &w, 2.0).unwrap().constant;
    let naive = oracle_of(&x4.domain).ap(w.values(), 2.0);
    ensure!(ours == 25.0 / 16.0 && naive == 25.0 / 16.0, "X4 A_2 = {ours}, oracle {naive}");
    Ok(format!("{pairs} (p, q) pairs monotone, scale invariant, X4 A_2 = 25/16"))
}

fn bmo_sandwich() -> Check {
    let mut symbols = 0;
    for exp in everything() {
        for (bname, b) in &exp.symbols {
            let full = bmo_norm(&exp.domain, b);
            let inf = bmo_norm_inf(&exp.domain, b);
            ensure!(
                inf <= full * (1.0 + 1e-12) && full <= 2.0 * inf * (1.0 + 1e-12),
                "{}/{bname}: bmo {full}, bmo_inf {inf}",
                exp.config.name
            );
            symbols += 1;
        }
    }
    Ok(format!("{symbols} symbols satisfy bmo_inf <= bmo <= 2 bmo_inf"))
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn ratio_coherence() -> Check {
    let mut reports = 0;
    for exp in small() {
        let name = &exp.config.name;
        let opts = CharacterizeOptions {
            seed: exp.config.seed,
            ..CharacterizeOptions::default()
        };
        let constant = PointFunction::new(vec![1.0; exp.domain.len()]).unwrap();
        let mut symbols: Vec<(&str, &Function64)> = exp.symbols.iter().map(|(n, f)| (n.as_str(), f)).collect();
        symbols.push(("constant", &constant));
        for (bname, b) in symbols {
            for t in TheoremId::ALL {
                let r = characterize(&exp.domain, b, &exp.weight, t, &exp.config.params.theorem(), &opts).unwrap();
                let op = r.opnorm.as_ref().unwrap();
                let label = format!("{name}/{bname}/{}", t.as_str());
                ensure!(op.value >= op.indicator_sup, "{label}: opnorm {} < indicator sup {}", op.value, op.indicator_sup);
                if t == TheoremId::MaximalCommutator {
                    ensure!(op.value >= r.ratio.literal, "{label}: opnorm below the literal indicator ratio");
                }
                if bname == "constant" {
                    ensure!(op.indicator_sup <= 1e-12, "{label}: indicator sup {} for constant b", op.indicator_sup);
                    if t != TheoremId::Sharp {
                        ensure!(r.ratio.literal <= 1e-12, "{label}: ratio {} for constant b", r.ratio.literal);
                    }
                }
                reports += 1;
            }
        }
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        for dir in &dirs {
            cmd_audit(&exp, dir.path(), Format::Json).map_err(|e| e.to_string())?;
            cmd_characterize(&exp, dir.path(), Format::Both).map_err(|e| e.to_string())?;
        }
        for file in ["audit.json", "characterize.json", "characterize.csv"] {
            ensure!(
                read(&dirs[0].path().join(file)) == read(&dirs[1].path().join(file)),
                "{name}: {file} differs between runs"
            );
        }
        let audit: serde_json::Value = serde_json::from_slice(&read(&dirs[0].path().join("audit.json"))).unwrap();
        for inst in audit["instances"].as_array().unwrap() {
            for c in inst["checks"].as_array().unwrap() {
                let check = c["name"].as_str().unwrap();
                if check.starts_with("g_") || check.starts_with("h_") {
                    ensure!(c["constant"].as_f64().is_some_and(f64::is_finite), "{name}: {check} constant not finite");
                }
            }
        }
    }
    Ok(format!("{reports} reports coherent, audit and characterize payloads byte-identical"))
}

fn determinism_and_budget() -> Check {
    let bin = env!("CARGO_BIN_EXE_morreylab");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut times = Vec::new();
    for dir in &dirs {
        let start = Instant::now();
        let status = Process::new(bin)
            .args(["characterize", "--config", "corpus:grid256", "--format", "both", "--out"])
            .arg(dir.path())
            .stdout(Stdio::null())
            .status()
            .map_err(|e| e.to_string())?;
        let secs = start.elapsed().as_secs_f64();
        ensure!(status.success(), "characterize exited with {status}");
        ensure!(secs <= 600.0, "grid256 characterize took {secs:.1} s");
        times.push(secs);
    }
    for file in ["characterize.json", "characterize.csv"] {
        ensure!(
            read(&dirs[0].path().join(file)) == read(&dirs[1].path().join(file)),
            "grid256 {file} differs between runs"
        );
    }
    Ok(format!(
        "grid256 characterize in {:.1} s and {:.1} s, byte-identical output",
        times[0], times[1]
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 7] = [
        ("indicator identities", indicator_identities),
        ("operator identities and audit checks", operator_identities),
        ("oracle equivalence", oracle_equivalence),
        ("weight properties", weight_properties),
        ("bmo two-norm sandwich", bmo_sandwich),
        ("theorem-ratio coherence", ratio_coherence),
        ("determinism and budget", determinism_and_budget),
    ];
    let mut failed = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("criterion {} {title}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {title}: FAIL ({detail})", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
