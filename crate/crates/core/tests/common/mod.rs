#![allow(dead_code)]

use morreylab::space::{build_grid_1d, build_ultrametric_tree, Masses};
use morreylab::weights::gen_power_weight;
use morreylab::{Domain64, Function64, PointFunction, Weight, Weight64};
use morreylab_oracle::Space;

pub struct Instance {
    pub name: &'static str,
    pub domain: Domain64,
    pub oracle: Space,
    pub weight: Weight64,
    pub symbols: Vec<(&'static str, Function64)>,
    pub functions: Vec<(String, Function64)>,
}

pub fn oracle_of(domain: &Domain64) -> Space {
    let n = domain.len();
    let dist = (0..n).map(|x| domain.space().row(x).to_vec()).collect();
    Space::new(dist, domain.mass().to_vec())
}

fn instance(name: &'static str, domain: Domain64, weight: Weight64, seed: u64) -> Instance {
    let n = domain.len();
    let symbols = vec![
        ("step", PointFunction::step(&domain, n / 2).unwrap()),
        ("log_dist", PointFunction::log_dist(&domain, 0, 0.5).unwrap()),
        ("random", PointFunction::random_pm(n, seed)),
    ];
    let mut spike = vec![0.0; n];
    spike[0] = 1.0;
    spike[n - 1] = 8.0;
    let middle = domain.balls().len() / 2;
    let functions = vec![
        ("spike".to_string(), PointFunction::new(spike).unwrap()),
        (format!("indicator:{middle}"), PointFunction::indicator(&domain, middle).unwrap()),
        ("random".to_string(), PointFunction::random_pm(n, seed + 1)),
        (
            "ramp".to_string(),
            PointFunction::new((0..n).map(|i| (i as f64 - n as f64 / 3.0) * 0.25).collect()).unwrap(),
        ),
    ];
    Instance {
        name,
        oracle: oracle_of(&domain),
        domain,
        weight,
        symbols,
        functions,
    }
}

pub fn x4() -> Domain64 {
    Domain64::new(build_grid_1d(4, Masses::Uniform(1.0), 1.0).unwrap())
}

/// X4, a 16-point grid with a power weight, and a 32-leaf binary tree.
pub fn corpus() -> Vec<Instance> {
    let grid16 = Domain64::new(build_grid_1d(16, Masses::Uniform(1.0), 1.0).unwrap());
    let power = gen_power_weight(&grid16, 0, 0.3, 0.5).unwrap();
    let tree = Domain64::new(build_ultrametric_tree(5, 2, Masses::Uniform(1.0), 4096).unwrap());
    vec![
        instance("x4", x4(), Weight::uniform(4), 11),
        instance("grid16", grid16, power, 12),
        instance("tree32", tree, Weight::uniform(32), 13),
    ]
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
}

pub fn assert_close_vec(label: &str, got: &[f64], want: &[f64], rel: f64) {
    assert_eq!(got.len(), want.len(), "{label}");
    for (x, (g, w)) in got.iter().zip(want).enumerate() {
        assert!(close(*g, *w, rel), "{label} at {x}: {g} vs {w}");
    }
}
