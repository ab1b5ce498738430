//! The shipped corpus configs, also addressable as `--config corpus:<name>`.

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const SHIPPED: [(&str, &str); 4] = [
    ("x4", include_str!("../../../corpus/x4.json")),
    ("grid16_power", include_str!("../../../corpus/grid16_power.json")),
    ("tree32", include_str!("../../../corpus/tree32.json")),
    ("grid256", include_str!("../../../corpus/grid256.json")),
];

/// The small instances every acceptance property runs against.
pub const SMALL: [&str; 3] = ["x4", "grid16_power", "tree32"];

pub fn shipped(name: &str) -> Result<ExperimentConfig, CliError> {
    let (_, text) = SHIPPED
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| CliError::Config(format!("no shipped config named {name:?}")))?;
    ExperimentConfig::from_json(text)
}

pub fn small() -> Vec<ExperimentConfig> {
    SMALL.iter().map(|n| shipped(n).expect("shipped configs parse")).collect()
}
