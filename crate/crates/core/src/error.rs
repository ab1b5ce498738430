use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("space must contain at least one point")]
    EmptySpace,
    #[error("mass at point {index} must be strictly positive, got {value}")]
    NonPositiveMass { index: usize, value: f64 },
    #[error("metric exponent must be >= 1, got {0}")]
    MetricExponent(f64),
    #[error("distance matrix is not {n}x{n}")]
    DistanceShape { n: usize },
    #[error("distance d({x},{y}) = {value} is not a finite nonnegative number")]
    BadDistance { x: usize, y: usize, value: f64 },
    #[error("distance matrix is not symmetric at ({x},{y})")]
    Asymmetric { x: usize, y: usize },
    #[error("d({x},{y}) = 0 for distinct points")]
    ZeroDistance { x: usize, y: usize },
    #[error("nonzero self-distance at point {0}")]
    NonzeroDiagonal(usize),
    #[error("tree needs depth >= 1 and arity >= 2, got depth {depth}, arity {arity}")]
    TreeShape { depth: u32, arity: u32 },
    #[error("tree with arity {arity} and depth {depth} exceeds the budget of {budget} points")]
    PointBudget { arity: u32, depth: u32, budget: usize },
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("value at point {index} is not finite")]
    NonFinite { index: usize },
    #[error("weight at point {index} must be strictly positive, got {value}")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("point {point} is outside the space of {n} points")]
    PointOutOfRange { point: usize, n: usize },
    #[error("ball index {index} out of range ({count} balls)")]
    BallOutOfRange { index: usize, count: usize },
    #[error("point {point} is not a member of the base ball")]
    OutsideBase { point: usize },
    #[error("invalid parameter {name} = {value}: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("function family is empty or every member has zero input norm")]
    EmptyFamily,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::Parameter {
        name,
        value,
        reason,
    }
}
