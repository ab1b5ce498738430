//! Maximal functions, their commutators, Muckenhoupt weights, weighted Morrey
//! norms and BMO on finite spaces of homogeneous type.
//!
//! All operators are evaluated exactly by sweeping the finite family of
//! distinct open balls of a [`Domain`]. The numerical core is generic over the
//! scalar type; the `*64` aliases below fix it to `f64`, which is what the
//! experiment runner uses.

pub mod audit;
pub mod ball;
pub mod bitset;
pub mod characterize;
pub mod commutator;
pub mod error;
pub mod function;
pub mod maximal;
pub mod norms;
pub mod scalar;
pub mod space;
pub mod weights;

pub use ball::{Ball, BallLabel, Domain};
pub use error::{Error, Result};
pub use function::PointFunction;
pub use maximal::OperatorKind;
pub use norms::MorreyParams;
pub use scalar::Scalar;
pub use space::{Masses, QuasiMetricSpace};
pub use weights::Weight;

pub type Space64 = QuasiMetricSpace<f64>;
pub type Domain64 = Domain<f64>;
pub type Function64 = PointFunction<f64>;
pub type Weight64 = Weight<f64>;
pub type MorreyParams64 = MorreyParams<f64>;

pub type Space32 = QuasiMetricSpace<f32>;
pub type Domain32 = Domain<f32>;
pub type Function32 = PointFunction<f32>;
pub type Weight32 = Weight<f32>;
