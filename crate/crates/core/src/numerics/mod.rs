//! Array primitives, convolution and attention building blocks, and the
//! gradient verifier the rest of the crate is checked against.

mod array;
pub mod conv;
pub mod gradcheck;
pub mod linalg;
pub mod ops;
mod params;
mod real;
mod rng;

pub use array::Array;
pub use conv::{conv1d, linear_interp_resize, ConvGeometry, Padding};
pub use gradcheck::{grad_check, GradCheckConfig, GradCheckReport};
pub use ops::{gelu, layer_norm, silu, softmax_rows};
pub use params::{ParamId, ParamStore};
pub use real::Real;
pub use rng::Rng;
