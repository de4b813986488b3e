//! Core of the explanation-refinement system: an explanation is compressed
//! through a Gaussian bottleneck conditioned on the sample it explains, and a
//! small autoregressive generator rewrites it from that compressed code.
//!
//! Everything numeric (tensors, the autodiff graph, the models) is generic
//! over [`Scalar`] so the same code runs in `f32` or `f64`. Training and the
//! CLI default to `f64`: the models are tiny, and 64-bit math keeps
//! finite-difference gradient checks and rerun determinism uncomplicated.

pub mod bottleneck;
pub mod checkpoint;
pub mod decode;
pub mod error;
pub mod graph;
pub mod lm;
pub mod loss;
pub mod model;
pub mod params;
pub mod refine;
pub mod seed;
pub mod tensor;
pub mod text;
pub mod tokenizer;
pub mod train;

pub use error::CoreError;

use std::fmt::{Debug, Display};

/// Floating-point scalar the numeric core is generic over.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + num_traits::NumAssignOps
    + std::iter::Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Shorthand for lifting an `f64` constant into the generic scalar type.
#[inline]
pub fn sc<F: Scalar>(v: f64) -> F {
    F::from_f64(v).expect("f64 constant not representable in scalar type")
}

pub type Tensor32 = tensor::Tensor<f32>;
pub type Tensor64 = tensor::Tensor<f64>;
pub type Model32 = model::EibModel<f32>;
pub type Model64 = model::EibModel<f64>;

/// Version of this crate, surfaced in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
