//! Dimension theory of Bedford–McMullen self-affine sponges.
//!
//! A sponge is the attractor of the affine maps
//! `x ↦ ((x_1 + i_1)/n_1, …, (x_d + i_d)/n_d)` for digit tuples `i` in a
//! digit set `D`. This crate computes the Assouad, lower, box and Hausdorff
//! dimensions in closed form, builds approximate cubes and Bernoulli measures
//! on the symbolic space, and carries the numeric harnesses that check the
//! measure sandwiches, doubling behaviour and weak-tangent convergence.
//!
//! The crate is `no_std` and only needs `alloc`; file formats and the
//! command-line front end live in the `sponge-cli` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod cubes;
pub mod dims;
mod error;
pub mod measure;
pub mod model;
pub mod numeric;
pub mod verify;

pub use cubes::{ApproximateCube, BoxSet, Hypercuboid, Interval, Scale, ScaleExponents};
pub use dims::{Dichotomy, DimReport, LgFamilyDims};
pub use error::Error;
pub use measure::{BernoulliMeasure, RationalLog};
pub use model::{DigitTuple, Prefix, Sponge};

/// Default cap on the number of objects any enumeration may produce.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

pub type Result<T, E = Error> = core::result::Result<T, E>;
