//! Reduced-order modelling of a sphere striking a beam.
//!
//! Beam and sphere are reduced separately to massless-boundary models, joined
//! through a unilateral contact condition and integrated explicitly in
//! modal time. Post-processing splits the impact energy over the beam's
//! modes and compares several routes to the same modal coordinates.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod bench;
pub mod cms;
pub mod contact;
pub mod error;
pub mod post;
pub mod run;
pub mod output;
pub mod scenario;

pub use error::{Error, Result};
