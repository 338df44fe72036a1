//! Wavelet renormalization of the free lattice scalar field.
//!
//! The crate provides periodic lattices and their phase spaces ([`lattice`]),
//! low-pass filters and their cascades ([`filters`]), symplectic scaling maps
//! between lattices ([`scalemaps`]), Gaussian ground-state flows and two-point
//! functions ([`states`]), free dynamics and causality bounds ([`dynamics`]),
//! and continuum embeddings with infinite-volume comparisons ([`continuum`]).

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuum;
pub mod dynamics;
pub mod error;
pub mod filters;
pub mod lattice;
pub mod numerics;
pub mod report;
pub mod scalemaps;
pub mod states;

pub use error::{Error, Result};
