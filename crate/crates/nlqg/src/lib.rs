//! Numerical laboratory for nonlinear quantum dynamics and phantom cosmology.
//!
//! The crate has three layers:
//!
//! * field machinery — periodic grids, complex wave fields, spectral
//!   derivatives, observables, and reduced density matrices
//!   ([`grid`], [`field`], [`spectral`], [`observable`], [`density`]);
//! * dynamics — the Doebner-Goldin right-hand side with RK4 stepping and
//!   its diagnostics ([`dg`], [`pair`]), the EPR / collapse / response
//!   experiments ([`epr`], [`response`]), and the two-fluid FRW system
//!   with coupling reconstruction ([`cosmo`]);
//! * harness — config parsing, the experiment registry, run manifests and
//!   file emission ([`config`], [`experiments`], [`manifest`]).
//!
//! Everything is deterministic: there is no randomness anywhere in the
//! pipeline, and repeated runs of the same configuration produce
//! byte-identical data files.

pub mod config;
pub mod cosmo;
pub mod density;
pub mod dg;
pub mod epr;
pub mod errors;
pub mod experiments;
pub mod field;
pub mod fit;
pub mod grid;
pub mod manifest;
pub mod observable;
pub mod pair;
pub mod response;
pub mod spectral;

pub use errors::{Error, Result};
pub use field::WaveField;
pub use grid::GridSpec;
