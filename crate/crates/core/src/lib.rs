//! hp boundary elements for the electric field integral equation.
//!
//! The crate discretizes the EFIE on triangulated closed polyhedral surfaces
//! and open screens with divergence-conforming Raviart–Thomas elements of
//! locally variable degree, and carries the verification machinery around
//! it: exact reference-element algebra, smoothed Poincaré liftings and
//! commuting projection-based interpolation, singular panel integration,
//! Galerkin assembly and dense solves, and the study harness behind the
//! `hpefie` binary.

pub mod bem_kernels;
pub mod efie_system;
pub mod error;
pub mod exact;
pub mod geometry;
pub mod global_space;
pub mod harness;
pub mod interpolation;
pub mod mesh;
pub mod poincare;
pub mod poly;
pub mod quadrature;
pub mod ref_elements;

pub use error::{Error, Result};
pub use mesh::{AffineChart, DegreeMap, SurfaceKind, SurfaceMesh};
