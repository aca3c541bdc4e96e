//! Field-only boundary integral equations for electromagnetic scattering by
//! smooth perfect electric conductors.
//!
//! The scattered electric or magnetic field is represented by componentwise
//! scalar Helmholtz layer potentials; the PEC boundary conditions become a
//! pair of scalar-operator equations combined into a single second-kind
//! system, optionally regularized through the Calderon identity. No Maxwell
//! integral operators appear anywhere.

pub mod geometry;
pub mod jet;
pub mod kernels;
pub mod linalg;
pub mod mesh;
pub mod operators;
pub mod special;
