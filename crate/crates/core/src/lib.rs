//! Deterministic velocity-grid solvers for a two-species mixture whose mass
//! ratio `eps^2` is small, built on an asymptotic-preserving split of each
//! distribution into `f0 + eps f1`.
//!
//! Layout:
//! - [`phase_space`]: velocity grid, sphere rules, moments, Maxwellians.
//! - [`collision_boltzmann`], [`collision_fpl`]: the collision operators and
//!   their limit forms, dispatched through [`operators`].
//! - [`penalty`], [`conservation`]: stiffness removal and invariant fixes.
//! - [`ap_homogeneous`], [`ap_inhomogeneous`]: the time integrators.
//! - [`limit_oracle`]: temperature relaxation ODE and an RK4 reference.
//! - [`config`], [`output`], [`compare`], [`scenario`]: run plumbing.

pub mod ap_homogeneous;
pub mod ap_inhomogeneous;
pub mod collision_boltzmann;
pub mod collision_fpl;
pub mod compare;
pub mod config;
pub mod conservation;
pub mod error;
pub mod limit_oracle;
pub mod operators;
pub mod output;
pub mod penalty;
pub mod phase_space;
pub mod scenario;

pub use ap_homogeneous::{ap_step, SchemeConfig, SplitState};
pub use error::{Error, Result};
pub use operators::{Collision, KernelSet, KernelSpec, Model};
pub use phase_space::{DistField, Hydro, SphereRule, VelocityGrid};
