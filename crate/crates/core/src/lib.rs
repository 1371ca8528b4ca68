//! Geometry and statistics of partially oriented flag manifolds
//! `Fl(λ; P) = SO(n) / SG_λ^P`.
//!
//! The crate covers
//!
//! * the combinatorics of ordered and set partitions, exact volumes and
//!   covering multiplicities ([`flagspec`]),
//! * Haar sampling of `SO(n)` and its bi-invariant geodesic distance
//!   ([`orthogonal`]),
//! * the quaternion double cover `S³ → SO(3)` and the coordinate systems
//!   used to integrate over it ([`quatcover`]),
//! * Monte Carlo estimates of expected distances with reproducible parallel
//!   streams ([`montecarlo`]),
//! * closed forms and adaptive quadrature for the `n = 3` spaces
//!   ([`analytic`], [`quadrature`]),
//! * the `oriflag` command-line front end ([`cli`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod error;
pub mod flagspec;
pub mod montecarlo;
pub mod orthogonal;
pub mod pi_series;
pub mod quadrature;
pub mod quatcover;

pub use error::{Error, Result};
pub use flagspec::{FiniteIsotropy, FlagSpec, OrderedPartition, SetPartition};
pub use montecarlo::{Estimate, Space};
pub use orthogonal::{Rotation, RotationAngles, RngStream};
pub use pi_series::PiSeries;
pub use quatcover::UnitQuaternion;
