//! Simulation and verification toolkit for the partial maxima of
//! stationary, regularly varying sequences.
//!
//! The crate is organized bottom-up:
//!
//! - [`cadlag`]: piecewise-constant càdlàg paths on `[0, 1]` and their
//!   completed graphs.
//! - [`skorokhod`]: M1/J1 oscillations and distances between step paths.
//! - [`regvar`]: Fréchet laws, normalizing constants, Hill and Karamata
//!   diagnostics.
//! - [`models`]: the i.i.d., moving maxima, ARMAX and squared GARCH(1,1)
//!   generators together with their tail and extremal indices.
//! - [`maxima`]: partial-maxima paths, time-space point measures and the
//!   maximum functional.
//! - [`extremal`]: the limiting extremal process.
//! - [`verify`]: Monte Carlo experiments producing [`verify::VerificationReport`]s.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cadlag;
pub mod error;
pub mod extremal;
pub mod maxima;
pub mod models;
pub mod parallel;
pub mod quadrature;
pub mod regvar;
pub mod rng;
pub mod skorokhod;
pub mod verify;

pub use cadlag::{sup_distance, GraphPolyline, StepFunction};
pub use error::{Error, Result};
pub use maxima::PointMeasure;
pub use models::ProcessModel;
pub use parallel::Executor;
pub use regvar::LimitLaw;
pub use verify::{KsResult, VerificationReport};
