//! Discretized variational calculus for Poisson-gradient systems
//! `Δu = ∇F(t, u)` on a periodic multi-time box.

pub mod action;
pub mod calculus;
pub mod cli;
pub mod domain;
pub mod error;
pub mod potentials;
pub mod solver;
pub mod verify;
pub mod config;
pub mod io;
mod fft;

pub use calculus::Scheme;
pub use domain::{make_domain, DomainRef, Field, GradientField, TorusDomain};
pub use error::{Error, Result};
