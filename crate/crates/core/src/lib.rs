//! Semi-discrete differential forms, connections and curvature.
//!
//! Spaces mix integer lattice directions with continuous ones. Fields are
//! matrix-valued functions on such a space, forms carry field coefficients
//! on wedge products of `dn` and `dx`, and a connection one-form gives a
//! covariant derivative whose square is the curvature. The [`lax`] module
//! builds the connections of three integrable models and the [`sim`]
//! module produces numerical solutions to feed them.

pub mod connection;
pub mod domain;
pub mod error;
pub mod forms;
pub mod identities;
pub mod lax;
pub mod sim;
pub mod value;

pub use domain::{make_domain, Domain, Field, LatticeBox, Point};
pub use error::{Error, Result};
pub use value::{CMatrix, Shape, C64};
