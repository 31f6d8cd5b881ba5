//! Numerical laboratory for the perturbed quadratic foliation
//! `ker(dH + eps (omega1 + a omega2))` of C²: leaf lifting and Poincaré return maps,
//! the resonant first-order coefficient of the return map, m-periodic orbits (m-fold limit
//! cycles) and their continuation in `eps`.

// Guards are written `!(x > tol)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuation;
pub mod error;
pub mod family;
pub mod integrate;
pub mod io;
pub mod melnikov;
pub mod orbits;

pub use num_complex::Complex64;

pub use error::{Error, Result};
pub use family::{Annulus, FoliationParams};
pub use integrate::{LiftOptions, LiftResult, LiftStatus, MapValue};
