//! Suspension flows over subshifts with exact arithmetic in a quadratic
//! field: cross-sections and return maps, recoding to two-valued roofs,
//! marker towers, the time-`t` generator and its name decoder, and the
//! entropy and periodic-orbit quantities that certify these constructions.

pub mod error;
pub mod generator;
pub mod quadratic;
pub mod markers;
pub mod measures;
pub mod periodic;
pub mod recode;
pub mod suspension;
pub mod symbolic;

pub use error::{Error, Result};
pub use quadratic::QuadraticReal;
