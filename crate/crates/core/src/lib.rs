//! Numerical laboratory for Lagrangian products of Orlicz balls.
//!
//! * [`young`]: Young functions, Legendre conjugates and Young's inequality.
//! * [`bodies`]: Luxemburg unit balls, their conjugate balls and polar duals.
//! * [`capacity`]: closed-form capacities of `K_phi x K_phi*` and bounds for
//!   `K_phi x K_phi°`, with the supporting inequality audits.
//! * [`embedding`]: explicit area-preserving maps from discs into nested
//!   rectangles, and the product embedding of a ball into the products above.

pub mod bodies;
pub mod capacity;
pub mod embedding;
pub mod error;
pub mod numeric;
pub mod young;

pub use error::{Error, Result};
pub use young::{ConjugateFunction, ConvexProfile, YoungFunction};
