//! Numerics for level-2 rough path calculus: Hölder rough paths, controlled
//! paths, compensated-sum rough integrals, a Picard solver for rough
//! differential equations, and reproducible convergence / stability
//! experiments on top of them.

pub mod calculus;
pub mod controlled;
pub mod error;
pub mod grid;
pub mod integral;
pub mod kahan;
pub mod lab;
pub mod lift;
pub mod linalg;
pub mod par;
pub mod rng;
pub mod rough;
mod scan;
pub mod solver;

pub use controlled::ControlledPath;
pub use error::{Error, Result};
pub use grid::{Grid, GridKind};
pub use rough::{Alpha, HolderReport, RoughPath};
