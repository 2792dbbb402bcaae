//! Calculus on the Heisenberg groups `H^n`: the group structure, Heisenberg
//! differential forms and the Rumin complex, currents carried by intrinsic
//! submanifolds, and a numerical harness checking Stokes' formula.

pub mod error;
pub mod exterior;
pub mod group;
pub mod linalg;
pub mod measure;
pub mod poly;
pub mod quadrature;
pub mod rumin;
pub mod scalar;
pub mod scene;
pub mod stokes;
pub mod submanifold;

pub use error::{Error, Result};
pub use exterior::{CoordinateForm, InvariantForm, MultiIndex, MultiVector};
pub use group::{GroupParams, HomogeneousDistance, Point, VerticalSplitting};
pub use poly::{rat, Poly, Rational};
pub use scalar::{Bump, SmoothScalar};
pub use rumin::{RuminClass, RuminComplex};
