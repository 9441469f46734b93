//! Exact-rational approximation schemes for finite-horizon stochastic dynamic
//! programs with a scalar continuous state, convex piecewise-linear costs and
//! independent random variables.
//!
//! The crate builds relative-error approximations of the value function stage
//! by stage: CDFs of weighted sums are compressed, expectations are taken in
//! closed form, each stage problem is a parametric linear program, and the
//! resulting value function is compressed onto a lattice that keeps number
//! sizes bounded.

pub mod approx;
pub mod calculus;
pub mod canonical;
pub mod convolve;
pub mod error;
pub mod expect;
pub mod interval;
pub mod io;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod pwl;
pub mod randvar;
pub mod rat;
pub mod resource;
pub mod scheme;
pub mod simulate;

pub use canonical::{CanonicalRep, Claim, Mode};
pub use error::{Error, Result};
pub use interval::Interval;
pub use pwl::{MaxAffine, Plane, PwlConvex};
pub use rat::Rat;
