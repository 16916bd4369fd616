//! Limit laws, constants and Monte Carlo checks for the multiscale scan
//! statistic `M_n = max (S_j - S_i) / sqrt(j - i)` of a random walk with
//! light-tailed standardized increments.

pub mod cgf;
pub mod dist;
pub mod error;
pub mod lattice;
pub mod limits;
pub mod mc;
pub mod numeric;
pub mod pickands;
pub mod rng;
pub mod scan;
pub mod tails;

pub use dist::{DistributionSpec, FamilySpec, Lattice};
pub use error::{Error, Result};
