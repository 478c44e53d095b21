//! Skew Brownian motion with bang-bang drift and the two-particle
//! skew-elastic collision systems built from it.
//!
//! The gap `Y = X1 - X2` of the two-particle system solves
//!
//! ```text
//! dY = -lambda sgn(Y) dt + dW + 2(2 alpha - 1) dLhat
//! ```
//!
//! where `Lhat` is the symmetric local time of `Y` at the origin. The crate
//! simulates `Y` (scale-transformed Euler, exact conditional stepping, or the
//! Skorokhod map when `alpha` is 0 or 1), evaluates its closed-form laws, and
//! rebuilds the planar pair `(X1, X2)` with ranks and collision local time.

pub mod densities;
pub mod error;
pub mod harness;
pub mod io;
pub mod params;
pub mod planar;
pub mod quadrature;
pub mod rng;
pub mod sbbbm;
pub mod special;

pub use error::{Error, Result, WellPosedness};
pub use params::{CollisionParams, DerivedParams, Regime, RegimeTag};
pub use rng::NoiseStream;
pub use sbbbm::{SbbbmParams, SbbbmPath, Scheme};
