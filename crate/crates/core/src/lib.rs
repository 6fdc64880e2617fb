//! Traveling waves of the thin-film equation with partial wetting.
//!
//! The crate builds the contact-line expansion of the slope-squared profile
//! `psi(H) = (dH/dx)^2`, shoots on its free parameter `b` to reach the
//! Cox-Voinov far field, checks the result against an independent Picard
//! solver on a truncated domain, and extracts the macroscopic matching
//! constant `B(k)`.

pub mod bvp;
pub mod dynsys;
pub mod error;
pub mod fit;
pub mod matching;
pub mod model;
pub mod ode;
pub mod scalar;
pub mod series;
pub mod shoot;
pub mod verify;

pub use error::{Error, Result};
pub use model::{mobility, normalize, resonance_class, validate_params, Params, ResonanceClass, ScaleRecord};
pub use shoot::{Profile, ShootConfig, State};
