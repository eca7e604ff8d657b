//! Joint transmit beamforming, radar receive filter and reflection-coefficient
//! design for a reconfigurable-intelligent-surface (RIS) assisted integrated
//! sensing and communication (ISAC) base station.
//!
//! The solver maximizes the multi-user sum-rate subject to a worst-case radar
//! SNR floor, a transmit power budget and unit-modulus reflection
//! coefficients. It alternates closed-form fractional-programming auxiliaries,
//! a Rayleigh-quotient receive filter, a two-constraint beamforming QP and a
//! majorization-minimization / ADMM reflection step.
//!
//! ```no_run
//! use ris_isac::{channels, driver, scenario};
//! use rand::SeedableRng;
//!
//! let config = scenario::SystemConfig::desk_default();
//! let geometry = scenario::ScenarioGeometry::default();
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
//! let cs = channels::generate(&config, &geometry, &mut rng);
//! let report = driver::solve(&cs, &config).unwrap();
//! println!("{:?}", report.sum_rate);
//! ```

pub mod channels;
pub mod check;
pub mod driver;
pub mod error;
pub mod fp;
pub mod linalg;
pub mod qp;
pub mod radar;
pub mod reflection;
pub mod scenario;
pub mod sweep;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
