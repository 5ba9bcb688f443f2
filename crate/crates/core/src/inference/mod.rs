//! Estimators and tests built on the decay laws.

pub mod epsilon;
pub mod fit;
pub mod power;
pub mod simplex;
pub mod weights;

pub use epsilon::{extract_epsilon, EpsilonEstimate};
pub use fit::{fit_intensity, FitParam, FitResult, FitSetup};
pub use power::{discrimination_power, test_size, PowerOptions, PowerPoint, PowerReport};
pub use weights::{weight_ratio_estimate, WeightRatio};
