//! Decay-time laws for neutral kaons under three competing models, with
//! sampling, detector folding, inference and spectral tools.

pub mod basis;
pub mod error;
pub mod evolution;
pub mod expsum;
pub mod inference;
pub mod intensity;
pub mod params;
pub mod entangled;
pub mod rng;
pub mod sampler;
pub mod single;
pub mod spectral;
pub mod zeno;

pub use error::{Error, Result};
pub use params::{ComplexEnergy, DecayModel, KaonParams};
