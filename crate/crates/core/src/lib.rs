//! Vehicle-to-vehicle multipath channel modelling: a catalogue of fitted
//! scenario models, a geometry-free stochastic channel simulator, multipath
//! component extraction from recorded impulse responses, and the statistics
//! that turn tracked components back into a model.

pub mod analysis;
pub mod error;
pub mod extract;
pub mod scenario;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use scenario::{builtin_model, ScenarioId, ScenarioModel};
pub use stats::{DistSpec, Family, GofResult};
