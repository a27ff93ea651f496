//! Distribution families, likelihood fitting, goodness-of-fit tests and
//! distance-dependent rate laws.

pub mod censored;
pub mod dist;
pub mod fit;
pub mod gof;
pub mod lambda;
pub mod optim;
pub mod rng;

pub use censored::{fit_censored, CensoredSample, Observation};
pub use dist::{DistSpec, Family, Params};
pub use fit::fit;
pub use gof::{cdf_mse, chi2_gof, ks_test, GofResult};
pub use lambda::{eval_lambda, fit_lambda, LambdaBin};
pub use rng::{sample, seeded, StreamRng, Streams};
