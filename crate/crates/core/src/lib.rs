//! Gradient diversity for mini-batch SGD: diversity measures, batch-size
//! bounds, seeded SGD, diversity-inducing mechanisms, stability and the
//! lower-bound instance.

pub mod dims;
pub mod diversity;
pub mod error;
pub mod io;
pub mod linalg;
pub mod lowerbound;
pub mod problems;
pub mod rng;
pub mod sgd;
pub mod stability;

pub use dims::DimKind;
pub use diversity::{gradient_diversity, GradientStats};
pub use error::{Error, Result};
pub use problems::{Dataset, LossModel, ParamSpace};
pub use sgd::{run_sgd, FunctionClass, SgdConfig, Trajectory};
