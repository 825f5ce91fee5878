pub mod checks;
pub mod conformal;
pub mod curvature_algebra;
pub mod dim;
pub mod error;
pub mod json;
pub mod numerics;
pub mod variational;
pub mod warped_smms;

pub use dim::DimParam;
pub use error::{Result, SmmsError};
