//! Verification toolkit for the weighted fourth-order Caffarelli-Kohn-Nirenberg
//! inequality and the Hardy-Henon equation `Delta(|x|^alpha Delta u) = |x|^{-alpha} |u|^{p*-2} u`.

pub mod emden;
pub mod error;
pub mod jet;
pub mod optimize;
pub mod params;
pub mod profiles;
pub mod quadrature;
pub mod radial;
pub mod reduction;
pub mod special;
pub mod spectrum;

pub use error::{CknError, Result};
pub use params::Params;
