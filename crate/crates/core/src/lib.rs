pub mod asym;
pub mod densela;
pub mod ensemble;
pub mod error;
pub mod hilbert;
pub mod mc;
pub mod pfaffian;
pub mod quad;
pub mod skewortho;
pub mod specfun;

pub use error::{Error, Result};
