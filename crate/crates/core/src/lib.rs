pub mod baselines;
pub mod error;
mod format;
mod init;
pub mod network;
pub mod pd;
pub mod scattering;
pub mod spectral;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use init::Initializer;
pub use network::{model_forward, param_count, PdIaeConfig, PdIaeModel};
pub use spectral::{ComplexGrid, Spectrum};
