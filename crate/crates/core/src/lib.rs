//! Real-time ocean surface simulation with floating rigid bodies.
//!
//! The sea is a sum of spectral cascades evaluated with inverse FFTs. Bodies
//! float on it through a per-triangle hydrostatic and drag model. Each body
//! carries a local finite-difference wave zone for its wake.

pub mod bench;
pub mod error;
pub mod fft;
pub mod hydro;
pub mod interactive;
pub mod io;
pub mod mesh;
pub mod reduce;
pub mod rigid_body;
pub mod scenario;
pub mod sim;
pub mod spectra;
pub mod surface;
pub mod velocity;

pub use error::{Error, Result};
