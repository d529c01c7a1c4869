//! Deep convolutional framelets: Hankel lifting, encoder-decoder framelet
//! layers, perfect-reconstruction analysis, Haar multi-resolution networks,
//! low-rank Hankel shrinkage and iterative restoration.
//!
//! Signals are `DVector<f64>`, multi-channel signals are `n x p` matrices with
//! one channel per column, and all boundaries wrap around.

pub mod basis;
pub mod conv;
pub mod error;
pub mod hankel;
pub mod io;
pub mod layer;
pub mod linalg;
pub mod lowrank;
pub mod mra;
pub mod network;
pub mod nonlin;
pub mod pr;
pub mod restore;
pub mod trainer;

pub use basis::{BasisPair, NonlocalKind};
pub use error::{Error, Result};
pub use layer::FilterBank;
pub use network::{LayerSpec, NetworkSpec};
