//! Multiplex graph model, file formats, proximity weights, noise, synthetic
//! generation and out-of-sample splitting.

mod adjacency;
pub mod io;
mod noise;
mod proximity;
mod sbm;
mod split;

pub use adjacency::{GraphView, MultiplexGraph, SparseAdjacency};
pub use io::{load_multiplex, LoadedGraph};
pub use noise::{inject_noise, inject_noise_multiplex};
pub use proximity::{high_order, ProximityMatrix, ProximityMode};
pub use sbm::{synth_multiplex_sbm, SbmConfig, SbmGraph};
pub use split::{oos_split, OosSplit};
