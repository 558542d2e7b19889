//! Unsupervised multiplex graph embedding.
//!
//! Every adjacency layer of a multiplex graph gets its own MLP encoder over the
//! shared node features. Encoders are trained jointly with a local-structure
//! loss on high-order proximities and a cross-layer correlation loss; the final
//! embedding is the mean of the per-layer embeddings. Because encoders only read
//! features, unseen nodes are embedded without touching the graph.
//!
//! The math is generic over [`Scalar`] (`f32` or `f64`); the aliases below fix
//! it to `f64`, which is what the CLI and experiments use.

pub mod error;
pub mod eval;
pub mod experiment;
pub mod gradcheck;
pub mod graph;
pub mod loss;
pub mod model;
pub mod numerics;
pub mod train;

pub use error::{Error, Result};
pub use numerics::{DenseMatrix, Rng, Scalar};

pub type Matrix = numerics::DenseMatrix<f64>;
pub type Adjacency = graph::SparseAdjacency<f64>;
pub type Graph = graph::MultiplexGraph<f64>;
pub type Proximity = graph::ProximityMatrix<f64>;
pub type Mlp = model::MlpEncoder<f64>;
pub type Gcn = model::GcnEncoder<f64>;
pub type Model = train::TrainedModel<f64>;
pub type Embeddings = train::EmbeddingSet<f64>;
pub type Report = loss::LossReport<f64>;

pub type Matrix32 = numerics::DenseMatrix<f32>;
pub type Graph32 = graph::MultiplexGraph<f32>;
pub type Model32 = train::TrainedModel<f32>;
