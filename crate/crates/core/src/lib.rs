//! Heterogeneous information networks for recommendation experiments.
//!
//! Build a typed network ([`hin`]), walk it along meta-paths ([`walk`]),
//! measure perplexity diversity of the resulting distributions
//! ([`diversity`]), recommend by mixing meta-path walks ([`recommender`]),
//! randomize one relation while keeping its degrees ([`randomizer`]), and
//! evaluate all of it on a hold-out split ([`evaluation`]).
//!
//! Per-source walks, per-user recommendation, grid cells and replicates run
//! on rayon when the default `parallel` feature is enabled; results do not
//! depend on the number of threads.

pub mod diversity;
pub mod error;
pub mod evaluation;
pub mod hin;
pub mod ingest;
pub mod par;
pub mod randomizer;
pub mod recommender;
pub mod snapshot;
pub mod synth;
pub mod walk;

pub use error::{Error, Result};
pub use hin::{
    build_hin, Hin, HinBuilder, LinkGroup, LinkView, MetaPath, MetaStep, ObjectGroup, Schema,
};
pub use walk::{Pmf, TransitionOperator};
