//! Comparing populations of networks through the topology of their latent
//! space embeddings.
//!
//! The flow for a single network is
//! [`Graph`] → [`lsm::fit_lsm`] → [`persistence::vr_filtration`] →
//! [`persistence::diagram`] → [`landscape::build_landscape`].
//! Populations of landscapes are then compared with the energy statistics in
//! [`energy`] or grouped with the algorithms in [`clustering`]. Both work off a
//! precomputed [`energy::DistanceCache`] of pairwise L2 landscape distances.

pub mod clustering;
pub mod energy;
mod error;
pub mod landscape;
pub mod lsm;
pub mod netgen;
pub mod persistence;
pub mod seed;

pub use clustering::{Affinity, Partition};
pub use energy::{DistanceCache, StatisticKind, TestReport};
pub use error::{Error, Result};
pub use landscape::Landscape;
pub use lsm::{Embedding, FitConfig};
pub use netgen::{DescriptorRecord, Graph};
pub use persistence::{Convention, Filtration, PersistenceDiagram};
