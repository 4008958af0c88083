//! Random bipartite plane maps and looptrees with prescribed face degrees.
//!
//! The crate samples the discrete objects uniformly (through their
//! Łukasiewicz coding paths), transports labels through the bijection between
//! labelled looptrees and pointed bipartite maps, simulates the continuum
//! limits, and provides the statistics used to compare both worlds.
//!
//! Conventions used throughout:
//! - a path with `E` edges has integer times `0..=E`; time 0 carries the root
//!   cycle, whose length is `rho`;
//! - tree vertex `k` of the augmented plane tree is visited at time `k` in
//!   depth-first order, vertex 0 being the extra root;
//! - corner `k` of the looptree is the corner preceding tree vertex `k`, and
//!   corner `E` is identified with the root corner `0`.

pub mod continuum;
pub mod degseq;
pub mod error;
pub mod experiment;
pub mod io;
pub mod labels;
pub mod loopforge;
pub mod lukapath;
pub mod mapbij;
pub mod mmspace;
pub mod rmq;
pub mod rng;

#[cfg(test)]
pub(crate) mod testutil;

pub use continuum::{CadlagPath, GaussianLabelField};
pub use degseq::{DegreeSequence, Stats, ThetaParams};
pub use error::{Error, Result};
pub use labels::{BridgeLaw, Labelling};
pub use loopforge::{Looptree, PlaneForest, ReducedTree};
pub use lukapath::{AncestralRecord, LukaPath};
pub use mapbij::BipartiteMap;
pub use mmspace::FiniteMMSpace;
