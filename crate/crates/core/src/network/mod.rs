//! Feeder graphs: buses, lines, the substation-free partition graph and
//! topology checks on energization patterns.

pub mod fixtures;
pub mod graph;
mod types;

pub use graph::{reduced_incidence, PartitionGraph, TopologyReport};
pub use types::{load_network, Bus, FeederNetwork, Line, NetworkError};
