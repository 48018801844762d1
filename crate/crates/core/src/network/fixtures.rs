//! Bundled feeders.

use super::{load_network, FeederNetwork};

const IEEE37: &str = include_str!("../../data/ieee37.json");
const TWO_BUS: &str = include_str!("../../data/two_bus.json");
const FEEDER13: &str = include_str!("../../data/feeder13.json");
const FIVE_BUS: &str = include_str!("../../data/five_bus.json");

/// 37-bus test feeder with three grid-forming units, five PV units and four
/// normally-open tie lines.
pub fn ieee37() -> FeederNetwork {
    load_network(IEEE37).expect("bundled ieee37 fixture is valid")
}

/// Substation, grid-forming bus A (gp 1.0) and load bus B (dp 0.6).
pub fn two_bus() -> FeederNetwork {
    load_network(TWO_BUS).expect("bundled two_bus fixture is valid")
}

/// 13-bus feeder: grid-formers 633 and 680, PV at 611, 646 and 675, two
/// normally-open tie lines.
pub fn feeder13() -> FeederNetwork {
    load_network(FEEDER13).expect("bundled feeder13 fixture is valid")
}

/// Substation and a four-bus ring A-B-C-D closed by the tie A-D; A is
/// grid-forming, C carries PV.
pub fn five_bus() -> FeederNetwork {
    load_network(FIVE_BUS).expect("bundled five_bus fixture is valid")
}

pub const NAMES: [&str; 4] = ["ieee37", "feeder13", "five_bus", "two_bus"];

/// Looks up a bundled fixture by name.
pub fn by_name(name: &str) -> Option<FeederNetwork> {
    raw(name).map(|text| load_network(text).expect("bundled fixture is valid"))
}

pub fn raw(name: &str) -> Option<&'static str> {
    match name {
        "ieee37" => Some(IEEE37),
        "feeder13" => Some(FEEDER13),
        "five_bus" | "five-bus" => Some(FIVE_BUS),
        "two_bus" | "two-bus" => Some(TWO_BUS),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::PartitionGraph;

    #[test]
    fn ieee37_shape() {
        let n = ieee37();
        assert_eq!(n.buses.len(), 37);
        let gf: Vec<&str> = n.buses.iter().filter(|b| b.grid_forming).map(|b| b.id.as_str()).collect();
        assert_eq!(gf, vec!["710", "718", "742"]);
        let loads = n.buses.iter().filter(|b| b.dp > 0.0).count();
        assert_eq!(loads, 22);
        assert_eq!(n.num_tie_lines(), 4);
        for id in ["702", "705", "707", "709", "737"] {
            let b = n.bus(id).unwrap();
            assert!(b.gp > 0.0 && !b.grid_forming);
        }
        let total = n.total_demand();
        let gfcap: f64 = n.buses.iter().filter(|b| b.grid_forming).map(|b| b.gp).sum();
        let pvcap: f64 = n.buses.iter().filter(|b| !b.grid_forming).map(|b| b.gp).sum();
        assert!((gfcap / total - 0.13).abs() < 1e-4);
        assert!((pvcap / total - 0.29).abs() < 1e-4);
        let g = PartitionGraph::new(&n);
        assert_eq!(g.num_vertices(), 36);
        assert_eq!(g.components().len(), 1);
    }

    #[test]
    fn two_bus_loads() {
        let n = two_bus();
        assert_eq!(n.buses.len(), 3);
        assert!(by_name("nope").is_none());
    }

    #[test]
    fn small_fixtures_are_connected() {
        for name in NAMES {
            let n = by_name(name).unwrap();
            assert_eq!(PartitionGraph::new(&n).components().len(), 1, "{name}");
        }
        assert_eq!(feeder13().num_tie_lines(), 2);
        assert_eq!(five_bus().num_tie_lines(), 1);
    }
}
