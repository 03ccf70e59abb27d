//! Models bundled with the library.

use crate::grid::GridModel;

pub const THREE_BUS_JSON: &str = include_str!("../data/threebus.json");
pub const GARVER6_JSON: &str = include_str!("../data/garver6.json");

/// Three-bus prototype: two generators at bus 1, one at bus 2, load at bus 3,
/// no line limits.
pub fn three_bus() -> GridModel {
    GridModel::from_json(THREE_BUS_JSON).expect("bundled three-bus model is valid")
}

/// Garver six-bus network with generators at buses 4, 5 and 6.
pub fn garver6() -> GridModel {
    GridModel::from_json(GARVER6_JSON).expect("bundled six-bus model is valid")
}

/// Looks up a bundled model by file or short name.
pub fn by_name(name: &str) -> Option<GridModel> {
    match name {
        "threebus" | "threebus.json" | "3bus" => Some(three_bus()),
        "garver6" | "garver6.json" | "6bus" => Some(garver6()),
        _ => None,
    }
}
