//! Reference scenarios shipped with the library. The sources live in
//! `catalog/*.scn` and are embedded at compile time.

use crate::dsl::{self, Diagnostic};
use crate::scalar::Scalar;
use crate::scenario::Scenario;

const SOURCES: [(&str, &str); 5] = [
    ("tunnel_child", include_str!("../catalog/tunnel_child.scn")),
    ("lane_change_truck", include_str!("../catalog/lane_change_truck.scn")),
    ("lane_positioning", include_str!("../catalog/lane_positioning.scn")),
    (
        "motorcyclists_helmet",
        include_str!("../catalog/motorcyclists_helmet.scn"),
    ),
    (
        "pedestrian_blind_spot",
        include_str!("../catalog/pedestrian_blind_spot.scn"),
    ),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    SOURCES.iter().map(|(name, _)| *name)
}

/// Scenario file text of a catalog entry.
pub fn source(name: &str) -> Option<&'static str> {
    SOURCES.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn load<T: Scalar>(name: &str) -> Option<Result<Scenario<T>, Vec<Diagnostic>>> {
    source(name).map(dsl::parse)
}

/// Every catalog scenario, parsed, in catalog order.
pub fn catalog<T: Scalar>() -> Vec<(&'static str, Scenario<T>)> {
    SOURCES
        .iter()
        .map(|(name, text)| {
            let scenario = dsl::parse(text).unwrap_or_else(|d| panic!("catalog scenario {name} is invalid: {d:?}"));
            (*name, scenario)
        })
        .collect()
}
