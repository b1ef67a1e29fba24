//! Bundled example networks: the three-edge two-path network used
//! throughout the documentation and tests, and the Eastern Massachusetts
//! (EMA) highway benchmark (74 nodes, 129 edges) with its fragility-class
//! assignment.
//!
//! The EMA bundle ships connectivity and fragility classes only. Node
//! coordinates and travel times are not part of the published benchmark
//! tables, so analyses must supply rupture distances (or an epicenter with
//! user coordinates) and may fall back to unit edge lengths.

use crate::error::Result;
use crate::hazard::{ClassMap, FragilityClass};
use crate::model::ComponentSpace;
use crate::sysfun::NetworkTopology;

/// Three nodes joined by a bridge edge and two parallel edges; components
/// fail with probabilities 0.1, 0.2, 0.3.
pub fn didactic_topology() -> NetworkTopology {
    NetworkTopology::new(3, vec![(0, 1), (1, 2), (1, 2)]).expect("static topology")
}

pub fn didactic_space() -> ComponentSpace {
    ComponentSpace::binary(&[0.1, 0.2, 0.3]).expect("static marginals")
}

/// EMA edge list as 1-based node pairs, in edge order `e1..e129`.
pub const EMA_EDGES: [(u16, u16); 129] = [
    (1, 3),
    (1, 7),
    (1, 9),
    (2, 3),
    (3, 6),
    (3, 7),
    (4, 6),
    (4, 8),
    (5, 10),
    (5, 11),
    (6, 8),
    (6, 13),
    (6, 17),
    (7, 9),
    (7, 13),
    (8, 11),
    (8, 16),
    (9, 12),
    (9, 13),
    (10, 11),
    (10, 18),
    (10, 20),
    (11, 19),
    (13, 14),
    (13, 15),
    (14, 17),
    (14, 22),
    (16, 17),
    (16, 19),
    (16, 22),
    (17, 22),
    (18, 19),
    (18, 21),
    (19, 22),
    (20, 21),
    (20, 30),
    (20, 58),
    (21, 22),
    (21, 23),
    (22, 23),
    (22, 25),
    (22, 28),
    (22, 29),
    (22, 40),
    (23, 24),
    (23, 31),
    (24, 25),
    (24, 26),
    (24, 33),
    (25, 26),
    (26, 27),
    (26, 28),
    (27, 28),
    (27, 33),
    (27, 35),
    (28, 37),
    (29, 41),
    (29, 49),
    (30, 31),
    (30, 60),
    (31, 32),
    (31, 60),
    (32, 33),
    (32, 34),
    (32, 60),
    (33, 34),
    (34, 35),
    (34, 60),
    (35, 36),
    (35, 71),
    (36, 43),
    (36, 44),
    (36, 71),
    (37, 38),
    (37, 42),
    (38, 39),
    (38, 42),
    (39, 40),
    (39, 48),
    (40, 41),
    (40, 48),
    (41, 49),
    (42, 43),
    (42, 45),
    (43, 44),
    (43, 45),
    (44, 46),
    (44, 54),
    (45, 46),
    (45, 47),
    (46, 47),
    (46, 54),
    (47, 48),
    (47, 74),
    (48, 49),
    (48, 51),
    (48, 52),
    (48, 53),
    (48, 54),
    (48, 74),
    (49, 50),
    (49, 73),
    (50, 51),
    (50, 73),
    (51, 52),
    (52, 53),
    (53, 54),
    (55, 57),
    (56, 57),
    (57, 58),
    (57, 59),
    (58, 59),
    (59, 60),
    (59, 72),
    (60, 61),
    (60, 63),
    (60, 65),
    (60, 67),
    (60, 69),
    (60, 71),
    (60, 72),
    (62, 63),
    (63, 65),
    (64, 65),
    (65, 66),
    (67, 68),
    (67, 69),
    (69, 70),
    (69, 71),
];

pub const EMA_N_NODES: usize = 74;

/// Origin nodes (international airports), 0-based: `n22` and `n66`.
pub const EMA_ORIGINS: [usize; 2] = [21, 65];

/// Edges classified HWB2 (major bridge), 1-based edge ids.
pub const EMA_HWB2_EDGES: [usize; 11] = [27, 30, 31, 34, 38, 40, 41, 42, 43, 44, 58];

/// Edges classified HWB4 (single span), 1-based edge ids.
pub const EMA_HWB4_EDGES: [usize; 28] = [
    11, 20, 24, 28, 32, 45, 47, 48, 50, 51, 52, 53, 59, 61, 64, 70, 74, 76, 78, 80, 85, 86, 87,
    89, 90, 91, 123, 126,
];

pub fn ema_topology() -> Result<NetworkTopology> {
    NetworkTopology::new(
        EMA_N_NODES,
        EMA_EDGES
            .iter()
            .map(|&(u, v)| (usize::from(u) - 1, usize::from(v) - 1))
            .collect(),
    )
}

/// The fragility assignment: HWB2 and HWB4 edges explicit, every other
/// roadway HWB11.
pub fn ema_class_map() -> ClassMap {
    let mut map = ClassMap::with_default(FragilityClass::hwb11());
    for &e in &EMA_HWB2_EDGES {
        map.assign(e - 1, FragilityClass::hwb2());
    }
    for &e in &EMA_HWB4_EDGES {
        map.assign(e - 1, FragilityClass::hwb4());
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ema_bundle_loads() {
        let topo = ema_topology().unwrap();
        assert_eq!(topo.n_nodes(), 74);
        assert_eq!(topo.n_edges(), 129);
        for &o in &EMA_ORIGINS {
            assert!(o < topo.n_nodes());
        }
    }

    #[test]
    fn ema_class_lists_are_disjoint() {
        for e in EMA_HWB2_EDGES {
            assert!(!EMA_HWB4_EDGES.contains(&e));
        }
        let map = ema_class_map();
        assert_eq!(map.resolve(26).unwrap().name, "HWB2"); // e27
        assert_eq!(map.resolve(10).unwrap().name, "HWB4"); // e11
        assert_eq!(map.resolve(0).unwrap().name, "HWB11"); // e1
    }

    #[test]
    fn ema_trace_edges_exist() {
        // The documented shortest path for node 31 heads through
        // e62 = (31, 60), e117 = (60, 65), e125 = (65, 66).
        assert_eq!(EMA_EDGES[61], (31, 60));
        assert_eq!(EMA_EDGES[116], (60, 65));
        assert_eq!(EMA_EDGES[124], (65, 66));
    }
}
