//! Small shared instances for unit tests.

use crate::conflicts::Instance;
use crate::io::{parse_instance, ConflictFormat};

pub const SEVEN_NODE: &str = include_str!("../tests/data/seven-node.mstc");
pub const TRIANGLE: &str = include_str!("../tests/data/triangle-allconf.mstc");

/// Edge ids of the known optimal tree: f-a, a-c, a-d, a-b, b-e, c-g.
pub const SEVEN_NODE_SOLUTION: [usize; 6] = [0, 2, 3, 4, 6, 9];

/// Nodes a..g are 0..6.
pub fn seven_node() -> Instance {
    let mut inst = parse_instance(SEVEN_NODE, ConflictFormat::EdgeIndex).unwrap().instance;
    inst.name = "seven-node".into();
    inst
}

/// Triangle whose three edges are pairwise in conflict.
pub fn triangle() -> Instance {
    let mut inst = parse_instance(TRIANGLE, ConflictFormat::EdgeIndex).unwrap().instance;
    inst.name = "triangle-allconf".into();
    inst
}
