//! Shared inputs for the benchmarks.

use iafeas::{parse_scenario, Scenario};

/// Small to large: the last one dominates the exact test.
pub const SCENARIOS: [&str; 4] = ["(2x2,1)^3", "(5x5,2)^4", "(5x11,3)(5x11,4)^2", "(7x13,5)^3"];

pub fn scenario(text: &str) -> Scenario {
    parse_scenario(text).expect("benchmark scenarios parse")
}
