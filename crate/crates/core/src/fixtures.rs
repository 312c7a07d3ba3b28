//! Reference scenarios with known verdicts.

use crate::scenario::{parse_scenario, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fixture {
    pub text: &'static str,
    pub feasible: bool,
}

impl Fixture {
    pub fn scenario(&self) -> Scenario {
        parse_scenario(self.text).expect("fixtures parse")
    }
}

pub const REFERENCE: [Fixture; 11] = [
    Fixture { text: "(3x3,2)^2", feasible: false },
    Fixture { text: "(5x11,4)^3", feasible: false },
    Fixture { text: "(5x11,3)(5x11,4)^2", feasible: true },
    Fixture { text: "(7x13,5)^3", feasible: false },
    Fixture { text: "(7x13,4)(7x13,5)^2", feasible: true },
    Fixture { text: "(4x4,2)(5x3,2)(6x2,2)", feasible: false },
    Fixture { text: "(3x4,2)(1x3,1)(10x4,2)", feasible: false },
    Fixture { text: "(4x8,3)^3", feasible: false },
    Fixture { text: "(2x2,1)^3(3x5,1)", feasible: false },
    Fixture { text: "(5x5,2)^4", feasible: true },
    Fixture { text: "(2x2,1)(5x5,2)^2(8x8,4)", feasible: true },
];
