//! Feasibility of linear interference alignment in MIMO interference
//! networks: dimension counting, the generic-rank test in floating point
//! and in exact arithmetic, necessary-condition screens, DoF search and an
//! iterative leakage solver for corroboration.

pub mod bounds;
pub mod crosscheck;
pub mod dof_search;
pub mod exact;
pub mod feasibility;
pub mod fixtures;
pub mod inverse_ia;
pub mod linalg;
pub mod scenario;

pub use bounds::{bounds_report, BoundsReport};
pub use dof_search::{max_dof, DofResult, SearchOptions};
pub use exact::{exact_feasibility_test, ExactVerdict};
pub use feasibility::{compute_s, feasibility_test, Verdict};
pub use linalg::RandomSeed;
pub use scenario::{parse_scenario, parse_template, Edge, Scenario, ScenarioError, UserConfig};
