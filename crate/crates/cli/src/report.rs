//! JSON shapes written by the command line tool. Optional fields serialize
//! as `null` so every report of a kind has the same keys.

use iafeas::bounds::BoundsReport;
use iafeas::crosscheck::CrosscheckReport;
use iafeas::exact::ExactVerdict;
use iafeas::feasibility::Verdict;
use iafeas::{DofResult, Edge, Scenario};
use serde::Serialize;

pub fn edge_list(edges: &[Edge]) -> Vec<String> {
    edges.iter().map(Edge::to_string).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialJson {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsJson {
    pub pairwise: bool,
    pub simple: bool,
    pub symmetric_outer: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactJson {
    pub feasible: bool,
    pub repetitions: usize,
    pub feasible_claims: Vec<bool>,
    pub ranks: Vec<usize>,
    pub target_rank: usize,
    /// Decimal strings: the theoretical grid size easily runs to thousands of digits.
    pub h_used: String,
    pub theoretical_h: String,
}

impl From<&ExactVerdict> for ExactJson {
    fn from(v: &ExactVerdict) -> Self {
        Self {
            feasible: v.feasible,
            repetitions: v.repetitions,
            feasible_claims: v.feasible_claims.clone(),
            ranks: v.ranks.clone(),
            target_rank: v.target_rank,
            h_used: v.h_used.to_string(),
            theoretical_h: v.theoretical_h.to_string(),
        }
    }
}

/// Output of `test`, and of each line of `batch`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub scenario: String,
    pub s: i64,
    pub proper_global: bool,
    pub proper_subsets: Option<bool>,
    pub bounds: BoundsJson,
    /// `null` when the rank criteria could not be reconciled.
    pub feasible: Option<bool>,
    pub trials: usize,
    pub per_trial: Vec<TrialJson>,
    pub seed: u64,
    pub degenerate: bool,
    pub exact: Option<ExactJson>,
    pub runtime_ms: u64,
}

impl TestReport {
    pub fn new(scenario: &Scenario, bounds: &BoundsReport, seed: u64, trials: usize) -> Self {
        Self {
            scenario: scenario.to_text(),
            s: bounds.s,
            proper_global: bounds.proper_global,
            proper_subsets: bounds.proper_subsets.as_ref().map(|p| p.proper),
            bounds: BoundsJson {
                pairwise: bounds.pairwise_ok,
                simple: bounds.simple_ok,
                symmetric_outer: bounds.symmetric_outer.as_ref().map(|o| o.bound),
            },
            feasible: None,
            trials,
            per_trial: Vec::new(),
            seed,
            degenerate: false,
            exact: None,
            runtime_ms: 0,
        }
    }

    pub fn with_verdict(mut self, v: &Verdict) -> Self {
        self.feasible = Some(v.feasible);
        self.trials = v.trials;
        self.per_trial = v
            .per_trial
            .iter()
            .map(|t| TrialJson {
                sigma_min: t.sigma_min,
                sigma_max: t.sigma_max,
                residual: t.residual,
                pass: t.pass,
            })
            .collect();
        self.degenerate = v.degenerate;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchLine {
    pub line: usize,
    pub input: String,
    pub error: Option<String>,
    pub report: Option<TestReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountReport {
    pub scenario: String,
    pub s: i64,
    pub proper_global: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairJson {
    pub pair: String,
    pub lhs: usize,
    pub bound: usize,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeBoundJson {
    pub edge: String,
    pub lhs: usize,
    pub rhs: usize,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OuterJson {
    pub bound: f64,
    pub total: usize,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsDetail {
    pub scenario: String,
    pub s: i64,
    pub proper_global: bool,
    pub proper_subsets: Option<bool>,
    pub witness: Option<Vec<String>>,
    pub pairwise: Vec<PairJson>,
    pub simple: Vec<EdgeBoundJson>,
    pub symmetric_outer: Option<OuterJson>,
    pub all_ok: bool,
}

impl BoundsDetail {
    pub fn new(scenario: &Scenario, b: &BoundsReport) -> Self {
        Self {
            scenario: scenario.to_text(),
            s: b.s,
            proper_global: b.proper_global,
            proper_subsets: b.proper_subsets.as_ref().map(|p| p.proper),
            witness: b
                .proper_subsets
                .as_ref()
                .and_then(|p| p.witness.as_deref())
                .map(edge_list),
            pairwise: b
                .pairwise
                .iter()
                .map(|p| PairJson {
                    pair: format!("({},{})", p.pair.0 + 1, p.pair.1 + 1),
                    lhs: p.lhs,
                    bound: p.bound,
                    ok: p.ok,
                })
                .collect(),
            simple: b
                .simple
                .iter()
                .map(|e| EdgeBoundJson {
                    edge: e.edge.to_string(),
                    lhs: e.lhs,
                    rhs: e.rhs,
                    ok: e.ok,
                })
                .collect(),
            symmetric_outer: b.symmetric_outer.as_ref().map(|o| OuterJson {
                bound: o.bound,
                total: o.total,
                ok: o.ok,
            }),
            all_ok: b.all_ok(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProperReport {
    pub scenario: String,
    pub proper_global: bool,
    pub proper_subsets: bool,
    pub witness: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DofReport {
    pub template: String,
    pub max_total: usize,
    pub argmax_tuples: Vec<Vec<usize>>,
    pub tuples_tested: usize,
    pub tuples_pruned: usize,
    pub seed: u64,
    pub runtime_ms: u64,
}

impl DofReport {
    pub fn new(template: &str, r: &DofResult, seed: u64) -> Self {
        Self {
            template: template.trim().to_string(),
            max_total: r.max_total,
            argmax_tuples: r.argmax_tuples.clone(),
            tuples_tested: r.tuples_tested,
            tuples_pruned: r.tuples_pruned,
            seed,
            runtime_ms: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactReport {
    pub scenario: String,
    pub s: i64,
    #[serde(flatten)]
    pub verdict: ExactJson,
    pub seed: u64,
    pub runtime_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrosscheckJson {
    pub scenario: String,
    pub feasible: bool,
    #[serde(flatten)]
    pub report: CrosscheckReport,
    pub seed: u64,
    pub runtime_ms: u64,
}
