//! Necessary conditions. Each check can only rule feasibility out.

use serde::Serialize;
use thiserror::Error;

use crate::feasibility::compute_s;
use crate::scenario::{Edge, Scenario};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundsError {
    #[error("scenario is not symmetric")]
    NotSymmetric,
    #[error("antenna counts must be positive")]
    ZeroAntennas,
    #[error("{edges} links exceed the subset budget of {max}")]
    EdgeBudget { edges: usize, max: usize },
}

pub const DEFAULT_MAX_EDGES: usize = 20;

/// Two-user bound for a pair of users that interfere with each other.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairCheck {
    /// 0-based users, `k < l`.
    pub pair: (usize, usize),
    pub bound: usize,
    pub lhs: usize,
    pub ok: bool,
}

/// `d_k + d_l <= min{M_l + M_k, N_l + N_k, max(N_k, M_l), max(N_l, M_k)}`
/// for every pair with links in both directions.
pub fn pairwise_bound(scenario: &Scenario) -> Vec<PairCheck> {
    let mut out = Vec::new();
    for e in scenario.edges() {
        let (k, l) = (e.rx, e.tx);
        if k > l || !scenario.has_edge(l, k) {
            continue;
        }
        let (uk, ul) = (scenario.user(k), scenario.user(l));
        let bound = (ul.tx_antennas + uk.tx_antennas)
            .min(ul.rx_antennas + uk.rx_antennas)
            .min(uk.rx_antennas.max(ul.tx_antennas))
            .min(ul.rx_antennas.max(uk.tx_antennas));
        let lhs = uk.streams + ul.streams;
        out.push(PairCheck {
            pair: (k, l),
            bound,
            lhs,
            ok: lhs <= bound,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeCheck {
    pub edge: Edge,
    pub lhs: usize,
    pub rhs: usize,
    pub ok: bool,
}

/// `d_k + d_l < N_k + M_l` on every link.
pub fn simple_bound(scenario: &Scenario) -> Vec<EdgeCheck> {
    scenario
        .edges()
        .iter()
        .map(|&e| {
            let (k, l) = (scenario.user(e.rx), scenario.user(e.tx));
            let lhs = k.streams + l.streams;
            let rhs = k.rx_antennas + l.tx_antennas;
            EdgeCheck {
                edge: e,
                lhs,
                rhs,
                ok: lhs < rhs,
            }
        })
        .collect()
}

/// Outer bound on the total DoF of the fully connected `K`-user channel
/// with `M` transmit and `N` receive antennas everywhere.
pub fn symmetric_outer_bound(m: usize, n: usize, k: usize) -> Result<f64, BoundsError> {
    if m == 0 || n == 0 {
        return Err(BoundsError::ZeroAntennas);
    }
    let (lo, hi) = (m.min(n), m.max(n));
    let r = hi / lo;
    Ok(if k <= r {
        (k * lo) as f64
    } else {
        (k * hi) as f64 / (r + 1) as f64
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetricOuter {
    pub bound: f64,
    pub total: usize,
    pub ok: bool,
}

/// Applies [`symmetric_outer_bound`] to a fully connected scenario whose
/// users share one antenna configuration. Stream counts may differ.
pub fn symmetric_outer(scenario: &Scenario) -> Result<SymmetricOuter, BoundsError> {
    let first = scenario.user(0);
    let symmetric = scenario.is_fully_connected()
        && scenario
            .users()
            .iter()
            .all(|u| u.tx_antennas == first.tx_antennas && u.rx_antennas == first.rx_antennas);
    if !symmetric {
        return Err(BoundsError::NotSymmetric);
    }
    let bound = symmetric_outer_bound(first.tx_antennas, first.rx_antennas, scenario.num_users())?;
    let total: usize = scenario.streams().iter().sum();
    Ok(SymmetricOuter {
        bound,
        total,
        ok: total as f64 <= bound,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubsetProperness {
    pub proper: bool,
    /// Lexicographically first violating link set, in sorted order.
    pub witness: Option<Vec<Edge>>,
}

/// Checks every nonempty subset `E` of the links:
///
/// `Σ_{(k,l)∈E} d_k d_l <= Σ_{k∈R(E)} d_k (N_k − d_k) + Σ_{l∈T(E)} d_l (M_l − d_l)`
///
/// where `R(E)` and `T(E)` are the receivers and transmitters touched by
/// `E`. Exponential in the number of links, hence the budget.
pub fn proper_subsets(scenario: &Scenario, max_edges: usize) -> Result<SubsetProperness, BoundsError> {
    let edges = scenario.edges();
    let m = edges.len();
    if m > max_edges || m >= 63 {
        return Err(BoundsError::EdgeBudget { edges: m, max: max_edges });
    }
    let users = scenario.users();
    // Bit positions are indices into the projections, which have at most
    // `m` members each.
    let (rx_set, tx_set) = scenario.projections();
    let rx_users: Vec<usize> = rx_set.into_iter().collect();
    let tx_users: Vec<usize> = tx_set.into_iter().collect();
    let rx_vars: Vec<i64> = rx_users
        .iter()
        .map(|&k| users[k].streams as i64 * (users[k].rx_antennas as i64 - users[k].streams as i64))
        .collect();
    let tx_vars: Vec<i64> = tx_users
        .iter()
        .map(|&l| users[l].streams as i64 * (users[l].tx_antennas as i64 - users[l].streams as i64))
        .collect();
    let rx_bit: Vec<u64> = edges
        .iter()
        .map(|e| 1 << rx_users.binary_search(&e.rx).expect("projection"))
        .collect();
    let tx_bit: Vec<u64> = edges
        .iter()
        .map(|e| 1 << tx_users.binary_search(&e.tx).expect("projection"))
        .collect();
    let eqs: Vec<i64> = edges
        .iter()
        .map(|e| (users[e.rx].streams * users[e.tx].streams) as i64)
        .collect();

    let mut best: Option<Vec<usize>> = None;
    for mask in 1usize..(1 << m) {
        let mut eq = 0;
        let mut rx = 0u64;
        let mut tx = 0u64;
        let mut bits = mask;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            eq += eqs[i];
            rx |= rx_bit[i];
            tx |= tx_bit[i];
        }
        let vars: i64 = ones(rx).map(|k| rx_vars[k]).sum::<i64>() + ones(tx).map(|l| tx_vars[l]).sum::<i64>();
        if eq > vars {
            let idx: Vec<usize> = ones(mask as u64).collect();
            if best.as_ref().is_none_or(|b| idx < *b) {
                best = Some(idx);
            }
        }
    }
    Ok(SubsetProperness {
        proper: best.is_none(),
        witness: best.map(|idx| idx.into_iter().map(|i| edges[i]).collect()),
    })
}

fn ones(mut bits: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (bits != 0).then(|| {
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            i
        })
    })
}

/// All screens at once.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub pairwise: Vec<PairCheck>,
    pub pairwise_ok: bool,
    pub simple: Vec<EdgeCheck>,
    pub simple_ok: bool,
    /// `None` unless the scenario is symmetric.
    pub symmetric_outer: Option<SymmetricOuter>,
    pub s: i64,
    pub proper_global: bool,
    /// `None` when the link count exceeds the subset budget.
    pub proper_subsets: Option<SubsetProperness>,
}

impl BoundsReport {
    /// False if any evaluated screen rules the scenario out.
    pub fn all_ok(&self) -> bool {
        self.pairwise_ok
            && self.simple_ok
            && self.proper_global
            && self.symmetric_outer.as_ref().is_none_or(|o| o.ok)
            && self.proper_subsets.as_ref().is_none_or(|p| p.proper)
    }
}

pub fn bounds_report(scenario: &Scenario, max_edges: usize) -> BoundsReport {
    let pairwise = pairwise_bound(scenario);
    let simple = simple_bound(scenario);
    let s = compute_s(scenario);
    BoundsReport {
        pairwise_ok: pairwise.iter().all(|p| p.ok),
        pairwise,
        simple_ok: simple.iter().all(|e| e.ok),
        simple,
        symmetric_outer: symmetric_outer(scenario).ok(),
        s,
        proper_global: s >= 0,
        proper_subsets: proper_subsets(scenario, max_edges).ok(),
    }
}
