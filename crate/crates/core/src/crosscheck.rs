//! Alternating interference-leakage minimization.
//!
//! This is a local method: it can stall above zero on feasible networks, so
//! its output is only ever used to corroborate a verdict, never to make one.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::feasibility::Verdict;
use crate::linalg::{gaussian_matrix, random_stiefel, ComplexMatrix, RandomSeed};
use crate::scenario::{Edge, Scenario};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CrosscheckError {
    #[error("user {0} carries more streams than it has antennas")]
    StreamsExceedAntennas(usize),
    #[error("no channel for link {0}")]
    MissingChannel(Edge),
}

/// Convergence near an aligned point is sublinear; (5x5,2)^4 can need ~30k.
pub const DEFAULT_MAX_ITERS: usize = 50_000;
/// Leakage below this counts as aligned.
pub const ALIGNED_LEAKAGE: f64 = 1e-9;
const STALL_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakageTrace {
    pub iterations: usize,
    /// Total leakage after the initial decoder update and after every
    /// subsequent full iteration.
    pub leakage_per_iter: Vec<f64>,
    pub converged: bool,
}

impl LeakageTrace {
    pub fn final_leakage(&self) -> f64 {
        self.leakage_per_iter.last().copied().unwrap_or(0.0)
    }

    pub fn aligned(&self) -> bool {
        self.final_leakage() < ALIGNED_LEAKAGE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeakageSolution {
    pub decoders: BTreeMap<usize, ComplexMatrix>,
    pub precoders: BTreeMap<usize, ComplexMatrix>,
    pub trace: LeakageTrace,
}

/// I.i.d. complex Gaussian channels on every link.
pub fn random_channels(scenario: &Scenario, seed: RandomSeed) -> BTreeMap<Edge, ComplexMatrix> {
    let mut rng = seed.rng();
    scenario
        .edges()
        .iter()
        .map(|&e| {
            let m = gaussian_matrix(scenario.user(e.rx).rx_antennas, scenario.user(e.tx).tx_antennas, &mut rng);
            (e, m)
        })
        .collect()
}

/// Orthonormal basis of the `d` least dominant eigenvectors of a Hermitian matrix.
fn least_eigenvectors(cov: ComplexMatrix, d: usize) -> ComplexMatrix {
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    ComplexMatrix::from_fn(eig.eigenvectors.nrows(), d, |i, j| eig.eigenvectors[(i, order[j])])
}

/// `Σ ||U_kᵀ H_kl V_l||²` over links.
pub fn total_leakage(
    scenario: &Scenario,
    channels: &BTreeMap<Edge, ComplexMatrix>,
    decoders: &BTreeMap<usize, ComplexMatrix>,
    precoders: &BTreeMap<usize, ComplexMatrix>,
) -> f64 {
    scenario
        .edges()
        .iter()
        .map(|e| (decoders[&e.rx].transpose() * &channels[e] * &precoders[&e.tx]).norm_squared())
        .sum()
}

/// Alternates exact minimizations over the decoders and the precoders.
///
/// `||U_kᵀ X||² = ||Ũ_k* X||²` with `Ũ_k = conj(U_k)`, so the best decoder
/// is the conjugate of the least eigenvectors of `Σ_l X X*`, `X = H_kl V_l`.
/// The precoder step is the same on the reciprocal network, with
/// `X = H_klᵀ U_k`. Every half-step can only lower the leakage.
pub fn min_leakage_solve(
    scenario: &Scenario,
    channels: &BTreeMap<Edge, ComplexMatrix>,
    max_iters: usize,
    seed: RandomSeed,
) -> Result<LeakageSolution, CrosscheckError> {
    let (rx, tx) = scenario.projections();
    let u = |j: usize| scenario.user(j);
    if let Some(j) = rx
        .iter()
        .find(|&&k| u(k).streams > u(k).rx_antennas)
        .or_else(|| tx.iter().find(|&&l| u(l).streams > u(l).tx_antennas))
    {
        return Err(CrosscheckError::StreamsExceedAntennas(j + 1));
    }
    if let Some(e) = scenario.edges().iter().find(|e| !channels.contains_key(e)) {
        return Err(CrosscheckError::MissingChannel(*e));
    }
    let mut rng = seed.rng();
    let mut precoders: BTreeMap<usize, ComplexMatrix> = tx
        .iter()
        .map(|&l| {
            let u = scenario.user(l);
            (l, random_stiefel(u.tx_antennas, u.streams, &mut rng).expect("streams fit"))
        })
        .collect();
    let mut decoders = BTreeMap::new();

    let update_decoders = |precoders: &BTreeMap<usize, ComplexMatrix>, decoders: &mut BTreeMap<usize, ComplexMatrix>| {
        for &k in &rx {
            let n = scenario.user(k).rx_antennas;
            let mut cov = ComplexMatrix::zeros(n, n);
            for e in scenario.edges().iter().filter(|e| e.rx == k) {
                let x = &channels[e] * &precoders[&e.tx];
                cov += &x * x.adjoint();
            }
            decoders.insert(k, least_eigenvectors(cov, scenario.user(k).streams).conjugate());
        }
    };
    let update_precoders = |decoders: &BTreeMap<usize, ComplexMatrix>, precoders: &mut BTreeMap<usize, ComplexMatrix>| {
        for &l in &tx {
            let m = scenario.user(l).tx_antennas;
            let mut cov = ComplexMatrix::zeros(m, m);
            for e in scenario.edges().iter().filter(|e| e.tx == l) {
                let x = channels[e].transpose() * &decoders[&e.rx];
                cov += &x * x.adjoint();
            }
            precoders.insert(l, least_eigenvectors(cov, scenario.user(l).streams).conjugate());
        }
    };

    update_decoders(&precoders, &mut decoders);
    let mut trace = LeakageTrace {
        iterations: 0,
        leakage_per_iter: vec![total_leakage(scenario, channels, &decoders, &precoders)],
        converged: false,
    };
    while trace.iterations < max_iters {
        let before = trace.final_leakage();
        if before < ALIGNED_LEAKAGE {
            trace.converged = true;
            break;
        }
        update_precoders(&decoders, &mut precoders);
        update_decoders(&precoders, &mut decoders);
        let after = total_leakage(scenario, channels, &decoders, &precoders);
        trace.iterations += 1;
        trace.leakage_per_iter.push(after);
        if after < ALIGNED_LEAKAGE || (before - after) <= STALL_RATIO * before {
            trace.converged = true;
            break;
        }
    }
    Ok(LeakageSolution {
        decoders,
        precoders,
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Agreement {
    /// Feasible verdict and some run aligned.
    Corroborated,
    /// Infeasible verdict and no run aligned.
    Consistent,
    /// Feasible verdict but every run stalled; expected now and then.
    Unconfirmed,
    /// Infeasible verdict yet some run aligned.
    Conflicting,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrosscheckReport {
    pub agreement: Agreement,
    pub runs: usize,
    pub aligned_runs: usize,
    pub final_leakage: Vec<f64>,
}

/// Runs the solver once per seed on fresh channels and compares with the verdict.
pub fn corroborate(scenario: &Scenario, verdict: &Verdict, seeds: &[RandomSeed], max_iters: usize) -> CrosscheckReport {
    let mut final_leakage = Vec::new();
    for &seed in seeds {
        let channels = random_channels(scenario, seed.derive(0xC));
        match min_leakage_solve(scenario, &channels, max_iters, seed.derive(0xD)) {
            Ok(sol) => final_leakage.push(sol.trace.final_leakage()),
            Err(_) => {
                return CrosscheckReport {
                    agreement: Agreement::Skipped,
                    runs: 0,
                    aligned_runs: 0,
                    final_leakage: Vec::new(),
                }
            }
        }
    }
    let aligned_runs = final_leakage.iter().filter(|&&l| l < ALIGNED_LEAKAGE).count();
    let agreement = match (final_leakage.is_empty(), verdict.feasible, aligned_runs > 0) {
        (true, _, _) => Agreement::Skipped,
        (false, true, true) => Agreement::Corroborated,
        (false, true, false) => Agreement::Unconfirmed,
        (false, false, false) => Agreement::Consistent,
        (false, false, true) => Agreement::Conflicting,
    };
    CrosscheckReport {
        agreement,
        runs: final_leakage.len(),
        aligned_runs,
        final_leakage,
    }
}
