//! The rank test.
//!
//! For an aligned triple `(H, U, V)` the derivative of the alignment
//! equations with respect to the filters is the linear map
//!
//! ```text
//! (U̇, V̇) ↦ { U̇_kᵀ H_kl V_l + U_kᵀ H_kl V̇_l }  over links (k, l)
//! ```
//!
//! Alignment is generically feasible exactly when the dimension count `s` is
//! non-negative and this map is surjective at a generic aligned triple. Its
//! matrix `B` has one row block per link and one column block per decoder and
//! precoder:
//!
//! * `B^(U)_kl = I_{d_l} ⊗ U_kᵀ H_kl` multiplies `vec(V̇_l)`,
//! * `B^(V)_kl = K_{d_l d_k} (I_{d_k} ⊗ V_lᵀ H_klᵀ)` multiplies `vec(U̇_k)`.
//!
//! The names follow the usual convention even though `B^(U)` acts on
//! precoder perturbations. Decoder column blocks come first, in user order,
//! followed by the precoder blocks. Rows inside a link's block follow the
//! column-major vectorization of the `d_k x d_l` residual.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::Serialize;
use thiserror::Error;

use crate::inverse_ia::{generic_triple, AlignmentTriple};
use crate::linalg::{
    commutation_matrix, complex_gaussian, identity, kron, least_squares_residual, singular_values, ComplexMatrix,
    ComplexVector, RandomSeed, C64,
};
use crate::scenario::{Edge, Scenario};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeasibilityError {
    #[error("no decoder for receiver {0}")]
    MissingDecoder(usize),
    #[error("no precoder for transmitter {0}")]
    MissingPrecoder(usize),
    #[error("no channel for link {0}")]
    MissingChannel(Edge),
    #[error("at least one trial is required")]
    NoTrials,
    #[error("rank criteria disagree after a retry (trial {trial}): {evidence:?}")]
    Indeterminate { trial: usize, evidence: Box<SurjectivityReport> },
}

/// Number of variables minus number of equations:
///
/// `s = Σ_{k∈Φ_R} (N_k d_k − d_k²) + Σ_{l∈Φ_T} (M_l d_l − d_l²) − Σ_{(k,l)∈Φ} d_k d_l`.
pub fn compute_s(scenario: &Scenario) -> i64 {
    let (rx, tx) = scenario.projections();
    let var = |antennas: usize, d: usize| (antennas * d) as i64 - (d * d) as i64;
    let rx_vars: i64 = rx
        .iter()
        .map(|&k| var(scenario.user(k).rx_antennas, scenario.user(k).streams))
        .sum();
    let tx_vars: i64 = tx
        .iter()
        .map(|&l| var(scenario.user(l).tx_antennas, scenario.user(l).streams))
        .sum();
    let eqs: i64 = scenario
        .edges()
        .iter()
        .map(|e| (scenario.user(e.rx).streams * scenario.user(e.tx).streams) as i64)
        .sum();
    rx_vars + tx_vars - eqs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Role {
    Decoder,
    Precoder,
}

/// Row and column partition of `B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThetaLayout {
    pub rows: usize,
    pub cols: usize,
    pub row_blocks: BTreeMap<Edge, Range<usize>>,
    pub col_blocks: BTreeMap<(Role, usize), Range<usize>>,
}

impl ThetaLayout {
    pub fn new(scenario: &Scenario) -> Self {
        let mut row_blocks = BTreeMap::new();
        let mut rows = 0;
        for &e in scenario.edges() {
            let h = scenario.user(e.rx).streams * scenario.user(e.tx).streams;
            row_blocks.insert(e, rows..rows + h);
            rows += h;
        }
        let (rx, tx) = scenario.projections();
        let mut col_blocks = BTreeMap::new();
        let mut cols = 0;
        for &k in &rx {
            let w = scenario.user(k).streams * scenario.user(k).rx_antennas;
            col_blocks.insert((Role::Decoder, k), cols..cols + w);
            cols += w;
        }
        for &l in &tx {
            let w = scenario.user(l).streams * scenario.user(l).tx_antennas;
            col_blocks.insert((Role::Precoder, l), cols..cols + w);
            cols += w;
        }
        Self {
            rows,
            cols,
            row_blocks,
            col_blocks,
        }
    }

    pub fn decoder_cols(&self, k: usize) -> Range<usize> {
        self.col_blocks[&(Role::Decoder, k)].clone()
    }

    pub fn precoder_cols(&self, l: usize) -> Range<usize> {
        self.col_blocks[&(Role::Precoder, l)].clone()
    }
}

/// The matrix of the tangent map together with its partition.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaMatrix {
    pub matrix: ComplexMatrix,
    pub layout: ThetaLayout,
}

/// `B^(U)_kl = I_{d_l} ⊗ U_kᵀ H_kl`.
pub fn precoder_block(u: &ComplexMatrix, h: &ComplexMatrix, d_l: usize) -> ComplexMatrix {
    kron(&identity(d_l), &(u.transpose() * h)).expect("small blocks")
}

/// `B^(V)_kl = K_{d_l d_k} (I_{d_k} ⊗ V_lᵀ H_klᵀ)`.
pub fn decoder_block(v: &ComplexMatrix, h: &ComplexMatrix, d_k: usize) -> ComplexMatrix {
    let d_l = v.ncols();
    let inner = kron(&identity(d_k), &(v.transpose() * h.transpose())).expect("small blocks");
    commutation_matrix(d_l, d_k) * inner
}

pub fn build_theta_matrix(scenario: &Scenario, triple: &AlignmentTriple) -> Result<ThetaMatrix, FeasibilityError> {
    let layout = ThetaLayout::new(scenario);
    let mut b = ComplexMatrix::zeros(layout.rows, layout.cols);
    for &e in scenario.edges() {
        let u = triple.decoders.get(&e.rx).ok_or(FeasibilityError::MissingDecoder(e.rx))?;
        let v = triple.precoders.get(&e.tx).ok_or(FeasibilityError::MissingPrecoder(e.tx))?;
        let h = triple.channels.get(&e).ok_or(FeasibilityError::MissingChannel(e))?;
        let rows = layout.row_blocks[&e].clone();
        let dec = layout.decoder_cols(e.rx);
        let pre = layout.precoder_cols(e.tx);
        let d_k = scenario.user(e.rx).streams;
        let d_l = scenario.user(e.tx).streams;
        b.view_mut((rows.start, dec.start), (rows.len(), dec.len()))
            .copy_from(&decoder_block(v, h, d_k));
        b.view_mut((rows.start, pre.start), (rows.len(), pre.len()))
            .copy_from(&precoder_block(u, h, d_l));
    }
    Ok(ThetaMatrix { matrix: b, layout })
}

/// Thresholds of the two surjectivity criteria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Pass when `sigma_min / sigma_max` exceeds this.
    pub relative_sigma: f64,
    /// Pass when the least-squares residual of a unit random target is at most this.
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            relative_sigma: 1e-9,
            residual: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Surjective,
    NotSurjective,
    Indeterminate,
}

/// Evidence from [`surjectivity_test`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurjectivityReport {
    pub outcome: Outcome,
    /// `sigma_min(B B*)^{1/2}`: zero whenever `B` has more rows than columns.
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Largest residual over the random targets of the last attempt.
    pub residual: f64,
    pub sigma_pass: bool,
    pub residual_pass: bool,
    /// The criteria disagreed once and fresh targets were drawn.
    pub retried: bool,
}

impl SurjectivityReport {
    pub fn sigma_ratio(&self) -> f64 {
        if self.sigma_max > 0.0 {
            self.sigma_min / self.sigma_max
        } else {
            0.0
        }
    }
}

fn unit_target(len: usize, seed: RandomSeed) -> ComplexVector {
    let mut rng = seed.rng();
    let mut b = ComplexVector::from_fn(len, |_, _| complex_gaussian(&mut rng));
    let n = b.norm();
    b /= C64::new(n, 0.0);
    b
}

/// Decides whether `B` has full row rank.
///
/// The primary criterion compares the smallest and largest singular values;
/// the secondary one solves `B w = b` in the least-squares sense for `targets`
/// random unit vectors `b`. Both must agree. On disagreement fresh targets
/// are drawn once; a second disagreement is reported as indeterminate.
pub fn surjectivity_test(theta: &ThetaMatrix, tol: Tolerances, targets: usize, seed: RandomSeed) -> SurjectivityReport {
    let b = &theta.matrix;
    let (m, n) = b.shape();
    let sv = singular_values(b);
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    let sigma_min = if m > n { 0.0 } else { sv.last().copied().unwrap_or(0.0) };
    let sigma_pass = m <= n && sigma_max > 0.0 && sigma_min > tol.relative_sigma * sigma_max;

    let mut retried = false;
    let mut attempt = 0u64;
    loop {
        let residual = (0..targets.max(1) as u64)
            .map(|t| {
                let target = unit_target(m, seed.derive(attempt << 32 | t));
                least_squares_residual(b, &target).expect("target length matches")
            })
            .fold(0.0, f64::max);
        let residual_pass = residual <= tol.residual;
        let outcome = match (sigma_pass, residual_pass) {
            (true, true) => Outcome::Surjective,
            (false, false) => Outcome::NotSurjective,
            _ if !retried => {
                retried = true;
                attempt += 1;
                continue;
            }
            _ => Outcome::Indeterminate,
        };
        return SurjectivityReport {
            outcome,
            sigma_min,
            sigma_max,
            residual,
            sigma_pass,
            residual_pass,
            retried,
        };
    }
}

/// One independent pipeline of the test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub residual: f64,
    pub pass: bool,
}

/// Outcome of [`feasibility_test`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub s: i64,
    pub feasible: bool,
    pub trials: usize,
    /// Empty when `s < 0`: no rank test is needed.
    pub per_trial: Vec<TrialRecord>,
    pub seed: RandomSeed,
    /// Some channel was forced to zero in at least one trial.
    pub degenerate: bool,
}

pub const DEFAULT_TRIALS: usize = 3;

pub fn feasibility_test(scenario: &Scenario, seed: RandomSeed, trials: usize) -> Result<Verdict, FeasibilityError> {
    feasibility_test_with(scenario, seed, trials, Tolerances::default())
}

/// Full test: dimension count first, then `trials` independent rank tests,
/// each on a freshly sampled aligned triple. Feasible only if every trial
/// finds a surjective map.
pub fn feasibility_test_with(
    scenario: &Scenario,
    seed: RandomSeed,
    trials: usize,
    tol: Tolerances,
) -> Result<Verdict, FeasibilityError> {
    if trials == 0 {
        return Err(FeasibilityError::NoTrials);
    }
    let s = compute_s(scenario);
    if s < 0 {
        return Ok(Verdict {
            s,
            feasible: false,
            trials,
            per_trial: Vec::new(),
            seed,
            degenerate: false,
        });
    }
    let mut per_trial = Vec::with_capacity(trials);
    let mut degenerate = false;
    for t in 0..trials {
        let trial_seed = seed.derive(t as u64);
        let triple = generic_triple(scenario, trial_seed);
        degenerate |= triple.is_degenerate();
        let theta = build_theta_matrix(scenario, &triple)?;
        let report = surjectivity_test(&theta, tol, 1, trial_seed.derive(0xB));
        if report.outcome == Outcome::Indeterminate {
            return Err(FeasibilityError::Indeterminate {
                trial: t,
                evidence: Box::new(report),
            });
        }
        per_trial.push(TrialRecord {
            sigma_min: report.sigma_min,
            sigma_max: report.sigma_max,
            residual: report.residual,
            pass: report.outcome == Outcome::Surjective,
        });
    }
    Ok(Verdict {
        s,
        feasible: per_trial.iter().all(|t| t.pass),
        trials,
        per_trial,
        seed,
        degenerate,
    })
}
