//! Rank test in exact arithmetic.
//!
//! The aligned triple is the canonical one (`U = [I; 0]`, `V = [I; 0]`,
//! channels with a zero top-left block) and the remaining channel entries
//! are drawn from the grid `{(a + ib)/h : 0 <= a, b <= h}`. The tangent
//! matrix is assembled entry by entry from
//!
//! ```text
//! ∂(UᵀHV)[i, j] / ∂U[a, i] = (H V)[a, j]
//! ∂(UᵀHV)[i, j] / ∂V[b, j] = (Uᵀ H)[i, b]
//! ```
//!
//! and its rank is computed over the Gaussian integers. Repeating with `k`
//! independent grids lowers the chance of a false negative; a full-rank
//! draw is a proof of feasibility.

mod bareiss;
mod gaussian;

pub use bareiss::{exact_rank, has_full_row_rank, modular_rank};
pub use gaussian::{ExactMatrix, GaussianInt, GaussianRational};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::Rng;
use thiserror::Error;

use crate::feasibility::{compute_s, ThetaLayout};
use crate::inverse_ia::{canonical_triple, CanonicalTriple, InverseIaError};
use crate::linalg::RandomSeed;
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExactError {
    #[error("at least one repetition is required")]
    NoRepetitions,
    #[error("grid size must be at least 1")]
    BadGrid,
    #[error(transparent)]
    Triple(#[from] InverseIaError),
}

/// Uniform integer in `0..=bound` by rejection sampling.
pub fn uniform_up_to<R: Rng + ?Sized>(bound: &BigUint, rng: &mut R) -> BigUint {
    if bound.is_zero() {
        return BigUint::zero();
    }
    let bits = bound.bits();
    let words = bits.div_ceil(32) as usize;
    let top_mask = if bits.is_multiple_of(32) { u32::MAX } else { (1u32 << (bits % 32)) - 1 };
    loop {
        let mut digits: Vec<u32> = (0..words).map(|_| rng.random()).collect();
        if let Some(last) = digits.last_mut() {
            *last &= top_mask;
        }
        let x = BigUint::from_slice(&digits);
        if &x <= bound {
            return x;
        }
    }
}

/// Grid size that makes a single exact test correct with probability at
/// least 3/4.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MilnorBound {
    /// Equations: `Σ d_k d_l` over links.
    pub d: u64,
    /// Free channel entries: `Σ (M_l − d_l) d_k + (N_k − d_k) d_l` over links.
    pub e: u64,
    /// `D (2D − 1)^{2E}`.
    pub q: BigUint,
    /// `max(8 Q E, 1)`.
    pub h: BigUint,
}

pub fn milnor_h(scenario: &Scenario) -> MilnorBound {
    let mut d = 0u64;
    let mut e = 0u64;
    for edge in scenario.edges() {
        let k = scenario.user(edge.rx);
        let l = scenario.user(edge.tx);
        let (dk, dl) = (k.streams as u64, l.streams as u64);
        d += dk * dl;
        e += (l.tx_antennas as u64).saturating_sub(dl) * dk + (k.rx_antennas as u64).saturating_sub(dk) * dl;
    }
    let base = BigUint::from(2 * d).max(BigUint::one()) - BigUint::one();
    let q = BigUint::from(d) * num_traits::pow(base, 2 * e as usize);
    let h = (BigUint::from(8u8) * &q * BigUint::from(e)).max(BigUint::one());
    MilnorBound { d, e, q, h }
}

/// Default grid size: far below the theoretical bound but already making
/// an accidental rank drop vanishingly unlikely.
pub fn default_h() -> BigUint {
    BigUint::one() << 20u32
}

pub const DEFAULT_REPETITIONS: usize = 5;

/// Tangent matrix at an exact triple, laid out as [`ThetaLayout`].
pub fn exact_theta(scenario: &Scenario, triple: &CanonicalTriple) -> ExactMatrix {
    let layout = ThetaLayout::new(scenario);
    let mut b = ExactMatrix::zeros(layout.rows, layout.cols);
    for &e in scenario.edges() {
        let u = &triple.decoders[&e.rx];
        let v = &triple.precoders[&e.tx];
        let h = &triple.channels[&e];
        let hv = h.mul(v);
        let uth = u.transpose().mul(h);
        let (dk, dl) = (u.cols(), v.cols());
        let (n_k, m_l) = (u.rows(), v.rows());
        let rows = layout.row_blocks[&e].start;
        let dec = layout.decoder_cols(e.rx).start;
        let pre = layout.precoder_cols(e.tx).start;
        for j in 0..dl {
            for i in 0..dk {
                let r = rows + i + dk * j;
                for a in 0..n_k {
                    b.set(r, dec + a + n_k * i, hv.get(a, j).clone());
                }
                for bb in 0..m_l {
                    b.set(r, pre + bb + m_l * j, uth.get(i, bb).clone());
                }
            }
        }
    }
    b
}

/// Outcome of [`exact_feasibility_test`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactVerdict {
    /// Per repetition: whether the tangent matrix had full row rank.
    pub feasible_claims: Vec<bool>,
    pub repetitions: usize,
    /// Rank found in each repetition; empty when no rank test was needed.
    pub ranks: Vec<usize>,
    pub target_rank: usize,
    pub h_used: BigUint,
    pub theoretical_h: BigUint,
    pub s: i64,
    pub feasible: bool,
}

/// Exact test with `reps` independent grids of size `h`. Feasible as soon
/// as one draw gives full rank; a negative dimension count or a user with
/// more streams than antennas is rejected without drawing.
pub fn exact_feasibility_test(
    scenario: &Scenario,
    h: &BigUint,
    reps: usize,
    seed: RandomSeed,
) -> Result<ExactVerdict, ExactError> {
    if reps == 0 {
        return Err(ExactError::NoRepetitions);
    }
    if h.is_zero() {
        return Err(ExactError::BadGrid);
    }
    let s = compute_s(scenario);
    let layout = ThetaLayout::new(scenario);
    let mut verdict = ExactVerdict {
        feasible_claims: Vec::new(),
        repetitions: reps,
        ranks: Vec::new(),
        target_rank: layout.rows,
        h_used: h.clone(),
        theoretical_h: milnor_h(scenario).h,
        s,
        feasible: false,
    };
    if s < 0 || !scenario.validate().streams_fit() {
        return Ok(verdict);
    }
    for r in 0..reps {
        let triple = canonical_triple(scenario, h, seed.derive(0xE0 + r as u64))?;
        let rows = exact_theta(scenario, &triple).to_integer_rows();
        let rank = if modular_rank(&rows) == layout.rows {
            layout.rows
        } else {
            exact_rank(&rows)
        };
        verdict.ranks.push(rank);
        verdict.feasible_claims.push(rank == layout.rows);
    }
    verdict.feasible = verdict.feasible_claims.iter().any(|&c| c);
    Ok(verdict)
}
