//! Generic points of the solution variety.
//!
//! The alignment equations `U_kᵀ H_kl V_l = 0` are linear in the channels, so
//! for fixed decoders and precoders every channel lies in the nullspace of
//! `(V_l ⊗ U_k)ᵀ`. Sampling random filters first and channels second yields a
//! generic aligned triple without ever solving the (hard) forward problem.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use rand::Rng;
use thiserror::Error;

use crate::exact::{uniform_up_to, ExactMatrix, GaussianRational};
use crate::linalg::{
    complex_gaussian, default_rank_tol, gaussian_matrix, kron, nullspace_basis, random_stiefel, unvec,
    ComplexMatrix, ComplexVector, RandomSeed, C64,
};
use crate::scenario::{Edge, Scenario};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InverseIaError {
    #[error("no decoder for receiver {0}")]
    MissingDecoder(usize),
    #[error("no precoder for transmitter {0}")]
    MissingPrecoder(usize),
    #[error("filter for user {user} is {got:?}, expected {expected:?}")]
    FilterShape {
        user: usize,
        got: (usize, usize),
        expected: (usize, usize),
    },
    #[error("the canonical construction needs d_k <= N_k and d_l <= M_l on every link")]
    StreamsExceedAntennas,
    #[error("grid parameter h must be at least 1")]
    BadGrid,
}

/// Decoders (`N_k x d_k`, per interfered receiver) and precoders
/// (`M_l x d_l`, per interfering transmitter).
#[derive(Debug, Clone, PartialEq)]
pub struct Filters {
    pub decoders: BTreeMap<usize, ComplexMatrix>,
    pub precoders: BTreeMap<usize, ComplexMatrix>,
}

/// Channels, decoders and precoders satisfying the alignment equations.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentTriple {
    pub channels: BTreeMap<Edge, ComplexMatrix>,
    pub decoders: BTreeMap<usize, ComplexMatrix>,
    pub precoders: BTreeMap<usize, ComplexMatrix>,
    /// `max ||U_kᵀ H_kl V_l||_F` over links.
    pub residual: f64,
    /// Links whose channel is forced to zero (no nonzero solution exists).
    pub degenerate: Vec<Edge>,
}

impl AlignmentTriple {
    pub fn is_degenerate(&self) -> bool {
        !self.degenerate.is_empty()
    }

    pub fn decoder(&self, k: usize) -> &ComplexMatrix {
        &self.decoders[&k]
    }

    pub fn precoder(&self, l: usize) -> &ComplexMatrix {
        &self.precoders[&l]
    }

    pub fn channel(&self, e: Edge) -> &ComplexMatrix {
        &self.channels[&e]
    }
}

/// Interference leaking into the signal space of link `e`: `U_kᵀ H_kl V_l`.
pub fn link_interference(u: &ComplexMatrix, h: &ComplexMatrix, v: &ComplexMatrix) -> ComplexMatrix {
    u.transpose() * h * v
}

/// `max ||U_kᵀ H_kl V_l||_F` over the scenario's links.
pub fn alignment_residual(
    scenario: &Scenario,
    channels: &BTreeMap<Edge, ComplexMatrix>,
    decoders: &BTreeMap<usize, ComplexMatrix>,
    precoders: &BTreeMap<usize, ComplexMatrix>,
) -> f64 {
    scenario
        .edges()
        .iter()
        .map(|e| link_interference(&decoders[&e.rx], &channels[e], &precoders[&e.tx]).norm())
        .fold(0.0, f64::max)
}

fn decoder_seed(seed: RandomSeed, k: usize) -> RandomSeed {
    seed.derive(2 * k as u64)
}

fn precoder_seed(seed: RandomSeed, l: usize) -> RandomSeed {
    seed.derive(2 * l as u64 + 1)
}

fn edge_seed(seed: RandomSeed, e: Edge, users: usize) -> RandomSeed {
    seed.derive(((e.rx * users + e.tx) as u64) | (1 << 40))
}

/// Orthonormal filter when the streams fit, a generic full-rank one otherwise.
fn sample_filter(antennas: usize, streams: usize, seed: RandomSeed) -> ComplexMatrix {
    let mut rng = seed.rng();
    if streams <= antennas {
        random_stiefel(antennas, streams, &mut rng).expect("streams fit")
    } else {
        gaussian_matrix(antennas, streams, &mut rng)
    }
}

/// Random filters for every interfered receiver and interfering transmitter.
///
/// Users outside those sets get nothing: their filters are free variables.
pub fn sample_decoders_precoders(scenario: &Scenario, seed: RandomSeed) -> Filters {
    let (rx, tx) = scenario.projections();
    let decoders = rx
        .iter()
        .map(|&k| {
            let u = scenario.user(k);
            (k, sample_filter(u.rx_antennas, u.streams, decoder_seed(seed, k)))
        })
        .collect();
    let precoders = tx
        .iter()
        .map(|&l| {
            let u = scenario.user(l);
            (l, sample_filter(u.tx_antennas, u.streams, precoder_seed(seed, l)))
        })
        .collect();
    Filters { decoders, precoders }
}

/// The `d_k d_l x N_k M_l` system `(V_l ⊗ U_k)ᵀ vec(H_kl) = 0`.
pub fn inverse_system(u: &ComplexMatrix, v: &ComplexMatrix) -> ComplexMatrix {
    kron(v, u).expect("filter sizes are small").transpose()
}

/// Solves the inverse problem: a random unit-norm channel per link in the
/// nullspace of that link's system.
///
/// Each link draws from its own sub-seed, so the result does not depend on
/// the order links are processed in.
pub fn solve_inverse(scenario: &Scenario, filters: &Filters, seed: RandomSeed) -> Result<AlignmentTriple, InverseIaError> {
    let (rx, tx) = scenario.projections();
    for &k in &rx {
        let u = filters.decoders.get(&k).ok_or(InverseIaError::MissingDecoder(k))?;
        let cfg = scenario.user(k);
        check_shape(k, u, (cfg.rx_antennas, cfg.streams))?;
    }
    for &l in &tx {
        let v = filters.precoders.get(&l).ok_or(InverseIaError::MissingPrecoder(l))?;
        let cfg = scenario.user(l);
        check_shape(l, v, (cfg.tx_antennas, cfg.streams))?;
    }

    let mut channels = BTreeMap::new();
    let mut degenerate = Vec::new();
    for &e in scenario.edges() {
        let u = &filters.decoders[&e.rx];
        let v = &filters.precoders[&e.tx];
        let (n, m) = (u.nrows(), v.nrows());
        let a = inverse_system(u, v);
        let basis = nullspace_basis(&a, default_rank_tol(a.nrows(), a.ncols()));
        let h = if basis.ncols() == 0 {
            degenerate.push(e);
            ComplexMatrix::zeros(n, m)
        } else {
            let mut rng = edge_seed(seed, e, scenario.num_users()).rng();
            let coeffs = ComplexVector::from_fn(basis.ncols(), |_, _| complex_gaussian(&mut rng));
            let mut x = &basis * coeffs;
            let norm = x.norm();
            x /= C64::new(norm, 0.0);
            unvec(x.as_slice(), n, m)
        };
        channels.insert(e, h);
    }
    let residual = alignment_residual(scenario, &channels, &filters.decoders, &filters.precoders);
    Ok(AlignmentTriple {
        channels,
        decoders: filters.decoders.clone(),
        precoders: filters.precoders.clone(),
        residual,
        degenerate,
    })
}

/// Samples filters and solves for channels in one go.
pub fn generic_triple(scenario: &Scenario, seed: RandomSeed) -> AlignmentTriple {
    let filters = sample_decoders_precoders(scenario, seed.derive(0xF11));
    solve_inverse(scenario, &filters, seed.derive(0xC4A)).expect("sampled filters match the scenario")
}

fn check_shape(user: usize, m: &ComplexMatrix, expected: (usize, usize)) -> Result<(), InverseIaError> {
    if m.shape() == expected {
        Ok(())
    } else {
        Err(InverseIaError::FilterShape {
            user,
            got: m.shape(),
            expected,
        })
    }
}

/// Aligned triple with exact Gaussian-rational entries.
///
/// Filters are `[I; 0]`; each channel has a zero top-left `d_k x d_l` block
/// and grid entries `(a + ib) / h`, `a, b` uniform in `0..=h`, elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalTriple {
    pub h: BigUint,
    pub channels: BTreeMap<Edge, ExactMatrix>,
    pub decoders: BTreeMap<usize, ExactMatrix>,
    pub precoders: BTreeMap<usize, ExactMatrix>,
}

impl CanonicalTriple {
    /// Whether `U_kᵀ H_kl V_l` vanishes exactly on every link.
    pub fn is_aligned(&self) -> bool {
        self.channels.iter().all(|(e, h)| {
            let u = &self.decoders[&e.rx];
            let v = &self.precoders[&e.tx];
            u.transpose().mul(h).mul(v).is_zero()
        })
    }

    pub fn to_float(&self) -> AlignmentTriple {
        let conv = |m: &BTreeMap<usize, ExactMatrix>| m.iter().map(|(k, x)| (*k, x.to_float())).collect();
        let channels: BTreeMap<Edge, ComplexMatrix> = self.channels.iter().map(|(e, x)| (*e, x.to_float())).collect();
        let decoders: BTreeMap<usize, ComplexMatrix> = conv(&self.decoders);
        let precoders: BTreeMap<usize, ComplexMatrix> = conv(&self.precoders);
        let residual = channels
            .iter()
            .map(|(e, h)| link_interference(&decoders[&e.rx], h, &precoders[&e.tx]).norm())
            .fold(0.0, f64::max);
        AlignmentTriple {
            channels,
            decoders,
            precoders,
            residual,
            degenerate: Vec::new(),
        }
    }
}

fn stacked_identity(rows: usize, cols: usize) -> ExactMatrix {
    ExactMatrix::from_fn(rows, cols, |i, j| {
        if i == j {
            GaussianRational::one()
        } else {
            GaussianRational::zero()
        }
    })
}

pub fn canonical_triple(scenario: &Scenario, h: &BigUint, seed: RandomSeed) -> Result<CanonicalTriple, InverseIaError> {
    if *h < BigUint::from(1u8) {
        return Err(InverseIaError::BadGrid);
    }
    let report = scenario.validate();
    if !report.streams_fit() {
        return Err(InverseIaError::StreamsExceedAntennas);
    }
    let (rx, tx) = scenario.projections();
    let decoders = rx
        .iter()
        .map(|&k| {
            let u = scenario.user(k);
            (k, stacked_identity(u.rx_antennas, u.streams))
        })
        .collect();
    let precoders = tx
        .iter()
        .map(|&l| {
            let u = scenario.user(l);
            (l, stacked_identity(u.tx_antennas, u.streams))
        })
        .collect();
    let den = BigInt::from(h.clone());
    let channels = scenario
        .edges()
        .iter()
        .map(|&e| {
            let k = scenario.user(e.rx);
            let l = scenario.user(e.tx);
            let mut rng = edge_seed(seed, e, scenario.num_users()).rng();
            let m = ExactMatrix::from_fn(k.rx_antennas, l.tx_antennas, |i, j| {
                if i < k.streams && j < l.streams {
                    GaussianRational::zero()
                } else {
                    grid_point(h, &den, &mut rng)
                }
            });
            (e, m)
        })
        .collect();
    Ok(CanonicalTriple {
        h: h.clone(),
        channels,
        decoders,
        precoders,
    })
}

fn grid_point<R: Rng + ?Sized>(h: &BigUint, den: &BigInt, rng: &mut R) -> GaussianRational {
    let a = BigInt::from(uniform_up_to(h, rng));
    let b = BigInt::from(uniform_up_to(h, rng));
    GaussianRational::new(a, b, den.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    #[test]
    fn filter_shapes() {
        let s = parse_scenario("(2x2,1)^3").unwrap();
        let f = sample_decoders_precoders(&s, RandomSeed(1));
        assert_eq!(f.decoders.len(), 3);
        assert!(f.decoders.values().chain(f.precoders.values()).all(|m| m.shape() == (2, 1)));

        let s = parse_scenario("(5x11,4)^3").unwrap();
        let f = sample_decoders_precoders(&s, RandomSeed(2));
        for u in f.decoders.values() {
            assert_eq!(u.shape(), (11, 4));
            assert!((u.adjoint() * u - ComplexMatrix::identity(4, 4)).norm() <= 1e-12);
        }
        for v in f.precoders.values() {
            assert_eq!(v.shape(), (5, 4));
            assert!((v.adjoint() * v - ComplexMatrix::identity(4, 4)).norm() <= 1e-12);
        }
    }

    #[test]
    fn free_transmitters_get_no_precoder() {
        let s = parse_scenario("(2x2,1)^3 | edges=(1,2);(3,2)").unwrap();
        let f = sample_decoders_precoders(&s, RandomSeed(3));
        assert_eq!(f.precoders.keys().copied().collect::<Vec<_>>(), vec![1]);
        assert_eq!(f.decoders.keys().copied().collect::<Vec<_>>(), vec![0, 2]);
    }

    #[test]
    fn small_symmetric_solve() {
        let s = parse_scenario("(2x2,1)^3").unwrap();
        let f = sample_decoders_precoders(&s, RandomSeed(4));
        for e in s.edges() {
            let a = inverse_system(&f.decoders[&e.rx], &f.precoders[&e.tx]);
            assert_eq!(a.shape(), (1, 4));
            assert_eq!(nullspace_basis(&a, default_rank_tol(1, 4)).ncols(), 3);
        }
        let t = solve_inverse(&s, &f, RandomSeed(5)).unwrap();
        assert_eq!(t.channels.len(), 6);
        assert!(t.residual <= 1e-12);
        assert!(!t.is_degenerate());
        for h in t.channels.values() {
            assert!((h.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn full_link_forces_zero_channel() {
        // d_1 = N_1 and d_2 = M_2 on link (1,2).
        let s = parse_scenario("(3x2,2)(3x3,3) | edges=(1,2)").unwrap();
        let t = generic_triple(&s, RandomSeed(6));
        assert_eq!(t.degenerate, vec![Edge::new(0, 1)]);
        assert_eq!(t.channel(Edge::new(0, 1)).norm(), 0.0);
    }

    #[test]
    fn oversubscribed_streams_still_align() {
        let s = parse_scenario("(2x1,3)(3x4,2)").unwrap();
        let t = generic_triple(&s, RandomSeed(7));
        assert!(!t.is_degenerate());
        assert!(t.residual <= 1e-10);
        assert_eq!(t.decoder(0).shape(), (1, 3));
    }

    #[test]
    fn reproducible() {
        let s = parse_scenario("(3x4,2)(1x3,1)(10x4,2)").unwrap();
        assert_eq!(generic_triple(&s, RandomSeed(8)), generic_triple(&s, RandomSeed(8)));
    }

    #[test]
    fn missing_filters_are_errors() {
        let s = parse_scenario("(2x2,1)^3").unwrap();
        let mut f = sample_decoders_precoders(&s, RandomSeed(9));
        f.precoders.remove(&2);
        assert_eq!(solve_inverse(&s, &f, RandomSeed(1)), Err(InverseIaError::MissingPrecoder(2)));
        let mut f = sample_decoders_precoders(&s, RandomSeed(9));
        f.decoders.insert(1, ComplexMatrix::zeros(3, 1));
        assert!(matches!(solve_inverse(&s, &f, RandomSeed(1)), Err(InverseIaError::FilterShape { user: 1, .. })));
    }

    #[test]
    fn canonical_structure() {
        let s = parse_scenario("(2x2,1)^3").unwrap();
        let t = canonical_triple(&s, &BigUint::from(1u32 << 20), RandomSeed(10)).unwrap();
        assert!(t.is_aligned());
        for h in t.channels.values() {
            assert!(h.get(0, 0).is_zero());
            assert_eq!((h.rows(), h.cols()), (2, 2));
        }

        let s = parse_scenario("(3x3,2)^2").unwrap();
        let t = canonical_triple(&s, &BigUint::from(97u32), RandomSeed(11)).unwrap();
        assert!(t.is_aligned());
        for h in t.channels.values() {
            for i in 0..2 {
                for j in 0..2 {
                    assert!(h.get(i, j).is_zero());
                }
            }
        }
    }

    #[test]
    fn unit_grid() {
        let s = parse_scenario("(3x3,1)^3").unwrap();
        let t = canonical_triple(&s, &BigUint::from(1u8), RandomSeed(12)).unwrap();
        let one = BigInt::from(1);
        let zero = BigInt::from(0);
        for h in t.channels.values() {
            for i in 0..3 {
                for j in 0..3 {
                    let z = h.get(i, j);
                    assert!(z.re == zero || z.re == one);
                    assert!(z.im == zero || z.im == one);
                    assert!(z.den == one);
                }
            }
        }
        assert_eq!(canonical_triple(&s, &BigUint::from(0u8), RandomSeed(1)), Err(InverseIaError::BadGrid));
        let bad = parse_scenario("(2x1,3)(3x4,2)").unwrap();
        assert_eq!(
            canonical_triple(&bad, &BigUint::from(5u8), RandomSeed(1)),
            Err(InverseIaError::StreamsExceedAntennas)
        );
    }
}
