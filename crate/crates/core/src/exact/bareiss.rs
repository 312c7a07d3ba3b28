//! Exact rank over the Gaussian integers.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

use super::gaussian::GaussianInt;

/// Drops all-zero rows and columns; they never change the rank.
fn compact(rows: &[Vec<GaussianInt>]) -> Vec<Vec<GaussianInt>> {
    let cols = rows.first().map_or(0, Vec::len);
    let live: Vec<usize> = (0..cols).filter(|&j| rows.iter().any(|r| !r[j].is_zero())).collect();
    rows.iter()
        .filter(|r| r.iter().any(|x| !x.is_zero()))
        .map(|r| live.iter().map(|&j| r[j].clone()).collect())
        .collect()
}

/// Rank by fraction-free (Bareiss) elimination. Every intermediate entry is
/// a minor of the input, so all divisions are exact.
pub fn exact_rank(rows: &[Vec<GaussianInt>]) -> usize {
    let mut m = compact(rows);
    let n_rows = m.len();
    let n_cols = m.first().map_or(0, Vec::len);
    let mut prev = GaussianInt::one();
    let mut prev_norm = BigInt::from(1);
    let mut rank = 0;
    for c in 0..n_cols {
        if rank == n_rows {
            break;
        }
        let Some(p) = (rank..n_rows)
            .filter(|&i| !m[i][c].is_zero())
            .min_by_key(|&i| m[i][c].bits())
        else {
            continue;
        };
        m.swap(rank, p);
        let (top, rest) = m.split_at_mut(rank + 1);
        let pivot_row = &top[rank];
        let pivot = &pivot_row[c];
        for row in rest.iter_mut() {
            let lead = std::mem::take(&mut row[c]);
            for j in c + 1..n_cols {
                let mut x = pivot.mul(&row[j]);
                if !lead.is_zero() && !pivot_row[j].is_zero() {
                    x = x.sub(&lead.mul(&pivot_row[j]));
                }
                row[j] = if rank == 0 {
                    x
                } else {
                    x.div_exact_with_norm(&prev, &prev_norm).expect("Bareiss division is exact")
                };
            }
        }
        prev = pivot.clone();
        prev_norm = prev.norm();
        rank += 1;
    }
    rank
}

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, p);
        }
        a = mul_mod(a, a, p);
        e >>= 1;
    }
    r
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'outer: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// A prime `p ≡ 1 (mod 4)` just below `2^62` and a square root of `-1` mod `p`.
fn field() -> (u64, u64) {
    static FIELD: OnceLock<(u64, u64)> = OnceLock::new();
    *FIELD.get_or_init(|| {
        let mut p = (1u64 << 62) - 3;
        while !is_prime(p) {
            p -= 4;
        }
        let iota = (2..)
            .map(|g| pow_mod(g, (p - 1) / 4, p))
            .find(|&x| mul_mod(x, x, p) == p - 1)
            .expect("p is 1 mod 4");
        (p, iota)
    })
}

fn reduce(x: &BigInt, p: u64) -> u64 {
    x.mod_floor(&BigInt::from(p)).to_u64().expect("residue fits")
}

/// Rank of the image under `Z[i] → F_p`, `i ↦ √-1`. Never exceeds the exact
/// rank, so reaching the row count certifies full row rank.
pub fn modular_rank(rows: &[Vec<GaussianInt>]) -> usize {
    let (p, iota) = field();
    let mut m: Vec<Vec<u64>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|x| (reduce(&x.re, p) + mul_mod(reduce(&x.im, p), iota, p)) % p)
                .collect()
        })
        .collect();
    let n_rows = m.len();
    let n_cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..n_cols {
        if rank == n_rows {
            break;
        }
        let Some(piv) = (rank..n_rows).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(rank, piv);
        let inv = pow_mod(m[rank][c], p - 2, p);
        let (top, rest) = m.split_at_mut(rank + 1);
        let pivot_row = &top[rank];
        for row in rest.iter_mut() {
            if row[c] == 0 {
                continue;
            }
            let f = mul_mod(row[c], inv, p);
            for j in c..n_cols {
                row[j] = (row[j] + p - mul_mod(f, pivot_row[j], p)) % p;
            }
        }
        rank += 1;
    }
    rank
}

/// Whether the rows are linearly independent, trying the modular certificate first.
pub fn has_full_row_rank(rows: &[Vec<GaussianInt>]) -> bool {
    let n = rows.len();
    if rows.first().map_or(0, Vec::len) < n {
        return false;
    }
    modular_rank(rows) == n || exact_rank(rows) == n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{qr_rank, ComplexMatrix, C64};
    use num_traits::ToPrimitive;
    use proptest::prelude::*;

    fn to_float(rows: &[Vec<GaussianInt>]) -> ComplexMatrix {
        let cols = rows.first().map_or(0, Vec::len);
        ComplexMatrix::from_fn(rows.len(), cols, |i, j| {
            C64::new(rows[i][j].re.to_f64().unwrap(), rows[i][j].im.to_f64().unwrap())
        })
    }

    fn low_rank(n: usize, m: usize, r: usize, vals: &[(i8, i8)]) -> Vec<Vec<GaussianInt>> {
        let mut it = vals.iter().cycle();
        let mut next = || {
            let &(a, b) = it.next().unwrap();
            GaussianInt::new(a, b)
        };
        let left: Vec<Vec<GaussianInt>> = (0..n).map(|_| (0..r).map(|_| next()).collect()).collect();
        let right: Vec<Vec<GaussianInt>> = (0..r).map(|_| (0..m).map(|_| next()).collect()).collect();
        (0..n)
            .map(|i| {
                (0..m)
                    .map(|j| (0..r).fold(GaussianInt::zero(), |acc, t| acc.add(&left[i][t].mul(&right[t][j]))))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn known_ranks() {
        let g = |a: i64, b: i64| GaussianInt::new(a, b);
        assert_eq!(exact_rank(&[]), 0);
        assert_eq!(exact_rank(&[vec![g(0, 0), g(0, 0)]]), 0);
        // Second row is i times the first.
        let m = vec![vec![g(1, 2), g(3, 0)], vec![g(-2, 1), g(0, 3)]];
        assert_eq!(exact_rank(&m), 1);
        assert_eq!(modular_rank(&m), 1);
        let m = vec![vec![g(1, 2), g(3, 0)], vec![g(-2, 1), g(0, 4)]];
        assert_eq!(exact_rank(&m), 2);
        assert!(has_full_row_rank(&m));
        // Wide with a zero leading column.
        let m = vec![
            vec![g(0, 0), g(1, 0), g(2, 0), g(3, 0)],
            vec![g(0, 0), g(2, 0), g(4, 0), g(7, 0)],
            vec![g(0, 0), g(3, 0), g(6, 0), g(10, 0)],
        ];
        assert_eq!(exact_rank(&m), 2);
        assert!(!has_full_row_rank(&m));
    }

    #[test]
    fn field_is_sound() {
        let (p, iota) = field();
        assert!(is_prime(p) && p % 4 == 1);
        assert_eq!(mul_mod(iota, iota, p), p - 1);
        assert!(!is_prime(561) && is_prime(1_000_000_007));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn planted_rank(n in 1usize..7, m in 1usize..7, r in 0usize..5,
                        vals in prop::collection::vec((-9i8..10, -9i8..10), 16..40)) {
            let rows = low_rank(n, m, r, &vals);
            let exact = exact_rank(&rows);
            prop_assert!(exact <= r.min(n).min(m));
            prop_assert!(modular_rank(&rows) <= exact);
            prop_assert_eq!(exact, qr_rank(&to_float(&rows), 1e-9));
        }

        #[test]
        fn rank_invariant_under_permutation_and_scaling(
            n in 1usize..6, m in 1usize..6, r in 0usize..5,
            vals in prop::collection::vec((-9i8..10, -9i8..10), 16..40),
            row_rot in 0usize..6, col_rot in 0usize..6, s in (1i8..5, -4i8..5)) {
            let rows = low_rank(n, m, r, &vals);
            let base = exact_rank(&rows);
            let scale = GaussianInt::new(s.0, s.1);
            let mut moved = rows.clone();
            moved.rotate_left(row_rot % n);
            for row in &mut moved {
                row.rotate_left(col_rot % m);
            }
            moved[0] = moved[0].iter().map(|x| x.mul(&scale)).collect();
            prop_assert_eq!(exact_rank(&moved), base);
            let transposed: Vec<Vec<GaussianInt>> =
                (0..m).map(|j| (0..n).map(|i| rows[i][j].clone()).collect()).collect();
            prop_assert_eq!(exact_rank(&transposed), base);
        }
    }
}
