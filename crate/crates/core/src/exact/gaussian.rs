//! Gaussian integers, Gaussian rationals and small dense matrices over them.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::linalg::{ComplexMatrix, C64};

/// `re + i·im` with integer parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct GaussianInt {
    pub re: BigInt,
    pub im: BigInt,
}

impl GaussianInt {
    pub fn new(re: impl Into<BigInt>, im: impl Into<BigInt>) -> Self {
        Self {
            re: re.into(),
            im: im.into(),
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::new(1, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    /// `re² + im²`.
    pub fn norm(&self) -> BigInt {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self {
            re: &self.re - &o.re,
            im: &self.im - &o.im,
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            re: &self.re + &o.re,
            im: &self.im + &o.im,
        }
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        Self {
            re: &self.re * k,
            im: &self.im * k,
        }
    }

    /// Exact quotient `self / d` given `d`'s norm; `None` if `d` does not divide.
    pub fn div_exact_with_norm(&self, d: &Self, norm: &BigInt) -> Option<Self> {
        let n = self.mul(&d.conj());
        let (re, r0) = n.re.div_rem(norm);
        let (im, r1) = n.im.div_rem(norm);
        (r0.is_zero() && r1.is_zero()).then_some(Self { re, im })
    }

    pub fn div_exact(&self, d: &Self) -> Option<Self> {
        if d.is_zero() {
            return None;
        }
        self.div_exact_with_norm(d, &d.norm())
    }

    /// Bits of the larger part, used to prefer small pivots.
    pub fn bits(&self) -> u64 {
        self.re.bits().max(self.im.bits())
    }
}

impl fmt::Display for GaussianInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_negative() {
            write!(f, "{}-{}i", self.re, self.im.abs())
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

/// `(re + i·im) / den` with `den > 0`, not necessarily reduced.
#[derive(Debug, Clone)]
pub struct GaussianRational {
    pub re: BigInt,
    pub im: BigInt,
    pub den: BigInt,
}

impl GaussianRational {
    /// Panics if `den` is zero; a negative denominator is moved into the numerator.
    pub fn new(re: BigInt, im: BigInt, den: BigInt) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        if den.is_negative() {
            Self {
                re: -re,
                im: -im,
                den: -den,
            }
        } else {
            Self { re, im, den }
        }
    }

    pub fn zero() -> Self {
        Self::new(BigInt::zero(), BigInt::zero(), BigInt::one())
    }

    pub fn one() -> Self {
        Self::new(BigInt::one(), BigInt::zero(), BigInt::one())
    }

    pub fn from_int(g: GaussianInt) -> Self {
        Self::new(g.re, g.im, BigInt::one())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        if self.den == o.den {
            return Self::new(&self.re + &o.re, &self.im + &o.im, self.den.clone());
        }
        Self::new(
            &self.re * &o.den + &o.re * &self.den,
            &self.im * &o.den + &o.im * &self.den,
            &self.den * &o.den,
        )
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
            &self.den * &o.den,
        )
        .reduced()
    }

    /// Divides out the common factor of both parts and the denominator.
    pub fn reduced(self) -> Self {
        let g = self.re.gcd(&self.im).gcd(&self.den);
        if g.is_one() || g.is_zero() {
            return self;
        }
        Self::new(&self.re / &g, &self.im / &g, &self.den / &g)
    }

    pub fn to_c64(&self) -> C64 {
        let d = self.den.to_f64().unwrap_or(f64::INFINITY);
        C64::new(
            self.re.to_f64().unwrap_or(f64::NAN) / d,
            self.im.to_f64().unwrap_or(f64::NAN) / d,
        )
    }
}

impl PartialEq for GaussianRational {
    fn eq(&self, o: &Self) -> bool {
        &self.re * &o.den == &o.re * &self.den && &self.im * &o.den == &o.im * &self.den
    }
}

impl Eq for GaussianRational {}

/// Row-major dense matrix of Gaussian rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactMatrix {
    rows: usize,
    cols: usize,
    data: Vec<GaussianRational>,
}

impl ExactMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![GaussianRational::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> GaussianRational) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &GaussianRational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: GaussianRational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    /// Panics on mismatched inner dimensions.
    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "inner dimensions differ");
        Self::from_fn(self.rows, o.cols, |i, j| {
            (0..self.cols)
                .filter(|&t| !self.get(i, t).is_zero() && !o.get(t, j).is_zero())
                .fold(GaussianRational::zero(), |acc, t| acc.add(&self.get(i, t).mul(o.get(t, j))))
                .reduced()
        })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(GaussianRational::is_zero)
    }

    pub fn to_float(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).to_c64())
    }

    /// Rows scaled by the lcm of all denominators, so every entry is integral.
    pub fn to_integer_rows(&self) -> Vec<Vec<GaussianInt>> {
        let lcm = self.data.iter().fold(BigInt::one(), |acc, x| acc.lcm(&x.den));
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| {
                        let x = self.get(i, j);
                        let k = &lcm / &x.den;
                        GaussianInt::new(&x.re * &k, &x.im * &k)
                    })
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gi(a: i64, b: i64) -> GaussianInt {
        GaussianInt::new(a, b)
    }

    #[test]
    fn exact_division() {
        let a = gi(3, -7);
        let b = gi(-2, 5);
        let p = a.mul(&b);
        assert_eq!(p.div_exact(&b), Some(a.clone()));
        assert_eq!(p.div_exact(&a), Some(b));
        assert_eq!(gi(1, 0).div_exact(&gi(1, 1)), None);
        assert_eq!(gi(2, 0).div_exact(&gi(1, 1)), Some(gi(1, -1)));
        assert_eq!(gi(1, 0).div_exact(&GaussianInt::zero()), None);
    }

    #[test]
    fn rational_arithmetic() {
        let half = GaussianRational::new(1.into(), 0.into(), 2.into());
        let i_third = GaussianRational::new(0.into(), 1.into(), 3.into());
        let sum = half.add(&i_third);
        assert_eq!(sum, GaussianRational::new(3.into(), 2.into(), 6.into()));
        let prod = i_third.mul(&i_third);
        assert_eq!(prod, GaussianRational::new((-1).into(), 0.into(), 9.into()));
        assert_eq!(
            GaussianRational::new(2.into(), 4.into(), (-6).into()),
            GaussianRational::new((-1).into(), (-2).into(), 3.into())
        );
        assert!((sum.to_c64() - C64::new(0.5, 1.0 / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn matrix_product_and_scaling() {
        let a = ExactMatrix::from_fn(2, 3, |i, j| {
            GaussianRational::new(((i + j) as i64).into(), (i as i64).into(), ((j + 1) as i64).into())
        });
        let b = a.transpose();
        let p = a.mul(&b);
        let pf = a.to_float() * b.to_float();
        assert!((p.to_float() - pf).norm() < 1e-12);

        let rows = a.to_integer_rows();
        // lcm of denominators 1, 2, 3.
        assert_eq!(rows[1][1], gi(6, 3));
    }
}
