//! Truncated power series in η about η = 0 with complex coefficients.
//!
//! A [`TruncatedSeries`] of order `N` stores the coefficients of η^0 ..= η^N.
//! Products drop every term above η^N, differentiation shifts coefficients
//! down one slot and leaves a zero at index `N`. These are the only
//! operations the iteration needs, and for the constant term after `n`
//! differentiations only coefficients up to order `n` ever contribute, so a
//! series with a few orders of headroom reproduces the constant term exactly.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<Complex64>,
}

impl TruncatedSeries {
    pub fn zero(order: usize) -> Self {
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0); order + 1],
        }
    }

    pub fn one(order: usize) -> Self {
        Self::constant(Complex64::new(1.0, 0.0), order)
    }

    pub fn constant(value: Complex64, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = value;
        s
    }

    /// `value · η^power`, or the zero series when `power > order`.
    pub fn monomial(value: Complex64, power: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if power <= order {
            s.coeffs[power] = value;
        }
        s
    }

    /// Builds a series from its coefficients; the order is `coeffs.len() - 1`.
    ///
    /// Rejects empty input and non-finite coefficients.
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidConfig("series needs at least one coefficient".into()));
        }
        if let Some(index) = coeffs.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { coeffs })
    }

    /// Builds a series of the given order from a (possibly shorter or longer)
    /// coefficient slice, zero-padding or truncating as needed.
    pub fn from_slice(coeffs: &[Complex64], order: usize) -> Result<Self> {
        let mut v = vec![Complex64::new(0.0, 0.0); order + 1];
        for (dst, src) in v.iter_mut().zip(coeffs) {
            *dst = *src;
        }
        Self::from_coeffs(v)
    }

    /// `1/(1 − η²) = 1 + η² + η⁴ + …` truncated at `order`.
    pub fn geom_inv_one_minus_eta2(order: usize) -> Self {
        let coeffs = (0..=order)
            .map(|k| {
                if k % 2 == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Self { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn eval_zero(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|z| z.is_finite())
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Keeps coefficients up to `order` (or zero-pads if the series is shorter).
    pub fn truncate(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, Complex64::new(0.0, 0.0));
        Self { coeffs }
    }

    fn check_order(&self, other: &Self) -> Result<()> {
        if self.order() != other.order() {
            return Err(Error::OrderMismatch {
                left: self.order(),
                right: other.order(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self { coeffs })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self { coeffs })
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|z| z * factor).collect(),
        }
    }

    /// Cauchy product truncated at the common order.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        let n = self.coeffs.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (b, dst) in other.coeffs[..n - i].iter().zip(&mut out[i..]) {
                *dst += a * b;
            }
        }
        Ok(Self { coeffs: out })
    }

    /// Term-wise derivative. The top coefficient becomes zero so the order is
    /// unchanged.
    pub fn diff(&self) -> Self {
        let n = self.coeffs.len();
        let mut coeffs: Vec<Complex64> = self.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(k, a)| a * (k + 1) as f64)
            .collect();
        coeffs.resize(n, Complex64::new(0.0, 0.0));
        Self { coeffs }
    }
}
