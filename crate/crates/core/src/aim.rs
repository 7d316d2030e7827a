//! Asymptotic iteration for the angular spheroidal equation.
//!
//! After factoring out `(1 − η²)^{m/2}` the equation reads
//! `y'' = λ₀ y' + s₀ y` with
//!
//! ```text
//! λ₀(η) = 2(m+1) η / (1 − η²),    s₀(η) = −(ε − c²η²) / (1 − η²),
//! ```
//!
//! where `ε = Λ − m(m+1)`. The iteration
//!
//! ```text
//! λₙ = λ'ₙ₋₁ + sₙ₋₁ + λ₀ λₙ₋₁,    sₙ = s'ₙ₋₁ + s₀ λₙ₋₁
//! ```
//!
//! is carried out on truncated Taylor series about η = 0, and the eigenvalue
//! condition is the vanishing of `δₙ = sₙ λₙ₋₁ − sₙ₋₁ λₙ` at η = 0.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::TruncatedSeries;

/// Coefficient magnitude that triggers a common rescaling of the iterates.
///
/// `δ` multiplies values from two levels, so the threshold stays well below
/// the square root of the largest double.
pub const RESCALE_THRESHOLD: f64 = 1e120;
/// Decimal exponent removed from both levels on every rescaling.
pub const RESCALE_EXPONENT: i32 = 120;
const RESCALE_FACTOR: f64 = 1e-120;

/// Azimuthal index `m` and eigenvalue label `ℓ ≥ m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    m: u32,
    l: u32,
}

impl ModeIndex {
    pub fn new(m: i64, l: i64) -> Result<Self> {
        if m < 0 || l < m || l > u32::MAX as i64 {
            return Err(Error::InvalidMode { m, l });
        }
        Ok(Self {
            m: m as u32,
            l: l as u32,
        })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    /// Number of nodes of the eigenfunction, `ℓ − m`.
    pub fn nodes(&self) -> u32 {
        self.l - self.m
    }
}

/// `m(m+1)`, the shift between `Λ` and `ε`.
pub fn shift(m: u32) -> f64 {
    let m = m as f64;
    m * (m + 1.0)
}

/// The unknown in both of its forms. `lambda_sq − epsilon = m(m+1)` holds by
/// construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParam {
    epsilon: Complex64,
    lambda_sq: Complex64,
    m: u32,
}

impl SpectralParam {
    pub fn from_epsilon(m: u32, epsilon: Complex64) -> Self {
        Self {
            epsilon,
            lambda_sq: epsilon + shift(m),
            m,
        }
    }

    pub fn from_lambda_sq(m: u32, lambda_sq: Complex64) -> Self {
        Self {
            epsilon: lambda_sq - shift(m),
            lambda_sq,
            m,
        }
    }

    pub fn epsilon(&self) -> Complex64 {
        self.epsilon
    }

    pub fn lambda_sq(&self) -> Complex64 {
        self.lambda_sq
    }

    pub fn m(&self) -> u32 {
        self.m
    }
}

/// One level `(λₙ, sₙ)` of the iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct AimPair {
    pub lam: TruncatedSeries,
    pub s: TruncatedSeries,
    pub n: usize,
}

impl AimPair {
    pub fn order(&self) -> usize {
        self.lam.order()
    }

    fn max_abs(&self) -> f64 {
        self.lam.max_abs().max(self.s.max_abs())
    }

    fn is_finite(&self) -> bool {
        self.lam.is_finite() && self.s.is_finite()
    }

    fn scaled(&self, factor: f64) -> Self {
        let f = Complex64::new(factor, 0.0);
        Self {
            lam: self.lam.scale(f),
            s: self.s.scale(f),
            n: self.n,
        }
    }
}

/// Seed functions `λ₀`, `s₀` expanded to the given order.
pub fn build_seed(m: u32, c: Complex64, epsilon: Complex64, order: usize) -> Result<AimPair> {
    if order < 2 {
        return Err(Error::InvalidConfig(format!(
            "series order must be at least 2, got {order}"
        )));
    }
    let g = TruncatedSeries::geom_inv_one_minus_eta2(order);
    let eta = TruncatedSeries::monomial(Complex64::new(2.0 * (m as f64 + 1.0), 0.0), 1, order);
    let lam = eta.mul(&g)?;
    let numer = TruncatedSeries::constant(-epsilon, order)
        .add(&TruncatedSeries::monomial(c * c, 2, order))?;
    let s = numer.mul(&g)?;
    Ok(AimPair { lam, s, n: 0 })
}

/// One step of the recurrence.
pub fn iterate(prev: &AimPair, seed: &AimPair) -> Result<AimPair> {
    let lam = prev
        .lam
        .diff()
        .add(&prev.s)?
        .add(&seed.lam.mul(&prev.lam)?)?;
    let s = prev.s.diff().add(&seed.s.mul(&prev.lam)?)?;
    Ok(AimPair {
        lam,
        s,
        n: prev.n + 1,
    })
}

/// `sₙ(0) λₙ₋₁(0) − sₙ₋₁(0) λₙ(0)`.
pub fn delta_at_zero(curr: &AimPair, prev: &AimPair) -> Complex64 {
    curr.s.eval_zero() * prev.lam.eval_zero() - prev.s.eval_zero() * curr.lam.eval_zero()
}

/// A complex value stored as `mantissa · 10^exponent10`.
///
/// `aim_residual` returns `δ` in this form: every common rescaling of the
/// two iterate levels moves `2 · RESCALE_EXPONENT` decades out of the
/// mantissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledComplex {
    pub mantissa: Complex64,
    pub exponent10: i64,
}

impl From<Complex64> for ScaledComplex {
    fn from(mantissa: Complex64) -> Self {
        Self {
            mantissa,
            exponent10: 0,
        }
    }
}

impl ScaledComplex {
    /// Decimal exponent carried outside the mantissa.
    pub fn exponent10(&self) -> i64 {
        self.exponent10
    }

    /// `self / other` with the exponents folded back in.
    pub fn ratio(&self, other: &ScaledComplex) -> Complex64 {
        let gap = self.exponent10 - other.exponent10;
        let q = self.mantissa / other.mantissa;
        if gap == 0 {
            q
        } else {
            q * 10f64.powi(gap.clamp(-1000, 1000) as i32)
        }
    }

    /// `log10 |δ|`, or `-inf` for an exact zero.
    pub fn log10_abs(&self) -> f64 {
        self.mantissa.norm().log10() + self.exponent10 as f64
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == Complex64::new(0.0, 0.0)
    }
}

/// Eigenfunction parity under η → −η, fixed by `ℓ − m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(mode: ModeIndex) -> Self {
        if mode.nodes().is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// The last two levels after `n_iter` steps, sharing a common decimal
/// exponent removed by rescaling.
struct Levels {
    curr: AimPair,
    prev: AimPair,
    exponent10: i64,
}

fn run(m: u32, c: Complex64, epsilon: Complex64, n_iter: usize, order: usize) -> Result<Levels> {
    if n_iter == 0 {
        return Err(Error::InvalidConfig("n_iter must be at least 1".into()));
    }
    if order < n_iter + 1 {
        return Err(Error::InvalidConfig(format!(
            "series order {order} too small for {n_iter} iterations"
        )));
    }
    let seed = build_seed(m, c, epsilon, order)?;
    let mut prev = seed.clone();
    let mut curr = iterate(&seed, &seed)?;
    let mut rescalings = 0i64;
    for _ in 1..n_iter {
        let next = iterate(&curr, &seed)?;
        prev = curr;
        curr = next;
        if !curr.is_finite() {
            return Err(Error::NumericOverflow { iteration: curr.n });
        }
        if curr.max_abs() > RESCALE_THRESHOLD {
            prev = prev.scaled(RESCALE_FACTOR);
            curr = curr.scaled(RESCALE_FACTOR);
            rescalings += 1;
        }
    }
    if !curr.is_finite() {
        return Err(Error::NumericOverflow { iteration: curr.n });
    }
    Ok(Levels {
        curr,
        prev,
        exponent10: RESCALE_EXPONENT as i64 * rescalings,
    })
}

/// Runs `n_iter` steps from the seed and returns `δ` of the last two levels.
///
/// Both levels are rescaled together whenever a coefficient grows past
/// [`RESCALE_THRESHOLD`]. The removed decades are carried in the result's
/// exponent so that ratios of residuals stay continuous in `ε`.
pub fn aim_residual(
    m: u32,
    c: Complex64,
    epsilon: Complex64,
    n_iter: usize,
    order: usize,
) -> Result<ScaledComplex> {
    let levels = run(m, c, epsilon, n_iter, order)?;
    let mantissa = delta_at_zero(&levels.curr, &levels.prev);
    if !mantissa.is_finite() {
        return Err(Error::NumericOverflow {
            iteration: levels.curr.n,
        });
    }
    Ok(ScaledComplex {
        mantissa,
        exponent10: 2 * levels.exponent10,
    })
}

/// The factor of `δₙ(0)` belonging to one parity class.
///
/// Seeded at η = 0, `λₖ` is odd in η for even `k` and even for odd `k`,
/// with `sₖ` of the opposite parity. One of `λₙ(0)`, `λₙ₋₁(0)` and one of
/// `sₙ(0)`, `sₙ₋₁(0)` therefore vanish identically, leaving
/// `δₙ(0) = ± s_even(0) · λ_odd(0)` where `even`/`odd` name the level index.
/// Even eigenfunctions zero the first factor, odd ones the second.
pub fn parity_residual(
    m: u32,
    c: Complex64,
    epsilon: Complex64,
    n_iter: usize,
    order: usize,
    parity: Parity,
) -> Result<ScaledComplex> {
    let levels = run(m, c, epsilon, n_iter, order)?;
    let (even_level, odd_level) = if levels.curr.n % 2 == 0 {
        (&levels.curr, &levels.prev)
    } else {
        (&levels.prev, &levels.curr)
    };
    let mantissa = match parity {
        Parity::Even => even_level.s.eval_zero(),
        Parity::Odd => odd_level.lam.eval_zero(),
    };
    Ok(ScaledComplex {
        mantissa,
        exponent10: levels.exponent10,
    })
}
