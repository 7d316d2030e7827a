//! Matrix reference for the spheroidal spectrum.
//!
//! In the basis of normalized associated Legendre functions `P̄^m_{m+r}` the
//! operator `−d/dη (1−η²) d/dη + m²/(1−η²) + c²η²` has the Legendre
//! eigenvalues `(m+r)(m+r+1)` on the diagonal plus `c²` times the matrix of
//! η². That matrix only couples `r` to `r` and `r ± 2`, so the truncated
//! operator splits into two tridiagonal blocks, one per parity of `r`.
//!
//! The η² elements are integrated by Gauss–Legendre quadrature from basis
//! values generated by upward recurrence, so nothing here shares a formula
//! with the iteration in [`crate::aim`].

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::aim::{ModeIndex, Parity};
use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on (−1, 1).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess, then Newton on P_n.
        let theta = std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5);
        let mut x = theta.cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `sqrt((n² − m²) / (4n² − 1))`, the coefficient in
/// `η P̄_n = c_{n+1} P̄_{n+1} + c_n P̄_{n−1}`.
fn ladder(m: u32, n: u32) -> f64 {
    let (n, m) = (n as f64, m as f64);
    ((n * n - m * m) / (4.0 * n * n - 1.0)).sqrt()
}

/// `P̄^m_{m+r}(x)` for `r = 0 .. count`, normalized to unit `L²(−1, 1)` norm.
///
/// The starting value `P̄^m_m` is assembled in log space so that large `m`
/// near the endpoints underflows gracefully instead of overflowing first.
pub fn normalized_assoc_legendre(m: u32, count: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let mut log_norm = 0.5 * 0.5f64.ln();
    for k in 1..=m {
        let k = k as f64;
        log_norm += 0.5 * ((2.0 * k + 1.0) / (2.0 * k)).ln();
    }
    let one_minus = (1.0 - x * x).max(0.0);
    let start = if m == 0 {
        log_norm.exp()
    } else if one_minus == 0.0 {
        0.0
    } else {
        (log_norm + 0.5 * m as f64 * one_minus.ln()).exp()
    };
    out.push(start);
    if count == 1 {
        return out;
    }
    out.push(x * (2.0 * m as f64 + 3.0).sqrt() * start);
    for r in 2..count {
        let n = m + r as u32;
        let p = (x * out[r - 1] - ladder(m, n - 1) * out[r - 2]) / ladder(m, n);
        out.push(p);
    }
    out
}

/// Matrix elements of η² between `P̄^m_{m+r}` for `r = 0 .. 2R`, i.e. `R`
/// basis functions of each parity.
#[derive(Debug, Clone, PartialEq)]
pub struct Eta2Elements {
    pub m: u32,
    /// `⟨r|η²|r⟩`, length `2R`.
    pub alpha: Vec<f64>,
    /// `⟨r|η²|r+2⟩`, length `2R − 2`.
    pub beta: Vec<f64>,
}

impl Eta2Elements {
    /// Total number of basis functions, `2R`.
    pub fn size(&self) -> usize {
        self.alpha.len()
    }

    /// Functions per parity block, `R`.
    pub fn block_size(&self) -> usize {
        self.alpha.len() / 2
    }

    /// `(r, α_r)` on the diagonal and `β` between consecutive entries for
    /// the basis functions of one parity.
    pub fn block(&self, parity: Parity) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
        let first = match parity {
            Parity::Even => 0,
            Parity::Odd => 1,
        };
        let rs: Vec<usize> = (first..self.size()).step_by(2).collect();
        let diag = rs.iter().map(|&r| self.alpha[r]).collect();
        let off = rs
            .iter()
            .skip(1)
            .map(|&r| self.beta[r - 2])
            .collect();
        (rs, diag, off)
    }
}

/// Number of quadrature nodes used for a basis of `size` functions; the
/// integrands have degree at most `2m + 2·size`.
pub fn quadrature_points(m: u32, size: usize) -> usize {
    m as usize + size + 4
}

/// η² elements for blocks of `truncation` functions each, by quadrature
/// that is exact for these polynomial integrands.
pub fn eta2_matrix_elements(m: u32, truncation: usize) -> Result<Eta2Elements> {
    if truncation < 2 {
        return Err(Error::InvalidConfig(format!(
            "truncation must be at least 2, got {truncation}"
        )));
    }
    let size = 2 * truncation;
    let (nodes, weights) = gauss_legendre(quadrature_points(m, size));
    let mut alpha = vec![0.0; size];
    let mut beta = vec![0.0; size.saturating_sub(2)];
    for (&x, &w) in nodes.iter().zip(&weights) {
        let p = normalized_assoc_legendre(m, size, x);
        let wx2 = w * x * x;
        for r in 0..size {
            alpha[r] += wx2 * p[r] * p[r];
            if r + 2 < size {
                beta[r] += wx2 * p[r] * p[r + 2];
            }
        }
    }
    Ok(Eta2Elements { m, alpha, beta })
}

/// One parity block of the truncated operator.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    pub m: u32,
    pub c2: Complex64,
    pub parity: Parity,
    /// Basis offsets `r` (degree `m + r`) of the block, in order.
    pub rs: Vec<usize>,
    pub diag: Vec<Complex64>,
    pub off: Vec<Complex64>,
}

impl TridiagonalOperator {
    pub fn new(elements: &Eta2Elements, c2: Complex64, parity: Parity) -> Self {
        let m = elements.m;
        let (rs, alpha, beta) = elements.block(parity);
        let diag = rs
            .iter()
            .zip(&alpha)
            .map(|(&r, &a)| {
                let deg = (m as usize + r) as f64;
                c2 * a + deg * (deg + 1.0)
            })
            .collect();
        let off = beta.iter().map(|&b| c2 * b).collect();
        Self {
            m,
            c2,
            parity,
            rs,
            diag,
            off,
        }
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.size();
        let mut a = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for i in 0..n {
            a[(i, i)] = self.diag[i];
            if i + 1 < n {
                a[(i, i + 1)] = self.off[i];
                a[(i + 1, i)] = self.off[i];
            }
        }
        a
    }

    /// All eigenvalues of the block, unordered.
    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        if self.size() == 0 {
            return Ok(Vec::new());
        }
        let schur = Schur::try_new(self.to_dense(), f64::EPSILON, 100_000)
            .ok_or_else(|| Error::InvalidConfig("Schur iteration did not converge".into()))?;
        let values = schur
            .eigenvalues()
            .ok_or_else(|| Error::InvalidConfig("Schur form not triangular".into()))?;
        Ok(values.iter().copied().collect())
    }
}

/// The path from 0 to `c` is cut into `2^TRACKING_HALVINGS` equal steps.
pub const TRACKING_HALVINGS: u32 = 6;
/// Drift between truncations `R` and `R + 8` above which a value is unstable.
pub const DRIFT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleEntry {
    pub mode: ModeIndex,
    pub lambda_sq: Complex64,
    /// `|Λ(R + 8) − Λ(R)|`.
    pub drift: f64,
}

impl OracleEntry {
    pub fn is_stable(&self) -> bool {
        self.drift <= DRIFT_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSpectrum {
    pub m: u32,
    pub c: Complex64,
    pub truncation: usize,
    pub entries: Vec<OracleEntry>,
}

impl OracleSpectrum {
    pub fn is_stable(&self) -> bool {
        self.entries.iter().all(OracleEntry::is_stable)
    }

    pub fn get(&self, l: u32) -> Option<&OracleEntry> {
        self.entries.iter().find(|e| e.mode.l() == l)
    }
}

/// Assigns each label its nearest eigenvalue, closest pairs first, never
/// reusing an eigenvalue.
fn match_to_anchors(anchors: &[Complex64], values: &[Complex64]) -> Vec<Complex64> {
    let mut pairs: Vec<(f64, usize, usize)> = anchors
        .iter()
        .enumerate()
        .flat_map(|(i, a)| values.iter().enumerate().map(move |(j, v)| ((v - a).norm(), i, j)))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut out = vec![None; anchors.len()];
    let mut used = vec![false; values.len()];
    for (_, i, j) in pairs {
        if out[i].is_none() && !used[j] {
            out[i] = Some(values[j]);
            used[j] = true;
        }
    }
    out.into_iter()
        .map(|v| v.unwrap_or(Complex64::new(f64::NAN, f64::NAN)))
        .collect()
}

/// Eigenvalues `ℓ = m .. m + count` followed from their Legendre values
/// along `c_j = c · j / 2^TRACKING_HALVINGS`.
///
/// At each point every label takes the unused eigenvalue of its parity block
/// nearest to a prediction extrapolated linearly in `c²` from the two
/// previous points.
fn tracked(m: u32, c: Complex64, count: usize, elements: &Eta2Elements) -> Result<Vec<Complex64>> {
    let legendre: Vec<Complex64> = (0..count)
        .map(|k| {
            let l = (m as usize + k) as f64;
            Complex64::new(l * (l + 1.0), 0.0)
        })
        .collect();
    let zero = Complex64::new(0.0, 0.0);
    if c == zero {
        return Ok(legendre);
    }
    let steps = 1usize << TRACKING_HALVINGS;
    let mut prev: Option<(Complex64, Vec<Complex64>)> = None;
    let mut curr = (zero, legendre);
    for j in 1..=steps {
        let cj = c * (j as f64 / steps as f64);
        let c2 = cj * cj;
        let predicted: Vec<Complex64> = match &prev {
            None => curr.1.clone(),
            Some((p2, pv)) => curr
                .1
                .iter()
                .zip(pv)
                .map(|(b, a)| b + (b - a) * ((c2 - curr.0) / (curr.0 - p2)))
                .collect(),
        };
        let mut next = vec![zero; count];
        for parity in [Parity::Even, Parity::Odd] {
            let first = if parity == Parity::Even { 0 } else { 1 };
            let ks: Vec<usize> = (first..count).step_by(2).collect();
            if ks.is_empty() {
                continue;
            }
            let values = TridiagonalOperator::new(elements, c2, parity).eigenvalues()?;
            let anchors: Vec<Complex64> = ks.iter().map(|&k| predicted[k]).collect();
            for (k, v) in ks.iter().zip(match_to_anchors(&anchors, &values)) {
                next[*k] = v;
            }
        }
        prev = Some(std::mem::replace(&mut curr, (c2, next)));
    }
    Ok(curr.1)
}

/// Oracle spectrum for `ℓ = m ..= m + count − 1` with `truncation`
/// functions in each parity block.
///
/// Every value is recomputed at `truncation + 8` to report its drift.
pub fn oracle_spectrum(m: u32, c: Complex64, count: usize, truncation: usize) -> Result<OracleSpectrum> {
    let size = truncation;
    if !c.is_finite() {
        return Err(Error::NonFiniteParameter);
    }
    if count == 0 {
        return Err(Error::InvalidConfig("count must be positive".into()));
    }
    if size < count + 8 {
        return Err(Error::InvalidConfig(format!(
            "truncation {size} must be at least count + 8 = {}",
            count + 8
        )));
    }
    let base = tracked(m, c, count, &eta2_matrix_elements(m, size)?)?;
    let wider = tracked(m, c, count, &eta2_matrix_elements(m, size + 8)?)?;
    let entries = base
        .iter()
        .zip(&wider)
        .enumerate()
        .map(|(k, (a, b))| {
            Ok(OracleEntry {
                mode: ModeIndex::new(m as i64, (m as usize + k) as i64)?,
                lambda_sq: *a,
                drift: (a - b).norm(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(OracleSpectrum {
        m,
        c,
        truncation,
        entries,
    })
}
