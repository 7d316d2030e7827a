//! Root finding on the iteration residual and continuation in `c`.
//!
//! Each eigenvalue branch is followed from its Legendre value at `c = 0`
//! along the straight path `c_j = c · j/K`. Branch identity therefore comes
//! from the path, not from sorting, which keeps near-degenerate pairs such
//! as the oblate doublets apart. Guesses along the path are extrapolated
//! linearly in `c²`, the variable the eigenvalues are analytic in.

use rayon::prelude::*;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::aim::{aim_residual, parity_residual, shift, ModeIndex, Parity, ScaledComplex};
use crate::error::{Error, Result};

/// Default iteration count for `|c| ≤ 25`.
pub const DEFAULT_N_ITER: usize = 45;
/// Default iteration count for `|c| > 25`.
pub const LARGE_C_N_ITER: usize = 100;
const LARGE_C: f64 = 25.0;
/// Extra series orders kept above the iteration count.
pub const SERIES_MARGIN: usize = 8;

/// Which quantity the post-hoc ordering check of a spectrum sorts by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    RealPart,
    AbsLambdaSq,
    /// Real part for purely real or purely imaginary `c`, modulus otherwise.
    Auto,
}

/// Which function of `ε` the root finder drives to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualForm {
    /// The full termination quantity `δₙ(0)`.
    Delta,
    /// Only the factor of `δₙ(0)` that vanishes for the branch's parity.
    /// Roots of the other parity class are absent, so oblate doublets
    /// cannot capture each other's branch.
    ParityFactor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// `None` picks 45 or 100 from `|c|`.
    pub n_iter: Option<usize>,
    /// `None` means `n_iter + 8`.
    pub series_order: Option<usize>,
    pub root_tol: f64,
    pub resid_tol: f64,
    pub max_root_steps: usize,
    /// `None` means `max(8, ceil(|c|/2))`.
    pub continuation_steps: Option<usize>,
    pub ordering: Ordering,
    pub residual: ResidualForm,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n_iter: None,
            series_order: None,
            root_tol: 1e-12,
            resid_tol: 1e-9,
            max_root_steps: 60,
            continuation_steps: None,
            ordering: Ordering::Auto,
            residual: ResidualForm::ParityFactor,
        }
    }
}

impl SolverConfig {
    pub fn with_n_iter(mut self, n_iter: usize) -> Self {
        self.n_iter = Some(n_iter);
        self
    }

    pub fn with_continuation_steps(mut self, steps: usize) -> Self {
        self.continuation_steps = Some(steps);
        self
    }

    pub fn n_iter_for(&self, c: Complex64) -> usize {
        self.n_iter.unwrap_or(if c.norm() > LARGE_C {
            LARGE_C_N_ITER
        } else {
            DEFAULT_N_ITER
        })
    }

    pub fn series_order_for(&self, c: Complex64) -> usize {
        self.series_order
            .unwrap_or_else(|| self.n_iter_for(c) + SERIES_MARGIN)
    }

    pub fn continuation_steps_for(&self, c: Complex64) -> usize {
        self.continuation_steps
            .unwrap_or_else(|| 8.max((c.norm() / 2.0).ceil() as usize))
    }

    pub fn validate(&self, c: Complex64) -> Result<()> {
        let n = self.n_iter_for(c);
        if n == 0 {
            return Err(Error::InvalidConfig("n_iter must be at least 1".into()));
        }
        if self.series_order_for(c) < n + 1 {
            return Err(Error::InvalidConfig(format!(
                "series order {} must be at least n_iter + 1 = {}",
                self.series_order_for(c),
                n + 1
            )));
        }
        if !(self.root_tol > 0.0 && self.resid_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if self.max_root_steps == 0 {
            return Err(Error::InvalidConfig("max_root_steps must be positive".into()));
        }
        if self.continuation_steps == Some(0) {
            return Err(Error::InvalidConfig("continuation_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxSteps,
    Overflow,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxSteps => "max_steps",
            Status::Overflow => "overflow",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootOutcome {
    pub epsilon: Complex64,
    /// `|δ(ε)|` relative to the reference magnitude of this search.
    pub residual: f64,
    pub steps: usize,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub mode: ModeIndex,
    pub c: Complex64,
    pub lambda_sq: Complex64,
    pub epsilon: Complex64,
    pub residual: f64,
    pub n_iter_used: usize,
    /// `(c_j, Λ_j)` for every continuation step that was attempted.
    pub continuation_trace: Vec<(Complex64, Complex64)>,
    pub status: Status,
    /// Set by [`solve_spectrum`] when this entry breaks the expected
    /// ordering; always `false` for a single solve.
    pub ordering_violation: bool,
}

/// `ε` at `c = 0`: `ℓ(ℓ+1) − m(m+1)`.
pub fn initial_guess(mode: ModeIndex) -> Complex64 {
    let l = mode.l() as f64;
    Complex64::new(l * (l + 1.0) - shift(mode.m()), 0.0)
}

/// Complex secant iteration on `residual_fn`.
///
/// Iterates are normalized by the larger of `|δ|` at the two starting points.
/// On hitting the step limit the iterate with the smallest `|δ|` is returned.
/// The reported residual is the size of the Newton correction relative to
/// `1 + |ε|`, i.e. `|δ(ε)| / (|δ'(ε)| (1 + |ε|))` with the derivative taken
/// from one extra evaluation at `ε + 1e-7 (1 + |ε|)`. It does not depend on
/// the overall scale of `δ`, which changes by hundreds of decades with `c`.
pub fn find_root<F>(mut residual_fn: F, eps0: Complex64, cfg: &SolverConfig) -> RootOutcome
where
    F: FnMut(Complex64) -> Result<ScaledComplex>,
{
    let overflow = |epsilon, steps| RootOutcome {
        epsilon,
        residual: f64::INFINITY,
        steps,
        status: Status::Overflow,
    };
    if !eps0.is_finite() {
        return overflow(eps0, 0);
    }

    let mut x0 = eps0;
    let f0 = match residual_fn(x0) {
        Ok(f) => f,
        Err(_) => return overflow(x0, 0),
    };
    if f0.is_zero() {
        return RootOutcome {
            epsilon: x0,
            residual: 0.0,
            steps: 0,
            status: Status::Converged,
        };
    }
    let mut x1 = eps0 * (1.0 + 1e-4) + 1e-4;
    let f1 = match residual_fn(x1) {
        Ok(f) => f,
        Err(_) => return overflow(x1, 0),
    };
    let reference = if f1.log10_abs() > f0.log10_abs() { f1 } else { f0 };

    // Everything below works with values normalized by `reference`.
    let mut y0 = f0.ratio(&reference);
    let mut y1 = f1.ratio(&reference);
    let mut best = if y1.norm() < y0.norm() { (x1, y1) } else { (x0, y0) };
    let mut steps = 0;
    loop {
        if y1.norm() == 0.0 {
            return RootOutcome {
                epsilon: x1,
                residual: 0.0,
                steps,
                status: Status::Converged,
            };
        }
        if steps == cfg.max_root_steps {
            // Near a double root the secant wanders inside the noise band;
            // the smallest residual seen is the better estimate.
            let (x, y) = best;
            return settle(&mut residual_fn, x, y, &reference, steps, cfg);
        }
        let denom = y1 - y0;
        let x2 = if denom.norm() < 1e-300 {
            x1 + 1e-6 * (1.0 + x1.norm())
        } else {
            x1 - y1 * (x1 - x0) / denom
        };
        steps += 1;
        if !x2.is_finite() {
            return overflow(x1, steps);
        }
        let y2 = match residual_fn(x2) {
            Ok(f) => f.ratio(&reference),
            Err(_) => return overflow(x2, steps),
        };
        if !y2.is_finite() {
            return overflow(x2, steps);
        }
        if y2.norm() < best.1.norm() {
            best = (x2, y2);
        }
        let step = (x2 - x1).norm();
        x0 = x1;
        y0 = y1;
        x1 = x2;
        y1 = y2;
        if step <= cfg.root_tol * (1.0 + x1.norm()) {
            return match newton_residual(&mut residual_fn, x1, y1, &reference) {
                Some(r) if r <= cfg.resid_tol => RootOutcome {
                    epsilon: x1,
                    residual: r,
                    steps,
                    status: Status::Converged,
                },
                Some(_) => settle(&mut residual_fn, x1, y1, &reference, steps, cfg),
                None => overflow(x1, steps),
            };
        }
    }
}

/// Samples on the polishing circle.
const POLISH_POINTS: usize = 16;
/// Taylor coefficients kept from the circle samples.
const POLISH_TERMS: usize = 8;

/// Final estimate when the secant did not settle on its own: the better of
/// `x` and its polished value, by Newton residual.
fn settle<F>(
    residual_fn: &mut F,
    x: Complex64,
    y: Complex64,
    reference: &ScaledComplex,
    steps: usize,
    cfg: &SolverConfig,
) -> RootOutcome
where
    F: FnMut(Complex64) -> Result<ScaledComplex>,
{
    let mut epsilon = x;
    let mut residual = newton_residual(residual_fn, x, y, reference).unwrap_or(f64::INFINITY);
    if let Some(p) = polish(residual_fn, x, reference) {
        if let Ok(yp) = residual_fn(p) {
            let rp = newton_residual(residual_fn, p, yp.ratio(reference), reference)
                .unwrap_or(f64::INFINITY);
            if rp < residual {
                epsilon = p;
                residual = rp;
            }
        }
    }
    let status = if residual <= cfg.resid_tol {
        Status::Converged
    } else {
        Status::MaxSteps
    };
    RootOutcome {
        epsilon,
        residual,
        steps,
        status,
    }
}

/// Root of the local Taylor model of `residual_fn` about `x`.
///
/// Near a (nearly) double root, values within about `sqrt(eps)` of the root
/// are pure rounding noise and the secant wanders. On a circle well outside
/// that band the function is accurate, and its Taylor coefficients follow
/// from a discrete Fourier transform of the samples. The model is then solved
/// as a quadratic with the higher terms lagged.
fn polish<F>(residual_fn: &mut F, x: Complex64, reference: &ScaledComplex) -> Option<Complex64>
where
    F: FnMut(Complex64) -> Result<ScaledComplex>,
{
    let rho = 1e-4 * (1.0 + x.norm());
    let n = POLISH_POINTS;
    let nodes: Vec<Complex64> = (0..n)
        .map(|j| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / n as f64))
        .collect();
    let samples: Vec<Complex64> = nodes
        .iter()
        .map(|w| residual_fn(x + w * rho).ok().map(|f| f.ratio(reference)))
        .collect::<Option<_>>()?;
    // Coefficients of the model in the scaled variable u = t / rho.
    let a: Vec<Complex64> = (0..POLISH_TERMS)
        .map(|k| {
            samples
                .iter()
                .zip(&nodes)
                .map(|(y, w)| y * w.powu(k as u32).conj())
                .sum::<Complex64>()
                / n as f64
        })
        .collect();
    if a[1].norm() == 0.0 && a[2].norm() == 0.0 {
        return None;
    }
    let mut u = Complex64::new(0.0, 0.0);
    for _ in 0..8 {
        let tail: Complex64 = (3..POLISH_TERMS).map(|k| a[k] * u.powu(k as u32)).sum();
        let c0 = a[0] + tail;
        // Root of a2 u² + a1 u + c0 nearest zero, in cancellation-free form.
        let disc = (a[1] * a[1] - a[2] * c0 * 4.0).sqrt();
        let den = if (-a[1] + disc).norm() > (-a[1] - disc).norm() {
            -a[1] + disc
        } else {
            -a[1] - disc
        };
        if den.norm() == 0.0 {
            return None;
        }
        u = c0 * 2.0 / den;
    }
    (u.is_finite() && u.norm() < 1.0).then(|| x + u * rho)
}

/// `|y / y'| / (1 + |x|)` with a forward-difference derivative.
fn newton_residual<F>(
    residual_fn: &mut F,
    x: Complex64,
    y: Complex64,
    reference: &ScaledComplex,
) -> Option<f64>
where
    F: FnMut(Complex64) -> Result<ScaledComplex>,
{
    let scale = 1.0 + x.norm();
    let h = 1e-7 * scale;
    let yh = residual_fn(x + h).ok()?.ratio(reference);
    let slope = (yh - y) / h;
    let r = y.norm() / (slope.norm() * scale);
    if r.is_nan() {
        None
    } else {
        Some(r)
    }
}

fn residual_at(
    mode: ModeIndex,
    c: Complex64,
    n_iter: usize,
    order: usize,
    form: ResidualForm,
) -> impl Fn(Complex64) -> Result<ScaledComplex> {
    let m = mode.m();
    let parity = Parity::of(mode);
    move |eps| match form {
        ResidualForm::Delta => aim_residual(m, c, eps, n_iter, order),
        ResidualForm::ParityFactor => parity_residual(m, c, eps, n_iter, order, parity),
    }
}

/// Largest accepted `|ε − prediction| / |ε − ε_prev|` in continuation.
const PREDICTION_RATIO: f64 = 0.5;
/// Times a continuation step may be halved.
const MAX_HALVINGS: u32 = 10;

/// `⟨η²⟩` in the associated Legendre function of `mode`, i.e. `dε/dc²` at
/// `c = 0`.
pub fn eta2_mean(mode: ModeIndex) -> f64 {
    let (l, m) = (mode.l() as f64, mode.m() as f64);
    (2.0 * l * (l + 1.0) - 2.0 * m * m - 1.0) / ((2.0 * l - 1.0) * (2.0 * l + 3.0))
}

/// Follows the branch of `mode` from `c = 0` to `c`.
///
/// Steps along `c t`, starting from `continuation_steps` equal steps; a
/// step whose corrector lands far from the predictor is halved and retried.
pub fn solve(mode: ModeIndex, c: Complex64, cfg: &SolverConfig) -> Result<EigenResult> {
    if !c.is_finite() {
        return Err(Error::NonFiniteParameter);
    }
    cfg.validate(c)?;
    let n_iter = cfg.n_iter_for(c);
    let order = cfg.series_order_for(c);
    let base = if c == Complex64::new(0.0, 0.0) {
        1.0
    } else {
        1.0 / cfg.continuation_steps_for(c) as f64
    };
    let min_dt = base / (1u32 << MAX_HALVINGS) as f64;
    let m = mode.m();

    // (c², ε) of accepted steps. The first prediction uses the exact slope
    // dε/dc² at c = 0.
    let mut history = vec![(Complex64::new(0.0, 0.0), initial_guess(mode))];
    let slope0 = Complex64::new(eta2_mean(mode), 0.0);
    let mut trace = Vec::new();
    let mut last = None;
    let (mut t, mut dt) = (0.0f64, base);
    while t < 1.0 {
        let t_next = if t + dt > 1.0 - 1e-12 { 1.0 } else { t + dt };
        let cj = c * t_next;
        let c2 = cj * cj;
        let guess = match history.as_slice() {
            [(_, e)] => e + slope0 * c2,
            [.., (a2, ea), (b2, eb)] => eb + (eb - ea) * ((c2 - b2) / (b2 - a2)),
            [] => unreachable!(),
        };
        let outcome = find_root(residual_at(mode, cj, n_iter, order, cfg.residual), guess, cfg);
        let prev = history.last().expect("history starts non-empty").1;
        let converged = outcome.status == Status::Converged;
        let predicted = (outcome.epsilon - guess).norm()
            <= PREDICTION_RATIO * (outcome.epsilon - prev).norm() + 1e-9 * (1.0 + prev.norm());
        let at_floor = dt <= min_dt * (1.0 + 1e-9);
        if !at_floor && !(converged && predicted) {
            dt /= 2.0;
            continue;
        }
        trace.push((cj, outcome.epsilon + shift(m)));
        history.push((c2, outcome.epsilon));
        last = Some(outcome);
        if !converged {
            break;
        }
        t = t_next;
        dt = (dt * 2.0).min(base);
    }
    let outcome = last.expect("at least one continuation step");
    Ok(EigenResult {
        mode,
        c,
        lambda_sq: outcome.epsilon + shift(m),
        epsilon: outcome.epsilon,
        residual: outcome.residual,
        n_iter_used: n_iter,
        continuation_trace: trace,
        status: outcome.status,
        ordering_violation: false,
    })
}

fn is_axis_aligned(c: Complex64) -> bool {
    c.re == 0.0 || c.im == 0.0
}

/// Flags entries whose position in the sorted spectrum differs from their
/// position in `ℓ` order.
fn check_ordering(results: &mut [EigenResult], ordering: Ordering, c: Complex64) {
    let key: fn(&EigenResult) -> f64 = match ordering {
        Ordering::RealPart => |r| r.lambda_sq.re,
        Ordering::AbsLambdaSq => |r| r.lambda_sq.norm(),
        Ordering::Auto if is_axis_aligned(c) => |r| r.lambda_sq.re,
        Ordering::Auto => |r| r.lambda_sq.norm(),
    };
    let mut idx: Vec<usize> = (0..results.len()).collect();
    idx.sort_by(|&a, &b| key(&results[a]).total_cmp(&key(&results[b])).then(a.cmp(&b)));
    for (pos, &i) in idx.iter().enumerate() {
        // Exact ties are not violations.
        results[i].ordering_violation = pos != i && key(&results[pos]) != key(&results[i]);
    }
}

/// Solves `ℓ = m ..= l_max`, each branch continued independently.
///
/// Branches are solved in parallel; results come back in `ℓ` order.
pub fn solve_spectrum(
    m: u32,
    l_max: u32,
    c: Complex64,
    cfg: &SolverConfig,
) -> Result<Vec<Result<EigenResult>>> {
    if l_max < m {
        return Err(Error::InvalidMode {
            m: m as i64,
            l: l_max as i64,
        });
    }
    let modes: Vec<ModeIndex> = (m..=l_max)
        .map(|l| ModeIndex::new(m as i64, l as i64))
        .collect::<Result<_>>()?;
    let solved: Vec<Result<EigenResult>> =
        modes.par_iter().map(|&mode| solve(mode, c, cfg)).collect();

    if solved.iter().all(|r| r.is_ok()) {
        let mut ok: Vec<EigenResult> = solved.into_iter().map(|r| r.unwrap()).collect();
        check_ordering(&mut ok, cfg.ordering, c);
        return Ok(ok.into_iter().map(Ok).collect());
    }
    Ok(solved)
}
