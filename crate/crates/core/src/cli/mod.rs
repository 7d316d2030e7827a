//! Command-line front end.

pub mod literal;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::aim::ModeIndex;
use crate::eigensolver::{solve, solve_spectrum, EigenResult, SolverConfig, Status};
use crate::error::Error;
use crate::oracle::oracle_spectrum;
use crate::reference::{reference_records, ReferenceRecord, Source};

pub use literal::{parse_complex, render_complex, LiteralError, GRAMMAR};
pub use output::{ConvergeRow, Cx, Deviation, Format, OutputRow, VerifyRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NONCONVERGENCE: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;

/// Relative AIM-vs-oracle agreement required by `verify`.
pub const VERIFY_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(
    name = "spheroidal",
    version,
    about = "Angular spheroidal eigenvalues by the asymptotic iteration method"
)]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// AIM iterations (default 45, or 100 for |c| > 25).
    #[arg(long, global = true)]
    pub n_iter: Option<usize>,
    /// Taylor order of the series (default n_iter + 8).
    #[arg(long, global = true)]
    pub series_order: Option<usize>,
    /// Continuation steps from c = 0 (default max(8, ceil(|c|/2))).
    #[arg(long, global = true)]
    pub continuation_steps: Option<usize>,
    /// Suppress the summary on standard error.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct ModeArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub m: i64,
    #[arg(long, allow_hyphen_values = true)]
    pub l: i64,
    /// Size parameter, e.g. 10, 10i, 4.51+11.07i.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    pub c: Complex64,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub m: i64,
    #[arg(long, allow_hyphen_values = true)]
    pub l_max: i64,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    pub c: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableSelection {
    One(Source),
    All,
}

fn parse_table(s: &str) -> Result<TableSelection, String> {
    if s == "all" {
        return Ok(TableSelection::All);
    }
    s.parse()
        .map(TableSelection::One)
        .map_err(|_| format!("expected 1, 2, 3, 4, 5 or all, found {s:?}"))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one mode.
    Solve(ModeArgs),
    /// Solve l = m ..= l-max.
    Spectrum(SweepArgs),
    /// Re-solve over a range of iteration counts.
    Converge {
        #[command(flatten)]
        mode: ModeArgs,
        #[arg(long, default_value_t = 5)]
        n_min: usize,
        #[arg(long, default_value_t = 60)]
        n_max: usize,
        #[arg(long, default_value_t = 1)]
        step: usize,
    },
    /// Recompute the embedded reference tables.
    Tables {
        #[arg(long, default_value = "all", value_parser = parse_table)]
        table: TableSelection,
    },
    /// Compare AIM against the Legendre-basis matrix method.
    Verify {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Per-parity truncation (default max(count + 16, ceil(1.6 |c|))).
        #[arg(long)]
        truncation: Option<usize>,
    },
}

/// Runs `f` over `items` in parallel; results keep input order.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.par_iter().map(f).collect()
}

/// Default oracle truncation for `count` modes at `c`.
pub fn default_truncation(count: usize, c: Complex64) -> usize {
    (count + 16).max((1.6 * c.norm()).ceil() as usize)
}

/// The embedded record for `mode` at `c`, if any. Records are keyed by `c²`.
pub fn find_reference(mode: ModeIndex, c: Complex64) -> Option<ReferenceRecord> {
    let c2 = c * c;
    reference_records().into_iter().find(|r| {
        let rc = r.c();
        r.mode == mode && (rc * rc - c2).norm() <= 1e-12 * (1.0 + c2.norm())
    })
}

pub fn deviation(record: &ReferenceRecord, lambda_sq: Complex64) -> Deviation {
    let abs = (lambda_sq - record.lambda_sq_ref).norm();
    Deviation {
        source: record.source.to_string(),
        lambda_ref: record.lambda_sq_ref.into(),
        abs_deviation: abs,
        rel_deviation: abs / record.lambda_sq_ref.norm().max(f64::MIN_POSITIVE),
        printed_match: record.matches(lambda_sq),
    }
}

pub fn output_row(res: &EigenResult, reference: Option<&ReferenceRecord>) -> OutputRow {
    OutputRow {
        m: res.mode.m(),
        l: res.mode.l(),
        c: res.c.into(),
        lambda_sq: res.lambda_sq.into(),
        residual: res.residual,
        n_iter_used: res.n_iter_used,
        status: res.status.as_str().to_string(),
        reference: reference.map(|r| deviation(r, res.lambda_sq)),
    }
}

impl Cli {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            n_iter: self.n_iter,
            series_order: self.series_order,
            continuation_steps: self.continuation_steps,
            ..SolverConfig::default()
        }
    }
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    quiet: bool,
}

impl Io<'_> {
    fn note(&mut self, msg: std::fmt::Arguments<'_>) {
        if !self.quiet {
            let _ = writeln!(self.err, "{msg}");
        }
    }

    fn fail(&mut self, msg: std::fmt::Arguments<'_>) {
        let _ = writeln!(self.err, "error: {msg}");
    }
}

fn usage_error(io: &mut Io<'_>, e: &Error) -> i32 {
    io.fail(format_args!("{e}"));
    EXIT_USAGE
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let mut io = Io {
        out,
        err,
        quiet: cli.quiet,
    };
    let cfg = cli.solver_config();
    match &cli.command {
        Command::Solve(a) => cmd_solve(&mut io, cli.format, &cfg, a),
        Command::Spectrum(a) => cmd_spectrum(&mut io, cli.format, &cfg, a),
        Command::Converge {
            mode,
            n_min,
            n_max,
            step,
        } => cmd_converge(&mut io, cli.format, &cfg, mode, *n_min, *n_max, *step),
        Command::Tables { table } => cmd_tables(&mut io, cli.format, &cfg, *table),
        Command::Verify { sweep, truncation } => {
            cmd_verify(&mut io, cli.format, &cfg, sweep, *truncation)
        }
    }
}

fn emit<R: output::CsvRow + serde::Serialize>(
    io: &mut Io<'_>,
    format: Format,
    rows: &[R],
    single: bool,
) -> Option<i32> {
    match output::write_rows(io.out, format, rows, single) {
        Ok(()) => None,
        Err(e) => {
            io.fail(format_args!("writing output: {e}"));
            Some(EXIT_USAGE)
        }
    }
}

fn cmd_solve(io: &mut Io<'_>, format: Format, cfg: &SolverConfig, a: &ModeArgs) -> i32 {
    let mode = match ModeIndex::new(a.m, a.l) {
        Ok(m) => m,
        Err(e) => return usage_error(io, &e),
    };
    let res = match solve(mode, a.c, cfg) {
        Ok(r) => r,
        Err(e) => return usage_error(io, &e),
    };
    let reference = find_reference(mode, a.c);
    if let Some(code) = emit(io, format, &[output_row(&res, reference.as_ref())], true) {
        return code;
    }
    if res.status == Status::Converged {
        EXIT_OK
    } else {
        io.note(format_args!(
            "solve: ({}, {}) did not converge ({}, residual {:e})",
            a.m,
            a.l,
            res.status.as_str(),
            res.residual
        ));
        EXIT_NONCONVERGENCE
    }
}

fn cmd_spectrum(io: &mut Io<'_>, format: Format, cfg: &SolverConfig, a: &SweepArgs) -> i32 {
    if let Err(e) = ModeIndex::new(a.m, a.l_max) {
        return usage_error(io, &e);
    }
    let results = match solve_spectrum(a.m as u32, a.l_max as u32, a.c, cfg) {
        Ok(r) => r,
        Err(e) => return usage_error(io, &e),
    };
    let mut rows = Vec::new();
    let mut failed = 0;
    for r in results {
        match r {
            Ok(res) => {
                if res.status != Status::Converged {
                    failed += 1;
                }
                if res.ordering_violation {
                    io.note(format_args!(
                        "spectrum: l = {} is out of order in the sorted spectrum",
                        res.mode.l()
                    ));
                }
                let reference = find_reference(res.mode, a.c);
                rows.push(output_row(&res, reference.as_ref()));
            }
            Err(e) => return usage_error(io, &e),
        }
    }
    if let Some(code) = emit(io, format, &rows, false) {
        return code;
    }
    if failed > 0 {
        io.note(format_args!("spectrum: {failed} mode(s) did not converge"));
        EXIT_NONCONVERGENCE
    } else {
        EXIT_OK
    }
}

fn cmd_converge(
    io: &mut Io<'_>,
    format: Format,
    cfg: &SolverConfig,
    a: &ModeArgs,
    n_min: usize,
    n_max: usize,
    step: usize,
) -> i32 {
    let mode = match ModeIndex::new(a.m, a.l) {
        Ok(m) => m,
        Err(e) => return usage_error(io, &e),
    };
    if n_min == 0 || n_min > n_max || step == 0 {
        return usage_error(
            io,
            &Error::InvalidConfig("need 1 <= n-min <= n-max and step >= 1".into()),
        );
    }
    let mut ns: Vec<usize> = (n_min..=n_max).step_by(step).collect();
    if ns.last() != Some(&n_max) {
        ns.push(n_max);
    }
    let solved = par_map(&ns, |&n| {
        let cfg = SolverConfig {
            n_iter: Some(n),
            ..cfg.clone()
        };
        solve(mode, a.c, &cfg)
    });
    let mut results = Vec::with_capacity(ns.len());
    for r in solved {
        match r {
            Ok(res) => results.push(res),
            Err(e) => return usage_error(io, &e),
        }
    }
    let last = results.last().expect("n_max is always solved");
    let target = last.lambda_sq;
    let last_ok = last.status == Status::Converged;
    let rows: Vec<ConvergeRow> = ns
        .iter()
        .zip(&results)
        .map(|(&n, r)| ConvergeRow {
            n,
            lambda_sq: r.lambda_sq.into(),
            deviation: (r.lambda_sq - target).norm(),
            residual: r.residual,
            status: r.status.as_str().to_string(),
        })
        .collect();
    if let Some(code) = emit(io, format, &rows, false) {
        return code;
    }
    if last_ok {
        EXIT_OK
    } else {
        io.note(format_args!("converge: the n = {n_max} solve did not converge"));
        EXIT_NONCONVERGENCE
    }
}

fn cmd_tables(
    io: &mut Io<'_>,
    format: Format,
    cfg: &SolverConfig,
    selection: TableSelection,
) -> i32 {
    let records: Vec<ReferenceRecord> = reference_records()
        .into_iter()
        .filter(|r| match selection {
            TableSelection::All => true,
            TableSelection::One(s) => r.source == s,
        })
        .collect();
    let solved = par_map(&records, |r| {
        let cfg = SolverConfig {
            n_iter: Some(cfg.n_iter.unwrap_or(r.n_iter_documented)),
            ..cfg.clone()
        };
        solve(r.mode, r.c(), &cfg)
    });
    let mut rows = Vec::with_capacity(records.len());
    let mut mismatches = Vec::new();
    let mut informational = 0;
    for (rec, res) in records.iter().zip(solved) {
        let res = match res {
            Ok(res) => res,
            Err(e) => return usage_error(io, &e),
        };
        let row = output_row(&res, Some(rec));
        if !rec.matches(res.lambda_sq) {
            if rec.source.is_gating() {
                mismatches.push((rec.clone(), res.lambda_sq));
            } else {
                informational += 1;
            }
        }
        rows.push(row);
    }
    if let Some(code) = emit(io, format, &rows, false) {
        return code;
    }
    let gating = records.iter().filter(|r| r.source.is_gating()).count();
    io.note(format_args!(
        "tables: {}/{} gating rows match at printed precision",
        gating - mismatches.len(),
        gating
    ));
    if informational > 0 {
        io.note(format_args!(
            "tables: {informational} non-gating table4 row(s) differ"
        ));
    }
    if mismatches.is_empty() {
        return EXIT_OK;
    }
    for (rec, value) in &mismatches {
        let (m, second) = rec.printed_label();
        let _ = writeln!(
            io.err,
            "mismatch: {} ({m},{second}) c = {}: reference {}, computed {}",
            rec.source,
            render_complex(rec.c_value),
            render_complex(rec.lambda_sq_ref),
            render_complex(*value)
        );
    }
    EXIT_MISMATCH
}

fn cmd_verify(
    io: &mut Io<'_>,
    format: Format,
    cfg: &SolverConfig,
    a: &SweepArgs,
    truncation: Option<usize>,
) -> i32 {
    if let Err(e) = ModeIndex::new(a.m, a.l_max) {
        return usage_error(io, &e);
    }
    let (m, l_max) = (a.m as u32, a.l_max as u32);
    let count = (l_max - m + 1) as usize;
    let truncation = truncation.unwrap_or_else(|| default_truncation(count, a.c));
    let oracle = match oracle_spectrum(m, a.c, count, truncation) {
        Ok(o) => o,
        Err(e) => return usage_error(io, &e),
    };
    let results = match solve_spectrum(m, l_max, a.c, cfg) {
        Ok(r) => r,
        Err(e) => return usage_error(io, &e),
    };
    let mut rows = Vec::with_capacity(count);
    let (mut nonconverged, mut disagree, mut unstable) = (0, 0, 0);
    for r in results {
        let res = match r {
            Ok(res) => res,
            Err(e) => return usage_error(io, &e),
        };
        let entry = oracle.get(res.mode.l()).expect("oracle covers l = m ..= l_max");
        let deviation = (res.lambda_sq - entry.lambda_sq).norm() / (1.0 + res.lambda_sq.norm());
        if res.status != Status::Converged {
            nonconverged += 1;
        }
        if !entry.is_stable() {
            unstable += 1;
        }
        // NaN counts as disagreement.
        if deviation.is_nan() || deviation >= VERIFY_TOL {
            disagree += 1;
        }
        rows.push(VerifyRow {
            m,
            l: res.mode.l(),
            c: a.c.into(),
            lambda_aim: res.lambda_sq.into(),
            lambda_oracle: entry.lambda_sq.into(),
            deviation,
            aim_status: res.status.as_str().to_string(),
            oracle_drift: entry.drift,
            oracle_stable: entry.is_stable(),
            truncation,
        });
    }
    if let Some(code) = emit(io, format, &rows, false) {
        return code;
    }
    if unstable > 0 {
        io.note(format_args!(
            "verify: oracle truncation unstable for {unstable} mode(s) at R = {truncation}; raise --truncation"
        ));
    }
    if nonconverged > 0 {
        io.note(format_args!("verify: AIM did not converge for {nonconverged} mode(s)"));
    }
    if disagree == 0 {
        io.note(format_args!("verify: {count}/{count} modes agree"));
        EXIT_OK
    } else {
        io.note(format_args!(
            "verify: {disagree}/{count} mode(s) differ by more than {VERIFY_TOL:e} (1 + |Λ|)"
        ));
        if nonconverged > 0 {
            EXIT_NONCONVERGENCE
        } else {
            EXIT_MISMATCH
        }
    }
}
