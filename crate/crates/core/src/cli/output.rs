//! Output rows and their CSV and JSON renderings.

use std::io::{self, Write};

use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// A complex number as it appears in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cx {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for Cx {
    fn from(z: Complex64) -> Self {
        Cx { re: z.re, im: z.im }
    }
}

/// Comparison against a published value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviation {
    pub source: String,
    pub lambda_ref: Cx,
    pub abs_deviation: f64,
    pub rel_deviation: f64,
    pub printed_match: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputRow {
    pub m: u32,
    pub l: u32,
    pub c: Cx,
    pub lambda_sq: Cx,
    pub residual: f64,
    pub n_iter_used: usize,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<Deviation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergeRow {
    pub n: usize,
    pub lambda_sq: Cx,
    /// `|Λ(n) − Λ(n_max)|`.
    pub deviation: f64,
    pub residual: f64,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyRow {
    pub m: u32,
    pub l: u32,
    pub c: Cx,
    pub lambda_aim: Cx,
    pub lambda_oracle: Cx,
    /// `|Λ_aim − Λ_oracle| / (1 + |Λ_aim|)`.
    pub deviation: f64,
    pub aim_status: String,
    pub oracle_drift: f64,
    pub oracle_stable: bool,
    pub truncation: usize,
}

/// Flat CSV view of a row type.
pub trait CsvRow {
    fn header(wide: bool) -> Vec<&'static str>;
    fn fields(&self, wide: bool) -> Vec<String>;
    /// Whether this row carries the optional columns.
    fn is_wide(&self) -> bool {
        false
    }
}

fn num(x: f64) -> String {
    super::literal::format_real(x)
}

impl CsvRow for OutputRow {
    fn header(wide: bool) -> Vec<&'static str> {
        let mut h = vec![
            "m", "l", "c_re", "c_im", "lambda_re", "lambda_im", "residual", "n_iter", "status",
        ];
        if wide {
            h.extend([
                "source",
                "ref_re",
                "ref_im",
                "abs_deviation",
                "rel_deviation",
                "printed_match",
            ]);
        }
        h
    }

    fn fields(&self, wide: bool) -> Vec<String> {
        let mut f = vec![
            self.m.to_string(),
            self.l.to_string(),
            num(self.c.re),
            num(self.c.im),
            num(self.lambda_sq.re),
            num(self.lambda_sq.im),
            num(self.residual),
            self.n_iter_used.to_string(),
            self.status.clone(),
        ];
        if wide {
            match &self.reference {
                Some(d) => f.extend([
                    d.source.clone(),
                    num(d.lambda_ref.re),
                    num(d.lambda_ref.im),
                    num(d.abs_deviation),
                    num(d.rel_deviation),
                    d.printed_match.to_string(),
                ]),
                None => f.extend(std::iter::repeat_n(String::new(), 6)),
            }
        }
        f
    }

    fn is_wide(&self) -> bool {
        self.reference.is_some()
    }
}

impl CsvRow for ConvergeRow {
    fn header(_: bool) -> Vec<&'static str> {
        vec!["n", "lambda_re", "lambda_im", "deviation", "residual", "status"]
    }

    fn fields(&self, _: bool) -> Vec<String> {
        vec![
            self.n.to_string(),
            num(self.lambda_sq.re),
            num(self.lambda_sq.im),
            num(self.deviation),
            num(self.residual),
            self.status.clone(),
        ]
    }
}

impl CsvRow for VerifyRow {
    fn header(_: bool) -> Vec<&'static str> {
        vec![
            "m",
            "l",
            "c_re",
            "c_im",
            "aim_re",
            "aim_im",
            "oracle_re",
            "oracle_im",
            "deviation",
            "aim_status",
            "oracle_drift",
            "oracle_stable",
            "truncation",
        ]
    }

    fn fields(&self, _: bool) -> Vec<String> {
        vec![
            self.m.to_string(),
            self.l.to_string(),
            num(self.c.re),
            num(self.c.im),
            num(self.lambda_aim.re),
            num(self.lambda_aim.im),
            num(self.lambda_oracle.re),
            num(self.lambda_oracle.im),
            num(self.deviation),
            self.aim_status.clone(),
            num(self.oracle_drift),
            self.oracle_stable.to_string(),
            self.truncation.to_string(),
        ]
    }
}

/// Writes `rows` as CSV with a header, or as a JSON array. A lone row with
/// `single` set is written as a bare JSON object.
pub fn write_rows<R: CsvRow + Serialize>(
    out: &mut dyn Write,
    format: Format,
    rows: &[R],
    single: bool,
) -> io::Result<()> {
    match format {
        Format::Csv => {
            let wide = rows.iter().any(|r| r.is_wide());
            writeln!(out, "{}", R::header(wide).join(","))?;
            for r in rows {
                writeln!(out, "{}", r.fields(wide).join(","))?;
            }
        }
        Format::Json => {
            let text = if single && rows.len() == 1 {
                serde_json::to_string_pretty(&rows[0])
            } else {
                serde_json::to_string_pretty(rows)
            }
            .map_err(io::Error::other)?;
            writeln!(out, "{text}")?;
        }
    }
    Ok(())
}
