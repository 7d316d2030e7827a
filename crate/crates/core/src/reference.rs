//! Published eigenvalue tables and printed-precision comparison.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::aim::ModeIndex;
use crate::error::{Error, Result};

/// The embedded reference file.
pub const REFERENCE_DATA: &str = include_str!("../data/reference_tables.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Table1,
    Table2,
    Table3,
    Table4,
    Table5,
}

impl Source {
    pub const ALL: [Source; 5] = [
        Source::Table1,
        Source::Table2,
        Source::Table3,
        Source::Table4,
        Source::Table5,
    ];

    pub fn number(&self) -> u8 {
        match self {
            Source::Table1 => 1,
            Source::Table2 => 2,
            Source::Table3 => 3,
            Source::Table4 => 4,
            Source::Table5 => 5,
        }
    }

    /// Table 4 is reported but never decides pass/fail.
    pub fn is_gating(&self) -> bool {
        *self != Source::Table4
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "table{}", self.number())
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "table1" | "1" => Ok(Source::Table1),
            "table2" | "2" => Ok(Source::Table2),
            "table3" | "3" => Ok(Source::Table3),
            "table4" | "4" => Ok(Source::Table4),
            "table5" | "5" => Ok(Source::Table5),
            other => Err(Error::InvalidConfig(format!("unknown table {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRecord {
    pub source: Source,
    pub mode: ModeIndex,
    /// `c`, or `c²` when `is_c_squared` is set.
    pub c_value: Complex64,
    pub is_c_squared: bool,
    pub lambda_sq_ref: Complex64,
    pub printed_digits: u32,
    pub n_iter_documented: usize,
    /// 1-based line in the data file.
    pub line: usize,
}

impl ReferenceRecord {
    /// The size parameter; for `c²` rows the principal square root, which is
    /// enough since the eigenvalues depend on `c²` only.
    pub fn c(&self) -> Complex64 {
        if self.is_c_squared {
            self.c_value.sqrt()
        } else {
            self.c_value
        }
    }

    /// Label as printed in the source: `(m, ℓ − m)` for table 5 and
    /// `(m, ℓ)` elsewhere.
    pub fn printed_label(&self) -> (u32, u32) {
        match self.source {
            Source::Table5 => (self.mode.m(), self.mode.nodes()),
            _ => (self.mode.m(), self.mode.l()),
        }
    }

    /// Rounded comparison of both parts at the printed precision.
    pub fn matches(&self, computed: Complex64) -> bool {
        printed_match(computed.re, self.lambda_sq_ref.re, self.printed_digits)
            && printed_match(computed.im, self.lambda_sq_ref.im, self.printed_digits)
    }
}

/// Decimal places shown when `reference` is printed with `digits`
/// significant figures. Zero is printed as a bare `0`.
pub fn printed_decimals(reference: f64, digits: u32) -> i32 {
    if reference == 0.0 {
        return 0;
    }
    digits as i32 - 1 - reference.abs().log10().floor() as i32
}

/// `true` when `computed` rounds to `reference` at the reference's printed
/// precision.
pub fn printed_match(computed: f64, reference: f64, digits: u32) -> bool {
    let decimals = printed_decimals(reference, digits);
    let scale = 10f64.powi(decimals);
    (computed * scale).round() == (reference * scale).round()
}

fn parse_f64(field: &str, line: usize, name: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("line {line}: bad {name} {field:?}")))
}

fn parse_int(field: &str, line: usize, name: &str) -> Result<i64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("line {line}: bad {name} {field:?}")))
}

/// Parses reference data: `#` comments, blank lines, and rows of
/// `source,m,l,c_re,c_im,is_c_squared,lambda_re,lambda_im,digits,n_iter`.
pub fn parse_reference(text: &str) -> Result<Vec<ReferenceRecord>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = row.split(',').collect();
        if f.len() != 10 {
            return Err(Error::InvalidConfig(format!(
                "line {line}: expected 10 fields, found {}",
                f.len()
            )));
        }
        let source: Source = f[0].parse()?;
        let mode = ModeIndex::new(parse_int(f[1], line, "m")?, parse_int(f[2], line, "l")?)?;
        let c_value = Complex64::new(parse_f64(f[3], line, "c_re")?, parse_f64(f[4], line, "c_im")?);
        let is_c_squared = match parse_int(f[5], line, "is_c_squared")? {
            0 => false,
            1 => true,
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "line {line}: is_c_squared must be 0 or 1"
                )))
            }
        };
        let lambda_sq_ref = Complex64::new(
            parse_f64(f[6], line, "lambda_re")?,
            parse_f64(f[7], line, "lambda_im")?,
        );
        let printed_digits = parse_int(f[8], line, "digits")?;
        let n_iter = parse_int(f[9], line, "n_iter")?;
        if !(1..=17).contains(&printed_digits) || n_iter < 1 {
            return Err(Error::InvalidConfig(format!(
                "line {line}: digits or n_iter out of range"
            )));
        }
        out.push(ReferenceRecord {
            source,
            mode,
            c_value,
            is_c_squared,
            lambda_sq_ref,
            printed_digits: printed_digits as u32,
            n_iter_documented: n_iter as usize,
            line,
        });
    }
    Ok(out)
}

/// All embedded records.
pub fn reference_records() -> Vec<ReferenceRecord> {
    parse_reference(REFERENCE_DATA).expect("embedded reference data is well formed")
}

/// Embedded records of one table.
pub fn table(source: Source) -> Vec<ReferenceRecord> {
    reference_records()
        .into_iter()
        .filter(|r| r.source == source)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_counts() {
        let counts: Vec<usize> = Source::ALL.iter().map(|&s| table(s).len()).collect();
        assert_eq!(counts, vec![9, 18, 18, 7, 28]);
    }

    #[test]
    fn printed_digits_match_table_text() {
        for r in reference_records() {
            let want = if r.source == Source::Table1 { 6 } else { 7 };
            assert_eq!(r.printed_digits, want, "line {}", r.line);
            let n = if r.source == Source::Table3 { 100 } else { 45 };
            assert_eq!(r.n_iter_documented, n, "line {}", r.line);
        }
    }

    #[test]
    fn squared_rows_take_principal_root() {
        let t1 = table(Source::Table1);
        let first = &t1[0];
        assert!(first.is_c_squared);
        assert_eq!(first.c(), Complex64::new(0.0, 1.0));
        assert_eq!(first.mode, ModeIndex::new(4, 11).unwrap());
    }

    #[test]
    fn table5_labels_are_offsets() {
        let last = table(Source::Table5).pop().unwrap();
        assert_eq!(last.mode, ModeIndex::new(6, 6).unwrap());
        assert_eq!(last.printed_label(), (6, 0));
    }

    #[test]
    fn printed_precision_rounding() {
        assert_eq!(printed_decimals(131.560, 6), 3);
        assert_eq!(printed_decimals(-81.02794, 7), 5);
        assert_eq!(printed_decimals(2.156124, 7), 6);
        assert!(printed_match(9.2283043, 9.228304, 7));
        assert!(!printed_match(9.2283056, 9.228304, 7));
        assert!(printed_match(131.5604, 131.560, 6));
        assert!(printed_match(0.0, 0.0, 7));
        assert!(printed_match(-81.027938, -81.02794, 7));
    }

    #[test]
    fn parser_rejects_malformed_rows() {
        assert!(parse_reference("table2,0,0,10,0,0,9.2,0,7").is_err());
        assert!(parse_reference("table9,0,0,10,0,0,9.2,0,7,45").is_err());
        assert!(parse_reference("table2,1,0,10,0,0,9.2,0,7,45").is_err());
        assert!(parse_reference("table2,0,0,10,0,2,9.2,0,7,45").is_err());
        let ok = parse_reference("# c\n\ntable2,0,0,10,0,0,9.2,0,7,45\n").unwrap();
        assert_eq!(ok.len(), 1);
        assert_eq!(ok[0].line, 3);
    }
}
