//! Complex literals: `a`, `ai`, `a+bi`, `a-bi`, with optional exponents.

use num_complex::Complex64;
use thiserror::Error;

pub const GRAMMAR: &str = "a, ai, a+bi or a-bi (decimal or scientific notation)";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid complex literal {literal:?}: expected {GRAMMAR}")]
pub struct LiteralError {
    pub literal: String,
}

fn number(text: &str, literal: &str) -> Result<f64, LiteralError> {
    let bad = || LiteralError {
        literal: literal.to_string(),
    };
    // `f64::from_str` also takes "inf" and "nan"; only plain numerals are allowed here.
    let plain = !text.is_empty()
        && text
            .chars()
            .all(|ch| ch.is_ascii_digit() || matches!(ch, '+' | '-' | '.' | 'e' | 'E'));
    if !plain {
        return Err(bad());
    }
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(bad)
}

/// Index of the sign that separates real and imaginary parts, if any.
fn split_point(body: &str) -> Option<usize> {
    let bytes = body.as_bytes();
    (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'))
}

pub fn parse_complex(literal: &str) -> Result<Complex64, LiteralError> {
    let s = literal.trim();
    match s.strip_suffix('i') {
        None => Ok(Complex64::new(number(s, literal)?, 0.0)),
        Some(body) => match split_point(body) {
            Some(k) => Ok(Complex64::new(
                number(&body[..k], literal)?,
                number(&body[k..], literal)?,
            )),
            None => Ok(Complex64::new(0.0, number(body, literal)?)),
        },
    }
}

/// Shortest round-trip text, in scientific notation outside `[1e-5, 1e16)`.
pub fn format_real(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Shortest text that parses back to exactly `z`.
pub fn render_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        return format_real(z.re);
    }
    if z.re == 0.0 {
        return format!("{}i", format_real(z.im));
    }
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}i", format_real(z.re), sign, format_real(z.im.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn accepted_forms() {
        assert_eq!(parse_complex("10").unwrap(), z(10.0, 0.0));
        assert_eq!(parse_complex("10i").unwrap(), z(0.0, 10.0));
        assert_eq!(parse_complex("-2.5i").unwrap(), z(0.0, -2.5));
        assert_eq!(parse_complex("1+2i").unwrap(), z(1.0, 2.0));
        assert_eq!(parse_complex("-1-2i").unwrap(), z(-1.0, -2.0));
        assert_eq!(parse_complex("1e-3+2.5E+2i").unwrap(), z(1e-3, 250.0));
        assert_eq!(parse_complex("-1e5-3e-2i").unwrap(), z(-1e5, -0.03));
        assert_eq!(parse_complex(" 4.51+11.07i ").unwrap(), z(4.51, 11.07));
        assert_eq!(
            parse_complex("2.535162563188484+10.371846133322299i").unwrap(),
            z(2.535162563188484, 10.371846133322299)
        );
    }

    #[test]
    fn rejected_forms() {
        for bad in ["", "i", "+i", "1+i", "1+2", "a+bi", "1+2j", "inf", "nan", "1e", "1+2ii", "--1", "1 + 2i"] {
            let err = parse_complex(bad).unwrap_err();
            assert!(err.to_string().contains("a+bi"), "{bad}");
        }
    }

    #[test]
    fn rendering() {
        assert_eq!(render_complex(z(10.0, 0.0)), "10");
        assert_eq!(render_complex(z(0.0, -10.0)), "-10i");
        assert_eq!(render_complex(z(1.5, -2.0)), "1.5-2i");
        assert_eq!(render_complex(z(1e-300, 1e300)), "1e-300+1e300i");
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![
            -1e6..1e6f64,
            any::<f64>().prop_filter("finite", |x| x.is_finite()),
            Just(0.0),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]

        #[test]
        fn render_then_parse_round_trips(re in finite(), im in finite()) {
            let v = z(re, im);
            let back = parse_complex(&render_complex(v)).unwrap();
            prop_assert_eq!(back, v);
        }

        #[test]
        fn every_written_form_parses(re in finite(), im in finite(), sci in any::<bool>()) {
            let text = |x: f64| if sci { format!("{x:e}") } else { format!("{x}") };
            let sep = if im.is_sign_negative() { "" } else { "+" };
            prop_assert_eq!(parse_complex(&text(re)).unwrap(), z(re, 0.0));
            prop_assert_eq!(parse_complex(&format!("{}i", text(im))).unwrap(), z(0.0, im));
            prop_assert_eq!(
                parse_complex(&format!("{}{}{}i", text(re), sep, text(im))).unwrap(),
                z(re, im)
            );
        }
    }
}
