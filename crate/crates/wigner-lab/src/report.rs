//! Number formatting and file emission: every numeric value written to a CSV
//! or to report.json goes through `fmt_g`, which reproduces C's `%.12g`
//! (12 significant digits, scientific form when the decimal exponent is
//! below -4 or at least 12, trailing zeros stripped). All files are UTF-8
//! with LF line endings.

use crate::error::{Error, Result};
use serde_json::Value;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

const SIG: i32 = 12;

fn strip_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let t = s.trim_end_matches('0');
    t.trim_end_matches('.').to_string()
}

/// C `%.12g` rendering of a double.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // {:.11e} rounds to 12 significant digits and reports the post-rounding
    // exponent, which is what %g branches on
    let sci = format!("{:.*e}", (SIG - 1) as usize, x);
    let (mant, exp) = sci.split_once('e').expect("exponential form");
    let e: i32 = exp.parse().expect("exponent");
    if e < -4 || e >= SIG {
        let mant = strip_zeros(mant);
        let sign = if e < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", e.abs())
    } else {
        let prec = (SIG - 1 - e).max(0) as usize;
        strip_zeros(&format!("{x:.prec$}"))
    }
}

/// Write a CSV file: fixed header line, rows of pre-formatted cells, LF only.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::with_capacity(rows.len() * 32 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    let ncols = header.split(',').count();
    for row in rows {
        if row.len() != ncols {
            return Err(Error::InvalidParameter(format!(
                "CSV row has {} cells, header has {ncols}",
                row.len()
            )));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Serialize a JSON value with deterministic key order (serde_json maps are
/// sorted) and `%.12g` floats. Integers print as integers.
pub fn json_to_string(v: &Value) -> String {
    let mut s = String::new();
    write_value(&mut s, v, 0);
    s
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                let x = n.as_f64().unwrap_or(f64::NAN);
                if x.is_finite() {
                    out.push_str(&fmt_g(x));
                } else {
                    out.push_str("null");
                }
            }
        }
        Value::String(s) => {
            let _ = write!(out, "{}", Value::String(s.clone()));
        }
        Value::Array(a) => {
            if a.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline_indent(out, indent + 1);
                write_value(out, item, indent + 1);
            }
            newline_indent(out, indent);
            out.push(']');
        }
        Value::Object(o) => {
            if o.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (i, (k, item)) in o.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline_indent(out, indent + 1);
                let _ = write!(out, "{}: ", Value::String(k.clone()));
                write_value(out, item, indent + 1);
            }
            newline_indent(out, indent);
            out.push('}');
        }
    }
}

fn newline_indent(out: &mut String, indent: usize) {
    out.push('\n');
    for _ in 0..indent {
        out.push_str("  ");
    }
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(json_to_string(v).as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn fmt_g_matches_c_reference() {
        // reference strings produced by printf("%.12g", x)
        let cases: &[(f64, &str)] = &[
            (0.0, "0"),
            (-0.0, "0"),
            (1.0, "1"),
            (-1.0, "-1"),
            (0.1, "0.1"),
            (1.5, "1.5"),
            (100.0, "100"),
            (1e11, "100000000000"),
            (1e12, "1e+12"),
            (1.23456789e12, "1.23456789e+12"),
            (0.0001, "0.0001"),
            (0.00001, "1e-05"),
            (1.0 / 3.0, "0.333333333333"),
            (2.0 / 3.0, "0.666666666667"),
            (std::f64::consts::PI, "3.14159265359"),
            (-2.5e-8, "-2.5e-08"),
            (9.99999999999951e-5, "0.0001"),
            (123456.789012, "123456.789012"),
            (5e-324, "4.94065645841e-324"),
            (1.7976931348623157e308, "1.79769313486e+308"),
        ];
        for &(x, want) in cases {
            assert_eq!(fmt_g(x), want, "x = {x:e}");
        }
    }

    #[test]
    fn fmt_g_nonfinite() {
        assert_eq!(fmt_g(f64::NAN), "nan");
        assert_eq!(fmt_g(f64::INFINITY), "inf");
        assert_eq!(fmt_g(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn fmt_g_roundtrip_preserves_12_digits() {
        let xs = [1.2345678901234567, 6.02214076e23, 2.2250738585072014e-308];
        for x in xs {
            let back: f64 = fmt_g(x).parse().unwrap();
            assert!((back - x).abs() <= x.abs() * 5e-12, "{x} -> {}", fmt_g(x));
        }
    }

    #[test]
    fn csv_emission() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(
            &path,
            "a,b",
            &[
                vec!["1".into(), fmt_g(0.5)],
                vec![fmt_g(1e-7), "x".into()],
            ],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "a,b\n1,0.5\n1e-07,x\n");
        assert!(write_csv(&path, "a,b", &[vec!["1".into()]]).is_err());
    }

    #[test]
    fn json_deterministic_and_g_formatted() {
        let v = json!({"z": 0.00001, "a": [1, 2.5], "s": "hi", "b": true});
        let s = json_to_string(&v);
        // keys sorted, floats in %.12g form
        let ia = s.find("\"a\"").unwrap();
        let ib = s.find("\"b\"").unwrap();
        let iz = s.find("\"z\"").unwrap();
        assert!(ia < ib && ib < iz);
        assert!(s.contains("1e-05"));
        assert!(s.contains("2.5"));
        assert_eq!(s, json_to_string(&v));
    }
}
