//! Text renderings of results. Every number is printed with at most six
//! significant digits so reruns are byte-identical and diffs stay readable.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::eval::{AccuracyCurve, TopomapRow};

/// `%.6g`-style formatting without trailing zeros.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let s = format!("{:.*}", (5 - exp).max(0) as usize, v);
        trim_zeros(&s).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `v` rounded to six significant digits.
pub fn round_sig(v: f64) -> f64 {
    if v.is_finite() {
        fmt_sig(v).parse().expect("formatted float parses")
    } else {
        v
    }
}

fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let r = round_sig(n.as_f64().expect("f64 number"));
            if let Some(num) = serde_json::Number::from_f64(r) {
                *n = num;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to six significant digits.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::InvalidData(e.to_string()))?;
    round_json(&mut v);
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::InvalidData(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn curve_csv(curve: &AccuracyCurve) -> String {
    let mut s = String::from("window_end_ms,mean_acc,std_acc,n\n");
    for p in &curve.points {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fmt_sig(p.window_end_ms),
            fmt_sig(p.mean_accuracy),
            fmt_sig(p.std_accuracy),
            p.n
        );
    }
    s
}

pub fn topomap_csv(rows: &[TopomapRow]) -> String {
    let mut s = String::from("channel,x,y,time_ms,value_uv\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.channel,
            fmt_sig(r.x as f64),
            fmt_sig(r.y as f64),
            fmt_sig(r.time_ms),
            fmt_sig(r.value_uv)
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(0.94), "0.94");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(-2000.0), "-2000");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_sig(762.123456), "762.123");
        assert_eq!(fmt_sig(999999.5), "1e6");
        assert_eq!(fmt_sig(123456789.0), "1.23457e8");
        assert_eq!(fmt_sig(0.000012345678), "1.23457e-5");
        assert_eq!(fmt_sig(0.0001), "0.0001");
    }

    #[test]
    fn json_floats_are_rounded() {
        #[derive(Serialize)]
        struct S {
            a: f64,
            b: Vec<f64>,
            n: usize,
        }
        let s = to_json(&S {
            a: 1.0 / 3.0,
            b: vec![2.0 / 3.0],
            n: 7,
        })
        .unwrap();
        assert!(s.contains("0.333333") && s.contains("0.666667") && s.contains("7"));
        assert!(!s.contains("0.3333333"));
    }
}
