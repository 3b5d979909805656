//! Machine-readable output. Reals are written in their shortest
//! round-trippable form; non-finite values become the strings `"inf"`,
//! `"-inf"` and `"nan"`.

use lastiter_core::{BoundReport, Precondition};
use serde::{Serialize, Serializer};

use crate::error::Result;

pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        ryu::Buffer::new().format_finite(x).to_owned()
    }
}

/// Inverse of [`fmt_num`].
pub fn parse_num(s: &str) -> Option<f64> {
    match s {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        _ => s.parse().ok(),
    }
}

pub fn ser_num<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_str(&fmt_num(*x))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PreconditionJson {
    pub name: &'static str,
    pub required: String,
    pub satisfied: bool,
}

impl From<&Precondition> for PreconditionJson {
    fn from(p: &Precondition) -> Self {
        Self {
            name: p.name,
            required: p.required.clone(),
            satisfied: p.satisfied,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundJson {
    pub regime: &'static str,
    #[serde(serialize_with = "ser_num")]
    pub value: f64,
    pub valid: bool,
    pub asymptotic: bool,
    pub preconditions: Vec<PreconditionJson>,
}

/// Regime name, or `"none"` for a report that is not valid.
pub fn regime_label(r: &BoundReport) -> &'static str {
    if r.valid {
        r.regime.name()
    } else {
        "none"
    }
}

impl BoundJson {
    pub fn new(r: &BoundReport) -> Self {
        Self {
            regime: r.regime.name(),
            value: r.value,
            valid: r.valid,
            asymptotic: r.asymptotic,
            preconditions: r.preconditions.iter().map(Into::into).collect(),
        }
    }

    /// Like [`BoundJson::new`], naming an invalid report `"none"`.
    pub fn best(r: &BoundReport) -> Self {
        Self {
            regime: regime_label(r),
            ..Self::new(r)
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn to_csv(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for &x in &[
            0.1,
            1.0 / 3.0,
            1e-300,
            123456789.125,
            -2.5e17,
            f64::MIN_POSITIVE,
            f64::MAX,
        ] {
            let s = fmt_num(x);
            assert_eq!(parse_num(&s), Some(x), "{s}");
            let json = serde_json::to_string(&BoundJson {
                regime: "x",
                value: x,
                valid: true,
                asymptotic: false,
                preconditions: Vec::new(),
            })
            .unwrap();
            let v: serde_json::Value = serde_json::from_str(&json).unwrap();
            assert_eq!(v["value"].as_f64(), Some(x));
        }
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        assert_eq!(parse_num("inf"), Some(f64::INFINITY));
        assert!(parse_num("nan").unwrap().is_nan());
    }

    #[test]
    fn infinity_is_a_string_in_json() {
        let b = BoundJson::best(&BoundReport::none());
        let v: serde_json::Value = serde_json::from_str(&to_json(&b).unwrap()).unwrap();
        assert_eq!(v["value"], "inf");
        assert_eq!(v["regime"], "none");
    }

    #[test]
    fn csv_has_header_and_rows() {
        let s = to_csv(&["a".into(), "b".into()], &[vec!["1".into(), "inf".into()]]).unwrap();
        assert_eq!(s, "a,b\n1,inf\n");
    }
}
