//! Number formatting and the CSV / JSON emitters.

use num_complex::Complex64;
use serde_json::{Map, Number, Value};
use std::str::FromStr;

/// `printf("%.17g", v)`: 17 significant digits, trailing zeros removed.
pub fn g17(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{v:.16e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let e: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&e) {
        let sign = if e < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mant), e.abs())
    } else {
        trim_zeros(&format!("{v:.*}", (16 - e) as usize))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// JSON number carrying exactly the `%.17g` digits; non-finite becomes null.
pub fn num(v: f64) -> Value {
    if !v.is_finite() {
        return Value::Null;
    }
    Number::from_str(&g17(v)).map(Value::Number).unwrap_or(Value::Null)
}

pub fn complex(z: Complex64) -> Value {
    let mut m = Map::new();
    m.insert("re".into(), num(z.re));
    m.insert("im".into(), num(z.im));
    Value::Object(m)
}

/// A kernel or function sample, real or complex.
#[derive(Clone, Copy, Debug)]
pub enum Sample {
    Real(f64),
    Complex(Complex64),
}

impl Sample {
    pub fn json(self) -> Value {
        match self {
            Sample::Real(v) => num(v),
            Sample::Complex(z) => complex(z),
        }
    }

    pub fn csv_cells(self, complex_columns: bool) -> Vec<String> {
        match (self, complex_columns) {
            (Sample::Real(v), false) => vec![g17(v)],
            (Sample::Real(v), true) => vec![g17(v), "0".into()],
            (Sample::Complex(z), true) => vec![g17(z.re), g17(z.im)],
            (Sample::Complex(z), false) => vec![g17(z.re)],
        }
    }
}

/// One CSV table: a header row and data rows.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// What a command produces before it is rendered.
pub struct Output {
    pub params: Map<String, Value>,
    pub results: Map<String, Value>,
    pub table: Table,
}

pub fn render_json(command: &str, grid: Option<(f64, f64, usize)>, out: &Output) -> String {
    let mut top = Map::new();
    top.insert("command".into(), Value::String(command.into()));
    let grid = match grid {
        Some((a, b, n)) => {
            let mut g = Map::new();
            g.insert("a".into(), num(a));
            g.insert("b".into(), num(b));
            g.insert("n".into(), Value::from(n));
            Value::Object(g)
        }
        None => Value::Null,
    };
    top.insert("grid".into(), grid);
    top.insert("params".into(), Value::Object(out.params.clone()));
    top.insert("results".into(), Value::Object(out.results.clone()));
    let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("serialisable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g17() {
        assert_eq!(g17(1.0), "1");
        assert_eq!(g17(0.1), "0.10000000000000001");
        assert_eq!(g17(-2.5), "-2.5");
        assert_eq!(g17(1e-5), "1.0000000000000001e-05");
        assert_eq!(g17(1e-4), "0.0001");
        assert_eq!(g17(123456789.0), "123456789");
        assert_eq!(g17(1e17), "1e+17");
        assert_eq!(g17(1.5e300), "1.5000000000000001e+300");
        assert_eq!(g17(0.0), "0");
        assert_eq!(g17(std::f64::consts::PI), "3.1415926535897931");
    }

    #[test]
    fn json_numbers_keep_digits() {
        assert_eq!(num(0.1).to_string(), "0.10000000000000001");
        assert_eq!(num(f64::NAN), Value::Null);
    }
}
