//! Parsing of flag values and the one-line error type.

use crate::format::g17;
use num_complex::Complex64;
use volterra_greens::expr::{parse, Expression};
use volterra_greens::{coeff, Coefficient, GridSpec};

/// Failure reported to the user as `{code, message}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: String,
    pub message: String,
}

impl CliError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        CliError {
            code: code.into(),
            message: message.into(),
        }
    }
}

impl From<volterra_greens::Error> for CliError {
    fn from(e: volterra_greens::Error) -> Self {
        CliError::new(e.code(), e.to_string())
    }
}

/// Splits `"e1;e2;..."` into non-empty expression sources.
pub fn parse_ops(src: &str, flag: &str) -> Result<Vec<String>, CliError> {
    let parts: Vec<String> = src.split(';').map(|s| s.trim().to_string()).collect();
    if let Some(k) = parts.iter().position(|s| s.is_empty()) {
        return Err(CliError::new(
            "invalid_argument",
            format!("{flag}: entry {k} is empty"),
        ));
    }
    Ok(parts)
}

fn real(s: &str, flag: &str) -> Result<f64, CliError> {
    let t = s.trim().replace('−', "-");
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::new(
            "invalid_argument",
            format!("{flag}: `{}` is not a finite number", s.trim()),
        )),
    }
}

/// Comma-separated reals.
pub fn parse_reals(src: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    src.split(',').map(|s| real(s, flag)).collect()
}

/// `"x,y;x,y;..."`.
pub fn parse_pairs(src: &str) -> Result<Vec<(f64, f64)>, CliError> {
    src.split(';')
        .map(|pair| {
            let v = parse_reals(pair, "--eval-at")?;
            match v.as_slice() {
                [x, y] => Ok((*x, *y)),
                _ => Err(CliError::new(
                    "invalid_argument",
                    format!("--eval-at: `{}` is not an `x,y` pair", pair.trim()),
                )),
            }
        })
        .collect()
}

/// One complex literal: `2`, `-1.5`, `i`, `-i`, `3i`, `1+2i`, `0.5-1e-3i`.
fn complex_literal(s: &str) -> Result<Complex64, CliError> {
    let t: String = s.trim().replace('−', "-").chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || CliError::new("invalid_argument", format!("--alphas: `{}` is not a complex number", s.trim()));
    let Some(body) = t.strip_suffix('i') else {
        return real(&t, "--alphas").map(|v| Complex64::new(v, 0.0));
    };
    // split before the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("", body),
    };
    let re = if re.is_empty() { 0.0 } else { real(re, "--alphas").map_err(|_| bad())? };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => real(v, "--alphas").map_err(|_| bad())?,
    };
    Ok(Complex64::new(re, im))
}

pub fn parse_alphas(src: &str) -> Result<Vec<Complex64>, CliError> {
    src.split(',').map(complex_literal).collect()
}

/// Index of the node at `x`; the value must sit on the grid.
pub fn snap(grid: &GridSpec, x: f64) -> Result<usize, CliError> {
    grid.snap(x, 1e-9).ok_or_else(|| {
        CliError::new(
            "off_grid",
            format!(
                "x = {} is not a node of the grid on [{}, {}] with {} intervals",
                g17(x),
                g17(grid.a()),
                g17(grid.b()),
                grid.n_intervals()
            ),
        )
    })
}

/// Parsed expressions, checked for domain errors on every grid node.
pub struct Coefficients {
    exprs: Vec<Expression>,
}

impl Coefficients {
    pub fn compile(sources: &[String], grid: &GridSpec, flag: &str) -> Result<Self, CliError> {
        let mut exprs = Vec::with_capacity(sources.len());
        for (k, src) in sources.iter().enumerate() {
            let what = if sources.len() > 1 { format!("{flag} entry {k}") } else { flag.to_string() };
            let e = parse(src).map_err(|e| CliError::new("parse_error", format!("{what}: {e}")))?;
            for &x in grid.nodes() {
                e.eval(x)
                    .map_err(|err| CliError::new("domain_error", format!("{what} at x = {}: {err}", g17(x))))?;
            }
            exprs.push(e);
        }
        Ok(Coefficients { exprs })
    }

    pub fn sample(&self, k: usize, grid: &GridSpec) -> Vec<f64> {
        grid.nodes().iter().map(|&x| self.exprs[k].eval(x).unwrap_or(f64::NAN)).collect()
    }

    /// Closures for the library; off-grid domain errors surface as NaN,
    /// which the library reports as a non-finite coefficient.
    pub fn into_coeffs(self) -> Vec<Coefficient> {
        self.exprs
            .into_iter()
            .map(|e| coeff(move |x| e.eval(x).unwrap_or(f64::NAN)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        let c = |re, im| Complex64::new(re, im);
        assert_eq!(complex_literal("2").unwrap(), c(2.0, 0.0));
        assert_eq!(complex_literal("-1").unwrap(), c(-1.0, 0.0));
        assert_eq!(complex_literal("i").unwrap(), c(0.0, 1.0));
        assert_eq!(complex_literal("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(complex_literal("3i").unwrap(), c(0.0, 3.0));
        assert_eq!(complex_literal("1+2i").unwrap(), c(1.0, 2.0));
        assert_eq!(complex_literal(" 0.5 - 1e-3i").unwrap(), c(0.5, -1e-3));
        assert_eq!(complex_literal("1e-2-i").unwrap(), c(1e-2, -1.0));
        assert!(complex_literal("abc").is_err());
        assert!(complex_literal("1+zi").is_err());
    }

    #[test]
    fn pairs_and_lists() {
        assert_eq!(parse_pairs("1,0; 0.5,0.25").unwrap(), vec![(1.0, 0.0), (0.5, 0.25)]);
        assert!(parse_pairs("1").is_err());
        assert_eq!(parse_reals("1, -2", "--ic").unwrap(), vec![1.0, -2.0]);
        assert!(parse_reals("1,,2", "--ic").is_err());
        assert!(parse_ops("x;;1", "--op").is_err());
    }
}
