//! Real and complex sample types.

use num_complex::Complex64;
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// Element type of grid functions and kernels.
///
/// Implemented for `f64` (the default kind) and `Complex64`, which only the
/// constant-coefficient path needs.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + Mul<f64, Output = Self>
    + 'static
{
    const IS_COMPLEX: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_real(x: f64) -> Self;
    fn modulus(self) -> f64;
    fn is_finite(self) -> bool;
    fn to_complex(self) -> Complex64;
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn to_complex(self) -> Complex64 {
        self
    }
}

/// Solves the dense system `m · x = rhs` in place by Gaussian elimination
/// with partial pivoting. Returns the smallest pivot modulus on success.
pub(crate) fn solve_dense<S: Scalar>(m: &mut [Vec<S>], rhs: &mut [S]) -> Result<f64, usize> {
    let n = rhs.len();
    let mut min_pivot = f64::INFINITY;
    for col in 0..n {
        let (piv, mag) = (col..n)
            .map(|r| (r, m[r][col].modulus()))
            .fold((col, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if mag == 0.0 || !mag.is_finite() {
            return Err(col);
        }
        min_pivot = min_pivot.min(mag);
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f == S::zero() {
                continue;
            }
            for c in col..n {
                let v = m[col][c];
                m[r][c] = m[r][c] - f * v;
            }
            let v = rhs[col];
            rhs[r] = rhs[r] - f * v;
        }
    }
    for col in (0..n).rev() {
        let mut acc = rhs[col];
        for c in col + 1..n {
            acc = acc - m[col][c] * rhs[c];
        }
        rhs[col] = acc / m[col][col];
    }
    Ok(min_pivot)
}

/// Determinant by Gaussian elimination with partial pivoting.
pub(crate) fn determinant(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap_or(col);
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    det
}
