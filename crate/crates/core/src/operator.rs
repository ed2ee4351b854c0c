//! Monic linear differential operators `∂ⁿ + Σ P_k(x) ∂ᵏ`.

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use std::fmt;
use std::sync::Arc;

/// A real coefficient function of `x`. Must be pure.
pub type Coefficient = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Wraps a closure as a [`Coefficient`].
pub fn coeff(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Coefficient {
    Arc::new(f)
}

/// `∂ⁿ + P_{n-1}(x) ∂ⁿ⁻¹ + … + P_0(x)`; `coeffs[k]` multiplies the k-th derivative.
#[derive(Clone)]
pub struct DifferentialOperator {
    coeffs: Vec<Coefficient>,
}

impl fmt::Debug for DifferentialOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DifferentialOperator")
            .field("degree", &self.degree())
            .finish_non_exhaustive()
    }
}

impl DifferentialOperator {
    pub fn new(coeffs: Vec<Coefficient>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::ZeroDegree);
        }
        Ok(Self { coeffs })
    }

    /// Operator with constant coefficients `[P_0, …, P_{n-1}]`.
    pub fn constant(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&c| coeff(move |_| c)).collect())
    }

    /// The pure derivative `∂ⁿ`.
    pub fn pure_derivative(degree: usize) -> Result<Self> {
        Self::constant(&vec![0.0; degree])
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Coefficient] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> &Coefficient {
        &self.coeffs[k]
    }

    /// The operator seen through the reflection `t = a + b - x`.
    ///
    /// Each derivative picks up a factor `-1`, so after normalising the
    /// leading term `P_k` becomes `(-1)^(n-k) P_k(a + b - t)`.
    pub fn reflected(&self, a: f64, b: f64) -> Self {
        let n = self.degree();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let p = Arc::clone(p);
                let sign = if (n - k) % 2 == 0 { 1.0 } else { -1.0 };
                coeff(move |t| sign * p(a + b - t))
            })
            .collect();
        Self { coeffs }
    }
}

/// Initial data `∂ⁱ y(anchor) = values[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialConditions {
    pub values: Vec<f64>,
    pub anchor: f64,
}

impl InitialConditions {
    pub fn new(values: Vec<f64>, anchor: f64) -> Self {
        Self { values, anchor }
    }

    /// All-zero data of the given length.
    pub fn zero(degree: usize, anchor: f64) -> Self {
        Self::new(vec![0.0; degree], anchor)
    }

    /// `∂ⁱ y(anchor) = δ_{r,i}`.
    pub fn unit(degree: usize, r: usize, anchor: f64) -> Self {
        let mut values = vec![0.0; degree];
        values[r] = 1.0;
        Self::new(values, anchor)
    }
}

/// Samples `P_k` on the grid nodes.
pub fn sample_coeff(op: &DifferentialOperator, k: usize, grid: &GridSpec) -> Result<GridFunction> {
    if k >= op.degree() {
        return Err(Error::IndexOutOfRange {
            index: k,
            limit: op.degree() - 1,
        });
    }
    let p = op.coeff(k);
    let values: Vec<f64> = grid.nodes().iter().map(|&x| p(x)).collect();
    if let Some(node) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteCoefficient {
            k,
            node,
            x: grid.node(node),
        });
    }
    GridFunction::new(grid, values)
}

/// Samples every coefficient; `result[k][i] = P_k(x_i)`.
pub(crate) fn sample_all(op: &DifferentialOperator, grid: &GridSpec) -> Result<Vec<Vec<f64>>> {
    (0..op.degree())
        .map(|k| sample_coeff(op, k, grid).map(GridFunction::into_values))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn airy() -> DifferentialOperator {
        DifferentialOperator::new(vec![coeff(|x| -x), coeff(|_| 0.0)]).unwrap()
    }

    #[test]
    fn sample_airy_coefficients() {
        let g = make_grid(0.0, 1.0, 2).unwrap();
        assert_eq!(sample_coeff(&airy(), 0, &g).unwrap().values(), &[0.0, -0.5, -1.0]);
        assert_eq!(sample_coeff(&airy(), 1, &g).unwrap().values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn sample_reports_non_finite_node() {
        let g = make_grid(0.0, 1.0, 4).unwrap();
        let op = DifferentialOperator::new(vec![coeff(|x| 1.0 / x)]).unwrap();
        assert_eq!(
            sample_coeff(&op, 0, &g).unwrap_err(),
            Error::NonFiniteCoefficient { k: 0, node: 0, x: 0.0 }
        );
    }

    #[test]
    fn sample_index_out_of_range() {
        let g = make_grid(0.0, 1.0, 4).unwrap();
        assert!(matches!(
            sample_coeff(&airy(), 2, &g),
            Err(Error::IndexOutOfRange { index: 2, .. })
        ));
    }

    #[test]
    fn zero_degree_rejected() {
        assert_eq!(DifferentialOperator::new(vec![]).unwrap_err(), Error::ZeroDegree);
    }

    #[test]
    fn sampling_is_pointwise() {
        let g = make_grid(-1.0, 2.0, 30).unwrap();
        let op = DifferentialOperator::new(vec![coeff(|x| (x * 1.3).sin() + x * x)]).unwrap();
        let s = sample_coeff(&op, 0, &g).unwrap();
        for (v, &x) in s.values().iter().zip(g.nodes()) {
            assert_eq!(*v, (x * 1.3).sin() + x * x);
        }
    }

    #[test]
    fn reflection_signs() {
        // ∂² + 3x∂ + 1 under t = 1 - x becomes ∂² - 3(1 - t)∂ + 1
        let op = DifferentialOperator::new(vec![coeff(|_| 1.0), coeff(|x| 3.0 * x)]).unwrap();
        let r = op.reflected(0.0, 1.0);
        assert_eq!(r.coeff(0)(0.25), 1.0);
        assert_eq!(r.coeff(1)(0.25), -3.0 * 0.75);
    }
}
