//! Causal Green's functions `G(x, y) = θ(x - y) T(x, y)` and their
//! x-derivatives, with `θ(0) = 1`.
//!
//! `T` is assembled from the resolvent `R` of the operator's kernel:
//! `∂ⁱT = (x-y)^(n-i-1)/(n-i-1)! + ∫_y^x (x-z)^(n-i-1)/(n-i-1)! R(z, y) dz`
//! for `i < n` and `∂ⁿT = R`. Specialised constructions cover factored
//! operators, constant coefficients and the form `-∂² + v`.

use crate::error::{Error, Result};
use crate::grid::{cumulative_integral, kernel_apply, kernel_compose, GridFunction, GridSpec, TriangularKernel};
use crate::operator::{Coefficient, DifferentialOperator};
use crate::roots::{poly_roots, DEFAULT_ROOT_TOL};
use crate::scalar::Scalar;
use crate::volterra::{build_h, resolvent_series, SeriesOptions};
use num_complex::Complex64;

/// Truncation data of the series behind a Green's function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesStats {
    pub terms_used: usize,
    pub last_term_norm: f64,
}

/// Sampled causal Green's function with the x-derivatives that its
/// construction provides in closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct CausalGreens<S: Scalar = f64> {
    grid: GridSpec,
    degree: usize,
    // derivatives[k] = ∂ₓᵏ T
    derivatives: Vec<TriangularKernel<S>>,
    series: Option<SeriesStats>,
}

impl<S: Scalar> CausalGreens<S> {
    /// Wraps precomputed derivative samples `[T, ∂T, …]`.
    pub fn from_derivatives(degree: usize, derivatives: Vec<TriangularKernel<S>>) -> Result<Self> {
        if degree == 0 {
            return Err(Error::ZeroDegree);
        }
        let first = derivatives.first().ok_or(Error::LengthMismatch { expected: 1, got: 0 })?;
        let grid = first.grid().clone();
        if derivatives.iter().any(|d| *d.grid() != grid) {
            return Err(Error::GridMismatch);
        }
        if derivatives.len() > degree + 1 {
            return Err(Error::LengthMismatch {
                expected: degree + 1,
                got: derivatives.len(),
            });
        }
        Ok(Self {
            grid,
            degree,
            derivatives,
            series: None,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Samples of `T` on the lower triangle.
    pub fn kernel(&self) -> &TriangularKernel<S> {
        &self.derivatives[0]
    }

    /// Highest derivative order available.
    pub fn max_order(&self) -> usize {
        self.derivatives.len() - 1
    }

    pub fn series_stats(&self) -> Option<SeriesStats> {
        self.series
    }

    /// `G(x_i, x_j)`: `T(x_i, x_j)` when `i >= j`, else 0.
    pub fn eval(&self, i: usize, j: usize) -> Result<S> {
        let limit = self.grid.n_intervals();
        if let Some(index) = [i, j].into_iter().find(|&k| k > limit) {
            return Err(Error::IndexOutOfRange { index, limit });
        }
        Ok(if i >= j { self.kernel().get(i, j) } else { S::zero() })
    }

    /// `∂ₓ^order T`.
    pub fn derivative(&self, order: usize) -> Result<&TriangularKernel<S>> {
        if order > self.degree {
            return Err(Error::OrderOutOfRange {
                order,
                degree: self.degree,
            });
        }
        self.derivatives.get(order).ok_or(Error::DerivativeUnavailable {
            order,
            available: self.max_order(),
        })
    }

    fn map_kernels(&self, f: impl Fn(&TriangularKernel<S>) -> TriangularKernel<S>) -> Self {
        Self {
            grid: self.grid.clone(),
            degree: self.degree,
            derivatives: self.derivatives.iter().map(f).collect(),
            series: self.series,
        }
    }

    /// Multiplies every derivative by `c`.
    pub fn scale(&self, c: S) -> Self {
        self.map_kernels(|k| k.scale(c))
    }
}

impl CausalGreens<Complex64> {
    pub fn re(&self) -> CausalGreens<f64> {
        CausalGreens {
            grid: self.grid.clone(),
            degree: self.degree,
            derivatives: self.derivatives.iter().map(|k| k.re()).collect(),
            series: self.series,
        }
    }
}

impl CausalGreens<f64> {
    pub fn to_complex(&self) -> CausalGreens<Complex64> {
        CausalGreens {
            grid: self.grid.clone(),
            degree: self.degree,
            derivatives: self.derivatives.iter().map(|k| k.to_complex()).collect(),
            series: self.series,
        }
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `(x - y)^e / e!` with its continuation.
fn lag_kernel(grid: &GridSpec, e: usize) -> Result<TriangularKernel> {
    let c = 1.0 / factorial(e);
    TriangularKernel::from_analytic_fn(grid, move |x, y| (x - y).powi(e as i32) * c)
}

/// Assembles `T` and its derivatives from a resolvent of a degree-`n` operator.
pub fn greens_from_resolvent(degree: usize, r: &TriangularKernel) -> Result<CausalGreens> {
    if degree == 0 {
        return Err(Error::ZeroDegree);
    }
    let grid = r.grid();
    let r = r.without_lookahead();
    let mut derivatives = (0..degree)
        .map(|i| {
            let q = lag_kernel(grid, degree - i - 1)?;
            q.without_lookahead().add(&kernel_compose(&q, &r)?)
        })
        .collect::<Result<Vec<_>>>()?;
    derivatives.push(r);
    CausalGreens::from_derivatives(degree, derivatives)
}

/// Causal Green's function of `op` on `grid` from the resolvent series.
///
/// Fails with [`Error::NotConverged`] if the series has not met the
/// tolerance within the term budget. Debug builds cross-check the resolvent
/// against forward substitution.
pub fn build_greens(op: &DifferentialOperator, grid: &GridSpec, opts: &SeriesOptions) -> Result<CausalGreens> {
    let h = build_h(op, grid)?;
    let series = resolvent_series(&h, opts.tol, opts.max_terms)?;
    if !series.converged {
        return Err(Error::NotConverged {
            terms_used: series.terms_used,
            last_term_norm: series.last_term_norm,
        });
    }
    #[cfg(debug_assertions)]
    {
        let direct = crate::volterra::resolvent_direct(&h)?;
        let peak = series.term_norms.iter().fold(1.0f64, |m, &v| m.max(v));
        let diff = series.resolvent.max_abs_diff(&direct)?;
        let bound = 1e-8 * peak + 10.0 * series.last_term_norm;
        debug_assert!(diff <= bound, "series and direct resolvents differ by {diff:e}");
    }
    let mut g = greens_from_resolvent(op.degree(), &series.resolvent)?;
    g.series = Some(SeriesStats {
        terms_used: series.terms_used,
        last_term_norm: series.last_term_norm,
    });
    Ok(g)
}

/// `G(x_i, x_j)` with `θ(0) = 1`.
pub fn greens_eval<S: Scalar>(g: &CausalGreens<S>, x_index: usize, y_index: usize) -> Result<S> {
    g.eval(x_index, y_index)
}

/// Samples of `∂ₓ^order T`, for `0 <= order <= degree`.
pub fn t_derivative<S: Scalar>(g: &CausalGreens<S>, order: usize) -> Result<TriangularKernel<S>> {
    g.derivative(order).cloned()
}

/// `C(x, y) = ∫_y^x A(x, z) B(z, y) dz`, the Green's function of `O_B · O_A`
/// (the operator of `inner` applied last).
///
/// Derivatives of `C` up to the degree of `outer` are available when
/// `outer` provides them: `∂ⁱC = ∫ ∂ⁱA · B` for `i` below the degree `m` of
/// `A`, and `∂ᵐC = ∫ ∂ᵐA · B + B`.
pub fn compose<S: Scalar>(outer: &CausalGreens<S>, inner: &CausalGreens<S>) -> Result<CausalGreens<S>> {
    if outer.grid != inner.grid {
        return Err(Error::GridMismatch);
    }
    let m = outer.degree;
    let top = outer.max_order().min(m);
    let b = inner.kernel();
    let derivatives = (0..=top)
        .map(|i| {
            let c = kernel_compose(&outer.derivatives[i], b)?;
            if i == m {
                c.add(&b.without_lookahead())
            } else {
                Ok(c)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    CausalGreens::from_derivatives(m + inner.degree, derivatives)
}

fn sample_fn(p: &Coefficient, k: usize, grid: &GridSpec) -> Result<Vec<f64>> {
    let values: Vec<f64> = grid.nodes().iter().map(|&x| p(x)).collect();
    match values.iter().position(|v| !v.is_finite()) {
        Some(node) => Err(Error::NonFiniteCoefficient {
            k,
            node,
            x: grid.node(node),
        }),
        None => Ok(values),
    }
}

fn overflow(e: Error) -> Error {
    match e {
        Error::NonFiniteKernel { i, j } => Error::Overflow { i, j },
        e => e,
    }
}

/// Green's data of `∂ - p` from samples of `p`: `T = exp(A(x) - A(y))`
/// with `A` the cumulative antiderivative, and `∂T = p(x) T`.
fn first_order(p: &[f64], grid: &GridSpec) -> Result<CausalGreens> {
    let a = cumulative_integral(&GridFunction::new(grid, p.to_vec())?, 0)?.into_values();
    let t = TriangularKernel::from_index_fn(grid, |i, j| (a[i] - a[j]).exp()).map_err(overflow)?;
    let dt = t.scale_rows(p);
    CausalGreens::from_derivatives(1, vec![t, dt])
}

/// Green's function of `(∂ - p₁)(∂ - p₂)⋯(∂ - pₙ)`.
///
/// The factor kernels are nested so that `p₁` sits innermost (next to `y`)
/// and `pₙ` outermost. Derivatives of orders 0 and 1 are provided.
pub fn factored_greens(ps: &[Coefficient], grid: &GridSpec) -> Result<CausalGreens> {
    if ps.is_empty() {
        return Err(Error::EmptyFactorList);
    }
    let factors = ps
        .iter()
        .enumerate()
        .map(|(k, p)| first_order(&sample_fn(p, k, grid)?, grid))
        .collect::<Result<Vec<_>>>()?;
    let mut it = factors.into_iter();
    let first = it.next().expect("non-empty");
    it.try_fold(first, |acc, f| compose(&f, &acc))
}

/// Green's function of a constant-coefficient operator, real when the
/// coefficients are.
#[derive(Clone, Debug, PartialEq)]
pub enum ConstCoeffKernel {
    Real(CausalGreens<f64>),
    Complex(CausalGreens<Complex64>),
}

impl ConstCoeffKernel {
    pub fn as_real(&self) -> Option<&CausalGreens<f64>> {
        match self {
            ConstCoeffKernel::Real(g) => Some(g),
            ConstCoeffKernel::Complex(_) => None,
        }
    }

    pub fn as_complex(&self) -> Option<&CausalGreens<Complex64>> {
        match self {
            ConstCoeffKernel::Real(_) => None,
            ConstCoeffKernel::Complex(g) => Some(g),
        }
    }

    pub fn to_complex(&self) -> CausalGreens<Complex64> {
        match self {
            ConstCoeffKernel::Real(g) => g.to_complex(),
            ConstCoeffKernel::Complex(g) => g.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstantCoeffGreens {
    /// Roots `β` of `Σ αᵢ Xⁱ`, in the order of [`poly_roots`].
    pub roots: Vec<Complex64>,
    pub greens: ConstCoeffKernel,
}

/// Largest tolerated `sup|Im T| / sup|Re T|` for real coefficients.
pub const IMAGINARY_RESIDUE_TOL: f64 = 1e-9;

/// Green's function of `Σ αᵢ ∂ⁱ` (`alphas[n]` the leading coefficient).
///
/// With roots `β₁…βₙ`, `T = α_n⁻¹ ∫⋯∫ e^{β₁(x-z₁) + β₂(z₁-z₂) + ⋯ + βₙ(z_{n-1}-y)}`,
/// built by nesting the kernels `e^{β(x-y)}`. All derivatives up to order
/// `n` are available through `∂F_k = β_k F_k + F_{k+1}`.
pub fn constant_coeff_greens(alphas: &[Complex64], grid: &GridSpec) -> Result<ConstantCoeffGreens> {
    let roots = poly_roots(alphas, DEFAULT_ROOT_TOL)?;
    let n = roots.len();
    let lead = alphas[n];
    let exps = roots
        .iter()
        .map(|&beta| TriangularKernel::from_analytic_fn(grid, move |x, y| (beta * (x - y)).exp()).map_err(overflow))
        .collect::<Result<Vec<_>>>()?;

    // table[i] = ∂ⁱ F_k for the current k, starting from F_n = E_n
    let beta_n = roots[n - 1];
    let mut table: Vec<TriangularKernel<Complex64>> = (0..=n)
        .map(|i| exps[n - 1].scale(beta_n.powu(i as u32)))
        .collect();
    for k in (0..n - 1).rev() {
        let mut next = Vec::with_capacity(n + 1);
        next.push(kernel_compose(&exps[k], &table[0])?);
        for i in 1..=n {
            let d = next[i - 1].scale(roots[k]).add(&table[i - 1])?;
            next.push(d);
        }
        table = next;
    }
    let inv = Complex64::new(1.0, 0.0) / lead;
    let derivatives: Vec<_> = table.iter().map(|k| k.scale(inv)).collect();
    let g = CausalGreens::from_derivatives(n, derivatives)?;

    let greens = if alphas.iter().all(|a| a.im == 0.0) {
        let t = g.kernel();
        let re = t.re().sup_norm();
        let im = t.im_sup_norm();
        if im > IMAGINARY_RESIDUE_TOL * re {
            return Err(Error::ImaginaryResidue {
                ratio: if re > 0.0 { im / re } else { f64::INFINITY },
            });
        }
        ConstCoeffKernel::Real(g.re())
    } else {
        ConstCoeffKernel::Complex(g)
    };
    Ok(ConstantCoeffGreens { roots, greens })
}

/// Real-coefficient form of [`constant_coeff_greens`].
pub fn constant_coeff_greens_real(alphas: &[f64], grid: &GridSpec) -> Result<ConstantCoeffGreens> {
    let c: Vec<Complex64> = alphas.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    constant_coeff_greens(&c, grid)
}

/// Causal inverse of `-∂² + v` where `v = p² - p'`.
///
/// Uses `-∂² + v = -(∂ - p)(∂ + p)`, so
/// `T(x, y) = -∫_y^x e^{-(A(x) - A(z))} e^{A(z) - A(y)} dz` with `A' = p`.
/// The kernel is that of a non-monic operator: `∂T(x, x) = -1`.
pub fn schrodinger_greens(p: &Coefficient, grid: &GridSpec) -> Result<CausalGreens> {
    let ps = sample_fn(p, 0, grid)?;
    let minus: Vec<f64> = ps.iter().map(|v| -v).collect();
    let outer = first_order(&minus, grid)?;
    let inner = first_order(&ps, grid)?;
    Ok(compose(&outer, &inner)?.scale(-1.0))
}

/// `p(x)² - p'(x) - v(x)` on the nodes; zero when `p` solves the Riccati
/// equation for `v`.
///
/// `dp` supplies `p'` in closed form; otherwise a fourth-order central
/// difference of `p` is used, which evaluates `p` slightly outside the grid
/// at the end nodes.
pub fn riccati_residual(
    p: &Coefficient,
    dp: Option<&Coefficient>,
    v: &Coefficient,
    grid: &GridSpec,
) -> Result<GridFunction> {
    let d = grid.step().min(1e-2);
    GridFunction::from_fn(grid, |x| {
        let slope = match dp {
            Some(dp) => dp(x),
            None => (p(x - 2.0 * d) - 8.0 * p(x - d) + 8.0 * p(x + d) - p(x + 2.0 * d)) / (12.0 * d),
        };
        let px = p(x);
        px * px - slope - v(x)
    })
}

/// `y(x_i) = ∫_a^{x_i} T(x_i, z) g(z) dz`.
pub fn apply_greens<S: Scalar>(g: &CausalGreens<S>, rhs: &GridFunction<S>) -> Result<GridFunction<S>> {
    kernel_apply(g.kernel(), rhs)
}

/// Finite-difference weights for the `order`-th derivative at 0 on the
/// integer offsets `-r..=r` (Fornberg's recursion).
fn fd_weights(order: usize, r: usize) -> Vec<f64> {
    let xs: Vec<f64> = (-(r as isize)..=r as isize).map(|o| o as f64).collect();
    let m = xs.len();
    // c[j][k]: weight of node j for derivative k
    let mut c = vec![vec![0.0; order + 1]; m];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0];
    for i in 1..m {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i];
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[order]).collect()
}

/// Residual of an operator applied by central differences, reported on the
/// nodes `first..=last`; other entries of `values` are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct InteriorResidual {
    pub first: usize,
    pub last: usize,
    pub values: GridFunction,
}

impl InteriorResidual {
    pub fn interior(&self) -> &[f64] {
        &self.values.values()[self.first..=self.last]
    }

    pub fn sup_norm(&self) -> f64 {
        self.interior().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `(O f)(x_i)` on interior nodes by fourth-order central differences.
///
/// Needs at least `8n` intervals; nodes within the stencil half-width of
/// either end are excluded.
pub fn operator_residual(op: &DifferentialOperator, f: &GridFunction) -> Result<InteriorResidual> {
    operator_residual_from(op, f, 0)
}

/// As [`operator_residual`] for a function that is only meaningful on
/// `x >= x_start`, such as a column of a causal kernel.
pub fn operator_residual_from(op: &DifferentialOperator, f: &GridFunction, start: usize) -> Result<InteriorResidual> {
    let grid = f.grid();
    let n = op.degree();
    let big_n = grid.n_intervals();
    if big_n < 8 * n {
        return Err(Error::GridTooCoarse {
            required: 8 * n,
            got: big_n,
        });
    }
    let half = |k: usize| (k + 1) / 2 + 1;
    let margin = (0..=n).map(half).max().unwrap_or(1);
    if start + 2 * margin > big_n {
        return Err(Error::IndexOutOfRange {
            index: start,
            limit: big_n - 2 * margin,
        });
    }
    let first = start + margin;
    let last = big_n - margin;
    let h = grid.step();
    let stencils: Vec<(usize, Vec<f64>)> = (0..=n)
        .map(|k| {
            let r = if k == 0 { 0 } else { half(k) };
            let scale = h.powi(k as i32);
            (r, fd_weights(k, r).into_iter().map(|w| w / scale).collect())
        })
        .collect();
    let v = f.values();
    let nodes = grid.nodes();
    let mut out = vec![0.0; big_n + 1];
    for i in first..=last {
        let deriv = |k: usize| {
            let (r, w) = &stencils[k];
            w.iter().enumerate().map(|(s, c)| c * v[i + s - r]).sum::<f64>()
        };
        let x = nodes[i];
        let mut acc = deriv(n);
        for k in 0..n {
            acc += op.coeff(k)(x) * deriv(k);
        }
        out[i] = acc;
    }
    Ok(InteriorResidual {
        first,
        last,
        values: GridFunction::new(grid, out)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::operator::coeff;

    fn opts() -> SeriesOptions {
        SeriesOptions::default()
    }

    #[test]
    fn pure_derivative_is_polynomial() {
        let g = make_grid(0.0, 1.0, 20).unwrap();
        for n in 1..=4 {
            let t = build_greens(&DifferentialOperator::pure_derivative(n).unwrap(), &g, &opts()).unwrap();
            for i in 0..=20 {
                for j in 0..=i {
                    let d: f64 = g.node(i) - g.node(j);
                    let exact = d.powi(n as i32 - 1) / factorial(n - 1);
                    assert!((t.eval(i, j).unwrap() - exact).abs() <= 1e-15);
                }
            }
        }
    }

    #[test]
    fn causality_and_theta_at_zero() {
        let g = make_grid(0.0, 1.0, 10).unwrap();
        let t1 = build_greens(&DifferentialOperator::constant(&[0.5]).unwrap(), &g, &opts()).unwrap();
        let t2 = build_greens(&DifferentialOperator::constant(&[-1.0, 0.0]).unwrap(), &g, &opts()).unwrap();
        assert_eq!(t1.eval(3, 3).unwrap(), 1.0);
        assert_eq!(t2.eval(3, 3).unwrap(), 0.0);
        assert_eq!(t1.eval(2, 5).unwrap(), 0.0);
        assert_eq!(t2.eval(2, 5).unwrap(), 0.0);
        assert!(matches!(t2.eval(11, 0), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn derivative_orders() {
        let g = make_grid(0.0, 1.0, 10).unwrap();
        let op = DifferentialOperator::new(vec![coeff(|x| -x), coeff(|_| 0.0)]).unwrap();
        let t = build_greens(&op, &g, &opts()).unwrap();
        let h = build_h(&op, &g).unwrap();
        let series = resolvent_series(&h, 1e-12, 60).unwrap();
        assert_eq!(t_derivative(&t, 2).unwrap(), series.resolvent);
        assert!(matches!(t_derivative(&t, 3), Err(Error::OrderOutOfRange { order: 3, degree: 2 })));
        for i in 0..=10 {
            assert_eq!(t.derivative(0).unwrap().get(i, i), 0.0);
            assert_eq!(t.derivative(1).unwrap().get(i, i), 1.0);
        }
    }

    #[test]
    fn first_degree_law() {
        let g = make_grid(0.0, 1.0, 200).unwrap();
        let op = DifferentialOperator::new(vec![coeff(|x| -(x.sin() + 1.0))]).unwrap();
        let t = build_greens(&op, &g, &opts()).unwrap();
        for i in 0..=200 {
            for j in 0..=i {
                let (x, y) = (g.node(i), g.node(j));
                let exact = ((x - y) - x.cos() + y.cos()).exp();
                let err = (t.eval(i, j).unwrap() - exact).abs();
                assert!(err < 1e-8, "{i} {j} {err:e}");
            }
        }
    }

    #[test]
    fn compose_of_derivatives() {
        let g = make_grid(0.0, 1.0, 20).unwrap();
        let d = build_greens(&DifferentialOperator::pure_derivative(1).unwrap(), &g, &opts()).unwrap();
        let dd = compose(&d, &d).unwrap();
        assert_eq!(dd.degree(), 2);
        for i in 0..=20 {
            for j in 0..=i {
                assert!((dd.eval(i, j).unwrap() - (g.node(i) - g.node(j))).abs() < 1e-14);
            }
            assert_eq!(dd.derivative(1).unwrap().get(i, i), 1.0);
        }
    }

    #[test]
    fn compose_is_not_commutative() {
        let g = make_grid(0.0, 1.0, 40).unwrap();
        let a = factored_greens(&[coeff(|x| -2.0 * x)], &g).unwrap();
        let b = factored_greens(&[coeff(|x| -x)], &g).unwrap();
        let ab = compose(&a, &b).unwrap();
        let ba = compose(&b, &a).unwrap();
        assert!(ab.kernel().max_abs_diff(ba.kernel()).unwrap() > 1e-3);
    }

    #[test]
    fn factored_single_constant() {
        let g = make_grid(0.0, 1.0, 16).unwrap();
        let t = factored_greens(&[coeff(|_| 0.7)], &g).unwrap();
        for i in 0..=16 {
            for j in 0..=i {
                let e = (0.7 * (g.node(i) - g.node(j))).exp();
                assert!((t.eval(i, j).unwrap() - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn factored_triple_zero() {
        let g = make_grid(0.0, 1.0, 16).unwrap();
        let zero = coeff(|_| 0.0);
        let t = factored_greens(&[zero.clone(), zero.clone(), zero], &g).unwrap();
        assert_eq!(t.degree(), 3);
        for i in 0..=16 {
            for j in 0..=i {
                let d = g.node(i) - g.node(j);
                assert!((t.eval(i, j).unwrap() - d * d / 2.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn factored_errors() {
        let g = make_grid(0.0, 1.0, 8).unwrap();
        assert_eq!(factored_greens(&[], &g).unwrap_err(), Error::EmptyFactorList);
        let err = factored_greens(&[coeff(|_| 1000.0)], &g).unwrap_err();
        assert!(matches!(err, Error::Overflow { .. }));
    }

    #[test]
    fn constant_coeff_derivative_operator() {
        let g = make_grid(0.0, 1.0, 8).unwrap();
        let c = constant_coeff_greens_real(&[0.0, 1.0], &g).unwrap();
        let t = c.greens.as_real().unwrap();
        for i in 0..=8 {
            for j in 0..=i {
                assert!((t.eval(i, j).unwrap() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn schrodinger_free_case() {
        let g = make_grid(0.0, 1.0, 16).unwrap();
        let t = schrodinger_greens(&coeff(|_| 0.0), &g).unwrap();
        for i in 0..=16 {
            for j in 0..=i {
                assert!((t.eval(i, j).unwrap() + (g.node(i) - g.node(j))).abs() < 1e-14);
            }
            assert_eq!(t.derivative(1).unwrap().get(i, i), -1.0);
        }
    }

    #[test]
    fn riccati_residuals() {
        let g = make_grid(-1.0, 1.0, 40).unwrap();
        let p = coeff(|x| x);
        let v = coeff(|x| x * x - 1.0);
        let r = riccati_residual(&p, None, &v, &g).unwrap();
        assert!(r.sup_norm() < 1e-10);
        let r = riccati_residual(&p, Some(&coeff(|_| 1.0)), &v, &g).unwrap();
        assert!(r.sup_norm() < 1e-14);
        let r = riccati_residual(&coeff(|_| 0.0), None, &coeff(|_| 1.0), &g).unwrap();
        assert!(r.values().iter().all(|&v| v == -1.0));
    }

    #[test]
    fn fd_weights_known() {
        let w = fd_weights(1, 2);
        let expect = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        let w = fd_weights(2, 2);
        let expect = [-1.0 / 12.0, 4.0 / 3.0, -2.5, 4.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn residual_of_simple_functions() {
        let g = make_grid(0.0, 1.0, 40).unwrap();
        let f = GridFunction::from_fn(&g, |x| x).unwrap();
        let r = operator_residual(&DifferentialOperator::pure_derivative(1).unwrap(), &f).unwrap();
        assert!(r.interior().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let g = make_grid(0.0, 1.0, 400).unwrap();
        let f = GridFunction::from_fn(&g, f64::sinh).unwrap();
        let op = DifferentialOperator::constant(&[-1.0, 0.0]).unwrap();
        assert!(operator_residual(&op, &f).unwrap().sup_norm() < 1e-6);
        let coarse = make_grid(0.0, 1.0, 8).unwrap();
        let f = GridFunction::constant(&coarse, 1.0);
        assert!(matches!(operator_residual(&op, &f), Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn apply_of_derivative_greens() {
        let g = make_grid(0.5, 1.5, 20).unwrap();
        let t = build_greens(&DifferentialOperator::pure_derivative(1).unwrap(), &g, &opts()).unwrap();
        let y = apply_greens(&t, &GridFunction::constant(&g, 1.0)).unwrap();
        for (v, x) in y.values().iter().zip(g.nodes()) {
            assert!((v - (x - 0.5)).abs() < 1e-14);
        }
    }
}
