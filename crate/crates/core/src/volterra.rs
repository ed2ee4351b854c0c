//! The kernel `h(x, y)` of a differential operator, its resolvent, and
//! Volterra equations of the second kind.
//!
//! The resolvent is the fixed point of `R = h + ∫_y^x h(x, z) R(z, y) dz`.
//! It is computed two ways that share one discretization of the integral:
//! summing the Neumann series of iterated kernels ([`resolvent_series`]) and
//! marching the fixed-point equation column by column
//! ([`resolvent_direct`]). Since both solve the same discrete equation they
//! agree to rounding plus the series truncation.

use crate::error::{Error, Result};
use crate::grid::{
    composite_weight, contract_outer, kernel_compose, lag_extend, panel_matrix, GridFunction, GridSpec,
    TriangularKernel, Window, LAG_MIN_INTERVALS,
};
use crate::operator::{sample_all, DifferentialOperator};
use crate::scalar::{solve_dense, Scalar};
use rayon::prelude::*;

/// Default absolute tolerance on the newest series term.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Default cap on the number of series terms.
pub const DEFAULT_MAX_TERMS: usize = 60;

const PIVOT_FLOOR: f64 = 1e-14;

/// Truncation controls for the Neumann series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesOptions {
    pub tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_terms: DEFAULT_MAX_TERMS,
        }
    }
}

impl SeriesOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct ResolventResult {
    pub resolvent: TriangularKernel,
    pub terms_used: usize,
    /// Sup norm of the last term added.
    pub last_term_norm: f64,
    pub converged: bool,
    /// Sup norm of every term, in order.
    pub term_norms: Vec<f64>,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `h(x, y) = -Σ_k P_k(x) (x - y)^(n-k-1) / (n-k-1)!`.
///
/// The formula is a polynomial in `y`, so the kernel carries its
/// continuation past the diagonal. On the diagonal `h(x, x) = -P_{n-1}(x)`.
pub fn build_h(op: &DifferentialOperator, grid: &GridSpec) -> Result<TriangularKernel> {
    let n = op.degree();
    // validates finiteness and reports the offending node
    sample_all(op, grid)?;
    let inv_fact: Vec<f64> = (0..n).map(|e| 1.0 / factorial(e)).collect();
    let coeffs = op.coeffs().to_vec();
    TriangularKernel::from_analytic_fn(grid, move |x, y| {
        let d = x - y;
        -coeffs
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let e = n - k - 1;
                p(x) * d.powi(e as i32) * inv_fact[e]
            })
            .sum::<f64>()
    })
}

/// Kernel of the Volterra equation `u + ∫ K u = g + S` for an operator.
/// It is the negative of [`build_h`]: `K(x, z) = -h(x, z)`.
pub fn volterra_kernel(op: &DifferentialOperator, grid: &GridSpec) -> Result<TriangularKernel> {
    Ok(build_h(op, grid)?.scale(-1.0))
}

/// Sums `R = Σ_r h^(∘r)` with `term_{r+1} = ∫ h(x, z) term_r(z, y) dz`, stopping
/// once the newest term has sup norm at most `tol` or `max_terms` is reached.
pub fn resolvent_series(h: &TriangularKernel, tol: f64, max_terms: usize) -> Result<ResolventResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidTolerance(tol));
    }
    let max_terms = max_terms.max(1);
    let mut term = h.without_lookahead();
    let mut sum = term.clone();
    let mut norm = term.sup_norm();
    let mut term_norms = vec![norm];
    while norm > tol && term_norms.len() < max_terms {
        term = kernel_compose(h, &term)?;
        norm = term.sup_norm();
        term_norms.push(norm);
        sum = sum.add(&term)?;
    }
    Ok(ResolventResult {
        resolvent: sum,
        terms_used: term_norms.len(),
        last_term_norm: norm,
        converged: norm <= tol,
        term_norms,
    })
}

/// Solves `R(x_i, x_j) = h(x_i, x_j) + ∫_{x_j}^{x_i} h(x_i, z) R(z, x_j) dz`
/// by forward substitution down each column.
///
/// The columns are independent except for the last two, whose first panel
/// borrows values of `R` extrapolated along lines of constant lag from the
/// columns to their left; those two are solved after the rest.
pub fn resolvent_direct(h: &TriangularKernel) -> Result<TriangularKernel> {
    let grid = h.grid().clone();
    let last = grid.n_intervals();
    let n = last + 1;
    let column_rhs = |j: usize| -> Vec<f64> { (0..n).map(|i| if i >= j { h.get(i, j) } else { 0.0 }).collect() };
    let tail_from = if last >= LAG_MIN_INTERVALS { last - 2 } else { n };
    let columns: Vec<Vec<f64>> = (0..tail_from)
        .into_par_iter()
        .map(|j| forward_solve(h, j, &column_rhs(j), &[]))
        .collect::<Result<_>>()?;
    let mut samples = vec![0.0; n * n];
    for (j, col) in columns.iter().enumerate() {
        for i in j..n {
            samples[i * n + j] = col[i];
        }
    }
    for j in tail_from..n {
        let tail: Vec<f64> = (n..=j + 3)
            .map(|i| lag_extend(last, i as isize, j as isize, |a, b| samples[a * n + b]).expect("lag line in range"))
            .collect();
        let col = forward_solve(h, j, &column_rhs(j), &tail)?;
        for i in j..n {
            samples[i * n + j] = col[i];
        }
    }
    TriangularKernel::from_samples(&grid, samples)
}

/// Solves `u(x) + ∫_a^x K(x, z) u(z) dz = rhs(x)`.
pub fn solve_volterra2(k: &TriangularKernel, rhs: &GridFunction) -> Result<GridFunction> {
    if k.grid() != rhs.grid() {
        return Err(Error::GridMismatch);
    }
    let a = k.scale(-1.0);
    let u = forward_solve(&a, 0, rhs.values(), &[])?;
    GridFunction::new(k.grid(), u)
}

/// Solves `v_i = f_i + ∫_{x_start}^{x_i} A(x_i, z) v(z) dz` for `i >= start`.
///
/// The single-panel rule for `i = start + 1` interpolates `v` through nodes
/// up to `start + 3`, so the first (at most three) unknowns are solved as one
/// small block; afterwards every step has one unknown on the diagonal.
/// `tail` holds known values of `v` at nodes `N + 1, N + 2, …` for the panel
/// rule to use when the column is too short.
pub(crate) fn forward_solve<S: Scalar>(a: &TriangularKernel<S>, start: usize, f: &[S], tail: &[S]) -> Result<Vec<S>> {
    let grid = a.grid();
    let last = grid.n_intervals();
    let h = grid.step();
    let mut v = vec![S::zero(); last + 1];
    v[start] = f[start];
    if start == last {
        return Ok(v);
    }

    let (olo, ohi) = a.outer_range(start);
    let ow = Window::choose(olo, ohi);
    let iw = Window::choose(0, (last - start + tail.len()) as isize);
    let block = (iw.len - 1).min(last - start);
    let mut sys = vec![vec![S::zero(); block]; block];
    let mut rhs = vec![S::zero(); block];

    // first row: single panel
    {
        let i = start + 1;
        let m = panel_matrix(ow, iw);
        let mut a_vals = [S::zero(); 4];
        for (slot, o) in a_vals.iter_mut().zip(ow.offsets()) {
            *slot = a.outer_at(i, start, o);
        }
        let c = contract_outer(&a_vals, &m, ow, iw, h);
        rhs[0] = f[i] + c[0] * v[start];
        sys[0][0] = S::one();
        for (b, &cb) in c.iter().enumerate().take(iw.len).skip(1) {
            let node = start + b;
            if node <= last {
                sys[0][b - 1] = sys[0][b - 1] - cb;
            } else {
                rhs[0] += cb * tail[node - last - 1];
            }
        }
    }
    // remaining block rows: spans 2 and 3 only touch nodes inside the block
    for r in 1..block {
        let i = start + 1 + r;
        let m = i - start;
        rhs[r] = f[i] + a.get(i, start) * v[start] * (composite_weight(m, 0) * h);
        sys[r][r] = S::one();
        for k in 1..=m {
            sys[r][k - 1] = sys[r][k - 1] - a.get(i, start + k) * (composite_weight(m, k) * h);
        }
    }
    let min_pivot = solve_dense(&mut sys, &mut rhs).map_err(|c| Error::SingularPivot {
        node: start + 1 + c,
        pivot: 0.0,
    })?;
    if min_pivot < PIVOT_FLOOR {
        return Err(Error::SingularPivot {
            node: start + 1,
            pivot: min_pivot,
        });
    }
    v[start + 1..=start + block].copy_from_slice(&rhs);
    for i in start + block + 1..=last {
        let m = i - start;
        let row = a.row(i);
        let mut acc = f[i];
        for k in 0..m {
            acc += row[start + k] * v[start + k] * (composite_weight(m, k) * h);
        }
        let pivot = S::one() - row[i] * (composite_weight(m, m) * h);
        if pivot.modulus() < PIVOT_FLOOR {
            return Err(Error::SingularPivot {
                node: i,
                pivot: pivot.modulus(),
            });
        }
        v[i] = acc / pivot;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::operator::{coeff, DifferentialOperator};

    fn airy() -> DifferentialOperator {
        DifferentialOperator::new(vec![coeff(|x| -x), coeff(|_| 0.0)]).unwrap()
    }

    #[test]
    fn h_of_oscillator() {
        let g = make_grid(0.0, 1.0, 8).unwrap();
        let h = build_h(&DifferentialOperator::constant(&[-1.0, 0.0]).unwrap(), &g).unwrap();
        for i in 0..=8 {
            for j in 0..=i {
                assert!((h.get(i, j) - (g.node(i) - g.node(j))).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn h_of_first_order_has_no_lag_factor() {
        let g = make_grid(0.0, 1.0, 8).unwrap();
        let op = DifferentialOperator::new(vec![coeff(|x| -(x * x))]).unwrap();
        let h = build_h(&op, &g).unwrap();
        for i in 0..=8 {
            for j in 0..=i {
                assert_eq!(h.get(i, j), g.node(i) * g.node(i));
            }
        }
    }

    #[test]
    fn h_of_airy_at_a_point() {
        let g = make_grid(0.0, 1.0, 4).unwrap();
        let h = build_h(&airy(), &g).unwrap();
        assert!((h.get(2, 1) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn h_diagonal_is_minus_top_coefficient() {
        let g = make_grid(0.0, 2.0, 10).unwrap();
        let op = DifferentialOperator::new(vec![coeff(|x| 2.0 * x * x + 2.0), coeff(|x| 3.0 * x)]).unwrap();
        let h = build_h(&op, &g).unwrap();
        for i in 0..=10 {
            assert_eq!(h.get(i, i), -3.0 * g.node(i));
        }
    }

    #[test]
    fn volterra_kernel_is_minus_h() {
        let g = make_grid(0.0, 1.0, 6).unwrap();
        let h = build_h(&airy(), &g).unwrap();
        let k = volterra_kernel(&airy(), &g).unwrap();
        for i in 0..=6 {
            for j in 0..=i {
                assert_eq!(k.get(i, j), -h.get(i, j));
                // K(x, z) = P_0(x)(x - z) for ∂² - x
                assert!((k.get(i, j) + g.node(i) * (g.node(i) - g.node(j))).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_kernel_has_zero_resolvent() {
        let g = make_grid(0.0, 1.0, 8).unwrap();
        let h = TriangularKernel::zeros(&g);
        let r = resolvent_series(&h, 1e-12, 60).unwrap();
        assert_eq!(r.terms_used, 1);
        assert!(r.converged);
        assert_eq!(r.resolvent.sup_norm(), 0.0);
        assert_eq!(resolvent_direct(&h).unwrap().sup_norm(), 0.0);
    }

    /// Partial sums of Σ c^r (x - y)^(r-1) / (r-1)!.
    fn geometric_oracle(c: f64, d: f64) -> f64 {
        let mut term = c;
        let mut sum = 0.0;
        for r in 1..200 {
            sum += term;
            term *= c * d / r as f64;
        }
        sum
    }

    #[test]
    fn constant_kernel_resolvent() {
        let c = 1.0;
        let g = make_grid(0.0, 1.0, 256).unwrap();
        let h = TriangularKernel::from_analytic_fn(&g, |_, _| c).unwrap();
        let series = resolvent_series(&h, 1e-14, 100).unwrap();
        assert!(series.converged);
        let direct = resolvent_direct(&h).unwrap();
        for i in 0..=256 {
            for j in 0..=i {
                let d = g.node(i) - g.node(j);
                let exact = geometric_oracle(c, d);
                assert!((exact - c * (c * d).exp()).abs() < 1e-12);
                assert!((series.resolvent.get(i, j) - exact).abs() < 1e-8);
                assert!((direct.get(i, j) - exact).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let g = make_grid(0.0, 1.0, 16).unwrap();
        let h = TriangularKernel::from_analytic_fn(&g, |_, _| 3.0).unwrap();
        let r = resolvent_series(&h, 1e-12, 3).unwrap();
        assert!(!r.converged);
        assert_eq!(r.terms_used, 3);
        assert!(r.last_term_norm > 1e-12);
        assert!(matches!(resolvent_series(&h, 0.0, 3), Err(Error::InvalidTolerance(_))));
    }

    #[test]
    fn series_and_direct_agree_on_airy() {
        let g = make_grid(0.0, 1.0, 100).unwrap();
        let h = build_h(&airy(), &g).unwrap();
        let s = resolvent_series(&h, 1e-14, 60).unwrap();
        let d = resolvent_direct(&h).unwrap();
        assert!(s.resolvent.max_abs_diff(&d).unwrap() < 1e-12);
    }

    #[test]
    fn fixed_point_residual_of_direct_resolvent() {
        let g = make_grid(0.0, 1.0, 64).unwrap();
        let op = DifferentialOperator::new(vec![coeff(|x| x.cos()), coeff(|x| x)]).unwrap();
        let h = build_h(&op, &g).unwrap();
        let r = resolvent_direct(&h).unwrap();
        let hr = kernel_compose(&h, &r).unwrap();
        let residual = r.sub(&h.without_lookahead()).unwrap().sub(&hr).unwrap();
        assert!(residual.sup_norm() < 1e-12);
    }

    #[test]
    fn volterra_identity_kernel_gives_exponential() {
        let g = make_grid(0.0, 1.0, 256).unwrap();
        let k = TriangularKernel::from_analytic_fn(&g, |_, _| 1.0).unwrap();
        let rhs = GridFunction::constant(&g, 1.0);
        let u = solve_volterra2(&k, &rhs).unwrap();
        for (v, x) in u.values().iter().zip(g.nodes()) {
            assert!((v - (-x).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn volterra_zero_kernel() {
        let g = make_grid(0.0, 1.0, 8).unwrap();
        let rhs = GridFunction::from_fn(&g, |x| x.sin()).unwrap();
        let u = solve_volterra2(&TriangularKernel::zeros(&g), &rhs).unwrap();
        assert_eq!(u, rhs);
    }

    #[test]
    fn singular_pivot_detected() {
        // 1 - (h / 3) * 24 vanishes on the first even Simpson step
        let g = make_grid(0.0, 1.0, 8).unwrap();
        let k = TriangularKernel::from_fn(&g, |_, _| -24.0).unwrap();
        let rhs = GridFunction::constant(&g, 1.0);
        assert!(matches!(solve_volterra2(&k, &rhs), Err(Error::SingularPivot { .. })));
    }

    #[test]
    fn resolvent_column_locality() {
        let g = make_grid(0.0, 1.0, 40).unwrap();
        let j0 = 15;
        let xj = g.node(j0);
        // the same kernel, optionally altered wherever z < x_j
        let kernel = |perturb: bool| {
            TriangularKernel::from_analytic_fn(&g, move |x: f64, y: f64| {
                let base = -((1.0 + x) * (x - y) + x * x);
                if perturb && y < xj - 1e-12 {
                    base + 10.0 * (x - y).sin()
                } else {
                    base
                }
            })
            .unwrap()
        };
        let r = resolvent_direct(&kernel(false)).unwrap();
        let rp = resolvent_direct(&kernel(true)).unwrap();
        assert_eq!(r.column(j0), rp.column(j0));
        assert_ne!(r.column(j0 - 1), rp.column(j0 - 1));
    }

    #[test]
    fn series_terms_decay_after_peak() {
        let g = make_grid(0.0, 2.0, 80).unwrap();
        let op = DifferentialOperator::new(vec![coeff(|x| 2.0 * x * x + 2.0), coeff(|x| 3.0 * x)]).unwrap();
        let h = build_h(&op, &g).unwrap();
        let r = resolvent_series(&h, 1e-12, 200).unwrap();
        assert!(r.converged);
        let peak = r
            .term_norms
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        for w in r.term_norms[peak..].windows(2) {
            assert!(w[1] <= w[0]);
        }
    }
}
