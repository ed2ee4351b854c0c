//! Initial value problems through the Volterra equation for `u = ∂ⁿy`,
//! fundamental solutions and Wronskians.
//!
//! With `∂ⁱy(a) = c_i`, the equation `O y = g` becomes
//! `u(x) + ∫_a^x K(x, z) u(z) dz = g(x) + S(x)` where
//! `S(x) = -Σ_i Σ_{k≤i} c_i P_k(x) (x-a)^(i-k) / (i-k)!`, and then
//! `∂ᵏy = Σ_{i≥k} c_i (x-a)^(i-k)/(i-k)! + ∫_a^x (x-z)^(n-k-1)/(n-k-1)! u(z) dz`.

use crate::error::{Error, Result};
use crate::greens::{apply_greens, CausalGreens};
use crate::grid::{cumulative_integral, kernel_apply, GridFunction, GridSpec, TriangularKernel};
use crate::operator::{sample_all, sample_coeff, DifferentialOperator, InitialConditions};
use crate::scalar::{determinant, solve_dense};
use crate::volterra::{solve_volterra2, volterra_kernel};
use rayon::prelude::*;

/// Relative tolerance for matching the anchor against the grid's left end.
const ANCHOR_TOL: f64 = 1e-12;

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn check_anchor(ic: &InitialConditions, grid: &GridSpec) -> Result<()> {
    let scale = grid.a().abs().max(grid.b().abs()).max(1.0);
    if (ic.anchor - grid.a()).abs() > ANCHOR_TOL * scale {
        return Err(Error::AnchorMismatch {
            anchor: ic.anchor,
            expected: grid.a(),
        });
    }
    Ok(())
}

fn check_len(ic: &InitialConditions, n: usize) -> Result<()> {
    if ic.values.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: ic.values.len(),
        });
    }
    Ok(())
}

/// `S(x) = -Σ_{i<n} Σ_{k≤i} c_i P_k(x) (x-a)^(i-k) / (i-k)!`.
pub fn build_s(op: &DifferentialOperator, ic: &InitialConditions, grid: &GridSpec) -> Result<GridFunction> {
    check_len(ic, op.degree())?;
    check_anchor(ic, grid)?;
    let p = sample_all(op, grid)?;
    let a = grid.a();
    let values = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(node, &x)| {
            let d = x - a;
            let mut acc = 0.0;
            for (i, &c) in ic.values.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                for (k, pk) in p.iter().enumerate().take(i + 1) {
                    acc -= c * pk[node] * d.powi((i - k) as i32) / factorial(i - k);
                }
            }
            acc
        })
        .collect();
    GridFunction::new(grid, values)
}

/// `∂ᵏD` for `D(x) = Σ_i c_i (x-a)^i / i!`.
fn taylor_derivative(ic: &InitialConditions, grid: &GridSpec, k: usize) -> Result<GridFunction> {
    let a = grid.a();
    GridFunction::from_fn(grid, |x| {
        let d = x - a;
        ic.values
            .iter()
            .enumerate()
            .skip(k)
            .map(|(i, &c)| c * d.powi((i - k) as i32) / factorial(i - k))
            .sum()
    })
}

/// `D(x) = Σ_i c_i (x-a)^i / i!`.
pub fn build_d(ic: &InitialConditions, grid: &GridSpec) -> Result<GridFunction> {
    check_anchor(ic, grid)?;
    taylor_derivative(ic, grid, 0)
}

/// Solution of an initial value problem with its derivative stack.
#[derive(Clone, Debug, PartialEq)]
pub struct IvpSolution {
    pub y: GridFunction,
    /// `u = ∂ⁿy`, the unknown of the Volterra equation.
    pub u: GridFunction,
    /// `derivatives[k] = ∂ᵏy` for `k < n`.
    pub derivatives: Vec<GridFunction>,
}

/// `(x - z)^e / e!` with its continuation.
fn lag_kernel(grid: &GridSpec, e: usize) -> Result<TriangularKernel> {
    let c = 1.0 / factorial(e);
    TriangularKernel::from_analytic_fn(grid, move |x, z| (x - z).powi(e as i32) * c)
}

/// Solves `O y = g` with `∂ⁱy(a) = c_i` on the grid of `g`.
pub fn solve_ivp(op: &DifferentialOperator, g: &GridFunction, ic: &InitialConditions) -> Result<IvpSolution> {
    let grid = g.grid();
    let n = op.degree();
    check_len(ic, n)?;
    let s = build_s(op, ic, grid)?;
    let k = volterra_kernel(op, grid)?;
    let u = solve_volterra2(&k, &g.add(&s)?)?;
    let derivatives = (0..n)
        .map(|k| {
            let lifted = kernel_apply(&lag_kernel(grid, n - k - 1)?, &u)?;
            taylor_derivative(ic, grid, k)?.add(&lifted)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IvpSolution {
        y: derivatives[0].clone(),
        u,
        derivatives,
    })
}

/// `D + ∫_a^x T(x, z) S(z) dz`, the homogeneous solution with `∂ⁱy(a) = c_i`.
pub fn homogeneous_solution(
    op: &DifferentialOperator,
    ic: &InitialConditions,
    g: &CausalGreens,
) -> Result<GridFunction> {
    homogeneous_stack(op, ic, g, 1).map(|mut v| v.swap_remove(0))
}

/// `∂ᵏ` of the homogeneous solution for `k < count`, from `∂ᵏT`.
fn homogeneous_stack(
    op: &DifferentialOperator,
    ic: &InitialConditions,
    g: &CausalGreens,
    count: usize,
) -> Result<Vec<GridFunction>> {
    if g.degree() != op.degree() {
        return Err(Error::LengthMismatch {
            expected: op.degree(),
            got: g.degree(),
        });
    }
    let grid = g.grid();
    let s = build_s(op, ic, grid)?;
    (0..count)
        .map(|k| {
            let lifted = kernel_apply(g.derivative(k)?, &s)?;
            taylor_derivative(ic, grid, k)?.add(&lifted)
        })
        .collect()
}

/// `n` solutions `u_r` with `∂ⁱu_r(a) = δ_{ri}`, each with its derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct FundamentalSet {
    /// `stacks[r][k] = ∂ᵏu_r` for `k < n`.
    pub stacks: Vec<Vec<GridFunction>>,
}

impl FundamentalSet {
    pub fn degree(&self) -> usize {
        self.stacks.len()
    }

    pub fn solution(&self, r: usize) -> &GridFunction {
        &self.stacks[r][0]
    }

    /// `M[i][r] = ∂ⁱu_r(x_node)`.
    pub fn matrix_at(&self, node: usize) -> Vec<Vec<f64>> {
        let n = self.degree();
        (0..n)
            .map(|i| (0..n).map(|r| self.stacks[r][i].get(node)).collect())
            .collect()
    }
}

/// Fundamental solutions `u_r = (x-a)^r/r! + ∫_a^x T(x, z) S_r(z) dz`.
///
/// The last one is the column `T(x, a)` itself, taken directly from the
/// kernel: the integral form would cancel almost to zero when `T` decays.
/// Needs `∂ᵏT` for `k < n`.
pub fn fundamental_solutions(op: &DifferentialOperator, g: &CausalGreens) -> Result<FundamentalSet> {
    let n = op.degree();
    if g.max_order() + 1 < n {
        return Err(Error::DerivativeUnavailable {
            order: n - 1,
            available: g.max_order(),
        });
    }
    let a = g.grid().a();
    let stacks = (0..n)
        .into_par_iter()
        .map(|r| {
            if r + 1 == n {
                (0..n)
                    .map(|k| GridFunction::new(g.grid(), g.derivative(k)?.column(0)))
                    .collect()
            } else {
                homogeneous_stack(op, &InitialConditions::unit(n, r, a), g, n)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FundamentalSet { stacks })
}

/// Determinant of `[∂ⁱu_r]` at a node.
pub fn wronskian(set: &FundamentalSet, at_index: usize) -> Result<f64> {
    let limit = set.stacks[0][0].grid().n_intervals();
    if at_index > limit {
        return Err(Error::IndexOutOfRange {
            index: at_index,
            limit,
        });
    }
    Ok(determinant(set.matrix_at(at_index)))
}

/// The determinant Wronskian on every node.
pub fn wronskian_samples(set: &FundamentalSet) -> Result<GridFunction> {
    let grid = set.stacks[0][0].grid().clone();
    let values = (0..grid.n_nodes()).map(|i| determinant(set.matrix_at(i))).collect();
    GridFunction::new(&grid, values)
}

/// `exp(-∫_a^x P_{n-1})`, the Wronskian of the fundamental set by Abel's
/// identity.
pub fn abel_wronskian(op: &DifferentialOperator, grid: &GridSpec) -> Result<GridFunction> {
    let top = sample_coeff(op, op.degree() - 1, grid)?;
    cumulative_integral(&top, 0)?.map(|v| (-v).exp())
}

/// Outcome of comparing `T` with the variation-of-parameters kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct VopReport {
    /// Sup over checked pairs of `|Σ_r W_r(y) u_r(x) / W(y) - T(x, y)|`.
    pub max_deviation: f64,
    /// Columns `y_j` used.
    pub checked_columns: usize,
    /// Columns skipped because `|W(y_j)|` fell below `1e-10` of its
    /// Hadamard bound.
    pub skipped_columns: usize,
    /// Smallest `|W| / bound` among checked columns.
    pub min_conditioning: f64,
}

const VOP_SKIP: f64 = 1e-10;

/// Compares `T(x, y)` with `Σ_r W_r(y) u_r(x) / W(y)`, where `W_r` is the
/// Wronskian with its `r`-th column replaced by `(0, …, 0, 1)`.
///
/// The ratios `W_r / W` are the solution of `M(y) w = e_{n-1}`.
pub fn vop_greens_check(op: &DifferentialOperator, g: &CausalGreens) -> Result<VopReport> {
    let set = fundamental_solutions(op, g)?;
    let n = op.degree();
    let nodes = g.grid().n_nodes();
    let t = g.kernel();
    let columns: Vec<Option<(f64, f64)>> = (0..nodes)
        .into_par_iter()
        .map(|j| {
            let m = set.matrix_at(j);
            let bound: f64 = m
                .iter()
                .map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt())
                .product();
            let det = determinant(m.clone());
            if !(bound > 0.0) || det.abs() < VOP_SKIP * bound {
                return None;
            }
            let mut sys = m;
            let mut w = vec![0.0; n];
            w[n - 1] = 1.0;
            solve_dense(&mut sys, &mut w).ok()?;
            let dev = (j..nodes).fold(0.0f64, |acc, i| {
                let lhs: f64 = (0..n).map(|r| w[r] * set.stacks[r][0].get(i)).sum();
                acc.max((lhs - t.get(i, j)).abs())
            });
            Some((dev, det.abs() / bound))
        })
        .collect();
    let checked: Vec<(f64, f64)> = columns.iter().flatten().copied().collect();
    Ok(VopReport {
        max_deviation: checked.iter().fold(0.0, |m, c| m.max(c.0)),
        checked_columns: checked.len(),
        skipped_columns: nodes - checked.len(),
        min_conditioning: checked.iter().fold(f64::INFINITY, |m, c| m.min(c.1)),
    })
}

/// `∫_a^x T(x, z) g(z) dz`; the IVP solution with zero initial data.
pub fn zero_data_solution(g: &CausalGreens, rhs: &GridFunction) -> Result<GridFunction> {
    apply_greens(g, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::build_greens;
    use crate::grid::make_grid;
    use crate::operator::coeff;
    use crate::volterra::SeriesOptions;

    fn osc() -> DifferentialOperator {
        DifferentialOperator::constant(&[-1.0, 0.0]).unwrap()
    }

    fn airy() -> DifferentialOperator {
        DifferentialOperator::new(vec![coeff(|x| -x), coeff(|_| 0.0)]).unwrap()
    }

    #[test]
    fn s_examples() {
        let g = make_grid(0.0, 1.0, 8).unwrap();
        let s = build_s(&osc(), &InitialConditions::zero(2, 0.0), &g).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
        let s = build_s(&osc(), &InitialConditions::new(vec![1.0, 0.0], 0.0), &g).unwrap();
        assert!(s.values().iter().all(|&v| v == 1.0));
        let s = build_s(&airy(), &InitialConditions::new(vec![0.0, 1.0], 0.0), &g).unwrap();
        for (v, x) in s.values().iter().zip(g.nodes()) {
            assert!((v - x * x).abs() < 1e-15);
        }
    }

    #[test]
    fn d_examples() {
        let g = make_grid(0.0, 1.0, 8).unwrap();
        let d = build_d(&InitialConditions::new(vec![1.0, 2.0, 3.0], 0.0), &g).unwrap();
        for (v, x) in d.values().iter().zip(g.nodes()) {
            assert!((v - (1.0 + 2.0 * x + 1.5 * x * x)).abs() < 1e-15);
        }
    }

    #[test]
    fn ic_validation() {
        let g = make_grid(0.0, 1.0, 8).unwrap();
        assert!(matches!(
            build_s(&osc(), &InitialConditions::zero(3, 0.0), &g),
            Err(Error::LengthMismatch { expected: 2, got: 3 })
        ));
        assert!(matches!(
            build_d(&InitialConditions::zero(2, 0.5), &g),
            Err(Error::AnchorMismatch { .. })
        ));
    }

    #[test]
    fn oscillator_ivps() {
        let g = make_grid(0.0, 1.0, 256).unwrap();
        let zero = GridFunction::constant(&g, 0.0);
        let sol = solve_ivp(&osc(), &zero, &InitialConditions::new(vec![1.0, 0.0], 0.0)).unwrap();
        for (i, &x) in g.nodes().iter().enumerate() {
            assert!((sol.y.get(i) - x.cosh()).abs() < 1e-8);
            assert!((sol.derivatives[1].get(i) - x.sinh()).abs() < 1e-8);
        }
        let one = GridFunction::constant(&g, 1.0);
        let sol = solve_ivp(&osc(), &one, &InitialConditions::zero(2, 0.0)).unwrap();
        for (i, &x) in g.nodes().iter().enumerate() {
            assert!((sol.y.get(i) - (x.cosh() - 1.0)).abs() < 1e-8);
        }
    }

    #[test]
    fn first_order_ivp() {
        let g = make_grid(0.0, 1.0, 16).unwrap();
        let op = DifferentialOperator::pure_derivative(1).unwrap();
        let sol = solve_ivp(&op, &GridFunction::constant(&g, 1.0), &InitialConditions::zero(1, 0.0)).unwrap();
        for (v, x) in sol.y.values().iter().zip(g.nodes()) {
            assert!((v - x).abs() < 1e-14);
        }
    }

    #[test]
    fn homogeneous_and_fundamental() {
        let g = make_grid(0.0, 1.0, 400).unwrap();
        let t = build_greens(&osc(), &g, &SeriesOptions::default()).unwrap();
        let u = homogeneous_solution(&osc(), &InitialConditions::new(vec![0.0, 1.0], 0.0), &t).unwrap();
        for (v, x) in u.values().iter().zip(g.nodes()) {
            assert!((v - x.sinh()).abs() < 1e-7);
        }
        let set = fundamental_solutions(&osc(), &t).unwrap();
        for (i, &x) in g.nodes().iter().enumerate() {
            assert!((set.solution(0).get(i) - x.cosh()).abs() < 1e-7);
            assert!((set.solution(1).get(i) - x.sinh()).abs() < 1e-7);
        }
        assert_eq!(wronskian(&set, 0).unwrap(), 1.0);
        let w = wronskian_samples(&set).unwrap();
        assert!(w.values().iter().all(|v| (v - 1.0).abs() < 1e-7));
    }

    #[test]
    fn pure_second_derivative_fundamentals_and_vop() {
        let g = make_grid(1.0, 2.0, 20).unwrap();
        let op = DifferentialOperator::pure_derivative(2).unwrap();
        let t = build_greens(&op, &g, &SeriesOptions::default()).unwrap();
        let set = fundamental_solutions(&op, &t).unwrap();
        for (i, &x) in g.nodes().iter().enumerate() {
            assert!((set.solution(0).get(i) - 1.0).abs() < 1e-15);
            assert!((set.solution(1).get(i) - (x - 1.0)).abs() < 1e-14);
        }
        let r = vop_greens_check(&op, &t).unwrap();
        assert!(r.max_deviation < 1e-13);
        assert_eq!(r.skipped_columns, 0);
    }

    #[test]
    fn abel_for_damped_operator() {
        let g = make_grid(0.0, 1.0, 200).unwrap();
        let op = DifferentialOperator::new(vec![coeff(|x| 2.0 * x * x + 2.0), coeff(|x| 3.0 * x)]).unwrap();
        let abel = abel_wronskian(&op, &g).unwrap();
        for (v, x) in abel.values().iter().zip(g.nodes()) {
            assert!((v - (-1.5 * x * x).exp()).abs() < 1e-12);
        }
        let t = build_greens(&op, &g, &SeriesOptions::default()).unwrap();
        let w = wronskian_samples(&fundamental_solutions(&op, &t).unwrap()).unwrap();
        for (d, a) in w.values().iter().zip(abel.values()) {
            assert!(((d - a) / a).abs() < 1e-7);
        }
    }

    #[test]
    fn ivp_matches_greens_application() {
        let g = make_grid(0.0, 1.0, 100).unwrap();
        let op = DifferentialOperator::new(vec![coeff(|x| x.cos()), coeff(|x| x)]).unwrap();
        let rhs = GridFunction::from_fn(&g, |x| (2.0 * x).sin()).unwrap();
        let sol = solve_ivp(&op, &rhs, &InitialConditions::zero(2, 0.0)).unwrap();
        let t = build_greens(&op, &g, &SeriesOptions::default()).unwrap();
        let y = zero_data_solution(&t, &rhs).unwrap();
        let d = sol.y.sub(&y).unwrap().sup_norm();
        assert!(d < 1e-8, "{d:e}");
    }
}
