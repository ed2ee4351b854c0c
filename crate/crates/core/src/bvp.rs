//! Dirichlet Green's function of `∂² - P` on `[a, b]`.
//!
//! `u1` solves the homogeneous equation with `u1(a) = 0`, `u1'(a) = 1` and is
//! the column `T(·, a)` of the causal Green's function. `u2` has
//! `u2(b) = 0`, `u2'(b) = 1` and comes from the same construction on the
//! reflected interval `t = a + b - x`, so every solve marches forward. Then
//! `G(x, y) = u1(min(x, y)) u2(max(x, y)) / W` with the constant Wronskian
//! `W = u1 u2' - u1' u2 = -u2(a)`.

use crate::error::{Error, Result};
use crate::greens::build_greens;
use crate::grid::{cumulative_integral, make_grid, GridFunction, GridSpec};
use crate::operator::{coeff, Coefficient, DifferentialOperator};
use crate::volterra::SeriesOptions;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq)]
pub struct SturmLiouvilleGreens {
    pub grid: GridSpec,
    pub u1: GridFunction,
    pub u1_prime: GridFunction,
    pub u2: GridFunction,
    pub u2_prime: GridFunction,
    pub w_const: f64,
    // dense row-major (N+1)²
    g: Vec<f64>,
}

impl SturmLiouvilleGreens {
    /// `G(x_i, x_j)`.
    pub fn g(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.grid.n_nodes() + j]
    }

    /// Row-major samples of `G`.
    pub fn matrix(&self) -> &[f64] {
        &self.g
    }

    /// `u1 u2' - u1' u2` on every node.
    pub fn wronskian_samples(&self) -> Result<GridFunction> {
        let n = self.grid.n_nodes();
        let values = (0..n)
            .map(|i| self.u1.get(i) * self.u2_prime.get(i) - self.u1_prime.get(i) * self.u2.get(i))
            .collect();
        GridFunction::new(&self.grid, values)
    }

    /// `sup |G - Gᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.grid.n_nodes();
        let mut m = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                m = m.max((self.g(i, j) - self.g(j, i)).abs());
            }
        }
        m
    }
}

/// `(T(x, a), ∂T(x, a))` for `∂² - P` on `grid`.
fn anchored(p: &Coefficient, grid: &GridSpec, opts: &SeriesOptions) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = Arc::clone(p);
    let op = DifferentialOperator::new(vec![coeff(move |x| -p(x)), coeff(|_| 0.0)])?;
    let t = build_greens(&op, grid, opts)?;
    let d = t.derivative(1)?;
    Ok((t.kernel().column(0), d.column(0)))
}

/// Wronskian and its scale for the two anchored solutions on `grid`.
fn wronskian_parts(p: &Coefficient, grid: &GridSpec, opts: &SeriesOptions) -> Result<[Vec<f64>; 4]> {
    let a = grid.a();
    let b = grid.b();
    let (u1, u1p) = anchored(p, grid, opts)?;
    let q = Arc::clone(p);
    let reflected: Coefficient = coeff(move |t| q(a + b - t));
    let (v, vp) = anchored(&reflected, grid, opts)?;
    let last = grid.n_intervals();
    // x = a + b - t: u2(x) = -v(t), u2'(x) = v'(t)
    let u2: Vec<f64> = (0..=last).map(|i| -v[last - i]).collect();
    let u2p: Vec<f64> = (0..=last).map(|i| vp[last - i]).collect();
    Ok([u1, u1p, u2, u2p])
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Green's function of `(∂² - P) y = g`, `y(a) = y(b) = 0`.
///
/// Fails with [`Error::Resonant`] when the Wronskian cannot be told apart
/// from zero: either below `1e-12` of its natural scale, or within ten times
/// its own discretisation error, estimated by repeating the construction on
/// a grid of half the resolution.
pub fn sturm_liouville_greens(
    p: &Coefficient,
    a: f64,
    b: f64,
    n_intervals: usize,
    opts: &SeriesOptions,
) -> Result<SturmLiouvilleGreens> {
    let grid = make_grid(a, b, n_intervals)?;
    let [u1, u1p, u2, u2p] = wronskian_parts(p, &grid, opts)?;
    let w = -u2[0];
    let scale = sup(&u1) * sup(&u2p) + sup(&u1p) * sup(&u2);
    let mut resonant = !(w.abs() >= 1e-12 * scale);
    if !resonant && n_intervals >= 8 {
        let coarse = make_grid(a, b, 2 * (n_intervals / 4))?;
        let [_, _, c2, _] = wronskian_parts(p, &coarse, opts)?;
        let ratio = n_intervals as f64 / coarse.n_intervals() as f64;
        let err = (w + c2[0]).abs() / (ratio.powi(4) - 1.0);
        resonant = w.abs() <= 10.0 * err;
    }
    if resonant {
        return Err(Error::Resonant { w, scale });
    }
    let n = grid.n_nodes();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
            // + 0.0 turns the -0.0 of the boundary rows into 0.0
            g[i * n + j] = u1[lo] * u2[hi] / w + 0.0;
        }
    }
    Ok(SturmLiouvilleGreens {
        u1: GridFunction::new(&grid, u1)?,
        u1_prime: GridFunction::new(&grid, u1p)?,
        u2: GridFunction::new(&grid, u2)?,
        u2_prime: GridFunction::new(&grid, u2p)?,
        grid,
        w_const: w,
        g,
    })
}

/// `y(x) = ∫_a^b G(x, y) g(y) dy`, split at the kink `y = x`:
/// `y = (u2(x) ∫_a^x u1 g - u1(x) ∫_b^x u2 g) / W`.
pub fn solve_bvp(slg: &SturmLiouvilleGreens, g: &GridFunction) -> Result<GridFunction> {
    if *g.grid() != slg.grid {
        return Err(Error::GridMismatch);
    }
    let last = slg.grid.n_intervals();
    let c1 = cumulative_integral(&slg.u1.zip_with(g, |u, v| u * v)?, 0)?;
    let c2 = cumulative_integral(&slg.u2.zip_with(g, |u, v| u * v)?, last)?;
    let values = (0..=last)
        .map(|i| (slg.u2.get(i) * c1.get(i) - slg.u1.get(i) * c2.get(i)) / slg.w_const)
        .collect();
    GridFunction::new(&slg.grid, values)
}
