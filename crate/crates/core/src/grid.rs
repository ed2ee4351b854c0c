//! Uniform grids, sampled functions and kernels, and the quadrature rules
//! shared by every integral in the crate.
//!
//! An integral over `[x_j, x_i]` spanning `m = i - j` panels uses composite
//! Simpson when `m` is even and Simpson followed by a closing 3/8 block when
//! `m` is odd and at least 3. A single panel (`m = 1`) has only two interior
//! samples, so it is integrated by interpolating each factor of the integrand
//! separately through up to four nodes that the factor actually has data for
//! (see [`Window`]) and integrating the product of the interpolants exactly.
//! With only two nodes available this reduces to the trapezoid rule.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::Arc;

/// Uniform discretization of `[a, b]` with `N + 1` nodes.
#[derive(Clone, Debug)]
pub struct GridSpec {
    a: f64,
    b: f64,
    n: usize,
    step: f64,
    nodes: Arc<[f64]>,
}

impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b && self.n == other.n
    }
}

/// Builds a grid of `n_intervals` equal panels on `[a, b]`.
pub fn make_grid(a: f64, b: f64, n_intervals: usize) -> Result<GridSpec> {
    GridSpec::new(a, b, n_intervals)
}

impl GridSpec {
    pub fn new(a: f64, b: f64, n_intervals: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::DegenerateInterval { a, b });
        }
        if n_intervals < 2 || n_intervals % 2 != 0 {
            return Err(Error::InvalidIntervals(n_intervals));
        }
        let step = (b - a) / n_intervals as f64;
        let nodes: Arc<[f64]> = (0..=n_intervals)
            .map(|i| if i == n_intervals { b } else { a + i as f64 * step })
            .collect();
        Ok(Self {
            a,
            b,
            n: n_intervals,
            step,
            nodes,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n_intervals(&self) -> usize {
        self.n
    }

    pub fn n_nodes(&self) -> usize {
        self.n + 1
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    /// Index of the node closest to `x`, if `x` lies within `rel_tol * step`
    /// of it.
    pub fn snap(&self, x: f64, rel_tol: f64) -> Option<usize> {
        let t = ((x - self.a) / self.step).round();
        if t < 0.0 || t > self.n as f64 {
            return None;
        }
        let i = t as usize;
        ((self.nodes[i] - x).abs() <= rel_tol * self.step).then_some(i)
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i > self.n {
            Err(Error::IndexOutOfRange {
                index: i,
                limit: self.n,
            })
        } else {
            Ok(())
        }
    }
}

/// Samples of a one-variable function on the nodes of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<S = f64> {
    grid: GridSpec,
    values: Vec<S>,
}

impl<S: Scalar> GridFunction<S> {
    pub fn new(grid: &GridSpec, values: Vec<S>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::LengthMismatch {
                expected: grid.n_nodes(),
                got: values.len(),
            });
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample {
                node,
                x: grid.node(node),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn from_fn(grid: &GridSpec, f: impl Fn(f64) -> S) -> Result<Self> {
        Self::new(grid, grid.nodes().iter().map(|&x| f(x)).collect())
    }

    pub fn constant(grid: &GridSpec, c: S) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.n_nodes()],
        }
    }

    pub(crate) fn from_raw(grid: &GridSpec, values: Vec<S>) -> Result<Self> {
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    pub fn get(&self, i: usize) -> S {
        self.values[i]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.modulus()))
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Result<Self> {
        Self::new(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two functions on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(S, S) -> S) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Self::new(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: S) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| v * c).collect(),
        }
    }

    pub fn to_complex(&self) -> GridFunction<Complex64> {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.to_complex()).collect(),
        }
    }
}

/// Continuation of a kernel a short way past the diagonal: `first[i]` is
/// `K(x_i, x_{i+1})`, `second[i]` is `K(x_i, x_{i+2})`. Only kernels given by
/// a formula valid on the whole square carry one.
#[derive(Clone, Debug, PartialEq)]
struct Lookahead<S> {
    first: Vec<S>,
    second: Vec<S>,
}

/// Sampled bivariate kernel on a grid, `K(x_i, x_j)` for `i >= j`.
///
/// Stored dense and row-major; entries with `i < j` are zero. Kernels built
/// from a closed formula may additionally carry their values on the first
/// two super-diagonals, which the single-panel rule uses for interpolation.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangularKernel<S = f64> {
    grid: GridSpec,
    samples: Vec<S>,
    lookahead: Option<Lookahead<S>>,
}

impl<S: Scalar> TriangularKernel<S> {
    pub fn zeros(grid: &GridSpec) -> Self {
        let n = grid.n_nodes();
        Self {
            grid: grid.clone(),
            samples: vec![S::zero(); n * n],
            lookahead: None,
        }
    }

    /// Samples `f(x_i, x_j)` on the lower triangle.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(f64, f64) -> S + Sync) -> Result<Self> {
        let mut k = Self::zeros(grid);
        let n = grid.n_nodes();
        let nodes = grid.nodes();
        k.samples
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, row)| {
                for (j, s) in row.iter_mut().enumerate().take(i + 1) {
                    *s = f(nodes[i], nodes[j]);
                }
            });
        k.check_finite()?;
        Ok(k)
    }

    /// Samples a kernel whose formula is valid on the whole square, keeping
    /// its values on the first two super-diagonals as well.
    pub fn from_analytic_fn(grid: &GridSpec, f: impl Fn(f64, f64) -> S + Sync) -> Result<Self> {
        let nodes = grid.nodes();
        Self::from_index_fn(grid, |i, j| f(nodes[i], nodes[j]))
    }

    /// Like [`from_analytic_fn`](Self::from_analytic_fn) but indexed by node
    /// numbers, for formulas built from sampled data.
    pub(crate) fn from_index_fn(grid: &GridSpec, f: impl Fn(usize, usize) -> S + Sync) -> Result<Self> {
        let mut k = Self::zeros(grid);
        let n = grid.n_intervals();
        k.samples
            .par_chunks_mut(n + 1)
            .enumerate()
            .for_each(|(i, row)| {
                for (j, s) in row.iter_mut().enumerate().take(i + 1) {
                    *s = f(i, j);
                }
            });
        k.check_finite()?;
        let first: Vec<S> = (0..n).map(|i| f(i, i + 1)).collect();
        let second: Vec<S> = (0..n - 1).map(|i| f(i, i + 2)).collect();
        for (d, v) in first.iter().chain(second.iter()).enumerate() {
            if !v.is_finite() {
                let (i, j) = if d < n { (d, d + 1) } else { (d - n, d - n + 2) };
                return Err(Error::NonFiniteKernel { i, j });
            }
        }
        k.lookahead = Some(Lookahead { first, second });
        Ok(k)
    }

    /// Builds a kernel from a dense row-major `(N+1)^2` matrix; entries above
    /// the diagonal are discarded.
    pub fn from_samples(grid: &GridSpec, mut samples: Vec<S>) -> Result<Self> {
        let n = grid.n_nodes();
        if samples.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                got: samples.len(),
            });
        }
        for i in 0..n {
            for s in &mut samples[i * n + i + 1..(i + 1) * n] {
                *s = S::zero();
            }
        }
        let k = Self {
            grid: grid.clone(),
            samples,
            lookahead: None,
        };
        k.check_finite()?;
        Ok(k)
    }

    fn check_finite(&self) -> Result<()> {
        let n = self.grid.n_nodes();
        match self.samples.iter().position(|v| !v.is_finite()) {
            Some(p) => Err(Error::NonFiniteKernel { i: p / n, j: p % n }),
            None => Ok(()),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn n_nodes(&self) -> usize {
        self.grid.n_nodes()
    }

    /// `K(x_i, x_j)` for `i >= j`, zero above the diagonal.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.samples[i * self.grid.n_nodes() + j]
    }

    pub fn samples(&self) -> &[S] {
        &self.samples
    }

    pub fn has_lookahead(&self) -> bool {
        self.lookahead.is_some()
    }

    /// Drops the super-diagonal continuation, leaving a purely causal kernel.
    pub fn without_lookahead(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            samples: self.samples.clone(),
            lookahead: None,
        }
    }

    /// Value at `(i, j)` including the continuation, when it exists.
    pub fn continued(&self, i: usize, j: usize) -> Option<S> {
        if i >= j {
            return Some(self.get(i, j));
        }
        let la = self.lookahead.as_ref()?;
        match j - i {
            1 => Some(la.first[i]),
            2 => Some(la.second[i]),
            _ => None,
        }
    }

    pub fn row(&self, i: usize) -> &[S] {
        let n = self.grid.n_nodes();
        &self.samples[i * n..i * n + i + 1]
    }

    /// `K(x_i, x_j)` for `i = j..=N`.
    pub fn column(&self, j: usize) -> Vec<S> {
        (j..self.n_nodes()).map(|i| self.get(i, j)).collect()
    }

    /// Sup norm over the lower triangle.
    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.modulus()))
    }

    pub fn map(&self, f: impl Fn(S) -> S + Sync) -> Self {
        let lookahead = self.lookahead.as_ref().map(|la| Lookahead {
            first: la.first.iter().map(|&v| f(v)).collect(),
            second: la.second.iter().map(|&v| f(v)).collect(),
        });
        let n = self.n_nodes();
        let mut samples = self.samples.clone();
        for i in 0..n {
            for s in &mut samples[i * n..i * n + i + 1] {
                *s = f(*s);
            }
        }
        Self {
            grid: self.grid.clone(),
            samples,
            lookahead,
        }
    }

    pub fn scale(&self, c: S) -> Self {
        self.map(|v| v * c)
    }

    /// Entrywise combination; the continuation survives only if both carry one.
    pub fn zip_with(&self, other: &Self, f: impl Fn(S, S) -> S) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let lookahead = match (&self.lookahead, &other.lookahead) {
            (Some(p), Some(q)) => Some(Lookahead {
                first: p.first.iter().zip(&q.first).map(|(&a, &b)| f(a, b)).collect(),
                second: p.second.iter().zip(&q.second).map(|(&a, &b)| f(a, b)).collect(),
            }),
            _ => None,
        };
        let n = self.n_nodes();
        let mut samples = vec![S::zero(); n * n];
        for i in 0..n {
            for j in 0..=i {
                samples[i * n + j] = f(self.get(i, j), other.get(i, j));
            }
        }
        let k = Self {
            grid: self.grid.clone(),
            samples,
            lookahead,
        };
        k.check_finite()?;
        Ok(k)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Multiplies row `i` by `w(x_i)`; a continuation is scaled along.
    pub fn scale_rows(&self, w: &[S]) -> Self {
        let n = self.n_nodes();
        let mut out = self.clone();
        for i in 0..n {
            for s in &mut out.samples[i * n..i * n + i + 1] {
                *s = *s * w[i];
            }
        }
        if let Some(la) = out.lookahead.as_mut() {
            for (i, v) in la.first.iter_mut().enumerate() {
                *v = *v * w[i];
            }
            for (i, v) in la.second.iter_mut().enumerate() {
                *v = *v * w[i];
            }
        }
        out
    }

    /// Sup norm of the difference over the lower triangle.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .fold(0.0, |m, (&a, &b)| m.max((a - b).modulus())))
    }

    pub fn to_complex(&self) -> TriangularKernel<Complex64> {
        TriangularKernel {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|v| v.to_complex()).collect(),
            lookahead: self.lookahead.as_ref().map(|la| Lookahead {
                first: la.first.iter().map(|v| v.to_complex()).collect(),
                second: la.second.iter().map(|v| v.to_complex()).collect(),
            }),
        }
    }

    /// Value at `(i, j)` including data the quadrature may borrow from
    /// outside the stored triangle: the continuation of a formula kernel, or
    /// for a causal kernel a cubic extrapolation along its line of constant
    /// lag `i - j` past either end of the grid.
    pub(crate) fn extended(&self, i: isize, j: isize) -> Option<S> {
        let n = self.grid.n_intervals();
        if i >= 0 && j >= 0 && (i as usize) <= n && (j as usize) <= n {
            return self.continued(i as usize, j as usize);
        }
        if self.has_lookahead() {
            return None;
        }
        lag_extend(n, i, j, |a, b| self.get(a, b))
    }

    /// Value of the outer-factor data at `(i, p + o)` for the panel starting
    /// at node `p`; the caller guarantees availability via the window choice.
    #[inline]
    pub(crate) fn outer_at(&self, i: usize, p: usize, o: isize) -> S {
        self.extended(i as isize, p as isize + o)
            .expect("outer window outside kernel data")
    }

    /// Value of the inner-factor data at `(j + o, j)`.
    #[inline]
    pub(crate) fn inner_at(&self, j: usize, o: isize) -> S {
        self.extended(j as isize + o, j as isize)
            .expect("inner window outside kernel data")
    }

    /// Offsets (relative to panel start `p`) usable for row `i = p + 1`.
    ///
    /// A kernel with a continuation looks right of the panel and never left
    /// of it, so column `j` of a resolvent depends on the kernel only through
    /// `z >= x_j`; the last two panels have no room on the right and fall
    /// back to the left. A causal kernel looks left, past `a` if need be.
    pub(crate) fn outer_range(&self, p: usize) -> (isize, isize) {
        let room = (self.grid.n_intervals() - p) as isize;
        match (self.has_lookahead(), room >= 3) {
            (true, true) => (0, 3),
            (true, false) => (-(p as isize), room),
            (false, _) => (-(p.max(self.lag_reach(2)) as isize), 1),
        }
    }

    /// Offsets (relative to `j`) at which column `j` has data.
    pub(crate) fn inner_range(&self, j: usize) -> (isize, isize) {
        let n = self.grid.n_intervals();
        if self.has_lookahead() {
            (-(j.min(2) as isize), (n - j) as isize)
        } else {
            (0, (n - j).max(self.lag_reach(3)) as isize)
        }
    }

    /// `reach` if lines of lag up to 3 hold enough samples to extrapolate.
    fn lag_reach(&self, reach: usize) -> usize {
        if self.grid.n_intervals() >= LAG_MIN_INTERVALS {
            reach
        } else {
            0
        }
    }
}

/// Grids with fewer intervals do not extrapolate causal kernels.
pub(crate) const LAG_MIN_INTERVALS: usize = 6;

/// Cubic extrapolation of `K(x_i, x_j)` along the line `i - j = const` from
/// the four nearest stored samples, for a point beyond the grid.
pub(crate) fn lag_extend<S: Scalar>(n: usize, i: isize, j: isize, get: impl Fn(usize, usize) -> S) -> Option<S> {
    let d = i - j;
    if d < 0 || n < d as usize + 3 {
        return None;
    }
    let top = n as isize - d;
    // nodes base + dir * k, k = 0..3; target at k = t
    let (base, dir, t) = if j < 0 {
        (0, 1, j as f64)
    } else if j > top {
        (top, -1, (top - j) as f64)
    } else {
        return None;
    };
    let mut acc = S::zero();
    for k in 0..4 {
        let w = (0..4)
            .filter(|&m| m != k)
            .fold(1.0, |w, m| w * (t - m as f64) / (k as f64 - m as f64));
        let l = (base + dir * k as isize) as usize;
        acc += get(l + d as usize, l) * w;
    }
    Some(acc)
}

impl TriangularKernel<Complex64> {
    pub fn re(&self) -> TriangularKernel<f64> {
        TriangularKernel {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|v| v.re).collect(),
            lookahead: self.lookahead.as_ref().map(|la| Lookahead {
                first: la.first.iter().map(|v| v.re).collect(),
                second: la.second.iter().map(|v| v.re).collect(),
            }),
        }
    }

    pub fn im_sup_norm(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.im.abs()))
    }
}

// ---------------------------------------------------------------------------
// Quadrature rules

/// Weight (in units of the step) of node `k` in the composite rule over `m`
/// panels with nodes `0..=m`.
pub(crate) fn composite_weight(m: usize, k: usize) -> f64 {
    debug_assert!(k <= m);
    fn simpson(e: usize, k: usize) -> f64 {
        if e == 0 || k > e {
            0.0
        } else if k == 0 || k == e {
            1.0 / 3.0
        } else if k % 2 == 1 {
            4.0 / 3.0
        } else {
            2.0 / 3.0
        }
    }
    match m {
        0 => 0.0,
        1 => 0.5,
        _ if m % 2 == 0 => simpson(m, k),
        _ => {
            let e = m - 3;
            let tail = if k >= e {
                [0.375, 1.125, 1.125, 0.375][k - e]
            } else {
                0.0
            };
            simpson(e, k) + tail
        }
    }
}

/// Composite sum `sum_k w(m, k) f(k)` for `m >= 2`.
#[inline]
pub(crate) fn composite_sum<S: Scalar>(m: usize, f: impl Fn(usize) -> S) -> S {
    debug_assert!(m >= 2);
    if m % 2 == 0 {
        return simpson_sum(m, &f);
    }
    let e = m - 3;
    let head = if e > 0 { simpson_sum(e, &f) } else { S::zero() };
    head + (f(e) + f(m)) * 0.375 + (f(e + 1) + f(e + 2)) * 1.125
}

#[inline]
fn simpson_sum<S: Scalar>(m: usize, f: &impl Fn(usize) -> S) -> S {
    let (mut odd, mut even) = (S::zero(), S::zero());
    for k in 1..m {
        if k % 2 == 1 {
            odd += f(k);
        } else {
            even += f(k);
        }
    }
    (f(0) + f(m)) * (1.0 / 3.0) + odd * (4.0 / 3.0) + even * (2.0 / 3.0)
}

/// Consecutive integer nodes (offsets from a panel's left node) used to
/// interpolate one factor over the panel `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Window {
    pub start: isize,
    pub len: usize,
}

impl Window {
    /// Picks the widest window inside the available offsets `[lo, hi]`,
    /// preferring centred over right-leaning over left-leaning placement.
    pub fn choose(lo: isize, hi: isize) -> Window {
        const CANDIDATES: [(isize, usize); 6] = [(-1, 4), (0, 4), (-2, 4), (0, 3), (-1, 3), (0, 2)];
        for &(start, len) in &CANDIDATES {
            if start >= lo && start + len as isize - 1 <= hi {
                return Window { start, len };
            }
        }
        unreachable!("panel endpoints are always available")
    }

    pub fn offsets(self) -> impl Iterator<Item = isize> {
        (0..self.len as isize).map(move |k| self.start + k)
    }

    fn lagrange(self, a: usize, t: f64) -> f64 {
        let oa = (self.start + a as isize) as f64;
        self.offsets()
            .enumerate()
            .filter(|&(c, _)| c != a)
            .fold(1.0, |acc, (_, oc)| acc * (t - oc as f64) / (oa - oc as f64))
    }
}

// Four-point Gauss-Legendre on [0, 1]; exact for the degree-6 product of two
// cubic interpolants.
const GL_NODES: [f64; 4] = [
    0.069_431_844_202_973_71,
    0.330_009_478_207_571_87,
    0.669_990_521_792_428_1,
    0.930_568_155_797_026_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.173_927_422_568_726_93,
    0.326_072_577_431_273_07,
    0.326_072_577_431_273_07,
    0.173_927_422_568_726_93,
];

/// `M[a][b] = ∫_0^1 l_a(t) m_b(t) dt` for the Lagrange bases of the two
/// windows, in units of the step.
pub(crate) fn panel_matrix(outer: Window, inner: Window) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    for (&t, &w) in GL_NODES.iter().zip(&GL_WEIGHTS) {
        for (a, row) in m.iter_mut().enumerate().take(outer.len) {
            let la = outer.lagrange(a, t) * w;
            for (b, cell) in row.iter_mut().enumerate().take(inner.len) {
                *cell += la * inner.lagrange(b, t);
            }
        }
    }
    m
}

/// Weights for a single factor over one panel, in units of the step.
pub(crate) fn panel_weights(window: Window) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (&t, &w) in GL_NODES.iter().zip(&GL_WEIGHTS) {
        for (b, o) in out.iter_mut().enumerate().take(window.len) {
            *o += w * window.lagrange(b, t);
        }
    }
    out
}

/// Weights on the outer factor's window after contracting with its samples:
/// `c_b = step * sum_a A_a M[a][b]`. Used by the single-panel rule.
pub(crate) fn contract_outer<S: Scalar>(
    a_vals: &[S; 4],
    m: &[[f64; 4]; 4],
    outer: Window,
    inner: Window,
    step: f64,
) -> [S; 4] {
    let mut c = [S::zero(); 4];
    for (b, cb) in c.iter_mut().enumerate().take(inner.len) {
        let mut acc = S::zero();
        for (a, av) in a_vals.iter().enumerate().take(outer.len) {
            acc += *av * m[a][b];
        }
        *cb = acc * step;
    }
    c
}

/// `F[i] = ∫_{x_from}^{x_i} f(z) dz` (negative orientation for `i < from`).
pub fn cumulative_integral<S: Scalar>(f: &GridFunction<S>, from_index: usize) -> Result<GridFunction<S>> {
    let grid = f.grid();
    grid.check_index(from_index)?;
    let v = f.values();
    let n = grid.n_intervals();
    let h = grid.step();
    let out = (0..=n)
        .map(|i| {
            let (lo, hi, sign) = if i >= from_index {
                (from_index, i, 1.0)
            } else {
                (i, from_index, -1.0)
            };
            let m = hi - lo;
            let val = match m {
                0 => S::zero(),
                1 => {
                    let w = Window::choose(-(lo as isize), (n - lo) as isize);
                    let pw = panel_weights(w);
                    w.offsets()
                        .zip(pw)
                        .fold(S::zero(), |acc, (o, c)| acc + v[(lo as isize + o) as usize] * c)
                }
                _ => composite_sum(m, |k| v[lo + k]),
            };
            val * (sign * h)
        })
        .collect();
    GridFunction::from_raw(grid, out)
}

/// `C(x_i, x_j) = ∫_{x_j}^{x_i} A(x_i, z) B(z, x_j) dz` on the lower triangle.
pub fn kernel_compose<S: Scalar>(outer: &TriangularKernel<S>, inner: &TriangularKernel<S>) -> Result<TriangularKernel<S>> {
    if outer.grid != inner.grid {
        return Err(Error::GridMismatch);
    }
    let grid = outer.grid.clone();
    let n = grid.n_nodes();
    let h = grid.step();
    // column-major copy of the inner kernel so that B(., x_j) is contiguous
    let mut bt = vec![S::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            bt[j * n + i] = inner.get(i, j);
        }
    }
    let mut samples = vec![S::zero(); n * n];
    samples.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let arow = outer.row(i);
        for (j, cell) in row.iter_mut().enumerate().take(i) {
            let m = i - j;
            let bcol = &bt[j * n..(j + 1) * n];
            *cell = if m == 1 {
                single_panel(outer, inner, j, h)
            } else {
                composite_sum(m, |k| arow[j + k] * bcol[j + k]) * h
            };
        }
    });
    let k = TriangularKernel {
        grid,
        samples,
        lookahead: None,
    };
    k.check_finite()?;
    Ok(k)
}

fn single_panel<S: Scalar>(outer: &TriangularKernel<S>, inner: &TriangularKernel<S>, j: usize, h: f64) -> S {
    let (olo, ohi) = outer.outer_range(j);
    let (ilo, ihi) = inner.inner_range(j);
    let ow = Window::choose(olo, ohi);
    let iw = Window::choose(ilo, ihi);
    let m = panel_matrix(ow, iw);
    let mut a_vals = [S::zero(); 4];
    for (slot, o) in a_vals.iter_mut().zip(ow.offsets()) {
        *slot = outer.outer_at(j + 1, j, o);
    }
    let c = contract_outer(&a_vals, &m, ow, iw, h);
    iw.offsets()
        .zip(c)
        .fold(S::zero(), |acc, (o, cb)| acc + cb * inner.inner_at(j, o))
}

/// `y(x_i) = ∫_{x_start}^{x_i} A(x_i, z) g(z) dz` for `i >= start`; zero below.
pub(crate) fn kernel_apply_from<S: Scalar>(a: &TriangularKernel<S>, g: &[S], start: usize) -> Vec<S> {
    let n = a.n_nodes();
    let h = a.grid.step();
    let last = n - 1;
    (0..n)
        .into_par_iter()
        .map(|i| {
            if i <= start {
                return S::zero();
            }
            let m = i - start;
            if m == 1 {
                let (olo, ohi) = a.outer_range(start);
                let ow = Window::choose(olo, ohi);
                let iw = Window::choose(-(start as isize), (last - start) as isize);
                let mm = panel_matrix(ow, iw);
                let mut a_vals = [S::zero(); 4];
                for (slot, o) in a_vals.iter_mut().zip(ow.offsets()) {
                    *slot = a.outer_at(i, start, o);
                }
                let c = contract_outer(&a_vals, &mm, ow, iw, h);
                iw.offsets()
                    .zip(c)
                    .fold(S::zero(), |acc, (o, cb)| acc + cb * g[(start as isize + o) as usize])
            } else {
                let row = a.row(i);
                composite_sum(m, |k| row[start + k] * g[start + k]) * h
            }
        })
        .collect()
}

/// `y(x_i) = ∫_a^{x_i} A(x_i, z) g(z) dz`.
pub fn kernel_apply<S: Scalar>(a: &TriangularKernel<S>, g: &GridFunction<S>) -> Result<GridFunction<S>> {
    if a.grid != *g.grid() {
        return Err(Error::GridMismatch);
    }
    GridFunction::from_raw(&a.grid, kernel_apply_from(a, g.values(), 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(a: f64, b: f64, n: usize) -> GridSpec {
        make_grid(a, b, n).unwrap()
    }

    #[test]
    fn make_grid_nodes() {
        assert_eq!(grid(0.0, 1.0, 4).nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(grid(-1.0, 1.0, 2).nodes(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn make_grid_rejects_bad_input() {
        assert_eq!(
            make_grid(0.0, 0.0, 4).unwrap_err(),
            Error::DegenerateInterval { a: 0.0, b: 0.0 }
        );
        assert!(matches!(make_grid(1.0, 0.0, 4), Err(Error::DegenerateInterval { .. })));
        assert_eq!(make_grid(0.0, 1.0, 3).unwrap_err(), Error::InvalidIntervals(3));
        assert_eq!(make_grid(0.0, 1.0, 0).unwrap_err(), Error::InvalidIntervals(0));
    }

    #[test]
    fn nodes_equispaced() {
        let g = grid(-0.3, 2.7, 300);
        for w in g.nodes().windows(2) {
            assert!(w[1] > w[0]);
            assert!(((w[1] - w[0]) - g.step()).abs() <= 4.0 * f64::EPSILON * 2.7);
        }
    }

    #[test]
    fn composite_weights_sum_to_span() {
        for m in 1..40 {
            let s: f64 = (0..=m).map(|k| composite_weight(m, k)).sum();
            assert!((s - m as f64).abs() < 1e-13, "m = {m}");
            let f: f64 = composite_sum(m.max(2), |_| 1.0);
            assert!((f - m.max(2) as f64).abs() < 1e-13);
        }
    }

    #[test]
    fn composite_sum_matches_weights() {
        for m in 2..30 {
            let f = |k: usize| (k as f64 * 0.37).sin();
            let direct: f64 = (0..=m).map(|k| composite_weight(m, k) * f(k)).sum();
            assert!((composite_sum(m, f) - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn cumulative_of_one() {
        let g = grid(0.0, 1.0, 4);
        let f = GridFunction::constant(&g, 1.0);
        let c = cumulative_integral(&f, 0).unwrap();
        for (a, b) in c.values().iter().zip([0.0, 0.25, 0.5, 0.75, 1.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn cumulative_of_linear_is_exact() {
        let g = grid(0.0, 1.0, 4);
        let f = GridFunction::from_fn(&g, |x| x).unwrap();
        let c = cumulative_integral(&f, 0).unwrap();
        assert!((c.get(4) - 0.5).abs() < 1e-12);
        for (i, &x) in g.nodes().iter().enumerate() {
            assert!((c.get(i) - x * x / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn cumulative_of_exp() {
        let g = grid(0.0, 1.0, 64);
        let f = GridFunction::from_fn(&g, f64::exp).unwrap();
        let c = cumulative_integral(&f, 0).unwrap();
        assert!((c.get(64) - (std::f64::consts::E - 1.0)).abs() < 1e-8);
    }

    #[test]
    fn cumulative_orientation_and_start() {
        let g = grid(0.0, 2.0, 20);
        let f = GridFunction::from_fn(&g, |x| (3.0 * x).cos() + x * x).unwrap();
        for j in [0, 1, 7, 19, 20] {
            let cj = cumulative_integral(&f, j).unwrap();
            assert_eq!(cj.get(j), 0.0);
            for i in 0..=20 {
                let ci = cumulative_integral(&f, i).unwrap();
                assert_eq!(cj.get(i), -ci.get(j));
            }
        }
    }

    #[test]
    fn cumulative_order_on_exp() {
        let err = |n: usize| {
            let g = grid(0.0, 1.0, n);
            let f = GridFunction::from_fn(&g, f64::exp).unwrap();
            let c = cumulative_integral(&f, 0).unwrap();
            c.values()
                .iter()
                .zip(g.nodes())
                .fold(0.0f64, |m, (v, x)| m.max((v - (x.exp() - 1.0)).abs()))
        };
        for n in [16, 32, 64] {
            assert!(err(n) / err(2 * n) >= 8.0, "n = {n}");
        }
    }

    #[test]
    fn compose_of_ones_is_length() {
        let g = grid(0.0, 1.0, 10);
        let one = TriangularKernel::from_fn(&g, |_, _| 1.0).unwrap();
        let c = kernel_compose(&one, &one).unwrap();
        for i in 0..=10 {
            for j in 0..=i {
                assert!((c.get(i, j) - (g.node(i) - g.node(j))).abs() < 1e-14);
            }
            for j in i + 1..=10 {
                assert_eq!(c.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn compose_linear_kernels() {
        let g = grid(0.0, 1.0, 64);
        let a = TriangularKernel::from_fn(&g, |x, z| x - z).unwrap();
        let b = TriangularKernel::from_fn(&g, |z, y| z - y).unwrap();
        let c = kernel_compose(&a, &b).unwrap();
        for i in 0..=64 {
            for j in 0..=i {
                let d = g.node(i) - g.node(j);
                assert!((c.get(i, j) - d.powi(3) / 6.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn compose_with_zero() {
        let g = grid(0.0, 1.0, 8);
        let a = TriangularKernel::from_fn(&g, |x, z| (x * z).exp()).unwrap();
        let z = TriangularKernel::zeros(&g);
        assert_eq!(kernel_compose(&a, &z).unwrap().sup_norm(), 0.0);
        assert_eq!(kernel_compose(&z, &a).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn compose_grid_mismatch() {
        let a = TriangularKernel::<f64>::zeros(&grid(0.0, 1.0, 8));
        let b = TriangularKernel::<f64>::zeros(&grid(0.0, 1.0, 10));
        assert_eq!(kernel_compose(&a, &b).unwrap_err(), Error::GridMismatch);
    }

    #[test]
    fn lookahead_continuation() {
        let g = grid(0.0, 1.0, 4);
        let k = TriangularKernel::from_analytic_fn(&g, |x, y| x - 2.0 * y).unwrap();
        assert_eq!(k.get(1, 2), 0.0);
        assert_eq!(k.continued(1, 2), Some(0.25 - 1.0));
        assert_eq!(k.continued(1, 3), Some(0.25 - 1.5));
        assert_eq!(k.continued(1, 4), None);
        assert_eq!(k.without_lookahead().continued(1, 2), None);
    }

    #[test]
    fn panel_rule_is_exact_for_polynomials() {
        // product of a cubic and a cubic over one panel, both centred
        let w = Window { start: -1, len: 4 };
        let m = panel_matrix(w, w);
        let f = |t: f64| 1.0 + t - t * t * t;
        let g = |t: f64| 2.0 - t * t;
        let approx: f64 = (0..4)
            .flat_map(|a| (0..4).map(move |b| (a, b)))
            .map(|(a, b)| f((a as isize - 1) as f64) * m[a][b] * g((b as isize - 1) as f64))
            .sum();
        // ∫_0^1 (1 + t - t^3)(2 - t^2) dt
        let exact = 2.0 + 1.0 - 0.5 - 1.0 / 3.0 - 0.25 + 1.0 / 6.0;
        assert!((approx - exact).abs() < 1e-14);
    }

    #[test]
    fn window_preferences() {
        assert_eq!(Window::choose(-5, 5), Window { start: -1, len: 4 });
        assert_eq!(Window::choose(0, 5), Window { start: 0, len: 4 });
        assert_eq!(Window::choose(-5, 1), Window { start: -2, len: 4 });
        assert_eq!(Window::choose(-1, 1), Window { start: -1, len: 3 });
        assert_eq!(Window::choose(0, 1), Window { start: 0, len: 2 });
    }

    #[test]
    fn snap_to_nodes() {
        let g = grid(0.0, 1.0, 400);
        assert_eq!(g.snap(0.5, 1e-9), Some(200));
        assert_eq!(g.snap(1.0, 1e-9), Some(400));
        assert_eq!(g.snap(0.5001, 1e-9), None);
        assert_eq!(g.snap(1.5, 1e-9), None);
    }
}
