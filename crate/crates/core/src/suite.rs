//! Built-in reproduction suite: closed-form examples and randomized property
//! checks, each reported as pass or fail together with the measured numbers.

use crate::bvp::{solve_bvp, sturm_liouville_greens};
use crate::error::{Error, Result};
use crate::greens::{
    apply_greens, build_greens, constant_coeff_greens, constant_coeff_greens_real, factored_greens,
    operator_residual, t_derivative, CausalGreens,
};
use crate::grid::{make_grid, GridFunction, GridSpec, TriangularKernel};
use crate::ivp::{abel_wronskian, fundamental_solutions, solve_ivp, vop_greens_check, wronskian_samples};
use crate::operator::{coeff, Coefficient, DifferentialOperator, InitialConditions};
use crate::scalar::Scalar;
use crate::volterra::{build_h, resolvent_direct, resolvent_series, SeriesOptions, DEFAULT_MAX_TERMS};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

/// Outcome of one acceptance criterion.
#[derive(Clone, Debug, PartialEq)]
pub struct CriterionReport {
    /// `"1"` to `"11"`; supplementary checks carry a letter suffix.
    pub id: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{status}] {:>3} {}: {}", self.id, self.name, self.detail)
    }
}

fn report(id: &str, name: &str, outcome: Result<(bool, String)>) -> CriterionReport {
    let (passed, detail) = match outcome {
        Ok(v) => v,
        Err(e) => (false, format!("error {}: {e}", e.code())),
    };
    CriterionReport {
        id: id.into(),
        name: name.into(),
        passed,
        detail,
    }
}

const N: usize = 400;

fn opts() -> SeriesOptions {
    SeriesOptions::default()
}

/// `sup_{i ≥ j} |k(x_i, x_j) - f(x_i, x_j)|`.
fn sup_err<S: Scalar>(k: &TriangularKernel<S>, f: impl Fn(f64, f64) -> S) -> f64 {
    let g = k.grid();
    let mut m = 0.0f64;
    for i in 0..g.n_nodes() {
        for j in 0..=i {
            m = m.max((k.get(i, j) - f(g.node(i), g.node(j))).modulus());
        }
    }
    m
}

fn sinh_op(omega: f64) -> Result<DifferentialOperator> {
    DifferentialOperator::constant(&[-omega * omega, 0.0])
}

fn airy_op() -> Result<DifferentialOperator> {
    DifferentialOperator::new(vec![coeff(|x| -x), coeff(|_| 0.0)])
}

/// `∂² + 3x∂ + (2x² + c)`.
fn erf_family_op(c: f64) -> Result<DifferentialOperator> {
    DifferentialOperator::new(vec![coeff(move |x| 2.0 * x * x + c), coeff(|x| 3.0 * x)])
}

fn erf_closed(x: f64, y: f64) -> f64 {
    let r2 = std::f64::consts::SQRT_2;
    (PI / 2.0).sqrt() * (y * y - x * x / 2.0).exp() * (libm::erf(x / r2) - libm::erf(y / r2))
}

/// Third-order example with `α = ω = 1`, as a function of the lag `s`.
fn third_order_closed(s: f64) -> Complex64 {
    let i = Complex64::i();
    ((s.exp() - (i * s).exp()) / 2.0) - Complex64::new(s.sinh(), 0.0) / (i + 1.0)
}

fn third_order_alphas() -> Vec<Complex64> {
    // (X - 1)(X + 1)(X - i) = X³ - iX² - X + i
    vec![
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
        Complex64::new(1.0, 0.0),
    ]
}

/// Errors of both constant-coefficient paths against `sinh(ω(x-y))/ω`, with
/// their build times in seconds.
fn sinh_errors(omega: f64, n: usize) -> Result<[f64; 4]> {
    let grid = make_grid(0.0, 1.0, n)?;
    let exact = |x: f64, y: f64| (omega * (x - y)).sinh() / omega;
    let t0 = Instant::now();
    let g = build_greens(&sinh_op(omega)?, &grid, &opts())?;
    let t_series = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let cc = constant_coeff_greens_real(&[-omega * omega, 0.0, 1.0], &grid)?;
    let t_cc = t0.elapsed().as_secs_f64();
    let real = cc.greens.as_real().ok_or(Error::ImaginaryResidue { ratio: f64::NAN })?;
    Ok([sup_err(g.kernel(), exact), sup_err(real.kernel(), exact), t_series, t_cc])
}

fn criterion_1() -> Result<(bool, String)> {
    let mut ok = true;
    let mut parts = Vec::new();
    for omega in [1.0, 2.0] {
        let [e1, e2, t1, t2] = sinh_errors(omega, N)?;
        ok &= e1 <= 1e-6 && e2 <= 1e-6 && t1 < 5.0 && t2 < 5.0;
        parts.push(format!(
            "w={omega}: series err {e1:.2e} ({t1:.2}s), const-coeff err {e2:.2e} ({t2:.2}s)"
        ));
    }
    Ok((ok, parts.join("; ")))
}

/// `u'' = x u`, `u(y) = 0`, `u'(y) = 1`, integrated to `x` by classical RK4.
fn airy_rk4(x: f64, y: f64, step: f64) -> f64 {
    let steps = ((x - y) / step).round().max(1.0) as usize;
    let h = (x - y) / steps as f64;
    let f = |t: f64, u: [f64; 2]| [u[1], t * u[0]];
    let mut u = [0.0, 1.0];
    let mut t = y;
    for _ in 0..steps {
        let k1 = f(t, u);
        let k2 = f(t + h / 2.0, [u[0] + h / 2.0 * k1[0], u[1] + h / 2.0 * k1[1]]);
        let k3 = f(t + h / 2.0, [u[0] + h / 2.0 * k2[0], u[1] + h / 2.0 * k2[1]]);
        let k4 = f(t + h, [u[0] + h * k3[0], u[1] + h * k3[1]]);
        for c in 0..2 {
            u[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        t += h;
    }
    u[0]
}

/// The first three terms of the Airy expansion, returned separately.
pub fn airy_series_terms(x: f64, y: f64) -> [f64; 3] {
    let t1 = x - y;
    let t2 = x.powi(4) / 12.0 - x.powi(3) * y / 6.0 + x * y.powi(3) / 6.0 - y.powi(4) / 12.0;
    let t3 = x.powi(7) / 504.0 - x.powi(6) * y / 180.0 + x.powi(4) * y.powi(3) / 72.0
        - x.powi(3) * y.powi(4) / 72.0
        + x * y.powi(6) / 180.0
        - y.powi(7) / 504.0;
    [t1, t2, t3]
}

fn criterion_2() -> Result<(bool, String)> {
    let grid = make_grid(0.0, 1.0, N)?;
    let g = build_greens(&airy_op()?, &grid, &opts())?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (x, y) in [(0.5, 0.1), (0.9, 0.2)] {
        let i = grid.snap(x, 1e-9).ok_or(Error::IndexOutOfRange { index: 0, limit: N })?;
        let j = grid.snap(y, 1e-9).ok_or(Error::IndexOutOfRange { index: 0, limit: N })?;
        let t = g.eval(i, j)?;
        let terms = airy_series_terms(x, y);
        let poly: f64 = terms.iter().sum();
        let poly_err = (t - poly).abs();
        let oracle = airy_rk4(x, y, grid.step() / 10.0);
        let ode_err = (t - oracle).abs();
        ok &= poly_err <= 5.0 * terms[2].abs() && ode_err <= 1e-6;
        parts.push(format!(
            "({x},{y}): T={t:.12}, |T-poly|={poly_err:.2e} (bound {:.2e}), |T-rk4|={ode_err:.2e}",
            5.0 * terms[2].abs()
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn criterion_3() -> Result<(bool, String)> {
    let grid = make_grid(0.0, 2.0, N)?;
    let f = factored_greens(&[coeff(|x| -x), coeff(|x| -2.0 * x)], &grid)?;
    let d = build_greens(&erf_family_op(2.0)?, &grid, &opts())?;
    let e_f = sup_err(f.kernel(), erf_closed);
    let e_d = sup_err(d.kernel(), erf_closed);
    let agree = f.kernel().max_abs_diff(d.kernel())?;
    Ok((
        e_f <= 1e-6 && e_d <= 1e-6,
        format!("factored vs closed {e_f:.2e}, direct vs closed {e_d:.2e}, factored vs direct {agree:.2e}"),
    ))
}

/// The closed form belongs to `(∂ + 2x)(∂ + x) = ∂² + 3x∂ + (2x² + 1)`; this
/// checks it against that operator, and checks that both numerical paths
/// agree on the operator as stated.
fn criterion_3_consistent() -> Result<(bool, String)> {
    let grid = make_grid(0.0, 2.0, N)?;
    let f = factored_greens(&[coeff(|x| -2.0 * x), coeff(|x| -x)], &grid)?;
    let d = build_greens(&erf_family_op(1.0)?, &grid, &opts())?;
    let e_f = sup_err(f.kernel(), erf_closed);
    let e_d = sup_err(d.kernel(), erf_closed);
    let f2 = factored_greens(&[coeff(|x| -x), coeff(|x| -2.0 * x)], &grid)?;
    let d2 = build_greens(&erf_family_op(2.0)?, &grid, &opts())?;
    let agree = f2.kernel().max_abs_diff(d2.kernel())?;
    Ok((
        e_f <= 1e-6 && e_d <= 1e-6 && agree <= 1e-6,
        format!(
            "factored[-2x,-x] vs closed {e_f:.2e}, direct(2x^2+1) vs closed {e_d:.2e}, \
             factored[-x,-2x] vs direct(2x^2+2) {agree:.2e}"
        ),
    ))
}

fn criterion_4() -> Result<(bool, String)> {
    let grid = make_grid(0.0, 1.5, N)?;
    let cc = constant_coeff_greens(&third_order_alphas(), &grid)?;
    let g = cc.greens.to_complex();
    let (mut re, mut im) = (0.0f64, 0.0f64);
    for i in 0..grid.n_nodes() {
        for j in 0..=i {
            let d = g.kernel().get(i, j) - third_order_closed(grid.node(i) - grid.node(j));
            re = re.max(d.re.abs());
            im = im.max(d.im.abs());
        }
    }
    let roots: Vec<String> = cc.roots.iter().map(|r| format!("{}{:+}i", r.re, r.im)).collect();
    Ok((
        re <= 1e-6 && im <= 1e-6,
        format!("roots [{}], max |dRe| {re:.2e}, max |dIm| {im:.2e}", roots.join(", ")),
    ))
}

/// `max_k max_i |∂ᵏT(x_i, x_i) - δ_{k,n-1}|` for `k < n`.
fn diagonal_defect<S: Scalar>(g: &CausalGreens<S>) -> Result<f64> {
    let n = g.degree();
    let mut m = 0.0f64;
    for order in 0..n {
        let d = t_derivative(g, order)?;
        let expected = if order + 1 == n { S::one() } else { S::zero() };
        for i in 0..g.grid().n_nodes() {
            m = m.max((d.get(i, i) - expected).modulus());
        }
    }
    Ok(m)
}

fn criterion_5() -> Result<(bool, String)> {
    let unit = make_grid(0.0, 1.0, N)?;
    let wide = make_grid(0.0, 2.0, N)?;
    let third = make_grid(0.0, 1.5, N)?;
    let mut cases: Vec<(&str, CausalGreens<Complex64>)> = Vec::new();
    for (name, w) in [("d2-1", 1.0), ("d2-4", 2.0)] {
        cases.push((name, build_greens(&sinh_op(w)?, &unit, &opts())?.to_complex()));
        let cc = constant_coeff_greens_real(&[-w * w, 0.0, 1.0], &unit)?;
        cases.push((name, cc.greens.to_complex()));
    }
    cases.push(("airy", build_greens(&airy_op()?, &unit, &opts())?.to_complex()));
    cases.push((
        "factored",
        factored_greens(&[coeff(|x| -x), coeff(|x| -2.0 * x)], &wide)?.to_complex(),
    ));
    cases.push(("erf-direct", build_greens(&erf_family_op(2.0)?, &wide, &opts())?.to_complex()));
    cases.push(("third-order", constant_coeff_greens(&third_order_alphas(), &third)?.greens.to_complex()));
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (name, g) in &cases {
        let d = diagonal_defect(g)?;
        worst = worst.max(d);
        parts.push(format!("{name} {d:.1e}"));
    }
    Ok((worst <= 1e-12, format!("max defect {worst:.2e} ({})", parts.join(", "))))
}

fn criterion_6() -> Result<(bool, String)> {
    let grid = make_grid(0.0, 1.0, N)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, op) in [("d2-1", sinh_op(1.0)?), ("d2-x", airy_op()?)] {
        let g = build_greens(&op, &grid, &opts())?;
        let r = vop_greens_check(&op, &g)?;
        ok &= r.max_deviation <= 1e-5 && r.checked_columns > 0;
        parts.push(format!(
            "{name}: deviation {:.2e} over {} columns ({} skipped)",
            r.max_deviation, r.checked_columns, r.skipped_columns
        ));
    }
    Ok((ok, parts.join("; ")))
}

/// Largest relative gap between the determinant and Abel Wronskians.
fn abel_gap(op: &DifferentialOperator, grid: &GridSpec) -> Result<f64> {
    let g = build_greens(op, grid, &opts())?;
    let set = fundamental_solutions(op, &g)?;
    let det = wronskian_samples(&set)?;
    let abel = abel_wronskian(op, grid)?;
    Ok(det
        .values()
        .iter()
        .zip(abel.values())
        .fold(0.0f64, |m, (d, a)| m.max((d - a).abs() / a.abs())))
}

fn criterion_7() -> Result<(bool, String)> {
    let e1 = abel_gap(&sinh_op(1.0)?, &make_grid(0.0, 1.0, N)?)?;
    let e2 = abel_gap(&erf_family_op(2.0)?, &make_grid(0.0, 2.0, N)?)?;
    Ok((
        e1 <= 1e-6 && e2 <= 1e-6,
        format!("d2-1 rel gap {e1:.2e}; d2+3x d+2x^2+2 rel gap {e2:.2e}"),
    ))
}

fn criterion_8() -> Result<(bool, String)> {
    let free = sturm_liouville_greens(&coeff(|_| 0.0), 0.0, 1.0, N, &opts())?;
    let grid = free.grid.clone();
    let mut free_err = 0.0f64;
    for i in 0..grid.n_nodes() {
        for j in i..grid.n_nodes() {
            let exact = grid.node(i) * (grid.node(j) - 1.0);
            free_err = free_err.max((free.g(i, j) - exact).abs()).max((free.g(j, i) - exact).abs());
        }
    }

    let one = sturm_liouville_greens(&coeff(|_| 1.0), 0.0, 1.0, N, &opts())?;
    let y = solve_bvp(&one, &GridFunction::constant(&grid, 1.0))?;
    let res = operator_residual(&sinh_op(1.0)?, &y)?;
    let res_err = res.interior().iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()));

    let pi2 = PI * PI;
    let resonant = matches!(
        sturm_liouville_greens(&coeff(move |_| -pi2), 0.0, 1.0, N, &opts()),
        Err(Error::Resonant { .. })
    );
    Ok((
        free_err <= 1e-9 && res_err <= 1e-4 && resonant,
        format!(
            "P=0 err {free_err:.2e}; P=1 residual {res_err:.2e}; P=-pi^2 {}",
            if resonant { "resonant" } else { "NOT flagged" }
        ),
    ))
}

fn criterion_9() -> Result<(bool, String)> {
    let unit = make_grid(0.0, 1.0, N)?;
    let wide = make_grid(0.0, 2.0, N)?;
    let cases = [
        ("d2-1", sinh_op(1.0)?, &unit),
        ("d2-4", sinh_op(2.0)?, &unit),
        ("airy", airy_op()?, &unit),
        ("erf(2x^2+2)", erf_family_op(2.0)?, &wide),
        ("erf(2x^2+1)", erf_family_op(1.0)?, &wide),
    ];
    let mut worst_r = 0.0f64;
    let mut worst_y = 0.0f64;
    for (_, op, grid) in &cases {
        let h = build_h(op, grid)?;
        let series = resolvent_series(&h, opts().tol, DEFAULT_MAX_TERMS)?;
        let direct = resolvent_direct(&h)?;
        worst_r = worst_r.max(series.resolvent.max_abs_diff(&direct)?);

        let g = build_greens(op, grid, &opts())?;
        let rhs = GridFunction::from_fn(grid, |x| x.cos() + x * x)?;
        let ivp = solve_ivp(op, &rhs, &InitialConditions::zero(op.degree(), grid.a()))?;
        let via = apply_greens(&g, &rhs)?;
        worst_y = worst_y.max(ivp.y.sub(&via)?.sup_norm());
    }
    Ok((
        worst_r <= 1e-8 && worst_y <= 1e-8,
        format!("series vs direct {worst_r:.2e}; ivp vs apply_greens {worst_y:.2e}"),
    ))
}

fn criterion_10() -> Result<(bool, String)> {
    let mut worst = f64::INFINITY;
    let mut parts = Vec::new();
    for omega in [1.0, 2.0] {
        let [c1, c2, _, _] = sinh_errors(omega, N / 2)?;
        let [f1, f2, _, _] = sinh_errors(omega, N)?;
        let (r1, r2) = (c1 / f1, c2 / f2);
        worst = worst.min(r1).min(r2);
        parts.push(format!("w={omega}: series ratio {r1:.2}, const-coeff ratio {r2:.2}"));
    }
    Ok((worst >= 8.0, format!("min ratio {worst:.2} ({})", parts.join("; "))))
}

/// Random polynomial of degree at most 2 with coefficients in `[-2, 2]`.
fn random_poly(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [rng.gen_range(-2.0..=2.0), rng.gen_range(-2.0..=2.0), rng.gen_range(-2.0..=2.0)]
}

fn poly_coeff(c: [f64; 3]) -> Coefficient {
    coeff(move |x| c[0] + x * (c[1] + x * c[2]))
}

/// Worst values seen over the randomized cases.
#[derive(Default)]
struct PropertyTally {
    superposition: f64,
    causality_nonzero: usize,
    abel: f64,
    bvp_wronskian_spread: f64,
    bvp_asymmetry: f64,
    bvp_boundary: f64,
}

fn property_case(rng: &mut ChaCha8Rng, tally: &mut PropertyTally) -> Result<()> {
    let n = rng.gen_range(1..=3usize);
    let coeffs: Vec<Coefficient> = (0..n).map(|_| poly_coeff(random_poly(rng))).collect();
    let op = DifferentialOperator::new(coeffs)?;
    let grid = make_grid(0.0, 1.0, 100)?;

    let g = build_greens(&op, &grid, &opts())?;
    for i in 0..grid.n_nodes() {
        for j in i + 1..grid.n_nodes() {
            if g.eval(i, j)? != 0.0 {
                tally.causality_nonzero += 1;
            }
        }
    }

    let (p1, p2) = (random_poly(rng), random_poly(rng));
    let g1 = GridFunction::from_fn(&grid, |x| p1[0] + x * (p1[1] + x * p1[2]))?;
    let g2 = GridFunction::from_fn(&grid, |x| p2[0] + x * (p2[1] + x * p2[2]))?;
    let c1: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..=2.0)).collect();
    let c2: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..=2.0)).collect();
    let c12: Vec<f64> = c1.iter().zip(&c2).map(|(a, b)| a + b).collect();
    let s1 = solve_ivp(&op, &g1, &InitialConditions::new(c1, 0.0))?;
    let s2 = solve_ivp(&op, &g2, &InitialConditions::new(c2, 0.0))?;
    let s12 = solve_ivp(&op, &g1.add(&g2)?, &InitialConditions::new(c12, 0.0))?;
    for k in 0..n {
        let d = s12.derivatives[k].sub(&s1.derivatives[k].add(&s2.derivatives[k])?)?;
        tally.superposition = tally.superposition.max(d.sup_norm());
    }

    tally.abel = tally.abel.max(abel_gap(&op, &grid)?);

    let p = poly_coeff(random_poly(rng));
    let s = sturm_liouville_greens(&p, 0.0, 1.0, N, &opts())?;
    let w = s.wronskian_samples()?;
    let (lo, hi) = w
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    tally.bvp_wronskian_spread = tally.bvp_wronskian_spread.max(hi - lo);
    let scale = s.matrix().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    tally.bvp_asymmetry = tally.bvp_asymmetry.max(s.asymmetry() / scale);
    let rhs = GridFunction::from_fn(&s.grid, |x| (3.0 * x).sin() + 1.0)?;
    let y = solve_bvp(&s, &rhs)?;
    tally.bvp_boundary = tally.bvp_boundary.max(y.get(0).abs()).max(y.get(N).abs());
    Ok(())
}

/// Number of randomized cases in criterion 11.
pub const PROPERTY_CASES: usize = 50;
/// Seed of the randomized cases in criterion 11.
pub const PROPERTY_SEED: u64 = 0x5eed_2024;

fn criterion_11() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(PROPERTY_SEED);
    let mut t = PropertyTally::default();
    for _ in 0..PROPERTY_CASES {
        property_case(&mut rng, &mut t)?;
    }
    let ok = t.superposition <= 1e-10
        && t.causality_nonzero == 0
        && t.abel <= 1e-6
        && t.bvp_wronskian_spread <= 1e-7
        && t.bvp_asymmetry <= 1e-9
        && t.bvp_boundary == 0.0;
    Ok((
        ok,
        format!(
            "{PROPERTY_CASES} cases: superposition {:.1e}, causal nonzeros {}, abel {:.1e}, \
             bvp wronskian spread {:.1e}, bvp asymmetry {:.1e}, bvp boundary {:.1e}",
            t.superposition, t.causality_nonzero, t.abel, t.bvp_wronskian_spread, t.bvp_asymmetry, t.bvp_boundary
        ),
    ))
}

type Runner = fn() -> Result<(bool, String)>;

const CRITERIA: [(&str, &str, Runner); 12] = [
    ("1", "constant-coefficient sinh kernel", criterion_1),
    ("2", "Airy series and ODE oracle", criterion_2),
    ("3", "factored Erf example as stated", criterion_3),
    ("3s", "Erf example, consistent operator pairing", criterion_3_consistent),
    ("4", "third-order complex example", criterion_4),
    ("5", "diagonal derivative identities", criterion_5),
    ("6", "variation-of-parameters identity", criterion_6),
    ("7", "Abel identity", criterion_7),
    ("8", "Sturm-Liouville Green's function", criterion_8),
    ("9", "method cross-validation", criterion_9),
    ("10", "convergence order", criterion_10),
    ("11", "randomized property suite", criterion_11),
];

/// Identifiers of every check, in run order.
pub fn criterion_ids() -> Vec<&'static str> {
    CRITERIA.iter().map(|c| c.0).collect()
}

/// Runs a single check by identifier.
pub fn run_criterion(id: &str) -> Option<CriterionReport> {
    CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map(|&(id, name, run)| report(id, name, run()))
}

/// Runs every check in order.
pub fn run_all() -> Vec<CriterionReport> {
    CRITERIA.iter().map(|&(id, name, run)| report(id, name, run())).collect()
}
