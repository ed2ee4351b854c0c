//! Polynomial roots by Durand-Kerner simultaneous iteration.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::cmp::Ordering;

/// Default bound on the largest root movement in the final sweep.
pub const DEFAULT_ROOT_TOL: f64 = 1e-13;
const MAX_SWEEPS: usize = 500;

/// Evaluates `Σ a_i z^i` by Horner's rule, together with `Σ |a_i| |z|^i`.
fn horner(a: &[Complex64], z: Complex64) -> (Complex64, f64) {
    let r = z.norm();
    a.iter().rev().fold((Complex64::new(0.0, 0.0), 0.0), |(p, s), &c| {
        (p * z + c, s * r + c.norm())
    })
}

/// Roots of `Σ alphas[i] X^i`, sorted by real part, then imaginary part.
///
/// Iterates until no root moves by more than `tol`. A sweep in which every
/// residual is already at rounding level (as happens for repeated roots,
/// where movement stalls above `tol`) also ends the iteration, since further
/// sweeps only shuffle rounding noise.
pub fn poly_roots(alphas: &[Complex64], tol: f64) -> Result<Vec<Complex64>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidTolerance(tol));
    }
    let n = alphas.len().checked_sub(1).ok_or(Error::ZeroDegree)?;
    if n == 0 {
        return Err(Error::ZeroDegree);
    }
    let lead = alphas[n];
    if lead.norm() == 0.0 {
        return Err(Error::LeadingCoefficientZero);
    }
    if let Some(k) = alphas.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::NonFiniteInput(format!("polynomial coefficient {k}")));
    }
    let monic: Vec<Complex64> = alphas.iter().map(|&c| c / lead).collect();
    let radius = 1.0 + monic[..n].iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();

    let roundoff = |z: &[Complex64]| {
        z.iter().all(|&zk| {
            let (p, s) = horner(&monic, zk);
            p.norm() <= 16.0 * f64::EPSILON * s
        })
    };
    let mut converged = false;
    let mut quiet_sweeps = 0;
    for _ in 0..MAX_SWEEPS {
        let mut moved = 0.0f64;
        for k in 0..n {
            let (p, _) = horner(&monic, z[k]);
            let denom = (0..n)
                .filter(|&j| j != k)
                .fold(Complex64::new(1.0, 0.0), |acc, j| acc * (z[k] - z[j]));
            if denom.norm() == 0.0 {
                // coincident iterates: nudge apart
                z[k] += Complex64::new(1e-8 * radius, 1e-8 * radius);
                moved = f64::INFINITY;
                continue;
            }
            let step = p / denom;
            z[k] -= step;
            moved = moved.max(step.norm());
        }
        if moved <= tol {
            converged = true;
            break;
        }
        if roundoff(&z) {
            quiet_sweeps += 1;
            if quiet_sweeps >= 2 {
                converged = true;
                break;
            }
        } else {
            quiet_sweeps = 0;
        }
    }
    if !converged {
        let max_residual = z.iter().fold(0.0f64, |m, &zk| m.max(horner(&monic, zk).0.norm()));
        return Err(Error::RootsNotConverged {
            sweeps: MAX_SWEEPS,
            max_residual,
        });
    }

    let scale = z.iter().fold(1.0f64, |m, c| m.max(c.norm()));
    for r in &mut z {
        if r.im.abs() <= 1e-12 * scale {
            r.im = 0.0;
        }
        if r.re.abs() <= 1e-12 * scale {
            r.re = 0.0;
        }
    }
    let close = 1e-9 * scale;
    z.sort_by(|p, q| {
        if (p.re - q.re).abs() > close {
            p.re.total_cmp(&q.re)
        } else {
            match p.im.total_cmp(&q.im) {
                Ordering::Equal => p.re.total_cmp(&q.re),
                o => o,
            }
        }
    });
    Ok(z)
}

/// Real-coefficient convenience wrapper around [`poly_roots`].
pub fn poly_roots_real(alphas: &[f64], tol: f64) -> Result<Vec<Complex64>> {
    let c: Vec<Complex64> = alphas.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    poly_roots(&c, tol)
}
