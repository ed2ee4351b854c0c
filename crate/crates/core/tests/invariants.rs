//! Property tests over randomized smooth coefficients.

use num_complex::Complex64;
use proptest::prelude::*;
use volterra_greens::*;

fn poly(c: [f64; 3]) -> Coefficient {
    coeff(move |x| c[0] + x * (c[1] + x * c[2]))
}

fn arb_poly() -> impl Strategy<Value = [f64; 3]> {
    [-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0]
}

fn arb_op() -> impl Strategy<Value = (Vec<[f64; 3]>, DifferentialOperator)> {
    proptest::collection::vec(arb_poly(), 1..=3).prop_map(|cs| {
        let op = DifferentialOperator::new(cs.iter().map(|&c| poly(c)).collect()).unwrap();
        (cs, op)
    })
}

fn grid(n: usize) -> GridSpec {
    make_grid(0.0, 1.0, n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn greens_is_causal_with_unit_jump((_, op) in arb_op()) {
        let g = build_greens(&op, &grid(48), &SeriesOptions::default()).unwrap();
        let n = op.degree();
        for i in 0..=48 {
            for j in i + 1..=48 {
                prop_assert_eq!(greens_eval(&g, i, j).unwrap(), 0.0);
            }
        }
        for order in 0..n {
            let d = t_derivative(&g, order).unwrap();
            let expected = if order + 1 == n { 1.0 } else { 0.0 };
            for i in 0..=48 {
                prop_assert!((d.get(i, i) - expected).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn series_and_direct_resolvents_agree((_, op) in arb_op()) {
        let h = build_h(&op, &grid(64)).unwrap();
        let s = resolvent_series(&h, 1e-12, 60).unwrap();
        let d = resolvent_direct(&h).unwrap();
        prop_assert!(s.resolvent.max_abs_diff(&d).unwrap() <= 1e-8);
    }

    #[test]
    fn ivp_superposition_and_initial_data(
        (_, op) in arb_op(),
        p1 in arb_poly(),
        p2 in arb_poly(),
        c1 in proptest::collection::vec(-2.0f64..2.0, 3),
        c2 in proptest::collection::vec(-2.0f64..2.0, 3),
    ) {
        let n = op.degree();
        let gr = grid(64);
        let f1 = GridFunction::from_fn(&gr, |x| p1[0] + x * (p1[1] + x * p1[2])).unwrap();
        let f2 = GridFunction::from_fn(&gr, |x| p2[0] + x * (p2[1] + x * p2[2])).unwrap();
        let (c1, c2) = (c1[..n].to_vec(), c2[..n].to_vec());
        let c12: Vec<f64> = c1.iter().zip(&c2).map(|(a, b)| a + b).collect();
        let s1 = solve_ivp(&op, &f1, &InitialConditions::new(c1.clone(), 0.0)).unwrap();
        let s2 = solve_ivp(&op, &f2, &InitialConditions::new(c2, 0.0)).unwrap();
        let s12 = solve_ivp(&op, &f1.add(&f2).unwrap(), &InitialConditions::new(c12, 0.0)).unwrap();
        for k in 0..n {
            let sum = s1.derivatives[k].add(&s2.derivatives[k]).unwrap();
            prop_assert!(s12.derivatives[k].sub(&sum).unwrap().sup_norm() <= 1e-10);
            prop_assert!((s1.derivatives[k].get(0) - c1[k]).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_data_ivp_matches_greens((_, op) in arb_op(), p in arb_poly()) {
        let gr = grid(400);
        let g = build_greens(&op, &gr, &SeriesOptions::default()).unwrap();
        let rhs = GridFunction::from_fn(&gr, |x| p[0] + x * (p[1] + x * p[2])).unwrap();
        let ivp = solve_ivp(&op, &rhs, &InitialConditions::zero(op.degree(), 0.0)).unwrap();
        let via = apply_greens(&g, &rhs).unwrap();
        prop_assert!(ivp.y.sub(&via).unwrap().sup_norm() <= 1e-8);
    }

    #[test]
    fn wronskian_follows_abel((_, op) in arb_op()) {
        let gr = grid(100);
        let g = build_greens(&op, &gr, &SeriesOptions::default()).unwrap();
        let set = fundamental_solutions(&op, &g).unwrap();
        let det = wronskian_samples(&set).unwrap();
        let abel = abel_wronskian(&op, &gr).unwrap();
        prop_assert_eq!(wronskian(&set, 0).unwrap(), 1.0);
        for (d, a) in det.values().iter().zip(abel.values()) {
            prop_assert!((d - a).abs() <= 1e-6 * a.abs());
        }
    }

    #[test]
    fn sturm_liouville_symmetry_and_boundaries(p in arb_poly(), q in arb_poly()) {
        let s = sturm_liouville_greens(&poly(p), 0.0, 1.0, 200, &SeriesOptions::default()).unwrap();
        let scale = s.matrix().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(s.asymmetry() <= 1e-9 * scale);
        prop_assert!(s.u1.get(0).abs() <= 1e-12);
        prop_assert!(s.u2.get(200).abs() <= 1e-12);
        let w = s.wronskian_samples().unwrap();
        let (lo, hi) = w.values().iter().fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
        prop_assert!(hi - lo <= 1e-7);
        let rhs = GridFunction::from_fn(&s.grid, |x| q[0] + x * (q[1] + x * q[2])).unwrap();
        let y = solve_bvp(&s, &rhs).unwrap();
        prop_assert_eq!(y.get(0), 0.0);
        prop_assert_eq!(y.get(200), 0.0);
    }

    #[test]
    fn roots_annihilate_polynomial(re in proptest::collection::vec(-2.0f64..2.0, 2..6),
                                   im in proptest::collection::vec(-2.0f64..2.0, 6)) {
        let mut alphas: Vec<Complex64> = re.iter().zip(&im).map(|(&r, &i)| Complex64::new(r, i)).collect();
        alphas.push(Complex64::new(1.0, 0.0));
        let roots = poly_roots(&alphas, 1e-13).unwrap();
        prop_assert_eq!(roots.len(), alphas.len() - 1);
        for z in roots {
            let (p, s) = alphas.iter().rev().fold((Complex64::new(0.0, 0.0), 0.0), |(p, s), &c| {
                (p * z + c, s * z.norm() + c.norm())
            });
            prop_assert!(p.norm() <= 1e-9 * s.max(1.0));
        }
    }

    #[test]
    fn apply_greens_is_linear((_, op) in arb_op(), p in arb_poly(), q in arb_poly(), k in -3.0f64..3.0) {
        let gr = grid(48);
        let g = build_greens(&op, &gr, &SeriesOptions::default()).unwrap();
        let f1 = GridFunction::from_fn(&gr, |x| p[0] + x * (p[1] + x * p[2])).unwrap();
        let f2 = GridFunction::from_fn(&gr, |x| q[0] + x * (q[1] + x * q[2])).unwrap();
        let lhs = apply_greens(&g, &f1.scale(k).add(&f2).unwrap()).unwrap();
        let rhs = apply_greens(&g, &f1).unwrap().scale(k).add(&apply_greens(&g, &f2).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().sup_norm() <= 1e-12);
    }
}
