use num_traits::{Signed, Zero};
use proptest::prelude::*;
use rever_core::lp::{
    optimize_with, solve_feasibility_with, validate_certificate, Feasibility, LinearSystem, Optimization, Sense,
    SolveOptions,
};
use rever_core::rational::{int, Rational};

fn system_strategy() -> impl Strategy<Value = LinearSystem> {
    (1usize..=6, 1usize..=10).prop_flat_map(|(n, m)| {
        proptest::collection::vec((proptest::collection::vec(-5i64..=5, n), -5i64..=5), m).prop_map(move |rows| {
            let mut s = LinearSystem::with_vars(n);
            for (coeffs, rhs) in rows {
                s.add_row(coeffs.into_iter().enumerate().map(|(j, c)| (j, int(c))), int(rhs));
            }
            s
        })
    })
}

fn check_alternative(s: &LinearSystem, opts: &SolveOptions) {
    match solve_feasibility_with(s, opts).unwrap() {
        Feasibility::Feasible(x) => assert!(s.is_satisfied_by(&x)),
        Feasibility::Infeasible(c) => {
            assert!(validate_certificate(s, &c.y).unwrap().is_accept());
            let rhs = s.rows.iter().zip(&c.y).fold(Rational::zero(), |a, (r, y)| a + &r.rhs * y);
            assert_eq!(rhs, int(-1));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn farkas_alternative_float(s in system_strategy()) {
        check_alternative(&s, &SolveOptions::default());
    }

    #[test]
    fn farkas_alternative_exact(s in system_strategy()) {
        check_alternative(&s, &SolveOptions::exact());
    }

    #[test]
    fn float_and_exact_agree(s in system_strategy()) {
        let a = solve_feasibility_with(&s, &SolveOptions::default()).unwrap().is_feasible();
        let b = solve_feasibility_with(&s, &SolveOptions::exact()).unwrap().is_feasible();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn no_certificate_on_feasible_systems(s in system_strategy(), ys in proptest::collection::vec(0i64..4, 10)) {
        if let Feasibility::Feasible(_) = solve_feasibility_with(&s, &SolveOptions::default()).unwrap() {
            let y: Vec<Rational> = (0..s.num_rows()).map(|i| int(ys[i % ys.len()])).collect();
            prop_assert!(!validate_certificate(&s, &y).unwrap().is_accept());
        }
    }

    #[test]
    fn optimum_matches_between_arithmetics(s in system_strategy(), c in proptest::collection::vec(-3i64..=3, 6)) {
        let obj: Vec<Rational> = (0..s.num_vars()).map(|j| int(c[j])).collect();
        let a = optimize_with(&s, &obj, Sense::Maximize, &SolveOptions::default()).unwrap();
        let b = optimize_with(&s, &obj, Sense::Maximize, &SolveOptions::exact()).unwrap();
        match (&a, &b) {
            (Optimization::Optimal { value: va, point, .. }, Optimization::Optimal { value: vb, .. }) => {
                prop_assert_eq!(va, vb);
                prop_assert!(s.is_satisfied_by(point));
            }
            (Optimization::Infeasible(_), Optimization::Infeasible(_)) => {}
            (Optimization::Unbounded { ray, .. }, Optimization::Unbounded { .. }) => {
                prop_assert!(s.rows.iter().all(|r| !r.activity(ray).is_positive()));
            }
            _ => prop_assert!(false, "mismatch {:?} vs {:?}", a, b),
        }
    }

    /// Interval systems (difference-free unit rows) have integral optimal vertices.
    #[test]
    fn unit_interval_systems_have_integral_vertices(
        bounds in proptest::collection::vec((-5i64..=0, 0i64..=5), 2..5),
        links in proptest::collection::vec((0usize..4, 0usize..4, -3i64..=3), 0..4),
        c in proptest::collection::vec(-3i64..=3, 4),
    ) {
        let n = bounds.len();
        let mut s = LinearSystem::with_vars(n);
        for (j, (lo, hi)) in bounds.iter().enumerate() {
            s.add_row([(j, int(1))], int(*hi));
            s.add_row([(j, int(-1))], int(-lo));
        }
        for (i, j, r) in links {
            if i < n && j < n && i != j {
                // network matrix row: x_i - x_j <= r
                s.add_row([(i, int(1)), (j, int(-1))], int(r));
            }
        }
        let obj: Vec<Rational> = (0..n).map(|j| int(c[j])).collect();
        if let Optimization::Optimal { point, .. } = optimize_with(&s, &obj, Sense::Maximize, &SolveOptions::exact()).unwrap() {
            prop_assert!(point.iter().all(|v| v.is_integer()));
        }
    }
}
