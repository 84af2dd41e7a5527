use falva::control::{
    embed_variational, energy_gap_bound, energy_rate_at, pontryagin_gaps_at, ControlJet, ControlProblem, Extremal,
};
use falva::specquad::{gamma, gamma_ratio, jacobi_rule};
use falva::symexpr::{eval, parse, partial, total_derivative, Dims, Expr, Func, Jet, VarRef};
use falva::trajectory::Trajectory;
use falva::variational::{action, FalvaProblem};
use proptest::prelude::*;
use proptest::sample::select;

fn expr_over(leaves: Vec<VarRef>) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-200i32..200).prop_map(|c| Expr::constant(c as f64 / 100.0)),
        select(leaves).prop_map(Expr::var),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            inner.clone().prop_map(Expr::neg),
            (inner.clone(), 2i32..4).prop_map(|(a, n)| Expr::powi(a, n)),
            (inner.clone(), select(vec![Func::Sin, Func::Cos])).prop_map(|(a, f)| Expr::func(f, a)),
            inner.clone().prop_map(|a| Expr::func(Func::Exp, Expr::func(Func::Sin, a))),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::div(a, Expr::add(Expr::constant(2.0), Expr::powi(b, 2)))),
        ]
    })
}

fn state_leaves(dim: usize, order: usize) -> Vec<VarRef> {
    let mut v = vec![VarRef::Theta];
    for c in 0..dim {
        for d in 0..=order {
            v.push(VarRef::State(c, d));
        }
    }
    v
}

fn state_expr() -> impl Strategy<Value = Expr> {
    expr_over(state_leaves(2, 2))
}

fn state_jet() -> impl Strategy<Value = Jet> {
    (0.0..0.9f64, prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 4), 2))
        .prop_map(|(theta, q)| Jet::new(theta, q))
}

fn close(a: f64, b: f64, tol: f64, scale: f64) -> bool {
    (a - b).abs() <= tol * scale.max(a.abs()).max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn printed_expressions_parse_back(e in state_expr(), jet in state_jet()) {
        let back = parse(&e.to_string(), &Dims::new(2, 0, 2)).unwrap();
        let (x, y) = (eval(&e, &jet).unwrap(), eval(&back, &jet).unwrap());
        prop_assert!(close(x, y, 1e-12, 0.0), "{} : {} vs {}", e, x, y);
    }

    #[test]
    fn partials_commute(e in state_expr(), jet in state_jet(),
                        v1 in select(state_leaves(2, 2)), v2 in select(state_leaves(2, 2))) {
        let a = eval(&partial(&partial(&e, v1), v2), &jet).unwrap();
        let b = eval(&partial(&partial(&e, v2), v1), &jet).unwrap();
        prop_assert!(close(a, b, 1e-12, 0.0), "{} : {} vs {}", e, a, b);
    }

    #[test]
    fn total_derivative_is_a_derivation(a in state_expr(), b in state_expr(), jet in state_jet()) {
        let lhs = eval(&total_derivative(&Expr::mul(a.clone(), b.clone())), &jet).unwrap();
        let (va, vb) = (eval(&a, &jet).unwrap(), eval(&b, &jet).unwrap());
        let (da, db) = (eval(&total_derivative(&a), &jet).unwrap(), eval(&total_derivative(&b), &jet).unwrap());
        let scale = (da * vb).abs() + (va * db).abs();
        prop_assert!(close(lhs, da * vb + va * db, 1e-12, scale));
    }

    #[test]
    fn total_derivative_matches_finite_differences(
        e in state_expr(),
        coeffs in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 7), 2),
        theta in 0.2..0.8f64,
    ) {
        // Decaying coefficients keep high derivatives moderate.
        let coeffs = coeffs.iter().map(|c| c.iter().enumerate().map(|(j, v)| v * 0.5f64.powi(j as i32)).collect()).collect();
        let tr = Trajectory::new((-1.0, 2.0), coeffs).unwrap();
        let f = |th: f64| eval(&e, &tr.jet_at(th, 3).unwrap()).unwrap();
        let h = 1e-3;
        let fd = (-f(theta + 2.0 * h) + 8.0 * f(theta + h) - 8.0 * f(theta - h) + f(theta - 2.0 * h)) / (12.0 * h);
        let exact = eval(&total_derivative(&e), &tr.jet_at(theta, 3).unwrap()).unwrap();
        prop_assert!(close(fd, exact, 1e-6, 0.0), "{} : fd {} vs {}", e, fd, exact);
    }

    #[test]
    fn trajectory_jets_are_linear(
        c1 in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 9), 2),
        c2 in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 5), 2),
        s in -3.0..3.0f64,
        theta in -1.0..2.0f64,
    ) {
        let (t1, t2) = (Trajectory::new((-1.0, 2.0), c1).unwrap(), Trajectory::new((-1.0, 2.0), c2).unwrap());
        let sum = t1.axpy(s, &t2).unwrap();
        let (j, j1, j2) = (sum.jet_at(theta, 4).unwrap(), t1.jet_at(theta, 4).unwrap(), t2.jet_at(theta, 4).unwrap());
        for c in 0..2 {
            for d in 0..=4 {
                let expect = s * j1.q[c][d] + j2.q[c][d];
                prop_assert!(close(j.q[c][d], expect, 1e-12, (s * j1.q[c][d]).abs() + j2.q[c][d].abs()));
            }
        }
        prop_assert_eq!(t1.derivative(1).degree(), 7);
        prop_assert!(t1.derivative(9).coeffs().iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn gauss_jacobi_is_exact_to_degree_2n_minus_1(alpha in 0.05..1.0f64, n in 1usize..12, t in 0.5..3.0f64) {
        let a = 0.0;
        let rule = jacobi_rule(alpha, a, t, n).unwrap();
        prop_assert!(rule.nodes.iter().all(|&x| x > a && x < t));
        prop_assert!(rule.weights.iter().all(|&w| w > 0.0));
        for k in 0..2 * n {
            // ∫_0^t θ^k (t−θ)^(α−1) dθ = t^(k+α) Γ(k+1) Γ(α) / Γ(k+1+α)
            let exact = t.powf(k as f64 + alpha) * gamma(k as f64 + 1.0).unwrap() * gamma(alpha).unwrap()
                / gamma(k as f64 + 1.0 + alpha).unwrap();
            let got = rule.integrate(|x| x.powi(k as i32));
            prop_assert!((got - exact).abs() <= 1e-12 * exact, "k={} {} vs {}", k, got, exact);
        }
    }

    #[test]
    fn gamma_ratio_matches_gamma_quotient(i in 0usize..8, alpha in 0.1..0.9f64) {
        let lhs = gamma_ratio(i, alpha) * gamma(1.0 - alpha).unwrap();
        let rhs = gamma(i as f64 - alpha + 1.0).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-11 * rhs.abs());
    }
}

fn control_leaves() -> Vec<VarRef> {
    vec![VarRef::Theta, VarRef::State(0, 0), VarRef::State(1, 0), VarRef::Control(0)]
}

fn control_problem() -> impl Strategy<Value = ControlProblem> {
    (
        select(vec![0.25, 0.5, 0.75, 1.0]),
        expr_over(control_leaves()),
        prop::collection::vec(expr_over(control_leaves()), 2),
    )
        .prop_map(|(alpha, l, phi)| ControlProblem::new(alpha, 0.0, 1.0, 1, l, phi, vec![0.0, 0.0]).unwrap())
}

fn control_jet() -> impl Strategy<Value = ControlJet> {
    (0.0..0.9f64, prop::collection::vec(-1.0..1.0f64, 11)).prop_map(|(theta, v)| ControlJet {
        theta,
        q: v[0..2].to_vec(),
        q_dot: v[2..4].to_vec(),
        u: vec![v[4]],
        u_dot: vec![v[5]],
        p: v[6..8].to_vec(),
        p_dot: v[8..10].to_vec(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn hamiltonian_costate_partial_is_the_velocity(cp in control_problem(), jet in control_jet()) {
        let h = cp.hamiltonian_parts();
        let slots = Jet::new(jet.theta, jet.q.iter().map(|&v| vec![v]).collect())
            .with_control(jet.u.clone())
            .with_costate(jet.p.clone());
        for (dp, phi) in h.d_p.iter().zip(&cp.velocity) {
            let (x, y) = (eval(dp, &slots).unwrap(), eval(phi, &slots).unwrap());
            prop_assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }

    #[test]
    fn energy_gap_is_bounded_by_pontryagin_gaps(cp in control_problem(), jet in control_jet()) {
        let gaps = pontryagin_gaps_at(&cp, &jet).unwrap();
        let rate = energy_rate_at(&cp, &jet).unwrap();
        let bound = energy_gap_bound(&cp, &jet).unwrap();
        let slack = 1e-12 * (1.0 + rate.total.abs() + rate.d_theta.abs() + bound);
        prop_assert!(rate.gap() <= bound * gaps.max() + slack, "{} > {} * {}", rate.gap(), bound, gaps.max());
    }

    #[test]
    fn embedding_preserves_the_action(
        m in 1usize..3,
        alpha in select(vec![0.25, 0.5, 0.75, 1.0]),
        seed_expr in expr_over(state_leaves(2, 2)),
        coeffs in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 8), 2),
    ) {
        // Keep the Lagrangian within order m.
        let l = seed_expr.substitute(&|v| match v {
            VarRef::State(c, d) if d > m => Some(Expr::var(VarRef::State(c, m))),
            _ => None,
        });
        let pb = FalvaProblem::new(alpha, 0.0, 1.0, m, 2, l, vec![vec![0.0; 2]; m]).unwrap();
        let cp = embed_variational(&pb).unwrap();
        let end = 0.99;
        let tr = Trajectory::new((0.0, end), coeffs).unwrap();
        let stack = |th: f64| -> Vec<f64> {
            let j = tr.jet_at(th, m).unwrap();
            (0..m).flat_map(|d| (0..2).map(move |c| (d, c))).map(|(d, c)| j.q[c][d]).collect()
        };
        let top = |th: f64| -> Vec<f64> { tr.jet_at(th, m).unwrap().q.iter().map(|c| c[m]).collect() };
        let ex = Extremal {
            q: Trajectory::interpolate((0.0, end), 7, 2 * m, stack).unwrap(),
            u: Trajectory::interpolate((0.0, end), 7, 2, top).unwrap(),
            p: Trajectory::constant((0.0, end), &vec![0.0; 2 * m]).unwrap(),
        };
        let lhs = action(&pb, &tr, 24).unwrap();
        let rhs = falva::control::control_action(&cp, &ex, 24).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0), "{} vs {}", lhs, rhs);
    }
}
