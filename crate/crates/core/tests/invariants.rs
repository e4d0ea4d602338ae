use approx::assert_relative_eq;
use proptest::prelude::*;

use svoc_core::adjoint::solve_adjoint;
use svoc_core::expr::{parse_expression, Func, Point, ScalarExpr, Var};
use svoc_core::optimality::{hamiltonian_fields, SecondVariation};
use svoc_core::problem::{parse_problem_json, ProblemSpec};
use svoc_core::quad::{make_grid, singular_weights, Grid};
use svoc_core::resolvent::build_q_kernel;
use svoc_core::state::{solve_state, Placement, ReferencePair, Trajectory};

fn leaf() -> impl Strategy<Value = ScalarExpr> {
    prop_oneof![
        (-5.0f64..5.0).prop_map(ScalarExpr::Num),
        (0u32..1000).prop_map(|k| ScalarExpr::Num(k as f64 / 8.0)),
        prop_oneof![Just(Var::T), Just(Var::S), Just(Var::Y), Just(Var::U)].prop_map(ScalarExpr::Var),
    ]
}

fn expr() -> impl Strategy<Value = ScalarExpr> {
    leaf().prop_recursive(5, 40, 2, |inner| {
        let b = |e: ScalarExpr| Box::new(e);
        prop_oneof![
            inner.clone().prop_map(move |a| ScalarExpr::Neg(b(a))),
            (inner.clone(), inner.clone()).prop_map(move |(a, c)| ScalarExpr::Add(b(a), b(c))),
            (inner.clone(), inner.clone()).prop_map(move |(a, c)| ScalarExpr::Sub(b(a), b(c))),
            (inner.clone(), inner.clone()).prop_map(move |(a, c)| ScalarExpr::Mul(b(a), b(c))),
            (inner.clone(), inner.clone()).prop_map(move |(a, c)| ScalarExpr::Div(b(a), b(c))),
            (inner.clone(), 0u32..4).prop_map(move |(a, k)| ScalarExpr::Pow(b(a), b(ScalarExpr::Num(k as f64)))),
            (
                prop_oneof![Just(Func::Sin), Just(Func::Cos), Just(Func::Exp), Just(Func::Sqrt), Just(Func::Log)],
                inner
            )
                .prop_map(move |(f, a)| ScalarExpr::Call(f, b(a))),
        ]
    })
}

fn point() -> impl Strategy<Value = Point> {
    (0.1f64..1.0, 0.0f64..1.0, -2.0f64..2.0, -1.5f64..1.5).prop_map(|(t, s, y, u)| Point::new(t, s * t, y, u))
}

fn same(a: f64, b: f64) -> bool {
    (a.is_nan() && b.is_nan()) || a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

proptest! {
    #[test]
    fn print_parse_round_trip(e in expr(), p in point()) {
        let text = e.to_string();
        let back = parse_expression(&text).unwrap();
        prop_assert!(same(e.eval(&p), back.eval(&p)), "{text}: {} vs {}", e.eval(&p), back.eval(&p));
        // printed derivatives re-parse as well
        let d = e.differentiate(Var::Y);
        let d_back = parse_expression(&d.to_string()).unwrap();
        prop_assert!(same(d.eval(&p), d_back.eval(&p)));
    }

    #[test]
    fn mixed_partials_commute(e in expr(), p in point()) {
        let yu = e.differentiate(Var::Y).differentiate(Var::U).eval(&p);
        let uy = e.differentiate(Var::U).differentiate(Var::Y).eval(&p);
        prop_assume!(yu.is_finite() && uy.is_finite());
        prop_assert!((yu - uy).abs() <= 1e-9 * (1.0 + yu.abs()), "{e}: {yu} vs {uy}");
    }

    #[test]
    fn derivative_matches_central_difference(e in expr(), p in point()) {
        let d = e.differentiate(Var::Y).eval(&p);
        let h = 1e-6;
        let plus = e.eval(&p.with(Var::Y, p.y + h));
        let minus = e.eval(&p.with(Var::Y, p.y - h));
        let dd = e.differentiate(Var::Y).differentiate(Var::Y).eval(&p.with(Var::Y, p.y + h));
        // only well-conditioned points: finite values and a tame second derivative
        prop_assume!(d.is_finite() && plus.is_finite() && minus.is_finite() && dd.is_finite());
        prop_assume!(dd.abs() < 1e3 && plus.abs().max(minus.abs()) < 1e3);
        let fd = (plus - minus) / (2.0 * h);
        prop_assert!((d - fd).abs() <= 1e-6 * (1.0 + d.abs()) + 1e-6, "{e}: {d} vs {fd}");
    }

    #[test]
    fn product_weight_row_sums(alpha in 0.05f64..0.95, n in 2usize..200) {
        let g = make_grid(1.0, n).unwrap();
        let w = singular_weights(alpha, g).unwrap();
        for k in [1, n / 2, n] {
            let t: f64 = g.node(k);
            assert_relative_eq!(w.row_sum(k), t.powf(alpha) / alpha, max_relative = 1e-12);
        }
    }

    #[test]
    fn free_term_passes_through_without_kernel(n in 2usize..64, c in -3.0f64..3.0) {
        let p = parse_problem_json(&format!(
            r#"{{"alpha": 0.4, "T": 2, "eta": "{c:?} + sin(t)", "f": "0", "g": "y"}}"#
        )).unwrap();
        let g = make_grid(2.0, n).unwrap();
        let y = solve_state(&p, &Trajectory::zeros(g, Placement::Nodes), &g).unwrap();
        for (t, v) in g.nodes().iter().zip(y.values()) {
            prop_assert_eq!(*v, c + t.sin());
        }
    }
}

struct Fixture {
    grid: Grid,
    variation: SecondVariation,
}

fn fixture() -> Fixture {
    let text = r#"{"alpha": 0.6, "T": 1, "eta": "1", "f": "0.3*y + sin(u) + 0.2*y*u",
                   "g": "y^2 - u^2 + y*u", "instant_costs": [{"t": 0.5, "h": "y^2"}]}"#;
    let p: ProblemSpec = parse_problem_json(text).unwrap();
    let g = make_grid(1.0, 24).unwrap();
    let pair = ReferencePair::solve(&p, Trajectory::constant(g, Placement::Nodes, 0.1), &g).unwrap();
    let adj = solve_adjoint(&p, &pair, &g).unwrap();
    let fields = hamiltonian_fields(&p, &pair, &adj, &g).unwrap();
    let q = build_q_kernel(&p, &pair, &g).unwrap();
    Fixture {
        grid: g,
        variation: SecondVariation::new(&p, &pair, &fields, q, &g).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn matrix_and_functional_forms_agree(values in prop::collection::vec(-1.0f64..1.0, 24), a in -4.0f64..4.0) {
        let fx = fixture();
        let v = Trajectory::new(fx.grid, Placement::Midpoints, values.clone()).unwrap();
        let k = fx.variation.k_matrix().unwrap();
        let vec = nalgebra::DVector::from_vec(values);
        let matrix = vec.dot(&(&k * &vec));
        let qf = fx.variation.functional(&v).unwrap();
        prop_assert!((matrix - qf).abs() <= 1e-10 * (1.0 + qf.abs()), "{matrix} vs {qf}");
        let scaled = fx.variation.functional(&v.scaled(a)).unwrap();
        prop_assert!((scaled - a * a * qf).abs() <= 1e-10 * (1e-300 + scaled.abs().max((a * a * qf).abs())));
    }
}
