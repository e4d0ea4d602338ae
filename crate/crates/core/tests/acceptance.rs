//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the lines always appear in the output.

use std::time::{Duration, Instant};

use nalgebra::DVector;
use statrs::function::erf::erfc;
use svoc_core::optimality::{second_order_analysis, Verdict};
use svoc_core::oracle::{
    abel_solution, confirm_descent, convergence_study, fd_expansion_check, variational_fd_check,
    DEFAULT_DELTAS, DEFAULT_EXPANSION_CELLS,
};
use svoc_core::problem::{builtin, ProblemSpec};
use svoc_core::resolvent::{build_pair_resolvent, build_q_kernel, represent_solution};
use svoc_core::state::solve_y1;
use svoc_core::{
    evaluate_cost, make_grid, second_order_test, Placement, ReferencePair, Trajectory,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn run(id: usize, name: &str, limit: Option<Duration>, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(body));
    let elapsed = start.elapsed();
    let (pass, detail) = match result {
        Ok(o) => (o.pass, o.detail),
        Err(_) => (false, "panicked".to_string()),
    };
    let in_time = !matches!(limit, Some(l) if elapsed > l);
    let ok = pass && in_time;
    let limit = limit.map_or(String::new(), |l| format!(" (limit {} s)", l.as_secs()));
    println!(
        "[{}] {id}. {name}: {detail}; {:.2} s{limit}",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
    );
    ok
}

fn pair(p: &ProblemSpec, n: usize, u: f64) -> (svoc_core::Grid, ReferencePair) {
    let g = make_grid(p.horizon(), n).unwrap();
    let pr = ReferencePair::solve(p, Trajectory::constant(g, Placement::Nodes, u), &g).unwrap();
    (g, pr)
}

fn paper_example() -> Outcome {
    let p = builtin("paper_example", &[]).unwrap();
    let (g, zero) = pair(&p, 256, 0.0);
    let dev0 = g
        .nodes()
        .iter()
        .zip(zero.y.values())
        .map(|(t, y)| (y - (1.0 + t.powf(1.5))).abs())
        .fold(0.0, f64::max);
    let j0 = evaluate_cost(&p, &zero.y, &zero.u, &g).unwrap().total;
    let (_, half) = pair(&p, 256, -0.5);
    let dev1 = half.y.values().iter().map(|y| (y - 1.0).abs()).fold(0.0, f64::max);
    let j1 = evaluate_cost(&p, &half.y, &half.u, &g).unwrap().total;
    let pass = dev0 <= 1e-12 && (j0 - 2.0).abs() <= 1e-12 && dev1 <= 1e-12 && (j1 - 0.5).abs() <= 1e-12;
    outcome(
        pass,
        format!("u=0: max|y-(1+t^1.5)|={dev0:.1e}, J={j0:.15}; u=-1/2: max|y-1|={dev1:.1e}, J={j1:.15}"),
    )
}

fn analytic_convergence() -> Outcome {
    // E_{1/2}(z) = exp(z^2) erfc(-z) at z = sqrt(pi), independent of the series
    let z = std::f64::consts::PI.sqrt();
    let closed = (z * z).exp() * erfc(-z);
    let series = abel_solution(1.0, 0.5, 1.0).unwrap();
    let oracle_ok = ((series - closed) / closed).abs() < 1e-9;
    let table = convergence_study(1.0, 0.5, &[256, 512, 1024, 2048, 4096]).unwrap();
    let errors: Vec<f64> = table.rows.iter().map(|r| r.rel_error).collect();
    let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    let last = *errors.last().unwrap();
    outcome(
        oracle_ok && decreasing && last <= 1e-2,
        format!(
            "rel errors {}; y(1) series vs closed form agree: {oracle_ok}",
            errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" > ")
        ),
    )
}

fn representation() -> Outcome {
    let p = builtin("abel_linear", &[("lambda", 0.5)]).unwrap();
    let (g, pr) = pair(&p, 1024, 0.0);
    let phi = build_pair_resolvent(&p, &pr, &g).unwrap();
    let eta = Trajectory::constant(g, Placement::Nodes, 1.0);
    let rep = represent_solution(&phi, &eta, &g).unwrap();
    let rel1 = rep.sup_distance(&pr.y).unwrap() / pr.y.sup_norm();

    let p = builtin("lq", &[("a", 0.5), ("b", 1.0), ("r", 1.0)]).unwrap();
    let (g, pr) = pair(&p, 1024, 0.0);
    let q = build_q_kernel(&p, &pr, &g).unwrap();
    let v = Trajectory::from_fn(g, Placement::Nodes, |t| 1.0 + t).unwrap();
    let marched = solve_y1(&p, &pr, &v, &g).unwrap();
    let routed = q.apply(&v).unwrap();
    let rel2 = routed.sup_distance(&marched).unwrap() / marched.sup_norm();
    outcome(
        rel1 <= 1e-2 && rel2 <= 2e-2,
        format!("resolvent vs marching {rel1:.2e} (<= 1e-2); Q-route vs Y1 {rel2:.2e} (<= 2e-2)"),
    )
}

/// Ratios inside the band, or errors at rounding level when the expansion is
/// exact for the problem at hand.
fn band_or_exact(errors: &[f64], ratios: &[f64], lo: f64, hi: f64) -> (bool, String) {
    if errors.iter().all(|&e| e <= 1e-10) {
        let max = errors.iter().fold(0.0f64, |m, &e| m.max(e));
        (true, format!("exact (max {max:.1e})"))
    } else {
        let ok = ratios.iter().all(|r| (lo..=hi).contains(r));
        (ok, format!("ratios {}", ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(",")))
    }
}

fn variational() -> Outcome {
    let cases = [
        ("lq", builtin("lq", &[("a", 0.5), ("b", 1.0), ("r", 1.0)]).unwrap(), 0.0),
        ("sing_quad", builtin("sing_quad", &[("c", 1.0)]).unwrap(), 0.0),
        ("paper_example", builtin("paper_example", &[]).unwrap(), -0.5),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, p, u) in cases {
        let (g, pr) = pair(&p, 2048, u);
        let v = Trajectory::from_fn(g, Placement::Nodes, |t| 1.0 + 0.5 * t).unwrap();
        let r = variational_fd_check(&p, &pr, &v, &DEFAULT_DELTAS, &g).unwrap();
        let e1: Vec<f64> = r.rows.iter().map(|x| x.e1).collect();
        let e2: Vec<f64> = r.rows.iter().map(|x| x.e2).collect();
        let (ok1, d1) = band_or_exact(&e1, &r.e1_ratios, 1.5, 2.5);
        let (ok2, d2) = band_or_exact(&e2, &r.e2_ratios, 3.0, 5.0);
        pass &= ok1 && ok2;
        parts.push(format!("{name}: e1 {d1}, e2 {d2}"));
    }
    outcome(pass, parts.join("; "))
}

fn expansion() -> Outcome {
    let p = builtin("sing_quad", &[("c", 1.0)]).unwrap();
    let g = make_grid(1.0, DEFAULT_EXPANSION_CELLS).unwrap();
    let u = Trajectory::zeros(g, Placement::Nodes);
    let v = Trajectory::constant(g, Placement::Midpoints, 1.0);
    let r = fd_expansion_check(&p, &u, &v, &DEFAULT_DELTAS, &g).unwrap();
    let qf_ok = (r.quadratic_form + 16.0 / 3.0).abs() <= 1e-2;
    let ratios_ok = r.ratios.iter().all(|&x| x <= 0.3);
    // closed form of the continuous problem: J(delta) - J(0) = 8/3 delta^2 + 2 delta^4
    let closed_ok = r.rows.iter().all(|row| {
        let d = row.delta;
        let exact = 8.0 / 3.0 * d * d + 2.0 * d.powi(4);
        ((row.delta_j - exact) / exact).abs() < 1e-3
    });
    outcome(
        qf_ok && ratios_ok && closed_ok,
        format!(
            "QF={:.6} (target -16/3); r ratios {}; dJ matches 8/3 d^2 + 2 d^4: {closed_ok}",
            r.quadratic_form,
            r.ratios.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(",")
        ),
    )
}

fn second_order() -> Outcome {
    let p = builtin("sing_quad", &[("c", 1.0)]).unwrap();
    let (g, pr) = pair(&p, 1024, 0.0);
    let holds = second_order_test(&p, &pr, &g, None).unwrap();
    let holds_ok = holds.verdict == Verdict::Holds && holds.lambda_max <= 1e-8 * holds.k_norm;

    let p = builtin("sing_quad", &[("c", -1.0)]).unwrap();
    let (g, pr) = pair(&p, 1024, 0.0);
    let violated = second_order_test(&p, &pr, &g, None).unwrap();
    let descent = violated
        .violating_direction
        .as_ref()
        .map(|v| confirm_descent(&p, &pr.u, v, 1e-2, &g).unwrap());
    let violated_ok = violated.verdict == Verdict::Violated
        && descent.as_ref().is_some_and(|d| d.decreased && d.second_difference < 0.0);

    // full resolvent and kernel path on a problem with state feedback
    let p = builtin("lq", &[("a", 0.5), ("b", 1.0), ("r", 1.0)]).unwrap();
    let (g, pr) = pair(&p, 256, 0.0);
    let full = second_order_analysis(&p, &pr, &g, None).unwrap();
    let k = &full.report.k;
    let v = DVector::from_fn(256, |i, _| (i as f64 * 0.37).sin());
    let vt = Trajectory::new(g, Placement::Midpoints, v.iter().copied().collect()).unwrap();
    let direct = full.variation.functional(&vt).unwrap();
    let agree = (v.dot(&(k * &v)) - direct).abs() <= 1e-10 * (1.0 + direct.abs());
    let full_ok = agree && full.report.lambda_max.is_finite() && !full.variation.kernel().is_zero();

    outcome(
        holds_ok && violated_ok && full_ok,
        format!(
            "c=1 {:?} lambda_max={:.3e} (||K||={:.3e}); c=-1 {:?} lambda_max={:.3e}, J(u*+dv)-J(u*)={:.3e}; lq N=256 kernel path vKv=QF: {agree}",
            holds.verdict,
            holds.lambda_max,
            holds.k_norm,
            violated.verdict,
            violated.lambda_max,
            descent.map_or(f64::NAN, |d| d.j_perturbed - d.j_star),
        ),
    )
}

fn derivative_suite() -> Outcome {
    use rand::{Rng, SeedableRng};
    let problems = [
        builtin("paper_example", &[]).unwrap(),
        builtin("abel_linear", &[("lambda", 0.7)]).unwrap(),
        builtin("sing_quad", &[("c", -1.3)]).unwrap(),
        builtin("lq", &[("a", 0.5), ("b", -2.0), ("r", 0.25)]).unwrap(),
    ];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for p in &problems {
        let d = p.derivatives();
        for _ in 0..100 {
            let t = rng.random_range(0.05..1.0);
            let s = rng.random_range(0.0..t);
            let y = rng.random_range(-2.0..2.0);
            let u = rng.random_range(-1.0..1.0);
            for (fun, partials) in [(p.f(), &d.f), (p.g(), &d.g)] {
                let at = |dy: f64, du: f64| fun.eval4(t, s, y + dy, u + du);
                let fd = fd_partials(&at);
                for ((_, expr), approx) in partials.entries().iter().zip(fd) {
                    let exact = expr.eval4(t, s, y, u);
                    worst = worst.max((exact - approx).abs() / exact.abs().max(1.0));
                }
            }
            for h in &d.h {
                let at = |dy: f64, _: f64| h.value.eval4(t, 0.0, y + dy, 0.0);
                let fd = fd_partials(&at);
                worst = worst.max((h.d_y.eval4(t, 0.0, y, 0.0) - fd[1]).abs() / fd[1].abs().max(1.0));
                worst = worst.max((h.d_yy.eval4(t, 0.0, y, 0.0) - fd[3]).abs() / fd[3].abs().max(1.0));
            }
        }
    }
    outcome(worst <= 1e-6, format!("worst relative deviation {worst:.2e} over 4 problems x 100 points"))
}

/// `[value, d_y, d_u, d_yy, d_yu, d_uu]` by central differences.
fn fd_partials(f: &impl Fn(f64, f64) -> f64) -> [f64; 6] {
    let h1 = 1e-5;
    let h2 = 1e-4;
    [
        f(0.0, 0.0),
        (f(h1, 0.0) - f(-h1, 0.0)) / (2.0 * h1),
        (f(0.0, h1) - f(0.0, -h1)) / (2.0 * h1),
        (f(h2, 0.0) - 2.0 * f(0.0, 0.0) + f(-h2, 0.0)) / (h2 * h2),
        (f(h2, h2) - f(h2, -h2) - f(-h2, h2) + f(-h2, -h2)) / (4.0 * h2 * h2),
        (f(0.0, h2) - 2.0 * f(0.0, 0.0) + f(0.0, -h2)) / (h2 * h2),
    ]
}

fn main() {
    let secs = |s| Some(Duration::from_secs(s));
    let results = [
        run(1, "Paper Example reproduction", secs(1), paper_example),
        run(2, "Analytic convergence", secs(10), analytic_convergence),
        run(3, "Resolvent representation equivalence", None, representation),
        run(4, "Variational consistency", None, variational),
        run(5, "Expansion identity", None, expansion),
        run(6, "Second-order verdicts", secs(30), second_order),
        run(7, "Symbolic-derivative suite", None, derivative_suite),
    ];
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
