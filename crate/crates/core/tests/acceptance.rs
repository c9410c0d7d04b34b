//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria that fail are reported but do not fail `cargo test`; set
//! `ACCEPTANCE_STRICT=1` to turn any FAIL into a nonzero exit.

#[path = "common/form.rs"]
mod form;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use helmdg::benchmarks::{example1, example3, example4, in_disc, manufactured_problem, Affine};
use helmdg::mesh::reference_triangle;
use helmdg::quadrature::triangle_rule;
use helmdg::verify::{self, CONSISTENCY_ORDER};
use helmdg::*;

const SEED: u64 = 2024;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn run(
    bench: &Benchmark,
    init: usize,
    p: usize,
    mode: RefineMode,
    max_steps: usize,
    max_dofs: Option<usize>,
    mut observer: impl FnMut(&StepView) -> std::io::Result<()>,
) -> RefinementHistory {
    let mesh = bench.initial_mesh(init).unwrap();
    let degrees = DegreeMap::uniform(mesh.num_triangles(), p);
    let options = AdaptOptions {
        theta: 0.7,
        mode,
        stop: StopCriteria {
            max_steps,
            max_dofs,
            target_eta: None,
        },
        exact: bench.exact.clone(),
        timing: true,
    };
    adapt(&bench.problem, mesh, degrees, &options, |v| observer(v))
        .unwrap()
        .0
}

fn uniform(bench: &Benchmark, p: usize, steps: usize) -> RefinementHistory {
    run(bench, 1, p, RefineMode::Uniform, steps, None, |_| Ok(()))
}

fn quadrature() -> Outcome {
    let suite = verify::quadrature_suite(false);
    let rule = triangle_rule(4).unwrap();
    let x2y2: f64 = rule
        .points
        .iter()
        .zip(&rule.weights)
        .map(|(x, w)| w * (x[0] * x[1]).powi(2))
        .sum();
    let err = (x2y2 - 1.0 / 180.0).abs() * 180.0;
    outcome(
        suite.passed && err <= 1e-12,
        format!("{}; x²y² relative error {err:.1e}", suite.detail),
    )
}

fn assembly_oracle() -> Outcome {
    let worst = form::worst_operator_mismatch(SEED);
    outcome(
        worst <= 1e-10,
        format!("worst relative mismatch {worst:.2e} (tol 1e-10)"),
    )
}

fn hand_value() -> Outcome {
    let one: Arc<dyn ExactSolution> = Arc::new(Affine {
        a: C64::new(0.0, 0.0),
        b: C64::new(0.0, 0.0),
        c: C64::new(1.0, 0.0),
    });
    let mesh = reference_triangle();
    let degrees = DegreeMap::uniform(1, 1);
    let prob = manufactured_problem("constant", 1.0, one.clone()).with_penalty(Penalty {
        delta: 0.25,
        ..Penalty::default()
    });
    let sys = assemble(&mesh, &degrees, &prob).unwrap();
    let c = DgSolution::project(&mesh, &degrees, &prob, |_| C64::new(1.0, 0.0))
        .unwrap()
        .coeffs;
    let ac = sys.matvec(&c);
    let value: C64 = ac.iter().zip(&c).map(|(a, b)| a * b.conj()).sum();
    let expected = C64::new(-0.5, 1.0 + 2f64.sqrt());
    let err = (value - expected).norm();
    outcome(
        err <= 1e-12,
        format!("a(1,1) = {value:.15} (error {err:.1e})"),
    )
}

fn consistency() -> Outcome {
    let suite = verify::consistency_suite(SEED);
    let bench = example1(5.0).unwrap();
    let exact = bench.exact.clone().unwrap();
    let mesh = bench.initial_mesh(2).unwrap();
    let default_policy = (1..=3)
        .map(|p| {
            let d = DegreeMap::uniform(mesh.num_triangles(), p);
            consistency_residual(&bench.problem, exact.as_ref(), &mesh, &d).unwrap()
        })
        .fold(0.0, f64::max);
    outcome(
        suite.passed,
        format!(
            "data order {CONSISTENCY_ORDER}: {} (tol 1e-8); default data order: {default_policy:.2e}",
            suite.detail
        ),
    )
}

fn polynomial() -> Outcome {
    let s = verify::polynomial_suite();
    outcome(s.passed, s.detail)
}

fn last_rate(errors: &[f64], n: usize) -> f64 {
    let m = errors.len() - 1;
    (errors[m - n] / errors[m]).log2() / n as f64
}

fn convergence_rate() -> Outcome {
    let h = uniform(&example1(5.0).unwrap(), 1, 6);
    let err: Vec<f64> = h.steps.iter().map(|s| s.err_ht.unwrap()).collect();
    let rate = last_rate(&err, 3);
    outcome(
        (rate - 1.0).abs() <= 0.15,
        format!(
            "rate over last 3 of 6 refinements {rate:.3} (target 1.0 ± 0.15); errors {err:.3?}"
        ),
    )
}

fn first_below_half(k: f64, max_steps: usize) -> Option<usize> {
    let h = uniform(&example1(k).unwrap(), 1, max_steps);
    h.steps
        .iter()
        .find(|s| s.err_rel.unwrap() < 0.5)
        .map(|s| s.step)
}

fn pollution() -> Outcome {
    let (a, b) = (first_below_half(5.0, 6), first_below_half(20.0, 6));
    let passed = matches!((a, b), (Some(x), Some(y)) if y > x);
    outcome(
        passed,
        format!("first step below 50%: k=5 {a:?}, k=20 {b:?}"),
    )
}

fn ratio() -> Outcome {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    let mut count = 0;
    for (p, steps) in [(1, 6), (3, 4)] {
        let h = uniform(&example1(5.0).unwrap(), p, steps);
        for s in h.steps.iter().filter(|s| s.mkhp <= 0.5) {
            let r = s.err_ht.unwrap() / s.eta_check;
            lo = lo.min(r);
            hi = hi.max(r);
            count += 1;
        }
    }
    outcome(
        count > 0 && lo >= 1e-2 && hi <= 1e2,
        format!("{count} steps with kh/p <= 0.5, err/eta_check in [{lo:.3}, {hi:.3}]"),
    )
}

fn marking() -> Outcome {
    let s = verify::marking_suite(SEED);
    outcome(s.passed, s.detail)
}

fn min_edge(mesh: &Mesh) -> f64 {
    mesh.edges()
        .iter()
        .map(|e| e.length)
        .fold(f64::INFINITY, f64::min)
}

fn max_edge(mesh: &Mesh) -> f64 {
    mesh.edges().iter().map(|e| e.length).fold(0.0, f64::max)
}

fn refinement_soundness() -> Outcome {
    let bench = example3(10.0).unwrap();
    let mut first = None;
    let mut last = (0.0, 0.0);
    let mut rho = (0.0, 0.0f64);
    let mut conforming = true;
    let h = run(&bench, 1, 1, RefineMode::Adaptive, 20, None, |v| {
        let m = v.mesh;
        conforming &= Mesh::new(m.vertices().to_vec(), m.triangles().to_vec()).is_ok();
        let r = m.shape_regularity();
        if first.is_none() {
            first = Some((min_edge(m), max_edge(m)));
            rho.0 = r;
        }
        rho.1 = rho.1.max(r);
        last = (min_edge(m), max_edge(m));
        Ok(())
    });
    let (min0, max0) = first.unwrap();
    let grading = (min0 / last.0) / (max0 / last.1);
    let steps = h.last().unwrap().step;
    outcome(
        conforming && steps == 20 && rho.1 <= 2.0 * rho.0 && grading >= 1e3,
        format!(
            "{steps} steps, conforming {conforming}, rho {:.3} -> max {:.3}; min h_e {min0:.3e} -> {:.3e}, \
             max h_e {max0:.3e} -> {:.3e}, relative decrease {grading:.1} (need >= 1000)",
            rho.0, rho.1, last.0, last.1
        ),
    )
}

fn adaptive_beats_uniform() -> Outcome {
    let bench = example3(5.0).unwrap();
    let limit = 20_000;
    let uni = run(&bench, 1, 2, RefineMode::Uniform, 10, Some(limit), |_| {
        Ok(())
    });
    let u = uni.steps.iter().rfind(|s| s.ndofs <= limit).unwrap();
    let ada = run(&bench, 1, 2, RefineMode::Adaptive, 60, Some(limit), |_| {
        Ok(())
    });
    let a = ada.steps.iter().rfind(|s| s.ndofs <= u.ndofs).unwrap();
    let (eu, ea) = (u.err_ht.unwrap(), a.err_ht.unwrap());
    outcome(
        ea <= 0.5 * eu,
        format!(
            "uniform {} dofs error {eu:.3e}; adaptive {} dofs error {ea:.3e}; ratio {:.3} (need <= 0.5)",
            u.ndofs,
            a.ndofs,
            ea / eu
        ),
    )
}

fn solvability_margin() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut steps = 0;
    let mut first = Vec::new();
    for k in [5.0, 20.0] {
        let h = uniform(&example1(k).unwrap(), 1, 6);
        first.push(format!("k={k}: {:.3}", h.steps[0].solvability));
        for w in h.steps.windows(2) {
            worst = worst.max((w[1].solvability / w[0].solvability - 0.5).abs());
        }
        steps += h.steps.len();
    }
    outcome(
        worst <= 1e-12,
        format!(
            "{steps} solves succeeded, initial values {}; worst deviation of the per-step ratio from 1/2 {worst:.1e}",
            first.join(", ")
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn example4_smoke() -> Outcome {
    let start = Instant::now();
    let bench = example4(Variant::G1, 10.0, 1.0).unwrap();
    let mut sizes = (Vec::new(), Vec::new());
    let h = run(&bench, 2, 1, RefineMode::Adaptive, 15, None, |v| {
        if v.record.step == 15 {
            for t in 0..v.mesh.num_triangles() {
                let side = if in_disc(v.mesh.centroid(t)) {
                    &mut sizes.0
                } else {
                    &mut sizes.1
                };
                side.push(v.mesh.diameter(t));
            }
        }
        Ok(())
    });
    let secs = start.elapsed().as_secs_f64();
    let eta: Vec<f64> = h.steps.iter().map(|s| s.eta_check).collect();
    let tail = &eta[eta.len() - 6..];
    let decreasing = h.steps.len() == 16 && tail.windows(2).all(|w| w[1] < w[0]);
    let ratio = median(sizes.1) / median(sizes.0);
    outcome(
        decreasing && ratio >= 2.0 && secs <= 600.0,
        format!("eta_check over last 5 steps {tail:.4?}; median h outside/inside {ratio:.2}; {secs:.1} s"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("quadrature exactness", quadrature),
        ("assembly oracle", assembly_oracle),
        ("hand value", hand_value),
        ("consistency", consistency),
        ("polynomial exactness", polynomial),
        ("convergence rate", convergence_rate),
        ("pollution ordering", pollution),
        ("ratio boundedness", ratio),
        ("marking oracle", marking),
        ("refinement soundness", refinement_soundness),
        ("adaptive beats uniform", adaptive_beats_uniform),
        ("solvability margin", solvability_margin),
        ("example 4 smoke", example4_smoke),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let o = check();
        failed += usize::from(!o.passed);
        println!(
            "{} {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
