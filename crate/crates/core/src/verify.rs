//! Built-in self checks run by `helmdg verify`.

use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::adaptivity::doerfler_mark;
use crate::benchmarks::{example1, manufactured_problem, Affine};
use crate::dg::{assemble, consistency_residual, solve, ExactSolution};
use crate::estimator::estimate;
use crate::mesh::{lshape, refine, unit_square, DegreeMap};
use crate::norms::error_ht;
use crate::quadrature::{
    edge_exactness_error, edge_rule, triangle_exactness_error, triangle_rule, TriangleRule,
};
use crate::C64;

/// Highest exactness degree swept by the quadrature suite.
const QUADRATURE_SWEEP: usize = 30;
/// Data quadrature order for consistency checks. The default policy leaves
/// quadrature errors near 1e-6 on coarse meshes, which would hide the form.
pub const CONSISTENCY_ORDER: usize = 20;

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Perturbs one weight of every triangle rule before checking it.
    pub corrupt_quadrature: bool,
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }
}

pub fn run(options: &VerifyOptions) -> VerifyReport {
    let suites = vec![
        quadrature_suite(options.corrupt_quadrature),
        consistency_suite(options.seed),
        marking_suite(options.seed),
        conformity_suite(options.seed),
        polynomial_suite(),
    ];
    VerifyReport { suites }
}

fn suite(name: &'static str, result: Result<String, String>) -> SuiteResult {
    match result {
        Ok(detail) => SuiteResult {
            name,
            passed: true,
            detail,
        },
        Err(detail) => SuiteResult {
            name,
            passed: false,
            detail,
        },
    }
}

pub fn quadrature_suite(corrupt: bool) -> SuiteResult {
    let check = || -> Result<String, String> {
        let mut worst: f64 = 0.0;
        for d in 0..=QUADRATURE_SWEEP {
            let rule = triangle_rule(d).map_err(|e| e.to_string())?;
            let err = if corrupt {
                let mut bad: TriangleRule = (*rule).clone();
                bad.weights[0] *= 1.0 + 1e-6;
                triangle_exactness_error(&bad)
            } else {
                triangle_exactness_error(&rule)
            };
            let edge = edge_exactness_error(&*edge_rule(d).map_err(|e| e.to_string())?);
            worst = worst.max(err).max(edge);
            if err > 1e-12 || edge > 1e-12 {
                return Err(format!("degree {d}: triangle {err:.2e}, edge {edge:.2e}"));
            }
        }
        Ok(format!(
            "degrees 0..={QUADRATURE_SWEEP}, worst relative error {worst:.2e}"
        ))
    };
    suite("quadrature exactness", check())
}

fn random_affine(rng: &mut StdRng) -> Affine {
    let mut c = || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    Affine {
        a: c(),
        b: c(),
        c: c(),
    }
}

pub fn consistency_suite(seed: u64) -> SuiteResult {
    let check = || -> Result<String, String> {
        let mesh = unit_square(2).map_err(|e| e.to_string())?;
        let mut worst: f64 = 0.0;
        let bench = example1(5.0).map_err(|e| e.to_string())?;
        let problem = bench
            .problem
            .clone()
            .with_data_order(Some(CONSISTENCY_ORDER));
        let exact = bench.exact.clone().unwrap();
        for p in 1..=3 {
            let d = DegreeMap::uniform(mesh.num_triangles(), p);
            let r = consistency_residual(&problem, exact.as_ref(), &mesh, &d)
                .map_err(|e| e.to_string())?;
            if r > 1e-8 {
                return Err(format!("plane wave, p = {p}: residual {r:.2e}"));
            }
            worst = worst.max(r);
        }
        let mut rng = StdRng::seed_from_u64(seed);
        for trial in 0..5 {
            let u: Arc<dyn ExactSolution> = Arc::new(random_affine(&mut rng));
            let k = rng.gen_range(0.5..10.0);
            let prob = manufactured_problem("affine", k, u.clone());
            let d = DegreeMap::uniform(mesh.num_triangles(), 1 + trial % 3);
            let r =
                consistency_residual(&prob, u.as_ref(), &mesh, &d).map_err(|e| e.to_string())?;
            if r > 1e-12 {
                return Err(format!("affine trial {trial}: residual {r:.2e}"));
            }
            worst = worst.max(r);
        }
        Ok(format!("worst residual {worst:.2e}"))
    };
    suite("consistency", check())
}

/// Size of the smallest subset carrying `theta` of the total, by enumeration.
pub fn minimal_marking_size(squared: &[f64], theta: f64) -> usize {
    let n = squared.len();
    let total: f64 = squared.iter().sum();
    let mut best = n;
    for mask in 0u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if size >= best {
            continue;
        }
        let mass: f64 = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| squared[i])
            .sum();
        // Relative slack absorbs summation-order rounding.
        if mass >= theta * total * (1.0 - 1e-12) {
            best = size;
        }
    }
    best
}

pub fn marking_suite(seed: u64) -> SuiteResult {
    let mut rng = StdRng::seed_from_u64(seed);
    let thetas = [0.3, 0.5, 0.7, 1.0];
    let instances = 200;
    let mut matches = 0;
    let mut first_failure = None;
    for i in 0..instances {
        let n = rng.gen_range(1..=12);
        let values: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.1) {
                    0.0
                } else {
                    rng.gen_range(0.0..1.0)
                }
            })
            .collect();
        let theta = thetas[i % thetas.len()];
        let ok = match doerfler_mark(&values, theta) {
            Ok(m) if m.all_zero => values.iter().all(|v| *v == 0.0),
            Ok(m) => m.elements.len() == minimal_marking_size(&values, theta),
            Err(_) => false,
        };
        if ok {
            matches += 1;
        } else if first_failure.is_none() {
            first_failure = Some(i);
        }
    }
    let detail = format!("{matches}/{instances} instances match exhaustive search");
    let result = match first_failure {
        None => Ok(detail),
        Some(i) => Err(format!("{detail}; first mismatch at instance {i}")),
    };
    suite("marking oracle", result)
}

pub fn conformity_suite(seed: u64) -> SuiteResult {
    let check = || -> Result<String, String> {
        let mut rng = StdRng::seed_from_u64(seed ^ 0x5eed);
        let mut steps = 0;
        for start in [unit_square(1), lshape(1)] {
            let mut mesh = start.map_err(|e| e.to_string())?;
            let mut degrees = DegreeMap::uniform(mesh.num_triangles(), 1);
            let rho0 = mesh.shape_regularity();
            for _ in 0..20 {
                let marked: Vec<usize> = (0..mesh.num_triangles())
                    .filter(|_| rng.gen_bool(0.2))
                    .collect();
                let hmax = mesh.h_max();
                // refine rebuilds through full validation, so success means conformity.
                let r = refine(&mesh, &degrees, &marked).map_err(|e| e.to_string())?;
                mesh = r.mesh;
                degrees = r.degrees;
                if mesh.shape_regularity() > 2.0 * rho0 + 1e-12 {
                    return Err(format!(
                        "shape regularity {} exceeds 2 × {rho0}",
                        mesh.shape_regularity()
                    ));
                }
                if mesh.h_max() > hmax {
                    return Err("h_max increased".into());
                }
                steps += 1;
            }
        }
        Ok(format!(
            "{steps} random refinements conforming and shape regular"
        ))
    };
    suite("conformity", check())
}

pub fn polynomial_suite() -> SuiteResult {
    let check = || -> Result<String, String> {
        let mesh = unit_square(3).map_err(|e| e.to_string())?;
        let u: Arc<dyn ExactSolution> = Arc::new(Affine {
            a: C64::new(1.0, 0.0),
            b: C64::new(0.0, 0.0),
            c: C64::new(0.0, 0.0),
        });
        let mut worst_err: f64 = 0.0;
        let mut worst_eta: f64 = 0.0;
        for k in [1.0, 5.0, 20.0] {
            let prob = manufactured_problem("linear", k, u.clone());
            for p in 1..=3 {
                let d = DegreeMap::uniform(mesh.num_triangles(), p);
                let sys = assemble(&mesh, &d, &prob).map_err(|e| e.to_string())?;
                let sol = solve(&sys).map_err(|e| e.to_string())?;
                let err = error_ht(&sol, u.as_ref())
                    .map_err(|e| e.to_string())?
                    .absolute;
                let rep = estimate(&sol).map_err(|e| e.to_string())?;
                if err > 1e-8 || rep.eta > 1e-9 || rep.eta_check > 1e-9 {
                    return Err(format!(
                        "k = {k}, p = {p}: error {err:.2e}, eta {:.2e}, eta_check {:.2e}",
                        rep.eta, rep.eta_check
                    ));
                }
                worst_err = worst_err.max(err);
                worst_eta = worst_eta.max(rep.eta).max(rep.eta_check);
            }
        }
        Ok(format!(
            "worst error {worst_err:.2e}, worst estimator {worst_eta:.2e}"
        ))
    };
    suite("polynomial exactness", check())
}
