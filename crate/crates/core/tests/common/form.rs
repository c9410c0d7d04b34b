//! Term-by-term transcription of the dG form, independent of the assembly code.

use std::sync::Arc;

use helmdg::benchmarks::{manufactured_problem, Affine};
use helmdg::mesh::{lshape, reference_triangle, unit_square};
use helmdg::quadrature::gauss_legendre;
use helmdg::{assemble, refine, DegreeMap, DgSolution, ExactSolution, Mesh, Penalty, Point, C64};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const I: C64 = C64::new(0.0, 1.0);

fn dot(a: [C64; 2], n: [f64; 2]) -> C64 {
    a[0] * n[0] + a[1] * n[1]
}

/// Collapsed Gauss rule on a physical triangle; nodes and weights on `[0, 1]`.
fn triangle_points(mesh: &Mesh, t: usize, n: usize) -> Vec<(Point, f64)> {
    let (x, w) = gauss_legendre(n);
    let [a, b, c] = mesh.triangle_points(t);
    let area = mesh.area(t);
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let (s, r) = (x[i], x[j]);
            let (l1, l2) = (s * (1.0 - r), s * r);
            let l0 = 1.0 - l1 - l2;
            let p = [
                l0 * a[0] + l1 * b[0] + l2 * c[0],
                l0 * a[1] + l1 * b[1] + l2 * c[1],
            ];
            // dλ = s ds dr on the unit simplex, area 1/2
            out.push((p, 2.0 * area * w[i] * w[j] * s));
        }
    }
    out
}

fn edge_points(mesh: &Mesh, e: usize, n: usize) -> Vec<(f64, Point, f64)> {
    let (x, w) = gauss_legendre(n);
    let h = mesh.edges()[e].length;
    x.iter()
        .zip(&w)
        .map(|(xi, wi)| (*xi, mesh.edge_point(e, *xi), h * wi))
        .collect()
}

/// a_T(u, v) written out term by term from the trace operators.
pub fn sesquilinear(u: &DgSolution, v: &DgSolution) -> C64 {
    let (mesh, degrees, prob) = (u.mesh, u.degrees, u.problem);
    let pen = prob.penalty;
    let mut a = C64::new(0.0, 0.0);
    for t in 0..mesh.num_triangles() {
        for (x, w) in triangle_points(mesh, t, 8) {
            let k = prob.k(x);
            let (gu, gv) = (u.gradient(t, x), v.gradient(t, x));
            a += w
                * (gu[0] * gv[0].conj() + gu[1] * gv[1].conj()
                    - k * k * u.value(t, x) * v.value(t, x).conj());
        }
    }
    for (e, edge) in mesh.edges().iter().enumerate() {
        let h = edge.length;
        let p = degrees.edge_degree(mesh, e) as f64;
        let n = mesh.edge_normal(e);
        for (s, x, w) in edge_points(mesh, e, 8) {
            let k = prob.k(x);
            if edge.is_boundary() {
                let c = pen.delta * k * h / p;
                let (uu, vv) = (u.mean(e, s), v.mean(e, s));
                let (du, dv) = (u.normal_gradient_jump(e, s), v.normal_gradient_jump(e, s));
                a += w
                    * (-c * uu * dv.conj() - c * du * vv.conj()
                        + I * (pen.delta * h / p) * du * dv.conj()
                        + I * k * (1.0 - c) * uu * vv.conj());
            } else {
                let (ju, jv) = (u.jump(e, s), v.jump(e, s));
                let (mu, mv) = (dot(u.mean_gradient(e, s), n), dot(v.mean_gradient(e, s), n));
                let (gu, gv) = (u.normal_gradient_jump(e, s), v.normal_gradient_jump(e, s));
                a += w
                    * (-ju * mv.conj() - mu * jv.conj()
                        + I * (pen.beta * h / p) * gu * gv.conj()
                        + I * (pen.alpha * p * p / h) * ju * jv.conj());
            }
        }
    }
    a
}

/// Meshes with at most eight elements, with mixed degrees up to 3.
pub fn small_meshes() -> Vec<(Mesh, Vec<usize>)> {
    let square = unit_square(1).unwrap();
    let refined = refine(&square, &DegreeMap::uniform(2, 1), &[0])
        .unwrap()
        .mesh;
    let mut out = vec![
        (reference_triangle(), vec![1]),
        (reference_triangle(), vec![3]),
        (square.clone(), vec![1, 3]),
        (square, vec![2, 2]),
    ];
    let n = refined.num_triangles();
    out.push((refined, (0..n).map(|t| 1 + t % 3).collect()));
    out.push((lshape(1).unwrap(), vec![2, 1, 3, 2, 1, 3]));
    out.push((unit_square(2).unwrap(), vec![1, 2, 3, 1, 2, 3, 1, 2]));
    out
}

/// Largest `max_i |(A c)_i - a_T(u_c, φ_i)| / max_i |a_T(u_c, φ_i)|` over the
/// small meshes and 20 random complex coefficient vectors each.
pub fn worst_operator_mismatch(seed: u64) -> f64 {
    let mut rng = StdRng::seed_from_u64(seed);
    let u: Arc<dyn ExactSolution> = Arc::new(Affine {
        a: C64::new(1.0, 0.0),
        b: C64::new(0.0, 0.0),
        c: C64::new(0.0, 0.0),
    });
    let mut worst: f64 = 0.0;
    for (mesh, degs) in small_meshes() {
        assert!(mesh.num_triangles() <= 8);
        let degrees = DegreeMap::from_vec(degs);
        let prob = manufactured_problem("oracle", 3.7, u.clone()).with_penalty(Penalty {
            alpha: 12.0,
            beta: 0.7,
            delta: 0.3,
        });
        let sys = assemble(&mesh, &degrees, &prob).unwrap();
        let n = sys.num_dofs();
        let basis: Vec<DgSolution> = (0..n)
            .map(|i| {
                let mut c = vec![C64::new(0.0, 0.0); n];
                c[i] = C64::new(1.0, 0.0);
                DgSolution::from_coefficients(&mesh, &degrees, &prob, c)
            })
            .collect();
        for _ in 0..20 {
            let c: Vec<C64> = (0..n)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let uc = DgSolution::from_coefficients(&mesh, &degrees, &prob, c.clone());
            let ac = sys.matvec(&c);
            let direct: Vec<C64> = basis.iter().map(|phi| sesquilinear(&uc, phi)).collect();
            let scale = direct.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let diff = ac
                .iter()
                .zip(&direct)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            worst = worst.max(diff / scale);
        }
    }
    worst
}
