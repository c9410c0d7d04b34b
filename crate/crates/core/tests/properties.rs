use helmdg::benchmarks::example2;
use helmdg::mesh::{lshape, unit_square};
use helmdg::verify::minimal_marking_size;
use helmdg::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn refinement_stays_conforming(lshaped in any::<bool>(), masks in prop::collection::vec(any::<u64>(), 1..8)) {
        let mut mesh = if lshaped { lshape(1).unwrap() } else { unit_square(1).unwrap() };
        let mut degrees = DegreeMap::uniform(mesh.num_triangles(), 1);
        let rho0 = mesh.shape_regularity();
        for mask in masks {
            let marked: Vec<usize> = (0..mesh.num_triangles()).filter(|t| mask >> (t % 64) & 1 == 1).collect();
            let hmax = mesh.h_max();
            let r = refine(&mesh, &degrees, &marked).unwrap();
            // rebuilding from raw arrays reruns every conformity check
            let rebuilt = Mesh::new(r.mesh.vertices().to_vec(), r.mesh.triangles().to_vec()).unwrap();
            prop_assert_eq!(rebuilt.num_edges(), r.mesh.num_edges());
            prop_assert!(r.mesh.shape_regularity() <= 2.0 * rho0 + 1e-12);
            prop_assert!(r.mesh.h_max() <= hmax);
            for &t in &marked {
                prop_assert!(r.parents.iter().filter(|&&p| p == t).count() >= 2);
            }
            mesh = r.mesh;
            degrees = r.degrees;
        }
    }

    #[test]
    fn greedy_marking_is_minimal(
        values in prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0], 1..=12),
        theta in prop::sample::select(vec![0.3, 0.5, 0.7, 1.0]),
    ) {
        let m = doerfler_mark(&values, theta).unwrap();
        if m.all_zero {
            prop_assert!(values.iter().all(|v| *v == 0.0));
        } else {
            prop_assert_eq!(m.elements.len(), minimal_marking_size(&values, theta));
            let total: f64 = values.iter().sum();
            let mass: f64 = m.elements.iter().map(|&i| values[i]).sum();
            prop_assert!(mass >= theta * total * (1.0 - 1e-12));
        }
    }

    #[test]
    fn estimators_aggregate_as_sums_of_squares(k in 1.0f64..12.0, p in 1usize..4, n in 1usize..4) {
        let bench = example2(k).unwrap();
        let mesh = bench.initial_mesh(n).unwrap();
        let degrees = DegreeMap::uniform(mesh.num_triangles(), p);
        let sys = assemble(&mesh, &degrees, &bench.problem).unwrap();
        let rep = estimate(&solve(&sys).unwrap()).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
        for e in &rep.elements {
            prop_assert!(close(e.eta * e.eta, e.eta_r * e.eta_r + e.eta_e * e.eta_e + e.eta_j * e.eta_j));
        }
        let sq = |f: fn(&ElementEstimate) -> f64| rep.elements.iter().map(|e| f(e).powi(2)).sum::<f64>();
        prop_assert!(close(rep.eta * rep.eta, sq(|e| e.eta)));
        prop_assert!(close(rep.eta_check * rep.eta_check, sq(|e| e.eta_check)));
        prop_assert!(close(rep.osc * rep.osc, sq(|e| e.osc)));
        prop_assert!(close(rep.eta_r * rep.eta_r, sq(|e| e.eta_r)));
    }
}
