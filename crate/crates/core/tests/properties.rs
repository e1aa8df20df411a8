use proptest::prelude::*;
use stabfem::assembly::{Rotational, StabilityParams};
use stabfem::elements::{element_integrals, gauss_rule};
use stabfem::mesh::build_mesh;
use stabfem::profiles::{profile_by_name, Poiseuille};
use stabfem::solver::Discretization;
use std::sync::Arc;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mesh_counts_and_connectivity(a in 0.1f64..5.0, ne in 1usize..60, beta in 0.5f64..2.0) {
        let mesh = build_mesh(a, ne, beta).unwrap();
        prop_assert_eq!(mesh.n_velocity_nodes(), 2 * ne - 1);
        prop_assert_eq!(mesh.n_pressure_nodes(), ne + 1);
        prop_assert!(mesh.nodes().windows(2).all(|w| w[1] > w[0]));
        let l1 = mesh.velocity_connectivity();
        prop_assert_eq!(l1.rows()[0][0], 0);
        prop_assert_eq!(l1.rows()[ne - 1][2], 0);
        let total: f64 = (0..ne).map(|j| mesh.h(j)).sum();
        prop_assert!((total - a).abs() < 1e-12 * a);
    }

    #[test]
    fn element_blocks_are_symmetric(y0 in 0.0f64..1.0, h in 1e-3f64..1.0) {
        let p = Poiseuille::new(2.0).unwrap();
        let e = element_integrals((y0, y0 + h), &p, &gauss_rule(5).unwrap()).unwrap();
        for n in 0..3 {
            for k in 0..3 {
                prop_assert!((e.m[n][k] - e.m[k][n]).abs() <= 1e-15 * h);
                prop_assert!((e.a[n][k] - e.a[k][n]).abs() <= 1e-12 / h);
                prop_assert!((e.mu[n][k] - e.mu[k][n]).abs() <= 1e-15);
            }
        }
        // Columns of a integrate phi_n' against constants: zero row sums.
        for n in 0..3 {
            prop_assert!(e.a[n].iter().sum::<f64>().abs() <= 1e-11 / h);
        }
    }

    #[test]
    fn assembled_blocks_have_expected_structure(ne in 1usize..16, re in 10.0f64..1e5, alpha in 0.05f64..3.0) {
        let p = profile_by_name("tanh", 2.0).unwrap();
        let d = Discretization::new(build_mesh(2.0, ne, 1.0).unwrap(), p, 5).unwrap();
        let sys = d.assemble(StabilityParams::new(re, alpha).unwrap(), &Rotational);
        let n = ne - 1;
        prop_assert_eq!(sys.k.rows(), 2 * (2 * n + 1));
        prop_assert_eq!(sys.g.rows(), n + 2);
        for i in 0..sys.g.rows() {
            prop_assert!(sys.g[(i, i)].re < 0.0);
            prop_assert_eq!(sys.g[(i, i)].im, 0.0);
        }
    }

    #[test]
    fn shift_of_profile_shifts_leading_eigenvalue(kappa in -2.0f64..2.0) {
        let base: Arc<dyn stabfem::profiles::FlowProfile> = Arc::new(Poiseuille::new(2.0).unwrap());
        let shifted = Arc::new(stabfem::profiles::Shifted::new(base.clone(), kappa));
        let mesh = build_mesh(2.0, 4, 1.0).unwrap();
        let opts = stabfem::solver::SolveOptions::default();
        let params = StabilityParams::new(2000.0, 1.0).unwrap();
        let a = stabfem::solver::solve_stability(&mesh, base, params, &opts).unwrap().all_eigenvalues();
        let b = stabfem::solver::solve_stability(&mesh, shifted, params, &opts).unwrap().all_eigenvalues();
        prop_assert!((a[0] + kappa - b[0]).norm() < 1e-9);
    }
}
