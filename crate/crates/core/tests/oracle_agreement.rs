use stabfem::assembly::StabilityParams;
use stabfem::mesh::build_mesh;
use stabfem::oracle::{os_eigenvalues, os_spectrum_collocation, CollocationConfig};
use stabfem::profiles::{Poiseuille, TanhLayer};
use stabfem::solver::{leading_mode, Discretization, SolveOptions};
use std::sync::Arc;

#[test]
fn oracle_self_convergence_over_parameter_box() {
    let p = Poiseuille::new(2.0).unwrap();
    for (re, alpha) in [(1000.0, 0.5), (6000.0, 1.0), (20000.0, 2.0), (20000.0, 0.5)] {
        let a = os_eigenvalues(&CollocationConfig { m: 96, re, alpha, profile: &p }).unwrap().0[0];
        let b = os_eigenvalues(&CollocationConfig { m: 128, re, alpha, profile: &p }).unwrap().0[0];
        assert!((a - b).norm() < 1e-7, "Re = {re}, alpha = {alpha}: {a} vs {b}");
    }
}

#[test]
fn oracle_flags_and_sorting() {
    let p = TanhLayer::new(2.0).unwrap();
    let s = os_spectrum_collocation(&CollocationConfig { m: 64, re: 500.0, alpha: 0.8, profile: &p }).unwrap();
    assert!(s.eigenvalues.windows(2).all(|w| w[0].im >= w[1].im));
    assert!(s.discarded >= 4);
}

#[test]
fn fem_matches_oracle_on_three_by_three_grid() {
    let profile = Arc::new(Poiseuille::new(2.0).unwrap());
    let disc = Discretization::new(build_mesh(2.0, 257, 1.0).unwrap(), profile.clone(), 5).unwrap();
    let opts = SolveOptions::default();
    for re in [2000.0, 6000.0, 10000.0] {
        for alpha in [0.8, 1.0, 1.2] {
            let fem = leading_mode(&disc, StabilityParams::new(re, alpha).unwrap(), &opts).unwrap();
            let fem = fem.leading().unwrap().c;
            let oracle = os_eigenvalues(&CollocationConfig { m: 96, re, alpha, profile: profile.as_ref() }).unwrap().0[0];
            assert!((fem - oracle).norm() < 1e-3, "Re = {re}, alpha = {alpha}: {fem} vs {oracle}");
        }
    }
}
