use stabfem::assembly::{closure_by_name, StabilityParams};
use stabfem::mesh::{build_mesh, Mesh1D};
use stabfem::profiles::{profile_by_name, Couette, FlowProfile, Poiseuille, Tabulated};
use stabfem::solver::{
    evaluate_mode, filter_modes, leading_mode, path_by_name, solve_stability, Discretization, Resolve, SolveOptions,
};
use stabfem::sweep::{
    amplification_contours, critical_point_fem, grid_sweep, neutral_curve, CriticalOptions, NeutralConfig, SearchBox,
};
use std::sync::Arc;

fn coarse(n: usize) -> Discretization {
    Discretization::new(build_mesh(2.0, n, 1.0).unwrap(), Arc::new(Poiseuille::new(2.0).unwrap()), 5).unwrap()
}

fn params(re: f64, alpha: f64) -> StabilityParams {
    StabilityParams::new(re, alpha).unwrap()
}

#[test]
fn leading_mode_is_normalized_and_vanishes_at_walls() {
    let disc = coarse(40);
    let set = leading_mode(&disc, params(1e4, 1.0), &SolveOptions::default()).unwrap();
    let m = set.leading().unwrap();
    let vmax = (1..=disc.mesh.n_velocity_nodes()).map(|g| m.v(g).norm()).fold(0.0, f64::max);
    assert!((vmax - 1.0).abs() < 1e-14);
    for y in [0.0, 2.0] {
        let (u, v, _) = evaluate_mode(m, &disc.mesh, y).unwrap();
        assert_eq!((u.norm(), v.norm()), (0.0, 0.0));
    }
    assert!(m.flags.physical());
}

#[test]
fn reflected_mesh_gives_same_spectrum_for_symmetric_flow() {
    let p: Arc<dyn FlowProfile> = Arc::new(Poiseuille::new(2.0).unwrap());
    let graded = build_mesh(2.0, 12, 1.4).unwrap();
    let opts = SolveOptions::default();
    let a = solve_stability(&graded, p.clone(), params(3000.0, 1.1), &opts).unwrap();
    let b = solve_stability(&graded.reflected(), p, params(3000.0, 1.1), &opts).unwrap();
    let (ea, eb) = (a.all_eigenvalues(), b.all_eigenvalues());
    assert_eq!(ea.len(), eb.len());
    for c in ea.iter().take(10) {
        let d = eb.iter().map(|e| (e - c).norm()).fold(f64::INFINITY, f64::min);
        assert!(d < 1e-8, "{c}: {d}");
    }
}

#[test]
fn tabulated_poiseuille_tracks_analytic() {
    let samples: Vec<(f64, f64)> = (0..=400).map(|i| {
        let y = 2.0 * i as f64 / 400.0;
        (y, y * (2.0 - y))
    }).collect();
    let tab: Arc<dyn FlowProfile> = Arc::new(Tabulated::new(&samples, 2.0).unwrap());
    let mesh = build_mesh(2.0, 48, 1.0).unwrap();
    let opts = SolveOptions { resolve: Resolve::UntilAccepted(1), ..Default::default() };
    let a = filter_modes(solve_stability(&mesh, tab, params(1e4, 1.0), &opts).unwrap(), &opts.filter);
    let b = leading_mode(&coarse(48), params(1e4, 1.0), &opts).unwrap();
    assert!((a.leading().unwrap().c - b.leading().unwrap().c).norm() < 1e-4);
}

#[test]
fn couette_is_stable() {
    let p: Arc<dyn FlowProfile> = Arc::new(Couette::new(2.0).unwrap());
    let disc = Discretization::new(build_mesh(2.0, 40, 1.0).unwrap(), p, 5).unwrap();
    let set = leading_mode(&disc, params(1e4, 1.0), &SolveOptions::default()).unwrap();
    assert!(set.leading().unwrap().c.im < 0.0);
}

#[test]
fn every_path_and_closure_is_selectable() {
    let disc = coarse(6);
    for path in ["schur-qr", "coupled-qz"] {
        for closure in ["rotational", "normal-viscous"] {
            let opts = SolveOptions {
                path: path_by_name(path).unwrap(),
                closure: closure_by_name(closure).unwrap(),
                ..Default::default()
            };
            let set = disc.solve(params(500.0, 1.0), &opts).unwrap();
            assert_eq!(set.provenance.path, path);
            assert_eq!(set.provenance.closure, closure);
            assert!(!set.all_eigenvalues().is_empty());
        }
    }
}

#[test]
fn grid_sweep_is_deterministic_and_ordered() {
    let disc = coarse(24);
    let opts = SolveOptions { resolve: Resolve::UntilAccepted(1), ..Default::default() };
    let re = [4000.0, 8000.0, 12000.0];
    let alpha = [0.9, 1.0, 1.1];
    let g1 = grid_sweep(&disc, &re, &alpha, &opts).unwrap();
    let g2 = grid_sweep(&disc, &re, &alpha, &opts).unwrap();
    assert_eq!(g1, g2);
    assert_eq!((g1.cell(1, 2).re, g1.cell(1, 2).alpha), (8000.0, 1.1));
    assert!(grid_sweep(&disc, &[], &alpha, &opts).is_err());
    assert!(grid_sweep(&disc, &[2.0, 1.0], &alpha, &opts).is_err());

    for contour in amplification_contours(&g1, &[0.0, 0.002]) {
        for line in &contour.polylines {
            assert!(line.len() >= 2);
            for &(r, a) in line {
                assert!((4000.0..=12000.0).contains(&r) && (0.9..=1.1).contains(&a));
            }
        }
    }
}

#[test]
fn neutral_curve_on_coarse_mesh() {
    let disc = coarse(40);
    let cfg = NeutralConfig { alpha_lo: 0.8, alpha_hi: 1.2, ..Default::default() };
    let curve = neutral_curve(&disc, &[4000.0, 9000.0], &cfg, &SolveOptions::default()).unwrap();
    assert!(!curve.has_points_at(4000.0));
    assert!(curve.diagnostics.iter().any(|d| d.re == 4000.0));
    let pts: Vec<_> = curve.points.iter().filter(|p| p.re == 9000.0).collect();
    assert_eq!(pts.len(), 2, "{curve:?}");
    for p in pts {
        assert!(p.c.im.abs() <= 2.0 * cfg.tol_neutral);
        assert!(p.c.re > 0.2 && p.c.re < 0.3);
    }
}

#[test]
fn coarse_critical_point_near_reference() {
    let disc = coarse(96);
    let sbox = SearchBox { re_lo: 4000.0, re_hi: 8000.0, alpha_lo: 0.8, alpha_hi: 1.2 };
    let opts = CriticalOptions { re_rtol: 1e-5, alpha_tol: 1e-4, ci_tol: 1e-7, ..Default::default() };
    let p = critical_point_fem(&disc, sbox, &opts, &SolveOptions::default()).unwrap();
    let p = p.found().unwrap();
    assert!((p.re - 5772.22).abs() / 5772.22 < 0.05, "{p:?}");
    assert!((p.alpha - 1.0206).abs() < 0.05);
}

#[test]
fn profile_registry_round_trip() {
    for name in ["poiseuille", "Couette", "TANH"] {
        let p = profile_by_name(name, 1.5).unwrap();
        assert_eq!(p.height(), 1.5);
    }
    assert!(profile_by_name("blasius", 1.0).is_err());
    assert!(Mesh1D::from_nodes(vec![0.0, 1.0, 0.5]).is_err());
}
