use super::*;
use crate::ansatz::uniform_grid;
use crate::models::{make_conical, make_cylindrical, make_fik};

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn cylinder_base_drifts_and_fiber_stays() {
    let base = BaseGeometry::untwisted(2, 1.0).unwrap();
    let grid = uniform_grid(0.0, 10.0, 101).unwrap();
    let init = make_cylindrical(1.5, 3.0, &base, &grid).unwrap();
    for scheme in [Scheme::ExplicitRk4, Scheme::ImplicitTrapezoid] {
        let ctl = FlowControls::new(scheme, BoundaryKind::DriftingModel).with_outputs(vec![0.25, 0.5]);
        let traj = evolve(&init, &base, 1.0, &ctl).unwrap();
        assert_eq!(traj.times, vec![0.0, 0.25, 0.5, 1.0]);
        assert_eq!(traj.profiles[0], init);
        for (t, p) in traj.times.iter().zip(&traj.profiles) {
            assert!(p.psi().iter().all(|s| (s - 3.0).abs() < 1e-12));
            assert!(p.phi().iter().all(|f| (f - (3.0 - t)).abs() < 1e-10), "{scheme:?} t={t}");
        }
    }
}

#[test]
fn flat_cone_is_stationary() {
    let base = BaseGeometry::twisted(2, 2.0).unwrap();
    let grid = uniform_grid(0.0, 6.0, 121).unwrap();
    let init = make_conical(0.0, &base, &grid).unwrap();
    let traj = evolve(&init, &base, 1.0, &FlowControls::default()).unwrap();
    assert!(sup_diff(traj.last().phi(), init.phi()) <= 1e-8);
    assert!(sup_diff(traj.last().psi(), init.psi()) <= 1e-8);
}

#[test]
fn conical_constant_slot_drifts_with_slope_n_minus_lambda() {
    let base = BaseGeometry::twisted(2, 3.0).unwrap();
    let grid = uniform_grid(0.0, 8.0, 161).unwrap();
    let init = make_conical(0.0, &base, &grid).unwrap();
    let traj = evolve(&init, &base, 0.5, &FlowControls::default()).unwrap();
    let end = traj.last();
    let (lo, hi) = end.window_indices(5.0, 7.0).unwrap();
    let rho = &end.rho_grid()[lo..=hi];
    let y: Vec<f64> = rho.iter().zip(&end.phi()[lo..=hi]).map(|(r, f)| f - r.exp()).collect();
    let cols = vec![vec![1.0; rho.len()], rho.iter().map(|r| (-r).exp()).collect()];
    let c = crate::fit::fit_basis(&cols, &y).unwrap();
    let slope = c[0] / 0.5;
    assert!((slope + 1.0).abs() < 0.02, "slope {slope}");
}

#[test]
fn oversized_explicit_step_is_rejected() {
    let base = BaseGeometry::twisted(2, 3.0).unwrap();
    let grid = uniform_grid(0.0, 4.0, 81).unwrap();
    let init = make_conical(0.0, &base, &grid).unwrap();
    let ctl = FlowControls::default().with_dt(0.1);
    match evolve(&init, &base, 1.0, &ctl) {
        Err(Error::StabilityViolation { dt, bound, .. }) => assert!(dt > bound),
        other => panic!("expected a stability violation, got {other:?}"),
    }
}

#[test]
fn base_collapse_is_detected_consistently() {
    let base = BaseGeometry::untwisted(2, 2.0).unwrap();
    let grid = uniform_grid(0.0, 4.0, 41).unwrap();
    let init = make_cylindrical(1.0, 1.0, &base, &grid).unwrap();
    let fire = |dt: f64| match evolve(&init, &base, 2.0, &FlowControls::default().with_dt(dt)) {
        Err(Error::Singularity { time, kind, .. }) => {
            assert_eq!(kind, SingularityKind::PhiCollapse);
            time
        }
        other => panic!("expected a singularity, got {other:?}"),
    };
    let (t1, t2) = (fire(1e-3), fire(2.5e-4));
    assert!((t1 - 0.5).abs() < 0.01 && (t1 - t2).abs() < 0.05 * t2, "{t1} {t2}");
}

#[test]
fn schemes_agree_on_a_curved_flow() {
    let base = BaseGeometry::twisted(2, 3.0).unwrap();
    let grid = uniform_grid(0.0, 5.0, 101).unwrap();
    let init = make_conical(1.0, &base, &grid).unwrap();
    let ex = evolve(&init, &base, 0.3, &FlowControls::default()).unwrap();
    let ctl = FlowControls::new(Scheme::ImplicitTrapezoid, BoundaryKind::DriftingModel);
    let im = evolve(&init, &base, 0.3, &ctl).unwrap();
    for (a, b) in ex.last().phi().iter().zip(im.last().phi()) {
        assert!((a - b).abs() < 5e-5 * a, "{a} vs {b}");
    }
    assert!(ex.dt_history.len() > im.dt_history.len());
}

#[test]
fn potential_form_matches_coefficient_form() {
    let base = BaseGeometry::twisted(2, 3.0).unwrap();
    let grid = uniform_grid(0.0, 5.0, 101).unwrap();
    let init = make_conical(1.0, &base, &grid).unwrap();
    let ctl = FlowControls::default();
    let a = evolve(&init, &base, 0.5, &ctl).unwrap();
    let b = evolve_potential(&init, &base, 0.5, &ctl).unwrap();
    let pb = b.last().profile().unwrap();
    assert_eq!(a.times, b.times);
    for i in 0..grid.len() {
        let e = (a.last().phi()[i] - pb.phi()[i]).abs() / a.last().phi()[i];
        let f = (a.last().psi()[i] - pb.psi()[i]).abs() / a.last().psi()[i];
        assert!(e < 1e-9 && f < 1e-9, "i={i} {e} {f}");
    }
    let frozen = FlowControls::new(Scheme::ImplicitTrapezoid, BoundaryKind::FrozenModel);
    let a = evolve(&init, &base, 0.5, &frozen).unwrap();
    let b = evolve_potential(&init, &base, 0.5, &frozen).unwrap();
    let pb = b.last().profile().unwrap();
    for i in 0..grid.len() {
        assert!((a.last().phi()[i] - pb.phi()[i]).abs() < 1e-7 * a.last().phi()[i]);
    }
}

#[test]
fn potential_vanishes_on_the_flat_cone() {
    let base = BaseGeometry::twisted(2, 2.0).unwrap();
    let grid = uniform_grid(0.0, 5.0, 101).unwrap();
    let init = make_conical(0.0, &base, &grid).unwrap();
    for scheme in [Scheme::ExplicitRk4, Scheme::ImplicitTrapezoid] {
        let traj =
            evolve_potential(&init, &base, 1.0, &FlowControls::new(scheme, BoundaryKind::DriftingModel)).unwrap();
        assert!(traj.last().u.iter().all(|u| u.abs() < 1e-8));
    }
}

#[test]
fn residual_of_exact_families() {
    let base = BaseGeometry::untwisted(2, 1.0).unwrap();
    let grid = uniform_grid(0.0, 4.0, 41).unwrap();
    let cyl = |t: f64| make_cylindrical(1.0, 3.0 - t, &base, &grid);
    assert!(flow_equation_residual(cyl, &base, 1.0, 1e-3).unwrap() < 1e-10);
    // a wrong family is detected
    let wrong = |t: f64| make_cylindrical(1.0, 3.0 - 2.0 * t, &base, &grid);
    assert!(flow_equation_residual(wrong, &base, 1.0, 1e-3).unwrap() > 0.1);
    // the flat cone as a FIK family with constant B
    let cone = BaseGeometry::twisted(2, 2.0).unwrap();
    let b = crate::models::FikFunction::constant(1.0, 10.0).unwrap();
    let g = uniform_grid(0.0, 5.0, 101).unwrap();
    let fam = |t: f64| make_fik(1.0, t, &b, &cone, &g);
    assert!(flow_equation_residual(fam, &cone, 1.0, 1e-3).unwrap() < 1e-10);
}

#[test]
fn export_writes_index_and_slices() {
    let base = BaseGeometry::untwisted(2, 1.0).unwrap();
    let grid = uniform_grid(0.0, 4.0, 21).unwrap();
    let init = make_cylindrical(1.0, 3.0, &base, &grid).unwrap();
    let traj = evolve(&init, &base, 0.5, &FlowControls::default().with_outputs(vec![0.25])).unwrap();
    let dir = std::env::temp_dir().join(format!("krf-export-{}", std::process::id()));
    traj.export(&dir).unwrap();
    let index = std::fs::read_to_string(dir.join("index.csv")).unwrap();
    let lines: Vec<&str> = index.lines().collect();
    assert_eq!(lines[0], "time,filename,min_psi,min_phi");
    assert_eq!(lines.len(), 4);
    let back = RadialProfile::load_csv(&dir.join("slice_0002.csv")).unwrap();
    assert_eq!(&back, traj.last());
    std::fs::remove_dir_all(&dir).unwrap();
}
