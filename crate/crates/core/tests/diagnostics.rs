use tumorsim::cli_io::{InitSpec, Profile, ProfileKind, RunConfig};
use tumorsim::diagnostics::{energy_balance, mean_bounds, theta_test_points, vi_residual};
use tumorsim::model::GrowthRate;
use tumorsim::stepper::{run, Trajectory};
use tumorsim::Error;

fn integrate(cfg: &RunConfig) -> Trajectory {
    let s = cfg.build().unwrap();
    run(&s.model, &s.initial, &s.scheme).unwrap()
}

fn uniform(gamma: f64) -> RunConfig {
    RunConfig {
        t_end: 0.01,
        output_every: 10,
        kappa: 0.0,
        gamma: GrowthRate::Constant { value: gamma },
        init: InitSpec::Profiles {
            phi1: Profile::constant(0.3),
            phi2: Profile::constant(0.2),
            rho: Profile::constant(0.0),
            w: Profile::constant(0.0),
            noise: 0.0,
        },
        ..RunConfig::default()
    }
}

#[test]
fn stationary_state_has_zero_residual() {
    let traj = integrate(&uniform(0.0));
    let rep = energy_balance(&traj).unwrap();
    assert!(rep.max_abs < 1e-12, "{}", rep.max_abs);
    let b = mean_bounds(&traj, 0.5, 0.05);
    assert!(b.phi0_bound_holds(0.0) && b.means_positive());
    assert!((b.min_phi1 - 0.3).abs() < 1e-14 && (b.min_phi2 - 0.2).abs() < 1e-14);
}

#[test]
fn uniform_growth_decreases_phi0_above_bound() {
    let traj = integrate(&RunConfig {
        t_end: 0.1,
        output_every: 50,
        ..uniform(0.5)
    });
    let means: Vec<f64> = traj.samples.iter().map(|s| s.diag.mean_phi[0]).collect();
    assert!(means.windows(2).all(|w| w[1] < w[0]));
    assert!(mean_bounds(&traj, 0.5, 0.05).phi0_bound_holds(1e-6));
}

#[test]
fn single_sample_is_too_few() {
    let traj = integrate(&RunConfig {
        t_end: 0.0,
        ..RunConfig::default()
    });
    assert_eq!(traj.samples.len(), 1);
    assert!(matches!(energy_balance(&traj), Err(Error::TooFewSamples { .. })));
}

/// Without growth and nutrient exchange the reduced energy decays along the flow.
#[test]
fn reduced_energy_decays_without_sources() {
    let cfg = RunConfig {
        t_end: 0.02,
        output_every: 5,
        kappa: 0.0,
        gamma: GrowthRate::Constant { value: 0.0 },
        init: InitSpec::Profiles {
            phi1: Profile {
                kind: ProfileKind::Cos,
                mean: 0.35,
                amp: 0.1,
                mode: 1,
            },
            phi2: Profile {
                kind: ProfileKind::Cos,
                mean: 0.15,
                amp: 0.1,
                mode: 2,
            },
            rho: Profile::constant(0.5),
            w: Profile::constant(0.0),
            noise: 0.0,
        },
        ..RunConfig::default()
    };
    let traj = integrate(&cfg);
    let e: Vec<f64> = traj.samples.iter().map(|s| s.diag.reduced_energy).collect();
    assert!(e.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{e:?}");
    assert!(traj.samples.iter().all(|s| s.diag.dissipation >= -1e-10));
}

#[test]
fn vi_residual_small_inside_theta() {
    let s = RunConfig::default().build().unwrap();
    let r = vi_residual(&s.model, &s.initial, &theta_test_points(10)).unwrap();
    assert!(r.is_finite() && r >= 0.0);
    let traj = integrate(&uniform(0.0));
    let st = &traj.last().state;
    assert!(vi_residual(&s.model, st, &theta_test_points(10)).unwrap() < 1e-12);
}
