use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tumorsim::basis::{GridField, ModalField};
use tumorsim::cli_io::{InitSpec, Profile, ProfileKind, RunConfig, Setup};
use tumorsim::model::{Coupling, Model, PhaseCoefficient, PressureLaw, State};

fn cos_profile(mean: f64, amp: f64, mode: u32) -> Profile {
    Profile {
        kind: ProfileKind::Cos,
        mean,
        amp,
        mode,
    }
}

fn setup(cfg: &RunConfig) -> Setup {
    cfg.build().unwrap()
}

fn perturbed(s: &State, field: usize, dir: &[f64], h: f64) -> State {
    let mut out = s.clone();
    match field {
        0..=2 => out.phi[field].0.iter_mut().zip(dir).for_each(|(a, d)| *a += h * d),
        _ => out.w.0.iter_mut().zip(dir).for_each(|(a, d)| *a += h * d),
    }
    out
}

/// Directional derivative of the reduced energy against the pairing with
/// `μ0 = p`, `μ1`, `μ2` and, for `w`, `∫(E w − p)v`.
fn check_variational(model: &Model, s: &State, seed: u64) {
    let mu = model.chemical_potentials(s).unwrap();
    let ev = model.evaluate(s).unwrap();
    let b = &model.basis;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-6;
    for trial in 0..10 {
        let field = trial % 4;
        let len = if field < 3 { b.n_modes() } else { b.n_nodes() };
        let mut dir: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if field == 3 {
            let m = dir.iter().sum::<f64>() / len as f64;
            dir.iter_mut().for_each(|v| *v -= m);
        }
        let fp = model.free_energy(&perturbed(s, field, &dir, h)).unwrap().reduced;
        let fm = model.free_energy(&perturbed(s, field, &dir, -h)).unwrap().reduced;
        let fd = (fp - fm) / (2.0 * h);
        let exact = if field < 3 {
            ModalField(dir.clone()).dot(&mu.modal[field])
        } else {
            let e = &model.constitutive.elasticity;
            let g = GridField(
                (0..len)
                    .map(|j| (e.eval(ev.phase(j)) * s.w.0[j] - mu.pressure.0[j]) * dir[j])
                    .collect(),
            );
            b.integrate(&g)
        };
        let rel = (fd - exact).abs() / exact.abs().max(1e-3);
        assert!(rel <= 1e-5, "field {field}: fd {fd} vs {exact} (rel {rel:e})");
    }
}

#[test]
fn potentials_are_energy_derivatives() {
    let cfg = RunConfig {
        f: PressureLaw::Softplus { a: 1.0, b: 0.5, z0: 1.0 / 3.0 },
        f0: 1.0,
        f1: 1.5,
        coupling: Coupling::Product { alpha: 3.0 },
        init: InitSpec::Profiles {
            phi1: cos_profile(0.4, 0.3, 1),
            phi2: cos_profile(0.3, 0.35, 2),
            rho: cos_profile(0.5, 0.1, 1),
            w: cos_profile(0.0, 0.05, 3),
            noise: 0.0,
        },
        ..RunConfig::default()
    };
    let s = setup(&cfg);
    // the profiles leave Θ near the boundary, so the Yosida term is active
    let ev = s.model.evaluate(&s.initial).unwrap();
    let outside = (0..ev.rho.len()).any(|j| {
        let p = ev.phase(j);
        p.phi1 < 0.0 || p.phi2 < 0.0 || p.phi1 + p.phi2 > 1.0
    });
    assert!(outside);
    check_variational(&s.model, &s.initial, 11);

    let default = setup(&RunConfig::default());
    check_variational(&default.model, &default.initial, 12);
}

/// `μ1 = −φ1'' + α φ2` for a state inside `Θ` with constant `E`, compared with a
/// second-order difference of `φ1` on 4096 points.
#[test]
fn potential_matches_fine_difference_oracle() {
    let alpha = 2.0;
    let cfg = RunConfig {
        coupling: Coupling::Product { alpha },
        elasticity: PhaseCoefficient::Constant { value: 0.5 },
        init: InitSpec::Profiles {
            phi1: cos_profile(0.35, 0.1, 2),
            phi2: cos_profile(0.25, 0.05, 3),
            rho: Profile::constant(0.5),
            w: Profile::constant(0.0),
            noise: 0.0,
        },
        ..RunConfig::default()
    };
    let s = setup(&cfg);
    let b = &s.model.basis;
    let mu = s.model.chemical_potentials(&s.initial).unwrap();
    let n = 4096;
    let h = 1.0 / n as f64;
    let at = |a: &ModalField, x: f64| b.eval_at(a, &[x]);
    let mut worst = 0.0_f64;
    for i in 1..n {
        let x = i as f64 * h;
        let lap = (at(&s.initial.phi[1], x + h) - 2.0 * at(&s.initial.phi[1], x) + at(&s.initial.phi[1], x - h)) / (h * h);
        let oracle = -lap + alpha * at(&s.initial.phi[2], x);
        worst = worst.max((at(&mu.modal[1], x) - oracle).abs());
    }
    // h² φ''''/12 with |φ''''| ≤ 0.1·(2π)⁴
    assert!(worst < 1e-5, "max deviation {worst:e}");
}

#[test]
fn pressure_inverts_the_constitutive_law() {
    let cfg = RunConfig {
        f: PressureLaw::Softplus { a: 1.0, b: 0.5, z0: 1.0 / 3.0 },
        f0: 1.0,
        f1: 1.5,
        init: InitSpec::Profiles {
            phi1: cos_profile(0.3, 0.2, 1),
            phi2: cos_profile(0.2, 0.1, 2),
            rho: Profile::constant(0.5),
            w: cos_profile(0.0, 0.1, 1),
            noise: 0.0,
        },
        ..RunConfig::default()
    };
    let s = setup(&cfg);
    let ev = s.model.evaluate(&s.initial).unwrap();
    let p = s.model.pressure(&s.initial).unwrap();
    for j in 0..p.len() {
        let z = ev.phi[0].0[j] - s.initial.w.0[j];
        assert!((s.model.constitutive.f.f(p.0[j]) - z).abs() < 1e-12);
    }
}

#[test]
fn mass_tendency_vanishes() {
    let s = setup(&RunConfig {
        init: InitSpec::Profiles {
            phi1: cos_profile(0.35, 0.3, 1),
            phi2: cos_profile(0.15, 0.2, 4),
            rho: cos_profile(0.5, 0.3, 2),
            w: cos_profile(0.0, 0.05, 1),
            noise: 0.0,
        },
        ..RunConfig::default()
    });
    let (tend, _) = s.model.tendency(&s.initial).unwrap();
    for k in 0..s.model.basis.n_modes() {
        let sum: f64 = (0..3).map(|i| tend.phi[i].0[k]).sum();
        assert!(sum.abs() < 1e-12, "mode {k}: {sum:e}");
    }
    assert!(s.model.basis.mean(&tend.w).abs() < 1e-12);
}
