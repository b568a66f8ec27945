use proptest::prelude::*;

use tumorsim::basis::{Basis, BasisSpec, Dim, ModalField};
use tumorsim::cli_io::RunConfig;
use tumorsim::potential::{dist_theta, project_theta, yosida_grad, yosida_val, PhaseVec, YosidaParams};

fn point() -> impl Strategy<Value = PhaseVec> {
    (-3.0..4.0f64, -3.0..4.0f64).prop_map(|(a, b)| PhaseVec::new(a, b))
}

fn in_theta(p: PhaseVec) -> bool {
    p.phi1 >= -1e-15 && p.phi2 >= -1e-15 && p.phi1 + p.phi2 <= 1.0 + 1e-15
}

proptest! {
    #[test]
    fn projection_is_idempotent_and_lands_in_theta(p in point()) {
        let j = project_theta(p);
        prop_assert!(in_theta(j));
        let jj = project_theta(j);
        prop_assert!((jj - j).norm() < 1e-15);
        prop_assert!((dist_theta(p) - (p - j).norm()).abs() < 1e-14);
    }

    #[test]
    fn projection_obeys_obtuse_angle_condition(p in point(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        // every v in Θ satisfies ⟨p − Jp, v − Jp⟩ ≤ 0
        let v = if a + b <= 1.0 { PhaseVec::new(a, b) } else { PhaseVec::new(1.0 - a, 1.0 - b) };
        let j = project_theta(p);
        prop_assert!((p - j).dot(v - j) <= 1e-12);
    }

    #[test]
    fn yosida_gradient_is_scaled_residual(p in point(), e in 1e-3..1.0f64) {
        let eps = YosidaParams::new(e).unwrap();
        let g = yosida_grad(p, eps);
        let r = (p - project_theta(p)) * (1.0 / e);
        prop_assert!((g - r).norm() <= 1e-12 * (1.0 + r.norm()));
        prop_assert!(yosida_val(p, eps) >= 0.0);
        prop_assert_eq!(yosida_val(p, eps) == 0.0, dist_theta(p) == 0.0);
    }

    #[test]
    fn modal_round_trip(coeffs in prop::collection::vec(-1.0..1.0f64, 13)) {
        let b = Basis::new(BasisSpec::new(Dim::One, 12, 24).unwrap()).unwrap();
        let a = ModalField(coeffs);
        let back = b.forward(&b.inverse(&a).unwrap()).unwrap();
        for (x, y) in a.0.iter().zip(&back.0) {
            prop_assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn config_text_round_trips(
        eps in 1e-5..1.0f64,
        nu in 0.1..10.0f64,
        kappa in 0.0..5.0f64,
        steps in 1usize..500,
        seed in any::<u64>(),
    ) {
        let cfg = RunConfig {
            eps,
            nu,
            kappa,
            t_end: steps as f64 * 1e-4,
            seed,
            ..RunConfig::default()
        };
        let back = RunConfig::parse_str(&cfg.emit()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
