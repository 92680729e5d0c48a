use proptest::prelude::*;
use pscat_core::formfactor::{form_factor, FormFactorEvaluator, InteractionModel};
use pscat_core::model::{AtomModel, ProjectileModel};
use pscat_core::numeric::linear_grid;
use pscat_core::pointer::{completeness_sum, Eigenspaces, ToySystem};
use pscat_core::rng::{stream, Domain};
use pscat_core::scattering::{semiclassical_deflection, QSampler};
use pscat_core::state::{default_grid, RadialBoundState};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gaussian_form_factor_is_exact(width in 0.3f64..3.0) {
        let s = RadialBoundState::gaussian(default_grid(), width).unwrap();
        let eval = FormFactorEvaluator::new(&s, 8.0 / width);
        for q in linear_grid(0.0, 8.0 / width, 60) {
            let exact = (-q * q * width * width / 4.0).exp();
            let f = eval.eval(q).unwrap();
            prop_assert!((f - exact).abs() < 1e-6, "q {q}: {f} vs {exact}");
            prop_assert!(f.abs() <= 1.0);
        }
    }

    #[test]
    fn sampler_quantile_inverts_cdf(u in 0.0f64..1.0, strength in 0.1f64..10.0) {
        let s = RadialBoundState::hydrogen_1s(default_grid()).unwrap();
        let sampler = QSampler::new(&s, &InteractionModel::Contact { strength }, 0.1, 12.0).unwrap();
        let q = sampler.quantile(u);
        prop_assert!((0.1..=12.0).contains(&q));
        prop_assert!((sampler.cdf(q) - u).abs() < 1e-9);
    }

    #[test]
    fn deflection_never_exceeds_the_point_charge(b in 0.05f64..30.0) {
        let s = RadialBoundState::hydrogen_1s(default_grid()).unwrap();
        let p = ProjectileModel::new(1e4, 0.005, 0.1).unwrap();
        let dp = semiclassical_deflection(&s, &AtomModel::hydrogen(), &p, b).unwrap();
        let point = 2.0 * p.charge / (p.speed * b);
        prop_assert!(dp > 0.0 && dp <= point * (1.0 + 1e-12));
    }

    #[test]
    fn born_probabilities_sum_to_one(seed in any::<u64>(), dim in 2usize..9) {
        let sys = ToySystem::random(dim, 1.0, &mut stream(seed, Domain::PointerSystem, 0)).unwrap();
        let probs = Eigenspaces::new(sys.operator()).unwrap().probabilities(sys.state());
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(probs.iter().all(|&p| p >= 0.0));
        let c = completeness_sum(&sys);
        let norm2 = (sys.operator() * sys.state()).norm_squared();
        prop_assert!((c.sum - norm2).abs() < 1e-10);
    }
}

#[test]
fn form_factor_rejects_negative_momentum() {
    let s = RadialBoundState::hydrogen_1s(default_grid()).unwrap();
    assert!(form_factor(&s, -1.0).is_err());
}
