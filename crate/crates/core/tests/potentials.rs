mod common;

use pgrad_core::potentials::{
    bounded_grad_check, coercivity_probe, fd_check_potential_grad, growth_check, Forcing, Verdict,
};
use pgrad_core::domain::seeded_rng;
use proptest::prelude::*;
use rand::RngExt;

const RADII: [f64; 6] = [0.0, 1.0, 3.0, 10.0, 30.0, 100.0];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn builtin_gradients_match_finite_differences(seed in any::<u64>(), p in 1usize..=3, n in 1usize..=2,
                                                  radius in 0.1..200.0f64) {
        let mut rng = seeded_rng(seed);
        let d = common::random_domain(p, n, &mut rng);
        for pot in common::builtins(&d) {
            let r = fd_check_potential_grad(&pot, &d, 200, radius, seed).unwrap();
            prop_assert!(r.worst_violation <= 1e-6, "{:?}: {}", pot.kind(), r.worst_violation);
            prop_assert_eq!(r.verdict, Verdict::Pass);
        }
    }

    #[test]
    fn pseudo_huber_gradient_is_bounded(seed in any::<u64>(), p in 1usize..=3, n in 1usize..=2,
                                        kappa in 0.1..5.0f64, h in 0.0..2.0f64) {
        let mut rng = seeded_rng(seed);
        let d = common::random_domain(p, n, &mut rng);
        let pot = common::named("pseudo_huber", n, kappa, 1.0, common::cos_forcing(d.periods(), n, h));
        for radius in [0.1, 1.0, 10.0, 100.0, 1e4] {
            let r = bounded_grad_check(&pot, &d, 300, radius, rng.random()).unwrap();
            prop_assert_eq!(r.verdict, Verdict::Pass);
        }
    }

    #[test]
    fn coercivity_separates_families(seed in any::<u64>(), p in 1usize..=3, h in 0.0..1.0f64) {
        let mut rng = seeded_rng(seed);
        let d = common::random_domain(p, 1, &mut rng);
        let ph = common::named("pseudo_huber", 1, 1.0, 1.0, common::cos_forcing(d.periods(), 1, h));
        prop_assert_eq!(coercivity_probe(&ph, &d, 12, &RADII, seed).unwrap().verdict, Verdict::Pass);
        let cosine = common::named("cosine", 1, 1.0, rng.random_range(0.1..3.0), Forcing::None);
        prop_assert_eq!(coercivity_probe(&cosine, &d, 12, &RADII, seed).unwrap().verdict, Verdict::Fail);
    }

    #[test]
    fn growth_fit_matches_lipschitz_data(seed in any::<u64>(), c in 0.2..5.0f64, kappa in 0.2..5.0f64) {
        let d = common::domain(&[1.0, 1.0], &[8, 8], 1);
        let one = |_: &[f64]| 1.0;
        let lf = common::named("linear_forcing", 1, 1.0, 1.0, common::cos_forcing(d.periods(), 1, c));
        let r = growth_check(&lf, &d, &one, 800, 100.0, seed).unwrap();
        prop_assert_eq!(r.verdict, Verdict::Pass);
        let m = r.fitted_slope.unwrap();
        prop_assert!((m - c).abs() <= 0.1 * c, "M = {m}, |c| = {c}");

        let ph = common::named("pseudo_huber", 1, kappa, 1.0, Forcing::None);
        let r = growth_check(&ph, &d, &one, 800, 100.0, seed).unwrap();
        prop_assert_eq!(r.verdict, Verdict::Pass);
        let m = r.fitted_slope.unwrap();
        prop_assert!(m <= 1.1 * kappa && m >= 0.9 * kappa, "M = {m}, kappa = {kappa}");
    }
}

#[test]
fn superlinear_families_fail_growth() {
    let d = common::domain(&[1.0], &[8], 1);
    let one = |_: &[f64]| 1.0;
    let quad = common::named("quadratic", 1, 1.0, 1.0, Forcing::None);
    assert_eq!(growth_check(&quad, &d, &one, 400, 50.0, 4).unwrap().verdict, Verdict::Fail);
    let quartic = pgrad_core::potentials::FnPotential::new(
        |_, u| u.iter().map(|x| x * x).sum::<f64>().powi(2),
        |_, u, g| {
            let s: f64 = u.iter().map(|x| x * x).sum();
            for (gi, x) in g.iter_mut().zip(u) {
                *gi = 4.0 * s * x;
            }
        },
    );
    let r = growth_check(&quartic, &d, &one, 400, 50.0, 4).unwrap();
    assert_eq!(r.verdict, Verdict::Fail);
    assert!(r.witness.is_some());
}
