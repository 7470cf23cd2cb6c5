mod common;

use pgrad_core::calculus::{
    divergence, fluct_part, inner, integrate, laplacian, mean_part, partial_derivative,
    partial_derivatives, path_integral, theorem2_check, wirtinger_check, OneForm, Scheme,
};
use pgrad_core::domain::{random_field, seeded_rng, Field};
use proptest::prelude::*;

fn pair(seed: u64, p: usize, n: usize, band: bool) -> (Field, Field) {
    let mut rng = seeded_rng(seed);
    let d = common::random_domain(p, n, &mut rng);
    let max_mode = if band {
        d.grid_sizes().iter().min().unwrap() / 2 - 1
    } else {
        usize::MAX
    };
    let u = random_field(&d, max_mode, 1.0, false, &mut rng);
    let v = random_field(&d, max_mode, 1.0, false, &mut rng);
    (u, v)
}

fn scheme(spectral: bool) -> Scheme {
    if spectral {
        Scheme::Spectral
    } else {
        Scheme::Centered2
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn operators_are_linear(seed in any::<u64>(), p in 1usize..=3, spectral in any::<bool>(),
                            a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let (u, v) = pair(seed, p, 2, false);
        let s = scheme(spectral);
        let w = Field::combine(a, &u, b, &v).unwrap();
        let scale = 1e-12 * (1.0 + a.abs() + b.abs());
        for axis in 0..p {
            let lhs = partial_derivative(&w, axis, s);
            let rhs = Field::combine(a, &partial_derivative(&u, axis, s), b, &partial_derivative(&v, axis, s)).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= scale * (1.0 + lhs.sup_norm()));
        }
        let lhs = laplacian(&w, s);
        let rhs = Field::combine(a, &laplacian(&u, s), b, &laplacian(&v, s)).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= scale * (1.0 + lhs.sup_norm()));
        let (iw, iu, iv) = (integrate(&w), integrate(&u), integrate(&v));
        for i in 0..2 {
            prop_assert!((iw[i] - (a * iu[i] + b * iv[i])).abs() <= scale * (1.0 + iw[i].abs()) * 10.0);
        }
    }

    #[test]
    fn spectral_laplacian_is_div_grad(seed in any::<u64>(), p in 1usize..=3) {
        let (u, _) = pair(seed, p, 1, false);
        let lap = laplacian(&u, Scheme::Spectral);
        let dd = divergence(&partial_derivatives(&u, Scheme::Spectral), Scheme::Spectral);
        prop_assert!(lap.max_abs_diff(&dd).unwrap() <= 1e-12 * (1.0 + lap.sup_norm()));
    }

    #[test]
    fn integration_by_parts(seed in any::<u64>(), p in 1usize..=3) {
        let (u, v) = pair(seed, p, 2, true);
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for axis in 0..p {
            lhs += inner(&partial_derivative(&u, axis, Scheme::Spectral), &v).unwrap();
            rhs -= inner(&u, &partial_derivative(&v, axis, Scheme::Spectral)).unwrap();
        }
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn fluctuation_has_zero_mean(seed in any::<u64>(), p in 1usize..=3) {
        let (mut u, _) = pair(seed, p, 2, false);
        u = Field::combine(1.0, &u, 1.0, &Field::constant(u.domain(), &[3.0, -7.5]).unwrap()).unwrap();
        for m in mean_part(&fluct_part(&u)) {
            prop_assert!(m.abs() <= 1e-12);
        }
    }

    #[test]
    fn inequalities_hold(seed in any::<u64>(), p in 1usize..=3, n in 1usize..=2) {
        let (u, _) = pair(seed, p, n, false);
        prop_assert!(theorem2_check(&u).holds);
        prop_assert!(wirtinger_check(&fluct_part(&u)).holds);
    }

    #[test]
    fn exact_form_integrates_to_zero(seed in any::<u64>(), p in 1usize..=3) {
        let mut rng = seeded_rng(seed);
        let d = common::random_domain(p, 2, &mut rng);
        let u = random_field(&d, 3, 1.0, false, &mut rng);
        let du = OneForm::differential(&u, Scheme::Spectral);
        let first = path_integral(&du, &common::random_curve(&d, &mut rng, 32)).unwrap();
        let second = path_integral(&du, &common::random_curve(&d, &mut rng, 32)).unwrap();
        for (a, b) in first.iter().zip(&second) {
            prop_assert!(a.abs() <= 1e-8 && b.abs() <= 1e-8, "{a} {b}");
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }
}

#[test]
fn constant_scalar_field_saturates_theorem2() {
    let d = common::domain(&[1.5, 0.7], &[8, 6], 1);
    for c in [-4.0, 0.3, 11.0] {
        let r = theorem2_check(&Field::constant(&d, &[c]).unwrap());
        assert!(r.holds);
        assert!((r.lhs - r.rhs).abs() <= 1e-12 * r.rhs.abs().max(1.0));
    }
}
