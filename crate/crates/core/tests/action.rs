mod common;

use std::f64::consts::PI;

use pgrad_core::action::{action, action_gradient, coercivity_lower_bound};
use pgrad_core::domain::{random_field, seeded_rng, Field};
use pgrad_core::potentials::{Forcing, FnPotential};
use pgrad_core::Scheme;
use proptest::prelude::*;
use rand::RngExt;

/// `u(k) ↦ u(k + shift)` on the periodic grid.
fn translate(u: &Field, shift: &[usize]) -> Field {
    let d = u.domain();
    let n = d.n();
    let mut out = vec![0.0; u.values().len()];
    for flat in 0..d.point_count() {
        let idx = d.multi_index(flat);
        let moved: Vec<usize> = idx
            .iter()
            .zip(shift)
            .zip(d.grid_sizes())
            .map(|((&i, &s), &size)| (i + s) % size)
            .collect();
        let src = d.flat_index(&moved);
        out[flat * n..(flat + 1) * n].copy_from_slice(u.at(src));
    }
    Field::from_values(d, out).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn action_is_translation_invariant(seed in any::<u64>(), p in 1usize..=3, n in 1usize..=2) {
        let mut rng = seeded_rng(seed);
        let d = common::random_domain(p, n, &mut rng);
        let u = random_field(&d, 3, 1.5, false, &mut rng);
        let shift: Vec<usize> = d.grid_sizes().iter().map(|&s| rng.random_range(0..s)).collect();
        let moved = translate(&u, &shift);
        for pot in [
            common::named("quadratic", n, 0.7, 1.0, Forcing::None),
            common::named("pseudo_huber", n, 1.2, 1.0, Forcing::None),
            common::named("cosine", n, 1.0, 2.0, Forcing::None),
        ] {
            for scheme in [Scheme::Spectral, Scheme::Centered2] {
                let a = action(&u, &pot, scheme).unwrap().total;
                let b = action(&moved, &pot, scheme).unwrap().total;
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn action_dominates_lower_bound(seed in any::<u64>(), p in 1usize..=3, n in 1usize..=2,
                                    amp in 0.01..20.0f64, kappa in 0.1..3.0f64) {
        let mut rng = seeded_rng(seed);
        let d = common::random_domain(p, n, &mut rng);
        let h = common::cos_forcing(d.periods(), n, rng.random_range(0.0..1.0));
        let pot = common::named("pseudo_huber", n, kappa, 1.0, h);
        let mut u = random_field(&d, 4, amp, false, &mut rng);
        let shift: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        u = Field::combine(1.0, &u, 1.0, &Field::constant(&d, &shift).unwrap()).unwrap();
        let phi = action(&u, &pot, Scheme::Spectral).unwrap().total;
        let bound = coercivity_lower_bound(&u, &pot).unwrap();
        prop_assert!(phi >= bound, "phi {phi} < bound {bound}");
    }

    #[test]
    fn quadratic_eigen_relation(seed in any::<u64>(), p in 1usize..=3, kappa in 0.0..4.0f64) {
        let mut rng = seeded_rng(seed);
        let d = common::random_domain(p, 1, &mut rng);
        let m: Vec<i64> = d
            .grid_sizes()
            .iter()
            .map(|&s| rng.random_range(-(s as i64 / 2 - 1)..=(s as i64 / 2 - 1)))
            .collect();
        let kappa = kappa.max(1e-3);
        let pot = common::named("quadratic", 1, kappa, 1.0, Forcing::None);
        let periods = d.periods().to_vec();
        let phase0 = rng.random_range(0.0..2.0 * PI);
        let mm = m.clone();
        let u = Field::sample(&d, move |t, o| {
            let phase: f64 = (0..t.len()).map(|a| 2.0 * PI * mm[a] as f64 * t[a] / periods[a]).sum();
            o[0] = (phase + phase0).cos();
        })
        .unwrap();
        let lambda: f64 = m
            .iter()
            .zip(d.periods())
            .map(|(&mi, &tp)| (2.0 * PI * mi as f64 / tp).powi(2))
            .sum();
        let g = action_gradient(&u, &pot, Scheme::Spectral).unwrap();
        let expect = u.scaled(lambda + kappa);
        prop_assert!(g.max_abs_diff(&expect).unwrap() <= 1e-10 * (lambda + kappa).max(1.0));
    }
}

#[test]
fn gradient_vanishes_at_pseudo_huber_minimizer() {
    for p in 1..=3 {
        let d = common::domain(&vec![1.0; p], &vec![8; p], 2);
        let pot = common::named("pseudo_huber", 2, 1.0, 1.0, Forcing::None);
        let g = action_gradient(&Field::zeros(&d), &pot, Scheme::Spectral).unwrap();
        assert_eq!(g.sup_norm(), 0.0);
    }
}

#[test]
fn constant_field_gradient_is_pointwise_force() {
    // at u ≡ c only ∇F(t, c) survives
    let d = common::domain(&[1.0, 2.0], &[8, 8], 1);
    let pot = common::named("cosine", 1, 1.0, 1.0, common::cos_forcing(d.periods(), 1, 0.5));
    let c = 0.7;
    let g = action_gradient(&Field::constant(&d, &[c]).unwrap(), &pot, Scheme::Spectral).unwrap();
    let expect = Field::sample(&d, |t, o| o[0] = c.sin() + 0.5 * (2.0 * PI * t[0]).cos()).unwrap();
    assert!(g.max_abs_diff(&expect).unwrap() < 1e-14);
    // ∫∇F(t, 0) = 0 and no variation: zero gradient at a critical constant
    let g = action_gradient(&Field::zeros(&d), &pot, Scheme::Spectral).unwrap();
    let mean: f64 = g.values().iter().sum::<f64>() / g.values().len() as f64;
    assert!(mean.abs() < 1e-15);
}

#[test]
fn kinetic_parts_of_both_schemes_converge_at_second_order() {
    let gap = |size: usize| {
        let d = common::domain(&[1.0, 1.5], &[size, size], 1);
        let u = Field::sample(&d, |t, o| {
            o[0] = (2.0 * PI * t[0]).sin() * (2.0 * PI * t[1] / 1.5).cos() + 0.3 * (4.0 * PI * t[0]).cos()
        })
        .unwrap();
        let free = FnPotential::new(|_, _| 0.0, |_, _, g| g.fill(0.0));
        let s = action(&u, &free, Scheme::Spectral).unwrap().kinetic;
        let c = action(&u, &free, Scheme::Centered2).unwrap().kinetic;
        (s - c).abs()
    };
    let (coarse, fine) = (gap(16), gap(32));
    assert!(coarse > 0.0);
    let ratio = coarse / fine;
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}
