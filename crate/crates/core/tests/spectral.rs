mod common;

use pgrad_core::domain::{from_spectral, random_field, seeded_rng, to_spectral, Field};
use proptest::prelude::*;
use rand::RngExt;

fn white_noise(seed: u64, p: usize, n: usize) -> Field {
    let mut rng = seeded_rng(seed);
    let d = common::random_domain(p, n, &mut rng);
    let values = (0..d.point_count() * n).map(|_| rng.random_range(-5.0..5.0)).collect();
    Field::from_values(&d, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn round_trip_is_identity(seed in any::<u64>(), p in 1usize..=3, n in 1usize..=2) {
        let u = white_noise(seed, p, n);
        let back = from_spectral(&to_spectral(&u)).unwrap();
        prop_assert!(back.max_abs_diff(&u).unwrap() <= 1e-12 * u.sup_norm().max(1.0));
    }

    #[test]
    fn transform_is_linear(seed in any::<u64>(), p in 1usize..=3, a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let u = white_noise(seed, p, 2);
        let mut rng = seeded_rng(seed ^ 0x5eed);
        let v = random_field(u.domain(), 3, 2.0, false, &mut rng);
        let lhs = to_spectral(&Field::combine(a, &u, b, &v).unwrap());
        let (su, sv) = (to_spectral(&u), to_spectral(&v));
        for i in 0..2 {
            for ((l, x), y) in lhs.component(i).iter().zip(su.component(i)).zip(sv.component(i)) {
                prop_assert!((l - (a * x + b * y)).norm() <= 1e-12 * (1.0 + a.abs() + b.abs()) * 5.0);
            }
        }
    }

    #[test]
    fn real_fields_are_hermitian(seed in any::<u64>(), p in 1usize..=3) {
        let u = white_noise(seed, p, 1);
        let s = to_spectral(&u);
        let d = u.domain();
        let mut m = vec![0i64; p];
        let mut neg = vec![0i64; p];
        for flat in 0..d.point_count() {
            let idx = d.multi_index(flat);
            for a in 0..p {
                m[a] = d.frequency(a, idx[a]);
                neg[a] = -m[a];
            }
            if let (Some(c), Some(cn)) = (s.coeff(0, &m), s.coeff(0, &neg)) {
                prop_assert!((c - cn.conj()).norm() <= 1e-13 * u.sup_norm().max(1.0));
            }
        }
        prop_assert!(s.hermitian_defect() <= 1e-13 * u.sup_norm().max(1.0));
    }
}
