#![allow(dead_code)]

use std::f64::consts::PI;

use pgrad_core::calculus::Curve;
use pgrad_core::domain::{make_domain, DomainRef};
use pgrad_core::potentials::{builtin, BuiltinParams, BuiltinPotential, Forcing, ForcingTerm, Trig};
use pgrad_core::TorusDomain;
use rand::{Rng, RngExt};

pub fn domain(periods: &[f64], sizes: &[usize], n: usize) -> DomainRef {
    make_domain(periods.len(), n, periods, sizes).unwrap()
}

/// A random box with `p` axes; grids shrink as `p` grows.
pub fn random_domain<R: Rng + ?Sized>(p: usize, n: usize, rng: &mut R) -> DomainRef {
    let choices: &[usize] = match p {
        1 => &[8, 16, 32, 64],
        2 => &[8, 12, 16, 32],
        _ => &[4, 6, 8, 12],
    };
    let periods: Vec<f64> = (0..p).map(|_| rng.random_range(0.5..2.0 * PI)).collect();
    let sizes: Vec<usize> = (0..p).map(|_| choices[rng.random_range(0..choices.len())]).collect();
    domain(&periods, &sizes, n)
}

pub fn single_term(periods: &[f64], component: usize, shape: Trig, amplitude: f64, modes: Vec<i64>) -> ForcingTerm {
    assert_eq!(modes.len(), periods.len());
    ForcingTerm {
        component,
        shape,
        amplitude,
        modes,
    }
}

/// `amplitude·cos(2πt¹/T¹)` in every component.
pub fn cos_forcing(periods: &[f64], n: usize, amplitude: f64) -> Forcing {
    let mut m = vec![0; periods.len()];
    m[0] = 1;
    let terms = (0..n)
        .map(|i| single_term(periods, i, Trig::Cos, amplitude, m.clone()))
        .collect();
    Forcing::modes(periods, terms).unwrap()
}

pub fn named(name: &str, n: usize, kappa: f64, amplitude: f64, forcing: Forcing) -> BuiltinPotential {
    let mut params = BuiltinParams::new(n);
    params.kappa = kappa;
    params.amplitude = amplitude;
    params.forcing = forcing;
    builtin(name, params).unwrap()
}

/// The four non-trivial builtins on `domain`, with forcings where allowed.
pub fn builtins(d: &TorusDomain) -> Vec<BuiltinPotential> {
    let n = d.n();
    vec![
        named("quadratic", n, 1.3, 1.0, Forcing::None),
        named("pseudo_huber", n, 0.8, 1.0, cos_forcing(d.periods(), n, 0.4)),
        named("cosine", n, 1.0, 1.5, cos_forcing(d.periods(), n, 0.3)),
        named("linear_forcing", n, 1.0, 1.0, cos_forcing(d.periods(), n, 1.0)),
    ]
}

/// A random axis-aligned lattice path from the origin to `(N¹,…,Nᵖ)`, with
/// detours that step backwards and forwards again.
pub fn random_curve<R: Rng + ?Sized>(d: &TorusDomain, rng: &mut R, samples: usize) -> Curve {
    let p = d.p();
    let mut moves: Vec<(usize, i64)> = Vec::new();
    for axis in 0..p {
        let total = d.grid_sizes()[axis] as i64;
        let mut left = total;
        while left > 0 {
            let step = rng.random_range(1..=left);
            moves.push((axis, step));
            left -= step;
        }
        if rng.random_bool(0.5) {
            let back = rng.random_range(1..=total);
            moves.push((axis, -back));
            moves.push((axis, back));
        }
    }
    for i in (1..moves.len()).rev() {
        let j = rng.random_range(0..=i);
        moves.swap(i, j);
    }
    Curve::from_moves(d, &moves, vec![1; p], samples).unwrap()
}
