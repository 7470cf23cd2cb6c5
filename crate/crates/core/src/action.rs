//! The action `φ(u) = ∫ ½|∂u/∂t|² + F(t, u) dt` and its first variation.

use rand_distr::{Distribution, StandardNormal};

use crate::calculus::{
    grad_l2_norm, h1_norm, inner, l2_norm, mean_part, partial_derivatives, variational_laplacian,
    wirtinger_constant, Scheme,
};
use crate::domain::{ensure_same, seeded_rng, Field};
use crate::error::{Error, Result};
use crate::potentials::Potential;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionValue {
    pub total: f64,
    /// `½∫|∂u/∂t|²`.
    pub kinetic: f64,
    /// `∫F(t, u)`.
    pub potential: f64,
}

/// Which representation of the first variation a gradient is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientConvention {
    /// `G` with `dφ(u)[v] = ∫(G, v)`; mesh independent.
    L2Representer,
    /// `w·G`, the plain derivative with respect to the grid values.
    Parameter,
}

#[derive(Debug, Clone)]
pub struct ActionGradient {
    pub convention: GradientConvention,
    pub field: Field,
}

fn potential_integral(field: &Field, potential: &dyn Potential) -> Result<f64> {
    let domain = field.domain();
    let mut t = vec![0.0; domain.p()];
    let mut sum = 0.0;
    for (k, u) in field.points().enumerate() {
        domain.node_into(k, &mut t);
        let f = potential.value(&t, u);
        if !f.is_finite() {
            return Err(Error::NonFinite {
                what: "potential value",
                point: k,
                component: 0,
            });
        }
        sum += f;
    }
    Ok(sum * domain.weight())
}

fn kinetic(field: &Field, scheme: Scheme) -> f64 {
    0.5 * grad_l2_norm(&partial_derivatives(field, scheme)).powi(2)
}

pub fn action(field: &Field, potential: &dyn Potential, scheme: Scheme) -> Result<ActionValue> {
    let kinetic = kinetic(field, scheme);
    let potential = potential_integral(field, potential)?;
    Ok(ActionValue {
        total: kinetic + potential,
        kinetic,
        potential,
    })
}

/// `φ(u + δ) − φ(u)` without subtracting two totals: the kinetic change
/// is the exact quadratic `⟨Du, Dδ⟩ + ½‖Dδ‖²` and the potential change
/// uses [`Potential::increment`].
pub fn action_increment(
    field: &Field,
    delta: &Field,
    potential: &dyn Potential,
    scheme: Scheme,
) -> Result<f64> {
    let domain = field.domain();
    ensure_same(domain, delta.domain())?;
    let w = domain.weight();
    let du = partial_derivatives(field, scheme);
    let dd = partial_derivatives(delta, scheme);
    let kinetic: f64 = du
        .values()
        .iter()
        .zip(dd.values())
        .map(|(a, b)| a * b + 0.5 * b * b)
        .sum::<f64>()
        * w;
    let mut t = vec![0.0; domain.p()];
    let mut sum = 0.0;
    for (k, (u, d)) in field.points().zip(delta.points()).enumerate() {
        domain.node_into(k, &mut t);
        let inc = potential.increment(&t, u, d);
        if !inc.is_finite() {
            return Err(Error::NonFinite {
                what: "potential increment",
                point: k,
                component: 0,
            });
        }
        sum += inc;
    }
    Ok(kinetic + sum * w)
}

/// `G = −Σ_α D_α D_α u + ∇F(t, u)`, the L² representer of `dφ(u)`.
/// For the spectral scheme this is `−Δu + ∇F`.
pub fn action_gradient(field: &Field, potential: &dyn Potential, scheme: Scheme) -> Result<Field> {
    let domain = field.domain();
    let n = domain.n();
    let mut g = variational_laplacian(field, scheme).scaled(-1.0);
    let mut t = vec![0.0; domain.p()];
    let mut buf = vec![0.0; n];
    let values = g.values_mut();
    for (k, u) in field.points().enumerate() {
        domain.node_into(k, &mut t);
        potential.gradient(&t, u, &mut buf);
        for (i, b) in buf.iter().enumerate() {
            if !b.is_finite() {
                return Err(Error::NonFinite {
                    what: "potential gradient",
                    point: k,
                    component: i,
                });
            }
            values[k * n + i] += b;
        }
    }
    Ok(g)
}

pub fn action_gradient_as(
    field: &Field,
    potential: &dyn Potential,
    scheme: Scheme,
    convention: GradientConvention,
) -> Result<ActionGradient> {
    let g = action_gradient(field, potential, scheme)?;
    let field = match convention {
        GradientConvention::L2Representer => g,
        GradientConvention::Parameter => g.scaled(g.domain().weight()),
    };
    Ok(ActionGradient { convention, field })
}

/// Largest relative gap between the central difference of `φ` along random
/// unit directions and `∫(G, v)` for `G = action_gradient(u)`, with step
/// `1e-5·(1 + ‖u‖_{H¹})`.
pub fn fd_gradient_check(
    field: &Field,
    potential: &dyn Potential,
    scheme: Scheme,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let g = action_gradient(field, potential, scheme)?;
    fd_gradient_audit(field, potential, scheme, &g, trials, seed)
}

/// [`fd_gradient_check`] against an arbitrary candidate representer `g`.
/// Pairings below `1e-10·(1 + |φ(u)|)` are compared against that floor.
pub fn fd_gradient_audit(
    field: &Field,
    potential: &dyn Potential,
    scheme: Scheme,
    g: &Field,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let domain = field.domain();
    let phi = action(field, potential, scheme)?.total;
    let step = 1e-5 * (1.0 + h1_norm(field, scheme));
    let floor = 1e-10 * (1.0 + phi.abs());
    let mut rng = seeded_rng(seed);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let raw: Vec<f64> = (0..field.values().len())
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let raw = Field::from_raw(domain, raw);
        let v = raw.scaled(1.0 / l2_norm(&raw));
        let plus = action(&Field::combine(1.0, field, step, &v)?, potential, scheme)?.total;
        let minus = action(&Field::combine(1.0, field, -step, &v)?, potential, scheme)?.total;
        let fd = (plus - minus) / (2.0 * step);
        let an = inner(g, &v)?;
        let scale = fd.abs().max(an.abs()).max(floor);
        worst = worst.max((fd - an).abs() / scale);
    }
    Ok(worst)
}

/// `B(u) = ½‖∂u/∂t‖² + ∫F(t, ū) − g₀C₁‖∂u/∂t‖`, a lower bound for `φ(u)`
/// when `|∇F(t, ·)| ≤ g(t)`. Uses spectral derivatives and
/// `g₀ = max_k g(t(k))`.
pub fn coercivity_lower_bound(field: &Field, potential: &dyn Potential) -> Result<f64> {
    let domain = field.domain();
    let mut g0 = 0.0_f64;
    let mut t = vec![0.0; domain.p()];
    for k in 0..domain.point_count() {
        domain.node_into(k, &mut t);
        g0 = g0.max(potential.bound(&t).ok_or(Error::MissingBound)?.abs());
    }
    let grad = grad_l2_norm(&partial_derivatives(field, Scheme::Spectral));
    let mean = Field::constant(domain, &mean_part(field))?;
    let at_mean = potential_integral(&mean, potential)?;
    Ok(0.5 * grad * grad + at_mean - g0 * wirtinger_constant(domain) * grad)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::domain::{make_domain, random_field};
    use crate::potentials::{builtin, BuiltinParams, FnPotential};

    fn named(name: &str, n: usize) -> crate::potentials::BuiltinPotential {
        builtin(name, BuiltinParams::new(n)).unwrap()
    }

    #[test]
    fn action_examples() {
        let d = make_domain(1, 1, &[1.0], &[32]).unwrap();
        let zero = named("zero", 1);
        assert_eq!(action(&Field::zeros(&d), &zero, Scheme::Spectral).unwrap().total, 0.0);
        let u = Field::sample(&d, |t, o| o[0] = (2.0 * PI * t[0]).sin()).unwrap();
        let a = action(&u, &zero, Scheme::Spectral).unwrap();
        assert!((a.kinetic - PI * PI).abs() < 1e-12);
        let a = action(&u, &named("quadratic", 1), Scheme::Spectral).unwrap();
        assert!((a.potential - 0.25).abs() < 1e-14);
        assert!((a.total - (PI * PI + 0.25)).abs() < 1e-12);
    }

    #[test]
    fn gradient_examples() {
        let d = make_domain(1, 1, &[1.0], &[32]).unwrap();
        let g = action_gradient(&Field::zeros(&d), &named("zero", 1), Scheme::Spectral).unwrap();
        assert_eq!(g.sup_norm(), 0.0);
        let u = Field::sample(&d, |t, o| o[0] = (2.0 * PI * t[0]).sin()).unwrap();
        let g = action_gradient(&u, &named("quadratic", 1), Scheme::Spectral).unwrap();
        let expected = u.scaled(4.0 * PI * PI + 1.0);
        assert!(g.max_abs_diff(&expected).unwrap() < 1e-10);
        let raw = action_gradient_as(&u, &named("quadratic", 1), Scheme::Spectral, GradientConvention::Parameter)
            .unwrap();
        assert!(raw.field.max_abs_diff(&expected.scaled(1.0 / 32.0)).unwrap() < 1e-12);
    }

    #[test]
    fn directional_derivative_matches_pairing() {
        let d = make_domain(2, 2, &[1.0, 2.0], &[16, 16]).unwrap();
        let ph = named("pseudo_huber", 2);
        for scheme in [Scheme::Spectral, Scheme::Centered2] {
            let u = random_field(&d, 6, 1.0, false, &mut seeded_rng(1));
            let v = random_field(&d, 6, 1.0, false, &mut seeded_rng(2));
            let eps = 1e-5;
            let plus = action(&Field::combine(1.0, &u, eps, &v).unwrap(), &ph, scheme).unwrap();
            let minus = action(&Field::combine(1.0, &u, -eps, &v).unwrap(), &ph, scheme).unwrap();
            let fd = (plus.total - minus.total) / (2.0 * eps);
            let an = inner(&action_gradient(&u, &ph, scheme).unwrap(), &v).unwrap();
            assert!((fd - an).abs() / an.abs() < 1e-6, "{scheme}");
        }
    }

    #[test]
    fn fd_gradient_check_examples() {
        let d = make_domain(2, 1, &[1.0, 1.5], &[16, 16]).unwrap();
        let u = random_field(&d, 5, 2.0, false, &mut seeded_rng(4));
        for scheme in [Scheme::Spectral, Scheme::Centered2] {
            assert!(fd_gradient_check(&u, &named("quadratic", 1), scheme, 5, 9).unwrap() <= 1e-9);
            assert!(fd_gradient_check(&u, &named("pseudo_huber", 1), scheme, 5, 9).unwrap() <= 1e-6);
        }
    }

    #[test]
    fn increment_matches_difference_of_totals() {
        let d = make_domain(2, 1, &[1.0, 2.0], &[16, 8]).unwrap();
        let u = random_field(&d, 4, 1.0, false, &mut seeded_rng(6));
        let delta = random_field(&d, 4, 0.3, false, &mut seeded_rng(7));
        for scheme in [Scheme::Spectral, Scheme::Centered2] {
            for name in ["quadratic", "pseudo_huber", "cosine"] {
                let pot = named(name, 1);
                let moved = Field::combine(1.0, &u, 1.0, &delta).unwrap();
                let plain = action(&moved, &pot, scheme).unwrap().total
                    - action(&u, &pot, scheme).unwrap().total;
                let inc = action_increment(&u, &delta, &pot, scheme).unwrap();
                assert!((inc - plain).abs() < 1e-12, "{name} {scheme}");
            }
        }
    }

    #[test]
    fn sabotaged_gradient_is_detected() {
        let d = make_domain(1, 1, &[1.0], &[32]).unwrap();
        let u = Field::sample(&d, |t, o| o[0] = (2.0 * PI * t[0]).sin()).unwrap();
        let q = named("quadratic", 1);
        // kinetic term dropped: only ∇F = u remains
        let worst = fd_gradient_audit(&u, &q, Scheme::Spectral, &u, 5, 3).unwrap();
        assert!(worst > 0.5, "{worst}");
    }

    #[test]
    fn lower_bound_examples() {
        let d = make_domain(1, 1, &[2.0 * PI], &[64]).unwrap();
        let ph = named("pseudo_huber", 1);
        let c = Field::constant(&d, &[1.3]).unwrap();
        let b = coercivity_lower_bound(&c, &ph).unwrap();
        assert!((b - action(&c, &ph, Scheme::Spectral).unwrap().potential).abs() < 1e-14);

        let u = Field::sample(&d, |t, o| o[0] = t[0].sin()).unwrap();
        let b = coercivity_lower_bound(&u, &ph).unwrap();
        let expected = 0.5 * PI - (2.0 * PI).sqrt() * PI.sqrt();
        assert!((b - expected).abs() < 1e-12);
        assert!((b + 2.8721).abs() < 1e-4);
        let phi = action(&u, &ph, Scheme::Spectral).unwrap();
        // adaptive quadrature oracle (mpmath): ∫₀^{2π} √(1+sin²t) − 1 dt
        assert!((phi.potential - 1.357_210_270_875_84).abs() < 1e-12, "{phi:?}");
        assert!((phi.total - 2.928_006_597_670_73).abs() < 1e-12);
        assert!(phi.total >= b);

        let q = named("quadratic", 1);
        assert!(matches!(coercivity_lower_bound(&u, &q), Err(Error::MissingBound)));
    }

    #[test]
    fn non_finite_potential_is_reported() {
        let d = make_domain(1, 1, &[1.0], &[8]).unwrap();
        let bad = FnPotential::new(|_, u| 1.0 / u[0], |_, u, g| g[0] = -1.0 / (u[0] * u[0]));
        let err = action(&Field::zeros(&d), &bad, Scheme::Spectral).unwrap_err();
        assert!(matches!(err, Error::NonFinite { point: 0, .. }));
    }
}
