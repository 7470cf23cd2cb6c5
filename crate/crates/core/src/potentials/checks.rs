//! Sampling falsifiers for the hypotheses placed on `F`. A `Pass` verdict
//! only means no violation was found among the samples.

use std::fmt;

use rand::{Rng, RngExt};
use rand_distr::StandardNormal;

use super::Potential;
use crate::domain::{seeded_rng, TorusDomain};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckedProperty {
    GradFdConsistency,
    BoundedGradient,
    LinearGrowth,
    CoercivityProbe,
}

impl fmt::Display for CheckedProperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckedProperty::GradFdConsistency => "grad_fd_consistency",
            CheckedProperty::BoundedGradient => "bounded_gradient",
            CheckedProperty::LinearGrowth => "linear_growth",
            CheckedProperty::CoercivityProbe => "coercivity_probe",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub checked_property: CheckedProperty,
    pub samples: usize,
    pub worst_violation: f64,
    /// `(t, u)` where the worst violation occurred.
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
    pub verdict: Verdict,
    /// Growth fit `a(s) = M·s + a₀`: `M`.
    pub fitted_slope: Option<f64>,
    /// Growth fit: `a₀`.
    pub fitted_intercept: Option<f64>,
    /// `max b(t)` over grid nodes.
    pub b_max: Option<f64>,
    /// `max g(t)` over grid nodes.
    pub g_max: Option<f64>,
}

impl HypothesisReport {
    fn new(checked_property: CheckedProperty, samples: usize) -> Self {
        Self {
            checked_property,
            samples,
            worst_violation: 0.0,
            witness: None,
            verdict: Verdict::Pass,
            fitted_slope: None,
            fitted_intercept: None,
            b_max: None,
            g_max: None,
        }
    }
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg.to_string()))
    }
}

fn random_node<R: Rng + ?Sized>(domain: &TorusDomain, rng: &mut R) -> Vec<f64> {
    let k = rng.random_range(0..domain.point_count());
    domain.node(k)
}

fn random_direction<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = norm(&v);
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Uniform sample of the closed ball of radius `radius` in Rⁿ.
fn random_in_ball<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    let dir = random_direction(n, rng);
    let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
    dir.into_iter().map(|x| r * x).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Central finite differences of `value` against `gradient`, step
/// `1e-5·max(1, |u|)`. The error at a sample is `|fd − g| / (1 + |fd|)`.
pub fn fd_check_potential_grad(
    potential: &dyn Potential,
    domain: &TorusDomain,
    sample_count: usize,
    radius: f64,
    seed: u64,
) -> Result<HypothesisReport> {
    require(radius > 0.0 && radius.is_finite(), "radius must be positive")?;
    let n = domain.n();
    let mut rng = seeded_rng(seed);
    let mut report = HypothesisReport::new(CheckedProperty::GradFdConsistency, sample_count);
    let mut grad = vec![0.0; n];
    let mut fd = vec![0.0; n];
    for _ in 0..sample_count {
        let t = random_node(domain, &mut rng);
        let u = random_in_ball(n, radius, &mut rng);
        let step = 1e-5 * norm(&u).max(1.0);
        potential.gradient(&t, &u, &mut grad);
        let mut probe = u.clone();
        for i in 0..n {
            probe[i] = u[i] + step;
            let plus = potential.value(&t, &probe);
            probe[i] = u[i] - step;
            let minus = potential.value(&t, &probe);
            probe[i] = u[i];
            fd[i] = (plus - minus) / (2.0 * step);
        }
        let diff: Vec<f64> = fd.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let err = norm(&diff) / (1.0 + norm(&fd));
        let err = if err.is_finite() { err } else { f64::INFINITY };
        if report.witness.is_none() || err > report.worst_violation {
            report.worst_violation = err;
            report.witness = Some((t, u));
        }
    }
    report.verdict = if report.worst_violation <= 1e-5 {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(report)
}

/// Checks `|∇F(t,u)| ≤ g(t)(1 + 1e-12)` with `t` on grid nodes and `u`
/// uniform in the ball. `worst_violation` is the largest `|∇F| − g`.
pub fn bounded_grad_check(
    potential: &dyn Potential,
    domain: &TorusDomain,
    sample_count: usize,
    radius: f64,
    seed: u64,
) -> Result<HypothesisReport> {
    require(radius > 0.0 && radius.is_finite(), "radius must be positive")?;
    let n = domain.n();
    let mut report = HypothesisReport::new(CheckedProperty::BoundedGradient, sample_count);
    let g_max = (0..domain.point_count())
        .map(|k| potential.bound(&domain.node(k)))
        .try_fold(0.0_f64, |acc, g| g.map(|g| acc.max(g)));
    let Some(g_max) = g_max else {
        report.verdict = Verdict::Inconclusive;
        report.worst_violation = f64::NAN;
        return Ok(report);
    };
    report.g_max = Some(g_max);
    let mut rng = seeded_rng(seed);
    let mut grad = vec![0.0; n];
    let mut worst = f64::NEG_INFINITY;
    let mut failed = false;
    for _ in 0..sample_count {
        let t = random_node(domain, &mut rng);
        let u = random_in_ball(n, radius, &mut rng);
        let g = potential.bound(&t).unwrap_or(0.0);
        potential.gradient(&t, &u, &mut grad);
        let size = norm(&grad);
        let margin = if size.is_finite() { size - g } else { f64::INFINITY };
        failed |= size.is_nan() || g.is_nan() || size > g * (1.0 + 1e-12);
        if margin > worst {
            worst = margin;
            report.witness = Some((t, u));
        }
    }
    report.worst_violation = worst;
    report.verdict = if failed { Verdict::Fail } else { Verdict::Pass };
    if !failed {
        report.witness = None;
    }
    Ok(report)
}

/// Shells sampled by [`growth_check`], as fractions of the radius.
const GROWTH_SHELLS: [f64; 4] = [1.0, 0.5, 0.25, 0.125];

/// Doubling ratio beyond which growth is declared superlinear.
const GROWTH_RATIO_LIMIT: f64 = 3.0;

/// Fits the smallest affine envelope `a(s) = M·s + a₀` with
/// `max(|F|, |∇F|) ≤ a(|u|)·b(t)` over samples on four shells of radius
/// `radius·2^{−k}`, and fails when the envelope doubles faster than
/// linearly between the two outer shells.
pub fn growth_check(
    potential: &dyn Potential,
    domain: &TorusDomain,
    b: &dyn Fn(&[f64]) -> f64,
    sample_count: usize,
    radius: f64,
    seed: u64,
) -> Result<HypothesisReport> {
    require(radius > 0.0 && radius.is_finite(), "radius must be positive")?;
    require(sample_count >= GROWTH_SHELLS.len(), "need at least one sample per shell")?;
    let n = domain.n();
    let mut rng = seeded_rng(seed);
    let mut report = HypothesisReport::new(CheckedProperty::LinearGrowth, sample_count);

    let mut b_max = 0.0_f64;
    for k in 0..domain.point_count() {
        let bt = b(&domain.node(k));
        require(bt.is_finite() && bt > 0.0, "b must be positive on the grid")?;
        b_max = b_max.max(bt);
    }
    report.b_max = Some(b_max);

    // (|u|, y, shell, t, u)
    let mut samples = Vec::with_capacity(sample_count);
    let mut grad = vec![0.0; n];
    for j in 0..sample_count {
        let shell = j % GROWTH_SHELLS.len();
        let t = random_node(domain, &mut rng);
        let dir = random_direction(n, &mut rng);
        let s = radius * GROWTH_SHELLS[shell];
        let u: Vec<f64> = dir.iter().map(|x| s * x).collect();
        potential.gradient(&t, &u, &mut grad);
        let y = potential.value(&t, &u).abs().max(norm(&grad)) / b(&t);
        samples.push((s, y, shell, t, u));
    }

    if let Some(bad) = samples.iter().find(|smp| !smp.1.is_finite()) {
        report.verdict = Verdict::Fail;
        report.worst_violation = f64::INFINITY;
        report.witness = Some((bad.3.clone(), bad.4.clone()));
        return Ok(report);
    }

    let shell_max = |shell: usize| {
        samples
            .iter()
            .filter(|smp| smp.2 == shell)
            .fold(0.0_f64, |acc, smp| acc.max(smp.1))
    };
    let (outer, inner) = (shell_max(0), shell_max(1));
    let ratio = if inner > 0.0 {
        outer / inner
    } else if outer > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    report.worst_violation = ratio;

    let intercept = |m: f64| {
        samples
            .iter()
            .fold(0.0_f64, |acc, smp| acc.max(smp.1 - m * smp.0))
    };
    let mean_s = samples.iter().map(|smp| smp.0).sum::<f64>() / samples.len() as f64;
    let cost = |m: f64| intercept(m) + m * mean_s;
    let m_hi = samples
        .iter()
        .fold(0.0_f64, |acc, smp| acc.max(smp.1 / smp.0));
    // cost is convex and piecewise linear in M; refine a uniform grid
    let (mut lo, mut hi) = (0.0, m_hi);
    for _ in 0..40 {
        let grid: Vec<f64> = (0..=20).map(|j| lo + (hi - lo) * j as f64 / 20.0).collect();
        let best = grid
            .iter()
            .enumerate()
            .min_by(|a, b| cost(*a.1).total_cmp(&cost(*b.1)))
            .map(|(j, _)| j)
            .unwrap_or(0);
        lo = grid[best.saturating_sub(1)];
        hi = grid[(best + 1).min(20)];
    }
    let slope = 0.5 * (lo + hi);
    report.fitted_slope = Some(slope);
    report.fitted_intercept = Some(intercept(slope));

    if ratio > GROWTH_RATIO_LIMIT {
        report.verdict = Verdict::Fail;
        let witness = samples
            .iter()
            .filter(|smp| smp.2 == 0)
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("outer shell sampled");
        report.witness = Some((witness.3.clone(), witness.4.clone()));
    }
    Ok(report)
}

/// Relative tolerance separating a flattening trend from a decreasing one.
const TREND_TOLERANCE: f64 = 0.05;

/// Samples `I(r, e) = Σ_k w F(t(k), r·e)` along random unit directions.
/// `worst_violation` is `−min_e (I(r_max, e) − I(r_min, e))`.
pub fn coercivity_probe(
    potential: &dyn Potential,
    domain: &TorusDomain,
    direction_count: usize,
    radii: &[f64],
    seed: u64,
) -> Result<HypothesisReport> {
    require(radii.len() >= 3, "need at least three radii")?;
    require(
        radii.windows(2).all(|w| w[0] < w[1]) && radii.iter().all(|r| r.is_finite()),
        "radii must be strictly increasing",
    )?;
    require(direction_count >= 1, "need at least one direction")?;
    let n = domain.n();
    let w = domain.weight();
    let nodes: Vec<Vec<f64>> = (0..domain.point_count()).map(|k| domain.node(k)).collect();
    let mut rng = seeded_rng(seed);
    let mut report = HypothesisReport::new(CheckedProperty::CoercivityProbe, direction_count);
    let mut any_fail = false;
    let mut all_pass = true;
    let mut worst_gain = f64::INFINITY;
    for _ in 0..direction_count {
        let e = random_direction(n, &mut rng);
        let curve: Vec<f64> = radii
            .iter()
            .map(|&r| {
                let u: Vec<f64> = e.iter().map(|x| r * x).collect();
                nodes.iter().map(|t| potential.value(t, &u)).sum::<f64>() * w
            })
            .collect();
        let incs: Vec<f64> = curve.windows(2).map(|c| c[1] - c[0]).collect();
        let gain = curve[curve.len() - 1] - curve[0];
        let largest = incs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let last = incs[incs.len() - 1];
        let prev = incs[incs.len() - 2];
        let scale = largest.abs().max(f64::MIN_POSITIVE);
        let decreasing = incs
            .windows(2)
            .any(|pair| pair[1] < pair[0] && pair[0] - pair[1] > TREND_TOLERANCE * scale && pair[1] <= 0.0);
        let fails = !gain.is_finite()
            || gain <= 0.0
            || decreasing
            || last <= TREND_TOLERANCE * largest;
        let passes = !fails
            && incs.iter().all(|&d| d > 0.0)
            && last >= (1.0 - TREND_TOLERANCE) * prev;
        if fails && (!any_fail || gain < worst_gain) {
            report.witness = Some((vec![0.0; domain.p()], e.clone()));
        }
        worst_gain = worst_gain.min(gain);
        any_fail |= fails;
        all_pass &= passes;
    }
    report.worst_violation = -worst_gain;
    report.verdict = if any_fail {
        Verdict::Fail
    } else if all_pass {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    Ok(report)
}
