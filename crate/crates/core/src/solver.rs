//! Minimizing-sequence optimizer for the action.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use log::{debug, info};

use crate::action::{action, action_gradient, action_increment};
use crate::calculus::{mean_part, Scheme};
use crate::domain::Field;
use crate::error::{Error, Result};
use crate::potentials::Potential;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    GradientDescent,
    #[default]
    Lbfgs,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gradient_descent" => Ok(Method::GradientDescent),
            "lbfgs" => Ok(Method::Lbfgs),
            other => Err(Error::InvalidOptions(format!("unknown method `{other}`"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::GradientDescent => "gradient_descent",
            Method::Lbfgs => "lbfgs",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub method: Method,
    pub max_iters: usize,
    /// Stop when `sup |G| ≤ grad_tol`; `None` means `1e-8·(1 + |φ(u₀)|)`.
    pub grad_tol: Option<f64>,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub lbfgs_memory: usize,
    /// Keep `ū` fixed at its initial value.
    pub pin_mean: bool,
    pub scheme: Scheme,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: Method::Lbfgs,
            max_iters: 10_000,
            grad_tol: None,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            lbfgs_memory: 10,
            pin_mean: false,
            scheme: Scheme::Spectral,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidOptions(msg.to_string()));
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c must lie in (0, 1)");
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack_factor must lie in (0, 1)");
        }
        if let Some(tol) = self.grad_tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return bad("grad_tol must be positive");
            }
        }
        if self.method == Method::Lbfgs && self.lbfgs_memory == 0 {
            return bad("lbfgs_memory must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIters,
    NumericalFailure,
    LineSearchFailure,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Converged => "converged",
            StopReason::MaxIters => "max_iters",
            StopReason::NumericalFailure => "numerical_failure",
            StopReason::LineSearchFailure => "line_search_failure",
        })
    }
}

/// An accepted line-search step: `u ← u + step·d` with `slope = ⟨∇φ, d⟩`
/// in parameter coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: f64,
    pub slope: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// `φ(u_k)` for `k = 0..=iterations`.
    pub iterates_phi: Vec<f64>,
    /// `sup |G(u_k)|` (mean-projected when pinning), aligned with `iterates_phi`.
    pub grad_norms: Vec<f64>,
    pub steps: Vec<StepRecord>,
    pub final_field: Field,
    pub converged: bool,
    pub iterations: usize,
    pub stop_reason: StopReason,
    /// The tolerance actually applied.
    pub grad_tol: f64,
}

/// Values of a candidate iterate.
struct Point {
    u: Field,
    phi: f64,
    /// Parameter-space gradient `w·G`, mean-projected when pinning.
    g: Vec<f64>,
    sup: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Removes the per-component average of a grid vector.
fn project_mean(v: &mut [f64], n: usize) {
    let count = (v.len() / n) as f64;
    for i in 0..n {
        let mean = v.iter().skip(i).step_by(n).sum::<f64>() / count;
        v.iter_mut().skip(i).step_by(n).for_each(|x| *x -= mean);
    }
}

struct Problem<'a> {
    potential: &'a dyn Potential,
    opts: &'a SolveOptions,
    mean0: Option<Vec<f64>>,
}

impl Problem<'_> {
    fn pin(&self, u: &mut Field) {
        if let Some(mean0) = &self.mean0 {
            let n = u.n();
            let shift: Vec<f64> = mean_part(u).iter().zip(mean0).map(|(m, m0)| m - m0).collect();
            for (j, v) in u.values_mut().iter_mut().enumerate() {
                *v -= shift[j % n];
            }
        }
    }

    fn phi(&self, u: &Field) -> Option<f64> {
        action(u, self.potential, self.opts.scheme)
            .ok()
            .map(|a| a.total)
            .filter(|v| v.is_finite())
    }

    fn evaluate(&self, u: Field, phi: f64) -> Option<Point> {
        let grad = action_gradient(&u, self.potential, self.opts.scheme).ok()?;
        let w = u.domain().weight();
        let mut g = grad.into_values();
        if self.mean0.is_some() {
            project_mean(&mut g, u.n());
        }
        let sup = g.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if !sup.is_finite() {
            return None;
        }
        g.iter_mut().for_each(|v| *v *= w);
        Some(Point { u, phi, g, sup })
    }

    /// Armijo backtracking from step 1 on the increment `φ(u + s·d) − φ(u)`;
    /// `None` when no acceptable step exists. The recorded value is the
    /// smaller of the direct evaluation and `φ(u) + increment`, so the logged
    /// sequence satisfies the Armijo inequality exactly.
    fn line_search(&self, at: &Point, d: &[f64], slope: f64) -> Option<(f64, Field, f64)> {
        let mut step = 1.0;
        let domain = at.u.domain();
        for _ in 0..80 {
            let values = at.u.values().iter().zip(d).map(|(u, d)| u + step * d).collect();
            if let Ok(mut trial) = Field::from_values(domain, values) {
                self.pin(&mut trial);
                let delta = Field::combine(1.0, &trial, -1.0, &at.u).ok()?;
                let inc = action_increment(&at.u, &delta, self.potential, self.opts.scheme);
                if let (Ok(inc), Some(direct)) = (inc, self.phi(&trial)) {
                    if inc <= self.opts.armijo_c * step * slope {
                        return Some((step, trial, direct.min(at.phi + inc)));
                    }
                }
            }
            step *= self.opts.backtrack_factor;
        }
        None
    }
}

/// Two-loop recursion: `−H·g` from the stored `(s, y, 1/yᵀs)` pairs.
fn lbfgs_direction(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Drives `φ` downhill from `initial` with Armijo backtracking on the
/// parameter gradient. Numerical trouble ends the run with the last valid
/// iterate rather than an error; only invalid options are errors.
pub fn minimize(initial: &Field, potential: &dyn Potential, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    let problem = Problem {
        potential,
        opts,
        mean0: opts.pin_mean.then(|| mean_part(initial)),
    };
    let n = initial.n();
    let mut report = SolveReport {
        iterates_phi: Vec::new(),
        grad_norms: Vec::new(),
        steps: Vec::new(),
        final_field: initial.clone(),
        converged: false,
        iterations: 0,
        stop_reason: StopReason::NumericalFailure,
        grad_tol: opts.grad_tol.unwrap_or(f64::NAN),
    };
    let Some(mut at) = problem
        .phi(initial)
        .and_then(|phi| problem.evaluate(initial.clone(), phi))
    else {
        return Ok(report);
    };
    let tol = opts.grad_tol.unwrap_or(1e-8 * (1.0 + at.phi.abs()));
    report.grad_tol = tol;
    report.iterates_phi.push(at.phi);
    report.grad_norms.push(at.sup);
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();

    report.stop_reason = loop {
        if at.sup <= tol {
            break StopReason::Converged;
        }
        if report.iterations >= opts.max_iters {
            break StopReason::MaxIters;
        }
        let steepest: Vec<f64> = at.g.iter().map(|v| -v).collect();
        let mut d = match opts.method {
            Method::GradientDescent => steepest.clone(),
            Method::Lbfgs => lbfgs_direction(&at.g, &pairs),
        };
        if opts.pin_mean {
            project_mean(&mut d, n);
        }
        let mut slope = dot(&at.g, &d);
        if slope.is_nan() || slope >= 0.0 {
            d = steepest.clone();
            slope = dot(&at.g, &d);
            pairs.clear();
        }
        let mut found = problem.line_search(&at, &d, slope);
        if found.is_none() && !pairs.is_empty() {
            debug!("quasi-Newton step rejected, retrying along steepest descent");
            pairs.clear();
            d = steepest;
            slope = dot(&at.g, &d);
            found = problem.line_search(&at, &d, slope);
        }
        let Some((step, u_new, phi_new)) = found else {
            break StopReason::LineSearchFailure;
        };
        let Some(next) = problem.evaluate(u_new, phi_new) else {
            break StopReason::NumericalFailure;
        };
        if opts.method == Method::Lbfgs {
            let s: Vec<f64> = next
                .u
                .values()
                .iter()
                .zip(at.u.values())
                .map(|(a, b)| a - b)
                .collect();
            let y: Vec<f64> = next.g.iter().zip(&at.g).map(|(a, b)| a - b).collect();
            let ys = dot(&y, &s);
            if ys > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
                if pairs.len() == opts.lbfgs_memory {
                    pairs.pop_front();
                }
                pairs.push_back((s, y, 1.0 / ys));
            }
        }
        report.steps.push(StepRecord { step, slope });
        report.iterations += 1;
        report.iterates_phi.push(next.phi);
        report.grad_norms.push(next.sup);
        if report.iterations % 100 == 0 {
            debug!("iter {} phi {:.12e} sup|G| {:.3e}", report.iterations, next.phi, next.sup);
        }
        at = next;
    };
    report.converged = report.stop_reason == StopReason::Converged;
    report.final_field = at.u;
    info!(
        "{} after {} iterations: phi {:.12e}, sup|G| {:.3e}",
        report.stop_reason, report.iterations, at.phi, at.sup
    );
    Ok(report)
}
