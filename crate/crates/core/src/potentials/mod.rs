//! The nonlinearity `F(t, u)` and its gradient `∇_u F`.

mod checks;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::domain::{to_spectral, Field, TorusDomain};
use crate::error::{Error, Result};

pub use checks::{
    bounded_grad_check, coercivity_probe, fd_check_potential_grad, growth_check, CheckedProperty,
    HypothesisReport, Verdict,
};

/// A potential `F: T₀ × Rⁿ → R`. Implementations must be pure.
pub trait Potential: Send + Sync {
    fn value(&self, t: &[f64], u: &[f64]) -> f64;

    /// Writes `∇_u F(t, u)` into `out` (length n).
    fn gradient(&self, t: &[f64], u: &[f64], out: &mut [f64]);

    /// Claimed `g(t) ≥ |∇_u F(t, ·)|`, when one is known.
    fn bound(&self, _t: &[f64]) -> Option<f64> {
        None
    }

    /// `F(t, u + δ) − F(t, u)`. The default subtracts two evaluations;
    /// override it with a cancellation-free form so that line searches can
    /// resolve decreases far below the rounding error of `F` itself.
    fn increment(&self, t: &[f64], u: &[f64], delta: &[f64]) -> f64 {
        let moved: Vec<f64> = u.iter().zip(delta).map(|(a, b)| a + b).collect();
        self.value(t, &moved) - self.value(t, u)
    }
}

impl<P: Potential + ?Sized> Potential for Arc<P> {
    fn value(&self, t: &[f64], u: &[f64]) -> f64 {
        (**self).value(t, u)
    }
    fn gradient(&self, t: &[f64], u: &[f64], out: &mut [f64]) {
        (**self).gradient(t, u, out)
    }
    fn bound(&self, t: &[f64]) -> Option<f64> {
        (**self).bound(t)
    }
    fn increment(&self, t: &[f64], u: &[f64], delta: &[f64]) -> f64 {
        (**self).increment(t, u, delta)
    }
}

impl<P: Potential + ?Sized> Potential for Box<P> {
    fn value(&self, t: &[f64], u: &[f64]) -> f64 {
        (**self).value(t, u)
    }
    fn gradient(&self, t: &[f64], u: &[f64], out: &mut [f64]) {
        (**self).gradient(t, u, out)
    }
    fn bound(&self, t: &[f64]) -> Option<f64> {
        (**self).bound(t)
    }
    fn increment(&self, t: &[f64], u: &[f64], delta: &[f64]) -> f64 {
        (**self).increment(t, u, delta)
    }
}

type ValueFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;
type GradientFn = dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync;
type BoundFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type IncrementFn = dyn Fn(&[f64], &[f64], &[f64]) -> f64 + Send + Sync;

/// A potential assembled from closures.
pub struct FnPotential {
    value: Box<ValueFn>,
    gradient: Box<GradientFn>,
    bound: Option<Box<BoundFn>>,
    increment: Option<Box<IncrementFn>>,
}

impl FnPotential {
    pub fn new<V, G>(value: V, gradient: G) -> Self
    where
        V: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            value: Box::new(value),
            gradient: Box::new(gradient),
            bound: None,
            increment: None,
        }
    }

    pub fn with_bound<B>(mut self, bound: B) -> Self
    where
        B: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.bound = Some(Box::new(bound));
        self
    }

    /// Supplies an accurate `F(t, u + δ) − F(t, u)`.
    pub fn with_increment<I>(mut self, increment: I) -> Self
    where
        I: Fn(&[f64], &[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        self.increment = Some(Box::new(increment));
        self
    }
}

impl fmt::Debug for FnPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnPotential")
            .field("bound", &self.bound.is_some())
            .finish_non_exhaustive()
    }
}

impl Potential for FnPotential {
    fn value(&self, t: &[f64], u: &[f64]) -> f64 {
        (self.value)(t, u)
    }
    fn gradient(&self, t: &[f64], u: &[f64], out: &mut [f64]) {
        (self.gradient)(t, u, out)
    }
    fn bound(&self, t: &[f64]) -> Option<f64> {
        self.bound.as_ref().map(|g| g(t))
    }
    fn increment(&self, t: &[f64], u: &[f64], delta: &[f64]) -> f64 {
        match &self.increment {
            Some(inc) => inc(t, u, delta),
            None => {
                let moved: Vec<f64> = u.iter().zip(delta).map(|(a, b)| a + b).collect();
                (self.value)(t, &moved) - (self.value)(t, u)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Cos,
    Sin,
}

/// `amplitude·{cos,sin}(2π Σ_α mᵅtᵅ/Tᵅ)` in one component.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingTerm {
    pub component: usize,
    pub shape: Trig,
    pub amplitude: f64,
    pub modes: Vec<i64>,
}

/// Time-dependent vector `c(t)` (or `h(t)`) entering `(c(t), u)`.
#[derive(Debug, Clone, Default)]
pub enum Forcing {
    #[default]
    None,
    Modes {
        periods: Vec<f64>,
        terms: Vec<ForcingTerm>,
    },
    /// Values on a grid, exact at nodes and trigonometrically interpolated
    /// elsewhere.
    Sampled(SampledForcing),
}

#[derive(Debug, Clone)]
pub struct SampledForcing {
    field: Field,
    coeffs: Vec<Vec<Complex64>>,
}

impl Forcing {
    pub fn modes(periods: &[f64], terms: Vec<ForcingTerm>) -> Result<Self> {
        for term in &terms {
            if term.modes.len() != periods.len() {
                return Err(Error::InvalidParameter(format!(
                    "forcing term needs {} mode indices, got {}",
                    periods.len(),
                    term.modes.len()
                )));
            }
            if !term.amplitude.is_finite() {
                return Err(Error::InvalidParameter("forcing amplitude must be finite".into()));
            }
        }
        Ok(Forcing::Modes {
            periods: periods.to_vec(),
            terms,
        })
    }

    pub fn sampled(field: Field) -> Self {
        let spectral = to_spectral(&field);
        let coeffs = (0..field.n()).map(|i| spectral.component(i).to_vec()).collect();
        Forcing::Sampled(SampledForcing { field, coeffs })
    }

    fn check(&self, n: usize) -> Result<()> {
        match self {
            Forcing::None => Ok(()),
            Forcing::Modes { terms, .. } => match terms.iter().find(|t| t.component >= n) {
                Some(t) => Err(Error::InvalidParameter(format!(
                    "forcing component {} out of range for n = {n}",
                    t.component + 1
                ))),
                None => Ok(()),
            },
            Forcing::Sampled(s) if s.field.n() != n => Err(Error::InvalidParameter(format!(
                "forcing field has n = {}, potential has n = {n}",
                s.field.n()
            ))),
            Forcing::Sampled(_) => Ok(()),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Forcing::None)
    }

    /// Adds `c(t)` to `out`.
    pub fn add_to(&self, t: &[f64], out: &mut [f64]) {
        match self {
            Forcing::None => {}
            Forcing::Modes { periods, terms } => {
                for term in terms {
                    let phase: f64 = term
                        .modes
                        .iter()
                        .zip(periods)
                        .zip(t)
                        .map(|((&m, &tp), &x)| 2.0 * PI * m as f64 * x / tp)
                        .sum();
                    let s = match term.shape {
                        Trig::Cos => phase.cos(),
                        Trig::Sin => phase.sin(),
                    };
                    out[term.component] += term.amplitude * s;
                }
            }
            Forcing::Sampled(s) => s.add_to(t, out),
        }
    }

    pub fn eval(&self, t: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        self.add_to(t, &mut out);
        out
    }

    fn dot(&self, t: &[f64], u: &[f64]) -> f64 {
        if self.is_none() {
            return 0.0;
        }
        let c = self.eval(t, u.len());
        c.iter().zip(u).map(|(a, b)| a * b).sum()
    }

    fn norm(&self, t: &[f64], n: usize) -> f64 {
        if self.is_none() {
            return 0.0;
        }
        self.eval(t, n).iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl SampledForcing {
    fn node_of(domain: &TorusDomain, t: &[f64]) -> Option<usize> {
        let mut idx = Vec::with_capacity(t.len());
        for (axis, &x) in t.iter().enumerate() {
            let size = domain.grid_sizes()[axis];
            let pos = x / domain.spacing(axis);
            let j = pos.round();
            if (pos - j).abs() > 1e-9 {
                return None;
            }
            idx.push((j as i64).rem_euclid(size as i64) as usize);
        }
        Some(domain.flat_index(&idx))
    }

    fn add_to(&self, t: &[f64], out: &mut [f64]) {
        let domain = self.field.domain();
        if t.len() != domain.p() {
            return;
        }
        if let Some(k) = Self::node_of(domain, t) {
            for (o, v) in out.iter_mut().zip(self.field.at(k)) {
                *o += v;
            }
            return;
        }
        let p = domain.p();
        let mut idx = vec![0; p];
        for flat in 0..domain.point_count() {
            domain.multi_index_into(flat, &mut idx);
            let phase: f64 = (0..p)
                .map(|a| 2.0 * PI * domain.frequency(a, idx[a]) as f64 * t[a] / domain.periods()[a])
                .sum();
            let e = Complex64::from_polar(1.0, phase);
            for (o, c) in out.iter_mut().zip(&self.coeffs) {
                *o += (c[flat] * e).re;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinKind {
    Zero,
    LinearForcing,
    Quadratic,
    PseudoHuber,
    Cosine,
}

impl BuiltinKind {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "zero" => BuiltinKind::Zero,
            "linear_forcing" => BuiltinKind::LinearForcing,
            "quadratic" => BuiltinKind::Quadratic,
            "pseudo_huber" => BuiltinKind::PseudoHuber,
            "cosine" => BuiltinKind::Cosine,
            other => return Err(Error::UnknownPotential(other.to_string())),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            BuiltinKind::Zero => "zero",
            BuiltinKind::LinearForcing => "linear_forcing",
            BuiltinKind::Quadratic => "quadratic",
            BuiltinKind::PseudoHuber => "pseudo_huber",
            BuiltinKind::Cosine => "cosine",
        }
    }
}

/// Parameters shared by the builtin families.
#[derive(Debug, Clone)]
pub struct BuiltinParams {
    /// Codomain dimension.
    pub n: usize,
    /// `κ` for quadratic and pseudo_huber.
    pub kappa: f64,
    /// `A` for cosine.
    pub amplitude: f64,
    /// `c(t)` for linear_forcing, `h(t)` for pseudo_huber and cosine.
    pub forcing: Forcing,
    /// Constant bound overriding (or supplying) the analytic one.
    pub claimed_bound: Option<f64>,
}

impl BuiltinParams {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            kappa: 1.0,
            amplitude: 1.0,
            forcing: Forcing::None,
            claimed_bound: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuiltinPotential {
    kind: BuiltinKind,
    params: BuiltinParams,
}

/// Builds one of `zero`, `linear_forcing`, `quadratic`, `pseudo_huber`,
/// `cosine`.
pub fn builtin(name: &str, params: BuiltinParams) -> Result<BuiltinPotential> {
    let kind = BuiltinKind::parse(name)?;
    let invalid = |msg: &str| Err(Error::InvalidParameter(format!("{name}: {msg}")));
    if params.n == 0 {
        return invalid("n must be at least 1");
    }
    params.forcing.check(params.n)?;
    match kind {
        BuiltinKind::Zero if !params.forcing.is_none() => return invalid("takes no forcing"),
        BuiltinKind::Quadratic if !params.forcing.is_none() => return invalid("takes no forcing"),
        BuiltinKind::LinearForcing if params.forcing.is_none() => {
            return invalid("requires a forcing")
        }
        BuiltinKind::Quadratic | BuiltinKind::PseudoHuber
            if !(params.kappa.is_finite() && params.kappa > 0.0) =>
        {
            return invalid("kappa must be positive and finite")
        }
        BuiltinKind::Cosine if !(params.amplitude.is_finite() && params.amplitude >= 0.0) => {
            return invalid("amplitude must be non-negative and finite")
        }
        _ => {}
    }
    if let Some(g) = params.claimed_bound {
        if !(g.is_finite() && g >= 0.0) {
            return invalid("claimed_bound must be non-negative and finite");
        }
    }
    Ok(BuiltinPotential { kind, params })
}

impl BuiltinPotential {
    pub fn kind(&self) -> BuiltinKind {
        self.kind
    }

    pub fn params(&self) -> &BuiltinParams {
        &self.params
    }
}

impl Potential for BuiltinPotential {
    fn value(&self, t: &[f64], u: &[f64]) -> f64 {
        let p = &self.params;
        let sq: f64 = u.iter().map(|v| v * v).sum();
        let own = match self.kind {
            BuiltinKind::Zero | BuiltinKind::LinearForcing => 0.0,
            BuiltinKind::Quadratic => 0.5 * p.kappa * sq,
            // √(1+s)−1 written to avoid cancellation for small s
            BuiltinKind::PseudoHuber => p.kappa * sq / ((1.0 + sq).sqrt() + 1.0),
            BuiltinKind::Cosine => p.amplitude * u.iter().map(|v| 2.0 * (0.5 * v).sin().powi(2)).sum::<f64>(),
        };
        own + p.forcing.dot(t, u)
    }

    fn gradient(&self, t: &[f64], u: &[f64], out: &mut [f64]) {
        let p = &self.params;
        match self.kind {
            BuiltinKind::Zero | BuiltinKind::LinearForcing => out.fill(0.0),
            BuiltinKind::Quadratic => {
                for (o, v) in out.iter_mut().zip(u) {
                    *o = p.kappa * v;
                }
            }
            BuiltinKind::PseudoHuber => {
                let r = (1.0 + u.iter().map(|v| v * v).sum::<f64>()).sqrt();
                for (o, v) in out.iter_mut().zip(u) {
                    *o = p.kappa * v / r;
                }
            }
            BuiltinKind::Cosine => {
                for (o, v) in out.iter_mut().zip(u) {
                    *o = p.amplitude * v.sin();
                }
            }
        }
        p.forcing.add_to(t, out);
    }

    fn bound(&self, t: &[f64]) -> Option<f64> {
        let p = &self.params;
        if p.claimed_bound.is_some() {
            return p.claimed_bound;
        }
        match self.kind {
            BuiltinKind::PseudoHuber => Some(p.kappa + p.forcing.norm(t, p.n)),
            BuiltinKind::Cosine => {
                Some(p.amplitude * (p.n as f64).sqrt() + p.forcing.norm(t, p.n))
            }
            _ => None,
        }
    }

    fn increment(&self, t: &[f64], u: &[f64], delta: &[f64]) -> f64 {
        let p = &self.params;
        let own = match self.kind {
            BuiltinKind::Zero | BuiltinKind::LinearForcing => 0.0,
            BuiltinKind::Quadratic => {
                p.kappa * u.iter().zip(delta).map(|(a, d)| a * d + 0.5 * d * d).sum::<f64>()
            }
            BuiltinKind::PseudoHuber => {
                let (mut lin, mut old, mut new) = (0.0, 0.0, 0.0);
                for (a, d) in u.iter().zip(delta) {
                    lin += (2.0 * a + d) * d;
                    old += a * a;
                    new += (a + d) * (a + d);
                }
                p.kappa * lin / ((1.0 + new).sqrt() + (1.0 + old).sqrt())
            }
            BuiltinKind::Cosine => {
                p.amplitude
                    * u.iter()
                        .zip(delta)
                        .map(|(a, d)| 2.0 * (a + 0.5 * d).sin() * (0.5 * d).sin())
                        .sum::<f64>()
            }
        };
        own + p.forcing.dot(t, delta)
    }
}
