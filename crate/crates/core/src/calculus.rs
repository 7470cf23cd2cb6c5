//! Discrete differential and integral calculus on periodic fields.
//!
//! Quadrature everywhere is the rectangle rule on the periodic grid with
//! weight `w = volume / point_count`; reductions run in grid order.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::domain::{
    ensure_same, to_spectral, DomainRef, Field, GradientField, SpectralCoefficients, TorusDomain,
};
use crate::error::{Error, Result};
use crate::fft;

/// Derivative discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Fourier multiplier `2πimᵅ/Tᵅ`, Nyquist mode sent to zero.
    #[default]
    Spectral,
    /// Second-order centered differences with periodic wraparound.
    Centered2,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(Scheme::Spectral),
            "centered2" => Ok(Scheme::Centered2),
            other => Err(Error::InvalidParameter(format!("unknown scheme `{other}`"))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Spectral => "spectral",
            Scheme::Centered2 => "centered2",
        })
    }
}

/// Applies a Fourier multiplier `symbol(flat slot)` to every component.
fn spectral_multiply<S>(field: &Field, symbol: S) -> Field
where
    S: Fn(usize) -> Complex64,
{
    apply_symbol(&to_spectral(field), symbol)
}

fn apply_symbol<S>(coeffs: &SpectralCoefficients, symbol: S) -> Field
where
    S: Fn(usize) -> Complex64,
{
    let domain = coeffs.domain();
    let n = domain.n();
    let table: Vec<Complex64> = (0..domain.point_count()).map(symbol).collect();
    let mut values = vec![0.0; domain.point_count() * n];
    for i in 0..n {
        let mut data: Vec<Complex64> = coeffs
            .component(i)
            .iter()
            .zip(&table)
            .map(|(c, s)| c * s)
            .collect();
        fft::inverse(&mut data, domain.grid_sizes());
        for (k, c) in data.iter().enumerate() {
            values[k * n + i] = c.re;
        }
    }
    Field::from_raw(domain, values)
}

fn shift_combination(field: &Field, axis: usize, taps: &[(isize, f64)]) -> Field {
    let domain = field.domain();
    let n = domain.n();
    let src = field.values();
    let mut values = vec![0.0; src.len()];
    for k in 0..domain.point_count() {
        for &(offset, coef) in taps {
            let j = domain.neighbor(k, axis, offset);
            for i in 0..n {
                values[k * n + i] += coef * src[j * n + i];
            }
        }
    }
    Field::from_raw(domain, values)
}

/// `∂u/∂tᵅ` along a single axis.
pub fn partial_derivative(field: &Field, axis: usize, scheme: Scheme) -> Field {
    let domain = field.domain();
    match scheme {
        Scheme::Spectral => {
            let k = domain.wavenumber_tables();
            spectral_multiply(field, |flat| {
                Complex64::new(0.0, k[axis][domain.axis_index(flat, axis)])
            })
        }
        Scheme::Centered2 => {
            let c = 0.5 / domain.spacing(axis);
            shift_combination(field, axis, &[(1, c), (-1, -c)])
        }
    }
}

pub fn partial_derivatives(field: &Field, scheme: Scheme) -> GradientField {
    let domain = field.domain();
    let per_axis: Vec<Field> = match scheme {
        Scheme::Spectral => {
            let coeffs = to_spectral(field);
            let k = domain.wavenumber_tables();
            (0..domain.p())
                .map(|axis| {
                    apply_symbol(&coeffs, |flat| {
                        Complex64::new(0.0, k[axis][domain.axis_index(flat, axis)])
                    })
                })
                .collect()
        }
        Scheme::Centered2 => (0..domain.p())
            .map(|axis| partial_derivative(field, axis, scheme))
            .collect(),
    };
    GradientField::from_axis_fields(&per_axis).expect("axis fields share the domain")
}

/// `Σ_α ∂g_α/∂tᵅ` of a gradient-shaped field.
pub fn divergence(grad: &GradientField, scheme: Scheme) -> Field {
    let domain = grad.domain();
    let mut out = Field::zeros(domain);
    for axis in 0..domain.p() {
        let d = partial_derivative(&grad.axis_field(axis), axis, scheme);
        out.axpy(1.0, &d).expect("same domain");
    }
    out
}

/// `Δu = Σ_α ∂²u/∂(tᵅ)²`. The spectral symbol is `−Σ_α kᵅ²` with the same
/// Nyquist rule as the first derivative, so it coincides with
/// `divergence(partial_derivatives(u))`. Centered2 is the 3-point stencil.
pub fn laplacian(field: &Field, scheme: Scheme) -> Field {
    let domain = field.domain();
    match scheme {
        Scheme::Spectral => {
            let k = domain.wavenumber_tables();
            let p = domain.p();
            spectral_multiply(field, |flat| {
                let s: f64 = (0..p)
                    .map(|a| k[a][domain.axis_index(flat, a)].powi(2))
                    .sum();
                Complex64::new(-s, 0.0)
            })
        }
        Scheme::Centered2 => {
            let mut out = Field::zeros(domain);
            for axis in 0..domain.p() {
                let c = domain.spacing(axis).powi(-2);
                let term = shift_combination(field, axis, &[(1, c), (0, -2.0 * c), (-1, c)]);
                out.axpy(1.0, &term).expect("same domain");
            }
            out
        }
    }
}

/// The operator `D_α∘D_α` summed over axes: the exact first variation of
/// `½∫|Du|²` for either scheme. Equals [`laplacian`] for the spectral
/// scheme; for centered2 it is the wide `(1,0,−2,0,1)/4h²` stencil.
pub fn variational_laplacian(field: &Field, scheme: Scheme) -> Field {
    match scheme {
        Scheme::Spectral => laplacian(field, scheme),
        Scheme::Centered2 => {
            let domain = field.domain();
            let mut out = Field::zeros(domain);
            for axis in 0..domain.p() {
                let c = 0.25 * domain.spacing(axis).powi(-2);
                let term = shift_combination(field, axis, &[(2, c), (0, -2.0 * c), (-2, c)]);
                out.axpy(1.0, &term).expect("same domain");
            }
            out
        }
    }
}

/// Componentwise `∫_{T₀} u dt`.
pub fn integrate(field: &Field) -> Vec<f64> {
    let n = field.n();
    let w = field.domain().weight();
    let mut acc = vec![0.0; n];
    for point in field.points() {
        for (a, v) in acc.iter_mut().zip(point) {
            *a += v;
        }
    }
    acc.iter_mut().for_each(|a| *a *= w);
    acc
}

/// Quadrature of the pointwise scalar product, `∫(u, v) dt`.
pub fn inner(u: &Field, v: &Field) -> Result<f64> {
    ensure_same(u.domain(), v.domain())?;
    let sum: f64 = u.values().iter().zip(v.values()).map(|(a, b)| a * b).sum();
    Ok(sum * u.domain().weight())
}

/// Volume average `ū`.
pub fn mean_part(field: &Field) -> Vec<f64> {
    let volume = field.domain().volume();
    integrate(field).into_iter().map(|c| c / volume).collect()
}

/// Fluctuation `ũ = u − ū`.
pub fn fluct_part(field: &Field) -> Field {
    let mean = mean_part(field);
    let values = field
        .points()
        .flat_map(|pt| pt.iter().zip(&mean).map(|(v, m)| v - m))
        .collect();
    Field::from_raw(field.domain(), values)
}

pub fn l2_norm(field: &Field) -> f64 {
    let sum: f64 = field.values().iter().map(|v| v * v).sum();
    (sum * field.domain().weight()).sqrt()
}

pub fn grad_l2_norm(grad: &GradientField) -> f64 {
    let sum: f64 = grad.values().iter().map(|v| v * v).sum();
    (sum * grad.domain().weight()).sqrt()
}

/// Norm induced by the H¹ scalar product `∫(u,v) + ∫δ^{αβ}(∂_αu, ∂_βv)`.
pub fn h1_norm(field: &Field, scheme: Scheme) -> f64 {
    let l2 = l2_norm(field);
    let g = grad_l2_norm(&partial_derivatives(field, scheme));
    (l2 * l2 + g * g).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub constant_used: f64,
    pub holds: bool,
}

impl InequalityReport {
    pub fn new(lhs: f64, rhs: f64, constant_used: f64) -> Self {
        Self {
            lhs,
            rhs,
            constant_used,
            holds: lhs <= rhs + 1e-12 * rhs.max(1.0),
        }
    }
}

/// `|∫u| ≤ (n·T¹⋯Tᵖ)^½ ‖u‖_{L²}`.
pub fn theorem2_check(field: &Field) -> InequalityReport {
    let domain = field.domain();
    let lhs = integrate(field).iter().map(|c| c * c).sum::<f64>().sqrt();
    let constant = (domain.n() as f64 * domain.volume()).sqrt();
    InequalityReport::new(lhs, constant * l2_norm(field), constant)
}

/// `C₁ = volume^½ · max_α Tᵅ / 2π`: the Poincaré constant of the lowest
/// nonzero torus eigenvalue chained with Cauchy–Schwarz. Valid, not sharp.
pub fn wirtinger_constant(domain: &TorusDomain) -> f64 {
    let t_max = domain.periods().iter().copied().fold(0.0, f64::max);
    domain.volume().sqrt() * t_max / (2.0 * PI)
}

/// `∫|ũ| ≤ C₁ ‖∂u/∂t‖_{L²}` with spectral derivatives.
pub fn wirtinger_check(field: &Field) -> InequalityReport {
    let domain = field.domain();
    let w = domain.weight();
    let lhs: f64 = fluct_part(field)
        .points()
        .map(|pt| pt.iter().map(|v| v * v).sum::<f64>().sqrt())
        .sum::<f64>()
        * w;
    let c1 = wirtinger_constant(domain);
    let grad = grad_l2_norm(&partial_derivatives(field, Scheme::Spectral));
    InequalityReport::new(lhs, c1 * grad, c1)
}

/// The vector 1-form `v_α dtᵅ`, one field per axis.
#[derive(Debug, Clone)]
pub struct OneForm {
    components: Vec<Field>,
}

impl OneForm {
    pub fn new(components: Vec<Field>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidField("one-form needs p components".into()))?;
        let domain = first.domain().clone();
        if components.len() != domain.p() {
            return Err(Error::InvalidField(format!(
                "one-form needs {} components, got {}",
                domain.p(),
                components.len()
            )));
        }
        for c in &components {
            ensure_same(&domain, c.domain())?;
        }
        Ok(Self { components })
    }

    pub fn zero(domain: &DomainRef) -> Self {
        Self {
            components: vec![Field::zeros(domain); domain.p()],
        }
    }

    pub fn from_gradient(grad: &GradientField) -> Self {
        Self {
            components: (0..grad.domain().p()).map(|a| grad.axis_field(a)).collect(),
        }
    }

    /// `du` computed with `scheme`.
    pub fn differential(field: &Field, scheme: Scheme) -> Self {
        Self::from_gradient(&partial_derivatives(field, scheme))
    }

    pub fn domain(&self) -> &DomainRef {
        self.components[0].domain()
    }

    pub fn component(&self, axis: usize) -> &Field {
        &self.components[axis]
    }
}

/// An axis-aligned polyline of grid nodes in the unwrapped lattice, starting
/// at the origin and ending at `(w¹N¹,…,wᵖNᵖ)` for declared windings `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    waypoints: Vec<Vec<i64>>,
    windings: Vec<i64>,
    samples_per_segment: usize,
}

impl Curve {
    pub fn new(
        domain: &TorusDomain,
        waypoints: Vec<Vec<i64>>,
        windings: Vec<i64>,
        samples_per_segment: usize,
    ) -> Result<Self> {
        let p = domain.p();
        let bad = |msg: String| Err(Error::InvalidParameter(format!("curve: {msg}")));
        if samples_per_segment == 0 {
            return bad("samples_per_segment must be positive".into());
        }
        if windings.len() != p {
            return bad(format!("expected {p} winding counts"));
        }
        match waypoints.first() {
            Some(first) if first.len() == p && first.iter().all(|&c| c == 0) => {}
            _ => return bad("must start at the origin".into()),
        }
        for (s, pair) in waypoints.windows(2).enumerate() {
            if pair[1].len() != p {
                return bad(format!("waypoint {} has wrong dimension", s + 1));
            }
            let moved = pair[0].iter().zip(&pair[1]).filter(|(a, b)| a != b).count();
            if moved != 1 {
                return bad(format!("segment {s} must move along exactly one axis"));
            }
        }
        let last = waypoints.last().expect("non-empty");
        for axis in 0..p {
            if last[axis] != windings[axis] * domain.grid_sizes()[axis] as i64 {
                return bad(format!("end point does not match winding on axis {}", axis + 1));
            }
        }
        Ok(Self {
            waypoints,
            windings,
            samples_per_segment,
        })
    }

    /// Builds the polyline from `(axis, signed node count)` moves.
    pub fn from_moves(
        domain: &TorusDomain,
        moves: &[(usize, i64)],
        windings: Vec<i64>,
        samples_per_segment: usize,
    ) -> Result<Self> {
        let mut at = vec![0_i64; domain.p()];
        let mut waypoints = vec![at.clone()];
        for &(axis, steps) in moves {
            if axis >= domain.p() || steps == 0 {
                return Err(Error::InvalidParameter(format!(
                    "curve: bad move ({axis}, {steps})"
                )));
            }
            at[axis] += steps;
            waypoints.push(at.clone());
        }
        Self::new(domain, waypoints, windings, samples_per_segment)
    }

    /// The straight O→T staircase: one full period along each axis in order.
    pub fn staircase(domain: &TorusDomain, samples_per_segment: usize) -> Self {
        let moves: Vec<(usize, i64)> = domain
            .grid_sizes()
            .iter()
            .enumerate()
            .map(|(axis, &size)| (axis, size as i64))
            .collect();
        Self::from_moves(domain, &moves, vec![1; domain.p()], samples_per_segment)
            .expect("staircase is valid")
    }

    pub fn waypoints(&self) -> &[Vec<i64>] {
        &self.waypoints
    }

    pub fn windings(&self) -> &[i64] {
        &self.windings
    }

    pub fn samples_per_segment(&self) -> usize {
        self.samples_per_segment
    }
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; count];
    let mut weights = vec![0.0; count];
    let nf = count as f64;
    for i in 0..count.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=count {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            if count == 1 {
                p0 = 1.0;
                p1 = x;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[count - 1 - i] = x;
        weights[i] = w;
        weights[count - 1 - i] = w;
    }
    (nodes, weights)
}

/// Real trigonometric interpolant of periodic line data `values` on `[0, period)`.
pub(crate) struct LineInterpolant {
    coeffs: Vec<Complex64>,
    period: f64,
}

impl LineInterpolant {
    pub(crate) fn new(values: &[f64], period: f64) -> Self {
        let len = values.len();
        let mut coeffs: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft::forward_line(&mut coeffs);
        coeffs.iter_mut().for_each(|c| *c /= len as f64);
        Self { coeffs, period }
    }

    pub(crate) fn eval(&self, t: f64) -> f64 {
        let len = self.coeffs.len();
        let theta = 2.0 * PI * t / self.period;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let m = if j < len / 2 { j as f64 } else { j as f64 - len as f64 };
                (c * Complex64::from_polar(1.0, m * theta)).re
            })
            .sum()
    }
}

/// `∫_γ v_α dtᵅ` along an axis-aligned curve. Each segment integrates the
/// trigonometric interpolant of `v_α` along its grid line with a
/// `samples_per_segment`-point Gauss–Legendre rule.
pub fn path_integral(form: &OneForm, curve: &Curve) -> Result<Vec<f64>> {
    let domain = form.domain();
    let n = domain.n();
    let p = domain.p();
    if curve.windings.len() != p {
        return Err(Error::DomainMismatch("curve dimension differs from form".into()));
    }
    let (nodes, weights) = gauss_legendre(curve.samples_per_segment);
    let mut total = vec![0.0; n];
    let mut idx = vec![0usize; p];
    for pair in curve.waypoints.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let axis = (0..p).find(|&ax| a[ax] != b[ax]).expect("validated");
        let size = domain.grid_sizes()[axis];
        for ax in 0..p {
            idx[ax] = a[ax].rem_euclid(domain.grid_sizes()[ax] as i64) as usize;
        }
        idx[axis] = 0;
        let base = domain.flat_index(&idx);
        let stride = domain.stride(axis);
        let h = domain.spacing(axis);
        let (ta, tb) = (a[axis] as f64 * h, b[axis] as f64 * h);
        let (mid, half) = (0.5 * (ta + tb), 0.5 * (tb - ta));
        let field = form.component(axis);
        for (i, slot) in total.iter_mut().enumerate() {
            let line: Vec<f64> = (0..size)
                .map(|j| field.values()[(base + j * stride) * n + i])
                .collect();
            let interp = LineInterpolant::new(&line, domain.periods()[axis]);
            let seg: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(x, w)| w * interp.eval(mid + half * x))
                .sum();
            *slot += half * seg;
        }
    }
    Ok(total)
}

/// Shape of a scalar test-function profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeShape {
    Constant,
    Cos,
    Sin,
}

/// `{cos, sin}(2kπ tʲ/Tʲ)·eⁱ`, or the constant `eⁱ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestMode {
    pub component: usize,
    pub axis: usize,
    pub k: usize,
    pub shape: ModeShape,
}

impl TestMode {
    fn phase(&self, t: f64, period: f64) -> f64 {
        2.0 * PI * self.k as f64 * t / period
    }

    /// Scalar profile at coordinate `t` along `self.axis`.
    pub fn profile(&self, t: f64, period: f64) -> f64 {
        match self.shape {
            ModeShape::Constant => 1.0,
            ModeShape::Cos => self.phase(t, period).cos(),
            ModeShape::Sin => self.phase(t, period).sin(),
        }
    }

    /// Derivative of the profile along `self.axis`.
    pub fn profile_derivative(&self, t: f64, period: f64) -> f64 {
        let k = 2.0 * PI * self.k as f64 / period;
        match self.shape {
            ModeShape::Constant => 0.0,
            ModeShape::Cos => -k * self.phase(t, period).sin(),
            ModeShape::Sin => k * self.phase(t, period).cos(),
        }
    }

    /// Grid tables of the profile and its derivative, indexed by node.
    pub(crate) fn tables(&self, domain: &TorusDomain) -> (Vec<f64>, Vec<f64>) {
        let period = domain.periods()[self.axis];
        let h = domain.spacing(self.axis);
        let line: Vec<(f64, f64)> = (0..domain.grid_sizes()[self.axis])
            .map(|j| {
                let t = j as f64 * h;
                (self.profile(t, period), self.profile_derivative(t, period))
            })
            .collect();
        (0..domain.point_count())
            .map(|flat| line[domain.axis_index(flat, self.axis)])
            .unzip()
    }

    /// `h1_norm` of the vector test function, in closed form.
    pub fn h1_norm(&self, domain: &TorusDomain) -> f64 {
        let v = domain.volume();
        match self.shape {
            ModeShape::Constant => v.sqrt(),
            _ => {
                let k = 2.0 * PI * self.k as f64 / domain.periods()[self.axis];
                (0.5 * v * (1.0 + k * k)).sqrt()
            }
        }
    }
}

/// Constants `eⁱ` plus the cosine/sine modes up to `max_mode` on every axis
/// and component.
pub fn test_modes(domain: &TorusDomain, max_mode: usize) -> Vec<TestMode> {
    let mut modes = Vec::new();
    for component in 0..domain.n() {
        modes.push(TestMode {
            component,
            axis: 0,
            k: 0,
            shape: ModeShape::Constant,
        });
        for axis in 0..domain.p() {
            for k in 1..=max_mode {
                for shape in [ModeShape::Cos, ModeShape::Sin] {
                    modes.push(TestMode {
                        component,
                        axis,
                        k,
                        shape,
                    });
                }
            }
        }
    }
    modes
}

pub(crate) fn check_max_mode(domain: &TorusDomain, max_mode: usize) -> Result<()> {
    let limit = domain.grid_sizes().iter().map(|&s| s / 2 - 1).min().unwrap_or(0);
    if max_mode > limit {
        return Err(Error::InvalidParameter(format!(
            "max_mode {max_mode} exceeds band limit {limit}"
        )));
    }
    Ok(())
}

/// Largest defect `|∫(u, ∂_αf) + ∫(v_α, f)|` over test functions `f` and
/// axes `α`. Near zero iff `v` acts as the weak differential of `u` on the
/// truncated family.
pub fn weak_identity_check(u: &Field, v: &OneForm, max_mode: usize) -> Result<f64> {
    let domain = u.domain();
    ensure_same(domain, v.domain())?;
    check_max_mode(domain, max_mode)?;
    let n = domain.n();
    let w = domain.weight();
    let mut worst = 0.0_f64;
    for mode in test_modes(domain, max_mode) {
        let (f, df) = mode.tables(domain);
        let i = mode.component;
        for alpha in 0..domain.p() {
            let va = v.component(alpha).values();
            let mut acc = 0.0;
            for k in 0..domain.point_count() {
                let dfa = if alpha == mode.axis { df[k] } else { 0.0 };
                acc += u.values()[k * n + i] * dfa + va[k * n + i] * f[k];
            }
            worst = worst.max((acc * w).abs());
        }
    }
    Ok(worst)
}
