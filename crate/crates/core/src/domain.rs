//! The periodic box, its uniform grid, discrete fields and their Fourier
//! representation.
//!
//! Grid node `(k¹,…,kᵖ)` sits at `tᵅ = kᵅ·Tᵅ/Nᵅ`; the face `tᵅ = Tᵅ` is not
//! stored because periodicity identifies it with `tᵅ = 0`. Field values are
//! laid out grid-major (row-major over the multi-index, last axis fastest)
//! with the component index innermost.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fft;

/// Shared handle to an immutable domain.
pub type DomainRef = Arc<TorusDomain>;

#[derive(Debug, Clone, PartialEq)]
pub struct TorusDomain {
    n: usize,
    periods: Vec<f64>,
    grid_sizes: Vec<usize>,
}

/// Validates and builds a domain behind a shared handle.
pub fn make_domain(p: usize, n: usize, periods: &[f64], grid_sizes: &[usize]) -> Result<DomainRef> {
    TorusDomain::new(p, n, periods, grid_sizes).map(Arc::new)
}

impl TorusDomain {
    pub fn new(p: usize, n: usize, periods: &[f64], grid_sizes: &[usize]) -> Result<Self> {
        if p < 1 {
            return Err(Error::InvalidDomain("p must be at least 1".into()));
        }
        if n < 1 {
            return Err(Error::InvalidDomain("n must be at least 1".into()));
        }
        if periods.len() != p {
            return Err(Error::InvalidDomain(format!(
                "expected {p} periods, got {}",
                periods.len()
            )));
        }
        if grid_sizes.len() != p {
            return Err(Error::InvalidDomain(format!(
                "expected {p} grid sizes, got {}",
                grid_sizes.len()
            )));
        }
        for (axis, &t) in periods.iter().enumerate() {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidDomain(format!(
                    "non-positive period {t} on axis {}",
                    axis + 1
                )));
            }
        }
        for (axis, &size) in grid_sizes.iter().enumerate() {
            if size < 4 || size % 2 != 0 {
                return Err(Error::InvalidDomain(format!(
                    "grid size {size} on axis {} must be even and at least 4",
                    axis + 1
                )));
            }
        }
        Ok(Self {
            n,
            periods: periods.to_vec(),
            grid_sizes: grid_sizes.to_vec(),
        })
    }

    /// Number of multi-time axes.
    pub fn p(&self) -> usize {
        self.periods.len()
    }

    /// Codomain dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn grid_sizes(&self) -> &[usize] {
        &self.grid_sizes
    }

    pub fn volume(&self) -> f64 {
        self.periods.iter().product()
    }

    pub fn point_count(&self) -> usize {
        self.grid_sizes.iter().product()
    }

    /// Quadrature weight of a single node, `volume / point_count`.
    pub fn weight(&self) -> f64 {
        self.volume() / self.point_count() as f64
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.periods[axis] / self.grid_sizes[axis] as f64
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.grid_sizes[axis + 1..].iter().product()
    }

    pub fn multi_index_into(&self, mut flat: usize, out: &mut [usize]) {
        for axis in (0..self.p()).rev() {
            let size = self.grid_sizes[axis];
            out[axis] = flat % size;
            flat /= size;
        }
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.p()];
        self.multi_index_into(flat, &mut idx);
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.grid_sizes)
            .fold(0, |acc, (&k, &size)| acc * size + k)
    }

    /// Index along `axis` of the node `flat`.
    pub fn axis_index(&self, flat: usize, axis: usize) -> usize {
        (flat / self.stride(axis)) % self.grid_sizes[axis]
    }

    /// Periodic neighbour of `flat` shifted by `offset` nodes along `axis`.
    pub fn neighbor(&self, flat: usize, axis: usize, offset: isize) -> usize {
        let size = self.grid_sizes[axis] as isize;
        let stride = self.stride(axis);
        let k = self.axis_index(flat, axis) as isize;
        let shifted = (k + offset).rem_euclid(size);
        (flat as isize + (shifted - k) * stride as isize) as usize
    }

    pub fn node_into(&self, flat: usize, out: &mut [f64]) {
        let mut rest = flat;
        for axis in (0..self.p()).rev() {
            let size = self.grid_sizes[axis];
            out[axis] = (rest % size) as f64 * self.spacing(axis);
            rest /= size;
        }
    }

    /// Coordinates `t(k)` of the grid node with flat index `flat`.
    pub fn node(&self, flat: usize) -> Vec<f64> {
        let mut t = vec![0.0; self.p()];
        self.node_into(flat, &mut t);
        t
    }

    /// Signed frequency `m ∈ {−N/2,…,N/2−1}` stored at FFT slot `slot`.
    pub fn frequency(&self, axis: usize, slot: usize) -> i64 {
        let size = self.grid_sizes[axis];
        if slot < size / 2 {
            slot as i64
        } else {
            slot as i64 - size as i64
        }
    }

    /// FFT slot holding frequency `m`, if `m` is representable.
    pub fn slot(&self, axis: usize, m: i64) -> Option<usize> {
        let half = (self.grid_sizes[axis] / 2) as i64;
        if m < -half || m >= half {
            return None;
        }
        Some(m.rem_euclid(self.grid_sizes[axis] as i64) as usize)
    }

    pub fn is_nyquist(&self, axis: usize, slot: usize) -> bool {
        slot == self.grid_sizes[axis] / 2
    }

    /// Spectral derivative symbol `2πm/T` for `slot`, zero on the Nyquist mode.
    pub fn wavenumber(&self, axis: usize, slot: usize) -> f64 {
        if self.is_nyquist(axis, slot) {
            0.0
        } else {
            2.0 * PI * self.frequency(axis, slot) as f64 / self.periods[axis]
        }
    }

    /// Per-axis tables of [`TorusDomain::wavenumber`].
    pub fn wavenumber_tables(&self) -> Vec<Vec<f64>> {
        (0..self.p())
            .map(|axis| {
                (0..self.grid_sizes[axis])
                    .map(|slot| self.wavenumber(axis, slot))
                    .collect()
            })
            .collect()
    }

    pub(crate) fn same(a: &DomainRef, b: &DomainRef) -> bool {
        Arc::ptr_eq(a, b) || **a == **b
    }
}

pub(crate) fn ensure_same(a: &DomainRef, b: &DomainRef) -> Result<()> {
    if TorusDomain::same(a, b) {
        Ok(())
    } else {
        Err(Error::DomainMismatch(format!(
            "{:?}/{:?} vs {:?}/{:?}",
            a.periods(),
            a.grid_sizes(),
            b.periods(),
            b.grid_sizes()
        )))
    }
}

/// A discrete map from the grid into Rⁿ.
#[derive(Debug, Clone)]
pub struct Field {
    domain: DomainRef,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(domain: &DomainRef) -> Self {
        Self {
            domain: Arc::clone(domain),
            values: vec![0.0; domain.point_count() * domain.n()],
        }
    }

    pub fn constant(domain: &DomainRef, c: &[f64]) -> Result<Self> {
        if c.len() != domain.n() {
            return Err(Error::InvalidField(format!(
                "constant has {} components, domain has n = {}",
                c.len(),
                domain.n()
            )));
        }
        let values = c.iter().copied().cycle().take(domain.point_count() * domain.n()).collect();
        Self::from_values(domain, values)
    }

    pub fn from_values(domain: &DomainRef, values: Vec<f64>) -> Result<Self> {
        let expected = domain.point_count() * domain.n();
        if values.len() != expected {
            return Err(Error::InvalidField(format!(
                "expected {expected} values, got {}",
                values.len()
            )));
        }
        let field = Self::from_raw(domain, values);
        if let Some((point, component)) = field.first_non_finite() {
            return Err(Error::NonFinite {
                what: "field",
                point,
                component,
            });
        }
        Ok(field)
    }

    pub(crate) fn from_raw(domain: &DomainRef, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), domain.point_count() * domain.n());
        Self {
            domain: Arc::clone(domain),
            values,
        }
    }

    /// Samples `sampler(t)` at every grid node. Non-periodic samplers are
    /// accepted; see `verify::periodicity_check`.
    pub fn sample<S>(domain: &DomainRef, sampler: S) -> Result<Self>
    where
        S: Fn(&[f64], &mut [f64]),
    {
        let n = domain.n();
        let mut values = vec![0.0; domain.point_count() * n];
        let mut t = vec![0.0; domain.p()];
        for (k, chunk) in values.chunks_exact_mut(n).enumerate() {
            domain.node_into(k, &mut t);
            sampler(&t, chunk);
            if let Some(i) = chunk.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what: "sampler output",
                    point: k,
                    component: i,
                });
            }
        }
        Ok(Self::from_raw(domain, values))
    }

    pub fn domain(&self) -> &DomainRef {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn n(&self) -> usize {
        self.domain.n()
    }

    /// Values at node `point`.
    pub fn at(&self, point: usize) -> &[f64] {
        let n = self.n();
        &self.values[point * n..(point + 1) * n]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.n())
    }

    pub fn component(&self, i: usize) -> Vec<f64> {
        self.values.iter().skip(i).step_by(self.n()).copied().collect()
    }

    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        let n = self.n();
        self.values
            .iter()
            .position(|v| !v.is_finite())
            .map(|pos| (pos / n, pos % n))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn scaled(&self, a: f64) -> Field {
        Self::from_raw(&self.domain, self.values.iter().map(|v| a * v).collect())
    }

    /// `self += a·x`.
    pub fn axpy(&mut self, a: f64, x: &Field) -> Result<()> {
        ensure_same(&self.domain, &x.domain)?;
        for (s, v) in self.values.iter_mut().zip(&x.values) {
            *s += a * v;
        }
        Ok(())
    }

    /// `a·u + b·v`.
    pub fn combine(a: f64, u: &Field, b: f64, v: &Field) -> Result<Field> {
        ensure_same(&u.domain, &v.domain)?;
        let values = u
            .values
            .iter()
            .zip(&v.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self::from_raw(&u.domain, values))
    }

    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        ensure_same(&self.domain, &other.domain)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs())))
    }
}

/// Partial velocities `u^i_α` at every node; axis index innermost.
#[derive(Debug, Clone)]
pub struct GradientField {
    domain: DomainRef,
    values: Vec<f64>,
}

impl GradientField {
    pub fn zeros(domain: &DomainRef) -> Self {
        Self {
            domain: Arc::clone(domain),
            values: vec![0.0; domain.point_count() * domain.n() * domain.p()],
        }
    }

    /// Assembles the gradient from one field per axis.
    pub fn from_axis_fields(axis_fields: &[Field]) -> Result<Self> {
        let first = axis_fields
            .first()
            .ok_or_else(|| Error::InvalidField("no axis fields".into()))?;
        let domain = Arc::clone(first.domain());
        if axis_fields.len() != domain.p() {
            return Err(Error::InvalidField(format!(
                "expected {} axis fields, got {}",
                domain.p(),
                axis_fields.len()
            )));
        }
        let p = domain.p();
        let mut grad = Self::zeros(&domain);
        for (axis, f) in axis_fields.iter().enumerate() {
            ensure_same(&domain, f.domain())?;
            for (slot, v) in f.values().iter().enumerate() {
                grad.values[slot * p + axis] = *v;
            }
        }
        Ok(grad)
    }

    pub fn domain(&self) -> &DomainRef {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, point: usize, component: usize, axis: usize) -> f64 {
        let (n, p) = (self.domain.n(), self.domain.p());
        self.values[(point * n + component) * p + axis]
    }

    /// The derivative along one axis as a plain field.
    pub fn axis_field(&self, axis: usize) -> Field {
        let p = self.domain.p();
        let values = self.values.iter().skip(axis).step_by(p).copied().collect();
        Field::from_raw(&self.domain, values)
    }
}

/// Fourier coefficients per component, stored in FFT slot order.
#[derive(Debug, Clone)]
pub struct SpectralCoefficients {
    domain: DomainRef,
    components: Vec<Vec<Complex64>>,
}

impl SpectralCoefficients {
    pub fn from_components(domain: &DomainRef, components: Vec<Vec<Complex64>>) -> Result<Self> {
        if components.len() != domain.n()
            || components.iter().any(|c| c.len() != domain.point_count())
        {
            return Err(Error::InvalidField(
                "coefficient array shape does not match the domain".into(),
            ));
        }
        Ok(Self {
            domain: Arc::clone(domain),
            components,
        })
    }

    pub fn domain(&self) -> &DomainRef {
        &self.domain
    }

    pub fn component(&self, i: usize) -> &[Complex64] {
        &self.components[i]
    }

    pub(crate) fn component_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.components[i]
    }

    /// Coefficient of frequency multi-index `m`; `None` when out of range.
    pub fn coeff(&self, component: usize, m: &[i64]) -> Option<Complex64> {
        if m.len() != self.domain.p() || component >= self.domain.n() {
            return None;
        }
        let mut idx = Vec::with_capacity(m.len());
        for (axis, &freq) in m.iter().enumerate() {
            idx.push(self.domain.slot(axis, freq)?);
        }
        Some(self.components[component][self.domain.flat_index(&idx)])
    }

    /// Largest `|coeff(−m) − conj(coeff(m))|` over frequencies whose
    /// negation is representable.
    pub fn hermitian_defect(&self) -> f64 {
        let d = &self.domain;
        let p = d.p();
        let mut idx = vec![0; p];
        let mut neg = vec![0; p];
        let mut defect = 0.0_f64;
        'points: for flat in 0..d.point_count() {
            d.multi_index_into(flat, &mut idx);
            for axis in 0..p {
                if d.is_nyquist(axis, idx[axis]) {
                    continue 'points;
                }
                let size = d.grid_sizes()[axis];
                neg[axis] = (size - idx[axis]) % size;
            }
            let mirror = d.flat_index(&neg);
            for comp in &self.components {
                defect = defect.max((comp[mirror] - comp[flat].conj()).norm());
            }
        }
        defect
    }
}

/// Forward transform with `coeff(m) = (1/P)·Σ_k u(k)·exp(−2πi Σ mᵅkᵅ/Nᵅ)`.
pub fn to_spectral(field: &Field) -> SpectralCoefficients {
    let domain = field.domain();
    let shape = domain.grid_sizes();
    let scale = 1.0 / domain.point_count() as f64;
    let components = (0..domain.n())
        .map(|i| {
            let mut data: Vec<Complex64> = field
                .values()
                .iter()
                .skip(i)
                .step_by(domain.n())
                .map(|&v| Complex64::new(v, 0.0))
                .collect();
            fft::forward(&mut data, shape);
            data.iter_mut().for_each(|c| *c *= scale);
            data
        })
        .collect();
    SpectralCoefficients {
        domain: Arc::clone(domain),
        components,
    }
}

/// Inverse of [`to_spectral`]; rejects coefficients that cannot come from a
/// real field.
pub fn from_spectral(coeffs: &SpectralCoefficients) -> Result<Field> {
    let scale = coeffs
        .components
        .iter()
        .flat_map(|c| c.iter())
        .fold(1.0_f64, |acc, c| acc.max(c.norm()));
    let defect = coeffs.hermitian_defect();
    if defect > 1e-10 * scale {
        return Err(Error::NotHermitian { defect });
    }
    Ok(synthesize(coeffs))
}

/// Inverse transform taking the real part, without the symmetry check.
pub(crate) fn synthesize(coeffs: &SpectralCoefficients) -> Field {
    let domain = &coeffs.domain;
    let n = domain.n();
    let mut values = vec![0.0; domain.point_count() * n];
    for (i, comp) in coeffs.components.iter().enumerate() {
        let mut data = comp.clone();
        fft::inverse(&mut data, domain.grid_sizes());
        for (k, c) in data.iter().enumerate() {
            values[k * n + i] = c.re;
        }
    }
    Field::from_raw(domain, values)
}

/// Deterministic generator used for every sampling-based routine.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random smooth field: white noise low-passed to `|mᵅ| ≤ max_mode` on
/// every axis, then scaled to root-mean-square `amplitude`.
pub fn random_field<R: Rng + ?Sized>(
    domain: &DomainRef,
    max_mode: usize,
    amplitude: f64,
    zero_mean: bool,
    rng: &mut R,
) -> Field {
    let len = domain.point_count() * domain.n();
    let noise: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
    let mut coeffs = to_spectral(&Field::from_raw(domain, noise));
    let p = domain.p();
    let mut idx = vec![0; p];
    for flat in 0..domain.point_count() {
        domain.multi_index_into(flat, &mut idx);
        let keep = (0..p).all(|axis| {
            !domain.is_nyquist(axis, idx[axis])
                && domain.frequency(axis, idx[axis]).unsigned_abs() as usize <= max_mode
        });
        let is_mean = idx.iter().all(|&j| j == 0);
        if !keep || (zero_mean && is_mean) {
            for i in 0..domain.n() {
                coeffs.component_mut(i)[flat] = Complex64::default();
            }
        }
    }
    let field = synthesize(&coeffs);
    let rms = (field.values().iter().map(|v| v * v).sum::<f64>() / len as f64).sqrt();
    if rms == 0.0 {
        field
    } else {
        field.scaled(amplitude / rms)
    }
}
