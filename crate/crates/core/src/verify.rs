//! Residuals of a candidate field against `Δu = ∇F(t, u)` and its weak
//! form, plus a periodic-trace check.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::calculus::{
    check_max_mode, l2_norm, laplacian, partial_derivatives, test_modes, Scheme,
};
use crate::domain::{to_spectral, Field, TorusDomain};
use crate::error::{Error, Result};
use crate::fft;
use crate::potentials::Potential;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualTolerances {
    pub strong_l2: f64,
    pub strong_sup: f64,
    pub weak: f64,
    pub trace: f64,
}

impl Default for ResidualTolerances {
    fn default() -> Self {
        Self {
            strong_l2: 1e-6,
            strong_sup: 1e-6,
            weak: 1e-6,
            trace: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub scheme: Scheme,
    /// Test-mode cutoff; `None` means `min_α Nᵅ/4`.
    pub max_mode: Option<usize>,
    pub oversample: usize,
    pub tolerances: ResidualTolerances,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::Spectral,
            max_mode: None,
            oversample: 4,
            tolerances: ResidualTolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    pub strong_l2: f64,
    pub strong_sup: f64,
    pub weak_max: f64,
    pub trace_mismatch: f64,
    pub passes: bool,
}

/// `r = Δu − ∇F(t, u)` at every node, with its L² and sup norms.
#[derive(Debug, Clone)]
pub struct StrongResidual {
    pub residual: Field,
    pub l2: f64,
    pub sup: f64,
}

pub fn default_max_mode(domain: &TorusDomain) -> usize {
    domain.grid_sizes().iter().map(|&s| s / 4).min().unwrap_or(1)
}

pub fn strong_residual(field: &Field, potential: &dyn Potential, scheme: Scheme) -> Result<StrongResidual> {
    let domain = field.domain();
    let n = domain.n();
    let mut r = laplacian(field, scheme);
    let mut t = vec![0.0; domain.p()];
    let mut g = vec![0.0; n];
    let values = r.values_mut();
    for (k, u) in field.points().enumerate() {
        domain.node_into(k, &mut t);
        potential.gradient(&t, u, &mut g);
        for (i, gi) in g.iter().enumerate() {
            values[k * n + i] -= gi;
        }
    }
    if let Some((point, component)) = r.first_non_finite() {
        return Err(Error::NonFinite {
            what: "strong residual",
            point,
            component,
        });
    }
    Ok(StrongResidual {
        l2: l2_norm(&r),
        sup: r.sup_norm(),
        residual: r,
    })
}

/// Largest `|∫ Σ_α (∂_α u, ∂_α v) + (∇F(t, u), v)| / ‖v‖_{H¹}` over the
/// test family of [`crate::calculus::test_modes`].
pub fn weak_residual(
    field: &Field,
    potential: &dyn Potential,
    max_mode: usize,
    scheme: Scheme,
) -> Result<f64> {
    let domain = field.domain();
    check_max_mode(domain, max_mode)?;
    let n = domain.n();
    let du = partial_derivatives(field, scheme);
    let mut grad_f = vec![0.0; field.values().len()];
    let mut t = vec![0.0; domain.p()];
    for (k, u) in field.points().enumerate() {
        domain.node_into(k, &mut t);
        potential.gradient(&t, u, &mut grad_f[k * n..(k + 1) * n]);
    }
    let w = domain.weight();
    let mut worst = 0.0_f64;
    for mode in test_modes(domain, max_mode) {
        let (f, df) = mode.tables(domain);
        let i = mode.component;
        let mut acc = 0.0;
        for k in 0..domain.point_count() {
            acc += du.get(k, i, mode.axis) * df[k] + grad_f[k * n + i] * f[k];
        }
        let pairing = (acc * w).abs() / mode.h1_norm(domain);
        if !pairing.is_finite() {
            return Err(Error::NonFinite {
                what: "weak residual",
                point: 0,
                component: i,
            });
        }
        worst = worst.max(pairing);
    }
    Ok(worst)
}

/// Periodic-trace mismatch of the grid data. Two estimates are combined:
///
/// * the trigonometric interpolants of `u` and `hᵅ∂_αu` compared on opposite
///   faces at `oversample^{p−1}` off-grid points each (a roundoff identity
///   for any grid data, kept as a self-check of the interpolation);
/// * a spectral jump estimate along every grid line, which recovers the
///   jump `u(Tᵅ⁻) − u(0⁺)` of data sampled from a non-periodic function
///   (exactly `Tᵅ` for `u = tᵅ`) and vanishes for data band-limited below
///   `Nᵅ/4`. The same estimate on forward differences measures jumps of
///   `hᵅ∂_αu`.
pub fn periodicity_check(field: &Field, oversample: usize) -> Result<f64> {
    if oversample < 2 {
        return Err(Error::InvalidParameter("oversample must be at least 2".into()));
    }
    let face = face_trace_mismatch(field, oversample);
    let jumps = line_jump_estimate(field);
    Ok(face.max(jumps))
}

fn face_trace_mismatch(field: &Field, oversample: usize) -> f64 {
    let domain = field.domain();
    let p = domain.p();
    let n = domain.n();
    let coeffs = to_spectral(field);
    let k = domain.wavenumber_tables();
    let freqs: Vec<Vec<f64>> = (0..p)
        .map(|a| {
            (0..domain.grid_sizes()[a])
                .map(|s| domain.frequency(a, s) as f64)
                .collect()
        })
        .collect();
    let mut idx = vec![0; p];
    // e^{2πi m·t/T} at point t for every coefficient slot
    let eval = |t: &[f64], idx: &mut [usize], out: &mut Vec<f64>| {
        out.clear();
        out.resize(n * (p + 1), 0.0);
        for flat in 0..domain.point_count() {
            domain.multi_index_into(flat, idx);
            let phase: f64 = (0..p)
                .map(|a| 2.0 * PI * freqs[a][idx[a]] * t[a] / domain.periods()[a])
                .sum();
            let e = Complex64::from_polar(1.0, phase);
            for i in 0..n {
                let c = coeffs.component(i)[flat] * e;
                out[i * (p + 1)] += c.re;
                for a in 0..p {
                    let d = c * Complex64::new(0.0, k[a][idx[a]] * domain.spacing(a));
                    out[i * (p + 1) + 1 + a] += d.re;
                }
            }
        }
    };
    let mut worst = 0.0_f64;
    let (mut lo, mut hi) = (Vec::new(), Vec::new());
    let face_points = oversample.pow((p - 1) as u32);
    for axis in 0..p {
        for j in 0..face_points {
            let mut rest = j;
            let mut t = vec![0.0; p];
            for (b, tb) in t.iter_mut().enumerate() {
                if b == axis {
                    continue;
                }
                let q = rest % oversample;
                rest /= oversample;
                *tb = (q as f64 + 0.5) / oversample as f64 * domain.periods()[b];
            }
            t[axis] = 0.0;
            eval(&t, &mut idx, &mut lo);
            t[axis] = domain.periods()[axis];
            eval(&t, &mut idx, &mut hi);
            for (a, b) in lo.iter().zip(&hi) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    worst
}

fn line_jump_estimate(field: &Field) -> f64 {
    let domain = field.domain();
    let n = domain.n();
    let mut worst = 0.0_f64;
    for axis in 0..domain.p() {
        let size = domain.grid_sizes()[axis];
        let stride = domain.stride(axis);
        // sin²-tapered band N/4 ≤ |m| ≤ N/2: (slot, σ, N(1 − e^{−iθ}), cos θ)
        let band: Vec<(usize, f64, Complex64, f64)> = (0..size)
            .filter_map(|slot| {
                let m = domain.frequency(axis, slot);
                let eta = m.unsigned_abs() as f64 / (size / 2) as f64;
                if eta < 0.5 {
                    return None;
                }
                let sigma = (PI * (2.0 * eta - 1.0)).sin().powi(2);
                let theta = 2.0 * PI * m as f64 / size as f64;
                let kern = size as f64 * (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -theta));
                Some((slot, sigma, kern, theta.cos()))
            })
            .collect();
        let sigma_sum: f64 = band.iter().map(|b| b.1).sum();
        // a value jump J leaves a spike J·δ_{N−1} in forward differences
        let spike: f64 = band.iter().map(|b| b.1 * (b.3 - 1.0)).sum::<f64>() / sigma_sum;
        let estimate = |data: &[Complex64]| {
            band.iter()
                .map(|(slot, sigma, kern, _)| sigma * (kern * data[*slot]).re)
                .sum::<f64>()
                / (size as f64 * sigma_sum)
        };
        let mut line = vec![Complex64::default(); size];
        let mut diff = vec![Complex64::default(); size];
        for base in 0..domain.point_count() {
            if domain.axis_index(base, axis) != 0 {
                continue;
            }
            for i in 0..n {
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = Complex64::new(field.values()[(base + j * stride) * n + i], 0.0);
                }
                for j in 0..size {
                    diff[j] = line[(j + 1) % size] - line[j];
                }
                fft::forward_line(&mut line);
                fft::forward_line(&mut diff);
                let value_jump = estimate(&line);
                let slope_jump = estimate(&diff) - value_jump * spike;
                worst = worst.max(value_jump.abs()).max(slope_jump.abs());
            }
        }
    }
    worst
}

/// Strong, weak and trace metrics judged against `opts.tolerances`.
pub fn residual_report(
    field: &Field,
    potential: &dyn Potential,
    opts: &VerifyOptions,
) -> Result<ResidualReport> {
    let strong = strong_residual(field, potential, opts.scheme)?;
    let max_mode = opts.max_mode.unwrap_or_else(|| default_max_mode(field.domain()));
    let weak_max = weak_residual(field, potential, max_mode, opts.scheme)?;
    let trace_mismatch = periodicity_check(field, opts.oversample)?;
    let tol = &opts.tolerances;
    Ok(ResidualReport {
        strong_l2: strong.l2,
        strong_sup: strong.sup,
        weak_max,
        trace_mismatch,
        passes: strong.l2 <= tol.strong_l2
            && strong.sup <= tol.strong_sup
            && weak_max <= tol.weak
            && trace_mismatch <= tol.trace,
    })
}
