//! Euler–Lagrange residual, first integral and constant-curvature solutions
//! of `Θ_μ(γ) = ∫ κ e^{μ/κ} ds`.

use serde::{Deserialize, Serialize};

use crate::curve::{interior_mask, CurveSamples, ENDPOINT_EXCLUSION};
use crate::error::{GeomError, Result};
use crate::phase_plane::{singular_points, Branch, PointKind};
use crate::types::PhasePoint;
use crate::types::ModelParams;

/// `F(x, y) = y² log²x + μ²x² + ρ(1 − log x)²x²`.
pub fn first_integral(p: PhasePoint, params: &ModelParams) -> f64 {
    first_integral_xy(p.x, p.y, params.rho, params.mu)
}

/// [`first_integral`] without the phase-point validation; defined at `x = 1`.
pub fn first_integral_xy(x: f64, y: f64, rho: f64, mu: f64) -> f64 {
    let l = x.ln();
    let one_l = 1.0 - l;
    y * y * l * l + mu * mu * x * x + rho * one_l * one_l * x * x
}

/// `κ_s² = (κ⁴/μ⁴)(dκ²e^{−2μ/κ} − μ²κ² − ρ(κ − μ)²)` along an orbit with
/// constant `d`. Negative outside the curvature range of the orbit.
pub fn kappa_s_squared(kappa: f64, params: &ModelParams) -> f64 {
    let ModelParams { rho, mu, d, .. } = *params;
    let k2 = kappa * kappa;
    (k2 * k2 / mu.powi(4)) * (d * k2 * (-2.0 * mu / kappa).exp() - mu * mu * k2 - rho * (kappa - mu).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstantKind {
    Parallel,
    Circle,
    Hypercycle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantCurvatureSolution {
    pub kappa0: f64,
    pub kind: ConstantKind,
    pub sign_branch: Branch,
}

impl ConstantCurvatureSolution {
    /// `κ₀² − ρ(κ₀/μ − 1)`.
    pub fn residual(&self, rho: f64, mu: f64) -> f64 {
        self.kappa0 * self.kappa0 - rho * (self.kappa0 / mu.abs() - 1.0)
    }
}

/// Geodesic curvatures `κ₀` of the constant-curvature critical curves, one
/// per singular point of the phase plane (`κ₀ = μ / log x±`).
pub fn constant_curvature_solutions(rho: f64, mu: f64) -> Vec<ConstantCurvatureSolution> {
    let pts = singular_points(rho, mu);
    let single = pts.len() == 1;
    pts.iter()
        .map(|p| {
            let kappa0 = mu.abs() / p.log_x;
            let kind = if rho < 0.0 {
                if kappa0 * kappa0 < -rho {
                    ConstantKind::Hypercycle
                } else {
                    ConstantKind::Circle
                }
            } else if single || p.kind == PointKind::Degenerate {
                ConstantKind::Circle
            } else {
                ConstantKind::Parallel
            };
            ConstantCurvatureSolution {
                kappa0,
                kind,
                sign_branch: p.branch,
            }
        })
        .collect()
}

/// Controls for [`el_residual_with`].
#[derive(Debug, Clone, Copy)]
pub struct ResidualOptions {
    /// Finite-difference stencil width in the sample index.
    pub width: usize,
    /// Samples with `|x − 1| <` this are skipped.
    pub peak_exclusion: f64,
    /// Samples with `x <` this (near the open endpoint, where `x(s)` is only
    /// C¹) are skipped.
    pub endpoint_exclusion: f64,
    /// Samples at the ends of each smooth segment that are skipped.
    pub edge: usize,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        Self {
            width: 9,
            peak_exclusion: 5e-2,
            endpoint_exclusion: ENDPOINT_EXCLUSION,
            edge: 2,
        }
    }
}

/// `max |h'' + (ρ(1 − μ/κ) − μκ)e^{μ/κ}|` with `h = (1 − μ/κ)e^{μ/κ}`.
pub fn el_residual(samples: &CurveSamples, params: &ModelParams) -> Result<f64> {
    el_residual_with(samples, params, ResidualOptions::default())
}

pub fn el_residual_with(samples: &CurveSamples, params: &ModelParams, opts: ResidualOptions) -> Result<f64> {
    if samples.len() < 5 {
        return Err(GeomError::TooFewSamples {
            needed: 5,
            got: samples.len(),
        });
    }
    if let Some(i) = samples.s.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(GeomError::NonMonotone { index: i + 1 });
    }
    let ModelParams { rho, mu, .. } = *params;
    let mut h: Vec<f64> = samples.kappa.iter().map(|&k| h_minus_one(k, mu)).collect();
    // Differencing is exact on constants only after removing the offset.
    let mean = h.iter().sum::<f64>() / h.len() as f64;
    h.iter_mut().for_each(|v| *v -= mean);
    let (_, h2) = samples.s_derivatives(&h, opts.width)?;
    let mask = interior_mask(samples, opts.peak_exclusion, opts.edge);
    let mut worst = 0.0f64;
    for i in 0..samples.len() {
        if !mask[i] || samples.x[i] < opts.endpoint_exclusion {
            continue;
        }
        let k = samples.kappa[i];
        let r = h2[i] + (rho * (1.0 - mu / k) - mu * k) * (mu / k).exp();
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// `h − 1 = (1 − L)e^L − 1` with `L = μ/κ`, accurate as `L → 0`.
pub fn h_minus_one(kappa: f64, mu: f64) -> f64 {
    let l = mu / kappa;
    (1.0 - l) * l.exp_m1() - l
}

/// `∫ κ e^{μ/κ} ds` over the curve. Reversing the orientation (`μ → −μ`,
/// `κ → −κ`) negates the integrand.
///
/// The integral is taken in the sample index as `∫ f·(ds/di) di` by the
/// trapezoidal rule: on the builder's grids `f·ds/di` stays bounded and
/// smooth at peaks, where `f` itself blows up. The half cells between the
/// samples and an excluded peak or open end are added by linear
/// extrapolation. On a grid uniform in `s` this is the plain trapezoidal
/// rule in `s`.
pub fn energy_theta(samples: &CurveSamples, mu: f64) -> Result<f64> {
    if let Some(i) = samples.kappa.iter().position(|k| *k == 0.0 || !k.is_finite()) {
        return Err(GeomError::DegenerateCurvature {
            index: i,
            s: samples.s[i],
            reason: "zero or infinite curvature".into(),
        });
    }
    let n = samples.len();
    if n < 5 {
        return Err(GeomError::TooFewSamples { needed: 5, got: n });
    }
    let speed = samples.index_speed(5)?;
    let g: Vec<f64> = samples
        .kappa
        .iter()
        .zip(&speed)
        .map(|(&k, v)| k * (mu / k).exp() * v)
        .collect();
    // ∫ over the half cell beyond sample `i`, away from its neighbour `j`.
    let half = |i: usize, j: usize| 0.5 * (1.25 * g[i] - 0.25 * g[j]);
    let mut total = 0.0;
    for (a, b) in samples.segments() {
        total += g[a..b].windows(2).map(|w| 0.5 * (w[0] + w[1])).sum::<f64>();
        if a > 0 || samples.open_ends[0] {
            total += half(a, a + 1);
        }
        if b < n || samples.open_ends[1] {
            total += half(b - 1, b - 2);
        }
    }
    Ok(total)
}
