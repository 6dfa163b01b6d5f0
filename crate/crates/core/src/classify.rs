//! Shape taxonomy of the critical curves, closed-curve condition for the
//! braid component and crossings with the symmetry geodesic `β`.

use std::f64::consts::{E, PI};

use serde::Serialize;

use crate::curve::{
    build_curve, half_orbit_integrals, psi_limit_at_zero, psi_of_x, solve_d_star, Component, CurveSamples,
};
use crate::error::{GeomError, Result};
use crate::numerics::ode::{self, OdeOptions};
use crate::phase_plane::{
    braid_window, orbit_x_intersections, singular_level, singular_points, trace_orbit, vector_field_q, Branch,
    PointKind, StopReason, TraceOptions,
};
use crate::types::{metric_dot, ModelParams, PhasePoint};

pub const SCHEMA_VERSION: u32 = 1;

/// Relative band around `d_*` (and around `μ²e²`) reported as equality.
pub const THRESHOLD_BAND: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeLabel {
    Arch,
    Fishtail,
    Deltoid,
    BridgeHigh,
    BridgeAxis,
    BridgeLow,
    AntiArch,
    AntiFishtail,
    AntiDeltoid,
    AntiBridge,
    Cross,
    Braid,
    Hypercycle,
    Anchor,
}

impl ShapeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ShapeLabel::Arch => "arch",
            ShapeLabel::Fishtail => "fishtail",
            ShapeLabel::Deltoid => "deltoid",
            ShapeLabel::BridgeHigh => "bridge_high",
            ShapeLabel::BridgeAxis => "bridge_axis",
            ShapeLabel::BridgeLow => "bridge_low",
            ShapeLabel::AntiArch => "anti_arch",
            ShapeLabel::AntiFishtail => "anti_fishtail",
            ShapeLabel::AntiDeltoid => "anti_deltoid",
            ShapeLabel::AntiBridge => "anti_bridge",
            ShapeLabel::Cross => "cross",
            ShapeLabel::Braid => "braid",
            ShapeLabel::Hypercycle => "hypercycle",
            ShapeLabel::Anchor => "anchor",
        }
    }

    pub fn is_bridge(self) -> bool {
        matches!(self, ShapeLabel::BridgeHigh | ShapeLabel::BridgeAxis | ShapeLabel::BridgeLow)
    }
}

impl std::fmt::Display for ShapeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Turning point of the component on the `x`-axis.
    pub x0: Option<f64>,
    /// `A = ω·lim_{x→0} ψ`, with `ω = √(|ρ|d)` (`√d` for `ρ = 0`).
    pub endpoint_azimuth: Option<f64>,
    /// `ω·ψ` at the peak `x = 1`.
    pub peak_azimuth: Option<f64>,
    /// Regular crossings with `β` of the built curve.
    pub beta_crossings: Option<usize>,
    /// Self-intersections on the symmetry axis of the built curve.
    pub self_intersections: Option<usize>,
    /// Crossing angle with `β` for Euclidean bridges below the axis.
    pub theta_d: Option<f64>,
    pub braid_window: Option<(f64, f64)>,
    /// The input had `μ < 0` and was classified with the orientation reversed.
    pub orientation_flipped: bool,
    /// The label comes from the measured-feature lookup rather than from
    /// closed thresholds in `d`.
    pub feature_based: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeClass {
    pub label: ShapeLabel,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentClass {
    pub component: Component,
    pub label: ShapeLabel,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Copy)]
pub struct ClassifyOptions {
    /// Build each component and measure crossings and self-intersections.
    pub geometry: bool,
    /// Samples per half-curve for the geometric diagnostics.
    pub n: usize,
    /// Angular tolerance of the feature rules (radians).
    pub angle_tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            geometry: false,
            n: 400,
            angle_tol: 1e-3,
        }
    }
}

fn omega(p: &ModelParams) -> f64 {
    if p.rho == 0.0 {
        p.d.sqrt()
    } else {
        (p.rho.abs() * p.d).sqrt()
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b) / b
}

fn saddle(rho: f64, mu: f64) -> Option<f64> {
    singular_points(rho, mu)
        .into_iter()
        .find(|p| p.branch == Branch::Minus && p.kind == PointKind::Saddle)
        .map(|p| singular_level(rho, &p))
}

/// Bridge subcase from the turning point against `x = e`, i.e. `d` against
/// `F(e, 0) = μ²e²`.
fn bridge_subcase(p: &ModelParams) -> ShapeLabel {
    let gap = relative_gap(p.d, p.mu * p.mu * E * E);
    if gap.abs() < THRESHOLD_BAND {
        ShapeLabel::BridgeAxis
    } else if gap < 0.0 {
        ShapeLabel::BridgeHigh
    } else {
        ShapeLabel::BridgeLow
    }
}

/// Fishtail/deltoid/bridge for a peaked curve with endpoint azimuth `a`.
/// `d_star` is consulted only when `a` is small enough for the equality band
/// to matter.
fn lilienthal_peaked(p: &ModelParams, a: f64, d_star: impl FnOnce() -> Option<f64>, angle_tol: f64) -> ShapeLabel {
    if a.abs() < 0.05 {
        match d_star() {
            Some(ds) if relative_gap(p.d, ds).abs() < THRESHOLD_BAND => return ShapeLabel::Deltoid,
            Some(_) => {}
            None if a.abs() < angle_tol => return ShapeLabel::Deltoid,
            None => {}
        }
    }
    if a < 0.0 {
        ShapeLabel::Fishtail
    } else {
        bridge_subcase(p)
    }
}

/// Labels of every component of the level set `F = d`.
pub fn classify(params: &ModelParams) -> Result<Vec<ComponentClass>> {
    classify_with(params, ClassifyOptions::default())
}

pub fn classify_with(params: &ModelParams, opts: ClassifyOptions) -> Result<Vec<ComponentClass>> {
    let p = *params;
    let ModelParams { rho, mu, d, .. } = p;
    let base = Diagnostics {
        orientation_flipped: p.flipped,
        ..Diagnostics::default()
    };
    let mut out = Vec::new();

    if rho < 0.0 && d <= 0.0 {
        return Err(GeomError::Regime(format!(
            "only orbits with d > 0 are classified for rho < 0 (got d = {d})"
        )));
    }
    if rho < 0.0 {
        let level = saddle(rho, mu).ok_or_else(|| GeomError::Regime("no saddle for rho < 0".into()))?;
        if d > level {
            out.push(ComponentClass {
                component: Component::Inner,
                label: ShapeLabel::Anchor,
                diagnostics: base,
            });
            return finish(&p, out, opts);
        }
    }

    let topo = orbit_x_intersections(&p)?;
    let x0 = topo.roots[0];
    let mut diag = base.clone();
    diag.x0 = Some(x0);
    let w = omega(&p);
    let a = w * psi_limit_at_zero(&p)?;
    diag.endpoint_azimuth = Some(a);

    let arch = d <= rho + mu * mu;
    let label = if arch {
        ShapeLabel::Arch
    } else if rho == 0.0 {
        let dn = d / (mu * mu);
        let deltoid = E * E / 4.0;
        if relative_gap(dn, deltoid).abs() < THRESHOLD_BAND {
            ShapeLabel::Deltoid
        } else if dn < deltoid {
            ShapeLabel::Fishtail
        } else {
            bridge_subcase(&p)
        }
    } else if rho < 0.0 || braid_window(rho, mu).is_none() {
        lilienthal_peaked(&p, a, || solve_d_star(rho, mu).ok(), opts.angle_tol)
    } else {
        let peak = w * psi_of_x(1.0, &p, x0)?;
        diag.peak_azimuth = Some(peak);
        diag.feature_based = true;
        feature_label(&p, a, peak, opts.angle_tol)
    };
    if rho == 0.0 && label == ShapeLabel::BridgeLow {
        diag.theta_d = Some(theta_d(d / (mu * mu)));
    }
    out.push(ComponentClass {
        component: Component::Inner,
        label,
        diagnostics: diag,
    });

    if topo.has_braid_component {
        let mut diag = base.clone();
        diag.x0 = Some(topo.roots[2]);
        diag.braid_window = braid_window(rho, mu);
        out.push(ComponentClass {
            component: Component::Braid,
            label: ShapeLabel::Braid,
            diagnostics: diag,
        });
    }
    if rho < 0.0 && topo.roots.len() >= 2 {
        let mut diag = base;
        diag.x0 = Some(topo.roots[1]);
        out.push(ComponentClass {
            component: Component::Outer,
            label: ShapeLabel::Hypercycle,
            diagnostics: diag,
        });
    }
    if let Some(win) = braid_window(rho, mu) {
        out[0].diagnostics.braid_window = Some(win);
    }
    finish(&p, out, opts)
}

/// Feature lookup for `ρ > 4μ²`, from the azimuth `peak` reached at the
/// peak and the endpoint azimuth `a`.
fn feature_label(p: &ModelParams, a: f64, peak: f64, tol: f64) -> ShapeLabel {
    if (peak - PI).abs() < tol {
        ShapeLabel::AntiArch
    } else if peak > PI {
        if (a - PI).abs() < tol {
            ShapeLabel::AntiDeltoid
        } else if a > 0.0 && a < PI {
            ShapeLabel::AntiFishtail
        } else {
            ShapeLabel::Cross
        }
    } else if peak > PI / 2.0 && a > 0.0 {
        ShapeLabel::AntiBridge
    } else {
        lilienthal_peaked(p, a, || None, tol)
    }
}

fn finish(p: &ModelParams, mut out: Vec<ComponentClass>, opts: ClassifyOptions) -> Result<Vec<ComponentClass>> {
    if opts.geometry {
        for c in &mut out {
            let samples = build_curve(p, c.component, opts.n)?;
            c.diagnostics.beta_crossings = Some(beta_crossings(&samples)?.iter().filter(|b| b.regular).count());
            c.diagnostics.self_intersections = Some(axis_self_intersections(&samples));
        }
    }
    Ok(out)
}

/// `θ_d = arccos(−e/√d)` for the normalized Euclidean parameter `d > e²`.
pub fn theta_d(d_normalized: f64) -> f64 {
    (-E / d_normalized.sqrt()).acos()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// `ρ + μ²`: arch for `d` at or below.
    pub arch_bound: f64,
    pub d_star: Option<f64>,
    /// `μ²e²`: the turning point is on `β`.
    pub bridge_axis_bound: f64,
    pub braid_window: Option<(f64, f64)>,
    /// `F(x₋, 0)` for `ρ < 0`: anchor above.
    pub anchor_bound: Option<f64>,
}

pub fn thresholds(rho: f64, mu: f64) -> Thresholds {
    let mu = mu.abs();
    let d_star = if rho == 0.0 {
        Some(mu * mu * E * E / 4.0)
    } else if rho < 0.0 || braid_window(rho, mu).is_none() {
        solve_d_star(rho, mu).ok()
    } else {
        None
    };
    Thresholds {
        arch_bound: rho + mu * mu,
        d_star,
        bridge_axis_bound: mu * mu * E * E,
        braid_window: braid_window(rho, mu),
        anchor_bound: if rho < 0.0 { saddle(rho, mu) } else { None },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub schema_version: u32,
    pub rho: f64,
    pub mu: f64,
    pub d: f64,
    pub components: Vec<ComponentClass>,
    pub thresholds: Thresholds,
}

pub fn classification_report(params: &ModelParams, opts: ClassifyOptions) -> Result<ClassificationReport> {
    Ok(ClassificationReport {
        schema_version: SCHEMA_VERSION,
        rho: params.rho,
        mu: params.signed_mu(),
        d: params.d,
        components: classify_with(params, opts)?,
        thresholds: thresholds(params.rho, params.mu),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedCurveReport {
    /// `I(d)/(2π)`.
    pub ratio: Option<f64>,
    /// Period of the curvature.
    pub period: Option<f64>,
    /// `(p, q)` with `|ratio − p/q| < tol`, smallest `q` first.
    pub rational: Option<(i64, u64)>,
    pub reason: Option<String>,
}

impl ClosedCurveReport {
    fn absent(reason: impl Into<String>) -> Self {
        Self {
            ratio: None,
            period: None,
            rational: None,
            reason: Some(reason.into()),
        }
    }
}

fn braid_roots(p: &ModelParams) -> Result<(f64, f64)> {
    let Some((lo, hi)) = braid_window(p.rho, p.mu) else {
        return Err(GeomError::Regime(format!(
            "no closed phase orbits unless rho > 4 mu^2 (rho = {}, mu = {})",
            p.rho, p.mu
        )));
    };
    if relative_gap(p.d, hi).abs() < 1e-9 {
        return Err(GeomError::NonConvergence(format!(
            "d = {} is the saddle level: the orbit is homoclinic and the period diverges",
            p.d
        )));
    }
    if !(p.d > lo && p.d < hi) {
        return Err(GeomError::Regime(format!(
            "d = {} is outside the braid window ({lo}, {hi})",
            p.d
        )));
    }
    let topo = orbit_x_intersections(p)?;
    if !topo.has_braid_component {
        return Err(GeomError::Regime(format!("no closed orbit for d = {}", p.d)));
    }
    Ok((topo.roots[1], topo.roots[2]))
}

/// Period of the curvature along the braid component, `2∫|log x|/√R dx`
/// between the two roots enclosing the center.
pub fn curvature_period(params: &ModelParams) -> Result<f64> {
    let (a, b) = braid_roots(params)?;
    Ok(2.0 * half_orbit_integrals(params, a, b)?.0)
}

/// `I(d)`: the azimuth `ω·Δψ` gained over one period of the curvature.
pub fn closed_orbit_azimuth(params: &ModelParams) -> Result<f64> {
    let (a, b) = braid_roots(params)?;
    Ok(2.0 * omega(params) * half_orbit_integrals(params, a, b)?.1.abs())
}

/// Period and `I(d)` by integrating the phase system together with
/// `ψ' = μx/D` over one loop of the closed orbit.
pub fn closed_orbit_by_tracing(params: &ModelParams) -> Result<(f64, f64)> {
    let (a, _) = braid_roots(params)?;
    let start = PhasePoint { x: a, y: 0.0 };
    let opts = TraceOptions {
        stop_after_period: true,
        ..TraceOptions::default()
    };
    let tr = trace_orbit(start, params, 1e4, opts)?;
    if tr.stop != StopReason::Period {
        return Err(GeomError::NonConvergence("closed orbit did not return".into()));
    }
    let period = tr.period.expect("period seen");
    let ModelParams { rho, mu, d, .. } = *params;
    let rhs = |_: f64, v: &[f64; 3]| {
        let (fx, fy) = vector_field_q(PhasePoint { x: v[0], y: v[1] }, params).ok()?;
        let u = (1.0 - v[0].ln()) * v[0];
        Some([fx, fy, mu * v[0] / (d - rho * u * u)])
    };
    let ode_opts = OdeOptions {
        rtol: 1e-12,
        atol: 1e-13,
        h_init: 1e-4,
        h_max: period / 50.0,
        ..OdeOptions::default()
    };
    let out = ode::solve(rhs, 0.0, [a, 0.0, 0.0], period, ode_opts, |_, _| true, &[])?;
    let psi = out.y.last().expect("non-empty")[2];
    Ok((period, omega(params) * psi))
}

/// Whether the braid curve closes up: `I(d)/(2π)` is rational with
/// denominator at most `q_max`, within `tol`.
pub fn closed_curve_check(params: &ModelParams, q_max: u64, tol: f64) -> Result<ClosedCurveReport> {
    if params.rho <= 0.0 {
        return Ok(ClosedCurveReport::absent(
            "no closed critical curves in the Euclidean or hyperbolic plane",
        ));
    }
    let (period, azimuth) = match (curvature_period(params), closed_orbit_azimuth(params)) {
        (Ok(t), Ok(i)) => (t, i),
        (Err(e), _) | (_, Err(e)) => return Ok(ClosedCurveReport::absent(e.to_string())),
    };
    let ratio = azimuth / (2.0 * PI);
    let rational = (1..=q_max.max(1)).find_map(|q| {
        let pn = (ratio * q as f64).round();
        ((ratio - pn / q as f64).abs() < tol).then_some((pn as i64, q))
    });
    Ok(ClosedCurveReport {
        ratio: Some(ratio),
        period: Some(period),
        rational,
        reason: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaCrossing {
    pub s: f64,
    pub x: f64,
    /// Angle between the tangent (increasing `s`) and `β` oriented by
    /// decreasing `ψ`.
    pub angle: f64,
    /// `false` for the limit at an open endpoint `x → 0`.
    pub regular: bool,
}

fn beta_direction(p: &[f64], rho: f64) -> Vec<f64> {
    if rho == 0.0 {
        vec![0.0, -1.0, 0.0]
    } else if rho > 0.0 {
        vec![0.0, -p[2], p[1]]
    } else {
        vec![0.0, -p[2], -p[1]]
    }
}

fn angle_to_beta(t: &[f64], p: &[f64], rho: f64) -> Result<f64> {
    let b = beta_direction(p, rho);
    let nb = metric_dot(&b, &b, rho)?.sqrt();
    let nt = metric_dot(t, t, rho)?.sqrt();
    Ok((metric_dot(t, &b, rho)? / (nb * nt)).clamp(-1.0, 1.0).acos())
}

/// Crossings of the curve with `β` (sign changes of the first coordinate)
/// and the limits at open endpoints.
pub fn beta_crossings(samples: &CurveSamples) -> Result<Vec<BetaCrossing>> {
    let rho = samples.params.rho;
    let n = samples.len();
    let tangents = samples.tangents(5)?;
    let mut out = Vec::new();
    let push_end = |i: usize, out: &mut Vec<BetaCrossing>| -> Result<()> {
        out.push(BetaCrossing {
            s: samples.s[i],
            x: samples.x[i],
            angle: angle_to_beta(&tangents[i], samples.points[i].as_slice(), rho)?,
            regular: false,
        });
        Ok(())
    };
    if samples.open_ends[0] {
        push_end(0, &mut out)?;
    }
    for i in 0..n.saturating_sub(1) {
        let (a, b) = (samples.u[i], samples.u[i + 1]);
        if a == 0.0 || a.signum() == b.signum() {
            continue;
        }
        let f = a / (a - b);
        let lerp = |p: f64, q: f64| p + f * (q - p);
        let t: Vec<f64> = tangents[i].iter().zip(&tangents[i + 1]).map(|(p, q)| lerp(*p, *q)).collect();
        let pt: Vec<f64> = (0..samples.points[i].dim)
            .map(|c| lerp(samples.points[i].coords[c], samples.points[i + 1].coords[c]))
            .collect();
        out.push(BetaCrossing {
            s: lerp(samples.s[i], samples.s[i + 1]),
            x: lerp(samples.x[i], samples.x[i + 1]),
            angle: angle_to_beta(&t, &pt, rho)?,
            regular: true,
        });
    }
    if samples.open_ends[1] {
        push_end(n - 1, &mut out)?;
    }
    Ok(out)
}

/// Points where the curve meets its mirror image away from the turning
/// point: sign changes of the mirror-odd coordinate on the second half.
pub fn axis_self_intersections(samples: &CurveSamples) -> usize {
    let start = samples.turning_index.unwrap_or(0);
    let c: Vec<f64> = samples.points[start..].iter().map(|p| p.coords[1]).collect();
    let n = c.len();
    (1..n.saturating_sub(1))
        .filter(|&i| i + 1 < n && c[i] != 0.0 && c[i].signum() != c[i + 1].signum() && c[i + 1] != 0.0)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(rho: f64, mu: f64, d: f64) -> ModelParams {
        ModelParams::new(rho, mu, d).unwrap()
    }

    fn labels(rho: f64, mu: f64, d: f64) -> Vec<(Component, ShapeLabel)> {
        classify(&params(rho, mu, d))
            .unwrap()
            .into_iter()
            .map(|c| (c.component, c.label))
            .collect()
    }

    #[test]
    fn bridge_subcases_split_at_e_squared() {
        let e2 = E * E;
        assert_eq!(bridge_subcase(&params(0.0, 1.0, e2 * 0.99)), ShapeLabel::BridgeHigh);
        assert_eq!(bridge_subcase(&params(0.0, 1.0, e2 * (1.0 + 1e-6))), ShapeLabel::BridgeAxis);
        assert_eq!(bridge_subcase(&params(0.0, 1.0, e2 * 1.01)), ShapeLabel::BridgeLow);
        assert_eq!(bridge_subcase(&params(0.0, 2.0, 4.0 * e2 * 1.01)), ShapeLabel::BridgeLow);
    }

    #[test]
    fn feature_lookup() {
        let p = params(1.0, 0.45, 1.3);
        assert_eq!(feature_label(&p, 3.0, PI + 5e-4, 1e-3), ShapeLabel::AntiArch);
        assert_eq!(feature_label(&p, PI - 5e-4, 3.5, 1e-3), ShapeLabel::AntiDeltoid);
        assert_eq!(feature_label(&p, 3.0, 3.5, 1e-3), ShapeLabel::AntiFishtail);
        assert_eq!(feature_label(&p, 3.5, 4.0, 1e-3), ShapeLabel::Cross);
        assert_eq!(feature_label(&p, 2.5, 2.8, 1e-3), ShapeLabel::AntiBridge);
        assert_eq!(feature_label(&p, -0.3, 0.1, 1e-3), ShapeLabel::Fishtail);
        assert_eq!(feature_label(&p, 5e-4, 0.4, 1e-3), ShapeLabel::Deltoid);
    }

    #[test]
    fn labelled_examples() {
        assert_eq!(labels(0.0, 1.0, 1.55), vec![(Component::Inner, ShapeLabel::Fishtail)]);
        assert_eq!(labels(0.0, 1.0, 9.0), vec![(Component::Inner, ShapeLabel::BridgeLow)]);
        assert_eq!(labels(1.0, 1.0, 1.3), vec![(Component::Inner, ShapeLabel::Arch)]);
        assert!(labels(1.0, 0.45, 1.23).contains(&(Component::Braid, ShapeLabel::Braid)));
        assert!(labels(-1.0, 1.25, 20.0).contains(&(Component::Outer, ShapeLabel::Hypercycle)));
        assert_eq!(labels(-1.0, 1.25, 36.0), vec![(Component::Inner, ShapeLabel::Anchor)]);
    }

    #[test]
    fn theta_d_at_nine() {
        let c = classify(&params(0.0, 1.0, 9.0)).unwrap();
        let t = c[0].diagnostics.theta_d.unwrap();
        assert!((t - (-E / 3.0).acos()).abs() < 1e-15);
        assert!((t - 2.7047546).abs() < 1e-6);
    }

    #[test]
    fn regime_errors() {
        assert!(matches!(
            classify(&params(-1.0, 1.0, -0.5)),
            Err(GeomError::Regime(_))
        ));
        assert!(matches!(curvature_period(&params(0.0, 1.0, 2.0)), Err(GeomError::Regime(_))));
        assert!(matches!(curvature_period(&params(1.0, 0.45, 1.4)), Err(GeomError::Regime(_))));
    }

    #[test]
    fn closed_check_absent_without_positive_curvature() {
        for (rho, mu, d) in [(0.0, 1.0, 2.0), (0.0, 0.3, 7.0), (-1.0, 1.25, 1.5), (-2.0, 0.5, 30.0)] {
            let r = closed_curve_check(&params(rho, mu, d), 30, 1e-4).unwrap();
            assert!(r.ratio.is_none() && r.rational.is_none() && r.reason.is_some());
        }
        let r = closed_curve_check(&params(1.0, 0.45, 1.5), 30, 1e-4).unwrap();
        assert!(r.ratio.is_none() && r.reason.unwrap().contains("outside"));
    }

    #[test]
    fn rational_search_uses_smallest_denominator() {
        let p = params(1.0, 0.45, 1.23);
        let r = closed_curve_check(&p, 30, 1e-4).unwrap();
        let ratio = r.ratio.unwrap();
        let wide = closed_curve_check(&p, 30, 0.5).unwrap();
        assert_eq!(wide.rational.unwrap().1, 1);
        assert_eq!(wide.rational.unwrap().0, ratio.round() as i64);
    }
}
