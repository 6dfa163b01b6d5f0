//! The planar system `x' = y`, `y' = Q₂(x, y)` whose orbits are the level
//! sets `F(x, y) = d`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::euler_lagrange::{first_integral, first_integral_xy};
use crate::numerics::ode::{self, Event, OdeOptions, Termination};
use crate::numerics::roots::{brent, expand_upper};
use crate::types::{ModelParams, PhasePoint};

/// Right-hand side of the system at `p`.
pub fn vector_field_q(p: PhasePoint, params: &ModelParams) -> Result<(f64, f64)> {
    q_raw(p.x, p.y, params.rho, params.mu)
        .ok_or_else(|| GeomError::Domain(format!("vector field undefined at x = {}", p.x)))
}

fn q_raw(x: f64, y: f64, rho: f64, mu: f64) -> Option<(f64, f64)> {
    if !(x > 0.0) || !x.is_finite() {
        return None;
    }
    let l = x.ln();
    if l == 0.0 {
        return None;
    }
    let x2 = x * x;
    let num = -mu * mu * x2 - rho * x2 * l * l + rho * x2 * l - y * y * l;
    let v = num / (x * l * l);
    v.is_finite().then_some((y, v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Center,
    Saddle,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularPoint {
    pub x: f64,
    pub log_x: f64,
    pub kind: PointKind,
    #[serde(serialize_with = "ser_complex_pair")]
    pub eigenvalues: [Complex64; 2],
    pub branch: Branch,
}

fn ser_complex_pair<S: serde::Serializer>(v: &[Complex64; 2], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(2))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

/// `ρ − 4μ²` relative to `ρ`, used for the degenerate test.
fn degeneracy(rho: f64, mu: f64) -> f64 {
    (rho - 4.0 * mu * mu) / rho.abs().max(f64::MIN_POSITIVE)
}

/// Linearization at a singular point with `log x = l`: the Jacobian is
/// `[[0, 1], [ρ(1 − 2l)/l², 0]]`.
pub fn jacobian_entry(rho: f64, l: f64) -> f64 {
    rho * (1.0 - 2.0 * l) / (l * l)
}

/// Singular points sorted by `x`. Empty for `ρ = 0` and for `0 < ρ < 4μ²`.
pub fn singular_points(rho: f64, mu: f64) -> Vec<SingularPoint> {
    let mu = mu.abs();
    if rho == 0.0 || mu == 0.0 {
        return Vec::new();
    }
    let deg = degeneracy(rho, mu);
    if rho > 0.0 && deg.abs() <= 1e-12 {
        let z = Complex64::new(0.0, 0.0);
        return vec![SingularPoint {
            x: 0.5f64.exp(),
            log_x: 0.5,
            kind: PointKind::Degenerate,
            eigenvalues: [z, z],
            branch: Branch::Plus,
        }];
    }
    if rho > 0.0 && deg < 0.0 {
        return Vec::new();
    }
    let disc = (rho * rho - 4.0 * mu * mu * rho).sqrt();
    let mut pts: Vec<SingularPoint> = [(Branch::Plus, 1.0), (Branch::Minus, -1.0)]
        .into_iter()
        .map(|(branch, sgn)| {
            let l = (rho + sgn * disc) / (2.0 * rho);
            let j = jacobian_entry(rho, l);
            let (kind, ev) = if j > 0.0 {
                let r = j.sqrt();
                (PointKind::Saddle, [Complex64::new(r, 0.0), Complex64::new(-r, 0.0)])
            } else if j < 0.0 {
                let w = (-j).sqrt();
                (PointKind::Center, [Complex64::new(0.0, w), Complex64::new(0.0, -w)])
            } else {
                let z = Complex64::new(0.0, 0.0);
                (PointKind::Degenerate, [z, z])
            };
            SingularPoint {
                x: l.exp(),
                log_x: l,
                kind,
                eigenvalues: ev,
                branch,
            }
        })
        .collect();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x));
    pts
}

fn point_on(rho: f64, mu: f64, b: Branch) -> Option<SingularPoint> {
    singular_points(rho, mu).into_iter().find(|p| p.branch == b)
}

/// `F(x, 0)` at a singular point equals `ρx²(1 − log x)`.
pub fn singular_level(rho: f64, p: &SingularPoint) -> f64 {
    rho * p.x * p.x * (1.0 - p.log_x)
}

/// `(F(x₊, 0), F(x₋, 0))`: the values of `d` with a closed orbit around the
/// center. Present only for `ρ > 4μ² > 0`.
pub fn braid_window(rho: f64, mu: f64) -> Option<(f64, f64)> {
    if !(rho > 0.0) || mu == 0.0 || degeneracy(rho, mu.abs()) <= 1e-12 {
        return None;
    }
    let plus = point_on(rho, mu, Branch::Plus)?;
    let minus = point_on(rho, mu, Branch::Minus)?;
    // ρx₊²·log x₋ and ρx₋²·log x₊, using log x₊ + log x₋ = 1.
    Some((
        rho * plus.x * plus.x * minus.log_x,
        rho * minus.x * minus.x * plus.log_x,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitTopology {
    pub roots: Vec<f64>,
    pub components: usize,
    pub has_braid_component: bool,
}

/// `F(x, 0)` extended by its limit `0` at `x = 0`.
pub fn f_axis(x: f64, params: &ModelParams) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        first_integral_xy(x, 0.0, params.rho, params.mu)
    }
}

/// Roots of `F(x, 0) = d`, bracketed on the monotone pieces of `F(·, 0)`
/// delimited by the singular points.
pub fn orbit_x_intersections(params: &ModelParams) -> Result<OrbitTopology> {
    let ModelParams { rho, mu, d, .. } = *params;
    let g = |x: f64| f_axis(x, params) - d;
    let mut cuts = vec![0.0];
    let sing = if rho == 0.0 || (rho > 0.0 && degeneracy(rho, mu) <= 1e-12) {
        Vec::new()
    } else {
        singular_points(rho, mu)
    };
    cuts.extend(sing.iter().map(|p| p.x));

    let mut roots = Vec::new();
    let solve = |lo: f64, hi: f64| brent(g, lo, hi, 1e-14 * hi.max(1.0), 300);
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (glo, ghi) = (g(lo), g(hi));
        if ghi == 0.0 {
            roots.push(hi);
        } else if glo != 0.0 && glo.signum() != ghi.signum() {
            roots.push(solve(lo, hi)?);
        }
    }
    let last = *cuts.last().expect("non-empty");
    let glast = g(last);
    // Beyond the last cut F(·,0) is monotone: increasing for ρ ≥ 0,
    // decreasing to −∞ for ρ < 0.
    let tail_has_root = if rho >= 0.0 { glast < 0.0 } else { glast > 0.0 };
    if tail_has_root {
        let start = if last > 0.0 { last * 2.0 } else { 1.0 };
        let (lo, hi) = expand_upper(g, last, start, 1e300)?;
        roots.push(solve(lo, hi)?);
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());

    if roots.is_empty() {
        return Err(GeomError::NoIntersection);
    }
    let has_braid_component = rho > 0.0 && roots.len() == 3;
    let components = if has_braid_component || (rho < 0.0 && roots.len() >= 2) {
        2
    } else {
        1
    };
    Ok(OrbitTopology {
        roots,
        components,
        has_braid_component,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxArcLength,
    Peak,
    Endpoint,
    Period,
    /// `x` passed `x_max` on an unbounded orbit.
    Escape,
}

#[derive(Debug, Clone, Copy)]
pub struct TraceOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Distance from `x = 1` at which the peak event fires.
    pub peak_guard: f64,
    /// Value of `x` at which the endpoint event fires.
    pub endpoint_guard: f64,
    /// Value of `x` at which unbounded orbits are cut off.
    pub x_max: f64,
    pub stop_after_period: bool,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-13,
            peak_guard: 1e-3,
            endpoint_guard: 1e-6,
            x_max: 1e3,
            stop_after_period: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OrbitTrace {
    pub s: Vec<f64>,
    pub points: Vec<PhasePoint>,
    pub stop: StopReason,
    /// `max |F − d|` over the accepted points, relative to the larger of
    /// `|d|` and the summed magnitudes of the terms of `F` at the point.
    /// For `x ≫ 1` the terms are much larger than `d` and cancel, and
    /// only their own size sets the attainable precision.
    pub max_drift: f64,
    /// Arc length between the start and the second zero of `y`, when seen.
    pub period: Option<f64>,
}

/// `|F − d|` at `p`, relative to the larger of `|d|` and the summed
/// magnitudes of the terms of `F`.
pub fn relative_drift(p: PhasePoint, params: &ModelParams) -> f64 {
    let ModelParams { rho, mu, d, .. } = *params;
    let l = p.x.ln();
    let terms = (p.y * l).powi(2) + (mu * p.x).powi(2) + (rho * ((1.0 - l) * p.x).powi(2)).abs();
    let denom = d.abs().max(terms).max(f64::MIN_POSITIVE);
    (first_integral_xy(p.x, p.y, rho, mu) - d).abs() / denom
}

/// Integrates the system from `start` for arc length up to `s_max`.
pub fn trace_orbit(start: PhasePoint, params: &ModelParams, s_max: f64, opts: TraceOptions) -> Result<OrbitTrace> {
    let ModelParams { rho, mu, d, .. } = *params;
    let f0 = first_integral(start, params);
    let scale = d.abs().max(1.0);
    if (f0 - d).abs() > 1e-8 * scale {
        return Err(GeomError::NotOnLevelSet {
            deviation: (f0 - d).abs() / scale,
        });
    }
    let side = (start.x - 1.0).signum();
    let events = [
        Event {
            g: Box::new(move |y: &[f64; 2]| (y[0] - 1.0).abs() - opts.peak_guard),
            terminal: true,
        },
        Event {
            g: Box::new(move |y: &[f64; 2]| y[0] - opts.endpoint_guard),
            terminal: true,
        },
        Event {
            g: Box::new(|y: &[f64; 2]| y[1]),
            terminal: false,
        },
        Event {
            g: Box::new(move |y: &[f64; 2]| opts.x_max - y[0]),
            terminal: true,
        },
    ];
    let ode_opts = OdeOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        h_init: 1e-4,
        h_max: (s_max / 20.0).max(1e-6),
        h_min: 1e-15,
        max_steps: 5_000_000,
    };

    let out = ode::solve(
        |_, y: &[f64; 2]| q_raw(y[0], y[1], rho, mu).map(|(a, b)| [a, b]),
        0.0,
        [start.x, start.y],
        s_max,
        ode_opts,
        |_, b| b[0] > 0.0 && (b[0] - 1.0).signum() == side,
        &events,
    )?;

    let y_hits: Vec<_> = out.hits.iter().filter(|h| h.index == 2).collect();
    let period = y_hits.get(1).map(|h| h.t);

    let mut s = out.t;
    let mut ys = out.y;
    let mut stop = match out.termination {
        Termination::ReachedEnd => StopReason::MaxArcLength,
        Termination::Event(0) => StopReason::Peak,
        Termination::Event(3) => StopReason::Escape,
        Termination::Event(_) => StopReason::Endpoint,
    };
    if opts.stop_after_period {
        if let Some(hit) = y_hits.get(1) {
            let keep = s.partition_point(|&t| t < hit.t);
            s.truncate(keep);
            ys.truncate(keep);
            s.push(hit.t);
            ys.push(hit.y);
            stop = StopReason::Period;
        }
    }

    let points: Vec<PhasePoint> = ys.iter().map(|v| PhasePoint { x: v[0], y: v[1] }).collect();
    let max_drift = points.iter().map(|p| relative_drift(*p, params)).fold(0.0, f64::max);
    Ok(OrbitTrace {
        s,
        points,
        stop,
        max_drift,
        period,
    })
}
