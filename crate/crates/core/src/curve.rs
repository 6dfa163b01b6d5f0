//! Critical curves assembled from the quadratures `ψ(x)` and `s(x)`.
//!
//! `x` is the master variable: every singularity of the arc-length ODE
//! (turning point, peak, endpoint) is integrable in `x`. Samples are then
//! placed on a grid that is uniform in a segment variable chosen to be smooth
//! at both ends of each segment, and `s` is recovered by quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::euler_lagrange::first_integral_xy;
use crate::numerics::diff::{chain_rule_derivatives_offset, index_speed};
use crate::numerics::quadrature::{integrate, integrate_to_infinity, QuadTol};
use crate::numerics::roots::brent;
use crate::phase_plane::{f_axis, orbit_x_intersections, singular_points, Branch};
use crate::types::{embed_phi, metric_dot, AmbientPoint, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    /// The component through the turning point nearest the origin of the
    /// `x`-axis (the only one in most regimes).
    Inner,
    /// The second open component for `ρ < 0`.
    Outer,
    /// The closed phase orbit around the center for `ρ > 4μ²`.
    Braid,
}

impl std::fmt::Display for Component {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Component::Inner => "inner",
            Component::Outer => "outer",
            Component::Braid => "braid",
        })
    }
}

/// Arc-length ordered samples of one component.
#[derive(Debug, Clone)]
pub struct CurveSamples {
    pub params: ModelParams,
    pub component: Component,
    pub s: Vec<f64>,
    pub x: Vec<f64>,
    pub kappa: Vec<f64>,
    pub psi: Vec<f64>,
    /// `u = (1 − log x)·x`, the Killing length `G`.
    pub u: Vec<f64>,
    pub points: Vec<AmbientPoint>,
    /// `i` such that `x[i]` and `x[i+1]` lie on opposite sides of 1.
    pub peaks: Vec<usize>,
    /// Index of the first sample of the second half of a mirrored curve.
    pub turning_index: Option<usize>,
    /// Signed arc length measured from the nearest peak, computed directly
    /// so that it keeps full relative precision there; NaN on segments
    /// without a peak.
    pub sigma: Vec<f64>,
    /// Whether the first/last sample sits half a grid cell short of an
    /// excluded end of the curve (the open endpoint `x → 0`).
    pub open_ends: [bool; 2],
}

impl CurveSamples {
    pub fn new(
        params: ModelParams,
        component: Component,
        s: Vec<f64>,
        x: Vec<f64>,
        psi: Vec<f64>,
        points: Vec<AmbientPoint>,
    ) -> Result<Self> {
        let n = s.len();
        for len in [x.len(), psi.len(), points.len()] {
            if len != n {
                return Err(GeomError::DimensionMismatch(n, len));
            }
        }
        if let Some(i) = s.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(GeomError::NonMonotone { index: i + 1 });
        }
        let kappa = x
            .iter()
            .map(|&v| crate::types::kappa_from_x(v, params.mu))
            .collect::<Result<Vec<_>>>()?;
        let u = x.iter().map(|&v| (1.0 - v.ln()) * v).collect();
        let peaks = x
            .windows(2)
            .enumerate()
            .filter(|(_, w)| (w[0] - 1.0) * (w[1] - 1.0) < 0.0)
            .map(|(i, _)| i)
            .collect();
        Ok(Self {
            params,
            component,
            s,
            x,
            kappa,
            psi,
            u,
            points,
            peaks,
            turning_index: None,
            sigma: vec![f64::NAN; n],
            open_ends: [false; 2],
        })
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Index ranges `[a, b)` between peaks, on which every sampled quantity
    /// is smooth in the sample index.
    pub fn segments(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut a = 0;
        for &p in &self.peaks {
            out.push((a, p + 1));
            a = p + 1;
        }
        out.push((a, self.len()));
        out
    }

    /// `d/ds` and `d²/ds²` of a per-sample quantity.
    pub fn s_derivatives(&self, f: &[f64], width: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        chain_rule_derivatives_offset(&self.s, Some(&self.sigma), f, &self.segments(), width)
    }

    /// `ds/di` with respect to the sample index.
    pub fn index_speed(&self, width: usize) -> Result<Vec<f64>> {
        index_speed(&self.s, Some(&self.sigma), &self.segments(), width)
    }

    /// Numeric tangent `dγ/ds` at every sample.
    pub fn tangents(&self, width: usize) -> Result<Vec<Vec<f64>>> {
        let dim = self.points.first().map_or(3, |p| p.dim);
        let mut cols = Vec::with_capacity(dim);
        for c in 0..dim {
            let f: Vec<f64> = self.points.iter().map(|p| p.coords[c]).collect();
            cols.push(self.s_derivatives(&f, width)?.0);
        }
        Ok((0..self.len())
            .map(|i| cols.iter().map(|col| col[i]).collect())
            .collect())
    }

    /// The samples with `ψ → −ψ` (reflection across the symmetry geodesic).
    pub fn mirrored(&self) -> Result<Self> {
        let psi: Vec<f64> = self.psi.iter().map(|v| -v).collect();
        let points = self
            .u
            .iter()
            .zip(&psi)
            .map(|(&u, &v)| embed_phi(u, v, &self.params))
            .collect::<Result<Vec<_>>>()?;
        let mut out = Self::new(self.params, self.component, self.s.clone(), self.x.clone(), psi, points)?;
        out.turning_index = self.turning_index;
        out.sigma = self.sigma.clone();
        out.peaks = self.peaks.clone();
        out.open_ends = self.open_ends;
        Ok(out)
    }
}

/// A simple root of `R` flagged as an integration endpoint.
#[derive(Debug, Clone, Copy)]
struct Root {
    x: f64,
}

fn root_at(x: f64, _p: &ModelParams) -> Root {
    Root { x }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kernel {
    /// `|log r| / √R`
    Arc,
    /// `μ r log r / (D √R)`
    Psi,
}

fn numerator(k: Kernel, r: f64, p: &ModelParams) -> f64 {
    let l = r.ln();
    match k {
        Kernel::Arc => l.abs(),
        Kernel::Psi => {
            let one_l = 1.0 - l;
            let dd = p.d - p.rho * one_l * one_l * r * r;
            p.mu * r * l / dd
        }
    }
}

fn radicand(r: f64, p: &ModelParams) -> f64 {
    p.d - f_axis(r, p)
}

/// `(F(x₀,0) − F(r,0)) / (x₀ − r)` for a root `x₀` of `R`, i.e. `R(r)/(x₀ − r)`
/// with `R(x₀) = 0` imposed exactly and without cancellation as `r → x₀`.
fn slope_to_root(x0: f64, r: f64, p: &ModelParams) -> f64 {
    let t = (x0 - r) / r;
    let ln1p_over_t = if t.abs() < 1e-8 { 1.0 - 0.5 * t } else { t.ln_1p() / t };
    let l0 = x0.ln();
    let (u0, u) = ((1.0 - l0) * x0, (1.0 - r.ln()) * r);
    // (u₀ − u)/(x₀ − r), from u = x − x log x.
    let du = 1.0 - l0 - ln1p_over_t;
    p.mu * p.mu * (x0 + r) + p.rho * (u0 + u) * du
}

/// `∫_lo^hi numerator/√R`. A root of `R` at or just beyond an end (`lo_root`
/// below `lo`, `hi_root` above `hi`) is handled by `r = x₀ ∓ w²`, which
/// removes the inverse-square-root singularity and the cancellation in `R`.
fn kernel_integral(
    k: Kernel,
    p: &ModelParams,
    lo: f64,
    hi: f64,
    lo_root: Option<Root>,
    hi_root: Option<Root>,
    tol: QuadTol,
) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    if lo < 1.0 && hi > 1.0 {
        // |log r| has a kink at the peak.
        return Ok(kernel_integral(k, p, lo, 1.0, lo_root, None, tol)?
            + kernel_integral(k, p, 1.0, hi, None, hi_root, tol)?);
    }
    match (lo_root, hi_root) {
        (Some(_), Some(_)) => {
            let mid = 0.5 * (lo + hi);
            Ok(kernel_integral(k, p, lo, mid, lo_root, None, tol)?
                + kernel_integral(k, p, mid, hi, None, hi_root, tol)?)
        }
        (None, Some(rt)) => {
            let f = |w: f64| {
                let r = rt.x - w * w;
                2.0 * numerator(k, r, p) / slope_to_root(rt.x, r, p).max(0.0).sqrt()
            };
            Ok(integrate(f, (rt.x - hi).max(0.0).sqrt(), (rt.x - lo).sqrt(), tol)?.value)
        }
        (Some(rt), None) => {
            let f = |w: f64| {
                let r = rt.x + w * w;
                2.0 * numerator(k, r, p) / (-slope_to_root(rt.x, r, p)).max(0.0).sqrt()
            };
            Ok(integrate(f, (lo - rt.x).max(0.0).sqrt(), (hi - rt.x).sqrt(), tol)?.value)
        }
        (None, None) => Ok(integrate(
            |r| numerator(k, r, p) / radicand(r, p).max(0.0).sqrt(),
            lo,
            hi,
            tol,
        )?
        .value),
    }
}

fn quad_tol() -> QuadTol {
    QuadTol::new(1e-15, 1e-13)
}

/// `ψ(x) = μ∫_x^{x₀} r log r / (D √R) dr` for `0 < x ≤ x₀`.
pub fn psi_of_x(x: f64, params: &ModelParams, x0: f64) -> Result<f64> {
    if !(x > 0.0) || x > x0 {
        return Err(GeomError::Domain(format!(
            "psi_of_x needs 0 < x <= x0 (x = {x}, x0 = {x0})"
        )));
    }
    kernel_integral(Kernel::Psi, params, x, x0, None, Some(root_at(x0, params)), quad_tol())
}

/// Arc length from `x` to the turning point `x₀` along the half-curve.
pub fn arc_length_of_x(x: f64, params: &ModelParams, x0: f64) -> Result<f64> {
    if !(x >= 0.0) || x > x0 {
        return Err(GeomError::Domain(format!(
            "arc_length_of_x needs 0 <= x <= x0 (x = {x}, x0 = {x0})"
        )));
    }
    kernel_integral(Kernel::Arc, params, x, x0, None, Some(root_at(x0, params)), quad_tol())
}

/// Turning point of the inner component: the smallest root of `F(x,0) = d`.
pub fn inner_turning_point(params: &ModelParams) -> Result<f64> {
    Ok(orbit_x_intersections(params)?.roots[0])
}

/// `lim_{x→0⁺} ψ(x)` on the inner component. The integrand is bounded
/// (`~ μ r log r / d^{3/2}`) at `r = 0`, and Gauss–Kronrod nodes never touch
/// the endpoint, so the integral is taken directly from 0.
pub fn psi_limit_at_zero(params: &ModelParams) -> Result<f64> {
    let x0 = inner_turning_point(params)?;
    kernel_integral(Kernel::Psi, params, 0.0, x0, None, Some(root_at(x0, params)), quad_tol())
}

/// Arc length and azimuth advance `(∫|log r|/√R, μ∫ r log r/(D√R))` over
/// `[lo, hi]` between two consecutive roots of `R`: half a period of a
/// closed phase orbit.
pub fn half_orbit_integrals(params: &ModelParams, lo: f64, hi: f64) -> Result<(f64, f64)> {
    if !(lo > 0.0 && hi > lo) {
        return Err(GeomError::Domain(format!("need 0 < lo < hi (got {lo}, {hi})")));
    }
    let (a, b) = (Some(root_at(lo, params)), Some(root_at(hi, params)));
    Ok((
        kernel_integral(Kernel::Arc, params, lo, hi, a, b, quad_tol())?,
        kernel_integral(Kernel::Psi, params, lo, hi, a, b, quad_tol())?,
    ))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DStar {
    pub d_star: f64,
    pub psi_limit: f64,
    pub bracket: (f64, f64),
    /// Whether the endpoint limit was increasing in `d` at the scan points
    /// adjacent to the bracket.
    pub locally_monotone: bool,
}

/// `d_*`: the value of `d` at which the endpoint azimuth vanishes.
pub fn solve_d_star(rho: f64, mu: f64) -> Result<f64> {
    Ok(solve_d_star_report(rho, mu)?.d_star)
}

pub fn solve_d_star_report(rho: f64, mu: f64) -> Result<DStar> {
    let mu = mu.abs();
    if rho > 0.0 && rho > 4.0 * mu * mu * (1.0 + 1e-12) {
        return Err(GeomError::Regime(format!(
            "no deltoid transition for rho > 4 mu^2 (rho = {rho}, mu = {mu})"
        )));
    }
    let arch = rho + mu * mu;
    let mut hi = mu * mu * std::f64::consts::E.powi(2);
    if rho < 0.0 {
        let saddle = singular_points(rho, mu)
            .into_iter()
            .find(|p| p.branch == Branch::Minus)
            .map(|p| rho * p.x * p.x * (1.0 - p.log_x))
            .unwrap_or(f64::INFINITY);
        hi = hi.min(saddle * (1.0 - 1e-9));
    }
    let lo = if arch > 0.0 { arch * (1.0 + 1e-9) } else { hi * 1e-6 };
    if !(hi > lo) {
        return Err(GeomError::Bracket { lo, hi });
    }
    let f = |d: f64| -> Result<f64> { psi_limit_at_zero(&ModelParams::new(rho, mu, d)?) };

    const SCAN: usize = 64;
    let ds: Vec<f64> = (0..=SCAN).map(|i| lo + (hi - lo) * i as f64 / SCAN as f64).collect();
    let vals = ds.iter().map(|&d| f(d)).collect::<Result<Vec<_>>>()?;
    let k = vals
        .windows(2)
        .position(|w| w[0] < 0.0 && w[1] >= 0.0)
        .ok_or(GeomError::Bracket { lo, hi })?;
    let locally_monotone = (k.saturating_sub(1)..(k + 2).min(SCAN)).all(|i| vals[i + 1] > vals[i]);

    let mut err = None;
    let d_star = brent(
        |d| match f(d) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                f64::NAN
            }
        },
        ds[k],
        ds[k + 1],
        1e-15 * ds[k + 1],
        300,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    let psi_limit = f(d_star)?;
    if psi_limit.abs() >= 1e-7 {
        return Err(GeomError::NonConvergence(format!(
            "d_* = {d_star}: endpoint azimuth {psi_limit:e} not below 1e-7"
        )));
    }
    Ok(DStar {
        d_star,
        psi_limit,
        bracket: (ds[k], ds[k + 1]),
        locally_monotone,
    })
}

/// Closed form of the Euclidean critical curve for `μ = 1`.
pub fn euclidean_closed_form(x: f64, d: f64) -> Result<[f64; 2]> {
    let sd = d.sqrt();
    if !(d > 0.0) || !(x > 0.0) || x > sd {
        return Err(GeomError::Domain(format!(
            "euclidean_closed_form needs 0 < x <= sqrt(d) (x = {x}, d = {d})"
        )));
    }
    let l = x.ln();
    let root = (d - x * x).max(0.0).sqrt();
    Ok([
        (1.0 - l) * x / sd,
        (root * (l - 1.0) + sd * ((sd + root) / x).ln()) / sd,
    ])
}

#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    /// Samples per half-curve.
    pub n: usize,
    /// Truncation of unbounded components at `x_max = factor · x₋`.
    pub x_max_factor: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            n: 2000,
            x_max_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EndKind {
    /// Turning point on the symmetry axis: sample included.
    Turning,
    /// Peak at `x = 1`: sample excluded, grid graded quadratically.
    Peak,
    /// Turning point at `x = 1` (the boundary arch). Arc length grows like
    /// `(1 − x)^{3/2}` here, so the grid is graded cubically.
    TurningPeak,
    /// `x → 0`: sample excluded.
    Open,
    /// Finite truncation of an unbounded branch: sample included.
    Cut,
}

/// A monotone-in-`x` half branch `start → end`.
struct HalfBranch {
    params: ModelParams,
    start: f64,
    end: f64,
    start_kind: EndKind,
    end_kind: EndKind,
    psi_start: f64,
    tol: QuadTol,
}

impl HalfBranch {
    fn decreasing(&self) -> bool {
        self.end < self.start
    }

    /// Turning-point ends of the branch with the distance within which
    /// integrals are taken relative to them.
    fn anchors(&self) -> Vec<(f64, f64)> {
        let bps = self.breakpoints();
        let mut out = Vec::new();
        if self.start_kind == EndKind::Turning {
            out.push((self.start, 0.5 * (bps[1].0 - self.start).abs()));
        }
        if self.end_kind == EndKind::Turning {
            let prev = bps[bps.len() - 2].0;
            out.push((self.end, 0.5 * (self.end - prev).abs()));
        }
        out
    }

    fn roots_for(&self, lo: f64, hi: f64) -> (Option<Root>, Option<Root>) {
        let mut below = None;
        let mut above = None;
        for (x0, reach) in self.anchors() {
            if x0 == lo || (x0 < lo && hi - x0 <= reach) {
                below = Some(root_at(x0, &self.params));
            } else if x0 == hi || (x0 > hi && x0 - lo <= reach) {
                above = Some(root_at(x0, &self.params));
            }
        }
        (below, above)
    }

    /// `(Δs, Δψ)` from `a` to `b`, both in branch order.
    fn piece(&self, a: f64, b: f64) -> Result<(f64, f64)> {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (lr, hr) = self.roots_for(lo, hi);
        let arc = kernel_integral(Kernel::Arc, &self.params, lo, hi, lr, hr, self.tol)?;
        let psi = kernel_integral(Kernel::Psi, &self.params, lo, hi, lr, hr, self.tol)?;
        Ok((arc, if a > b { psi } else { -psi }))
    }

    fn breakpoints(&self) -> Vec<(f64, EndKind)> {
        let mut v = vec![(self.start, self.start_kind)];
        let (lo, hi) = if self.decreasing() { (self.end, self.start) } else { (self.start, self.end) };
        if lo < 1.0 && hi > 1.0 {
            v.push((1.0, EndKind::Peak));
        }
        v.push((self.end, self.end_kind));
        v
    }

    /// Samples `(s, x, ψ, σ)` along the half branch, where `σ = s − s_peak`
    /// is evaluated directly (not by subtraction) on segments ending at a
    /// peak and is NaN elsewhere.
    fn sample(&self, n: usize) -> Result<Vec<[f64; 4]>> {
        let bps = self.breakpoints();
        // Reference nodes, cosine-clustered on each piece.
        let per = (n / (bps.len() - 1)).max(16);
        let mut xr = vec![self.start];
        for w in bps.windows(2) {
            let (a, b) = (w[0].0, w[1].0);
            for j in 1..=per {
                let t = (1.0 - (std::f64::consts::PI * j as f64 / per as f64).cos()) / 2.0;
                xr.push(if j == per { b } else { a + (b - a) * t });
            }
        }
        let mut sr = vec![0.0];
        let mut pr = vec![self.psi_start];
        for w in xr.windows(2) {
            let (ds, dp) = self.piece(w[0], w[1])?;
            sr.push(sr.last().unwrap() + ds);
            pr.push(pr.last().unwrap() + dp);
        }
        let refs = Reference { xr: &xr, sr: &sr, pr: &pr };

        // Segment boundaries in s.
        let mut seg_s = Vec::new();
        for (x, kind) in &bps {
            let i = xr.iter().position(|v| v == x).expect("breakpoint in reference grid");
            seg_s.push((sr[i], *kind));
        }
        let total = seg_s.last().unwrap().0;
        let mut counts: Vec<usize> = seg_s
            .windows(2)
            .map(|w| (((w[1].0 - w[0].0) / total) * n as f64).round() as usize)
            .map(|c| c.max(12))
            .collect();
        let excess = counts.iter().sum::<usize>() as isize - n as isize;
        if let Some(big) = counts.iter_mut().max() {
            *big = (*big as isize - excess).max(12) as usize;
        }

        // Arches turning close to `x = 1` have large, fast-varying
        // curvature at the turning point; sample it more densely.
        let slope = if self.start_kind == EndKind::Turning {
            (1.5 * self.start.ln().abs() / 0.5).clamp(0.3, 1.5)
        } else {
            1.5
        };
        let mut out = Vec::with_capacity(n);
        for (si, w) in seg_s.windows(2).enumerate() {
            let ((sa, ka), (sb, kb)) = (w[0], w[1]);
            let m = counts[si];
            let off = |k: EndKind| if matches!(k, EndKind::Peak | EndKind::TurningPeak | EndKind::Open) { 0.5 } else { 0.0 };
            // A turning/cut endpoint shared with the previous segment is
            // sampled only once.
            let (oa, ob) = (off(ka), off(kb));
            let skip_first = si > 0 && oa == 0.0;
            let denom = (m as f64) - 1.0 + oa + ob;
            for j in 0..m {
                if j == 0 && skip_first {
                    continue;
                }
                let tau = (j as f64 + oa) / denom;
                let sample = if tau == 0.0 {
                    self.exact_sample(si, sa, &bps, &refs)?
                } else if tau == 1.0 {
                    self.exact_sample(si + 1, sb, &bps, &refs)?
                } else if kb == EndKind::Peak {
                    self.invert_near_peak(sb, -(sb - sa) * grade(1.0 - tau, kb, ka, slope), &refs)?
                } else if matches!(ka, EndKind::Peak | EndKind::TurningPeak) {
                    self.invert_near_peak(sa, (sb - sa) * grade(tau, ka, kb, slope), &refs)?
                } else {
                    let (s, x, psi) = self.invert(sa + (sb - sa) * grade(tau, ka, kb, slope), &refs)?;
                    [s, x, psi, f64::NAN]
                };
                out.push(sample);
            }
        }
        Ok(out)
    }

    /// The sample at breakpoint `i`, with arc length `s` exactly.
    fn exact_sample(&self, i: usize, s: f64, bps: &[(f64, EndKind)], refs: &Reference<'_>) -> Result<[f64; 4]> {
        let x = bps[i].0;
        let k = refs.xr.iter().position(|v| *v == x).expect("breakpoint in reference grid");
        let sigma = if bps.iter().any(|b| matches!(b.1, EndKind::Peak | EndKind::TurningPeak)) { self.sigma(x)? } else { f64::NAN };
        Ok([s, x, refs.pr[k], sigma])
    }

    /// Finds the sample with arc length `target`, returning `(s, x, ψ)`
    /// evaluated at the located `x`.
    fn invert(&self, target: f64, refs: &Reference<'_>) -> Result<(f64, f64, f64)> {
        let Reference { xr, sr, pr } = *refs;
        let k = sr.partition_point(|&v| v <= target).clamp(1, sr.len() - 1) - 1;
        if target == sr[k] {
            return Ok((sr[k], xr[k], pr[k]));
        }
        if target == sr[k + 1] {
            return Ok((sr[k + 1], xr[k + 1], pr[k + 1]));
        }
        let x = self.solve_x(xr[k], xr[k + 1], |x| Ok(self.eval(x, k, refs)?.0 - target))?;
        let (s, psi) = self.eval(x, k, refs)?;
        Ok((s, x, psi))
    }

    /// `(s, ψ)` at `x` inside reference interval `k`.
    fn eval(&self, x: f64, k: usize, refs: &Reference<'_>) -> Result<(f64, f64)> {
        let Reference { xr, sr, pr } = *refs;
        if self.anchors().iter().any(|a| a.0 == xr[k + 1]) {
            let (ds, dp) = self.piece(x, xr[k + 1])?;
            Ok((sr[k + 1] - ds, pr[k + 1] - dp))
        } else {
            let (ds, dp) = self.piece(xr[k], x)?;
            Ok((sr[k] + ds, pr[k] + dp))
        }
    }

    /// Signed arc length from the peak to `x` (positive after the peak).
    /// Integrated from whichever of the peak and the far end of the segment
    /// is nearer, so that neither end's singularity is approached unflagged.
    fn sigma(&self, x: f64) -> Result<f64> {
        let after = if self.decreasing() { x < 1.0 } else { x > 1.0 };
        let far = if after { self.end } else { self.start };
        let arc = if (x - 1.0).abs() <= (x - far).abs() {
            self.piece(1.0, x)?.0
        } else {
            self.piece(1.0, far)?.0 - self.piece(x, far)?.0
        };
        Ok(if after { arc } else { -arc })
    }

    /// Sample at signed offset `sigma` from the peak at arc length `s_peak`.
    fn invert_near_peak(&self, s_peak: f64, sigma: f64, refs: &Reference<'_>) -> Result<[f64; 4]> {
        let Reference { xr, sr, .. } = *refs;
        let approx = s_peak + sigma;
        let k = sr.partition_point(|&v| v <= approx).clamp(1, sr.len() - 1) - 1;
        let (lo, hi) = (k.saturating_sub(1), (k + 2).min(sr.len() - 1));
        // Bracket in x on the correct side of the peak.
        let peak_i = xr.iter().position(|&v| v == 1.0).expect("peak node");
        let (a, b) = if sigma < 0.0 {
            (xr[lo.min(peak_i)], xr[hi.min(peak_i)])
        } else {
            (xr[lo.max(peak_i)], xr[hi.max(peak_i)])
        };
        let x = if sigma == 0.0 {
            1.0
        } else {
            self.solve_x(a, b, |x| Ok(self.sigma(x)? - sigma))?
        };
        let sig = self.sigma(x)?;
        let kk = xr
            .windows(2)
            .position(|w| (w[0] - x) * (w[1] - x) <= 0.0)
            .unwrap_or(k);
        let (_, psi) = self.eval(x, kk, refs)?;
        Ok([s_peak + sig, x, psi, sig])
    }

    fn solve_x<F: Fn(f64) -> Result<f64>>(&self, a: f64, b: f64, f: F) -> Result<f64> {
        // A target at a segment end can miss the bracket by rounding.
        let (fa, fb) = (f(a)?, f(b)?);
        if fa == 0.0 || fb == 0.0 || fa.signum() == fb.signum() {
            return Ok(if fa.abs() <= fb.abs() { a } else { b });
        }
        let mut failure = None;
        let x = brent(
            |x| match f(x) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    f64::NAN
                }
            },
            a,
            b,
            4.0 * f64::EPSILON * a.abs().max(b.abs()),
            200,
        )?;
        match failure {
            Some(e) => Err(e),
            None => Ok(x),
        }
    }
}

/// Fraction of a segment's arc length covered at segment variable
/// `t ∈ [0, 1]`, measured from the end of kind `near` toward `far`.
///
/// Quadratic grading at a peak makes `x − 1` (and with it every sampled
/// quantity) smooth in the sample index; at the open endpoint it resolves
/// the fast variation of `x`. At a turning point the grading has no
/// quadratic term, so the grid continues smoothly into the mirror image.
fn grade(t: f64, near: EndKind, far: EndKind, arch_slope: f64) -> f64 {
    let flat = |k: EndKind| matches!(k, EndKind::Peak | EndKind::Open);
    if near == EndKind::Turning && far == EndKind::Open {
        // Odd in t, so the mirrored grid stays smooth through the turning
        // point; slope `a` there and flat at the open end.
        let a = arch_slope;
        return t * (a + t * t * ((5.0 - 4.0 * a) / 2.0 + t * t * (2.0 * a - 3.0) / 2.0));
    }
    if near == EndKind::TurningPeak {
        return if flat(far) { t * t * t * (4.0 - 3.0 * t) } else { t * t * t };
    }
    match (flat(near), flat(far)) {
        (true, true) => t * t * (3.0 - 2.0 * t),
        (true, false) => t * t * (3.0 - t) / 2.0,
        (false, true) => t * (3.0 - t * t) / 2.0,
        (false, false) => t,
    }
}

#[derive(Clone, Copy)]
struct Reference<'a> {
    xr: &'a [f64],
    sr: &'a [f64],
    pr: &'a [f64],
}

fn saddle_x(params: &ModelParams) -> Option<f64> {
    singular_points(params.rho, params.mu)
        .into_iter()
        .find(|p| p.branch == Branch::Minus)
        .map(|p| p.x)
}

fn half_branch(params: &ModelParams, component: Component, opts: &BuildOptions) -> Result<(HalfBranch, bool)> {
    let tol = quad_tol();
    let ModelParams { rho, mu, d, .. } = *params;
    if rho < 0.0 && d <= 0.0 {
        return Err(GeomError::Regime(
            "curves are built only for d > 0 when rho < 0".into(),
        ));
    }
    let unavailable = |why: &str| GeomError::ComponentUnavailable(format!("{component} component: {why}"));
    let mk = |start, end, start_kind, end_kind, psi_start| HalfBranch {
        params: *params,
        start,
        end,
        start_kind,
        end_kind,
        psi_start,
        tol,
    };
    match orbit_x_intersections(params) {
        Ok(topo) => {
            let roots = &topo.roots;
            match component {
                // On the boundary arch the turning point is itself a peak.
                Component::Inner if (roots[0] - 1.0).abs() <= 1e-12 => {
                    Ok((mk(1.0, 0.0, EndKind::TurningPeak, EndKind::Open, 0.0), true))
                }
                Component::Inner => Ok((mk(roots[0], 0.0, EndKind::Turning, EndKind::Open, 0.0), true)),
                Component::Braid if topo.has_braid_component => {
                    Ok((mk(roots[2], roots[1], EndKind::Turning, EndKind::Turning, 0.0), true))
                }
                Component::Outer if rho < 0.0 && roots.len() >= 2 => {
                    let sx = saddle_x(params).ok_or_else(|| unavailable("no saddle"))?;
                    let x_max = (opts.x_max_factor * sx).max(roots[1] * 1.5);
                    Ok((mk(roots[1], x_max, EndKind::Turning, EndKind::Cut, 0.0), true))
                }
                _ => Err(unavailable(&format!("not present for rho = {rho}, mu = {mu}, d = {d}"))),
            }
        }
        Err(GeomError::NoIntersection) if rho < 0.0 => {
            // Anchor: the level set has two unbounded components, mirror
            // images of each other, each running over x ∈ (0, ∞).
            if component == Component::Braid {
                return Err(unavailable("anchor regime has no braid component"));
            }
            let sx = saddle_x(params).ok_or_else(|| unavailable("no saddle"))?;
            let x_max = opts.x_max_factor * sx;
            let tail = integrate_to_infinity(
                |r| numerator(Kernel::Psi, r, params) / radicand(r, params).max(0.0).sqrt(),
                x_max,
                tol,
            )?
            .value;
            Ok((mk(x_max, 0.0, EndKind::Cut, EndKind::Open, tail), false))
        }
        Err(e) => Err(e),
    }
}

/// Builds one component with `n` samples per half-curve.
pub fn build_curve(params: &ModelParams, component: Component, n: usize) -> Result<CurveSamples> {
    build_curve_with(params, component, &BuildOptions { n, ..BuildOptions::default() })
}

pub fn build_curve_with(params: &ModelParams, component: Component, opts: &BuildOptions) -> Result<CurveSamples> {
    if opts.n < 16 {
        return Err(GeomError::TooFewSamples { needed: 16, got: opts.n });
    }
    let anchor_outer = component == Component::Outer && orbit_x_intersections(params).is_err() && params.rho < 0.0;
    let branch_component = if anchor_outer { Component::Inner } else { component };
    let (branch, mirror) = half_branch(params, branch_component, opts)?;
    let half = branch.sample(opts.n)?;

    let mut s = Vec::with_capacity(2 * half.len());
    let mut x = Vec::with_capacity(2 * half.len());
    let mut psi = Vec::with_capacity(2 * half.len());
    let mut sigma = Vec::with_capacity(2 * half.len());
    let mut turning_index = None;
    // With the turning point at a peak (x₀ = 1) there is no axis sample.
    let axis_sample = branch.start_kind == EndKind::Turning;
    if mirror {
        for h in half.iter().skip(usize::from(axis_sample)).rev() {
            s.push(-h[0]);
            x.push(h[1]);
            psi.push(-h[2]);
            sigma.push(-h[3]);
        }
        turning_index = Some(s.len());
    }
    for h in &half {
        s.push(h[0]);
        x.push(h[1]);
        psi.push(h[2]);
        sigma.push(h[3]);
    }
    let points = x
        .iter()
        .zip(&psi)
        .map(|(&xv, &pv)| embed_phi((1.0 - xv.ln()) * xv, pv, params))
        .collect::<Result<Vec<_>>>()?;
    let mut out = CurveSamples::new(*params, component, s, x, psi, points)?;
    out.turning_index = turning_index;
    out.sigma = sigma;
    let open = branch.end_kind == EndKind::Open;
    out.open_ends = [open && mirror, open];
    if let (Some(t), false) = (turning_index, axis_sample) {
        out.peaks.push(t - 1);
        out.peaks.sort_unstable();
    }
    if anchor_outer {
        out = out.mirrored()?;
        out.component = Component::Outer;
    }
    Ok(out)
}

/// Invariant checks on a built curve.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurveVerification {
    pub max_unit_speed_deviation: f64,
    /// `|⟨p, p⟩ − 1/ρ|` relative to `max(1, Σ pᵢ²)`.
    pub max_quadric_residual: f64,
    pub max_level_set_deviation: f64,
    pub mirror_deviation: f64,
}

/// Sample mask excluding the neighbourhoods of peaks (`|x − 1| < peak`) and
/// the first/last `edge` samples of each segment.
pub fn interior_mask(samples: &CurveSamples, peak: f64, edge: usize) -> Vec<bool> {
    let mut mask: Vec<bool> = samples.x.iter().map(|x| (x - 1.0).abs() >= peak).collect();
    for (a, b) in samples.segments() {
        mask[a..(a + edge).min(b)].fill(false);
        mask[b.saturating_sub(edge).max(a)..b].fill(false);
    }
    mask
}

/// Samples with `x` below this are left out of derivative-based checks:
/// `x(s)` is only C¹ at the open endpoint `x → 0`.
pub const ENDPOINT_EXCLUSION: f64 = 1e-2;

pub fn verify_curve(samples: &CurveSamples) -> Result<CurveVerification> {
    let p = &samples.params;
    let tangents = samples.tangents(9)?;
    let mask = interior_mask(samples, 1e-3, 0);
    let mut unit = 0.0f64;
    for (i, t) in tangents.iter().enumerate() {
        if mask[i] && samples.x[i] >= ENDPOINT_EXCLUSION {
            let n2 = metric_dot(t, t, p.rho)?;
            unit = unit.max((n2.sqrt() - 1.0).abs());
        }
    }
    let quad = samples
        .points
        .iter()
        .map(|q| {
            let scale = q.as_slice().iter().map(|v| v * v).sum::<f64>().max(1.0);
            q.quadric_residual(p.rho).abs() / scale
        })
        .fold(0.0, f64::max);
    let (xs, _) = samples.s_derivatives(&samples.x, 9)?;
    let denom = if p.d == 0.0 { 1.0 } else { p.d.abs() };
    let mut level = 0.0f64;
    for i in 0..samples.len() {
        if mask[i] && samples.x[i] >= ENDPOINT_EXCLUSION {
            let f = first_integral_xy(samples.x[i], xs[i], p.rho, p.mu);
            level = level.max((f - p.d).abs() / denom);
        }
    }
    let mirror = mirror_deviation(samples);
    Ok(CurveVerification {
        max_unit_speed_deviation: unit,
        max_quadric_residual: quad,
        max_level_set_deviation: level,
        mirror_deviation: mirror,
    })
}

/// `max |γ(−s) − R γ(s)|` where `R` negates the second coordinate; zero for
/// components without a symmetry axis sample.
pub fn mirror_deviation(samples: &CurveSamples) -> f64 {
    let Some(t) = samples.turning_index else {
        return 0.0;
    };
    let n = samples.len();
    // Pair `t − k` with `t + k` around an axis sample, else `t − 1 − k`
    // with `t + k`.
    let shift = usize::from(samples.s[t] != 0.0);
    let mut dev = 0.0f64;
    for k in (1 - shift)..=(t - shift).min(n - 1 - t) {
        let a = &samples.points[t - shift - k];
        let b = &samples.points[t + k];
        dev = dev.max((samples.s[t - shift - k] + samples.s[t + k]).abs());
        for c in 0..a.dim {
            let sign = if c == 1 { -1.0 } else { 1.0 };
            dev = dev.max((a.coords[c] - sign * b.coords[c]).abs());
        }
    }
    dev
}

/// Angle between the tangent at the last resolvable sample near `x → 0`
/// and the symmetry geodesic `β` (the coordinate line of the second axis).
pub fn endpoint_angle(samples: &CurveSamples) -> Result<Option<f64>> {
    let n = samples.len();
    if n < 10 || samples.x[n - 1] > 1e-2 {
        return Ok(None);
    }
    let t = samples.tangents(5)?;
    let tv = &t[n - 1];
    let p = &samples.points[n - 1];
    // Direction of β at the point: the ψ-direction of the embedding at u = 0.
    let rho = samples.params.rho;
    let beta: Vec<f64> = if rho == 0.0 {
        vec![0.0, 1.0, 0.0]
    } else if rho > 0.0 {
        vec![0.0, p.coords[2], -p.coords[1]]
    } else {
        vec![0.0, p.coords[2], p.coords[1]]
    };
    let nb = metric_dot(&beta, &beta, rho)?.sqrt();
    let nt = metric_dot(tv, tv, rho)?.sqrt();
    let c = metric_dot(tv, &beta, rho)? / (nb * nt);
    Ok(Some(c.clamp(-1.0, 1.0).acos()))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DilationReport {
    pub lambda: f64,
    pub max_position_deviation: f64,
    pub max_arc_length_deviation: f64,
}

/// Compares `curve(λμ, λ²d)` with `curve(μ, d)` shrunk by `1/λ`, matching
/// arc length `s ↦ s/λ`.
pub fn dilation_check(params: &ModelParams, lambda: f64) -> Result<DilationReport> {
    if params.rho != 0.0 {
        return Err(GeomError::Regime(format!(
            "dilations do not map critical curves to critical curves for rho = {} != 0 (the curvature of the model would scale too)",
            params.rho
        )));
    }
    if !(lambda > 0.0) {
        return Err(GeomError::InvalidParams(format!("lambda must be positive (got {lambda})")));
    }
    let n = 400;
    let a = build_curve(params, Component::Inner, n)?;
    let scaled = ModelParams::new(0.0, lambda * params.signed_mu(), lambda * lambda * params.d)?;
    let b = build_curve(&scaled, Component::Inner, n)?;
    if a.len() != b.len() {
        return Err(GeomError::DimensionMismatch(a.len(), b.len()));
    }
    let mut pos = 0.0f64;
    let mut arc = 0.0f64;
    for i in 0..a.len() {
        arc = arc.max((a.s[i] / lambda - b.s[i]).abs());
        for c in 0..3 {
            pos = pos.max((a.points[i].coords[c] / lambda - b.points[i].coords[c]).abs());
        }
    }
    Ok(DilationReport {
        lambda,
        max_position_deviation: pos,
        max_arc_length_deviation: arc,
    })
}

/// Unit-speed samples of the constant-curvature critical curve with
/// geodesic curvature `kappa0`, over arc length `[0, length]`.
///
/// For `d = F(x, 0) > 0` the curve is the orbit `u = (1 − log x)x` of the
/// embedding, with `ψ(s) = −s/(μx)`. For `ρ < 0` the circle branch has
/// `d < 0`; it is then sampled as a circle about the vertex of the
/// hyperboloid, where the rotation about `β` does not apply.
pub fn constant_curvature_curve(rho: f64, mu: f64, kappa0: f64, length: f64, n: usize) -> Result<CurveSamples> {
    if n < 5 {
        return Err(GeomError::TooFewSamples { needed: 5, got: n });
    }
    if rho == 0.0 {
        return Err(GeomError::NoSolution("no constant-curvature critical curve for rho = 0".into()));
    }
    if !(length > 0.0) || kappa0 == 0.0 || !kappa0.is_finite() {
        return Err(GeomError::InvalidParams(format!(
            "need length > 0 and finite nonzero kappa0 (got {length}, {kappa0})"
        )));
    }
    let mu = mu.abs();
    let x0 = (mu / kappa0).exp();
    let d = f_axis(x0, &ModelParams::new(rho, mu, 1.0)?);
    let params = ModelParams::new(rho, mu, d)?;
    let s: Vec<f64> = (0..n).map(|i| length * i as f64 / (n - 1) as f64).collect();
    let psi: Vec<f64> = s.iter().map(|&sv| -sv / (mu * x0)).collect();
    let points = if d > 0.0 {
        let u0 = (1.0 - x0.ln()) * x0;
        psi.iter().map(|&v| embed_phi(u0, v, &params)).collect::<Result<Vec<_>>>()?
    } else {
        // Hyperbolic circle of radius t: κ = √|ρ|·coth t.
        let a = rho.abs().sqrt();
        let t = (a / kappa0.abs()).atanh();
        let (r, h) = (t.sinh() / a, t.cosh() / a);
        s.iter()
            .map(|&sv| {
                let w = sv / r;
                AmbientPoint::new3([r * w.cos(), r * w.sin(), h], params.signature())
            })
            .collect()
    };
    CurveSamples::new(params, Component::Inner, s, vec![x0; n], psi, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn eu(d: f64) -> ModelParams {
        ModelParams::new(0.0, 1.0, d).unwrap()
    }

    #[test]
    fn psi_vanishes_at_turning_point() {
        let p = eu(1.55);
        let x0 = inner_turning_point(&p).unwrap();
        assert!((x0 - 1.55f64.sqrt()).abs() < 1e-13);
        assert_eq!(psi_of_x(x0, &p, x0).unwrap(), 0.0);
        assert_eq!(arc_length_of_x(x0, &p, x0).unwrap(), 0.0);
        assert!(psi_of_x(x0 * 1.01, &p, x0).is_err());
    }

    #[test]
    fn endpoint_limit_signs() {
        assert!(psi_limit_at_zero(&eu(1.0)).unwrap() < 0.0);
        assert!(psi_limit_at_zero(&eu(9.0)).unwrap() > 0.0);
        assert!(psi_limit_at_zero(&eu(E * E / 4.0)).unwrap().abs() < 1e-10);
    }

    #[test]
    fn psi_matches_closed_form() {
        for d in [1.0, 1.55, 2.5, 9.0] {
            let p = eu(d);
            let x0 = d.sqrt();
            for x in [0.01, 0.3, 0.9, 1.1, 0.99 * x0] {
                if x >= x0 {
                    continue;
                }
                let cf = euclidean_closed_form(x, d).unwrap();
                let psi = psi_of_x(x, &p, x0).unwrap();
                assert!((d.sqrt() * psi - cf[1]).abs() < 1e-11, "d={d} x={x}");
            }
        }
    }

    #[test]
    fn closed_form_tangent_is_unit() {
        let d: f64 = 2.0;
        for x in [0.2, 0.7, 1.3] {
            let t = [-(d - x * x).sqrt() / d.sqrt(), x / d.sqrt()];
            assert!((t[0].hypot(t[1]) - 1.0).abs() < 1e-15);
            // and it is the x-derivative of the closed form divided by ds/dx
            let h = 1e-6;
            let a = euclidean_closed_form(x - h, d).unwrap();
            let b = euclidean_closed_form(x + h, d).unwrap();
            let dsdx = x.ln().abs() / (d - x * x).sqrt();
            for c in 0..2 {
                let num = (b[c] - a[c]) / (2.0 * h) / dsdx;
                assert!((num.abs() - t[c].abs()).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn closed_form_on_axis_at_turning_point() {
        let p = euclidean_closed_form(2f64.sqrt(), 2.0).unwrap();
        assert!(p[1].abs() < 1e-15);
        assert!(euclidean_closed_form(1.5, 2.0).is_err());
    }

    #[test]
    fn euclidean_d_star() {
        let d = solve_d_star(0.0, 1.0).unwrap();
        assert!((d - E * E / 4.0).abs() < 1e-9, "{d}");
    }

    #[test]
    fn d_star_rejects_braid_regime() {
        assert!(matches!(solve_d_star(1.0, 0.45), Err(GeomError::Regime(_))));
    }

    #[test]
    fn arch_has_no_peaks_and_is_symmetric() {
        let c = build_curve(&eu(0.8), Component::Inner, 300).unwrap();
        assert!(c.peaks.is_empty());
        assert!(mirror_deviation(&c) < 1e-12);
        let t = c.turning_index.unwrap();
        assert_eq!(c.psi[t], 0.0);
        // single maximum of the height coordinate, on the axis
        let h: Vec<f64> = c.points.iter().map(|p| p.coords[0]).collect();
        let imax = h.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(imax, t);
    }

    #[test]
    fn boundary_arch_turns_at_a_peak() {
        let c = build_curve(&eu(1.0), Component::Inner, 300).unwrap();
        assert!(c.x.iter().all(|&x| x < 1.0));
        let t = c.turning_index.unwrap();
        assert_eq!(c.peaks, vec![t - 1]);
        assert!(mirror_deviation(&c) < 1e-12);
        assert!(c.s[t] > 0.0 && (c.s[t] + c.s[t - 1]).abs() < 1e-15);
        let v = verify_curve(&c).unwrap();
        assert!(v.max_unit_speed_deviation < 1e-6, "{v:?}");
    }

    #[test]
    fn peaked_curve_has_two_peaks() {
        let c = build_curve(&eu(1.55), Component::Inner, 2000).unwrap();
        assert_eq!(c.peaks.len(), 2);
        let v = verify_curve(&c).unwrap();
        assert!(v.max_unit_speed_deviation < 1e-6, "{v:?}");
        assert!(v.max_level_set_deviation < 1e-6, "{v:?}");
    }

    #[test]
    fn outer_unavailable_in_euclidean_plane() {
        assert!(matches!(
            build_curve(&eu(2.0), Component::Outer, 100),
            Err(GeomError::ComponentUnavailable(_))
        ));
    }
}
