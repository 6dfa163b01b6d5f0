//! Rotational surfaces generated by critical curves, their principal
//! curvatures, and the flat special surfaces (cylinders, Hopf tori).

use std::f64::consts::TAU;

use serde::Serialize;

use crate::curve::{constant_curvature_curve, interior_mask, CurveSamples, ENDPOINT_EXCLUSION};
use crate::error::{GeomError, Result};
use crate::euler_lagrange::constant_curvature_solutions;
use crate::numerics::diff::{grid_derivative, periodic_derivative};
use crate::phase_plane::Branch;
use crate::types::{metric_dot, AmbientPoint, ModelParams, Signature};

/// How the profile curve is moved to sweep the surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    /// Rotation in the `(x₁, x₄)`-plane (about `β`), `t ∈ [0, 2π)`.
    Rotation,
    /// Translation along the geodesic through the vertex of the hyperboloid
    /// (boost in the `(x₃, x₄)`-plane), `t ∈ [−1, 1]`.
    Translation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureMode {
    Analytic,
    FiniteDifference,
}

/// Vertices on an `ns × nt` grid, row `i` being the image of curve sample
/// `i` under the sweep.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub params: ModelParams,
    pub ns: usize,
    pub nt: usize,
    pub t: Vec<f64>,
    pub sweep: Sweep,
    /// Row-major: vertex `(i, j)` at `i * nt + j`.
    pub vertices: Vec<AmbientPoint>,
    /// Principal curvature along the sweep orbits; NaN until computed.
    pub kappa1: Vec<f64>,
    /// Principal curvature along the profile; NaN until computed.
    pub kappa2: Vec<f64>,
    pub curve: CurveSamples,
}

impl SurfaceMesh {
    pub fn vertex(&self, i: usize, j: usize) -> &AmbientPoint {
        &self.vertices[i * self.nt + j]
    }

    pub fn dim(&self) -> usize {
        self.vertices.first().map_or(3, |p| p.dim)
    }

    pub fn has_curvatures(&self) -> bool {
        self.kappa1.iter().chain(&self.kappa2).any(|k| !k.is_nan())
    }

    /// Rows excluded from curvature checks: within `1e-3` of a peak in `x`
    /// (`κ → ∞`), the sample adjacent to a peak, or below the endpoint
    /// exclusion (the surface closes up at the rotation axis).
    pub fn row_mask(&self) -> Vec<bool> {
        let mut mask = interior_mask(&self.curve, 1e-3, 1);
        for (m, x) in mask.iter_mut().zip(&self.curve.x) {
            *m &= *x >= ENDPOINT_EXCLUSION;
        }
        mask
    }
}

fn sweep_point(p: &AmbientPoint, t: f64, sweep: Sweep) -> AmbientPoint {
    let [a, b, c, _] = p.coords;
    match (sweep, p.signature) {
        (Sweep::Rotation, Signature::Euclidean) => AmbientPoint::new3([a * t.cos(), b, a * t.sin()], p.signature),
        (Sweep::Rotation, sig) => AmbientPoint::new4([a * t.cos(), b, c, a * t.sin()], sig),
        (Sweep::Translation, sig) => AmbientPoint::new4([a, b, c * t.cosh(), c * t.sinh()], sig),
    }
}

fn sweep_curve(samples: &CurveSamples, nt: usize, sweep: Sweep) -> Result<SurfaceMesh> {
    if nt < 9 {
        return Err(GeomError::TooFewSamples { needed: 9, got: nt });
    }
    let t: Vec<f64> = match sweep {
        Sweep::Rotation => (0..nt).map(|j| TAU * j as f64 / nt as f64).collect(),
        Sweep::Translation => (0..nt).map(|j| -1.0 + 2.0 * j as f64 / (nt - 1) as f64).collect(),
    };
    let vertices = samples
        .points
        .iter()
        .flat_map(|p| t.iter().map(move |&tj| sweep_point(p, tj, sweep)))
        .collect();
    let n = samples.len() * nt;
    Ok(SurfaceMesh {
        params: samples.params,
        ns: samples.len(),
        nt,
        t,
        sweep,
        vertices,
        kappa1: vec![f64::NAN; n],
        kappa2: vec![f64::NAN; n],
        curve: samples.clone(),
    })
}

/// Sweeps the curve by the rotation fixing `β`: `(γ₁cos t, γ₂, γ₁sin t)`
/// for `ρ = 0`, `(γ₁cos t, γ₂, γ₃, γ₁sin t)` otherwise.
pub fn rotate_curve(samples: &CurveSamples, nt: usize) -> Result<SurfaceMesh> {
    let p = samples.params;
    if p.rho < 0.0 && p.d <= 0.0 {
        return Err(GeomError::Regime(format!(
            "the rotation about beta generates the surface only for d > 0 when rho < 0 (d = {})",
            p.d
        )));
    }
    sweep_curve(samples, nt, Sweep::Rotation)
}

/// `G = (1 − μ/κ)e^{μ/κ}` along the curve.
fn killing_length(samples: &CurveSamples) -> Vec<f64> {
    samples.u.clone()
}

/// `G_ss`, with the mean removed first so that constants difference to zero.
pub fn killing_length_ss(samples: &CurveSamples, width: usize) -> Result<Vec<f64>> {
    let g = killing_length(samples);
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    let centred: Vec<f64> = g.iter().map(|v| v - mean).collect();
    Ok(samples.s_derivatives(&centred, width)?.1)
}

/// Returns a copy of the mesh with `kappa1`, `kappa2` filled in, for the
/// orientation of the supplied `μ` (`κ₂ = −κ` with `κ` of that orientation).
pub fn principal_curvatures(mesh: &SurfaceMesh, mode: CurvatureMode) -> Result<SurfaceMesh> {
    let mut out = mesh.clone();
    match mode {
        CurvatureMode::Analytic => analytic_curvatures(&mut out)?,
        CurvatureMode::FiniteDifference => fd_curvatures(&mut out)?,
    }
    if out.params.flipped {
        // Back to the orientation of the supplied `μ`.
        for k in out.kappa1.iter_mut().chain(out.kappa2.iter_mut()) {
            *k = -*k;
        }
    }
    Ok(out)
}

fn analytic_curvatures(mesh: &mut SurfaceMesh) -> Result<()> {
    let c = &mesh.curve;
    let rho = mesh.params.rho;
    let g = killing_length(c);
    let gss = killing_length_ss(c, 11)?;
    for i in 0..mesh.ns {
        let k = c.kappa[i];
        if k == 0.0 || !k.is_finite() || g[i] == 0.0 {
            return Err(GeomError::DegenerateCurvature {
                index: i,
                s: c.s[i],
                reason: if g[i] == 0.0 {
                    "kappa = mu: the profile meets the rotation axis".into()
                } else {
                    "zero or infinite curvature".into()
                },
            });
        }
        let k1 = (gss[i] / g[i] + rho) / k;
        for j in 0..mesh.nt {
            mesh.kappa1[i * mesh.nt + j] = k1;
            mesh.kappa2[i * mesh.nt + j] = -k;
        }
    }
    Ok(())
}

/// Vector orthogonal (in the metric of signature `sig`) to the three given
/// vectors of `R⁴`.
fn cross4(a: &[f64; 4], b: &[f64; 4], c: &[f64; 4], sig: Signature) -> [f64; 4] {
    let det3 = |i: usize, j: usize, k: usize| {
        a[i] * (b[j] * c[k] - b[k] * c[j]) - a[j] * (b[i] * c[k] - b[k] * c[i]) + a[k] * (b[i] * c[j] - b[j] * c[i])
    };
    let mut n = [det3(1, 2, 3), -det3(0, 2, 3), det3(0, 1, 3), -det3(0, 1, 2)];
    if sig == Signature::Lorentzian {
        n[2] = -n[2];
    }
    n
}

fn cross3(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0], 0.0]
}

/// Shape-operator curvatures from mesh differences alone: profile
/// derivatives by the curve's arc-length stencils, sweep derivatives by
/// 9-point differences in `t`.
fn fd_curvatures(mesh: &mut SurfaceMesh) -> Result<()> {
    let (ns, nt, dim) = (mesh.ns, mesh.nt, mesh.dim());
    let rho = mesh.params.rho;
    let sig = mesh.params.signature();
    let h = mesh.t[1] - mesh.t[0];
    let mut xs = vec![[0.0; 4]; ns * nt];
    let mut xss = xs.clone();
    let mut xt = xs.clone();
    let mut xtt = xs.clone();
    let mut xst = xs.clone();
    let t_deriv = |f: &[f64], k: usize| -> Result<Vec<f64>> {
        match mesh.sweep {
            Sweep::Rotation => Ok(periodic_derivative(f, h, k, 9)),
            Sweep::Translation => grid_derivative(&mesh.t, f, k, 9, &[(0, nt)]),
        }
    };
    for c in 0..dim {
        for j in 0..nt {
            let col: Vec<f64> = (0..ns).map(|i| mesh.vertices[i * nt + j].coords[c]).collect();
            let (d1, d2) = mesh.curve.s_derivatives(&col, 9)?;
            for i in 0..ns {
                xs[i * nt + j][c] = d1[i];
                xss[i * nt + j][c] = d2[i];
            }
        }
        for i in 0..ns {
            let row: Vec<f64> = (0..nt).map(|j| mesh.vertices[i * nt + j].coords[c]).collect();
            let d1 = t_deriv(&row, 1)?;
            let d2 = t_deriv(&row, 2)?;
            let ds: Vec<f64> = (0..nt).map(|j| xs[i * nt + j][c]).collect();
            let dst = t_deriv(&ds, 1)?;
            for j in 0..nt {
                xt[i * nt + j][c] = d1[j];
                xtt[i * nt + j][c] = d2[j];
                xst[i * nt + j][c] = dst[j];
            }
        }
    }
    let dot = |a: &[f64; 4], b: &[f64; 4]| metric_dot(&a[..dim], &b[..dim], rho);
    for i in 0..ns {
        let want_sign = -mesh.curve.kappa[i].signum();
        for j in 0..nt {
            let v = i * nt + j;
            let mut n = if dim == 3 {
                cross3(&xs[v], &xt[v])
            } else {
                cross4(&xs[v], &xt[v], &mesh.vertices[v].coords, sig)
            };
            let nn = dot(&n, &n)?;
            if !(nn > 0.0) {
                continue;
            }
            let nn = nn.sqrt();
            n.iter_mut().for_each(|c| *c /= nn);
            let (e1, f1, g1) = (dot(&xs[v], &xs[v])?, dot(&xs[v], &xt[v])?, dot(&xt[v], &xt[v])?);
            let (mut e2, mut f2, mut g2) = (dot(&xss[v], &n)?, dot(&xst[v], &n)?, dot(&xtt[v], &n)?);
            if (e2 / e1).signum() != want_sign {
                e2 = -e2;
                f2 = -f2;
                g2 = -g2;
            }
            let det = e1 * g1 - f1 * f1;
            // Shape operator I⁻¹ II.
            let a = (g1 * e2 - f1 * f2) / det;
            let b = (g1 * f2 - f1 * g2) / det;
            let c = (e1 * f2 - f1 * e2) / det;
            let d = (e1 * g2 - f1 * f2) / det;
            let half_tr = 0.5 * (a + d);
            let disc = (0.25 * (a - d) * (a - d) + b * c).max(0.0).sqrt();
            let (l1, l2) = (half_tr + disc, half_tr - disc);
            let profile = e2 / e1;
            let (k2, k1) = if (l1 - profile).abs() <= (l2 - profile).abs() {
                (l1, l2)
            } else {
                (l2, l1)
            };
            mesh.kappa1[v] = k1;
            mesh.kappa2[v] = k2;
        }
    }
    Ok(())
}

/// `max |(1/κ₁ − 1/κ₂) − 1/μ|` over the rows kept by [`SurfaceMesh::row_mask`].
pub fn astigmatism_deviation(mesh: &SurfaceMesh) -> Result<f64> {
    if !mesh.has_curvatures() {
        return Err(GeomError::Domain("principal curvatures are not attached to the mesh".into()));
    }
    let mask = mesh.row_mask();
    let c = 1.0 / mesh.params.signed_mu();
    let mut worst = 0.0f64;
    for i in (0..mesh.ns).filter(|&i| mask[i]) {
        for j in 0..mesh.nt {
            let v = i * mesh.nt + j;
            let (k1, k2) = (mesh.kappa1[v], mesh.kappa2[v]);
            if k1 == 0.0 || k2 == 0.0 {
                return Err(GeomError::DegenerateCurvature {
                    index: i,
                    s: mesh.curve.s[i],
                    reason: "vanishing principal curvature".into(),
                });
            }
            let dev = ((1.0 / k1 - 1.0 / k2) - c).abs();
            worst = worst.max(if dev.is_nan() { f64::INFINITY } else { dev });
        }
    }
    Ok(worst)
}

/// `max |(κ₁ + κ₂)/2|` over the masked rows.
pub fn max_mean_curvature(mesh: &SurfaceMesh) -> Result<f64> {
    if !mesh.has_curvatures() {
        return Err(GeomError::Domain("principal curvatures are not attached to the mesh".into()));
    }
    let mask = mesh.row_mask();
    Ok((0..mesh.ns)
        .filter(|&i| mask[i])
        .flat_map(|i| (0..mesh.nt).map(move |j| i * mesh.nt + j))
        .map(|v| (0.5 * (mesh.kappa1[v] + mesh.kappa2[v])).abs())
        .fold(0.0, f64::max))
}

/// `V² = (κ − μ)²e^{2μ/κ}/κ²`, the squared length of the Killing field
/// along the curve.
pub fn killing_speed_squared(kappa: f64, mu: f64) -> f64 {
    let r = (kappa - mu) / kappa;
    r * r * (2.0 * mu / kappa).exp()
}

/// Ratio of the sweep speed `|∂X/∂t|` (by differences along each orbit) to
/// `V(s)`, reduced to its median and the largest relative departure from it.
/// Rows with `V = 0` are skipped.
pub fn orbit_speed_ratio(mesh: &SurfaceMesh) -> Result<(f64, f64)> {
    let (nt, dim, rho) = (mesh.nt, mesh.dim(), mesh.params.rho);
    let h = mesh.t[1] - mesh.t[0];
    let mut ratios = Vec::with_capacity(mesh.ns);
    for i in 0..mesh.ns {
        let v = killing_speed_squared(mesh.curve.kappa[i], mesh.params.mu).sqrt();
        if !(v > 0.0) || !v.is_finite() {
            continue;
        }
        let mut xt = [0.0; 4];
        for (c, slot) in xt.iter_mut().enumerate().take(dim) {
            let row: Vec<f64> = (0..nt).map(|j| mesh.vertex(i, j).coords[c]).collect();
            *slot = match mesh.sweep {
                Sweep::Rotation => periodic_derivative(&row, h, 1, 9)[0],
                Sweep::Translation => grid_derivative(&mesh.t, &row, 1, 9, &[(0, nt)])?[nt / 2],
            };
        }
        let speed = metric_dot(&xt[..dim], &xt[..dim], rho)?.sqrt();
        ratios.push(speed / v);
    }
    if ratios.is_empty() {
        return Err(GeomError::Domain("no rows with nonzero Killing speed".into()));
    }
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let worst = ratios.iter().map(|r| (r / median - 1.0).abs()).fold(0.0, f64::max);
    Ok((median, worst))
}

/// Samples with `|x − 1|` or `x` below this are left out of the
/// Gauss–Codazzi residual, which differentiates `G` three times.
pub const CODAZZI_WINDOW: f64 = 5e-2;

/// `max |d/ds[(G_ss + G(κ² + ρ))/κ] − κ_s G| / (1 + |κ_s G|)` over samples
/// away from peaks, open ends and segment edges, with stencils of the given
/// width. Both terms grow like `κ_s` toward a peak; the normalization keeps
/// the maximum from being decided by the samples nearest one.
pub fn gauss_codazzi_residual(samples: &CurveSamples, width: usize) -> Result<f64> {
    if samples.len() < 2 * width {
        return Err(GeomError::TooFewSamples {
            needed: 2 * width,
            got: samples.len(),
        });
    }
    let rho = samples.params.rho;
    let g = killing_length(samples);
    let gss = killing_length_ss(samples, width)?;
    let q: Vec<f64> = (0..samples.len())
        .map(|i| {
            let k = samples.kappa[i];
            (gss[i] + g[i] * (k * k + rho)) / k
        })
        .collect();
    let (qs, _) = samples.s_derivatives(&q, width)?;
    let (ks, _) = samples.s_derivatives(&samples.kappa, width)?;
    let mask = interior_mask(samples, CODAZZI_WINDOW, width / 2);
    let mut worst = 0.0f64;
    for i in 0..samples.len() {
        if mask[i] && samples.x[i] >= CODAZZI_WINDOW {
            let term = ks[i] * g[i];
            worst = worst.max((qs[i] - term).abs() / (1.0 + term.abs()));
        }
    }
    Ok(worst)
}

/// Gauss–Codazzi residuals of one component built at each sample count in
/// `ns`, and the observed order `log(r_first/r_last)/log(n_last/n_first)`.
pub fn gauss_codazzi_refinement(
    params: &ModelParams,
    component: crate::curve::Component,
    ns: &[usize],
    width: usize,
) -> Result<(Vec<f64>, f64)> {
    if ns.len() < 2 {
        return Err(GeomError::TooFewSamples { needed: 2, got: ns.len() });
    }
    let res = ns
        .iter()
        .map(|&n| gauss_codazzi_residual(&crate::curve::build_curve(params, component, n)?, width))
        .collect::<Result<Vec<_>>>()?;
    let (n0, n1) = (ns[0] as f64, ns[ns.len() - 1] as f64);
    let order = (res[0] / res[res.len() - 1]).ln() / (n1 / n0).ln();
    Ok((res, order))
}

/// `m²` of the product-torus radii: `|ρ² ± ρ√(ρ² − 4μ²ρ)|` and the variant
/// `|ρ² ± √(ρ² − 4μ²ρ)|` without the factor ρ on the root.
pub fn hopf_m_squared(rho: f64, mu: f64, branch: Branch) -> Result<(f64, f64)> {
    if !(rho > 0.0) || mu == 0.0 {
        return Err(GeomError::InvalidParams(format!(
            "Hopf tori need rho > 0 and mu != 0 (rho = {rho}, mu = {mu})"
        )));
    }
    let disc = rho * rho - 4.0 * mu * mu * rho;
    if disc < -1e-12 * rho * rho {
        return Err(GeomError::NoSolution(format!(
            "rho^2 - 4 mu^2 rho = {disc} < 0: no flat rotational torus"
        )));
    }
    let root = disc.max(0.0).sqrt();
    let sign = if branch == Branch::Plus { 1.0 } else { -1.0 };
    Ok(((rho * rho + sign * rho * root).abs(), (rho * rho + sign * root).abs()))
}

/// Radii `(r₁, r₂)` of the Hopf torus `S¹(r₁) × S¹(r₂) ⊂ S³(ρ)`.
pub fn hopf_torus_radii(rho: f64, mu: f64, branch: Branch) -> Result<(f64, f64)> {
    let (m2, _) = hopf_m_squared(rho, mu, branch)?;
    let mu = mu.abs();
    if m2 <= 2.0 * mu * mu * rho {
        return Err(GeomError::NoSolution(format!(
            "m^2 = {m2} <= 2 mu^2 rho on the {branch:?} branch"
        )));
    }
    let m = m2.sqrt();
    Ok((2f64.sqrt() * mu / m, (m2 - 2.0 * mu * mu * rho).sqrt() / (rho.sqrt() * m)))
}

/// The flat surface over the `which`-th constant-curvature critical curve:
/// its rotation about `β` when `d > 0`, and for the hyperbolic circle branch
/// (`d < 0`) its translation along the geodesic through the circle's centre.
pub fn cylinder_surface(rho: f64, mu: f64, which: usize, ns: usize, nt: usize) -> Result<SurfaceMesh> {
    let sols = constant_curvature_solutions(rho, mu);
    if sols.is_empty() {
        return Err(GeomError::NoSolution(format!(
            "no critical curves of constant curvature for rho = {rho}, mu = {mu}"
        )));
    }
    let sol = sols.get(which).ok_or_else(|| {
        GeomError::InvalidParams(format!("solution index {which} out of range ({} solutions)", sols.len()))
    })?;
    // One full turn of a closed curve, or a unit stretch of a hypercycle.
    let k = sol.kappa0.abs();
    let a = rho.abs().sqrt();
    let closed = rho > 0.0 || k > a;
    let length = if closed { TAU / (k * k + rho).sqrt() } else { 2.0 };
    let n = if closed { ns + 1 } else { ns };
    let mut curve = constant_curvature_curve(rho, mu, sol.kappa0, length, n)?;
    if closed {
        // Drop the duplicated closing sample.
        for v in [&mut curve.s, &mut curve.x, &mut curve.kappa, &mut curve.psi, &mut curve.u, &mut curve.sigma] {
            v.pop();
        }
        curve.points.pop();
    }
    if curve.params.d > 0.0 {
        rotate_curve(&curve, nt)
    } else {
        sweep_curve(&curve, nt, Sweep::Translation)
    }
}

/// Name of the projection [`project_to_r3`] applies to points of the given
/// dimension.
pub fn projection_name(dim: usize, rho: f64) -> &'static str {
    match (dim, rho > 0.0) {
        (3, _) => "identity",
        (_, true) => "stereographic from (0, 0, 0, 1/sqrt(rho))",
        (_, false) => "poincare ball from (0, 0, -1/sqrt(-rho), 0), coordinates (x1, x2, x4)",
    }
}

/// Projection to `R³` for plotting: identity in the plane, stereographic
/// from `(0, 0, 0, 1/√ρ)` on the sphere, Poincaré ball on the hyperboloid.
pub fn project_to_r3(p: &AmbientPoint, rho: f64) -> [f64; 3] {
    let c = p.coords;
    if p.dim == 3 {
        return [c[0], c[1], c[2]];
    }
    let r = 1.0 / rho.abs().sqrt();
    if rho > 0.0 {
        let k = r / (r - c[3]);
        [k * c[0], k * c[1], k * c[2]]
    } else {
        let k = r / (r + c[2]);
        [k * c[0], k * c[1], k * c[3]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{build_curve, Component};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn surface(rho: f64, mu: f64, d: f64, n: usize, nt: usize) -> SurfaceMesh {
        let p = ModelParams::new(rho, mu, d).unwrap();
        rotate_curve(&build_curve(&p, Component::Inner, n).unwrap(), nt).unwrap()
    }

    fn circle_branch(rho: f64, mu: f64) -> usize {
        constant_curvature_solutions(rho, mu)
            .iter()
            .position(|s| s.kappa0.abs() > rho.abs().sqrt())
            .unwrap()
    }

    #[test]
    fn vertices_lie_on_the_quadric() {
        for (rho, d) in [(1.0, 2.5), (-1.0, 20.0), (-1.0, 0.5)] {
            let m = surface(rho, 1.0, d, 100, 32);
            let worst = m.vertices.iter().map(|v| v.quadric_residual(rho).abs()).fold(0.0, f64::max);
            assert!(worst < 1e-10, "rho {rho} d {d}: {worst}");
        }
    }

    #[test]
    fn rows_are_congruent_under_the_rotation() {
        for rho in [0.0, 1.0, -1.0] {
            let d = if rho < 0.0 { 20.0 } else { 2.5 };
            let m = surface(rho, 1.0, d, 60, 24);
            let mut worst = 0.0f64;
            for i in 0..m.ns {
                let base = m.vertex(i, 0);
                for j in 0..m.nt {
                    let want = sweep_point(base, m.t[j], Sweep::Rotation);
                    for (a, b) in want.coords.iter().zip(&m.vertex(i, j).coords) {
                        worst = worst.max((a - b).abs());
                    }
                }
            }
            assert!(worst < 1e-10, "rho {rho}: {worst}");
        }
    }

    #[test]
    fn orbit_circumference_in_the_plane() {
        let m = surface(0.0, 1.0, 1.55, 80, 64);
        for i in (0..m.ns).step_by(7) {
            let perimeter: f64 = (0..m.nt)
                .map(|j| {
                    let (a, b) = (m.vertex(i, j).coords, m.vertex(i, (j + 1) % m.nt).coords);
                    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
                })
                .sum();
            let r = m.curve.points[i].coords[0].abs();
            let chord = m.nt as f64 * 2.0 * r * (std::f64::consts::PI / m.nt as f64).sin();
            assert!((perimeter - chord).abs() < 1e-12 * (1.0 + chord));
            assert!((chord - TAU * r).abs() < 2e-3 * TAU * r.max(1e-12));
        }
    }

    #[test]
    fn orbit_speed_is_proportional_to_killing_speed() {
        for (rho, d) in [(0.0, 1.55), (1.0, 2.5), (-1.0, 20.0)] {
            let m = surface(rho, 1.0, d, 150, 64);
            let (scale, dev) = orbit_speed_ratio(&m).unwrap();
            assert!(dev < 1e-6, "rho {rho}: {dev}");
            assert!((scale - 1.0 / d.sqrt()).abs() < 1e-8, "rho {rho}: {scale}");
        }
    }

    #[test]
    fn analytic_and_finite_difference_curvatures_agree() {
        let m = surface(0.0, 1.0, 1.55, 200, 64);
        let a = principal_curvatures(&m, CurvatureMode::Analytic).unwrap();
        let f = principal_curvatures(&m, CurvatureMode::FiniteDifference).unwrap();
        let mask = m.row_mask();
        let mut worst = 0.0f64;
        for i in (0..m.ns).filter(|&i| mask[i]) {
            for j in 0..m.nt {
                let v = i * m.nt + j;
                worst = worst.max(((a.kappa1[v] - f.kappa1[v]) / a.kappa1[v]).abs());
                worst = worst.max(((a.kappa2[v] - f.kappa2[v]) / a.kappa2[v]).abs());
            }
        }
        assert!(worst < 1e-3, "{worst}");
    }

    #[test]
    fn constant_astigmatism_examples() {
        let m = surface(0.0, 1.0, 1.55, 200, 64);
        let a = principal_curvatures(&m, CurvatureMode::Analytic).unwrap();
        assert!(astigmatism_deviation(&a).unwrap() < 1e-6);
        let m = surface(1.0, 1.0, 2.5, 200, 64);
        let a = principal_curvatures(&m, CurvatureMode::Analytic).unwrap();
        let f = principal_curvatures(&m, CurvatureMode::FiniteDifference).unwrap();
        assert!(astigmatism_deviation(&a).unwrap() < 1e-6);
        assert!(astigmatism_deviation(&f).unwrap() < 1e-3);
    }

    #[test]
    fn difference_of_inverse_curvatures_has_the_sign_of_one_over_mu() {
        for mu in [1.0, -1.0, 0.5] {
            let m = surface(0.0, mu, 1.55 * mu * mu, 80, 16);
            let a = principal_curvatures(&m, CurvatureMode::Analytic).unwrap();
            let mask = m.row_mask();
            for i in (0..m.ns).filter(|&i| mask[i]) {
                let v = i * m.nt;
                let diff = 1.0 / a.kappa1[v] - 1.0 / a.kappa2[v];
                assert_eq!(diff.signum(), mu.signum(), "mu {mu} row {i}");
            }
        }
    }

    #[test]
    fn jittered_surface_fails_the_relation() {
        let m = surface(0.0, 1.0, 1.55, 200, 64);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut jittered = m.clone();
        for v in jittered.vertices.iter_mut() {
            for c in v.coords.iter_mut().take(3) {
                *c += rng.gen_range(-1e-3..1e-3);
            }
        }
        let f = principal_curvatures(&jittered, CurvatureMode::FiniteDifference).unwrap();
        assert!(astigmatism_deviation(&f).unwrap() > 1e-1);
    }

    #[test]
    fn codazzi_residual_is_small_and_sensitive() {
        let p = ModelParams::new(0.0, 1.0, 1.55).unwrap();
        let c = build_curve(&p, Component::Inner, 2000).unwrap();
        assert!(gauss_codazzi_residual(&c, 9).unwrap() < 1e-4);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut jittered = c.clone();
        for g in jittered.u.iter_mut() {
            *g *= 1.0 + rng.gen_range(-1e-3..1e-3);
        }
        assert!(gauss_codazzi_residual(&jittered, 9).unwrap() > 1e-2);
    }

    #[test]
    fn codazzi_residual_refines() {
        let p = ModelParams::new(0.0, 1.0, 1.55).unwrap();
        let (res, order) = gauss_codazzi_refinement(&p, Component::Inner, &[250, 500, 1000], 9).unwrap();
        assert!(res[2] < res[0]);
        assert!(order >= 1.5, "{res:?} {order}");
    }

    #[test]
    fn codazzi_terms_vanish_on_a_cylinder() {
        let m = cylinder_surface(1.0, 0.45, 0, 120, 16).unwrap();
        assert!(gauss_codazzi_residual(&m.curve, 9).unwrap() < 1e-9);
    }

    #[test]
    fn hyperbolic_circle_cylinder() {
        let m = cylinder_surface(-1.0, 1.0, circle_branch(-1.0, 1.0), 120, 32).unwrap();
        assert_eq!(m.sweep, Sweep::Translation);
        let k0 = m.curve.kappa[0];
        let a = principal_curvatures(&m, CurvatureMode::Analytic).unwrap();
        let f = principal_curvatures(&m, CurvatureMode::FiniteDifference).unwrap();
        for v in 0..a.kappa1.len() {
            assert!((a.kappa2[v] + k0).abs() < 1e-12);
            assert!((a.kappa1[v] - a.kappa1[0]).abs() < 1e-8);
            assert!((a.kappa1[v] - f.kappa1[v]).abs() < 1e-6);
            assert!((a.kappa2[v] - f.kappa2[v]).abs() < 1e-6);
        }
        assert!(astigmatism_deviation(&a).unwrap() < 1e-8);
        assert!(astigmatism_deviation(&f).unwrap() < 1e-8);
        let worst = m.vertices.iter().map(|v| v.quadric_residual(-1.0).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-10);
    }

    #[test]
    fn cylinders_have_constant_astigmatism() {
        for (rho, mu) in [(1.0, 0.45), (1.0, 0.3), (-1.0, 1.0), (-2.0, 0.7)] {
            for which in 0..constant_curvature_solutions(rho, mu).len() {
                let m = cylinder_surface(rho, mu, which, 100, 24).unwrap();
                for (mode, tol) in [(CurvatureMode::Analytic, 1e-8), (CurvatureMode::FiniteDifference, 1e-6)] {
                    let c = principal_curvatures(&m, mode).unwrap();
                    let dev = astigmatism_deviation(&c).unwrap();
                    assert!(dev < tol, "rho {rho} mu {mu} #{which} {mode:?}: {dev}");
                }
            }
        }
    }

    #[test]
    fn no_cylinder_in_the_plane() {
        assert!(matches!(cylinder_surface(0.0, 1.0, 0, 50, 16), Err(GeomError::NoSolution(_))));
        assert!(matches!(cylinder_surface(1.0, 0.6, 0, 50, 16), Err(GeomError::NoSolution(_))));
    }

    #[test]
    fn clifford_cylinder_is_minimal() {
        let m = cylinder_surface(1.0, 0.5, 0, 100, 32).unwrap();
        let f = principal_curvatures(&m, CurvatureMode::FiniteDifference).unwrap();
        assert!(max_mean_curvature(&f).unwrap() < 1e-6);
        let a = principal_curvatures(&m, CurvatureMode::Analytic).unwrap();
        assert!(max_mean_curvature(&a).unwrap() < 1e-12);
    }

    #[test]
    fn hopf_radii() {
        let (r1, r2) = hopf_torus_radii(4.0, 1.0, Branch::Plus).unwrap();
        assert!((r1 - 8f64.sqrt().recip()).abs() < 1e-12 && (r2 - r1).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        while checked < 100 {
            let rho: f64 = rng.gen_range(0.1..5.0);
            let mu = rng.gen_range(-1.0..1.0) * rho.sqrt() / 2.0;
            for b in [Branch::Plus, Branch::Minus] {
                if let Ok((r1, r2)) = hopf_torus_radii(rho, mu, b) {
                    assert!((r1 * r1 + r2 * r2 - 1.0 / rho).abs() < 1e-12);
                    checked += 1;
                }
            }
        }
        assert!(hopf_torus_radii(-1.0, 0.3, Branch::Plus).is_err());
        assert!(hopf_torus_radii(1.0, 0.6, Branch::Plus).is_err());
    }

    #[test]
    fn hopf_radii_match_the_rotated_cylinder() {
        for (rho, mu) in [(1.0, 0.45), (1.0, 0.3), (2.0, 0.5)] {
            let mut radii: Vec<(f64, f64)> = [Branch::Plus, Branch::Minus]
                .iter()
                .filter_map(|&b| hopf_torus_radii(rho, mu, b).ok())
                .map(|(a, b)| (a.min(b), a.max(b)))
                .collect();
            radii.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut seen = Vec::new();
            for which in 0..constant_curvature_solutions(rho, mu).len() {
                let m = cylinder_surface(rho, mu, which, 40, 16).unwrap();
                let c = m.vertex(0, 0).coords;
                let a = (c[0] * c[0] + c[3] * c[3]).sqrt();
                let b = (c[1] * c[1] + c[2] * c[2]).sqrt();
                seen.push((a.min(b), a.max(b)));
            }
            seen.sort_by(|a, b| a.0.total_cmp(&b.0));
            assert_eq!(seen.len(), radii.len());
            for (s, r) in seen.iter().zip(&radii) {
                assert!((s.0 - r.0).abs() < 1e-10 && (s.1 - r.1).abs() < 1e-10, "{seen:?} {radii:?}");
            }
        }
    }

    #[test]
    fn projections_are_finite() {
        let m = surface(-1.0, 1.0, 20.0, 40, 16);
        for v in &m.vertices {
            let p = project_to_r3(v, -1.0);
            assert!(p.iter().all(|c| c.is_finite()));
            assert!(p.iter().map(|c| c * c).sum::<f64>() < 1.0);
        }
        let m = surface(1.0, 1.0, 2.5, 40, 16);
        assert!(m.vertices.iter().all(|v| project_to_r3(v, 1.0).iter().all(|c| c.is_finite())));
    }

    #[test]
    fn rotation_needs_positive_d_in_hyperbolic_space() {
        let p = ModelParams::new(-1.0, 1.0, -0.5);
        if let Ok(p) = p {
            if let Ok(c) = build_curve(&p, Component::Inner, 50) {
                assert!(matches!(rotate_curve(&c, 16), Err(GeomError::Regime(_))));
            }
        }
    }
}
