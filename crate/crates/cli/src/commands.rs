//! The five subcommands. Each writes its files into the output directory
//! and returns `Err(Verification)` when a check exceeds its tolerance.

use astig_core::classify::{
    classification_report, classify, classify_with, curvature_period, ClassifyOptions, ComponentClass,
    SCHEMA_VERSION,
};
use astig_core::curve::{build_curve, verify_curve, Component, CurveSamples};
use astig_core::euler_lagrange::{constant_curvature_solutions, el_residual, ConstantCurvatureSolution};
use astig_core::phase_plane::{
    braid_window, orbit_x_intersections, relative_drift, singular_level, singular_points, trace_orbit, SingularPoint,
    StopReason, TraceOptions,
};
use astig_core::surface::{
    astigmatism_deviation, cylinder_surface, gauss_codazzi_residual, max_mean_curvature, orbit_speed_ratio,
    principal_curvatures, project_to_r3, projection_name, rotate_curve, CurvatureMode, SurfaceMesh, Sweep,
};
use astig_core::{GeomError, ModelParams, PhasePoint};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{d_grid, Format, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{num, OutDir};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Verification {
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Verification {
    fn new() -> Self {
        Self { passed: true, checks: Vec::new() }
    }

    fn check(&mut self, name: impl Into<String>, value: f64, tolerance: f64) {
        let pass = value <= tolerance;
        self.passed &= pass;
        self.checks.push(Check { name: name.into(), value, tolerance, pass });
    }

    fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{} = {:.3e} > {:.3e}", c.name, c.value, c.tolerance))
            .collect()
    }
}

fn finish(failures: Vec<String>) -> Result<()> {
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failures.join("; ")))
    }
}

/// `classify`: the JSON report, and a one-row-per-component CSV on request.
pub fn cmd_classify(cfg: &RunConfig, d: f64, geometry: bool) -> Result<()> {
    let p = cfg.params(d)?;
    let opts = ClassifyOptions { geometry, n: cfg.n.unwrap_or(400), ..ClassifyOptions::default() };
    let report = classification_report(&p, opts)?;
    for c in &report.components {
        log::info!("{} component: {}", c.component, c.label);
    }
    let mut out = OutDir::create(&cfg.out)?;
    let stem = cfg.stem("classify", &format!("_d{d}"));
    if cfg.wants(Format::Json) {
        out.json(&format!("{stem}.json"), &report)?;
    }
    if cfg.wants(Format::Csv) {
        let rows = report.components.iter().map(|c| class_row(d, c));
        out.csv(&format!("{stem}.csv"), &CLASS_HEADER, rows)?;
    }
    Ok(())
}

const CLASS_HEADER: [&str; 10] = [
    "d",
    "component",
    "label",
    "x0",
    "endpoint_azimuth",
    "peak_azimuth",
    "beta_crossings",
    "self_intersections",
    "theta_d",
    "feature_based",
];

fn class_row(d: f64, c: &ComponentClass) -> Vec<String> {
    let g = &c.diagnostics;
    vec![
        d.to_string(),
        c.component.to_string(),
        c.label.to_string(),
        num(g.x0),
        num(g.endpoint_azimuth),
        num(g.peak_azimuth),
        g.beta_crossings.map(|v| v.to_string()).unwrap_or_default(),
        g.self_intersections.map(|v| v.to_string()).unwrap_or_default(),
        num(g.theta_d),
        g.feature_based.to_string(),
    ]
}

#[derive(Debug, Serialize)]
struct CurveComponentReport {
    component: Component,
    label: Option<String>,
    samples: usize,
    peaks: Vec<usize>,
    turning_index: Option<usize>,
    endpoint_azimuth: Option<f64>,
    curvature_period: Option<f64>,
    verification: Verification,
}

#[derive(Debug, Serialize)]
struct CurveReport {
    schema_version: u32,
    rho: f64,
    mu: f64,
    d: f64,
    n: usize,
    components: Vec<CurveComponentReport>,
    files: Vec<String>,
}

fn curve_components(p: &ModelParams, n: usize) -> Result<Vec<CurveSamples>> {
    let mut out = Vec::new();
    for comp in [Component::Inner, Component::Outer, Component::Braid] {
        match build_curve(p, comp, n) {
            Ok(c) => out.push(c),
            Err(GeomError::ComponentUnavailable(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

fn curve_rows(c: &CurveSamples) -> Vec<Vec<String>> {
    (0..c.len())
        .map(|i| {
            let mut row = vec![
                c.s[i].to_string(),
                c.x[i].to_string(),
                c.kappa[i].to_string(),
                c.psi[i].to_string(),
                u8::from(c.peaks.contains(&i)).to_string(),
            ];
            row.extend(c.points[i].as_slice().iter().map(|v| v.to_string()));
            row
        })
        .collect()
}

/// `curve`: samples of every available component with their invariant checks.
pub fn cmd_curve(cfg: &RunConfig, d: f64) -> Result<()> {
    let p = cfg.params(d)?;
    let n = cfg.n.unwrap_or(2000);
    let classes = classify(&p)?;
    let curves = curve_components(&p, n)?;
    let mut out = OutDir::create(&cfg.out)?;
    let stem = cfg.stem("curve", &format!("_d{d}"));
    let tol = cfg.tol;
    let mut components = Vec::new();
    let mut failures = Vec::new();
    for c in &curves {
        let v = verify_curve(c)?;
        let mut ver = Verification::new();
        ver.check("unit_speed", v.max_unit_speed_deviation, tol.tol_unit_speed);
        ver.check("level_set", v.max_level_set_deviation, tol.tol_level_set);
        ver.check("quadric", v.max_quadric_residual, tol.tol_quadric);
        ver.check("mirror", v.mirror_deviation, tol.tol_mirror);
        ver.check("euler_lagrange", el_residual(c, &p)?, tol.tol_el);
        failures.extend(ver.failures().into_iter().map(|f| format!("{} {f}", c.component)));
        let class = classes.iter().find(|k| k.component == c.component);
        let period = if c.component == Component::Braid {
            let t = curvature_period(&p)?;
            log::info!("curvature period of the braid component: {t}");
            Some(t)
        } else {
            None
        };
        if let Some(a) = class.and_then(|k| k.diagnostics.endpoint_azimuth) {
            log::info!("{} endpoint azimuth: {a:e}", c.component);
        }
        components.push(CurveComponentReport {
            component: c.component,
            label: class.map(|k| k.label.to_string()),
            samples: c.len(),
            peaks: c.peaks.clone(),
            turning_index: c.turning_index,
            endpoint_azimuth: class.and_then(|k| k.diagnostics.endpoint_azimuth),
            curvature_period: period,
            verification: ver,
        });
        let dim = c.points.first().map_or(3, |q| q.dim);
        if cfg.wants(Format::Csv) {
            let mut header = vec!["s", "x", "kappa", "psi", "peak"];
            header.extend(["c0", "c1", "c2", "c3"].iter().take(dim));
            out.csv(&format!("{stem}_{}.csv", c.component), &header, curve_rows(c))?;
        }
        if cfg.wants(Format::Plotdata) {
            let block: Vec<Vec<f64>> = (0..c.len())
                .map(|i| {
                    let mut row = vec![c.s[i], c.x[i], c.kappa[i]];
                    row.extend_from_slice(c.points[i].as_slice());
                    row
                })
                .collect();
            let mut header = vec!["s", "x", "kappa"];
            header.extend(["c0", "c1", "c2", "c3"].iter().take(dim));
            out.plotdata(&format!("{stem}_{}.dat", c.component), &header, &[block])?;
        }
    }
    let report = CurveReport {
        schema_version: SCHEMA_VERSION,
        rho: p.rho,
        mu: p.signed_mu(),
        d,
        n,
        components,
        files: out.written().to_vec(),
    };
    out.json(&format!("{stem}.json"), &report)?;
    finish(failures)
}

#[derive(Debug, Serialize)]
struct SurfaceReport {
    schema_version: u32,
    rho: f64,
    mu: f64,
    d: Option<f64>,
    cylinder: Option<ConstantCurvatureSolution>,
    ns: usize,
    nt: usize,
    sweep: Sweep,
    astigmatism_deviation: f64,
    astigmatism_deviation_fd: f64,
    max_mean_curvature: f64,
    gauss_codazzi_residual: Option<f64>,
    orbit_speed_ratio: Option<(f64, f64)>,
    verification: Verification,
    files: Vec<String>,
}

#[derive(Debug, Serialize)]
struct ProjectionSidecar {
    schema_version: u32,
    mesh: String,
    rho: f64,
    ambient_dimension: usize,
    projection: &'static str,
    up_axis: &'static str,
}

/// `surface`: the rotational surface of the inner curve, or a cylinder over
/// a constant-curvature curve, with both curvature modes compared.
pub fn cmd_surface(cfg: &RunConfig, d: Option<f64>, cylinder: Option<usize>) -> Result<()> {
    let ns = cfg.n.unwrap_or(200);
    let (mesh, sol, tail) = match (d, cylinder) {
        (_, Some(k)) => {
            let sols = constant_curvature_solutions(cfg.rho, cfg.mu);
            let sol = *sols.get(k).ok_or_else(|| {
                CliError::Params(format!(
                    "cylinder index {k} out of range: {} constant-curvature solutions for rho = {}, mu = {}",
                    sols.len(),
                    cfg.rho,
                    cfg.mu
                ))
            })?;
            (cylinder_surface(cfg.rho, cfg.mu, k, ns, cfg.nt)?, Some(sol), format!("_cylinder{k}"))
        }
        (Some(d), None) => {
            let p = cfg.params(d)?;
            (rotate_curve(&build_curve(&p, Component::Inner, ns)?, cfg.nt)?, None, format!("_d{d}"))
        }
        (None, None) => return Err(CliError::Params("surface needs --d or --cylinder".into())),
    };
    let analytic = principal_curvatures(&mesh, CurvatureMode::Analytic)?;
    let fd = principal_curvatures(&mesh, CurvatureMode::FiniteDifference)?;
    let dev = astigmatism_deviation(&analytic)?;
    let dev_fd = astigmatism_deviation(&fd)?;
    let quadric = mesh.vertices.iter().map(|v| v.quadric_residual(cfg.rho).abs()).fold(0.0, f64::max);
    let mut ver = Verification::new();
    ver.check("astigmatism_analytic", dev, cfg.tol.tol_astig);
    ver.check("astigmatism_finite_difference", dev_fd, cfg.tol.tol_astig_fd);
    ver.check("quadric", quadric, cfg.tol.tol_quadric);
    let h = max_mean_curvature(&fd)?;
    let gc = if sol.is_none() { gauss_codazzi_residual(&mesh.curve, 9).ok() } else { None };
    log::info!("astigmatism deviation {dev:e} (analytic), {dev_fd:e} (finite difference), max |H| {h:e}");

    let mut out = OutDir::create(&cfg.out)?;
    let stem = cfg.stem("surface", &tail);
    if cfg.wants(Format::Obj) {
        let verts: Vec<[f64; 3]> = mesh.vertices.iter().map(|v| project_to_r3(v, cfg.rho)).collect();
        let name = format!("{stem}.obj");
        out.obj(&name, &verts, mesh.ns, mesh.nt, mesh.sweep == Sweep::Rotation)?;
        let sidecar = ProjectionSidecar {
            schema_version: SCHEMA_VERSION,
            mesh: name,
            rho: cfg.rho,
            ambient_dimension: mesh.dim(),
            projection: projection_name(mesh.dim(), cfg.rho),
            up_axis: "y",
        };
        out.json(&format!("{stem}.projection.json"), &sidecar)?;
    }
    if cfg.wants(Format::Csv) {
        out.csv(&format!("{stem}_curvatures.csv"), &CURVATURE_HEADER, curvature_rows(&mesh, &analytic, &fd))?;
    }
    if cfg.wants(Format::Plotdata) {
        let blocks: Vec<Vec<Vec<f64>>> = (0..mesh.ns)
            .map(|i| {
                (0..mesh.nt)
                    .map(|j| {
                        let q = project_to_r3(mesh.vertex(i, j), cfg.rho);
                        vec![q[0], q[1], q[2], analytic.kappa1[i * mesh.nt + j], analytic.kappa2[i * mesh.nt + j]]
                    })
                    .collect()
            })
            .collect();
        out.plotdata(&format!("{stem}.dat"), &["X", "Y", "Z", "kappa1", "kappa2"], &blocks)?;
    }
    let failures = ver.failures();
    let report = SurfaceReport {
        schema_version: SCHEMA_VERSION,
        rho: cfg.rho,
        mu: cfg.mu,
        d,
        cylinder: sol,
        ns: mesh.ns,
        nt: mesh.nt,
        sweep: mesh.sweep,
        astigmatism_deviation: dev,
        astigmatism_deviation_fd: dev_fd,
        max_mean_curvature: h,
        gauss_codazzi_residual: gc,
        orbit_speed_ratio: orbit_speed_ratio(&mesh).ok(),
        verification: ver,
        files: out.written().to_vec(),
    };
    out.json(&format!("{stem}.json"), &report)?;
    finish(failures)
}

const CURVATURE_HEADER: [&str; 9] = ["i", "j", "s", "t", "kappa1", "kappa2", "kappa1_fd", "kappa2_fd", "checked"];

fn curvature_rows<'a>(
    mesh: &'a SurfaceMesh,
    analytic: &'a SurfaceMesh,
    fd: &'a SurfaceMesh,
) -> impl Iterator<Item = Vec<String>> + 'a {
    let mask = mesh.row_mask();
    (0..mesh.ns).flat_map(move |i| {
        let checked = mask[i];
        (0..mesh.nt).map(move |j| {
            let v = i * mesh.nt + j;
            vec![
                i.to_string(),
                j.to_string(),
                mesh.curve.s[i].to_string(),
                mesh.t[j].to_string(),
                analytic.kappa1[v].to_string(),
                analytic.kappa2[v].to_string(),
                fd.kappa1[v].to_string(),
                fd.kappa2[v].to_string(),
                u8::from(checked).to_string(),
            ]
        })
    })
}

#[derive(Debug, Serialize)]
struct SingularPointReport {
    #[serde(flatten)]
    point: SingularPoint,
    level: f64,
}

#[derive(Debug, Serialize)]
struct OrbitReport {
    orbit: usize,
    start: (f64, f64),
    stop: StopReason,
    samples: usize,
    max_drift: f64,
    period: Option<f64>,
}

#[derive(Debug, Serialize)]
struct PhaseReport {
    schema_version: u32,
    rho: f64,
    mu: f64,
    d: Option<f64>,
    singular_points: Vec<SingularPointReport>,
    braid_window: Option<(f64, f64)>,
    orbits: Vec<OrbitReport>,
    verification: Verification,
    files: Vec<String>,
}

/// Starting points of the orbits on the level `F = d`: its crossings of the
/// `x`-axis, or where it meets `x = 2` when it has none.
fn orbit_starts(p: &ModelParams) -> Result<Vec<PhasePoint>> {
    match orbit_x_intersections(p) {
        Ok(t) => Ok(t.roots.iter().map(|&x| PhasePoint { x, y: 0.0 }).collect()),
        Err(GeomError::NoIntersection) => {
            let ModelParams { rho, mu, d, .. } = *p;
            let (x, l) = (2.0f64, 2f64.ln());
            let y2 = (d - (mu * x).powi(2) - rho * ((1.0 - l) * x).powi(2)) / (l * l);
            if y2 < 0.0 {
                return Ok(Vec::new());
            }
            Ok(vec![PhasePoint { x, y: y2.sqrt() }, PhasePoint { x, y: -y2.sqrt() }])
        }
        Err(e) => Err(e.into()),
    }
}

/// `phase`: singular points, and with `d` the traced orbits of that level.
pub fn cmd_phase(cfg: &RunConfig, d: Option<f64>, s_max: f64) -> Result<()> {
    if !s_max.is_finite() || s_max <= 0.0 {
        return Err(CliError::Params(format!("--s-max must be positive (got {s_max})")));
    }
    let (rho, mu) = (cfg.rho, cfg.mu.abs());
    let singular: Vec<SingularPointReport> = singular_points(rho, mu)
        .into_iter()
        .map(|pt| SingularPointReport { level: singular_level(rho, &pt), point: pt })
        .collect();
    for s in &singular {
        log::info!("singular point x = {:.6} ({:?})", s.point.x, s.point.kind);
    }
    let mut out = OutDir::create(&cfg.out)?;
    let tail = d.map(|d| format!("_d{d}")).unwrap_or_default();
    let stem = cfg.stem("phase", &tail);
    let mut ver = Verification::new();
    let mut orbits = Vec::new();
    if let Some(d) = d {
        let p = cfg.params(d)?;
        let mut rows = Vec::new();
        let mut blocks = Vec::new();
        let mut worst = 0.0f64;
        for (k, start) in orbit_starts(&p)?.into_iter().enumerate() {
            let tr = trace_orbit(start, &p, s_max, TraceOptions::default())?;
            worst = worst.max(tr.max_drift);
            let mut block = Vec::new();
            for (s, q) in tr.s.iter().zip(&tr.points) {
                let drift = relative_drift(*q, &p);
                rows.push(vec![k.to_string(), s.to_string(), q.x.to_string(), q.y.to_string(), drift.to_string()]);
                block.push(vec![*s, q.x, q.y, drift]);
            }
            blocks.push(block);
            orbits.push(OrbitReport {
                orbit: k,
                start: (start.x, start.y),
                stop: tr.stop,
                samples: tr.points.len(),
                max_drift: tr.max_drift,
                period: tr.period,
            });
        }
        ver.check("f_drift", worst, cfg.tol.tol_drift);
        if cfg.wants(Format::Csv) {
            out.csv(&format!("{stem}_orbits.csv"), &["orbit", "s", "x", "y", "F_drift"], rows)?;
        }
        if cfg.wants(Format::Plotdata) {
            out.plotdata(&format!("{stem}_orbits.dat"), &["s", "x", "y", "F_drift"], &blocks)?;
        }
    }
    let failures = ver.failures();
    let report = PhaseReport {
        schema_version: SCHEMA_VERSION,
        rho,
        mu: cfg.mu,
        d,
        singular_points: singular,
        braid_window: braid_window(rho, mu),
        orbits,
        verification: ver,
        files: out.written().to_vec(),
    };
    out.json(&format!("{stem}.json"), &report)?;
    finish(failures)
}

#[derive(Debug, Serialize)]
struct SweepRow {
    d: f64,
    components: Vec<ComponentClass>,
    error: Option<String>,
}

/// `sweep`: classification over the `d` grid, computed in parallel and
/// written in grid order.
pub fn cmd_sweep(cfg: &RunConfig, d_min: f64, d_max: f64, d_step: f64, geometry: bool) -> Result<()> {
    let grid = d_grid(d_min, d_max, d_step)?;
    if cfg.rho >= 0.0 && d_min <= 0.0 {
        return Err(CliError::Params(format!("d must be positive when rho >= 0 (d_min = {d_min})")));
    }
    let opts = ClassifyOptions { geometry, n: cfg.n.unwrap_or(400), ..ClassifyOptions::default() };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Params(format!("cannot start {} workers: {e}", cfg.workers)))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        grid.par_iter()
            .map(|&d| match cfg.params(d).and_then(|p| Ok(classify_with(&p, opts)?)) {
                Ok(components) => SweepRow { d, components, error: None },
                Err(e) => SweepRow { d, components: Vec::new(), error: Some(e.to_string()) },
            })
            .collect()
    });
    let errors = rows.iter().filter(|r| r.error.is_some()).count();
    log::info!("classified {} values of d ({errors} errors) on {} workers", rows.len(), pool.current_num_threads());
    let mut out = OutDir::create(&cfg.out)?;
    let stem = cfg.stem("sweep", &format!("_d{d_min}-{d_max}-{d_step}"));
    if cfg.wants(Format::Csv) {
        let mut header = CLASS_HEADER.to_vec();
        header.push("error");
        let table = rows.iter().flat_map(|r| {
            if let Some(e) = &r.error {
                let mut row = vec![String::new(); CLASS_HEADER.len()];
                row[0] = r.d.to_string();
                row.push(e.clone());
                vec![row]
            } else {
                r.components
                    .iter()
                    .map(|c| {
                        let mut row = class_row(r.d, c);
                        row.push(String::new());
                        row
                    })
                    .collect()
            }
        });
        out.csv(&format!("{stem}.csv"), &header, table)?;
    }
    if cfg.wants(Format::Json) {
        #[derive(Serialize)]
        struct SweepReport<'a> {
            schema_version: u32,
            rho: f64,
            mu: f64,
            rows: &'a [SweepRow],
        }
        let report = SweepReport { schema_version: SCHEMA_VERSION, rho: cfg.rho, mu: cfg.mu, rows: &rows };
        out.json(&format!("{stem}.json"), &report)?;
    }
    Ok(())
}
