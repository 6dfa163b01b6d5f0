//! Dormand–Prince 5(4) integrator with step vetoes and located events.

use crate::error::{GeomError, Result};
use crate::numerics::roots::brent;

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Difference between the 5th- and 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-12,
            h_init: 1e-3,
            h_max: 0.05,
            h_min: 1e-14,
            max_steps: 2_000_000,
        }
    }
}

pub type EventFn<'a, const N: usize> = Box<dyn Fn(&[f64; N]) -> f64 + 'a>;

/// Scalar event function `g(y)`; a sign change across an accepted step is
/// located to `1e-13` in the step size.
pub struct Event<'a, const N: usize> {
    pub g: EventFn<'a, N>,
    pub terminal: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct EventHit<const N: usize> {
    pub index: usize,
    pub t: f64,
    pub y: [f64; N],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ReachedEnd,
    Event(usize),
}

#[derive(Debug, Clone)]
pub struct OdeOutput<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub hits: Vec<EventHit<N>>,
    pub termination: Termination,
    pub rejected: usize,
}

/// One Dormand–Prince step. Returns `None` when any stage leaves the domain
/// of `rhs`.
fn dp_step<const N: usize, F>(rhs: &F, t: f64, y: &[f64; N], k1: &[f64; N], h: f64) -> Option<([f64; N], [f64; N], [f64; N])>
where
    F: Fn(f64, &[f64; N]) -> Option<[f64; N]>,
{
    let mut k = [[0.0; N]; 7];
    k[0] = *k1;
    for stage in 1..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(stage) {
            let a = A[stage][j];
            if a != 0.0 {
                for i in 0..N {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        if stage == 6 {
            // FSAL: the seventh stage is evaluated at the new solution.
            let ynew = ys;
            k[6] = rhs(t + h, &ynew)?;
            let mut err = [0.0; N];
            for (s, ks) in k.iter().enumerate() {
                for i in 0..N {
                    err[i] += h * E[s] * ks[i];
                }
            }
            return Some((ynew, err, k[6]));
        }
        k[stage] = rhs(t + C[stage] * h, &ys)?;
    }
    unreachable!()
}

fn error_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], opts: &OdeOptions) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sc = opts.atol + opts.rtol * y0[i].abs().max(y1[i].abs());
        acc += (err[i] / sc).powi(2);
    }
    (acc / N as f64).sqrt()
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t_end > t0`.
///
/// `admissible(y_old, y_new)` may veto an otherwise accurate step; the step
/// is then shrunk, which keeps the solution on one side of a singular set.
pub fn solve<const N: usize, F, V>(
    rhs: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: OdeOptions,
    admissible: V,
    events: &[Event<'_, N>],
) -> Result<OdeOutput<N>>
where
    F: Fn(f64, &[f64; N]) -> Option<[f64; N]>,
    V: Fn(&[f64; N], &[f64; N]) -> bool,
{
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y).ok_or_else(|| GeomError::Domain(format!("initial state {y:?} outside the vector field domain")))?;
    let mut h = opts.h_init.min(opts.h_max).min(t_end - t0);
    let mut out = OdeOutput {
        t: vec![t],
        y: vec![y],
        hits: Vec::new(),
        termination: Termination::ReachedEnd,
        rejected: 0,
    };
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.g)(&y)).collect();

    for _ in 0..opts.max_steps {
        if t >= t_end {
            return Ok(out);
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let attempt = dp_step(&rhs, t, &y, &k1, h);
        let accepted = match attempt {
            Some((ynew, err, knew)) if ynew.iter().all(|v| v.is_finite()) && admissible(&y, &ynew) => {
                let en = error_norm(&err, &y, &ynew, &opts);
                if en <= 1.0 {
                    Some((ynew, knew, en))
                } else {
                    h *= (0.9 * en.powf(-0.2)).max(0.2);
                    None
                }
            }
            _ => {
                h *= 0.25;
                None
            }
        };
        let Some((ynew, knew, en)) = accepted else {
            out.rejected += 1;
            if h < opts.h_min {
                return Err(GeomError::StepUnderflow { s: t, x: y[0] });
            }
            continue;
        };

        // Event location inside [t, t+h].
        let g_new: Vec<f64> = events.iter().map(|e| (e.g)(&ynew)).collect();
        let mut earliest: Option<(f64, usize)> = None;
        for (idx, ev) in events.iter().enumerate() {
            let (ga, gb) = (g_prev[idx], g_new[idx]);
            if ga == 0.0 || ga.signum() == gb.signum() {
                continue;
            }
            let root = brent(
                |hh| match dp_step(&rhs, t, &y, &k1, hh) {
                    Some((yy, _, _)) => (ev.g)(&yy),
                    None => gb,
                },
                0.0,
                h,
                1e-13 * h.max(1e-300),
                200,
            )
            .unwrap_or(h);
            if earliest.is_none_or(|(r, _)| root < r) {
                earliest = Some((root, idx));
            }
        }

        if let Some((hh, idx)) = earliest {
            let yy = if hh >= h {
                ynew
            } else {
                dp_step(&rhs, t, &y, &k1, hh).map(|r| r.0).unwrap_or(ynew)
            };
            out.hits.push(EventHit { index: idx, t: t + hh, y: yy });
            if events[idx].terminal {
                out.t.push(t + hh);
                out.y.push(yy);
                out.termination = Termination::Event(idx);
                return Ok(out);
            }
        }

        t = if last { t_end } else { t + h };
        y = ynew;
        k1 = knew;
        g_prev = g_new;
        out.t.push(t);
        out.y.push(y);

        let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * fac).min(opts.h_max);
    }
    Err(GeomError::NonConvergence(format!(
        "ode: exceeded {} steps at t = {t}",
        opts.max_steps
    )))
}
