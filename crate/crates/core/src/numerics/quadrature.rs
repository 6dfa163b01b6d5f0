//! Globally adaptive Gauss–Kronrod (7/15) quadrature and the endpoint
//! substitutions used for the half-curve integrals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{GeomError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss 7-point weights, attached to XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Requested accuracy for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadTol {
    pub abs: f64,
    pub rel: f64,
    pub max_panels: usize,
}

impl Default for QuadTol {
    fn default() -> Self {
        Self {
            abs: 1e-13,
            rel: 1e-12,
            max_panels: 4000,
        }
    }
}

impl QuadTol {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let mut err = ((kronrod - gauss) * half).abs();
    // A Kronrod–Gauss difference at rounding level of the panel's own
    // magnitude cannot be reduced by splitting.
    if err <= 50.0 * f64::EPSILON * value.abs() {
        err = 0.0;
    }
    (value, err)
}

/// Integrates `f` over `[a, b]` (either orientation). Nodes never touch the
/// endpoints, so integrable endpoint singularities are tolerated, although
/// convergence is slow unless they are removed by a substitution first.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: QuadTol) -> Result<Integral> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            evals: 0,
        });
    }
    let (value, error) = gk15(&f, a, b);
    let mut evals = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut total = value;
    let mut total_err = error;

    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(GeomError::Quadrature {
                achieved: f64::INFINITY,
                requested: tol.abs,
            });
        }
        let target = tol.abs.max(tol.rel * total.abs());
        if total_err <= target {
            break;
        }
        if heap.len() >= tol.max_panels {
            return Err(GeomError::Quadrature {
                achieved: total_err,
                requested: target,
            });
        }
        let worst = heap.pop().expect("heap never empty");
        if worst.error == 0.0 {
            heap.push(worst);
            break;
        }
        let mid = 0.5 * (worst.a + worst.b);
        if mid == worst.a || mid == worst.b {
            // Panel cannot be split further in double precision.
            heap.push(Panel {
                error: 0.0,
                ..worst
            });
            total_err -= worst.error;
            continue;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        evals += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }

    // Re-sum to shed the drift of the running total.
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    Ok(Integral {
        value,
        error,
        evals,
    })
}

/// `∫_a^b g(r) dr` for `g` with an inverse-square-root singularity at the
/// upper endpoint `b`, via `r = b − w²`.
pub fn integrate_inv_sqrt_upper<G: Fn(f64) -> f64>(
    g: G,
    a: f64,
    b: f64,
    tol: QuadTol,
) -> Result<Integral> {
    debug_assert!(a <= b);
    let w_max = (b - a).sqrt();
    integrate(|w| 2.0 * w * g(b - w * w), 0.0, w_max, tol)
}

/// `∫_a^b g(r) dr` with the inverse-square-root singularity at `a`,
/// via `r = a + w²`.
pub fn integrate_inv_sqrt_lower<G: Fn(f64) -> f64>(
    g: G,
    a: f64,
    b: f64,
    tol: QuadTol,
) -> Result<Integral> {
    debug_assert!(a <= b);
    let w_max = (b - a).sqrt();
    integrate(|w| 2.0 * w * g(a + w * w), 0.0, w_max, tol)
}

/// `∫_a^∞ g(r) dr` via `r = a + t/(1 − t)`.
pub fn integrate_to_infinity<G: Fn(f64) -> f64>(g: G, a: f64, tol: QuadTol) -> Result<Integral> {
    integrate(
        |t| {
            let one_minus = 1.0 - t;
            let r = a + t / one_minus;
            let v = g(r) / (one_minus * one_minus);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}
