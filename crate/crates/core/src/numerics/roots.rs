//! Bracketed scalar root finding (Brent–Dekker).

use crate::error::{GeomError, Result};

/// Finds a root of `f` in `[a, b]` given a sign change. Converges when the
/// bracket is narrower than `xtol + 4·ε·|x|`.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<f64> {
    let mut a = a;
    let mut b = b;
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(GeomError::Bracket { lo: a, hi: b });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(GeomError::NonConvergence(format!(
                "non-finite function value at x = {b}"
            )));
        }
    }
    Err(GeomError::NonConvergence(format!(
        "brent: {max_iter} iterations without meeting tolerance {xtol:e}"
    )))
}

/// Expands `hi` geometrically from `lo` until `f` changes sign, up to `limit`.
pub fn expand_upper<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    mut hi: f64,
    limit: f64,
) -> Result<(f64, f64)> {
    let flo = f(lo);
    let start = hi;
    while hi <= limit {
        if f(hi).signum() != flo.signum() {
            return Ok((lo, hi));
        }
        hi = lo + 2.0 * (hi - lo);
    }
    Err(GeomError::Bracket { lo, hi: start.max(limit) })
}
