//! Finite-difference weights on arbitrary grids (Fornberg's recursion) and
//! grid-wide derivative helpers.

use crate::error::{GeomError, Result};

/// Weights `w[k][j]` such that `f^(k)(z) ≈ Σ_j w[k][j]·f(x_j)` for
/// `k = 0..=m`.
pub fn fornberg(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Derivative of order `k` of samples `f` on the strictly increasing grid
/// `s`, at every sample, using `width`-point stencils kept inside each
/// segment `[seg_start, seg_end)`. Stencils slide inward at segment edges.
pub fn grid_derivative(s: &[f64], f: &[f64], k: usize, width: usize, segments: &[(usize, usize)]) -> Result<Vec<f64>> {
    if s.len() != f.len() {
        return Err(GeomError::DimensionMismatch(s.len(), f.len()));
    }
    let mut out = vec![f64::NAN; s.len()];
    for &(a, b) in segments {
        let len = b - a;
        if len < width {
            return Err(GeomError::TooFewSamples { needed: width, got: len });
        }
        for i in a..b {
            let lo = i.saturating_sub(width / 2).max(a).min(b - width);
            let xs = &s[lo..lo + width];
            let w = fornberg(s[i], xs, k);
            out[i] = w[k].iter().zip(&f[lo..lo + width]).map(|(w, v)| w * v).sum();
        }
    }
    Ok(out)
}

/// First and second derivatives of `f` with respect to `s`, where both are
/// sampled on a grid that is uniform in the sample index but possibly graded
/// in `s`. Differentiates in the index and applies the chain rule, which
/// stays accurate where `s` itself is a non-smooth function of position
/// along the curve (near peaks) but the index is not.
pub fn chain_rule_derivatives(
    s: &[f64],
    f: &[f64],
    segments: &[(usize, usize)],
    width: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    chain_rule_derivatives_offset(s, None, f, segments, width)
}

/// [`chain_rule_derivatives`] where each stencil may use a shifted copy of
/// `s` (`offset[i] = s[i] − s_ref`, NaN where unavailable). A stencil whose
/// offsets are all finite and of one sign uses them instead of `s`; this
/// avoids the cancellation in `s[i] − s[j]` close to `s_ref`.
pub fn chain_rule_derivatives_offset(
    s: &[f64],
    offset: Option<&[f64]>,
    f: &[f64],
    segments: &[(usize, usize)],
    width: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if s.len() != f.len() {
        return Err(GeomError::DimensionMismatch(s.len(), f.len()));
    }
    let mut d1 = vec![f64::NAN; s.len()];
    let mut d2 = vec![f64::NAN; s.len()];
    for_each_stencil(s, offset, segments, width, |i, lo, w, base| {
        let apply = |k: usize, v: &[f64]| -> f64 { w[k].iter().zip(v).map(|(w, v)| w * v).sum() };
        let fs = &f[lo..lo + width];
        let (f1, f2, s1, s2) = (apply(1, fs), apply(2, fs), apply(1, base), apply(2, base));
        d1[i] = f1 / s1;
        d2[i] = (f2 - d1[i] * s2) / (s1 * s1);
    })?;
    Ok((d1, d2))
}

/// `ds/di`, the derivative of `s` with respect to the sample index, with
/// the same offset handling as [`chain_rule_derivatives_offset`].
pub fn index_speed(s: &[f64], offset: Option<&[f64]>, segments: &[(usize, usize)], width: usize) -> Result<Vec<f64>> {
    let mut out = vec![f64::NAN; s.len()];
    for_each_stencil(s, offset, segments, width, |i, _, w, base| {
        out[i] = w[1].iter().zip(base).map(|(w, v)| w * v).sum();
    })?;
    Ok(out)
}

/// Calls `visit(i, lo, weights, base)` for every sample, where
/// `weights[k]` differentiates `k` times in the index over the stencil
/// starting at `lo`, and `base` is the stencil's slice of `s` or `offset`.
fn for_each_stencil<V: FnMut(usize, usize, &[Vec<f64>], &[f64])>(
    s: &[f64],
    offset: Option<&[f64]>,
    segments: &[(usize, usize)],
    width: usize,
    mut visit: V,
) -> Result<()> {
    if let Some(o) = offset {
        if o.len() != s.len() {
            return Err(GeomError::DimensionMismatch(s.len(), o.len()));
        }
    }
    for &(a, b) in segments {
        let len = b - a;
        if len < width {
            return Err(GeomError::TooFewSamples { needed: width, got: len });
        }
        for i in a..b {
            let lo = i.saturating_sub(width / 2).max(a).min(b - width);
            let idx: Vec<f64> = (lo..lo + width).map(|j| j as f64).collect();
            let w = fornberg(i as f64, &idx, 2);
            let plain = &s[lo..lo + width];
            let base = match offset {
                Some(o) => {
                    let st = &o[lo..lo + width];
                    let finite = st.iter().all(|v| v.is_finite());
                    let pos = st.iter().all(|v| *v > 0.0);
                    let neg = st.iter().all(|v| *v < 0.0);
                    if finite && (pos || neg) {
                        st
                    } else {
                        plain
                    }
                }
                None => plain,
            };
            visit(i, lo, &w, base);
        }
    }
    Ok(())
}

/// Centered weights of the given even `width` for derivative `k` on a unit
/// uniform grid.
pub fn central_weights(k: usize, width: usize) -> Vec<f64> {
    let half = (width / 2) as f64;
    let xs: Vec<f64> = (0..width).map(|j| j as f64 - half).collect();
    fornberg(0.0, &xs, k).swap_remove(k)
}

/// Derivative of order `k` of a periodic sequence sampled at spacing `h`.
pub fn periodic_derivative(f: &[f64], h: f64, k: usize, width: usize) -> Vec<f64> {
    let n = f.len();
    let w = central_weights(k, width);
    let half = width / 2;
    let scale = h.powi(k as i32);
    (0..n)
        .map(|i| {
            w.iter()
                .enumerate()
                .map(|(j, wj)| wj * f[(i + n + j - half) % n])
                .sum::<f64>()
                / scale
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_central_weights() {
        let w = central_weights(2, 3);
        assert!((w[0] - 1.0).abs() < 1e-14 && (w[1] + 2.0).abs() < 1e-14 && (w[2] - 1.0).abs() < 1e-14);
        let w = central_weights(1, 9);
        assert!((w[8] + 1.0 / 280.0).abs() < 1e-14);
        assert!((w[5] - 0.8).abs() < 1e-14);
    }

    #[test]
    fn nonuniform_second_derivative_exact_for_quartic() {
        let s: Vec<f64> = (0..40).map(|i| (i as f64 / 39.0).powi(2)).collect();
        let f: Vec<f64> = s.iter().map(|x| x.powi(4) - x).collect();
        let d2 = grid_derivative(&s, &f, 2, 5, &[(0, s.len())]).unwrap();
        for (x, v) in s.iter().zip(&d2) {
            assert!((v - 12.0 * x * x).abs() < 1e-8, "{x} {v}");
        }
    }

    #[test]
    fn chain_rule_on_square_root_grid() {
        // s = q², f = sin(q) = sin(√s): smooth in q, singular in s at 0.
        let q: Vec<f64> = (0..200).map(|i| 0.01 + i as f64 * 0.005).collect();
        let s: Vec<f64> = q.iter().map(|v| v * v).collect();
        let f: Vec<f64> = q.iter().map(|v| v.sin()).collect();
        let (d1, d2) = chain_rule_derivatives(&s, &f, &[(0, s.len())], 7).unwrap();
        for i in 0..q.len() {
            let r = q[i];
            let e1 = r.cos() / (2.0 * r);
            let e2 = -r.sin() / (4.0 * r * r) - r.cos() / (4.0 * r.powi(3));
            assert!((d1[i] - e1).abs() < 1e-7 * e1.abs().max(1.0));
            assert!((d2[i] - e2).abs() < 1e-6 * e2.abs().max(1.0), "{i} {} {e2}", d2[i]);
        }
    }

    #[test]
    fn periodic_sine() {
        let n = 64;
        let h = std::f64::consts::TAU / n as f64;
        let f: Vec<f64> = (0..n).map(|i| (i as f64 * h).sin()).collect();
        let d = periodic_derivative(&f, h, 1, 9);
        for (i, v) in d.iter().enumerate() {
            assert!((v - (i as f64 * h).cos()).abs() < 1e-9);
        }
    }
}
