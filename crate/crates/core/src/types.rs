//! Parameters, phase and ambient points, the `x ↔ κ` coordinate change and
//! the embedding of the model surface into affine space.

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};

/// `(ρ, μ, d)` with `μ` normalized to be positive.
///
/// Critical curves for `−μ` are those for `μ` with the orientation reversed,
/// so a negative input is flipped once here and `flipped` remembers it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub rho: f64,
    pub mu: f64,
    pub d: f64,
    pub flipped: bool,
}

impl ModelParams {
    pub fn new(rho: f64, mu: f64, d: f64) -> Result<Self> {
        if !(rho.is_finite() && mu.is_finite() && d.is_finite()) {
            return Err(GeomError::InvalidParams(format!(
                "non-finite input rho={rho}, mu={mu}, d={d}"
            )));
        }
        if mu == 0.0 {
            return Err(GeomError::InvalidParams("mu must be nonzero".into()));
        }
        if rho >= 0.0 && d <= 0.0 {
            return Err(GeomError::InvalidParams(format!(
                "d must be positive when rho >= 0 (got d = {d})"
            )));
        }
        Ok(Self {
            rho,
            mu: mu.abs(),
            d,
            flipped: mu < 0.0,
        })
    }

    /// Astigmatism constant `c = 1/μ` of the normalized orientation.
    pub fn c(&self) -> f64 {
        1.0 / self.mu
    }

    /// `μ` as originally supplied.
    pub fn signed_mu(&self) -> f64 {
        if self.flipped {
            -self.mu
        } else {
            self.mu
        }
    }

    pub fn with_d(&self, d: f64) -> Result<Self> {
        Self::new(self.rho, self.signed_mu(), d)
    }

    pub fn signature(&self) -> Signature {
        Signature::of(self.rho)
    }
}

/// `(x, y)` with `x = e^{μ/κ}` and `y = dx/ds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub y: f64,
}

impl PhasePoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x > 0.0) || x == 1.0 || !x.is_finite() || !y.is_finite() {
            return Err(GeomError::Domain(format!(
                "phase point requires x > 0, x != 1 (got x = {x}, y = {y})"
            )));
        }
        Ok(Self { x, y })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signature {
    Euclidean,
    Spherical,
    /// Minus sign on the third coordinate.
    Lorentzian,
}

impl Signature {
    pub fn of(rho: f64) -> Self {
        if rho > 0.0 {
            Signature::Spherical
        } else if rho < 0.0 {
            Signature::Lorentzian
        } else {
            Signature::Euclidean
        }
    }

    fn sign(self, i: usize) -> f64 {
        if self == Signature::Lorentzian && i == 2 {
            -1.0
        } else {
            1.0
        }
    }
}

/// A point of the ambient affine space, 3 or 4 coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmbientPoint {
    pub coords: [f64; 4],
    pub dim: usize,
    pub signature: Signature,
}

impl AmbientPoint {
    pub fn new3(c: [f64; 3], signature: Signature) -> Self {
        Self {
            coords: [c[0], c[1], c[2], 0.0],
            dim: 3,
            signature,
        }
    }

    pub fn new4(coords: [f64; 4], signature: Signature) -> Self {
        Self {
            coords,
            dim: 4,
            signature,
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    /// `⟨p, p⟩ − 1/ρ` in the signature metric; zero for Euclidean points,
    /// which are not constrained to a quadric.
    pub fn quadric_residual(&self, rho: f64) -> f64 {
        if self.signature == Signature::Euclidean || rho == 0.0 {
            return 0.0;
        }
        let q: f64 = self
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, v)| self.signature.sign(i) * v * v)
            .sum();
        q - 1.0 / rho
    }
}

/// `κ = μ / log x`.
pub fn kappa_from_x(x: f64, mu: f64) -> Result<f64> {
    if !(x > 0.0) || x == 1.0 || !x.is_finite() {
        return Err(GeomError::Domain(format!(
            "kappa_from_x needs x > 0 and x != 1 (got {x})"
        )));
    }
    Ok(mu / x.ln())
}

/// `x = e^{μ/κ}`; `x → 1` as `|κ| → ∞`.
pub fn x_from_kappa(kappa: f64, mu: f64) -> Result<f64> {
    if kappa == 0.0 || !kappa.is_finite() {
        return Err(GeomError::Domain(format!(
            "x_from_kappa needs finite nonzero kappa (got {kappa})"
        )));
    }
    Ok((mu / kappa).exp())
}

/// Embedding `φ(u, v)` of the model surface of curvature ρ, normalized so
/// that the image lies on `⟨X, X⟩ = 1/ρ` and the reconstructed curve has
/// unit speed.
///
/// The last two components carry a factor `1/√|ρ|`, which is 1 at `ρ = 1`.
pub fn embed_phi(u: f64, v: f64, params: &ModelParams) -> Result<AmbientPoint> {
    let ModelParams { rho, d, .. } = *params;
    let sig = Signature::of(rho);
    if rho == 0.0 {
        let sd = d.sqrt();
        return Ok(AmbientPoint::new3([u / sd, sd * v, 0.0], sig));
    }
    let rest = d - rho * u * u;
    if rest < 0.0 || d <= 0.0 {
        return Err(GeomError::Domain(format!(
            "embed_phi: rho*u^2 = {} exceeds d = {d}",
            rho * u * u
        )));
    }
    let amp = (rest / (d * rho.abs())).sqrt();
    let w = (rho.abs() * d).sqrt() * v;
    let (a, b) = if rho > 0.0 {
        (w.sin(), w.cos())
    } else {
        (w.sinh(), w.cosh())
    };
    Ok(AmbientPoint::new3([u / d.sqrt(), amp * a, amp * b], sig))
}

/// Inner product of tangent vectors in the ambient metric of curvature ρ:
/// Euclidean for `ρ ≥ 0`, minus sign on the third slot for `ρ < 0`.
pub fn metric_dot(a: &[f64], b: &[f64], rho: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(GeomError::DimensionMismatch(a.len(), b.len()));
    }
    let sig = Signature::of(rho);
    Ok(a.iter()
        .zip(b)
        .enumerate()
        .map(|(i, (x, y))| sig.sign(i) * x * y)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kappa_examples() {
        assert!((kappa_from_x(std::f64::consts::E, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((kappa_from_x(std::f64::consts::E.powi(2), 1.0).unwrap() - 0.5).abs() < 1e-15);
        let k = kappa_from_x(0.5, 2.0).unwrap();
        assert!((k - -2.885_390_081_777_926_8).abs() < 1e-14);
        assert!(kappa_from_x(1.0, 1.0).is_err());
        assert!(kappa_from_x(-0.5, 1.0).is_err());
    }

    #[test]
    fn x_examples() {
        assert!((x_from_kappa(1.3, 1.3).unwrap() - std::f64::consts::E).abs() < 1e-15);
        assert!((x_from_kappa(-1.0, 1.0).unwrap() - 0.367_879_441_171_442_3).abs() < 1e-15);
        assert!((x_from_kappa(1e12, 1.0).unwrap() - 1.0).abs() < 1e-11);
        assert!(x_from_kappa(0.0, 1.0).is_err());
    }

    #[test]
    fn round_trip_grid() {
        for i in 0..=400 {
            let x = 10f64.powf(-2.0 + 4.0 * i as f64 / 400.0);
            if (x - 1.0).abs() < 1e-9 {
                continue;
            }
            let back = x_from_kappa(kappa_from_x(x, 0.7).unwrap(), 0.7).unwrap();
            assert!((back / x - 1.0).abs() < 1e-12, "{x}");
        }
    }

    #[test]
    fn poles_of_the_models() {
        let p = embed_phi(0.0, 0.0, &ModelParams::new(1.0, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(p.as_slice(), &[0.0, 0.0, 1.0]);
        assert!(p.quadric_residual(1.0).abs() < 1e-15);
        let h = embed_phi(0.0, 0.0, &ModelParams::new(-1.0, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(h.as_slice(), &[0.0, 0.0, 1.0]);
        assert!(h.quadric_residual(-1.0).abs() < 1e-15);
    }

    #[test]
    fn embed_rejects_points_off_the_model() {
        let p = ModelParams::new(2.0, 1.0, 3.0).unwrap();
        assert!(embed_phi(1.3, 0.0, &p).is_err());
    }

    #[test]
    fn metric_examples() {
        assert_eq!(metric_dot(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0], -1.0).unwrap(), 1.0);
        assert_eq!(metric_dot(&[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0], -1.0).unwrap(), -1.0);
        assert_eq!(metric_dot(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], 0.0).unwrap(), 32.0);
        assert_eq!(metric_dot(&[0.0, 0.0, 1.0, 2.0], &[0.0, 0.0, 1.0, 2.0], -1.0).unwrap(), 3.0);
        assert!(metric_dot(&[1.0], &[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn negative_mu_is_normalized() {
        let p = ModelParams::new(1.0, -0.4, 2.0).unwrap();
        assert!(p.flipped && p.mu == 0.4 && p.signed_mu() == -0.4);
        assert!(ModelParams::new(1.0, 0.6, -1.0).is_err());
        assert!(ModelParams::new(0.0, 0.0, 1.0).is_err());
        assert!(ModelParams::new(-1.0, 1.0, -1.0).is_ok());
    }

    proptest! {
        #[test]
        fn quadric_membership(u in -1.0f64..1.0, v in -20.0f64..20.0, rho in prop_oneof![Just(2.0), Just(-1.0), Just(-3.5), Just(0.25)]) {
            let d = 3.0;
            prop_assume!(rho * u * u < d);
            let p = embed_phi(u, v, &ModelParams::new(rho, 1.0, d).unwrap()).unwrap();
            let scale = p.as_slice().iter().map(|c| c * c).sum::<f64>().max(1.0);
            prop_assert!(p.quadric_residual(rho).abs() < 1e-12 * scale);
            if rho < 0.0 {
                prop_assert!(p.coords[2] > 0.0);
            }
        }

        #[test]
        fn periodic_in_v_on_the_sphere(u in -1.2f64..1.2, v in -5.0f64..5.0) {
            let params = ModelParams::new(2.0, 0.3, 3.0).unwrap();
            let period = std::f64::consts::TAU / (2.0f64 * 3.0).sqrt();
            let a = embed_phi(u, v, &params).unwrap();
            let b = embed_phi(u, v + period, &params).unwrap();
            for i in 0..3 {
                prop_assert!((a.coords[i] - b.coords[i]).abs() < 1e-12);
            }
        }
    }
}
