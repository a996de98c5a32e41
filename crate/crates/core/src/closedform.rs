//! Closed-form rank-1 bounds.
//!
//! A rank-1 pair `(x, z)` is described up to rotation by its length ratio
//! `ρ = ‖x‖/‖z‖` and incidence angle `φ`. From these,
//!
//! ```text
//! α = sin²φ / D,   β = ρ² / D,   D = √((ρ² − 1)² + 2ρ² sin²φ)
//! ```
//!
//! and the lower bound `δ_lb` on `δ(x, z)` has one of two closed forms
//! depending on which side of `β = α/(1 + √(1 − α²))` the pair falls.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::linalg::Vector;

/// `(√5 − 1)/2`, the largest admissible neighbourhood radius.
pub const GOLDEN_EPS: f64 = 0.618_033_988_749_894_9;

const REGION_TOL: f64 = 1e-12;
const DEGENERATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarParams {
    pub rho: f64,
    /// Radians, in `[0, π]`.
    pub phi: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl PolarParams {
    /// Builds the parameters from `ρ ≥ 0` and `φ ∈ [0, π]` (radians).
    pub fn from_polar(rho: f64, phi: f64) -> Result<Self> {
        if !rho.is_finite() || rho < 0.0 {
            return Err(Error::input(format!("length ratio must be finite and non-negative, got {rho}")));
        }
        if !phi.is_finite() || !(0.0..=std::f64::consts::PI).contains(&phi) {
            return Err(Error::input(format!("incidence angle must lie in [0, π], got {phi}")));
        }
        let s2 = phi.sin().powi(2);
        let r2 = rho * rho;
        let denom = ((r2 - 1.0).powi(2) + 2.0 * r2 * s2).sqrt();
        if denom <= DEGENERATE_TOL {
            return Err(Error::NotSpurious);
        }
        Ok(Self { rho, phi, alpha: (s2 / denom).min(1.0), beta: r2 / denom })
    }

    /// Same as [`from_polar`](Self::from_polar) with `φ` in degrees.
    pub fn from_degrees(rho: f64, phi_deg: f64) -> Result<Self> {
        Self::from_polar(rho, phi_deg.to_radians())
    }

    /// `α/(1 + √(1 − α²))`, the value of `β` separating the two regions.
    pub fn boundary_beta(&self) -> f64 {
        self.alpha / (1.0 + (1.0 - self.alpha * self.alpha).sqrt())
    }

    pub fn region(&self) -> Region {
        let b = self.boundary_beta();
        if self.beta - b >= -REGION_TOL * b.abs().max(1.0) {
            Region::A
        } else {
            Region::B
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Minimum of `Ψ` at `γ = 0`.
    A,
    /// Minimum of `Ψ` in the interior of `[0, α]`.
    B,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdReport {
    pub delta_lb: f64,
    pub region: Region,
    /// `min Ψ` over `[0, α]`.
    pub eta_ub: f64,
    pub gamma_star: f64,
}

/// Polar parameters of a vector pair.
pub fn polar_params(x: &Vector, z: &Vector) -> Result<PolarParams> {
    if x.len() != z.len() {
        return Err(Error::dim(format!("x has length {}, z has length {}", x.len(), z.len())));
    }
    if x.iter().chain(z.iter()).any(|v| !v.is_finite()) {
        return Err(Error::input("non-finite entry"));
    }
    let nz = z.norm();
    if nz == 0.0 {
        return Err(Error::input("ground truth z must be nonzero"));
    }
    let nx = x.norm();
    let phi = if nx == 0.0 { FRAC_PI_2 } else { (x.dot(z) / (nx * nz)).clamp(-1.0, 1.0).acos() };
    PolarParams::from_polar(nx / nz, phi)
}

/// The pair `x = (ρ cos φ, ρ sin φ)`, `z = (1, 0)` with the given polar
/// parameters.
pub fn canonical_pair(rho: f64, phi: f64) -> (Vector, Vector) {
    (Vector::from_vec(vec![rho * phi.cos(), rho * phi.sin()]), Vector::from_vec(vec![1.0, 0.0]))
}

/// Lower bound `δ_lb(x, z) ≤ δ(x, z)`.
pub fn delta_lower(p: &PolarParams) -> ThresholdReport {
    let (a, b) = (p.alpha, p.beta);
    let region = p.region();
    let delta_lb = match region {
        Region::A => (1.0 - a * a).sqrt(),
        Region::B => (1.0 - 2.0 * a * b + b * b) / (1.0 - b * b),
    };
    let delta_lb = delta_lb.clamp(0.0, 1.0);
    let gamma_star = match region {
        Region::A => 0.0,
        Region::B => argmin_big_psi(p),
    };
    ThresholdReport { delta_lb, region, eta_ub: (1.0 - delta_lb) / (1.0 + delta_lb), gamma_star }
}

/// `ψ(γ) = γα + √(1 − γ²)√(1 − α²)`.
pub fn psi(gamma: f64, alpha: f64) -> Result<f64> {
    unit_range("gamma", gamma)?;
    unit_range("alpha", alpha)?;
    Ok(psi_unchecked(gamma, alpha))
}

fn psi_unchecked(gamma: f64, alpha: f64) -> f64 {
    gamma * alpha + (1.0 - gamma * gamma).max(0.0).sqrt() * (1.0 - alpha * alpha).max(0.0).sqrt()
}

/// `Ψ(γ) = (2βγ + 1 − ψ(γ)) / (1 + ψ(γ))` for `γ ∈ [0, α]`.
pub fn big_psi(gamma: f64, p: &PolarParams) -> Result<f64> {
    if !gamma.is_finite() || gamma < 0.0 || gamma > p.alpha {
        return Err(Error::input(format!("gamma must lie in [0, {}], got {gamma}", p.alpha)));
    }
    Ok(big_psi_unchecked(gamma, p))
}

fn big_psi_unchecked(gamma: f64, p: &PolarParams) -> f64 {
    let s = psi_unchecked(gamma, p.alpha);
    (2.0 * p.beta * gamma + 1.0 - s) / (1.0 + s)
}

// Golden-section search; Ψ is quasiconvex on [0, α].
fn argmin_big_psi(p: &PolarParams) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, p.alpha);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (big_psi_unchecked(c, p), big_psi_unchecked(d, p));
    for _ in 0..200 {
        if hi - lo <= 1e-15 {
            break;
        }
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = big_psi_unchecked(c, p);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = big_psi_unchecked(d, p);
        }
    }
    0.5 * (lo + hi)
}

/// `δ = (1 − η)/(1 + η)`.
pub fn eta_to_delta(eta: f64) -> Result<f64> {
    unit_range("eta", eta)?;
    Ok((1.0 - eta) / (1.0 + eta))
}

/// RIP level below which no spurious local minimum lies within relative
/// distance `ε` of the ground truth: `√(1 − ε²/(2(1 − ε)))`.
pub fn local_threshold(eps: f64) -> Result<f64> {
    if !eps.is_finite() || !(0.0..=GOLDEN_EPS).contains(&eps) {
        return Err(Error::input(format!("eps must lie in [0, (√5−1)/2], got {eps}")));
    }
    Ok((1.0 - eps * eps / (2.0 * (1.0 - eps))).sqrt())
}

/// Sublevel radius `min{√(1 − δ²), (√5 − 1)/2}` for `0 ≤ δ < 1`.
pub fn sublevel_epsilon(delta: f64) -> Result<f64> {
    if !delta.is_finite() || !(0.0..1.0).contains(&delta) {
        return Err(Error::input(format!("delta must lie in [0, 1), got {delta}")));
    }
    Ok((1.0 - delta * delta).sqrt().min(GOLDEN_EPS))
}

fn unit_range(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::input(format!("{name} must lie in [0, 1], got {v}")))
    }
}
