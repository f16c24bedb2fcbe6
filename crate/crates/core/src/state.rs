//! Gaussian reduced-state algebra.
//!
//! A pure two-mode Gaussian wavefunction is stored as the complex
//! quadratic form of its exponent. Tracing out the second oscillator
//! leaves a single-mode Gaussian mixed state that is fully described by
//! three real dimensionless parameters (X, Y, Z); thermal states of the
//! bare oscillator occupy the curve (coth(bw), 0, -csch(bw)) in that
//! space. Everything here works in canonical units hbar = k_B = m = 1.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default tolerance applied to both thermality residual components.
pub const DEFAULT_THERMALITY_TOL: f64 = 1e-8;

/// Complex coefficients of an undisplaced two-mode Gaussian pure state
/// `psi(x1, x2) ~ exp(-(a11 x1^2 + a22 x2^2 + 2 a12 x1 x2) / 2)`.
///
/// Normalizability requires positive real parts on the diagonal and
/// `2 Re(a11) Re(a22) > Re(a12^2)`; construction enforces this.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticForm {
    a11: Complex64,
    a22: Complex64,
    a12: Complex64,
}

impl QuadraticForm {
    pub fn new(a11: Complex64, a22: Complex64, a12: Complex64) -> Result<Self> {
        if !(a11.re > 0.0 && a22.re > 0.0) {
            return Err(Error::InvalidState(format!(
                "diagonal coefficients need positive real parts, got Re(a11) = {}, Re(a22) = {}",
                a11.re, a22.re
            )));
        }
        if 2.0 * a11.re * a22.re <= (a12 * a12).re {
            return Err(Error::InvalidState(format!(
                "off-diagonal coupling too strong: 2 Re(a11) Re(a22) = {} <= Re(a12^2) = {}",
                2.0 * a11.re * a22.re,
                (a12 * a12).re
            )));
        }
        Ok(Self { a11, a22, a12 })
    }

    /// Uncoupled two-mode ground state at frequency `omega`.
    pub fn ground(omega: f64) -> Self {
        Self {
            a11: Complex64::new(omega, 0.0),
            a22: Complex64::new(omega, 0.0),
            a12: Complex64::new(0.0, 0.0),
        }
    }

    pub fn a11(&self) -> Complex64 {
        self.a11
    }

    pub fn a22(&self) -> Complex64 {
        self.a22
    }

    pub fn a12(&self) -> Complex64 {
        self.a12
    }
}

/// The three real dimensionless parameters of a single-mode Gaussian
/// reduced density matrix. States obtained by reduction of a pure
/// global Gaussian always have `z <= 0` and `x + z > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl RVector {
    /// Ground state of the bare oscillator.
    pub const GROUND: RVector = RVector {
        x: 1.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Componentwise distance in the infinity norm.
    pub fn max_abs_diff(&self, other: &RVector) -> f64 {
        (self.x - other.x)
            .abs()
            .max((self.y - other.y).abs())
            .max((self.z - other.z).abs())
    }
}

/// Symmetrized second moments of a single-mode Gaussian state.
///
/// The off-diagonal entry is `(<xp> + <px>)/2`; the constant
/// imaginary commutator part carries no state information and is
/// never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleModeCovariance {
    pub sxx: f64,
    pub spp: f64,
    pub sxp: f64,
}

/// Reduces a pure two-mode Gaussian to the (X, Y, Z) parameters of
/// oscillator 1: `X + iY = (a11 - a12^2 / (2 Re a22)) / omega`,
/// `Z = -|a12|^2 / (2 Re a22) / omega`.
pub fn reduce_to_r(q: &QuadraticForm, omega: f64) -> Result<RVector> {
    if omega <= 0.0 {
        return Err(Error::Domain(format!("omega must be positive, got {omega}")));
    }
    let denom = 2.0 * q.a22.re;
    let w = (q.a11 - q.a12 * q.a12 / denom) / omega;
    let z = -q.a12.norm_sqr() / denom / omega;
    Ok(RVector::new(w.re, w.im, z))
}

/// Thermal state of the bare oscillator at inverse temperature beta,
/// parametrized by the product `beta_omega`: `(coth, 0, -csch)`.
/// `beta_omega = +inf` is the ground state (1, 0, 0).
pub fn thermal_r(beta_omega: f64) -> Result<RVector> {
    if beta_omega.is_nan() || beta_omega <= 0.0 {
        return Err(Error::Domain(format!(
            "beta*omega must be positive, got {beta_omega}"
        )));
    }
    if beta_omega.is_infinite() {
        return Ok(RVector::GROUND);
    }
    let x = 1.0 / beta_omega.tanh();
    let z = -1.0 / beta_omega.sinh();
    Ok(RVector::new(x, 0.0, z))
}

/// Symmetrized covariance of the reduced state, in units with omega = 1.
pub fn r_to_covariance(r: RVector) -> Result<SingleModeCovariance> {
    let s = r.x + r.z;
    if s <= 0.0 {
        return Err(Error::Domain(format!(
            "X + Z must be positive for a normalizable state, got {s}"
        )));
    }
    let cov = SingleModeCovariance {
        sxx: 1.0 / (2.0 * s),
        spp: (r.x * r.x + r.y * r.y - r.z * r.z) / (2.0 * s),
        sxp: -r.y / (2.0 * s),
    };
    if cov.spp <= 0.0 {
        return Err(Error::InvalidState(format!(
            "momentum variance is not positive: {}",
            cov.spp
        )));
    }
    Ok(cov)
}

/// Symplectic eigenvalue `nu = sqrt(sxx spp - sxp^2) = (1/2) sqrt((X-Z)/(X+Z))`.
/// Equal to 1/2 exactly when the reduced state is pure.
pub fn symplectic_eigenvalue(r: RVector) -> Result<f64> {
    let s = r.x + r.z;
    if s <= 0.0 {
        return Err(Error::Domain(format!(
            "X + Z must be positive for a normalizable state, got {s}"
        )));
    }
    let ratio = (r.x - r.z) / s;
    if ratio < 0.0 {
        return Err(Error::Domain(format!(
            "X - Z must be non-negative, got {}",
            r.x - r.z
        )));
    }
    Ok(0.5 * ratio.sqrt())
}

/// Distance diagnostics from the thermal curve: `(|Y|, |X^2 - Z^2 - 1|)`.
/// Both vanish exactly when the state is thermal (with `Z <= 0`).
pub fn thermality_residual(r: RVector) -> (f64, f64) {
    (r.y.abs(), (r.x * r.x - r.z * r.z - 1.0).abs())
}

/// Inverse temperature of a thermal reduced state, using the default
/// thermality tolerance. `X = 1` maps to the `+inf` sentinel.
pub fn effective_beta(r: RVector, omega: f64) -> Result<f64> {
    effective_beta_with_tol(r, omega, DEFAULT_THERMALITY_TOL)
}

/// Inverse temperature of a thermal reduced state: `beta = arccoth(X)/omega`.
/// Errors unless both thermality residual components are within `tol`
/// and the state sits on the physical branch `Z <= 0`.
pub fn effective_beta_with_tol(r: RVector, omega: f64, tol: f64) -> Result<f64> {
    if omega <= 0.0 {
        return Err(Error::Domain(format!("omega must be positive, got {omega}")));
    }
    let (ry, rhyp) = thermality_residual(r);
    if ry > tol || rhyp > tol || r.z > tol {
        return Err(Error::NotThermal {
            residual_y: ry,
            residual_hyp: rhyp,
            tol,
        });
    }
    if r.x <= 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok((1.0 / r.x).atanh() / omega)
}

/// Mean energy `U = (E_g/2) (1 + X^2 + Y^2 - Z^2) / (X + Z)` with
/// `E_g = omega/2`. Equals `E_g` exactly on the ground state.
pub fn mean_energy(r: RVector, omega: f64) -> Result<f64> {
    if omega <= 0.0 {
        return Err(Error::Domain(format!("omega must be positive, got {omega}")));
    }
    let s = r.x + r.z;
    if s <= 0.0 {
        return Err(Error::Domain(format!(
            "X + Z must be positive for a normalizable state, got {s}"
        )));
    }
    Ok(omega / 4.0 * (1.0 + r.x * r.x + r.y * r.y - r.z * r.z) / s)
}
