//! Numerical treatment of the thermalization condition off the special
//! discrete set: residuals against the thermal target, finite-difference
//! Jacobians, a first-order perturbative parameter correction, and a
//! damped Newton solver.
//!
//! Nothing here asserts that a root exists for a given temperature;
//! non-convergence is reported as data, with diagnostics, rather than
//! raised as an error.

use nalgebra::{Matrix3, Vector3};

use crate::dynamics::{self, Schedule, Stage};
use crate::error::{Error, Result};
use crate::sds::{self, SdsIndex, SdsParameters};
use crate::state::{self, RVector};

/// Condition number beyond which a Jacobian is treated as singular.
const MAX_CONDITION: f64 = 1e14;

/// Maximum number of step halvings per damped Newton iteration.
const MAX_HALVINGS: u32 = 30;

/// The three tunable protocol parameters `(omega', k, tau)`, all
/// dimensionless. Validity means a realizable stage: `p1 > 0`,
/// `p3 > 0`, and an oscillatory minus mode `p1^2 + 2 p2 > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterVector {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

impl ParameterVector {
    pub fn new(p1: f64, p2: f64, p3: f64) -> Result<Self> {
        if !(p1.is_finite() && p1 > 0.0) {
            return Err(Error::Domain(format!("omega' must be positive, got {p1}")));
        }
        if !(p3.is_finite() && p3 > 0.0) {
            return Err(Error::Domain(format!("tau must be positive, got {p3}")));
        }
        let omega_sq_minus = p1 * p1 + 2.0 * p2;
        if !(omega_sq_minus.is_finite() && omega_sq_minus > 0.0) {
            return Err(Error::UnstableMode { omega_sq_minus });
        }
        Ok(Self { p1, p2, p3 })
    }

    fn components(&self) -> [f64; 3] {
        [self.p1, self.p2, self.p3]
    }
}

impl From<SdsParameters> for ParameterVector {
    fn from(p: SdsParameters) -> Self {
        // Closed-form tuning sets always satisfy the invariants.
        Self {
            p1: p.omega_prime,
            p2: p.coupling,
            p3: p.tau,
        }
    }
}

/// Outcome of a damped Newton run. `jacobian_condition` refers to the
/// most recently formed Jacobian (NaN only if none could be formed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub solution: ParameterVector,
    pub residual_norm: f64,
    pub iterations: u32,
    pub converged: bool,
    pub jacobian_condition: f64,
}

fn final_r(p: &ParameterVector) -> Result<RVector> {
    let stage = Stage::new(2.0 * std::f64::consts::PI * p.p3, p.p1, p.p2)?;
    let schedule = Schedule::new(vec![stage], 1.0)?;
    let samples = dynamics::evolve_schedule(&schedule, 1, 0.0)?;
    Ok(samples.last().expect("trajectory is never empty").r)
}

/// Thermalization residual `R(tau; p) - R_beta` for the single-stage
/// protocol `(p1, p2, duration 2 pi p3)` started from the ground state,
/// against the thermal target at `beta_eg` (in E_g units).
pub fn residual(p: &ParameterVector, beta_eg: f64) -> Result<Vector3<f64>> {
    if !(beta_eg > 0.0) {
        return Err(Error::Domain(format!(
            "beta_eg must be positive, got {beta_eg}"
        )));
    }
    let r = final_r(p)?;
    let target = state::thermal_r(2.0 * beta_eg)?;
    Ok(Vector3::new(r.x - target.x, r.y - target.y, r.z - target.z))
}

fn shifted(p: &ParameterVector, j: usize, h: f64) -> Result<ParameterVector> {
    let mut c = p.components();
    c[j] += h;
    ParameterVector::new(c[0], c[1], c[2])
}

/// Central finite-difference Jacobian of the residual, column step
/// `h_j = 1e-6 max(|p_j|, 1)`. A step that crosses the stability
/// boundary is shrunk once; if it still crosses, the column errors out.
pub fn jacobian(p: &ParameterVector, beta_eg: f64) -> Result<Matrix3<f64>> {
    let mut cols = [Vector3::zeros(); 3];
    for j in 0..3 {
        let mut h = 1e-6 * p.components()[j].abs().max(1.0);
        let mut pair = shifted(p, j, h).and_then(|hi| Ok((hi, shifted(p, j, -h)?)));
        if pair.is_err() {
            h /= 2.0;
            pair = shifted(p, j, h).and_then(|hi| Ok((hi, shifted(p, j, -h)?)));
        }
        let (hi, lo) = pair.map_err(|_| Error::StepOutOfDomain { column: j })?;
        let rh = residual(&hi, beta_eg)?;
        let rl = residual(&lo, beta_eg)?;
        cols[j] = (rh - rl) / (2.0 * h);
    }
    Ok(Matrix3::from_columns(&cols))
}

fn condition_number(j: &Matrix3<f64>) -> f64 {
    let sv = j.svd(false, false).singular_values;
    let (max, min) = (sv.max(), sv.min());
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Analytic tangent of the thermal curve with respect to `beta_eg`:
/// `(-2 csch^2(2b), 0, 2 csch(2b) coth(2b))`, vanishing at b -> inf.
pub fn dthermal_dbeta(beta_eg: f64) -> Result<Vector3<f64>> {
    if !(beta_eg > 0.0) {
        return Err(Error::Domain(format!(
            "beta_eg must be positive, got {beta_eg}"
        )));
    }
    let b = 2.0 * beta_eg;
    let csch = 1.0 / b.sinh();
    let coth = 1.0 / b.tanh();
    Ok(Vector3::new(-2.0 * csch * csch, 0.0, 2.0 * csch * coth))
}

/// First-order parameter correction for a small temperature shift away
/// from an SDS point: `P + delta * M^{-1} dR_beta/dbeta`. The linear
/// step only helps while `delta` stays well inside the Newton basin of
/// the corrected temperature; its residual shrinks as O(delta^2).
pub fn perturbative_correction(idx: SdsIndex, delta_beta_eg: f64) -> Result<ParameterVector> {
    let params = sds::sds_params(idx);
    let p = ParameterVector::from(params);
    if delta_beta_eg == 0.0 {
        return Ok(p);
    }
    let m = jacobian(&p, params.beta_eg)?;
    let cond = condition_number(&m);
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::SingularJacobian { condition: cond });
    }
    let dr = dthermal_dbeta(params.beta_eg)?;
    let dp = m
        .lu()
        .solve(&dr)
        .ok_or(Error::SingularJacobian { condition: cond })?
        * delta_beta_eg;
    ParameterVector::new(p.p1 + dp[0], p.p2 + dp[1], p.p3 + dp[2])
}

/// Damped Newton iteration on the thermalization residual in the
/// infinity norm. Each step is halved (at most 30 times) until it both
/// stays inside the parameter domain and strictly decreases the
/// residual; an iteration with no acceptable step ends the run.
/// Non-convergence is reported, not raised; a numerically singular
/// Jacobian is an error.
pub fn newton_solve(
    beta_eg: f64,
    p0: &ParameterVector,
    tol: f64,
    max_iter: u32,
) -> Result<SolveReport> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut p = *p0;
    let mut r = residual(&p, beta_eg)?;
    let mut norm = r.amax();
    let mut cond = f64::NAN;
    let mut iterations = 0;
    while iterations < max_iter && norm > tol {
        let j = jacobian(&p, beta_eg)?;
        cond = condition_number(&j);
        if !cond.is_finite() || cond > MAX_CONDITION {
            return Err(Error::SingularJacobian { condition: cond });
        }
        let step = j
            .lu()
            .solve(&-r)
            .ok_or(Error::SingularJacobian { condition: cond })?;
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let cand = shifted_by(&p, &step, alpha);
            if let Ok(cand) = cand {
                let rc = residual(&cand, beta_eg)?;
                if rc.amax() < norm {
                    p = cand;
                    r = rc;
                    norm = r.amax();
                    accepted = true;
                    break;
                }
            }
            alpha /= 2.0;
        }
        iterations += 1;
        if !accepted {
            break;
        }
    }
    if cond.is_nan() {
        // No iteration ran; still report a best-effort diagnostic.
        cond = jacobian(&p, beta_eg)
            .map(|j| condition_number(&j))
            .unwrap_or(f64::NAN);
    }
    Ok(SolveReport {
        solution: p,
        residual_norm: norm,
        iterations,
        converged: norm <= tol,
        jacobian_condition: cond,
    })
}

fn shifted_by(p: &ParameterVector, step: &Vector3<f64>, alpha: f64) -> Result<ParameterVector> {
    ParameterVector::new(
        p.p1 + alpha * step[0],
        p.p2 + alpha * step[1],
        p.p3 + alpha * step[2],
    )
}
