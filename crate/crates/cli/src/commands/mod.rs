//! Subcommand implementations. Each `run` returns the process exit
//! code on success and a [`CliError`] otherwise.

pub mod approx;
pub mod evolve;
pub mod sequence;
pub mod tune;
pub mod verify;

use std::io::Write;
use std::path::Path;

use qtherm_core::dynamics::{Stage, TrajectorySample};
use qtherm_core::{sds, state, RVector, SdsIndex};
use serde_json::{json, Value};

use crate::record::num;
use crate::CliError;

/// All runs use the bare oscillator as the unit system: frequencies in
/// units of its frequency, times in its radian time, energies in E_g.
pub const BASE_OMEGA: f64 = 1.0;

pub const CSV_HEADER: &str =
    "t,t_tilde,omega_t,coupling_t,X,Y,Z,U_over_Eg,nu,thermal_residual_y,thermal_residual_hyp";

/// Builds one quench stage from tuning parameters. The duration
/// arrives in natural periods of the base oscillator, the unit used
/// everywhere on the command line.
pub fn stage_from_params(
    omega_prime: f64,
    coupling: f64,
    tau_tilde: f64,
) -> Result<Stage, CliError> {
    let period = 2.0 * std::f64::consts::PI / BASE_OMEGA;
    Ok(Stage::new(tau_tilde * period, omega_prime, coupling)?)
}

pub fn stage_for_index(idx: SdsIndex) -> Result<Stage, CliError> {
    let p = sds::sds_params(idx);
    stage_from_params(p.omega_prime, p.coupling, p.tau)
}

/// One trajectory row under [`CSV_HEADER`]. Reals are printed as the
/// shortest decimal that parses back to the same double.
pub fn csv_row(s: &TrajectorySample) -> Result<String, CliError> {
    let t_tilde = s.t * BASE_OMEGA / (2.0 * std::f64::consts::PI);
    let u_over_eg = s.mean_energy / (0.5 * BASE_OMEGA);
    let nu = state::symplectic_eigenvalue(s.r)?;
    let (res_y, res_hyp) = state::thermality_residual(s.r);
    Ok(format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        s.t, t_tilde, s.omega_t, s.coupling_t, s.r.x, s.r.y, s.r.z, u_over_eg, nu, res_y, res_hyp
    ))
}

/// Output sink for trajectory data: `--out PATH` or stdout.
pub fn open_sink(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| {
                CliError::Failure(format!("cannot write {}: {e}", path.display()))
            })?;
            Ok(Box::new(std::io::BufWriter::new(file)))
        }
        None => Ok(Box::new(std::io::BufWriter::new(std::io::stdout()))),
    }
}

pub fn r_value(r: RVector) -> Value {
    json!({ "x": num(r.x), "y": num(r.y), "z": num(r.z) })
}

pub fn index_value(idx: SdsIndex) -> Value {
    json!({ "l": idx.l, "n": idx.n })
}

/// Summary of a final reduced state: R, energy, purity, distance from
/// the thermal curve, and the effective temperature when it has one at
/// the given tolerance.
pub fn final_state_value(s: &TrajectorySample, tol: f64) -> Result<Value, CliError> {
    let (res_y, res_hyp) = state::thermality_residual(s.r);
    let thermal = res_y.max(res_hyp) <= tol;
    let beta_eg = state::effective_beta_with_tol(s.r, BASE_OMEGA, tol)
        .ok()
        .map(|beta| 0.5 * BASE_OMEGA * beta);
    Ok(json!({
        "t": num(s.t),
        "r": r_value(s.r),
        "u_over_eg": num(s.mean_energy / (0.5 * BASE_OMEGA)),
        "nu": num(state::symplectic_eigenvalue(s.r)?),
        "thermal_residual_y": num(res_y),
        "thermal_residual_hyp": num(res_hyp),
        "thermal": thermal,
        "beta_eg": beta_eg.map_or(Value::Null, num),
    }))
}
