//! The special discrete set (SDS) of exactly solvable target
//! temperatures.
//!
//! When the normal-mode phases accumulated over the active phase are
//! odd multiples of pi/2, the quench lands oscillator 1 exactly on the
//! thermal curve. Those commensurate protocols are indexed by a pair of
//! whole numbers (l, n); everything about them is closed-form. Targets
//! off the set are approximated by searching odd/odd rational
//! approximations to the temperature.

use crate::error::{Error, Result};

/// Index (l, n) of an SDS temperature: `E_g beta = log((n+l+1)/|n-l|)`.
/// `l = n` is the degenerate identity protocol at beta = infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SdsIndex {
    pub l: u32,
    pub n: u32,
}

impl SdsIndex {
    pub const fn new(l: u32, n: u32) -> Self {
        Self { l, n }
    }
}

/// Exact tuning set for one SDS index. `tau` is in units of the bare
/// period (`tau = omega t / 2pi`), `beta_eg` in units of 1/E_g, and
/// `u_thermal` is the final mean energy over E_g.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdsParameters {
    pub omega_prime: f64,
    pub coupling: f64,
    pub tau: f64,
    pub beta_eg: f64,
    pub u_thermal: f64,
}

/// Closed-form tuning parameters for an SDS index:
/// `omega' = sqrt((2l+1)/(2n+1))`, `k = 2(n-l)(n+l+1)/((2l+1)(2n+1))`,
/// `tau = sqrt((2l+1)(2n+1))/4`. `l = n` degrades gracefully to the
/// identity protocol (omega' = 1, k = 0, beta = infinity).
pub fn sds_params(idx: SdsIndex) -> SdsParameters {
    let p = (2 * idx.l as u64 + 1) as f64;
    let q = (2 * idx.n as u64 + 1) as f64;
    let d = idx.n as f64 - idx.l as f64;
    let m = (idx.n as u64 + idx.l as u64 + 1) as f64;
    SdsParameters {
        omega_prime: (p / q).sqrt(),
        coupling: 2.0 * d * m / (p * q),
        tau: 0.25 * (p * q).sqrt(),
        beta_eg: beta_of_index(idx),
        u_thermal: (p * p + q * q) / (2.0 * p * q),
    }
}

/// `E_g beta = log((n+l+1)/|n-l|)`; symmetric under l <-> n, with the
/// `+inf` sentinel at l = n.
pub fn beta_of_index(idx: SdsIndex) -> f64 {
    if idx.l == idx.n {
        return f64::INFINITY;
    }
    let m = (idx.n as u64 + idx.l as u64 + 1) as f64;
    let d = idx.l.abs_diff(idx.n) as f64;
    (m / d).ln()
}

/// Which side of the degeneracy a tuning set sits on: `Lower` is the
/// l < n branch (positive coupling), `Upper` the l > n branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Lower,
    Upper,
}

/// Envelope relations between temperature and tuning parameters:
/// lower branch `(sqrt(tanh(beta/2)), csch(beta))`, upper branch
/// `(sqrt(coth(beta/2)), -csch(beta))`. These interpolate the SDS and
/// are exact tunings only on it.
pub fn envelope_params(beta_eg: f64, branch: Branch) -> Result<(f64, f64)> {
    if beta_eg.is_nan() || beta_eg <= 0.0 {
        return Err(Error::Domain(format!(
            "beta_eg must be positive, got {beta_eg}"
        )));
    }
    let th = (beta_eg / 2.0).tanh();
    let csch = 1.0 / beta_eg.sinh();
    match branch {
        Branch::Lower => Ok((th.sqrt(), csch)),
        Branch::Upper => Ok(((1.0 / th).sqrt(), -csch)),
    }
}

/// The l <-> n twin: same temperature, duration, and final energy,
/// with `omega' -> 1/omega'` and `k -> -k`.
pub fn degeneracy_map(idx: SdsIndex) -> SdsIndex {
    SdsIndex::new(idx.n, idx.l)
}

/// Pareto-optimal SDS approximations to a target temperature.
///
/// Returns the canonical (l < n) indices with relative temperature
/// mismatch within `rel_tol` and, if given, `tau <= tau_max`, sorted by
/// ascending duration; each successive entry strictly improves the
/// mismatch, exposing the full speed/accuracy trade-off. Without a
/// duration cap the front is truncated once the mismatch drops three
/// orders of magnitude below `rel_tol` (further entries would refine a
/// tolerance nobody asked for); an empty result is not an error.
pub fn approx_search(
    beta_eg_target: f64,
    rel_tol: f64,
    tau_max: Option<f64>,
) -> Result<Vec<SdsIndex>> {
    if !beta_eg_target.is_finite() || beta_eg_target <= 0.0 {
        return Err(Error::Domain(format!(
            "target beta_eg must be finite and positive, got {beta_eg_target}"
        )));
    }
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::Domain(format!(
            "relative tolerance must be in (0, 1), got {rel_tol}"
        )));
    }
    if let Some(tm) = tau_max {
        if !(tm > 0.0) {
            return Err(Error::Domain(format!(
                "tau_max must be positive, got {tm}"
            )));
        }
    }

    // A candidate is d = n - l >= 1 and m = n + l + 1 of opposite
    // parity with log(m/d) within the tolerance window, i.e. m in
    // [d e^{beta(1-tol)}, d e^{beta(1+tol)}]; its duration is
    // tau = sqrt(m^2 - d^2)/4, increasing in d across the window.
    let lo = ((1.0 - rel_tol) * beta_eg_target).exp();
    let hi = ((1.0 + rel_tol) * beta_eg_target).exp();
    let saturation = rel_tol * 1e-3;
    const D_CAP: u64 = 200_000;

    let mut candidates: Vec<(f64, f64, SdsIndex)> = Vec::new();
    let mut best_err = f64::INFINITY;
    for d in 1..=D_CAP {
        let d_f = d as f64;
        let m_first = (d_f * lo).ceil().max(d_f + 1.0);
        if m_first > u32::MAX as f64 {
            break; // durations out there are astronomical anyway
        }
        let mut m = m_first as u64;
        if (m + d) % 2 == 0 {
            m += 1;
        }
        let m_last = (d_f * hi).floor().min(u32::MAX as f64) as u64;

        let tau_min = 0.25 * (m_first * m_first - d_f * d_f).sqrt();
        if tau_max.is_some_and(|tm| tau_min > tm) {
            break; // every later d is slower still
        }

        while m <= m_last {
            let beta = (m as f64 / d_f).ln();
            let rel_err = (beta - beta_eg_target).abs() / beta_eg_target;
            let tau = 0.25 * ((m * m - d * d) as f64).sqrt();
            if rel_err <= rel_tol && tau_max.map_or(true, |tm| tau <= tm) {
                let l = ((m - d - 1) / 2) as u32;
                candidates.push((tau, rel_err, SdsIndex::new(l, l + d as u32)));
                best_err = best_err.min(rel_err);
            }
            m += 2;
        }
        if best_err <= saturation {
            break;
        }
    }

    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut front = Vec::new();
    let mut kept_err = f64::INFINITY;
    for (_, err, idx) in candidates {
        if err < kept_err {
            kept_err = err;
            front.push(idx);
        }
    }
    Ok(front)
}

/// Finds the fastest SDS index whose temperature matches `beta_eg` to
/// within `abs_tol` (intended for recognizing inputs that are exactly
/// on the set up to roundoff). Returns `None` when the target is not
/// on the set at any practical index.
pub fn find_exact_index(beta_eg: f64, abs_tol: f64) -> Option<SdsIndex> {
    if !beta_eg.is_finite() || beta_eg <= 0.0 {
        return None;
    }
    let ratio = beta_eg.exp();
    for d in 1..=10_000u64 {
        let m_f = (d as f64 * ratio).round();
        if m_f > u32::MAX as f64 {
            return None;
        }
        let m = m_f as u64;
        if m < d + 1 || (m + d) % 2 == 0 {
            continue;
        }
        if ((m as f64 / d as f64).ln() - beta_eg).abs() <= abs_tol {
            let l = ((m - d - 1) / 2) as u32;
            return Some(SdsIndex::new(l, l + d as u32));
        }
    }
    None
}
