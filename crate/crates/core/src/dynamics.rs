//! Time evolution through piecewise-constant (Omega, K) quench schedules.
//!
//! The general engine propagates the 4x4 covariance matrix of the pure
//! two-mode state with the exact per-segment symplectic map of each
//! normal mode; no ODE integration is involved anywhere. For the
//! single-quench, ground-start case the closed-form Ermakov amplitudes
//! provide an independent analytic path through the same physics.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{self, QuadraticForm, RVector, SingleModeCovariance};

/// One constant-parameter segment of a quench protocol: the pair
/// oscillator Hamiltonian `sum p^2/2 + (1/2) Omega^2 (x1^2 + x2^2)
/// + (1/2) K (x1 - x2)^2` held for `duration`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage {
    duration: f64,
    omega_stage: f64,
    coupling: f64,
}

impl Stage {
    /// Validates that the stage is finite in time and that both normal
    /// modes stay oscillatory (`omega^2 + 2 coupling > 0`; negative
    /// coupling is fine below that threshold).
    pub fn new(duration: f64, omega_stage: f64, coupling: f64) -> Result<Self> {
        if !duration.is_finite() || duration < 0.0 {
            return Err(Error::Domain(format!(
                "stage duration must be finite and non-negative, got {duration}"
            )));
        }
        if !omega_stage.is_finite() || omega_stage <= 0.0 {
            return Err(Error::Domain(format!(
                "stage frequency must be positive, got {omega_stage}"
            )));
        }
        let omega_sq_minus = omega_stage * omega_stage + 2.0 * coupling;
        if !omega_sq_minus.is_finite() || omega_sq_minus <= 0.0 {
            return Err(Error::UnstableMode { omega_sq_minus });
        }
        Ok(Self {
            duration,
            omega_stage,
            coupling,
        })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn omega_stage(&self) -> f64 {
        self.omega_stage
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }
}

/// An ordered list of stages plus the bare frequency `base_omega` that
/// holds before the first stage and after the last one.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    stages: Vec<Stage>,
    base_omega: f64,
}

impl Schedule {
    pub fn new(stages: Vec<Stage>, base_omega: f64) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::Domain("schedule needs at least one stage".into()));
        }
        if !base_omega.is_finite() || base_omega <= 0.0 {
            return Err(Error::Domain(format!(
                "base frequency must be positive, got {base_omega}"
            )));
        }
        Ok(Self { stages, base_omega })
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn base_omega(&self) -> f64 {
        self.base_omega
    }

    pub fn total_duration(&self) -> f64 {
        self.stages.iter().map(Stage::duration).sum()
    }
}

/// Ermakov amplitudes and rates `(b, db/dt)` for the two normal modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModePair {
    pub b_plus: f64,
    pub bdot_plus: f64,
    pub b_minus: f64,
    pub bdot_minus: f64,
}

/// Normal mode frequencies `(Omega_plus, Omega_minus) =
/// (Omega, sqrt(Omega^2 + 2K))` for `x_pm = (x1 pm x2)/sqrt(2)`.
pub fn normal_mode_frequencies(stage: &Stage) -> (f64, f64) {
    let omega_sq_minus = stage.omega_stage * stage.omega_stage + 2.0 * stage.coupling;
    (stage.omega_stage, omega_sq_minus.sqrt())
}

fn mode_amplitude(t: f64, mode_omega: f64) -> (f64, f64) {
    // b(t) = sqrt(sin^2(at)/a^2 + cos^2(at)) solves the Ermakov
    // equation b'' + a^2 b = 1/b^3 with b(0) = 1, b'(0) = 0 at unit
    // reference frequency.
    let (s, c) = (mode_omega * t).sin_cos();
    let b = (s * s / (mode_omega * mode_omega) + c * c).sqrt();
    let bdot = s * c * (1.0 / mode_omega - mode_omega) / b;
    (b, bdot)
}

/// Closed-form plus-mode Ermakov amplitude for a quench from the unit
/// ground state: `b = sqrt(sin^2(w't)/w'^2 + cos^2(w't))` and its time
/// derivative.
pub fn b_plus_analytic(t: f64, omega_prime: f64) -> Result<(f64, f64)> {
    if t < 0.0 {
        return Err(Error::Domain(format!("time must be non-negative, got {t}")));
    }
    if !(omega_prime > 0.0) {
        return Err(Error::Domain(format!(
            "omega_prime must be positive, got {omega_prime}"
        )));
    }
    Ok(mode_amplitude(t, omega_prime))
}

/// Closed-form minus-mode Ermakov amplitude; the minus mode oscillates
/// at `eta * omega_prime` with `eta^2 = (omega_prime^2 + 2k)/omega_prime^2`.
pub fn b_minus_analytic(t: f64, omega_prime: f64, eta: f64) -> Result<(f64, f64)> {
    if t < 0.0 {
        return Err(Error::Domain(format!("time must be non-negative, got {t}")));
    }
    if !(omega_prime > 0.0) {
        return Err(Error::Domain(format!(
            "omega_prime must be positive, got {omega_prime}"
        )));
    }
    if !(eta > 0.0) {
        return Err(Error::Domain(format!("eta must be positive, got {eta}")));
    }
    Ok(mode_amplitude(t, eta * omega_prime))
}

/// Assembles the wavefunction quadratic form from the mode amplitudes:
/// `a11 = a22 = sum_s (w/(2 b_s^2) - i bdot_s/(2 b_s))` and
/// `a12 = (plus term) - (minus term)`, with the reference frequency
/// fixed to the pre-quench `base_omega`.
pub fn quadratic_form_from_modes(m: &ModePair, base_omega: f64) -> Result<QuadraticForm> {
    if !(m.b_plus > 0.0) || !(m.b_minus > 0.0) {
        return Err(Error::Domain(format!(
            "mode amplitudes must be positive, got b_plus = {}, b_minus = {}",
            m.b_plus, m.b_minus
        )));
    }
    if base_omega <= 0.0 {
        return Err(Error::Domain(format!(
            "base frequency must be positive, got {base_omega}"
        )));
    }
    let term = |b: f64, bdot: f64| Complex64::new(base_omega / (2.0 * b * b), -bdot / (2.0 * b));
    let plus = term(m.b_plus, m.bdot_plus);
    let minus = term(m.b_minus, m.bdot_minus);
    QuadraticForm::new(plus + minus, plus + minus, plus - minus)
}

/// Reduced state of oscillator 1 for a single quench `(omega_prime,
/// coupling)` applied to the ground state at unit base frequency,
/// evaluated from the closed-form Ermakov amplitudes.
pub fn single_quench_r_analytic(t: f64, omega_prime: f64, coupling: f64) -> Result<RVector> {
    let omega_sq_minus = omega_prime * omega_prime + 2.0 * coupling;
    if omega_sq_minus <= 0.0 {
        return Err(Error::UnstableMode {
            omega_sq_minus,
        });
    }
    let eta = omega_sq_minus.sqrt() / omega_prime;
    let (b_plus, bdot_plus) = b_plus_analytic(t, omega_prime)?;
    let (b_minus, bdot_minus) = b_minus_analytic(t, omega_prime, eta)?;
    let q = quadratic_form_from_modes(
        &ModePair {
            b_plus,
            bdot_plus,
            b_minus,
            bdot_minus,
        },
        1.0,
    )?;
    state::reduce_to_r(&q, 1.0)
}

/// Symmetrized 4x4 covariance of the global pure state over the
/// normal-mode quadratures `(x_plus, p_plus, x_minus, p_minus)`.
/// Purity pins the determinant at 1/16.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeCovariance {
    m: Matrix4<f64>,
}

impl TwoModeCovariance {
    /// Uncoupled ground state at `base_omega`:
    /// `diag(1/(2w), w/2, 1/(2w), w/2)`.
    pub fn ground(base_omega: f64) -> Self {
        let q = 1.0 / (2.0 * base_omega);
        let p = base_omega / 2.0;
        Self {
            m: Matrix4::from_diagonal(&nalgebra::Vector4::new(q, p, q, p)),
        }
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.m
    }

    pub fn determinant(&self) -> f64 {
        self.m.determinant()
    }

    /// Second moments of oscillator 1 via `x1 = (x_plus + x_minus)/sqrt(2)`.
    pub fn reduce_oscillator_one(&self) -> SingleModeCovariance {
        let m = &self.m;
        SingleModeCovariance {
            sxx: 0.5 * (m[(0, 0)] + m[(2, 2)] + 2.0 * m[(0, 2)]),
            spp: 0.5 * (m[(1, 1)] + m[(3, 3)] + 2.0 * m[(1, 3)]),
            sxp: 0.5 * (m[(0, 1)] + m[(2, 3)] + m[(0, 3)] + m[(2, 1)]),
        }
    }

    /// (X, Y, Z) of oscillator 1, inverting the covariance relations at
    /// frequency `base_omega`.
    pub fn reduced_r(&self, base_omega: f64) -> Result<RVector> {
        let cov = self.reduce_oscillator_one();
        if cov.sxx <= 0.0 {
            return Err(Error::InvalidState(format!(
                "position variance is not positive: {}",
                cov.sxx
            )));
        }
        let sum = 1.0 / (2.0 * base_omega * cov.sxx);
        let y = -2.0 * sum * cov.sxp;
        let diff = 2.0 * cov.spp / base_omega - y * y / sum;
        Ok(RVector::new(
            0.5 * (sum + diff),
            y,
            0.5 * (sum - diff),
        ))
    }
}

fn mode_rotation(mode_omega: f64, dt: f64) -> Matrix2<f64> {
    let (s, c) = (mode_omega * dt).sin_cos();
    Matrix2::new(c, s / mode_omega, -mode_omega * s, c)
}

/// Exact symplectic propagation of the covariance through `dt` of a
/// constant stage: block-diagonal phase-space rotation per normal mode,
/// `cov -> S cov S^T`, re-symmetrized against roundoff.
pub fn propagate_segment(
    cov: &TwoModeCovariance,
    stage: &Stage,
    dt: f64,
) -> Result<TwoModeCovariance> {
    if !(0.0..=stage.duration).contains(&dt) {
        return Err(Error::Domain(format!(
            "dt = {dt} outside [0, {}]",
            stage.duration
        )));
    }
    let (omega_plus, omega_minus) = normal_mode_frequencies(stage);
    let rp = mode_rotation(omega_plus, dt);
    let rm = mode_rotation(omega_minus, dt);
    let mut s = Matrix4::zeros();
    s.fixed_view_mut::<2, 2>(0, 0).copy_from(&rp);
    s.fixed_view_mut::<2, 2>(2, 2).copy_from(&rm);
    let propagated = s * cov.m * s.transpose();
    Ok(TwoModeCovariance {
        m: 0.5 * (propagated + propagated.transpose()),
    })
}

/// One sampled point of a simulated trajectory. `omega_t` and
/// `coupling_t` are the Hamiltonian parameters in force at the sample;
/// the initial sample and any free-evolution tail report the bare
/// oscillator `(base_omega, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub omega_t: f64,
    pub coupling_t: f64,
    pub r: RVector,
    pub mean_energy: f64,
}

/// Evolves the uncoupled ground state through the schedule, sampling
/// each stage uniformly (`samples_per_stage` points, stage boundaries
/// always landed on exactly), then continues through a free-evolution
/// tail of `tail_periods` natural periods of the base oscillator.
///
/// Within a stage every sample is propagated directly from the stage's
/// initial state, so sampling density never affects accuracy.
pub fn evolve_schedule(
    schedule: &Schedule,
    samples_per_stage: usize,
    tail_periods: f64,
) -> Result<Vec<TrajectorySample>> {
    if samples_per_stage == 0 {
        return Err(Error::Domain("samples_per_stage must be at least 1".into()));
    }
    if !tail_periods.is_finite() || tail_periods < 0.0 {
        return Err(Error::Domain(format!(
            "tail must be finite and non-negative, got {tail_periods} periods"
        )));
    }
    let omega = schedule.base_omega;
    let mut cov = TwoModeCovariance::ground(omega);
    let mut samples = Vec::new();
    let mut push = |t: f64, omega_t: f64, coupling_t: f64, cov: &TwoModeCovariance| -> Result<()> {
        let r = cov.reduced_r(omega)?;
        samples.push(TrajectorySample {
            t,
            omega_t,
            coupling_t,
            r,
            mean_energy: state::mean_energy(r, omega)?,
        });
        Ok(())
    };
    push(0.0, omega, 0.0, &cov)?;

    let tail_stage = if tail_periods > 0.0 {
        Some(Stage::new(
            tail_periods * 2.0 * std::f64::consts::PI / omega,
            omega,
            0.0,
        )?)
    } else {
        None
    };
    let mut t0 = 0.0;
    for stage in schedule.stages.iter().chain(tail_stage.iter()) {
        if stage.duration == 0.0 {
            push(t0, stage.omega_stage, stage.coupling, &cov)?;
            continue;
        }
        let start = cov.clone();
        for j in 1..=samples_per_stage {
            let dt = stage.duration * (j as f64 / samples_per_stage as f64);
            cov = propagate_segment(&start, stage, dt)?;
            push(t0 + dt, stage.omega_stage, stage.coupling, &cov)?;
        }
        t0 += stage.duration;
    }
    Ok(samples)
}
