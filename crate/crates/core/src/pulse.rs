//! Lowering of coupling steps to spring-drive pulse schedules.
//!
//! A static spring detunes the relative mode of its two oscillators, which in
//! the frame co-rotating at the bare frequency is a phase-space rotation;
//! modulating the spring at twice the bare frequency drives two-mode
//! squeezing of the relative coordinate, with the modulation phase setting
//! the squeeze axis. Each step is Euler-decomposed and compiled to one
//! segment per factor. Schedules are validated by integrating the
//! time-dependent quadrature dynamics with classic fourth-order Runge-Kutta
//! and comparing the rotating-frame propagator against the step.
//!
//! Conventions baked into the compiler:
//!
//! - Rotation segments run for a whole number of dressed periods 2 pi / nu,
//!   nu = sqrt(omega^2 + 4 mean omega), which makes their rotating-frame
//!   action an exact rotation by (omega - nu) * duration.
//! - Squeeze segments run for a whole number of bare periods and start on
//!   the bare-period grid (zero-strength idle padding realigns the clock),
//!   so the drive phase needs no global bookkeeping. The mean coupling
//!   required by the modulated drive also rotates the relative mode; that
//!   by-product is folded into the neighboring rotation segments.

use nalgebra::{DMatrix, Matrix2};

use crate::error::{Error, Result};
use crate::symplectic::{
    euler_decompose, rotation, sp2_exp, spectral_norm, symplectic_defect, wrap_angle,
    SymplecticMatrix, TOL_SYM,
};
use crate::synth::CouplingStep;

/// Largest mean-coupling to frequency ratio the compiler accepts.
pub const MAX_RWA_RATIO: f64 = 0.02;
/// Default compilation ratio.
pub const DEFAULT_RWA_RATIO: f64 = 0.01;
/// Modulation depth used for squeeze segments. It must exceed 2 so that the
/// squeezing rate beats the static-coupling rotation rate; the drive then
/// swings negative over part of each cycle.
pub const SQUEEZE_DEPTH: f64 = 6.0;
/// Modulation phase aligning the squeeze expansion axis with x.
pub const SQUEEZE_PHASE: f64 = -std::f64::consts::FRAC_PI_2;

/// Default integration step: 1/500 of a bare period.
pub fn default_dt(omega: f64) -> f64 {
    std::f64::consts::TAU / omega / 500.0
}

/// One interval of spring drive at a single site:
/// strength(t) = mean * (1 + depth * cos(2 omega t + phase)) with t local to
/// the segment. A zero mean is an idle (clock-alignment) interval.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSegment {
    pub site: usize,
    pub mean_strength: f64,
    pub modulation_depth: f64,
    pub modulation_phase: f64,
    pub duration: f64,
}

/// Time-ordered drive schedule realizing one coupling step.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    pub omega: f64,
    pub segments: Vec<PulseSegment>,
    pub target_step: CouplingStep,
}

impl PulseSchedule {
    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }
}

/// Dressed frequency of the relative mode under a static coupling.
pub fn dressed_frequency(omega: f64, mean: f64) -> f64 {
    (omega * omega + 4.0 * mean * omega).sqrt()
}

// Rotating-frame generator of a modulated segment, averaged over the fast
// oscillation and including the second-order secular correction. First
// order: -mean*depth*(sin(phase) s1 + cos(phase) s2) - 2*mean*s3. The
// quadratic terms matter because squeeze durations scale like 1/mean, so
// their net contribution is first order in the drive budget.
fn model_exponents(
    omega: f64,
    mean: f64,
    depth: f64,
    phase: f64,
    duration: f64,
) -> (f64, f64, f64) {
    let (sin_p, cos_p) = phase.sin_cos();
    let q = mean * mean / omega;
    let a1 = -mean * depth * sin_p + q * depth * (3.0 - 2.0 * depth * cos_p) * sin_p;
    let a2 = -mean * depth * cos_p
        + q * (2.0 * depth * depth * sin_p * sin_p + depth * cos_p - 4.0);
    let a3 = -2.0 * mean
        + q * (depth * depth * sin_p * sin_p - 0.25 * depth * depth - 2.0 * depth * cos_p + 2.0);
    (duration * a1, duration * a2, duration * a3)
}

fn model_matrix(omega: f64, mean: f64, depth: f64, phase: f64, duration: f64) -> Matrix2<f64> {
    let (a, b, g) = model_exponents(omega, mean, depth, phase, duration);
    sp2_exp(a, b, g)
}

fn model_squeeze_amount(omega: f64, mean: f64, duration: f64) -> f64 {
    let m = model_matrix(omega, mean, SQUEEZE_DEPTH, SQUEEZE_PHASE, duration);
    euler_decompose(&m).map(|(_, r, _)| r).unwrap_or(0.0)
}

// Appends an idle segment bringing the clock back onto the bare-period grid.
fn pad_to_grid(segments: &mut Vec<PulseSegment>, site: usize, omega: f64, cursor: f64) -> f64 {
    let period = std::f64::consts::TAU / omega;
    let rem = cursor % period;
    if rem < 1e-9 * period || period - rem < 1e-9 * period {
        return cursor;
    }
    let pad = period - rem;
    segments.push(PulseSegment {
        site,
        mean_strength: 0.0,
        modulation_depth: 0.0,
        modulation_phase: 0.0,
        duration: pad,
    });
    cursor + pad
}

// Unmodulated segment realizing an exact rotating-frame rotation by `theta`.
fn compile_rotation(
    segments: &mut Vec<PulseSegment>,
    site: usize,
    theta: f64,
    omega: f64,
    rwa_ratio: f64,
    mut cursor: f64,
) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let amount = (-theta).rem_euclid(two_pi);
    if amount < 1e-12 || two_pi - amount < 1e-12 {
        return cursor;
    }
    let mean_max = rwa_ratio * omega;
    let nu_max = dressed_frequency(omega, mean_max);
    let eta_max = (nu_max - omega) / nu_max;
    let revolutions = (amount / (two_pi * eta_max)).ceil().max(1.0);
    let eta = amount / (two_pi * revolutions);
    let nu = omega / (1.0 - eta);
    let mean = (nu * nu - omega * omega) / (4.0 * omega);
    let duration = revolutions * two_pi / nu;
    segments.push(PulseSegment {
        site,
        mean_strength: mean,
        modulation_depth: 0.0,
        modulation_phase: 0.0,
        duration,
    });
    cursor += duration;
    pad_to_grid(segments, site, omega, cursor)
}

/// Compiles a coupling step into a pulse schedule at the given drive budget.
///
/// The step is decomposed as rotation * squeeze * rotation; the squeeze
/// by-product rotations predicted by the rotating-frame model are folded into
/// the two rotation factors, so the schedule as a whole reproduces the step.
pub fn compile_step(step: &CouplingStep, omega: f64, rwa_ratio: f64) -> Result<PulseSchedule> {
    if !(rwa_ratio > 0.0 && rwa_ratio <= MAX_RWA_RATIO) {
        return Err(Error::RwaRatioTooLarge(rwa_ratio, MAX_RWA_RATIO));
    }
    let inner_d = DMatrix::from_fn(2, 2, |r, c| step.inner[(r, c)]);
    let defect = symplectic_defect(&inner_d)?;
    if defect > TOL_SYM {
        return Err(Error::NotSymplectic {
            defect,
            tol: TOL_SYM,
        });
    }
    let (theta1, r, theta2) = euler_decompose(&step.inner)?;
    let mut segments = Vec::new();
    let mut cursor = 0.0;

    if r < 1e-12 {
        // Pure rotation; theta2 is zero by the decomposition convention.
        compile_rotation(
            &mut segments,
            step.site,
            wrap_angle(theta1 + theta2),
            omega,
            rwa_ratio,
            cursor,
        );
        return Ok(PulseSchedule {
            omega,
            segments,
            target_step: step.clone(),
        });
    }

    // Squeeze segment: depth fixed, peak drive capped at the budget, whole
    // bare periods. The duration is bracketed at full strength, rounded up
    // to the grid, then the mean is re-solved for the exact squeeze amount.
    let period = std::f64::consts::TAU / omega;
    let mean_cap = rwa_ratio * omega / (1.0 + SQUEEZE_DEPTH);
    let mut t_hi = period;
    let mut doublings = 0;
    while model_squeeze_amount(omega, mean_cap, t_hi) < r {
        t_hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::RwaRatioTooLarge(rwa_ratio, MAX_RWA_RATIO));
        }
    }
    let mut lo = 0.0;
    let mut hi = t_hi;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if model_squeeze_amount(omega, mean_cap, mid) < r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_grid = (hi / period).ceil().max(1.0) * period;
    let mut mean_lo = 0.0;
    let mut mean_hi = mean_cap;
    for _ in 0..100 {
        let mid = 0.5 * (mean_lo + mean_hi);
        if model_squeeze_amount(omega, mid, t_grid) < r {
            mean_lo = mid;
        } else {
            mean_hi = mid;
        }
    }
    let mean_sq = mean_hi;
    let m_model = model_matrix(omega, mean_sq, SQUEEZE_DEPTH, SQUEEZE_PHASE, t_grid);
    let (delta1, _, delta2) = euler_decompose(&m_model)?;

    cursor = compile_rotation(
        &mut segments,
        step.site,
        wrap_angle(theta2 - delta2),
        omega,
        rwa_ratio,
        cursor,
    );
    segments.push(PulseSegment {
        site: step.site,
        mean_strength: mean_sq,
        modulation_depth: SQUEEZE_DEPTH,
        modulation_phase: SQUEEZE_PHASE,
        duration: t_grid,
    });
    cursor += t_grid;
    compile_rotation(
        &mut segments,
        step.site,
        wrap_angle(theta1 - delta1),
        omega,
        rwa_ratio,
        cursor,
    );
    Ok(PulseSchedule {
        omega,
        segments,
        target_step: step.clone(),
    })
}

fn add_scaled(dst: &mut DMatrix<f64>, src: &DMatrix<f64>, factor: f64) {
    let d = dst.as_mut_slice();
    let s = src.as_slice();
    for (di, si) in d.iter_mut().zip(s.iter()) {
        *di += factor * si;
    }
}

// d(Phi)/dt = A(t) Phi for the chain with one driven site. The free part
// couples each x to its p; the spring adds -2 Omega (x_n - x_{n+1}) to the
// momenta of its two oscillators.
fn derivative(
    phi: &DMatrix<f64>,
    omega: f64,
    site: usize,
    strength: f64,
    out: &mut DMatrix<f64>,
) {
    let dim = phi.nrows();
    let n = dim / 2;
    for i in 0..n {
        for c in 0..dim {
            out[(2 * i, c)] = omega * phi[(2 * i + 1, c)];
            out[(2 * i + 1, c)] = -omega * phi[(2 * i, c)];
        }
    }
    if strength != 0.0 && site >= 1 && site < n {
        let a = 2 * (site - 1);
        let b = 2 * site;
        for c in 0..dim {
            let stretch = 2.0 * strength * (phi[(a, c)] - phi[(b, c)]);
            out[(a + 1, c)] -= stretch;
            out[(b + 1, c)] += stretch;
        }
    }
}

/// Integrates the quadrature propagator of an N-oscillator chain under the
/// schedule, returning the lab-frame propagator at the final time.
///
/// Classic RK4 with the symplectic defect monitored at segment boundaries;
/// no projection is applied, so a defect above 1e-4 aborts.
pub fn integrate_chain(
    schedule: &PulseSchedule,
    chain_length: usize,
    dt: f64,
) -> Result<SymplecticMatrix> {
    let omega = schedule.omega;
    let max_dt = std::f64::consts::TAU / omega / 200.0;
    if dt > max_dt {
        return Err(Error::StepTooCoarse { dt, max: max_dt });
    }
    let dim = 2 * chain_length;
    let mut phi = DMatrix::<f64>::identity(dim, dim);
    let mut k1 = DMatrix::zeros(dim, dim);
    let mut k2 = DMatrix::zeros(dim, dim);
    let mut k3 = DMatrix::zeros(dim, dim);
    let mut k4 = DMatrix::zeros(dim, dim);
    let mut scratch = DMatrix::zeros(dim, dim);

    for seg in &schedule.segments {
        if seg.duration <= 0.0 {
            continue;
        }
        if seg.site == 0 || seg.site >= chain_length {
            return Err(Error::SiteOutOfRange {
                site: seg.site,
                max: chain_length - 1,
            });
        }
        let steps = (seg.duration / dt).ceil().max(1.0) as usize;
        let h = seg.duration / steps as f64;
        let drive = |t: f64| {
            seg.mean_strength
                * (1.0 + seg.modulation_depth * (2.0 * omega * t + seg.modulation_phase).cos())
        };
        for k in 0..steps {
            let t = k as f64 * h;
            derivative(&phi, omega, seg.site, drive(t), &mut k1);
            scratch.copy_from(&phi);
            add_scaled(&mut scratch, &k1, h / 2.0);
            derivative(&scratch, omega, seg.site, drive(t + h / 2.0), &mut k2);
            scratch.copy_from(&phi);
            add_scaled(&mut scratch, &k2, h / 2.0);
            derivative(&scratch, omega, seg.site, drive(t + h / 2.0), &mut k3);
            scratch.copy_from(&phi);
            add_scaled(&mut scratch, &k3, h);
            derivative(&scratch, omega, seg.site, drive(t + h), &mut k4);
            add_scaled(&mut phi, &k1, h / 6.0);
            add_scaled(&mut phi, &k2, h / 3.0);
            add_scaled(&mut phi, &k3, h / 3.0);
            add_scaled(&mut phi, &k4, h / 6.0);
        }
        let defect = symplectic_defect(&phi)?;
        if defect > 1e-4 {
            return Err(Error::IntegrationDrift(defect));
        }
    }
    Ok(SymplecticMatrix::new_unchecked(phi))
}

/// Propagator in the frame co-rotating at `omega`: every mode is rotated
/// back by the elapsed free-evolution phase.
pub fn rotating_frame(propagator: &DMatrix<f64>, omega: f64, elapsed: f64) -> DMatrix<f64> {
    let dim = propagator.nrows();
    let n = dim / 2;
    let mut frame = DMatrix::zeros(dim, dim);
    let r = rotation(omega * elapsed);
    for i in 0..n {
        frame[(2 * i, 2 * i)] = r[(0, 0)];
        frame[(2 * i, 2 * i + 1)] = r[(0, 1)];
        frame[(2 * i + 1, 2 * i)] = r[(1, 0)];
        frame[(2 * i + 1, 2 * i + 1)] = r[(1, 1)];
    }
    frame * propagator
}

// Orthonormal basis of the relative plane of oscillators at `site`.
fn relative_plane(site: usize, chain_length: usize) -> DMatrix<f64> {
    let dim = 2 * chain_length;
    let mut v = DMatrix::zeros(dim, 2);
    let inv = 1.0 / 2f64.sqrt();
    v[(2 * (site - 1), 0)] = inv;
    v[(2 * site, 0)] = -inv;
    v[(2 * (site - 1) + 1, 1)] = inv;
    v[(2 * site + 1, 1)] = -inv;
    v
}

/// Detailed validation outcome of one schedule.
#[derive(Debug, Clone)]
pub struct ScheduleValidation {
    /// Spectral error of the rotating-frame action on the relative plane.
    pub action_error: f64,
    /// Spectral norm of the residual on all other modes.
    pub leakage: f64,
    /// Symplectic defect of the integrated lab propagator.
    pub symplectic_defect: f64,
    pub total_duration: f64,
}

impl ScheduleValidation {
    pub fn worst(&self) -> f64 {
        self.action_error.max(self.leakage)
    }
}

/// Integrates the schedule and compares its rotating-frame action on the
/// relative coordinates with the target step, reporting the action error and
/// the leakage onto every other mode.
pub fn validate_schedule_report(
    schedule: &PulseSchedule,
    chain_length: usize,
    dt: f64,
) -> Result<ScheduleValidation> {
    let lab = integrate_chain(schedule, chain_length, dt)?;
    let sym_defect = lab.defect();
    let rot = rotating_frame(lab.matrix(), schedule.omega, schedule.total_duration());
    let v = relative_plane(schedule.target_step.site, chain_length);
    let achieved = v.transpose() * &rot * &v;
    let target = DMatrix::from_fn(2, 2, |r, c| schedule.target_step.inner[(r, c)]);
    let action_error = spectral_norm(&(&achieved - &target));
    let dim = 2 * chain_length;
    let embedded =
        DMatrix::identity(dim, dim) + &v * (&achieved - DMatrix::identity(2, 2)) * v.transpose();
    let leakage = spectral_norm(&(rot - embedded));
    Ok(ScheduleValidation {
        action_error,
        leakage,
        symplectic_defect: sym_defect,
        total_duration: schedule.total_duration(),
    })
}

/// Worst of action error and leakage; see [`validate_schedule_report`].
pub fn validate_schedule(schedule: &PulseSchedule, chain_length: usize, dt: f64) -> Result<f64> {
    Ok(validate_schedule_report(schedule, chain_length, dt)?.worst())
}
