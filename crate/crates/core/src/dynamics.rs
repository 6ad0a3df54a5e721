//! Time-domain check of the linearized probe response.
//!
//! The noise-free mean-field equations in the pump rotating frame,
//!
//! ```text
//! ȧ = −(iΔ_a + κ_a/2) a + i g a (b* + b) + ε_pu + ε_pr e^{−iδt}
//! ḃ = −(iω_b + γ_b/2) b + i g |a|² + ε_rf
//! ```
//!
//! are integrated with fixed-step RK4 and the e^{−iδt} component of a(t) is
//! projected out over an integer number of probe periods.
//!
//! Two linear references are provided. [`rwa_probe_component`] is the
//! closed form used by [`crate::response`], which keeps only the δa₊, δb₊
//! pair. [`full_linear_response`] keeps the counter-rotating partners
//! δa₋*, δb₋* as well and is the exact small-ε_pr limit of the equations
//! above. The two agree only when ω_b ≫ κ_a.

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::response::{output_quadrature, OperatingPoint};
use crate::scalar::{cplx, f64_of, half, lit, rel_diff_c, two, Real};
use crate::steady_state::SteadyState;

/// Amplitude bound relative to |a_s| before a run is declared divergent.
pub const DIVERGENCE_FACTOR: f64 = 1e6;
/// Allowed relative change of the DC component between the last two periods.
pub const SETTLE_TOLERANCE: f64 = 1e-6;
/// Minimum demodulation window in probe periods.
pub const MIN_PERIODS: usize = 100;
/// Minimum number of RK4 steps per mechanical period.
pub const STEPS_PER_MECHANICAL_PERIOD: usize = 20;

/// Right-hand side of the mean-field equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanField<T> {
    pub model: ModelParams<T>,
    /// Probe amplitude ε_pr (s⁻¹); zero switches the probe off.
    pub probe_amplitude: T,
    /// Probe-pump detuning δ (rad/s).
    pub probe_detuning: T,
}

impl<T: Real> MeanField<T> {
    pub fn new(model: ModelParams<T>, probe_amplitude: T, probe_detuning: T) -> Self {
        MeanField {
            model,
            probe_amplitude,
            probe_detuning,
        }
    }

    pub fn without_probe(model: ModelParams<T>) -> Self {
        Self::new(model, T::zero(), T::zero())
    }

    /// Derivatives at amplitudes (a, b) with the probe phasor e^{−iδt}
    /// supplied by the caller.
    fn rhs(&self, probe: Complex<T>, a: Complex<T>, b: Complex<T>) -> (Complex<T>, Complex<T>) {
        let p = &self.model;
        let i = Complex::<T>::i();
        let x = two::<T>() * b.re;
        let da = -cplx(p.kappa_a * half(), p.pump_detuning) * a
            + i * a * (p.g_om * x)
            + p.eps_pu
            + probe * self.probe_amplitude;
        let db = -cplx(p.gamma_b * half(), p.omega_b) * b + i * (p.g_om * a.norm_sqr()) + p.eps_rf;
        (da, db)
    }

    /// Largest step the integrator accepts: (2π/ω_b)/20.
    pub fn step_limit(&self) -> T {
        T::TAU() / self.model.omega_b / lit(STEPS_PER_MECHANICAL_PERIOD as f64)
    }
}

/// Initial amplitudes plus the reference used for the divergence check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialState<T> {
    pub a: Complex<T>,
    pub b: Complex<T>,
    /// |a_s| of the branch being followed.
    pub reference: T,
    /// Branch index reported on divergence.
    pub branch: usize,
}

impl<T: Real> InitialState<T> {
    /// Start on the selected steady-state branch.
    pub fn from_steady(steady: &SteadyState<T>) -> Self {
        InitialState {
            a: steady.a_s,
            b: steady.b_s,
            reference: steady.a_s.norm(),
            branch: steady.selected,
        }
    }

    /// Start from a = b = 0 while still bounding |a| by the branch amplitude.
    pub fn cold(steady: &SteadyState<T>) -> Self {
        InitialState {
            a: Complex::from(T::zero()),
            b: Complex::from(T::zero()),
            ..Self::from_steady(steady)
        }
    }

    pub fn custom(a: Complex<T>, b: Complex<T>) -> Self {
        InitialState {
            a,
            b,
            reference: a.norm(),
            branch: 0,
        }
    }
}

/// Which samples of a run are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Recording {
    /// First step index that is stored.
    pub from_step: usize,
    /// Keep every `stride`-th step from there on.
    pub stride: usize,
}

impl Default for Recording {
    fn default() -> Self {
        Recording {
            from_step: 0,
            stride: 1,
        }
    }
}

/// Uniformly sampled solution. Sample k sits at t = (from_step + k·stride)·dt.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeTrace<T> {
    pub t: Vec<T>,
    pub a: Vec<Complex<T>>,
    pub b: Vec<Complex<T>>,
    pub dt: T,
    pub steps: usize,
    pub recording: Recording,
}

impl<T: Real> TimeTrace<T> {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Spacing between stored samples.
    pub fn sample_spacing(&self) -> T {
        self.dt * lit(self.recording.stride as f64)
    }

    pub fn last(&self) -> Option<(T, Complex<T>, Complex<T>)> {
        let n = self.len().checked_sub(1)?;
        Some((self.t[n], self.a[n], self.b[n]))
    }
}

/// Integrates from t = 0 to `t_end` with fixed step `dt` (the last step is
/// shortened to none: the step count is ⌈t_end/dt⌉ and the end time is
/// steps·dt).
pub fn integrate_mean_field<T: Real>(
    system: &MeanField<T>,
    start: InitialState<T>,
    t_end: T,
    dt: T,
    recording: Recording,
) -> Result<TimeTrace<T>> {
    if !(dt > T::zero()) || !(t_end >= T::zero()) {
        return Err(Error::Invalid(format!(
            "integration needs dt > 0 and t_end >= 0 (dt = {:e}, t_end = {:e})",
            f64_of(dt),
            f64_of(t_end)
        )));
    }
    let limit = system.step_limit();
    if dt > limit * lit(1.0 + 1e-12) {
        return Err(Error::StepTooLarge {
            dt: f64_of(dt),
            limit: f64_of(limit),
        });
    }
    let steps = (t_end / dt).ceil().to_usize().ok_or_else(|| Error::Invalid("step count overflow".into()))?;
    integrate_steps(system, start, dt, steps, recording)
}

/// Integrates exactly `steps` RK4 steps of size `dt`.
pub fn integrate_steps<T: Real>(
    system: &MeanField<T>,
    start: InitialState<T>,
    dt: T,
    steps: usize,
    recording: Recording,
) -> Result<TimeTrace<T>> {
    let stride = recording.stride.max(1);
    let kept = if steps >= recording.from_step {
        (steps - recording.from_step) / stride + 1
    } else {
        0
    };
    let mut trace = TimeTrace {
        t: Vec::with_capacity(kept),
        a: Vec::with_capacity(kept),
        b: Vec::with_capacity(kept),
        dt,
        steps,
        recording: Recording {
            from_step: recording.from_step,
            stride,
        },
    };
    let bound = if start.reference > T::zero() {
        start.reference * lit(DIVERGENCE_FACTOR)
    } else {
        T::infinity()
    };
    let (mut a, mut b) = (start.a, start.b);
    let h2 = dt * half();
    let sixth = dt / lit(6.0);
    let rot_half = Complex::from_polar(T::one(), -system.probe_detuning * h2);
    for n in 0..=steps {
        let t = dt * lit(n as f64);
        if !(a.norm() <= bound) || !b.re.is_finite() || !b.im.is_finite() {
            return Err(Error::Divergence {
                t: f64_of(t),
                amplitude: f64_of(a.norm()),
                branch: start.branch,
            });
        }
        if n >= recording.from_step && (n - recording.from_step) % stride == 0 {
            trace.t.push(t);
            trace.a.push(a);
            trace.b.push(b);
        }
        if n == steps {
            break;
        }
        // Phasor from the absolute time so phase error does not accumulate.
        let p0 = Complex::from_polar(T::one(), -system.probe_detuning * t);
        let p1 = p0 * rot_half;
        let p2 = p1 * rot_half;
        let (ka1, kb1) = system.rhs(p0, a, b);
        let (ka2, kb2) = system.rhs(p1, a + ka1 * h2, b + kb1 * h2);
        let (ka3, kb3) = system.rhs(p1, a + ka2 * h2, b + kb2 * h2);
        let (ka4, kb4) = system.rhs(p2, a + ka3 * dt, b + kb3 * dt);
        a = a + (ka1 + (ka2 + ka3) * two::<T>() + ka4) * sixth;
        b = b + (kb1 + (kb2 + kb3) * two::<T>() + kb4) * sixth;
    }
    Ok(trace)
}

/// Projection of a(t) onto the probe frequency over the tail of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DemodulationReport<T> {
    /// Amplitude of the e^{−iδt} component (δa₊).
    pub component: Complex<T>,
    /// Window mean of a(t) (compare a_s).
    pub dc: Complex<T>,
    /// RMS of what is left after removing DC and the probe tone, relative
    /// to |component| (harmonics, the idler at +δ, residual transients).
    pub residual_rms: T,
    /// Change of the DC component between the last two periods, relative to
    /// the RMS amplitude over the last period.
    pub drift: T,
    pub periods: usize,
    pub samples_per_period: usize,
}

/// Demodulates the last `n_periods` probe periods of `trace` at δ.
///
/// The sample spacing must divide the probe period 2π/δ; the rectangle rule
/// is then exact for every harmonic below the Nyquist limit.
pub fn demodulate<T: Real>(trace: &TimeTrace<T>, delta: T, n_periods: usize) -> Result<DemodulationReport<T>> {
    if n_periods < MIN_PERIODS {
        return Err(Error::Invalid(format!(
            "demodulation window of {n_periods} periods is below the minimum of {MIN_PERIODS}"
        )));
    }
    if !(delta > T::zero()) {
        return Err(Error::Invalid("demodulation needs delta > 0".into()));
    }
    let per = T::TAU() / delta / trace.sample_spacing();
    let m = per.round();
    if m < T::one() || (per - m).abs() > lit::<T>(1e-9) * m {
        return Err(Error::Grid(format!(
            "probe period is {:.6} samples, not an integer",
            f64_of(per)
        )));
    }
    let m = m.to_usize().expect("positive sample count");
    let needed = m * n_periods;
    if trace.len() < needed {
        return Err(Error::ShortTrace {
            needed,
            available: trace.len(),
        });
    }
    let start = trace.len() - needed;
    let a = &trace.a[start..];
    let t = &trace.t[start..];

    let mean = |xs: &[Complex<T>]| {
        xs.iter().fold(Complex::from(T::zero()), |s, &x| s + x) / lit::<T>(xs.len() as f64)
    };
    let dc = mean(a);
    let last = mean(&a[needed - m..]);
    let previous = mean(&a[needed - 2 * m..needed - m]);
    // Normalize by the RMS of the last period so a trace with no DC part
    // (a pure tone) is not reported as drifting.
    let rms = (a[needed - m..].iter().fold(T::zero(), |s, x| s + x.norm_sqr()) / lit(m as f64)).sqrt();
    let drift = if rms > T::zero() {
        (last - previous).norm() / rms
    } else {
        T::zero()
    };
    if !(drift < lit(SETTLE_TOLERANCE)) {
        return Err(Error::Unsettled { drift: f64_of(drift) });
    }

    let n = lit::<T>(needed as f64);
    let component = a
        .iter()
        .zip(t)
        .fold(Complex::from(T::zero()), |s, (&x, &tk)| {
            s + (x - dc) * Complex::from_polar(T::one(), delta * tk)
        })
        / n;
    let rest = a
        .iter()
        .zip(t)
        .map(|(&x, &tk)| (x - dc - component * Complex::from_polar(T::one(), -delta * tk)).norm_sqr())
        .fold(T::zero(), |s, v| s + v)
        / n;
    let residual_rms = rest.sqrt() / component.norm().max(T::min_positive_value());
    Ok(DemodulationReport {
        component,
        dc,
        residual_rms,
        drift,
        periods: n_periods,
        samples_per_period: m,
    })
}

/// Probe component δa₊ from the two-mode closed form.
pub fn rwa_probe_component<T: Real>(model: &ModelParams<T>, steady: &SteadyState<T>, delta: T, eps_pr: T) -> Complex<T> {
    let op = OperatingPoint::from_steady(steady, model.kappa_a, model.gamma_b, model.omega_b);
    output_quadrature(&op, delta) * eps_pr / model.kappa_a
}

/// Small-signal response at δ including the counter-rotating partners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FullLinearResponse<T> {
    /// δa₊ per unit ε_pr.
    pub a_plus: Complex<T>,
    pub b_plus: Complex<T>,
    /// (δa₋)* per unit ε_pr, the idler at 2ω_pu − ω_pr.
    pub a_minus_conj: Complex<T>,
    pub b_minus_conj: Complex<T>,
}

impl<T: Real> FullLinearResponse<T> {
    /// κ_a δa₊/ε_pr, comparable with the closed-form ε_T.
    pub fn eps_t(&self, kappa_a: T) -> Complex<T> {
        self.a_plus * kappa_a
    }
}

/// Solves the 4×4 linear system for (δa₊, δb₊, δa₋*, δb₋*) driven by a unit
/// probe at δ, linearized about the selected branch with G = g·a_s.
pub fn full_linear_response<T: Real>(
    model: &ModelParams<T>,
    steady: &SteadyState<T>,
    delta: T,
) -> Result<FullLinearResponse<T>> {
    let i = Complex::<T>::i();
    let g = steady.a_s * model.g_om;
    let gc = g.conj();
    let dp = steady.effective_detuning;
    let z = Complex::from(T::zero());
    let k2 = model.kappa_a * half();
    let g2 = model.gamma_b * half();
    let mut m = [
        [cplx(k2, dp - delta), -i * g, z, -i * g],
        [-i * gc, cplx(g2, model.omega_b - delta), -i * g, z],
        [z, i * gc, cplx(k2, -dp - delta), i * gc],
        [i * gc, z, i * g, cplx(g2, -model.omega_b - delta)],
    ];
    let mut r = [Complex::from(T::one()), z, z, z];
    let x = solve4(&mut m, &mut r).ok_or_else(|| Error::Invalid(format!(
        "linearized system is singular at delta = {:e} rad/s",
        f64_of(delta)
    )))?;
    Ok(FullLinearResponse {
        a_plus: x[0],
        b_plus: x[1],
        a_minus_conj: x[2],
        b_minus_conj: x[3],
    })
}

/// Gaussian elimination with partial pivoting.
fn solve4<T: Real>(m: &mut [[Complex<T>; 4]; 4], r: &mut [Complex<T>; 4]) -> Option<[Complex<T>; 4]> {
    for col in 0..4 {
        let pivot = (col..4).max_by(|&p, &q| {
            m[p][col]
                .norm()
                .partial_cmp(&m[q][col].norm())
                .expect("finite matrix")
        })?;
        if m[pivot][col].norm() == T::zero() {
            return None;
        }
        m.swap(col, pivot);
        r.swap(col, pivot);
        for row in col + 1..4 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                let v = m[col][k];
                m[row][k] = m[row][k] - f * v;
            }
            let v = r[col];
            r[row] = r[row] - f * v;
        }
    }
    let mut x = [Complex::from(T::zero()); 4];
    for row in (0..4).rev() {
        let s = (row + 1..4).fold(r[row], |s, k| s - m[row][k] * x[k]);
        x[row] = s / m[row][row];
    }
    Some(x)
}

/// Controls for a single probe run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleSettings {
    /// Steps per probe period are at least this many per mechanical period.
    pub steps_per_mechanical_period: usize,
    /// Upper bound on ρ·dt, with ρ the largest rate in the linearized
    /// system (see [`stiffness`]). Keeps the RK4 error of the forced
    /// response well below the demodulation tolerance.
    pub stiffness_step: f64,
    /// Multiplies the step count per probe period (step-halving checks).
    pub refinement: usize,
    /// Settling time in units of 1/Γ before the window starts.
    pub settle_widths: f64,
    pub periods: usize,
    /// Start on the steady-state branch (true) or from zero.
    pub start_on_branch: bool,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings {
            steps_per_mechanical_period: STEPS_PER_MECHANICAL_PERIOD,
            stiffness_step: 0.02,
            refinement: 1,
            settle_widths: 60.0,
            periods: MIN_PERIODS,
            start_on_branch: true,
        }
    }
}

/// Outcome of one time-domain probe run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeRun<T> {
    pub delta: T,
    pub eps_pr: T,
    pub dt: T,
    pub steps: usize,
    pub demodulation: DemodulationReport<T>,
}

impl<T: Real> ProbeRun<T> {
    /// κ_a δa₊/ε_pr from the demodulated trace.
    pub fn eps_t(&self, kappa_a: T) -> Complex<T> {
        self.demodulation.component * kappa_a / self.eps_pr
    }
}

/// Bound on the magnitude of the linearized system's rates:
/// |κ_a/2 + iΔ′_a| + |γ_b/2 + iω_b| + 2|G_om| + δ.
pub fn stiffness<T: Real>(model: &ModelParams<T>, steady: &SteadyState<T>, delta: T) -> T {
    cplx(model.kappa_a * half(), steady.effective_detuning).norm()
        + cplx(model.gamma_b * half(), model.omega_b).norm()
        + two::<T>() * steady.total_coupling
        + delta.abs()
}

/// Integrates with a probe at δ and demodulates δa₊.
///
/// The step is (2π/δ)/m with m = max(⌈20 ω_b/δ⌉, ⌈ρ·(2π/δ)/stiffness_step⌉)
/// times `refinement`, so the window holds an exact number of samples per
/// probe period. The run settles for
/// `settle_widths`/Γ (never less than 10/Γ) before the window starts.
pub fn run_probe_oracle<T: Real>(
    model: &ModelParams<T>,
    steady: &SteadyState<T>,
    delta: T,
    eps_pr: T,
    settings: &OracleSettings,
) -> Result<ProbeRun<T>> {
    if !(delta > T::zero()) {
        return Err(Error::Invalid("probe oracle needs delta > 0".into()));
    }
    let per_mech = lit::<T>(settings.steps_per_mechanical_period.max(1) as f64);
    let period = T::TAU() / delta;
    let by_mech = (per_mech * model.omega_b / delta).ceil();
    let by_rate = (stiffness(model, steady, delta) * period / lit(settings.stiffness_step)).ceil();
    let m = by_mech
        .max(by_rate)
        .to_usize()
        .ok_or_else(|| Error::Invalid("step count overflow".into()))?
        .max(1)
        * settings.refinement.max(1);
    let dt = period / lit(m as f64);

    let op = OperatingPoint::from_steady(steady, model.kappa_a, model.gamma_b, model.omega_b);
    let settle = lit::<T>(settings.settle_widths.max(10.0)) / op.window_width();
    let settle_steps = (settle / dt)
        .ceil()
        .to_usize()
        .ok_or_else(|| Error::Invalid("settling step count overflow".into()))?;
    let periods = settings.periods;
    let steps = settle_steps + m * periods;

    let system = MeanField::new(*model, eps_pr, delta);
    let start = if settings.start_on_branch {
        InitialState::from_steady(steady)
    } else {
        InitialState::cold(steady)
    };
    // Keep the window plus the sample that closes its last period.
    let trace = integrate_mean_field(
        &system,
        start,
        dt * lit(steps as f64),
        dt,
        Recording {
            from_step: settle_steps,
            stride: 1,
        },
    )?;
    let mut trace = trace;
    trace.t.pop();
    trace.a.pop();
    trace.b.pop();
    let demodulation = demodulate(&trace, delta, periods)?;
    Ok(ProbeRun {
        delta,
        eps_pr,
        dt,
        steps,
        demodulation,
    })
}

/// One row of a linearization report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearizationRow<T> {
    pub delta: T,
    pub oracle: Complex<T>,
    /// Two-mode closed form.
    pub closed_form: Complex<T>,
    /// Four-mode small-signal solution.
    pub full_linear: Complex<T>,
    pub error_closed_form: T,
    pub error_full_linear: T,
    /// Same comparisons at the reduced probe amplitude, if requested.
    pub error_closed_form_small: Option<T>,
    pub error_full_linear_small: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearizationReport<T> {
    pub eps_pr: T,
    pub eps_pr_small: Option<T>,
    pub rows: Vec<LinearizationRow<T>>,
    /// Observed exponent p in error ∝ ε_pr^p of the oracle against the
    /// four-mode solution, from the two amplitudes (median over rows).
    pub scaling_exponent: Option<T>,
}

impl<T: Real> LinearizationReport<T> {
    pub fn max_error_closed_form(&self) -> T {
        self.rows.iter().map(|r| r.error_closed_form).fold(T::zero(), T::max)
    }

    pub fn max_error_full_linear(&self) -> T {
        self.rows.iter().map(|r| r.error_full_linear).fold(T::zero(), T::max)
    }
}

/// Runs the oracle at each δ and compares with both linear references.
///
/// `eps_pr_ratio` is ε_pr/ε_pu; with `small_ratio` every δ is repeated at
/// the smaller amplitude to measure how the nonlinear error scales.
pub fn verify_linearization<T: Real>(
    model: &ModelParams<T>,
    steady: &SteadyState<T>,
    deltas: &[T],
    eps_pr_ratio: T,
    small_ratio: Option<T>,
    settings: &OracleSettings,
) -> Result<LinearizationReport<T>> {
    use rayon::prelude::*;

    let eps_pr = model.eps_pu * eps_pr_ratio;
    let eps_small = small_ratio.map(|r| model.eps_pu * r);
    let rows: Result<Vec<LinearizationRow<T>>> = deltas
        .par_iter()
        .map(|&delta| {
            let closed = rwa_probe_component(model, steady, delta, T::one());
            let full = full_linear_response(model, steady, delta)?.a_plus;
            let run = run_probe_oracle(model, steady, delta, eps_pr, settings)?;
            let oracle = run.demodulation.component / eps_pr;
            let (ec_small, ef_small) = match eps_small {
                Some(e) => {
                    let small = run_probe_oracle(model, steady, delta, e, settings)?;
                    let o = small.demodulation.component / e;
                    (Some(rel_to(o, closed)), Some(rel_to(o, full)))
                }
                None => (None, None),
            };
            Ok(LinearizationRow {
                delta,
                oracle,
                closed_form: closed,
                full_linear: full,
                error_closed_form: rel_to(oracle, closed),
                error_full_linear: rel_to(oracle, full),
                error_closed_form_small: ec_small,
                error_full_linear_small: ef_small,
            })
        })
        .collect();
    let rows = rows?;
    let scaling_exponent = match (small_ratio, rows.is_empty()) {
        (Some(small), false) => {
            let decades = (eps_pr_ratio / small).ln();
            let mut p: Vec<T> = rows
                .iter()
                .filter_map(|r| {
                    let lo = r.error_full_linear_small?;
                    (lo > T::zero() && r.error_full_linear > T::zero())
                        .then(|| (r.error_full_linear / lo).ln() / decades)
                })
                .collect();
            p.sort_by(|x, y| x.partial_cmp(y).expect("finite exponent"));
            p.get(p.len() / 2).copied()
        }
        _ => None,
    };
    Ok(LinearizationReport {
        eps_pr,
        eps_pr_small: eps_small,
        rows,
        scaling_exponent,
    })
}

/// |x − reference| / |reference|.
fn rel_to<T: Real>(x: Complex<T>, reference: Complex<T>) -> T {
    let scale = reference.norm();
    if scale > T::zero() {
        (x - reference).norm() / scale
    } else {
        rel_diff_c(x, reference)
    }
}
