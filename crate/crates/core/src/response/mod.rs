//! Linearized probe response around the pump steady state.
//!
//! With λ_a = δ − Δ′_a and λ_b = δ − ω_b the probe-frequency cavity
//! component is
//!
//! ```text
//! δa₊ = (γ_b/2 − iλ_b) ε_pr / [(κ_a/2 − iλ_a)(γ_b/2 − iλ_b) + |G_om|²]
//! ```
//!
//! and every observable follows from the output quadrature
//! ε_T = κ_a δa₊ / ε_pr: the transmission t_pr = ε_T − 1, the power
//! transmission |t_pr|², the phase arg ε_T and the group delay
//! τ_T = ∂ arg ε_T / ∂ω_pr.
//!
//! Detunings are handled as offsets ν = δ − ω_b from the mechanical
//! resonance, so that grids symmetric about ω_b stay symmetric in floating
//! point.

pub mod sweep;

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{cplx, f64_of, half, lit, two, Real};
use crate::steady_state::{OperatingState, SteadyState};

/// Relative agreement required between the analytic and finite-difference
/// group delay.
pub const DELAY_TOLERANCE: f64 = 1e-4;
/// Only points with |τ| above this fraction of the peak are compared.
pub const DELAY_FLOOR: f64 = 1e-3;

/// Everything the closed forms need from a solved steady state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint<T> {
    pub kappa_a: T,
    pub gamma_b: T,
    pub omega_b: T,
    /// Δ′_a (rad/s).
    pub effective_detuning: T,
    /// |G_om|² (rad²/s²).
    pub coupling_sq: T,
}

impl<T: Real> OperatingPoint<T> {
    pub fn new(kappa_a: T, gamma_b: T, omega_b: T, effective_detuning: T, total_coupling: T) -> Self {
        OperatingPoint {
            kappa_a,
            gamma_b,
            omega_b,
            effective_detuning,
            coupling_sq: total_coupling * total_coupling,
        }
    }

    pub fn from_steady(steady: &SteadyState<T>, kappa_a: T, gamma_b: T, omega_b: T) -> Self {
        Self::new(kappa_a, gamma_b, omega_b, steady.effective_detuning, steady.total_coupling)
    }

    pub fn from_state(state: &OperatingState<T>) -> Self {
        let m = &state.model;
        Self::from_steady(&state.steady, m.kappa_a, m.gamma_b, m.omega_b)
    }

    /// The same point with the optomechanical coupling removed.
    pub fn uncoupled(&self) -> Self {
        OperatingPoint {
            coupling_sq: T::zero(),
            ..*self
        }
    }

    pub fn total_coupling(&self) -> T {
        self.coupling_sq.sqrt()
    }

    /// Γ = γ_b + 4|G_om|²/κ_a.
    pub fn window_width(&self) -> T {
        window_width(self.total_coupling(), self.kappa_a, self.gamma_b)
    }

    /// (λ_a, λ_b) at probe offset ν = δ − ω_b.
    pub fn lambdas(&self, offset: T) -> (T, T) {
        (offset + (self.omega_b - self.effective_detuning), offset)
    }

    pub fn offset_of(&self, delta: T) -> T {
        delta - self.omega_b
    }

    /// Step for the finite-difference delay: max(10⁻⁶ Γ, 10⁻³ rad/s).
    pub fn delay_step(&self) -> T {
        (lit::<T>(1e-6) * self.window_width()).max(lit(1e-3))
    }
}

fn denominator<T: Real>(op: &OperatingPoint<T>, lambda_a: T, lambda_b: T) -> (Complex<T>, Complex<T>) {
    let mech = cplx(op.gamma_b * half(), -lambda_b);
    let opt = cplx(op.kappa_a * half(), -lambda_a);
    (mech, opt * mech + Complex::from(op.coupling_sq))
}

/// ε_T at probe offset ν.
pub fn output_quadrature_at_offset<T: Real>(op: &OperatingPoint<T>, offset: T) -> Complex<T> {
    let (la, lb) = op.lambdas(offset);
    let (mech, den) = denominator(op, la, lb);
    mech * op.kappa_a / den
}

/// ε_T at probe-pump detuning δ. Independent of ε_pr.
pub fn output_quadrature<T: Real>(op: &OperatingPoint<T>, delta: T) -> Complex<T> {
    output_quadrature_at_offset(op, op.offset_of(delta))
}

/// ⟨δa₊⟩ at probe-pump detuning δ for probe amplitude ε_pr.
pub fn probe_component<T: Real>(op: &OperatingPoint<T>, delta: T, eps_pr: T) -> Complex<T> {
    probe_component_at_offset(op, op.offset_of(delta), eps_pr)
}

pub fn probe_component_at_offset<T: Real>(op: &OperatingPoint<T>, offset: T, eps_pr: T) -> Complex<T> {
    let (la, lb) = op.lambdas(offset);
    let (mech, den) = denominator(op, la, lb);
    mech * eps_pr / den
}

/// t_pr = ε_T − 1 and T_pr = |t_pr|².
pub fn transmission<T: Real>(eps_t: Complex<T>) -> (Complex<T>, T) {
    let t = eps_t - T::one();
    (t, t.norm_sqr())
}

/// φ_T = arg ε_T ∈ (−π, π].
pub fn phase<T: Real>(eps_t: Complex<T>) -> Result<T> {
    if eps_t.re == T::zero() && eps_t.im == T::zero() {
        return Err(Error::UndefinedPhase { delta: f64::NAN });
    }
    let phi = eps_t.im.atan2(eps_t.re);
    // atan2 returns −π for (−x, −0.0); fold onto the half-open interval.
    Ok(if phi <= -T::PI() { T::PI() } else { phi })
}

/// τ_T = Im[(1/ε_T) ∂ε_T/∂ω_pr], differentiated in closed form.
///
/// At fixed pump ∂λ_a/∂ω_pr = ∂λ_b/∂ω_pr = 1, so with N = γ_b/2 − iλ_b and
/// D = (κ_a/2 − iλ_a) N + |G|²:  ∂ ln ε_T = −i/N + i(N + κ_a/2 − iλ_a)/D.
pub fn group_delay_analytic_at_offset<T: Real>(op: &OperatingPoint<T>, offset: T) -> Result<T> {
    let (la, lb) = op.lambdas(offset);
    let (mech, den) = denominator(op, la, lb);
    if mech.norm_sqr() == T::zero() || den.norm_sqr() == T::zero() {
        return Err(Error::UndefinedPhase {
            delta: f64_of(offset + op.omega_b),
        });
    }
    let i = Complex::<T>::i();
    let opt = cplx(op.kappa_a * half(), -la);
    let dlog = -i / mech + i * (mech + opt) / den;
    Ok(dlog.im)
}

/// Central finite difference of the unwrapped phase with step `h`.
pub fn group_delay_numeric_at_offset<T: Real>(op: &OperatingPoint<T>, offset: T, h: T) -> Result<T> {
    let at = |nu: T| {
        let e = output_quadrature_at_offset(op, nu);
        phase(e).map_err(|_| Error::UndefinedPhase {
            delta: f64_of(nu + op.omega_b),
        })
    };
    let plus = at(offset + h)?;
    let minus = at(offset - h)?;
    Ok(unwrap_difference(plus - minus) / (two::<T>() * h))
}

/// Maps a phase difference onto (−π, π] by removing the nearest multiple of 2π.
pub fn unwrap_difference<T: Real>(diff: T) -> T {
    diff - T::TAU() * (diff / T::TAU()).round()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupDelay<T> {
    pub analytic: T,
    pub numeric: T,
}

impl<T: Real> GroupDelay<T> {
    pub fn relative_mismatch(&self) -> T {
        crate::scalar::rel_diff(self.analytic, self.numeric)
    }
}

/// Both group-delay paths at δ; the analytic one is authoritative.
pub fn group_delay<T: Real>(op: &OperatingPoint<T>, delta: T) -> Result<GroupDelay<T>> {
    group_delay_at_offset(op, op.offset_of(delta))
}

pub fn group_delay_at_offset<T: Real>(op: &OperatingPoint<T>, offset: T) -> Result<GroupDelay<T>> {
    Ok(GroupDelay {
        analytic: group_delay_analytic_at_offset(op, offset)?,
        numeric: group_delay_numeric_at_offset(op, offset, op.delay_step())?,
    })
}

/// Γ = γ_b + 4 G_om²/κ_a.
pub fn window_width<T: Real>(total_coupling: T, kappa_a: T, gamma_b: T) -> T {
    gamma_b + lit::<T>(4.0) * total_coupling * total_coupling / kappa_a
}

/// One point of a probe spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeResponse<T> {
    /// δ = ω_pr − ω_pu (rad/s).
    pub delta: T,
    /// ν = δ − ω_b (rad/s).
    pub offset: T,
    pub lambda_a: T,
    pub lambda_b: T,
    /// δa₊ per unit probe amplitude scaled by `eps_pr`.
    pub probe_component: Complex<T>,
    pub eps_t: Complex<T>,
    pub t_pr: Complex<T>,
    pub power_transmission: T,
    pub phase: T,
    /// Analytic group delay (s).
    pub group_delay: T,
    /// Finite-difference group delay (s), kept for consistency checks.
    pub group_delay_fd: T,
}

/// Full probe response at offset ν from the mechanical resonance.
pub fn evaluate_at_offset<T: Real>(op: &OperatingPoint<T>, offset: T, eps_pr: T) -> Result<ProbeResponse<T>> {
    let (lambda_a, lambda_b) = op.lambdas(offset);
    let eps_t = output_quadrature_at_offset(op, offset);
    let (t_pr, power_transmission) = transmission(eps_t);
    let phase = phase(eps_t).map_err(|_| Error::UndefinedPhase {
        delta: f64_of(offset + op.omega_b),
    })?;
    let delay = group_delay_at_offset(op, offset)?;
    Ok(ProbeResponse {
        delta: op.omega_b + offset,
        offset,
        lambda_a,
        lambda_b,
        probe_component: probe_component_at_offset(op, offset, eps_pr),
        eps_t,
        t_pr,
        power_transmission,
        phase,
        group_delay: delay.analytic,
        group_delay_fd: delay.numeric,
    })
}

/// Outcome of comparing the two group-delay paths over a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayCheck {
    pub peak: f64,
    pub compared: usize,
    pub worst_relative: f64,
    pub worst_offset: f64,
}

/// Compares analytic and finite-difference delays wherever |τ| exceeds
/// [`DELAY_FLOOR`] of the peak; fails above [`DELAY_TOLERANCE`].
pub fn check_delay_consistency<'a, T: Real>(
    points: impl IntoIterator<Item = &'a ProbeResponse<T>>,
) -> Result<DelayCheck> {
    let points: Vec<&ProbeResponse<T>> = points.into_iter().collect();
    let peak = points
        .iter()
        .map(|p| p.group_delay.abs())
        .fold(T::zero(), T::max);
    let floor = peak * lit(DELAY_FLOOR);
    let mut check = DelayCheck {
        peak: f64_of(peak),
        compared: 0,
        worst_relative: 0.0,
        worst_offset: 0.0,
    };
    let mut worst: Option<&ProbeResponse<T>> = None;
    for p in points.iter().filter(|p| p.group_delay.abs() > floor) {
        check.compared += 1;
        let rel = f64_of(crate::scalar::rel_diff(p.group_delay, p.group_delay_fd));
        if rel > check.worst_relative {
            check.worst_relative = rel;
            check.worst_offset = f64_of(p.offset);
            worst = Some(p);
        }
    }
    match worst {
        Some(p) if check.worst_relative > DELAY_TOLERANCE => Err(Error::DelayMismatch {
            delta: f64_of(p.delta),
            analytic: f64_of(p.group_delay),
            numeric: f64_of(p.group_delay_fd),
        }),
        _ => Ok(check),
    }
}

/// Full width at half depth of the transparency dip in Re ε_T, measured
/// numerically on a uniform offset grid of `points` samples over
/// [−half_span, half_span].
///
/// The dip depth at each offset is Re ε_T of the uncoupled cavity minus
/// Re ε_T with coupling, so the broad cavity Lorentzian does not bias the
/// width. Crossings are located by linear interpolation. Returns `None` if
/// the dip does not fall below half depth on both sides within the span.
pub fn measure_dip_fwhm<T: Real>(op: &OperatingPoint<T>, half_span: T, points: usize) -> Option<T> {
    if points < 3 {
        return None;
    }
    let bare = op.uncoupled();
    let step = two::<T>() * half_span / lit((points - 1) as f64);
    let samples: Vec<(T, T)> = (0..points)
        .map(|k| {
            let nu = -half_span + step * lit(k as f64);
            let depth = output_quadrature_at_offset(&bare, nu).re - output_quadrature_at_offset(op, nu).re;
            (nu, depth)
        })
        .collect();
    let (imax, &(_, peak)) = samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).expect("finite depth"))?;
    if peak <= T::zero() {
        return None;
    }
    let level = peak * half();
    let crossing = |i: usize, j: usize| {
        let (x0, y0) = samples[i];
        let (x1, y1) = samples[j];
        x0 + (level - y0) * (x1 - x0) / (y1 - y0)
    };
    let left = (1..=imax).rev().find(|&i| samples[i - 1].1 < level).map(|i| crossing(i - 1, i))?;
    let right = (imax..points - 1).find(|&i| samples[i + 1].1 < level).map(|i| crossing(i, i + 1))?;
    Some(right - left)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::DeviceConfig;
    use crate::steady_state::{lock_pump_detuning, BranchSelection};
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn fig3_point() -> OperatingPoint<f64> {
        let dev = DeviceConfig::<f64>::fig3();
        let st = lock_pump_detuning(&dev, dev.mechanics.omega_b, BranchSelection::Lower).unwrap();
        OperatingPoint::from_state(&st)
    }

    /// The fig3 point with Δ′_a pinned to ω_b bit-for-bit.
    fn fig3_symmetric() -> OperatingPoint<f64> {
        let mut op = fig3_point();
        op.effective_detuning = op.omega_b;
        op
    }

    #[test]
    fn bare_cavity_resonance() {
        let op = OperatingPoint::new(2.0e10, 6.0e4, 6.6e9, 6.6e9, 0.0);
        let a = probe_component(&op, 6.6e9, 3.0);
        assert_relative_eq!(a.re, 2.0 * 3.0 / 2.0e10, max_relative = 1e-15);
        assert_eq!(a.im, 0.0);
    }

    #[test]
    fn symmetry_point_is_real() {
        let op = fig3_symmetric();
        let eps_pr = 1.7e7;
        let a = probe_component_at_offset(&op, 0.0, eps_pr);
        let want = (op.gamma_b / 2.0) * eps_pr / (op.kappa_a * op.gamma_b / 4.0 + op.coupling_sq);
        assert_relative_eq!(a.re, want, max_relative = 1e-14);
        assert_eq!(a.im, 0.0);
    }

    #[test]
    fn fig3_transparency_dip() {
        let op = fig3_symmetric();
        let e = output_quadrature_at_offset(&op, 0.0);
        // tests/oracles/fig3_mp.py
        assert_relative_eq!(e.re, 0.008_257_040_135_782_466, max_relative = 1e-9);
        assert_eq!(e.im, 0.0);
        let bare = output_quadrature_at_offset(&op.uncoupled(), 0.0);
        assert_eq!(bare, Complex::new(2.0, 0.0));
        // δa₊ is suppressed by more than two orders of magnitude
        assert!(e.norm() < bare.norm() / 100.0);
    }

    #[test]
    fn uncoupled_is_complex_lorentzian_and_all_pass() {
        let op = OperatingPoint::new(2.2e10, 6.6e4, 6.6e9, 6.5e9, 0.0);
        for k in -50..=50 {
            let nu = k as f64 * 3.7e8;
            let e = output_quadrature_at_offset(&op, nu);
            let (la, _) = op.lambdas(nu);
            let want = Complex::from(op.kappa_a) / Complex::new(op.kappa_a / 2.0, -la);
            assert_relative_eq!(e.re, want.re, max_relative = 1e-13, epsilon = 1e-300);
            let (_, t) = transmission(e);
            assert_relative_eq!(t, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn conjugate_symmetry_about_mechanical_resonance() {
        let op = fig3_symmetric();
        for k in 1..=400 {
            let nu = k as f64 * 6.6e4;
            let up = output_quadrature_at_offset(&op, nu);
            let down = output_quadrature_at_offset(&op, -nu);
            assert!(crate::scalar::rel_diff_c(up, down.conj()) <= 1e-12, "nu = {nu}");
        }
    }

    #[test]
    fn transmission_cases() {
        assert_eq!(transmission(Complex::new(0.0, 0.0)), (Complex::new(-1.0, 0.0), 1.0));
        assert_eq!(transmission(Complex::new(2.0, 0.0)), (Complex::new(1.0, 0.0), 1.0));
    }

    #[test]
    fn phase_cases() {
        assert_eq!(phase(Complex::new(3.0, 0.0)).unwrap(), 0.0);
        assert_relative_eq!(phase(Complex::new(0.0, 1.0)).unwrap(), FRAC_PI_2);
        assert_eq!(phase(Complex::new(-1.0, -0.0)).unwrap(), PI);
        assert!(matches!(phase(Complex::<f64>::new(0.0, 0.0)), Err(Error::UndefinedPhase { .. })));
        let op = fig3_symmetric();
        assert_eq!(phase(output_quadrature_at_offset(&op, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn bare_cavity_delay() {
        // arg[κ/(κ/2 − iλ)] = atan(2λ/κ): slope 2/κ at λ = 0
        let op = OperatingPoint::new(2.2e10, 6.6e4, 6.6e9, 6.6e9, 0.0);
        let d = group_delay_at_offset(&op, 0.0).unwrap();
        assert_relative_eq!(d.analytic, 2.0 / op.kappa_a, max_relative = 1e-14);
        assert_relative_eq!(d.numeric, 2.0 / op.kappa_a, max_relative = 1e-8);
    }

    #[test]
    fn far_detuned_delay_vanishes() {
        let op = fig3_point();
        let near = group_delay_analytic_at_offset(&op, 0.0).unwrap().abs();
        let far = group_delay_analytic_at_offset(&op, 1e13).unwrap().abs();
        assert!(far < 1e-6 * near, "far = {far:e}");
    }

    #[test]
    fn delay_paths_agree_on_fig3_grid() {
        let op = fig3_point();
        let wb = op.omega_b;
        let pts: Vec<_> = (0..2001)
            .map(|k| {
                let x = -0.004 + 0.008 * k as f64 / 2000.0;
                evaluate_at_offset(&op, wb * x, 1.0).unwrap()
            })
            .collect();
        let check = check_delay_consistency(&pts).unwrap();
        assert!(check.worst_relative <= DELAY_TOLERANCE, "{check:?}");
        assert!(check.compared > 100);
    }

    #[test]
    fn window_width_cases() {
        assert_eq!(window_width(0.0, 3.0, 7.0), 7.0);
        let op = fig3_point();
        // tests/oracles/fig3_mp.py
        assert_relative_eq!(op.window_width(), 15_979_926.133_454_306, max_relative = 1e-8);
        let fwhm = measure_dip_fwhm(&op, 10.0 * op.window_width(), 20_001).unwrap();
        assert_relative_eq!(fwhm, op.window_width(), max_relative = 0.05);
    }

    #[test]
    fn unwrap_difference_wraps() {
        assert_relative_eq!(unwrap_difference(TAU - 0.1), -0.1, max_relative = 1e-12);
        assert_relative_eq!(unwrap_difference(-TAU + 0.1), 0.1, max_relative = 1e-12);
        assert_eq!(unwrap_difference(0.25), 0.25);
    }
}
