//! Self-consistent classical steady state of the driven cavity and BAR.
//!
//! With x = |a_s|² the mechanical amplitude is
//! b_s = (i g x + ε_rf)/(iω_b + γ_b/2), which shifts the detuning to
//! Δ′_a = Δ_a − 2 g Re b_s = D₀ − s·x, and the cavity equation becomes the
//! cubic x·((D₀ − s x)² + κ_a²/4) = ε_pu². Up to three positive roots
//! exist (optical bistability); all of them are reported.

use num_complex::Complex;
use serde::Serialize;

use crate::cubic;
use crate::error::{Error, Result};
use crate::params::{Detuning, DeviceConfig, ModelParams};
use crate::scalar::{cplx, f64_of, half, lit, two, Real};

/// Fixed-point residual a returned branch must meet.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Relative accuracy of the detuning lock Δ′_a = ω_b.
pub const LOCK_TOLERANCE: f64 = 1e-12;
const LOCK_MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchSelection {
    /// Smallest photon number, continuously connected to the undriven state.
    #[default]
    Lower,
    Middle,
    Upper,
}

impl BranchSelection {
    pub fn name(self) -> &'static str {
        match self {
            BranchSelection::Lower => "lower",
            BranchSelection::Middle => "middle",
            BranchSelection::Upper => "upper",
        }
    }
}

impl std::str::FromStr for BranchSelection {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "lower" => Ok(BranchSelection::Lower),
            "middle" => Ok(BranchSelection::Middle),
            "upper" => Ok(BranchSelection::Upper),
            other => Err(format!("unknown branch `{other}` (lower|middle|upper)")),
        }
    }
}

/// One solution of the steady-state equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Branch<T> {
    /// n_cav = |a_s|².
    pub photon_number: T,
    pub a_s: Complex<T>,
    pub b_s: Complex<T>,
    /// Δ′_a (rad/s).
    pub effective_detuning: T,
    /// Relative fixed-point residual after re-substitution.
    pub residual: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyState<T> {
    /// Δ_a the state was solved for.
    pub pump_detuning: T,
    pub a_s: Complex<T>,
    pub b_s: Complex<T>,
    pub effective_detuning: T,
    /// |g_om · a_s| (rad/s).
    pub total_coupling: T,
    pub photon_number: T,
    /// All branches, ascending in photon number.
    pub branches: Vec<Branch<T>>,
    /// Index of the selected branch in `branches`.
    pub selected: usize,
}

impl<T: Real> SteadyState<T> {
    pub fn selected_branch(&self) -> &Branch<T> {
        &self.branches[self.selected]
    }

    pub fn is_bistable(&self) -> bool {
        self.branches.len() > 1
    }

    /// |G_om|².
    pub fn coupling_sq(&self) -> T {
        self.total_coupling * self.total_coupling
    }
}

/// Coefficients (highest power first) of the photon-number cubic
/// s² x³ − 2 D₀ s x² + (D₀² + κ²/4) x − ε_pu² in physical units.
pub fn photon_number_cubic<T: Real>(p: &ModelParams<T>) -> [T; 4] {
    let (d0, s) = spring_terms(p);
    let k2 = p.kappa_a * p.kappa_a / lit(4.0);
    [s * s, -two::<T>() * d0 * s, d0 * d0 + k2, -p.eps_pu * p.eps_pu]
}

/// All positive real photon numbers solving the self-consistency cubic,
/// ascending.
pub fn photon_number_roots<T: Real>(p: &ModelParams<T>) -> Vec<T> {
    if p.eps_pu == T::zero() {
        return vec![T::zero()];
    }
    let (d0, s) = spring_terms(p);
    let k = d0 * d0 + p.kappa_a * p.kappa_a / lit(4.0);
    // Scale by the uncoupled solution so the cubic reads α X³ − β X² + X − 1.
    let x_ref = p.eps_pu * p.eps_pu / k;
    let alpha = s * s * x_ref * x_ref / k;
    let beta = two::<T>() * d0 * s * x_ref / k;
    cubic::real_roots(alpha, -beta, T::one(), -T::one())
        .into_iter()
        .filter(|x| *x > T::zero())
        .map(|x| x * x_ref)
        .collect()
}

/// D₀ = Δ_a − g ε_rf γ_b/M and s = 2 g² ω_b/M with M = ω_b² + γ_b²/4, so
/// that Δ′_a = D₀ − s·x.
fn spring_terms<T: Real>(p: &ModelParams<T>) -> (T, T) {
    let m = p.omega_b * p.omega_b + p.gamma_b * p.gamma_b / lit(4.0);
    let d0 = p.pump_detuning - p.g_om * p.eps_rf * p.gamma_b / m;
    let s = two::<T>() * p.g_om * p.g_om * p.omega_b / m;
    (d0, s)
}

fn mechanical_amplitude<T: Real>(p: &ModelParams<T>, photon_number: T) -> Complex<T> {
    cplx(p.eps_rf, p.g_om * photon_number) / cplx(p.gamma_b * half(), p.omega_b)
}

fn cavity_amplitude<T: Real>(p: &ModelParams<T>, effective_detuning: T) -> Complex<T> {
    Complex::from(p.eps_pu) / cplx(p.kappa_a * half(), effective_detuning)
}

fn branch_from_root<T: Real>(p: &ModelParams<T>, x: T) -> Branch<T> {
    let b_s = mechanical_amplitude(p, x);
    let effective_detuning = p.pump_detuning - two::<T>() * p.g_om * b_s.re;
    let a_s = cavity_amplitude(p, effective_detuning);

    // Re-substitute: |a_s|² → b_s → Δ′_a → a_s and compare.
    let b_again = mechanical_amplitude(p, a_s.norm_sqr());
    let a_again = cavity_amplitude(p, p.pump_detuning - two::<T>() * p.g_om * b_again.re);
    let rel = |new: Complex<T>, old: Complex<T>| {
        let scale = old.norm();
        if scale > T::zero() {
            (new - old).norm() / scale
        } else {
            new.norm()
        }
    };
    let residual = rel(a_again, a_s).max(rel(b_again, b_s));
    Branch {
        photon_number: x,
        a_s,
        b_s,
        effective_detuning,
        residual,
    }
}

/// Solves the steady state for fixed Δ_a and picks a branch.
pub fn solve_steady_state<T: Real>(
    p: &ModelParams<T>,
    selection: BranchSelection,
) -> Result<SteadyState<T>> {
    let roots = photon_number_roots(p);
    if roots.is_empty() {
        return Err(Error::NoRoot);
    }
    let branches: Vec<Branch<T>> = roots.iter().map(|&x| branch_from_root(p, x)).collect();
    let tol = lit::<T>(RESIDUAL_TOLERANCE);
    if let Some((i, b)) = branches
        .iter()
        .enumerate()
        .find(|(_, b)| !(b.residual <= tol))
    {
        return Err(Error::Residual {
            branch: i,
            residual: f64_of(b.residual),
            tolerance: RESIDUAL_TOLERANCE,
        });
    }
    let selected = match selection {
        BranchSelection::Lower => 0,
        BranchSelection::Upper => branches.len() - 1,
        BranchSelection::Middle if branches.len() == 3 => 1,
        BranchSelection::Middle => {
            return Err(Error::MissingBranch {
                requested: "middle",
                available: branches.len(),
            })
        }
    };
    let chosen = branches[selected];
    Ok(SteadyState {
        pump_detuning: p.pump_detuning,
        a_s: chosen.a_s,
        b_s: chosen.b_s,
        effective_detuning: chosen.effective_detuning,
        total_coupling: total_coupling(p.g_om, chosen.a_s),
        photon_number: chosen.photon_number,
        branches,
        selected,
    })
}

/// |g_om · a_s|. The pump phase is absorbed, so only the magnitude enters
/// the response formulas.
pub fn total_coupling<T: Real>(g_om: T, a_s: Complex<T>) -> T {
    (a_s * g_om).norm()
}

/// A steady state together with the Δ_a and model parameters it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatingState<T> {
    pub pump_detuning: T,
    pub model: ModelParams<T>,
    pub steady: SteadyState<T>,
    /// Iterations spent locking (0 for an explicit Δ_a).
    pub lock_iterations: usize,
}

/// Solves the device at an explicit Δ_a.
pub fn solve_at_detuning<T: Real>(
    device: &DeviceConfig<T>,
    pump_detuning: T,
    selection: BranchSelection,
) -> Result<OperatingState<T>> {
    let model = device.model(pump_detuning)?;
    let steady = solve_steady_state(&model, selection)?;
    Ok(OperatingState {
        pump_detuning,
        model,
        steady,
        lock_iterations: 0,
    })
}

/// Solves the device with its configured detuning (explicit or locked).
pub fn solve_device<T: Real>(
    device: &DeviceConfig<T>,
    selection: BranchSelection,
) -> Result<OperatingState<T>> {
    match device.drive.detuning {
        Detuning::Fixed(d) => solve_at_detuning(device, d, selection),
        Detuning::LockToMechanical => lock_pump_detuning(device, device.mechanics.omega_b, selection),
    }
}

/// Finds Δ_a such that the selected branch has Δ′_a = `target`.
///
/// ε_pu depends weakly on Δ_a through ω_pu = ω_a − Δ_a, so the lock is a
/// genuine one-dimensional root search: bracket expansion around the
/// fixed-Δ′ estimate followed by Illinois false position.
pub fn lock_pump_detuning<T: Real>(
    device: &DeviceConfig<T>,
    target: T,
    selection: BranchSelection,
) -> Result<OperatingState<T>> {
    let tol = lit::<T>(LOCK_TOLERANCE) * target.abs().max(device.mechanics.gamma_b);
    let eval = |delta_a: T| -> Result<(T, OperatingState<T>)> {
        let state = solve_at_detuning(device, delta_a, selection)?;
        Ok((state.steady.effective_detuning - target, state))
    };

    // Estimate: hold Δ′_a = target, evaluate the spring shift, add it back.
    let first = device.model(target)?;
    let x0 = first.eps_pu * first.eps_pu
        / (target * target + first.kappa_a * first.kappa_a / lit(4.0));
    let b0 = mechanical_amplitude(&first, x0);
    let guess = target + two::<T>() * first.g_om * b0.re;

    let (f_guess, state) = eval(guess)?;
    if f_guess.abs() <= tol {
        return Ok(OperatingState {
            lock_iterations: 1,
            ..state
        });
    }

    // Bracket: step against the sign of f until it flips.
    let mut iterations = 1;
    let mut width = (two::<T>() * f_guess.abs()).max(device.mechanics.gamma_b);
    let (probe, f_probe) = loop {
        let probe = guess - f_guess.signum() * width;
        let (f_probe, _) = eval(probe)?;
        iterations += 1;
        if f_probe.signum() != f_guess.signum() || f_probe == T::zero() {
            break (probe, f_probe);
        }
        if iterations > 60 {
            return Err(Error::LockFailed {
                iterations,
                lo: f64_of(guess.min(probe)),
                hi: f64_of(guess.max(probe)),
                residual: f64_of(f_guess),
            });
        }
        width = width * two::<T>();
    };
    let (mut lo, mut f_lo, mut hi, mut f_hi) = if probe < guess {
        (probe, f_probe, guess, f_guess)
    } else {
        (guess, f_guess, probe, f_probe)
    };

    // Illinois false position.
    let mut side = 0i8;
    while iterations < LOCK_MAX_ITERATIONS {
        let mid = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        let mid = if mid > lo && mid < hi {
            mid
        } else {
            (lo + hi) * half()
        };
        let (f_mid, state) = eval(mid)?;
        iterations += 1;
        if f_mid.abs() <= tol || (hi - lo) <= lit::<T>(4.0) * T::epsilon() * mid.abs() {
            if f_mid.abs() <= tol {
                return Ok(OperatingState {
                    lock_iterations: iterations,
                    ..state
                });
            }
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
            if side == -1 {
                f_hi = f_hi * half();
            }
            side = -1;
        } else {
            hi = mid;
            f_hi = f_mid;
            if side == 1 {
                f_lo = f_lo * half();
            }
            side = 1;
        }
    }
    Err(Error::LockFailed {
        iterations,
        lo: f64_of(lo),
        hi: f64_of(hi),
        residual: f64_of(f_lo.abs().min(f_hi.abs())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use crate::params::DeviceConfig;
    use std::f64::consts::TAU;

    fn fig3_model(delta_a: f64) -> ModelParams<f64> {
        DeviceConfig::<f64>::fig3().model(delta_a).unwrap()
    }

    #[test]
    fn decoupled_limit_is_closed_form() {
        let mut p = fig3_model(TAU * 1.0e9);
        p.g_om = 0.0;
        p.eps_rf = 0.0;
        let ss = solve_steady_state(&p, BranchSelection::Lower).unwrap();
        assert_eq!(ss.branches.len(), 1);
        let want = Complex::from(p.eps_pu) / Complex::new(p.kappa_a / 2.0, p.pump_detuning);
        assert_relative_eq!(ss.a_s.re, want.re, max_relative = 1e-14);
        assert_relative_eq!(ss.a_s.im, want.im, max_relative = 1e-14);
        assert_eq!(ss.b_s, Complex::new(0.0, 0.0));
        assert_eq!(ss.total_coupling, 0.0);
    }

    #[test]
    fn undriven_cavity() {
        let mut p = fig3_model(TAU * 1.05e9);
        p.eps_pu = 0.0;
        let ss = solve_steady_state(&p, BranchSelection::Lower).unwrap();
        assert_eq!(ss.a_s, Complex::new(0.0, 0.0));
        let want = Complex::from(p.eps_rf) / Complex::new(p.gamma_b / 2.0, p.omega_b);
        assert_relative_eq!(ss.b_s.re, want.re, max_relative = 1e-14);
        assert_relative_eq!(ss.b_s.im, want.im, max_relative = 1e-14);
    }

    #[test]
    fn fig3_lock_matches_reference() {
        // tests/oracles/fig3_mp.py
        let dev = DeviceConfig::<f64>::fig3();
        let st = lock_pump_detuning(&dev, dev.mechanics.omega_b, BranchSelection::Lower).unwrap();
        let ss = &st.steady;
        assert_relative_eq!(ss.effective_detuning, dev.mechanics.omega_b, max_relative = 1e-9);
        assert_relative_eq!(st.pump_detuning - dev.mechanics.omega_b, 38_382_129.510_527_29, max_relative = 1e-6);
        assert_relative_eq!(ss.photon_number, 9.344_687_995_803_612, max_relative = 1e-9);
        assert_relative_eq!(ss.total_coupling, 295_789_662.587_037_1, max_relative = 1e-9);
        assert_eq!(ss.branches.len(), 1);
        // Δ_a − Δ′_a is the spring shift 2 g Re b_s.
        let shift = 2.0 * st.model.g_om * ss.b_s.re;
        assert_relative_eq!(st.pump_detuning - ss.effective_detuning, shift, max_relative = 1e-12);
    }

    #[test]
    fn lock_without_coupling_is_exact() {
        let mut dev = DeviceConfig::<f64>::fig3();
        dev.saw_enabled = false;
        let st = solve_device(&dev, BranchSelection::Lower).unwrap();
        assert_eq!(st.pump_detuning, dev.mechanics.omega_b);
        assert_eq!(st.steady.effective_detuning, dev.mechanics.omega_b);
    }

    #[test]
    fn total_coupling_cases() {
        assert_eq!(total_coupling(3.0, Complex::new(0.0, 0.0)), 0.0);
        assert_eq!(total_coupling(3.0, Complex::new(1.0, 0.0)), 3.0);
        assert_relative_eq!(total_coupling(2.0, Complex::new(0.6, 0.8)), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn bistable_branches_and_selection() {
        // Strong pump, large detuning, strong coupling: three roots.
        let p = ModelParams {
            pump_detuning: 20.0,
            kappa_a: 1.0,
            omega_b: 5.0,
            gamma_b: 0.01,
            g_om: 0.2,
            eps_pu: 30.0,
            eps_pr: 0.0,
            eps_rf: 0.0,
        };
        let lower = solve_steady_state(&p, BranchSelection::Lower).unwrap();
        assert_eq!(lower.branches.len(), 3, "{:?}", lower.branches);
        assert!(lower.branches.windows(2).all(|w| w[0].photon_number < w[1].photon_number));
        let mid = solve_steady_state(&p, BranchSelection::Middle).unwrap();
        let up = solve_steady_state(&p, BranchSelection::Upper).unwrap();
        assert_eq!((lower.selected, mid.selected, up.selected), (0, 1, 2));
        for b in &lower.branches {
            assert!(b.residual <= RESIDUAL_TOLERANCE);
        }
        let mono = solve_steady_state(&fig3_model(TAU * 1.05e9), BranchSelection::Middle);
        assert!(matches!(mono, Err(Error::MissingBranch { .. })));
    }

    #[test]
    fn f32_instantiation() {
        let dev = DeviceConfig::<f32>::fig3();
        let p = dev.model(dev.mechanics.omega_b).unwrap();
        let roots = photon_number_roots(&p);
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - 9.34).abs() < 0.05);
    }
}
