//! Computations shared by the run modes and the acceptance suite.

use rayon::prelude::*;
use serde::Serialize;

use sawomit::dynamics::{verify_linearization, LinearizationReport, OracleSettings};
use sawomit::params::{validate_regime, RegimeReport};
use sawomit::response::sweep::{nominal_detuning, sweep};
use sawomit::response::{
    check_delay_consistency, evaluate_at_offset, measure_dip_fwhm, output_quadrature_at_offset, DelayCheck,
};
use sawomit::steady_state::solve_at_detuning;
use sawomit::{BranchSelection, Device, Grid, Operating, Point, SecondaryAxis, Sweep, SweepOptions, SweepSpec};

/// Probe spectrum over normalized offsets (δ − ω_b)/ω_b.
pub fn spectrum(device: &Device, selection: BranchSelection, grid: Grid<f64>, label: &str) -> sawomit::Result<Sweep> {
    sweep(
        device,
        &SweepSpec {
            detuning: grid,
            secondary: None,
        },
        &SweepOptions {
            selection,
            label: label.into(),
        },
    )
}

/// Spectrum family over a secondary drive axis, Δ_a held at its nominal value.
pub fn family(
    device: &Device,
    selection: BranchSelection,
    grid: Grid<f64>,
    axis: SecondaryAxis,
    secondary: Grid<f64>,
) -> sawomit::Result<Sweep> {
    sweep(
        device,
        &SweepSpec {
            detuning: grid,
            secondary: Some((axis, secondary)),
        },
        &SweepOptions {
            selection,
            label: axis.name().into(),
        },
    )
}

/// Window metrics of one operating state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowMetrics {
    pub total_coupling: f64,
    /// γ_b + 4G²/κ_a.
    pub width_formula: f64,
    /// Measured FWHM of the Re ε_T dip; `None` if no dip is resolved.
    pub width_measured: Option<f64>,
    pub re_eps_t_center: f64,
    pub t_pr_center: f64,
}

/// Span and sample count used for the dip measurement, in units of Γ.
const FWHM_SPAN: f64 = 8.0;
const FWHM_POINTS: usize = 40_001;

pub fn window_metrics(state: &Operating) -> WindowMetrics {
    let op = Point::from_state(state);
    let gamma = op.window_width();
    let center = output_quadrature_at_offset(&op, 0.0);
    let t = center - 1.0;
    WindowMetrics {
        total_coupling: op.total_coupling(),
        width_formula: gamma,
        width_measured: measure_dip_fwhm(&op, FWHM_SPAN * gamma, FWHM_POINTS),
        re_eps_t_center: center.re,
        t_pr_center: t.norm_sqr(),
    }
}

/// One row of the delay-vs-pump scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayRow {
    pub pump_power: f64,
    pub total_coupling: f64,
    pub window_width: f64,
    pub tau_center: f64,
    pub tau_max: f64,
    pub offset_at_max: f64,
    pub tau_min: f64,
    pub offset_at_min: f64,
    pub tau_peak_abs: f64,
    /// Worst analytic vs finite-difference mismatch on this row's grid.
    pub check: DelayCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayScan {
    pub pump_detuning: f64,
    pub threshold_coupling: f64,
    pub threshold_power: f64,
    pub span_widths: f64,
    pub spectrum_points: usize,
    /// Pump powers, descending; `rows` is aligned with it.
    pub powers: Vec<f64>,
    pub rows: Vec<Result<DelayRow, sawomit::Error>>,
}

impl DelayScan {
    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.is_err()).count()
    }

    pub fn ok_rows(&self) -> impl Iterator<Item = &DelayRow> {
        self.rows.iter().filter_map(|r| r.as_ref().ok())
    }
}

/// P_pu at which the selected branch's G_om equals √(κ_a γ_b)/2, Δ_a fixed.
pub fn threshold_pump_power(device: &Device, pump_detuning: f64, selection: BranchSelection) -> sawomit::Result<f64> {
    let limit = sawomit::params::coupling_threshold(device.cavity.kappa_a, device.mechanics.gamma_b);
    let coupling = |p: f64| -> sawomit::Result<f64> {
        let mut d = *device;
        d.drive.pump_power = p;
        Ok(solve_at_detuning(&d, pump_detuning, selection)?.steady.total_coupling)
    };
    let mut hi = device.drive.pump_power;
    if !(hi > 0.0) {
        return Err(sawomit::Error::Invalid("drive.P_pu: must be positive for a delay scan".into()));
    }
    while coupling(hi)? < limit {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(sawomit::Error::NoRoot);
        }
    }
    let mut lo = hi;
    while coupling(lo)? >= limit {
        lo *= 0.5;
        if lo < 1e-30 {
            return Err(sawomit::Error::NoRoot);
        }
    }
    // Geometric bisection: G grows roughly as √P.
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if coupling(mid)? >= limit {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi / lo - 1.0 < 1e-13 {
            break;
        }
    }
    Ok(hi)
}

/// Descending log-spaced P_pu grid from `start` down to `1.1 · P_th` (or
/// `stop` if given), each row scanned over ±`span`·Γ with `points` samples.
pub fn delay_scan(
    device: &Device,
    selection: BranchSelection,
    start: Option<f64>,
    stop: Option<f64>,
    rows: usize,
    span: f64,
    points: usize,
) -> sawomit::Result<DelayScan> {
    let (pump_detuning, _) = nominal_detuning(device, selection)?;
    let threshold_power = threshold_pump_power(device, pump_detuning, selection)?;
    let start = start.unwrap_or(device.drive.pump_power);
    let stop = stop.unwrap_or(1.1 * threshold_power);
    let powers = Grid::log(start, stop, rows).values()?;
    if points < 3 || !(span > 0.0) {
        return Err(sawomit::Error::Grid("delay spectrum needs ≥ 3 points and a positive span".into()));
    }
    let rows = powers
        .par_iter()
        .copied()
        .map(|p| {
            let mut d = *device;
            d.drive.pump_power = p;
            d.validate()?;
            let state = solve_at_detuning(&d, pump_detuning, selection)?;
            delay_row(&state, p, span, points)
        })
        .collect();
    Ok(DelayScan {
        pump_detuning,
        threshold_coupling: sawomit::params::coupling_threshold(device.cavity.kappa_a, device.mechanics.gamma_b),
        threshold_power,
        span_widths: span,
        spectrum_points: points,
        powers,
        rows,
    })
}

fn delay_row(state: &Operating, pump_power: f64, span: f64, points: usize) -> sawomit::Result<DelayRow> {
    let op = Point::from_state(state);
    let gamma = op.window_width();
    let offsets = Grid::linear(-span * gamma, span * gamma, points).values()?;
    let responses = offsets
        .iter()
        .map(|&nu| evaluate_at_offset(&op, nu, state.model.eps_pr))
        .collect::<sawomit::Result<Vec<_>>>()?;
    let check = check_delay_consistency(&responses)?;
    let center = evaluate_at_offset(&op, 0.0, state.model.eps_pr)?;
    let max = responses
        .iter()
        .max_by(|a, b| a.group_delay.total_cmp(&b.group_delay))
        .expect("nonempty grid");
    let min = responses
        .iter()
        .min_by(|a, b| a.group_delay.total_cmp(&b.group_delay))
        .expect("nonempty grid");
    Ok(DelayRow {
        pump_power,
        total_coupling: op.total_coupling(),
        window_width: gamma,
        tau_center: center.group_delay,
        tau_max: max.group_delay,
        offset_at_max: max.offset,
        tau_min: min.group_delay,
        offset_at_min: min.offset,
        tau_peak_abs: max.group_delay.abs().max(min.group_delay.abs()),
        check,
    })
}

/// Time-domain check at detunings ω_b + k·Γ.
pub fn oracle(
    state: &Operating,
    offsets_in_widths: &[f64],
    ratio: f64,
    small_ratio: Option<f64>,
    settings: &OracleSettings,
) -> sawomit::Result<LinearizationReport<f64>> {
    let op = Point::from_state(state);
    let gamma = op.window_width();
    let deltas: Vec<f64> = offsets_in_widths.iter().map(|k| op.omega_b + k * gamma).collect();
    verify_linearization(&state.model, &state.steady, &deltas, ratio, small_ratio, settings)
}

/// Regime checks with the threshold evaluated at the state's G_om.
pub fn regime(device: &Device, state: Option<&Operating>) -> RegimeReport {
    validate_regime(
        device.cavity.kappa_a,
        device.mechanics.omega_b,
        device.mechanics.gamma_b,
        state.map(|s| s.steady.total_coupling),
    )
}
