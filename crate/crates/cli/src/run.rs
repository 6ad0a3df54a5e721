//! Mode dispatch. Each mode assembles its results, then writes every
//! artifact from a single thread.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Context;
use serde::Serialize;

use crate::analysis::{self, DelayScan, WindowMetrics};
use crate::config::{Config, ConfigError};
use crate::output;
use crate::plot::{self, Figure, Panel, Series};
use sawomit::dynamics::OracleSettings;
use sawomit::params::{RegimeReport, Warning};
use sawomit::response::sweep::failure_summary;
use sawomit::response::{check_delay_consistency, DelayCheck};
use sawomit::steady_state::solve_device;
use sawomit::{Derived, Detuning, Device, Operating, Provenance, Sweep};

/// Tolerance of the oracle report on the closed-form comparison.
pub const ORACLE_TOLERANCE: f64 = 1e-3;
pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Runtime(_) => 1,
        }
    }
}

impl From<sawomit::Error> for RunError {
    fn from(e: sawomit::Error) -> Self {
        RunError::Runtime(e.into())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// 0 on success, 1 if any point failed.
    pub code: u8,
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
}

struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Artifacts {
    fn put(&mut self, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
        output::write(&self.dir, name, bytes)?;
        self.written.push(self.dir.join(name));
        Ok(())
    }
}

/// Validates `config` and runs its mode (`config.run.mode`, default spectrum).
pub fn run(config: &Config) -> Result<Outcome, RunError> {
    let warnings = config.validate()?;
    let mode = config.run.mode.as_deref().unwrap_or("spectrum");
    let mut art = Artifacts {
        dir: config.run.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        written: Vec::new(),
    };
    art.put("effective_config.toml", config.effective_toml().as_bytes())?;
    let mut summary = String::new();
    for w in &warnings {
        let _ = writeln!(summary, "warning: {}: {}", w.field, w.message);
    }
    let code = match mode {
        "derive" => derive(config, &warnings, &mut art, &mut summary)?,
        "steady" => steady(config, &mut art, &mut summary)?,
        "spectrum" => spectrum(config, &mut art, &mut summary)?,
        "sweep" => sweep(config, &mut art, &mut summary)?,
        "delay" => delay(config, &mut art, &mut summary)?,
        "oracle" => oracle(config, &mut art, &mut summary)?,
        other => {
            return Err(ConfigError::Value {
                section: "run".into(),
                key: "mode".into(),
                message: format!("unknown mode `{other}`"),
            }
            .into())
        }
    };
    Ok(Outcome {
        code,
        summary,
        artifacts: art.written,
    })
}

fn hz(x: f64) -> f64 {
    x / TAU
}

#[derive(Serialize)]
struct CouplingReport {
    used_rad_s: f64,
    used_provenance: Provenance,
    quoted_hz: Option<f64>,
    formula_hz: f64,
    /// used / formula; differs from 1 when a quoted value overrides the formula.
    ratio_used_over_formula: f64,
    inconsistent: bool,
}

#[derive(Serialize)]
struct RfWindow {
    p_rf_w: f64,
    p_rf_min_w: f64,
    p_rf_max_w: f64,
    feasible: bool,
    within: bool,
}

#[derive(Serialize)]
struct DeriveReport<'a> {
    device: &'a Device,
    detuning_mode: &'static str,
    pump_detuning_rad_s: f64,
    effective_detuning_rad_s: Option<f64>,
    total_coupling_rad_s: Option<f64>,
    steady_error: Option<String>,
    derived: &'a Derived,
    coupling: CouplingReport,
    saw_velocity_m_s: f64,
    saw_wavelength_m: f64,
    rf_window: RfWindow,
    regime: RegimeReport,
    warnings: &'a [Warning],
}

fn derive(config: &Config, warnings: &[Warning], art: &mut Artifacts, out: &mut String) -> anyhow::Result<u8> {
    let device = &config.device;
    let state = solve_device(device, config.run.branch);
    let delta_a = match (&state, device.drive.detuning) {
        (Ok(s), _) => s.pump_detuning,
        (Err(_), Detuning::Fixed(d)) => d,
        (Err(_), Detuning::LockToMechanical) => device.mechanics.omega_b,
    };
    let derived = device.derive(delta_a)?;
    let coupling = CouplingReport {
        used_rad_s: derived.g_om.value,
        used_provenance: derived.g_om.provenance,
        quoted_hz: device.coupling.map(hz),
        formula_hz: hz(derived.g_om_formula),
        ratio_used_over_formula: derived.coupling_ratio(),
        inconsistent: (derived.coupling_ratio() - 1.0).abs() > 1e-6,
    };
    let rf = RfWindow {
        p_rf_w: device.drive.rf_power,
        p_rf_min_w: derived.rf_min.value,
        p_rf_max_w: derived.rf_max.value,
        feasible: derived.rf_window_feasible,
        within: (derived.rf_min.value..=derived.rf_max.value).contains(&device.drive.rf_power),
    };
    let regime = analysis::regime(device, state.as_ref().ok());
    let report = DeriveReport {
        device,
        detuning_mode: match device.drive.detuning {
            Detuning::Fixed(_) => "fixed",
            Detuning::LockToMechanical => "lock",
        },
        pump_detuning_rad_s: delta_a,
        effective_detuning_rad_s: state.as_ref().ok().map(|s| s.steady.effective_detuning),
        total_coupling_rad_s: state.as_ref().ok().map(|s| s.steady.total_coupling),
        steady_error: state.as_ref().err().map(|e| e.to_string()),
        derived: &derived,
        saw_velocity_m_s: derived.saw_velocity.value,
        saw_wavelength_m: derived.saw_wavelength.value,
        coupling,
        rf_window: rf,
        regime,
        warnings,
    };

    let row = |out: &mut String, name: &str, v: f64, unit: &str, p: Provenance| {
        let _ = writeln!(out, "{name:<22} {v:>14.6e} {unit:<6} [{p}]");
    };
    let _ = writeln!(out, "derived parameters (Delta_a = {delta_a:.6e} rad/s, {})", report.detuning_mode);
    row(out, "eps_pu", derived.eps_pu.value, "1/s", derived.eps_pu.provenance);
    row(out, "eps_pr", derived.eps_pr.value, "1/s", derived.eps_pr.provenance);
    row(out, "v_saw", derived.saw_velocity.value, "m/s", derived.saw_velocity.provenance);
    row(out, "lambda_s", derived.saw_wavelength.value, "m", derived.saw_wavelength.provenance);
    row(out, "q0", derived.q0.value, "m", derived.q0.provenance);
    row(out, "F_rf", derived.rf_force.value, "N", derived.rf_force.provenance);
    row(out, "eps_rf", derived.eps_rf.value, "1/s", derived.eps_rf.provenance);
    row(out, "b0", derived.b0.value, "", derived.b0.provenance);
    row(out, "n0", derived.n0.value, "", derived.n0.provenance);
    row(out, "g_om/2pi", hz(derived.g_om.value), "Hz", derived.g_om.provenance);
    row(out, "g_om/2pi (formula)", report.coupling.formula_hz, "Hz", Provenance::FormulaDerived);
    let _ = writeln!(
        out,
        "{:<22} {:>14.6} {}",
        "g_om ratio used/formula",
        report.coupling.ratio_used_over_formula,
        if report.coupling.inconsistent { "(INCONSISTENT: quoted value differs from formula)" } else { "" }
    );
    row(out, "P_rf_min", derived.rf_min.value, "W", derived.rf_min.provenance);
    row(out, "P_rf_max", derived.rf_max.value, "W", derived.rf_max.provenance);
    if !report.rf_window.within {
        let _ = writeln!(out, "note: P_rf = {:e} W lies outside [P_rf_min, P_rf_max]", device.drive.rf_power);
    }
    if let Some(g) = report.total_coupling_rad_s {
        let _ = writeln!(out, "{:<22} {:>14.6e} rad/s", "G_om", g);
    }
    for c in report.regime.checks() {
        let _ = writeln!(out, "regime {:<15} {:>14.6e} {:?} ({})", c.name, c.value, c.status, c.requirement);
    }
    art.put("derive.json", &output::json(&report)?)?;
    match state {
        Ok(_) => Ok(0),
        Err(e) => {
            let _ = writeln!(out, "steady state failed: {e}");
            Ok(1)
        }
    }
}

#[derive(Serialize)]
struct SteadyReport<'a> {
    state: &'a Operating,
    bistable: bool,
    window: WindowMetrics,
    regime: RegimeReport,
}

fn steady(config: &Config, art: &mut Artifacts, out: &mut String) -> anyhow::Result<u8> {
    let state = solve_device(&config.device, config.run.branch)?;
    let s = &state.steady;
    let _ = writeln!(
        out,
        "Delta_a = {:.9e} rad/s ({} lock iterations), {} branch(es), selected {} ({})",
        state.pump_detuning,
        state.lock_iterations,
        s.branches.len(),
        s.selected,
        config.run.branch.name()
    );
    for (i, b) in s.branches.iter().enumerate() {
        let _ = writeln!(
            out,
            "  [{i}] n_cav = {:.9e}  Delta'_a = {:.9e}  |b_s| = {:.6e}  residual = {:.2e}",
            b.photon_number,
            b.effective_detuning,
            b.b_s.norm(),
            b.residual
        );
    }
    let _ = writeln!(out, "G_om = {:.9e} rad/s", s.total_coupling);
    let report = SteadyReport {
        state: &state,
        bistable: s.is_bistable(),
        window: analysis::window_metrics(&state),
        regime: analysis::regime(&config.device, Some(&state)),
    };
    art.put("steady.json", &output::json(&report)?)?;
    Ok(0)
}

#[derive(Serialize)]
struct SpectrumSummary {
    label: String,
    points: usize,
    failed: usize,
    failure: Option<String>,
    pump_detuning_rad_s: f64,
    window: Option<WindowMetrics>,
    delay_check: Option<Result<DelayCheck, sawomit::Error>>,
}

fn summarize(label: &str, result: &Sweep) -> SpectrumSummary {
    let state = result.rows.first().and_then(|r| r.state.as_ref().ok());
    SpectrumSummary {
        label: label.into(),
        points: result.len(),
        failed: result.failed_points(),
        failure: failure_summary(result),
        pump_detuning_rad_s: result.pump_detuning,
        window: state.map(analysis::window_metrics),
        delay_check: state.map(|_| check_delay_consistency(result.responses())),
    }
}

fn spectrum_series(result: &Sweep, label: &str, dashed: bool, f: impl Fn(&sawomit::Probe) -> f64) -> Series {
    Series {
        label: label.into(),
        points: result
            .iter()
            .map(|(_, p)| (p.normalized_offset, p.response.as_ref().map(&f).unwrap_or(f64::NAN)))
            .collect(),
        dashed,
    }
}

fn spectrum(config: &Config, art: &mut Artifacts, out: &mut String) -> anyhow::Result<u8> {
    let grid = config.run.detuning_grid();
    let on = analysis::spectrum(&config.device, config.run.branch, grid, "spectrum")?;
    let off = if config.device.saw_enabled {
        let mut d = config.device;
        d.saw_enabled = false;
        Some(analysis::spectrum(&d, config.run.branch, grid, "no SAW")?)
    } else {
        None
    };
    let mut summaries = vec![summarize(if config.device.saw_enabled { "saw" } else { "no_saw" }, &on)];
    art.put("spectrum.csv", &output::sweep_csv(&on, None)?)?;
    if let Some(off) = &off {
        art.put("spectrum_nosaw.csv", &output::sweep_csv(off, None)?)?;
        summaries.push(summarize("no_saw", off));
    }
    art.put("spectrum.json", &output::json(&summaries)?)?;
    if config.run.plot {
        let mut panels: Vec<Panel> = Vec::new();
        let quantities: [(&str, fn(&sawomit::Probe) -> f64); 5] = [
            ("Re eps_T", |r| r.eps_t.re),
            ("Im eps_T", |r| r.eps_t.im),
            ("T_pr", |r| r.power_transmission),
            ("phi_T (rad)", |r| r.phase),
            ("tau_T (s)", |r| r.group_delay),
        ];
        for (name, f) in quantities {
            let mut series = vec![spectrum_series(&on, summaries[0].label.as_str(), false, f)];
            if let Some(off) = &off {
                series.push(spectrum_series(off, "no_saw", true, f));
            }
            panels.push(Panel {
                y_label: name.into(),
                series,
            });
        }
        let fig = Figure {
            title: "probe response".into(),
            x_label: "(delta - omega_b)/omega_b".into(),
            panels,
        };
        art.put("spectrum.svg", plot::render(&fig)?.as_bytes())?;
    }
    let mut failed = 0;
    for s in &summaries {
        failed += s.failed;
        let _ = write!(out, "{}: {} points, {} failed", s.label, s.points, s.failed);
        if let Some(w) = &s.window {
            let _ = write!(
                out,
                "; Re eps_T(omega_b) = {:.6e}, T_pr(omega_b) = {:.6e}, Gamma = {:.6e} rad/s",
                w.re_eps_t_center, w.t_pr_center, w.width_formula
            );
        }
        let _ = writeln!(out);
        if let Some(msg) = &s.failure {
            let _ = writeln!(out, "  {msg}");
        }
    }
    Ok(u8::from(failed > 0))
}

#[derive(Serialize)]
struct SweepRowSummary {
    secondary: Option<f64>,
    error: Option<String>,
    window: Option<WindowMetrics>,
}

fn sweep(config: &Config, art: &mut Artifacts, out: &mut String) -> anyhow::Result<u8> {
    let axis = config.run.sweep_axis;
    let column = format!("{}_W", axis.name());
    let result = analysis::family(
        &config.device,
        config.run.branch,
        config.run.detuning_grid(),
        axis,
        config.run.sweep_grid(),
    )?;
    art.put("sweep.csv", &output::sweep_csv(&result, Some(&column))?)?;
    let rows: Vec<SweepRowSummary> = result
        .rows
        .iter()
        .map(|r| SweepRowSummary {
            secondary: r.secondary,
            error: r.state.as_ref().err().map(|e| e.to_string()),
            window: r.state.as_ref().ok().map(analysis::window_metrics),
        })
        .collect();
    #[derive(Serialize)]
    struct Report<'a> {
        axis: &'a str,
        pump_detuning_rad_s: f64,
        points: usize,
        failed: usize,
        failure: Option<String>,
        rows: Vec<SweepRowSummary>,
    }
    let report = Report {
        axis: &column,
        pump_detuning_rad_s: result.pump_detuning,
        points: result.len(),
        failed: result.failed_points(),
        failure: failure_summary(&result),
        rows,
    };
    art.put("sweep.json", &output::json(&report)?)?;
    if config.run.plot {
        let series = result
            .rows
            .iter()
            .map(|row| Series {
                label: format!("{} = {:.3e} W", axis.name(), row.secondary.unwrap_or(f64::NAN)),
                points: row
                    .points
                    .iter()
                    .map(|p| (p.normalized_offset, p.response.as_ref().map(|r| r.power_transmission).unwrap_or(f64::NAN)))
                    .collect(),
                dashed: false,
            })
            .collect();
        let fig = Figure {
            title: format!("T_pr vs detuning and {}", axis.name()),
            x_label: "(delta - omega_b)/omega_b".into(),
            panels: vec![Panel {
                y_label: "T_pr".into(),
                series,
            }],
        };
        art.put("sweep.svg", plot::render(&fig)?.as_bytes())?;
    }
    let _ = writeln!(out, "{column} sweep: {} rows x {} points, {} failed", result.rows.len(), config.run.delta_points, report.failed);
    for r in &report.rows {
        match (&r.window, &r.error) {
            (Some(w), _) => {
                let _ = writeln!(
                    out,
                    "  {:.4e} W: G_om = {:.4e}, Gamma = {:.4e} rad/s, T_pr(omega_b) = {:.6e}",
                    r.secondary.unwrap_or(f64::NAN),
                    w.total_coupling,
                    w.width_formula,
                    w.t_pr_center
                );
            }
            (None, Some(e)) => {
                let _ = writeln!(out, "  {:.4e} W: failed: {e}", r.secondary.unwrap_or(f64::NAN));
            }
            _ => {}
        }
    }
    if let Some(msg) = &report.failure {
        let _ = writeln!(out, "  {msg}");
    }
    Ok(u8::from(report.failed > 0))
}

fn delay(config: &Config, art: &mut Artifacts, out: &mut String) -> anyhow::Result<u8> {
    let r = &config.run;
    let scan: DelayScan = analysis::delay_scan(
        &config.device,
        r.branch,
        r.delay_max,
        r.delay_min,
        r.delay_points,
        r.delay_span,
        r.delay_spectrum_points,
    )
    .context("delay scan")?;
    art.put("delay.csv", &output::delay_csv(&scan)?)?;
    art.put("delay.json", &output::json(&scan)?)?;
    if r.plot {
        let series = |label: &str, f: fn(&analysis::DelayRow) -> f64| Series {
            label: label.into(),
            points: scan
                .rows
                .iter()
                .zip(&scan.powers)
                .map(|(row, &p)| (p, row.as_ref().map(f).unwrap_or(f64::NAN)))
                .collect(),
            dashed: false,
        };
        let fig = Figure {
            title: "group delay vs pump power".into(),
            x_label: "P_pu (W)".into(),
            panels: vec![Panel {
                y_label: "tau_T (s)".into(),
                series: vec![
                    series("tau at omega_b", |d| d.tau_center),
                    series("max over delta", |d| d.tau_max),
                    series("min over delta", |d| d.tau_min),
                ],
            }],
        };
        art.put("delay.svg", plot::render(&fig)?.as_bytes())?;
    }
    let _ = writeln!(
        out,
        "P_th = {:.6e} W (G_om threshold {:.6e} rad/s), {} rows, {} failed",
        scan.threshold_power,
        scan.threshold_coupling,
        scan.rows.len(),
        scan.failed()
    );
    let best = scan.ok_rows().map(|d| d.tau_peak_abs).fold(0.0, f64::max);
    let best_signed = scan.ok_rows().map(|d| d.tau_max).fold(f64::NEG_INFINITY, f64::max);
    let _ = writeln!(out, "max |tau_T| = {best:.6e} s, max signed tau_T = {best_signed:.6e} s");
    for (row, p) in scan.rows.iter().zip(&scan.powers) {
        if let Err(e) = row {
            let _ = writeln!(out, "  P_pu = {p:.4e} W failed: {e}");
        }
    }
    Ok(u8::from(scan.failed() > 0))
}

fn oracle(config: &Config, art: &mut Artifacts, out: &mut String) -> anyhow::Result<u8> {
    let r = &config.run;
    let state = solve_device(&config.device, r.branch)?;
    let settings = OracleSettings::default();
    let report = analysis::oracle(&state, &r.oracle_offsets, r.oracle_ratio, r.oracle_ratio_small, &settings)?;
    art.put("oracle.csv", &output::oracle_csv(&report, &r.oracle_offsets, ORACLE_TOLERANCE)?)?;
    let pass = report.rows.iter().all(|row| row.error_closed_form <= ORACLE_TOLERANCE);
    #[derive(Serialize)]
    struct Report<'a> {
        tolerance: f64,
        pass: bool,
        offsets_in_gamma: &'a [f64],
        settings: OracleSettings,
        report: &'a sawomit::dynamics::LinearizationReport<f64>,
    }
    art.put(
        "oracle.json",
        &output::json(&Report {
            tolerance: ORACLE_TOLERANCE,
            pass,
            offsets_in_gamma: &r.oracle_offsets,
            settings,
            report: &report,
        })?,
    )?;
    let _ = writeln!(
        out,
        "{:>8} {:>14} {:>14} {:>14}",
        "nu/Gamma", "err(closed)", "err(4-mode)", "err(4-mode,s)"
    );
    for (row, k) in report.rows.iter().zip(&r.oracle_offsets) {
        let _ = writeln!(
            out,
            "{k:>8.3} {:>14.4e} {:>14.4e} {:>14}",
            row.error_closed_form,
            row.error_full_linear,
            row.error_full_linear_small.map(|e| format!("{e:.4e}")).unwrap_or_default()
        );
    }
    let _ = writeln!(
        out,
        "closed form within {ORACLE_TOLERANCE:e}: {}",
        if pass { "yes" } else { "no" }
    );
    Ok(u8::from(!pass))
}
