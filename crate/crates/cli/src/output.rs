//! CSV and JSON serialization.
//!
//! Numbers are written with `{:e}` (shortest round-trip representation) so
//! identical results give identical bytes. Failed points keep their row with
//! empty numeric cells and `flag = 1`.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::analysis::DelayScan;
use sawomit::dynamics::LinearizationReport;
use sawomit::response::sweep::SweepPoint;
use sawomit::Sweep;

pub const SPECTRUM_COLUMNS: [&str; 9] = [
    "delta_rad_s",
    "delta_over_wb_minus_1",
    "re_epsT",
    "im_epsT",
    "T_pr",
    "phi_T_rad",
    "tau_T_s",
    "branch_id",
    "flag",
];

pub const DELAY_COLUMNS: [&str; 12] = [
    "P_pu_W",
    "G_om_rad_s",
    "Gamma_rad_s",
    "tau_at_wb_s",
    "tau_max_s",
    "nu_at_max_rad_s",
    "tau_min_s",
    "nu_at_min_rad_s",
    "tau_peak_abs_s",
    "fd_worst_rel",
    "fd_compared",
    "flag",
];

pub const ORACLE_COLUMNS: [&str; 14] = [
    "delta_rad_s",
    "offset_over_Gamma",
    "re_oracle",
    "im_oracle",
    "re_closed_form",
    "im_closed_form",
    "re_full_linear",
    "im_full_linear",
    "err_closed_form",
    "err_full_linear",
    "err_closed_form_small",
    "err_full_linear_small",
    "pass",
    "flag",
];

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn spectrum_cells(omega_b: f64, branch: Option<usize>, point: &SweepPoint<f64>) -> Vec<String> {
    let x = point.normalized_offset;
    let delta = omega_b + omega_b * x;
    match (&point.response, branch) {
        (Ok(r), Some(b)) => vec![
            num(r.delta),
            num(x),
            num(r.eps_t.re),
            num(r.eps_t.im),
            num(r.power_transmission),
            num(r.phase),
            num(r.group_delay),
            b.to_string(),
            "0".into(),
        ],
        _ => {
            let mut cells = vec![num(delta), num(x)];
            cells.extend(std::iter::repeat_n(String::new(), 6));
            cells.push("1".into());
            cells
        }
    }
}

/// Spectrum or sweep CSV. With a secondary axis, its value leads each row
/// under the column `secondary_column`.
pub fn sweep_csv(result: &Sweep, secondary_column: Option<&str>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = secondary_column.into_iter().collect();
    header.extend(SPECTRUM_COLUMNS);
    w.write_record(&header)?;
    let omega_b = result.device.mechanics.omega_b;
    for row in &result.rows {
        let branch = row.state.as_ref().ok().map(|s| s.steady.selected);
        for p in &row.points {
            let mut cells: Vec<String> = Vec::with_capacity(header.len());
            if secondary_column.is_some() {
                cells.push(row.secondary.map(num).unwrap_or_default());
            }
            cells.extend(spectrum_cells(omega_b, branch, p));
            w.write_record(&cells)?;
        }
    }
    Ok(w.into_inner()?)
}

pub fn delay_csv(scan: &DelayScan) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(DELAY_COLUMNS)?;
    for (row, &p) in scan.rows.iter().zip(&scan.powers) {
        let cells: Vec<String> = match row {
            Ok(r) => vec![
                num(r.pump_power),
                num(r.total_coupling),
                num(r.window_width),
                num(r.tau_center),
                num(r.tau_max),
                num(r.offset_at_max),
                num(r.tau_min),
                num(r.offset_at_min),
                num(r.tau_peak_abs),
                num(r.check.worst_relative),
                r.check.compared.to_string(),
                "0".into(),
            ],
            Err(_) => {
                let mut c = vec![num(p)];
                c.extend(std::iter::repeat_n(String::new(), 10));
                c.push("1".into());
                c
            }
        };
        w.write_record(&cells)?;
    }
    Ok(w.into_inner()?)
}

pub fn oracle_csv(report: &LinearizationReport<f64>, offsets: &[f64], tolerance: f64) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(ORACLE_COLUMNS)?;
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    for (r, k) in report.rows.iter().zip(offsets) {
        w.write_record([
            num(r.delta),
            num(*k),
            num(r.oracle.re),
            num(r.oracle.im),
            num(r.closed_form.re),
            num(r.closed_form.im),
            num(r.full_linear.re),
            num(r.full_linear.im),
            num(r.error_closed_form),
            num(r.error_full_linear),
            opt(r.error_closed_form_small),
            opt(r.error_full_linear_small),
            u8::from(r.error_closed_form <= tolerance).to_string(),
            "0".into(),
        ])?;
    }
    Ok(w.into_inner()?)
}

/// Pretty JSON with a trailing newline.
pub fn json<S: Serialize>(value: &S) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes `bytes` to `dir/name`, creating `dir` if needed.
pub fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let mut f = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
