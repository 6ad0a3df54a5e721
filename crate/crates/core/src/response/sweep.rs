//! Spectra over probe detuning, optionally repeated along a pump-power or
//! RF-power axis with the steady state re-solved per row.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{Detuning, DeviceConfig};
use crate::response::{evaluate_at_offset, OperatingPoint, ProbeResponse};
use crate::scalar::{f64_of, lit, Real};
use crate::steady_state::{
    lock_pump_detuning, solve_at_detuning, BranchSelection, OperatingState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

/// `points` samples from `start` to `end` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid<T> {
    pub start: T,
    pub end: T,
    pub points: usize,
    pub spacing: Spacing,
}

impl<T: Real> Grid<T> {
    pub fn linear(start: T, end: T, points: usize) -> Self {
        Grid {
            start,
            end,
            points,
            spacing: Spacing::Linear,
        }
    }

    pub fn log(start: T, end: T, points: usize) -> Self {
        Grid {
            start,
            end,
            points,
            spacing: Spacing::Log,
        }
    }

    pub fn values(&self) -> Result<Vec<T>> {
        if self.points < 2 {
            return Err(Error::Grid(format!("need at least 2 points, got {}", self.points)));
        }
        if !(self.start.is_finite() && self.end.is_finite()) || self.start == self.end {
            return Err(Error::Grid("start and end must be finite and distinct".into()));
        }
        let last = lit::<T>((self.points - 1) as f64);
        let values: Vec<T> = match self.spacing {
            Spacing::Linear => {
                let step = (self.end - self.start) / last;
                (0..self.points)
                    .map(|k| {
                        if k == self.points - 1 {
                            self.end
                        } else {
                            self.start + step * lit(k as f64)
                        }
                    })
                    .collect()
            }
            Spacing::Log => {
                if self.start <= T::zero() || self.end <= T::zero() {
                    return Err(Error::Grid("log grid needs positive bounds".into()));
                }
                let (a, b) = (self.start.ln(), self.end.ln());
                (0..self.points)
                    .map(|k| {
                        if k == 0 {
                            self.start
                        } else if k == self.points - 1 {
                            self.end
                        } else {
                            (a + (b - a) * lit::<T>(k as f64) / last).exp()
                        }
                    })
                    .collect()
            }
        };
        let increasing = values.windows(2).all(|w| w[1] > w[0]);
        let decreasing = values.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(Error::Grid("grid is not strictly monotone".into()));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SecondaryAxis {
    #[serde(rename = "P_pu")]
    PumpPower,
    #[serde(rename = "P_rf")]
    RfPower,
}

impl SecondaryAxis {
    pub fn name(self) -> &'static str {
        match self {
            SecondaryAxis::PumpPower => "P_pu",
            SecondaryAxis::RfPower => "P_rf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSpec<T> {
    /// Probe axis in units of (δ − ω_b)/ω_b.
    pub detuning: Grid<T>,
    pub secondary: Option<(SecondaryAxis, Grid<T>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOptions {
    pub selection: BranchSelection,
    /// Free-form label carried into the output metadata (e.g. preset name).
    pub label: String,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            selection: BranchSelection::Lower,
            label: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint<T> {
    /// (δ − ω_b)/ω_b exactly as on the grid.
    pub normalized_offset: T,
    pub response: Result<ProbeResponse<T>, Error>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow<T> {
    /// Value on the secondary axis (W), if any.
    pub secondary: Option<T>,
    /// The steady state every point of this row was computed from.
    pub state: Result<OperatingState<T>, Error>,
    pub points: Vec<SweepPoint<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult<T> {
    pub spec: SweepSpec<T>,
    pub options: SweepOptions,
    /// Device snapshot the sweep ran on.
    pub device: DeviceConfig<T>,
    /// Δ_a held fixed along the secondary axis.
    pub pump_detuning: T,
    /// Rows in secondary-axis order (a single row without a secondary axis).
    pub rows: Vec<SweepRow<T>>,
}

impl<T: Real> SweepResult<T> {
    pub fn len(&self) -> usize {
        self.rows.iter().map(|r| r.points.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn failed_points(&self) -> usize {
        self.rows
            .iter()
            .flat_map(|r| &r.points)
            .filter(|p| p.response.is_err())
            .count()
    }

    /// Row-major iterator over (row, point).
    pub fn iter(&self) -> impl Iterator<Item = (&SweepRow<T>, &SweepPoint<T>)> {
        self.rows.iter().flat_map(|r| r.points.iter().map(move |p| (r, p)))
    }

    /// Successful responses in row-major order.
    pub fn responses(&self) -> impl Iterator<Item = &ProbeResponse<T>> {
        self.iter().filter_map(|(_, p)| p.response.as_ref().ok())
    }
}

/// Δ_a used for every row: the explicit value, or the value that locks
/// Δ′_a = ω_b at the device's nominal drive.
pub fn nominal_detuning<T: Real>(device: &DeviceConfig<T>, selection: BranchSelection) -> Result<(T, OperatingState<T>)> {
    match device.drive.detuning {
        Detuning::Fixed(d) => Ok((d, solve_at_detuning(device, d, selection)?)),
        Detuning::LockToMechanical => {
            let st = lock_pump_detuning(device, device.mechanics.omega_b, selection)?;
            Ok((st.pump_detuning, st))
        }
    }
}

/// Runs a sweep. Per-row solver failures and per-point evaluation failures
/// are recorded in place; only an invalid grid or a failing nominal solve
/// aborts.
pub fn sweep<T: Real>(
    device: &DeviceConfig<T>,
    spec: &SweepSpec<T>,
    options: &SweepOptions,
) -> Result<SweepResult<T>> {
    let offsets = spec.detuning.values()?;
    let secondary = match &spec.secondary {
        Some((axis, grid)) => Some((*axis, grid.values()?)),
        None => None,
    };
    let (pump_detuning, nominal) = nominal_detuning(device, options.selection)?;

    let row_inputs: Vec<(Option<T>, Option<DeviceConfig<T>>)> = match secondary {
        None => vec![(None, None)],
        Some((axis, values)) => values
            .into_iter()
            .map(|v| {
                let mut d = *device;
                match axis {
                    SecondaryAxis::PumpPower => d.drive.pump_power = v,
                    SecondaryAxis::RfPower => d.drive.rf_power = v,
                }
                (Some(v), Some(d))
            })
            .collect(),
    };

    let rows = row_inputs
        .into_par_iter()
        .map(|(value, dev)| {
            let state = match dev {
                None => Ok(nominal.clone()),
                Some(d) => d
                    .validate()
                    .and_then(|_| solve_at_detuning(&d, pump_detuning, options.selection)),
            };
            let points = match &state {
                Ok(st) => evaluate_row(st, &offsets),
                Err(e) => offsets
                    .iter()
                    .map(|&x| SweepPoint {
                        normalized_offset: x,
                        response: Err(e.clone()),
                    })
                    .collect(),
            };
            SweepRow {
                secondary: value,
                state,
                points,
            }
        })
        .collect();

    Ok(SweepResult {
        spec: *spec,
        options: options.clone(),
        device: *device,
        pump_detuning,
        rows,
    })
}

fn evaluate_row<T: Real>(state: &OperatingState<T>, offsets: &[T]) -> Vec<SweepPoint<T>> {
    let op = OperatingPoint::from_state(state);
    let eps_pr = state.model.eps_pr;
    offsets
        .par_iter()
        .map(|&x| SweepPoint {
            normalized_offset: x,
            response: evaluate_at_offset(&op, op.omega_b * x, eps_pr),
        })
        .collect()
}

/// Summary of a failed sweep for error reporting.
pub fn failure_summary<T: Real>(result: &SweepResult<T>) -> Option<String> {
    let failed = result.failed_points();
    (failed > 0).then(|| {
        let first = result
            .iter()
            .find_map(|(r, p)| p.response.as_ref().err().map(|e| (r.secondary, p.normalized_offset, e)))
            .expect("at least one failure");
        format!(
            "{failed} of {} points failed; first at secondary = {:?}, offset = {:e}: {}",
            result.len(),
            first.0.map(f64_of),
            f64_of(first.1),
            first.2
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::DeviceConfig;

    #[test]
    fn degenerate_grids_rejected() {
        assert!(Grid::linear(0.0, 1.0, 1).values().is_err());
        assert!(Grid::linear(1.0, 1.0, 5).values().is_err());
        assert!(Grid::log(-1.0, 1.0, 5).values().is_err());
        let g: Vec<f64> = Grid::log(1e-5, 1e-3, 5).values().unwrap();
        assert_eq!(g.first(), Some(&1e-5));
        assert_eq!(g.last(), Some(&1e-3));
        assert!((g[2] - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn fig3_axis_row_count() {
        let dev = DeviceConfig::<f64>::fig3();
        let spec = SweepSpec {
            detuning: Grid::linear(-0.004, 0.004, 2001),
            secondary: None,
        };
        let r = sweep(&dev, &spec, &SweepOptions::default()).unwrap();
        assert_eq!(r.len(), 2001);
        assert_eq!(r.failed_points(), 0);
        // odd grid includes δ = ω_b exactly
        assert_eq!(r.rows[0].points[1000].normalized_offset, 0.0);
        let st = r.rows[0].state.as_ref().unwrap();
        let gamma = OperatingPoint::from_state(st).window_width();
        let inside = r
            .responses()
            .filter(|p| p.offset.abs() <= gamma / 2.0)
            .count();
        assert!(inside >= 20, "only {inside} points inside the window");
    }

    #[test]
    fn secondary_axis_resolves_per_row_with_fixed_detuning() {
        let dev = DeviceConfig::<f64>::fig3();
        let spec = SweepSpec {
            detuning: Grid::linear(-0.001, 0.001, 11),
            secondary: Some((SecondaryAxis::RfPower, Grid::log(1e-5, 1e-3, 4))),
        };
        let r = sweep(&dev, &spec, &SweepOptions::default()).unwrap();
        assert_eq!(r.rows.len(), 4);
        assert_eq!(r.len(), 44);
        for row in &r.rows {
            let st = row.state.as_ref().unwrap();
            assert_eq!(st.pump_detuning, r.pump_detuning);
        }
        let d: Vec<f64> = r
            .rows
            .iter()
            .map(|row| row.state.as_ref().unwrap().steady.effective_detuning)
            .collect();
        assert!(d.windows(2).all(|w| w[1] != w[0]));
    }

    #[test]
    fn failed_rows_are_kept() {
        let dev = DeviceConfig::<f64>::fig3();
        let spec = SweepSpec {
            detuning: Grid::linear(-0.001, 0.001, 5),
            secondary: Some((SecondaryAxis::PumpPower, Grid::linear(-1e-8, 1e-8, 3))),
        };
        let r = sweep(&dev, &spec, &SweepOptions::default()).unwrap();
        assert_eq!(r.len(), 15);
        assert_eq!(r.failed_points(), 5);
        assert!(failure_summary(&r).unwrap().contains("5 of 15"));
    }

    #[test]
    fn parallel_assembly_is_deterministic() {
        let dev = DeviceConfig::<f64>::fig3();
        let spec = SweepSpec {
            detuning: Grid::linear(-0.002, 0.002, 301),
            secondary: Some((SecondaryAxis::PumpPower, Grid::linear(1e-8, 3e-8, 5))),
        };
        let a = sweep(&dev, &spec, &SweepOptions::default()).unwrap();
        let b = sweep(&dev, &spec, &SweepOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
