//! Simulation of SAW-controlled optomechanically induced transparency in a
//! planar DBR cavity whose upper mirror stack vibrates as a bulk acoustic
//! resonator.
//!
//! The pipeline is
//! [`params`] (geometry and drive powers → model scalars) →
//! [`steady_state`] (self-consistent pump amplitudes, bistable branches) →
//! [`response`] (probe transmission, phase, group delay, sweeps), with
//! [`dynamics`] integrating the nonlinear mean-field equations in the time
//! domain as an independent check of the linearized response.
//!
//! All numerical code is generic over [`Real`]; the aliases below fix the
//! scalar to `f64`, which is what the tolerances are calibrated for.

pub mod cubic;
pub mod dynamics;
pub mod error;
pub mod params;
pub mod response;
pub mod scalar;
pub mod steady_state;

pub use error::{Error, Result};
pub use params::{
    CavityParams, DerivedQuantities, Detuning, DeviceConfig, DriveParams, MaterialStack,
    MechanicalParams, ModelParams, Provenance, SawSpec, Tagged,
};
pub use response::sweep::{Grid, SecondaryAxis, Spacing, SweepOptions, SweepResult, SweepSpec};
pub use response::{OperatingPoint, ProbeResponse};
pub use scalar::{Real, HBAR};
pub use steady_state::{BranchSelection, OperatingState, SteadyState};

pub type Device = DeviceConfig<f64>;
pub type Derived = DerivedQuantities<f64>;
pub type Model = ModelParams<f64>;
pub type Steady = SteadyState<f64>;
pub type Operating = OperatingState<f64>;
pub type Point = OperatingPoint<f64>;
pub type Probe = ProbeResponse<f64>;
pub type Sweep = SweepResult<f64>;
pub type Trace = dynamics::TimeTrace<f64>;
pub type Complex64 = num_complex::Complex<f64>;
