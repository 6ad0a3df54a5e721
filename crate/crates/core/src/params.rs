//! Device geometry, materials and drive powers, and the scalar model
//! parameters derived from them.
//!
//! Everything here is in SI units with angular frequencies in rad/s.
//! Conversion from ordinary frequency (Hz) and from laboratory units
//! (g/cm³, pg, µW, ...) happens at the configuration boundary.

use serde::Serialize;

use crate::error::{ensure_nonnegative, ensure_positive, Error, Result};
use crate::scalar::{f64_of, hbar, lit, two, Real, Twofold, HBAR};

/// Dielectric stack of the planar cavity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaterialStack<T> {
    /// Refractive index of the spacer.
    pub n_spacer: T,
    /// Spacer optical thickness / design wavelength (m).
    pub wavelength: T,
    /// Average density of the upper mirror stack (kg/m³).
    pub rho_upper: T,
    /// Total thickness of the upper mirror stack (m).
    pub d_upper: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CavityParams<T> {
    /// Optical mode angular frequency ω_a (rad/s).
    pub omega_a: T,
    /// Total energy decay rate κ_a (rad/s).
    pub kappa_a: T,
    /// Physical spacer thickness L (m).
    pub spacer_thickness: T,
}

/// The SAW is specified either by its velocity or by its wavelength; the
/// other follows from λ_s = 2π·v_SAW/ω_b.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SawSpec<T> {
    Velocity(T),
    Wavelength(T),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MechanicalParams<T> {
    /// BAR angular frequency ω_b (rad/s).
    pub omega_b: T,
    /// Intrinsic energy damping rate γ_b (rad/s).
    pub gamma_b: T,
    /// Effective motional mass m_b (kg).
    pub mass: T,
    /// IDT finger length l_IDTs (m).
    pub idt_length: T,
    pub saw: SawSpec<T>,
}

impl<T: Real> MechanicalParams<T> {
    pub fn saw_velocity(&self) -> Result<T> {
        match self.saw {
            SawSpec::Velocity(v) => Ok(v),
            SawSpec::Wavelength(l) => derive_saw_velocity(l, self.omega_b),
        }
    }

    pub fn saw_wavelength(&self) -> Result<T> {
        match self.saw {
            SawSpec::Velocity(v) => derive_saw_wavelength(v, self.omega_b),
            SawSpec::Wavelength(l) => Ok(l),
        }
    }

    /// Zero-point displacement √(ħ/(2ω_b m_b)).
    pub fn zero_point_length(&self) -> T {
        zero_point_length(self.omega_b, self.mass)
    }
}

/// How the pump-cavity detuning Δ_a = ω_a − ω_pu is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Detuning<T> {
    /// Explicit Δ_a (rad/s).
    Fixed(T),
    /// Choose Δ_a so that the effective detuning Δ′_a equals ω_b.
    LockToMechanical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriveParams<T> {
    /// Pump optical power (W).
    pub pump_power: T,
    /// Probe optical power (W); `None` means 10⁻³ of the pump power.
    pub probe_power: Option<T>,
    /// RF electrical power delivered to the IDTs (W).
    pub rf_power: T,
    pub detuning: Detuning<T>,
}

impl<T: Real> DriveParams<T> {
    pub const DEFAULT_PROBE_RATIO: f64 = 1e-3;

    pub fn probe_power(&self) -> T {
        self.probe_power
            .unwrap_or_else(|| self.pump_power * lit(Self::DEFAULT_PROBE_RATIO))
    }
}

/// Full device description as supplied by the user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviceConfig<T> {
    pub material: MaterialStack<T>,
    pub cavity: CavityParams<T>,
    pub mechanics: MechanicalParams<T>,
    pub drive: DriveParams<T>,
    /// User-supplied single-photon coupling g_om (rad/s). Wins over the
    /// formula when present.
    pub coupling: Option<T>,
    /// With the SAW off the BAR is not driven and does not couple:
    /// g_om = 0 and ε_rf = 0.
    pub saw_enabled: bool,
}

/// A non-fatal validation finding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Warning {
    pub field: String,
    pub message: String,
}

impl<T: Real> DeviceConfig<T> {
    /// Parameter set of the published device: GaAs/AlAs DBR cavity at
    /// 925 nm with a 1.05 GHz SAW-driven upper mirror.
    pub fn fig3() -> Self {
        let tau = T::TAU();
        DeviceConfig {
            material: MaterialStack {
                n_spacer: lit(3.57),
                wavelength: lit(925e-9),
                rho_upper: lit(4470.0),
                d_upper: lit(1.42e-6),
            },
            cavity: CavityParams {
                omega_a: tau * lit(324e12),
                kappa_a: tau * lit(3.5e9),
                spacer_thickness: lit(259.1e-9),
            },
            mechanics: MechanicalParams {
                omega_b: tau * lit(1.05e9),
                gamma_b: tau * lit(10.5e3),
                mass: lit(0.33e-15),
                idt_length: lit(400e-6),
                saw: SawSpec::Wavelength(lit(2.9e-6)),
            },
            drive: DriveParams {
                pump_power: lit(1.5e-8),
                probe_power: None,
                rf_power: lit(5e-3),
                detuning: Detuning::LockToMechanical,
            },
            coupling: Some(tau * lit(1.54e7)),
            saw_enabled: true,
        }
    }

    /// Checks every field invariant. Hard violations are errors; soft ones
    /// (e.g. a probe that is not much weaker than the pump) are returned as
    /// warnings.
    pub fn validate(&self) -> Result<Vec<Warning>> {
        let mut warnings = Vec::new();
        let m = &self.material;
        positive_field("material.n_spacer", m.n_spacer)?;
        if m.n_spacer <= T::one() {
            return Err(invalid("material.n_spacer", "must exceed 1"));
        }
        positive_field("material.lambda", m.wavelength)?;
        positive_field("material.rho_upper", m.rho_upper)?;
        positive_field("material.d_upper", m.d_upper)?;

        let c = &self.cavity;
        positive_field("cavity.omega_a", c.omega_a)?;
        positive_field("cavity.kappa_a", c.kappa_a)?;
        positive_field("cavity.L", c.spacer_thickness)?;
        if c.omega_a <= c.kappa_a {
            return Err(invalid("cavity.kappa_a", "must be much smaller than omega_a"));
        }
        if c.omega_a < c.kappa_a * lit(1e3) {
            warnings.push(warn("cavity.kappa_a", "omega_a/kappa_a < 1e3: not a high-Q cavity"));
        }

        let b = &self.mechanics;
        positive_field("mechanics.omega_b", b.omega_b)?;
        positive_field("mechanics.gamma_b", b.gamma_b)?;
        positive_field("mechanics.m_b", b.mass)?;
        positive_field("mechanics.l_idt", b.idt_length)?;
        match b.saw {
            SawSpec::Velocity(v) => positive_field("mechanics.v_saw", v)?,
            SawSpec::Wavelength(l) => positive_field("mechanics.lambda_s", l)?,
        }
        if b.omega_b <= b.gamma_b {
            return Err(invalid("mechanics.gamma_b", "must be smaller than omega_b"));
        }

        let d = &self.drive;
        nonneg_field("drive.P_pu", d.pump_power)?;
        nonneg_field("drive.P_rf", d.rf_power)?;
        if let Some(p) = d.probe_power {
            nonneg_field("drive.P_pr", p)?;
        }
        let probe = d.probe_power();
        if probe > T::zero() {
            if d.pump_power <= T::zero() || probe > d.pump_power {
                return Err(invalid("drive.P_pr", "probe power must not exceed pump power"));
            }
            if probe > d.pump_power * lit(1e-2) {
                warnings.push(warn(
                    "drive.P_pr",
                    "P_pr/P_pu > 1e-2: linear response may be inaccurate",
                ));
            }
        }
        if let Detuning::Fixed(delta) = d.detuning {
            if !delta.is_finite() {
                return Err(invalid("drive.Delta_a", "must be finite"));
            }
        }
        if let Some(g) = self.coupling {
            nonneg_field("coupling.g_om", g)?;
        }
        Ok(warnings)
    }

    /// Pump angular frequency ω_pu = ω_a − Δ_a.
    pub fn pump_frequency(&self, pump_detuning: T) -> T {
        self.cavity.omega_a - pump_detuning
    }

    /// Single-photon coupling from the geometry, ignoring any override.
    pub fn formula_coupling(&self) -> Result<T> {
        derive_coupling(
            self.cavity.omega_a,
            self.cavity.spacer_thickness,
            self.mechanics.omega_b,
            self.mechanics.mass,
        )
    }

    /// Derives every model scalar for a given pump detuning Δ_a.
    pub fn derive(&self, pump_detuning: T) -> Result<DerivedQuantities<T>> {
        let cav = &self.cavity;
        let mech = &self.mechanics;
        let drive = &self.drive;
        let kappa = cav.kappa_a;
        let omega_b = mech.omega_b;
        let omega_pu = self.pump_frequency(pump_detuning);
        // ω_pr = ω_pu + δ with δ ≈ ω_b near the window.
        let omega_pr = omega_pu + omega_b;

        let eps_pu = derive_field_amplitude(drive.pump_power, kappa, omega_pu)?;
        let eps_pr = derive_field_amplitude(drive.probe_power(), kappa, omega_pr)?;

        let (saw_velocity, saw_wavelength) = match mech.saw {
            SawSpec::Velocity(v) => (
                Tagged::user(v),
                Tagged::derived(derive_saw_wavelength(v, omega_b)?),
            ),
            SawSpec::Wavelength(l) => (
                Tagged::derived(derive_saw_velocity(l, omega_b)?),
                Tagged::user(l),
            ),
        };

        let g_formula = self.formula_coupling()?;
        let g_om = match self.coupling {
            Some(g) => Tagged::user(g),
            None => Tagged::derived(g_formula),
        };

        let rf_power = if self.saw_enabled {
            drive.rf_power
        } else {
            T::zero()
        };
        let q0 = derive_saw_amplitude(
            rf_power,
            mech.idt_length,
            saw_velocity.value,
            self.material.rho_upper,
            omega_b,
        )?;
        let rf_force = derive_rf_force(mech.mass, omega_b, q0)?;
        let eps_rf = derive_rf_amplitude(rf_force, omega_b, mech.mass)?;
        let (b0, n0) = derive_phonon_amplitude(eps_rf, omega_b)?;

        let rf_bounds = rf_power_bounds(&RfBoundInputs {
            idt_length: mech.idt_length,
            saw_velocity: saw_velocity.value,
            density: self.material.rho_upper,
            mass: mech.mass,
            eps_pu,
            kappa_a: kappa,
            gamma_b: mech.gamma_b,
            pump_detuning,
            g_om: g_om.value,
        })?;

        Ok(DerivedQuantities {
            pump_detuning,
            eps_pu: Tagged::derived(eps_pu),
            eps_pr: Tagged::derived(eps_pr),
            q0: Tagged::derived(q0),
            rf_force: Tagged::derived(rf_force),
            eps_rf: Tagged::derived(eps_rf),
            g_om,
            g_om_formula: g_formula,
            b0: Tagged::derived(b0),
            n0: Tagged::derived(n0),
            saw_velocity,
            saw_wavelength,
            rf_min: Tagged::derived(rf_bounds.min),
            rf_max: Tagged::derived(rf_bounds.max),
            rf_window_feasible: rf_bounds.feasible,
        })
    }

    /// Flat parameter set consumed by the steady-state solver, the response
    /// formulas and the time-domain integrator.
    pub fn model(&self, pump_detuning: T) -> Result<ModelParams<T>> {
        let derived = self.derive(pump_detuning)?;
        Ok(self.model_from(&derived))
    }

    pub fn model_from(&self, derived: &DerivedQuantities<T>) -> ModelParams<T> {
        let coupling = if self.saw_enabled {
            derived.g_om.value
        } else {
            T::zero()
        };
        ModelParams {
            pump_detuning: derived.pump_detuning,
            kappa_a: self.cavity.kappa_a,
            omega_b: self.mechanics.omega_b,
            gamma_b: self.mechanics.gamma_b,
            g_om: coupling,
            eps_pu: derived.eps_pu.value,
            eps_pr: derived.eps_pr.value,
            eps_rf: derived.eps_rf.value,
        }
    }
}

/// Parameters of the mean-field equations in the pump rotating frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams<T> {
    /// Δ_a = ω_a − ω_pu (rad/s).
    pub pump_detuning: T,
    pub kappa_a: T,
    pub omega_b: T,
    pub gamma_b: T,
    /// Effective single-photon coupling (0 with the SAW off).
    pub g_om: T,
    pub eps_pu: T,
    pub eps_pr: T,
    pub eps_rf: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    UserSupplied,
    FormulaDerived,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Provenance::UserSupplied => "user-supplied",
            Provenance::FormulaDerived => "formula-derived",
        })
    }
}

/// A value together with where it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tagged<T> {
    pub value: T,
    pub provenance: Provenance,
}

impl<T> Tagged<T> {
    pub fn user(value: T) -> Self {
        Tagged {
            value,
            provenance: Provenance::UserSupplied,
        }
    }

    pub fn derived(value: T) -> Self {
        Tagged {
            value,
            provenance: Provenance::FormulaDerived,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedQuantities<T> {
    /// Δ_a the quantities were derived for (enters ε_pu through ω_pu and
    /// the upper RF bound).
    pub pump_detuning: T,
    pub eps_pu: Tagged<T>,
    pub eps_pr: Tagged<T>,
    /// BAR displacement amplitude q0 (m).
    pub q0: Tagged<T>,
    /// RF drive force (N).
    pub rf_force: Tagged<T>,
    pub eps_rf: Tagged<T>,
    /// Effective single-photon coupling (rad/s).
    pub g_om: Tagged<T>,
    /// The geometric formula value, always reported next to `g_om`.
    pub g_om_formula: T,
    pub b0: Tagged<T>,
    pub n0: Tagged<T>,
    pub saw_velocity: Tagged<T>,
    pub saw_wavelength: Tagged<T>,
    pub rf_min: Tagged<T>,
    pub rf_max: Tagged<T>,
    pub rf_window_feasible: bool,
}

impl<T: Real> DerivedQuantities<T> {
    /// Ratio of the effective coupling to the geometric formula value.
    pub fn coupling_ratio(&self) -> T {
        self.g_om.value / self.g_om_formula
    }
}

/// Optical drive amplitude ε = √(P κ_a / (ħ ω)) (s⁻¹).
pub fn derive_field_amplitude<T: Real>(power: T, kappa_a: T, omega: T) -> Result<T> {
    ensure_nonnegative("P", f64_of(power))?;
    ensure_positive("kappa_a", f64_of(kappa_a))?;
    ensure_positive("omega", f64_of(omega))?;
    Ok((power * kappa_a / (hbar::<T>() * omega)).sqrt())
}

/// BAR vibration amplitude driven by the SAW:
/// q0 = √(P_rf / (4π l_IDTs v_SAW² ρ ω_b)).
pub fn derive_saw_amplitude<T: Real>(
    rf_power: T,
    idt_length: T,
    saw_velocity: T,
    density: T,
    omega_b: T,
) -> Result<T> {
    ensure_nonnegative("P_rf", f64_of(rf_power))?;
    ensure_positive("l_idt", f64_of(idt_length))?;
    ensure_positive("v_saw", f64_of(saw_velocity))?;
    ensure_positive("rho", f64_of(density))?;
    ensure_positive("omega_b", f64_of(omega_b))?;
    let four_pi = lit::<T>(4.0) * T::PI();
    Ok((rf_power / (four_pi * idt_length * saw_velocity * saw_velocity * density * omega_b)).sqrt())
}

/// v_SAW = λ_s ω_b / 2π.
pub fn derive_saw_velocity<T: Real>(saw_wavelength: T, omega_b: T) -> Result<T> {
    ensure_positive("lambda_s", f64_of(saw_wavelength))?;
    ensure_positive("omega_b", f64_of(omega_b))?;
    Ok(saw_wavelength * omega_b / T::TAU())
}

/// λ_s = 2π v_SAW / ω_b.
pub fn derive_saw_wavelength<T: Real>(saw_velocity: T, omega_b: T) -> Result<T> {
    ensure_positive("v_saw", f64_of(saw_velocity))?;
    ensure_positive("omega_b", f64_of(omega_b))?;
    Ok(T::TAU() * saw_velocity / omega_b)
}

/// F_rf = 4 m_b ω_b² q0.
pub fn derive_rf_force<T: Real>(mass: T, omega_b: T, q0: T) -> Result<T> {
    ensure_positive("m_b", f64_of(mass))?;
    ensure_positive("omega_b", f64_of(omega_b))?;
    ensure_nonnegative("q0", f64_of(q0))?;
    Ok(lit::<T>(4.0) * Twofold::product(omega_b, mass).scale(omega_b).scale(q0).round())
}

/// ε_rf = F_rf √(1 / (8 ħ ω_b m_b)).
pub fn derive_rf_amplitude<T: Real>(rf_force: T, omega_b: T, mass: T) -> Result<T> {
    ensure_positive("omega_b", f64_of(omega_b))?;
    ensure_positive("m_b", f64_of(mass))?;
    ensure_nonnegative("F_rf", f64_of(rf_force))?;
    // √(8ħ ω_b m) = 4·√(ħ/2)·√(ω_b m), evaluated to double working
    // precision and sharing √(ħ/2) with x_zpf, so the q0 → ε_rf → b0 → q0
    // chain closes to a few ulps. This form also avoids 1/(8ħω_b m), which
    // overflows f32.
    let root = Twofold::product(omega_b, mass).sqrt();
    Ok(lit::<T>(0.25) * root.scale(root_half_hbar()).divide_into(rf_force))
}

/// Mean phonon amplitude b0 = ε_rf / (2ω_b) and number n0 = b0².
pub fn derive_phonon_amplitude<T: Real>(eps_rf: T, omega_b: T) -> Result<(T, T)> {
    ensure_positive("omega_b", f64_of(omega_b))?;
    ensure_nonnegative("eps_rf", f64_of(eps_rf))?;
    let b0 = eps_rf / (two::<T>() * omega_b);
    Ok((b0, b0 * b0))
}

/// x_zpf = √(ħ / (2 ω_b m_b)).
pub fn zero_point_length<T: Real>(omega_b: T, mass: T) -> T {
    Twofold::product(omega_b, mass).sqrt().divide_into(root_half_hbar())
}

fn root_half_hbar<T: Real>() -> T {
    lit((0.5 * HBAR).sqrt())
}

/// g_om = (ω_a / L) √(ħ / (2 ω_b m_b)).
pub fn derive_coupling<T: Real>(omega_a: T, spacer_thickness: T, omega_b: T, mass: T) -> Result<T> {
    ensure_positive("omega_a", f64_of(omega_a))?;
    ensure_positive("L", f64_of(spacer_thickness))?;
    ensure_positive("omega_b", f64_of(omega_b))?;
    ensure_positive("m_b", f64_of(mass))?;
    Ok(omega_a / spacer_thickness * zero_point_length(omega_b, mass))
}

/// Effective-mass estimate m ≈ ρ · A_eff · d_upper. Reported only; the
/// model always uses the explicit m_b.
pub fn estimate_effective_mass<T: Real>(material: &MaterialStack<T>, effective_area: T) -> T {
    material.rho_upper * effective_area * material.d_upper
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfBoundInputs<T> {
    pub idt_length: T,
    pub saw_velocity: T,
    pub density: T,
    pub mass: T,
    pub eps_pu: T,
    pub kappa_a: T,
    pub gamma_b: T,
    pub pump_detuning: T,
    pub g_om: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RfPowerBounds<T> {
    /// Lower bound (ensures b0 ≥ 1), W.
    pub min: T,
    /// Upper bound (keeps G_om above the OMIT threshold), W.
    pub max: T,
    /// Bracket ε_pu/√(κ_a γ_b) + Δ_a/(2 g_om).
    pub bracket: T,
    pub feasible: bool,
}

/// RF power window:
/// P_min = 8ħπ l v² ρ / m_b and P_max = P_min · (ε_pu/√(κ_a γ_b) + Δ_a/(2 g_om))².
///
/// With g_om = 0 the detuning term is dropped (no optomechanical coupling,
/// so no upper bound can be met); the window is then reported infeasible.
pub fn rf_power_bounds<T: Real>(p: &RfBoundInputs<T>) -> Result<RfPowerBounds<T>> {
    ensure_positive("l_idt", f64_of(p.idt_length))?;
    ensure_positive("v_saw", f64_of(p.saw_velocity))?;
    ensure_positive("rho", f64_of(p.density))?;
    ensure_positive("m_b", f64_of(p.mass))?;
    ensure_positive("kappa_a", f64_of(p.kappa_a))?;
    ensure_positive("gamma_b", f64_of(p.gamma_b))?;
    ensure_nonnegative("eps_pu", f64_of(p.eps_pu))?;
    ensure_nonnegative("g_om", f64_of(p.g_om))?;
    let min = lit::<T>(8.0) * hbar::<T>() * T::PI() * p.idt_length * p.saw_velocity
        * p.saw_velocity
        * p.density
        / p.mass;
    let detuning_term = if p.g_om > T::zero() {
        p.pump_detuning / (two::<T>() * p.g_om)
    } else {
        T::zero()
    };
    let bracket = p.eps_pu / (p.kappa_a * p.gamma_b).sqrt() + detuning_term;
    let max = min * bracket * bracket;
    let feasible = p.g_om > T::zero() && bracket >= T::one();
    Ok(RfPowerBounds {
        min,
        max,
        bracket,
        feasible,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Warn,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeCheck {
    pub name: &'static str,
    pub value: f64,
    pub requirement: String,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub sideband: RegimeCheck,
    pub omit: RegimeCheck,
    /// Present once a steady state is known.
    pub threshold: Option<RegimeCheck>,
}

impl RegimeReport {
    pub fn checks(&self) -> impl Iterator<Item = &RegimeCheck> {
        [Some(&self.sideband), Some(&self.omit), self.threshold.as_ref()]
            .into_iter()
            .flatten()
    }

    pub fn all_pass(&self) -> bool {
        self.checks().all(|c| c.status == CheckStatus::Pass)
    }
}

/// Sideband resolution, OMIT linewidth ordering and (given the total
/// coupling G_om) the transparency threshold G_om ≥ √(κ_a γ_b)/2.
pub fn validate_regime<T: Real>(
    kappa_a: T,
    omega_b: T,
    gamma_b: T,
    total_coupling: Option<T>,
) -> RegimeReport {
    let sideband = f64_of(omega_b / kappa_a);
    let omit = f64_of(kappa_a / gamma_b);
    let status = |ok: bool| if ok { CheckStatus::Pass } else { CheckStatus::Warn };
    let threshold = total_coupling.map(|g| {
        let limit = (kappa_a * gamma_b).sqrt() / two::<T>();
        RegimeCheck {
            name: "threshold",
            value: f64_of(g),
            requirement: format!("G_om >= sqrt(kappa_a*gamma_b)/2 = {:e} rad/s", f64_of(limit)),
            status: status(g >= limit),
        }
    });
    RegimeReport {
        sideband: RegimeCheck {
            name: "sideband",
            value: sideband,
            requirement: "0.1 <= omega_b/kappa_a <= 10".into(),
            status: status((0.1..=10.0).contains(&sideband)),
        },
        omit: RegimeCheck {
            name: "omit",
            value: omit,
            requirement: "kappa_a/gamma_b >= 100".into(),
            status: status(omit >= 100.0),
        },
        threshold,
    }
}

/// The transparency threshold √(κ_a γ_b)/2 on the total coupling.
pub fn coupling_threshold<T: Real>(kappa_a: T, gamma_b: T) -> T {
    (kappa_a * gamma_b).sqrt() / two::<T>()
}

fn positive_field<T: Real>(field: &str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, &format!("must be positive, got {:e}", f64_of(v))))
    }
}

fn nonneg_field<T: Real>(field: &str, v: T) -> Result<()> {
    if v >= T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, &format!("must be nonnegative, got {:e}", f64_of(v))))
    }
}

fn invalid(field: &str, msg: &str) -> Error {
    Error::Invalid(format!("{field}: {msg}"))
}

fn warn(field: &str, msg: &str) -> Warning {
    Warning {
        field: field.into(),
        message: msg.into(),
    }
}
