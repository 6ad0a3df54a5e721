//! Run configuration: TOML with unit-suffixed keys, canonicalized to SI and
//! rad/s.
//!
//! Every physical key carries its unit in the name (`kappa_a_GHz`,
//! `m_b_pg`, `P_pu_uW`). Frequency suffixes `Hz`..`THz` denote ordinary
//! frequency and are multiplied by 2π; `rad_s` is taken as angular.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sawomit::{BranchSelection, Detuning, Device, SawSpec, SecondaryAxis, Spacing};
use toml::{Table, Value};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("TOML syntax: {0}")]
    Syntax(String),
    #[error("[{section}] unknown key `{key}`; allowed: {allowed}")]
    UnknownKey {
        section: String,
        key: String,
        allowed: String,
    },
    #[error("unknown section [{0}]; allowed: material, cavity, mechanics, coupling, drive, run")]
    UnknownSection(String),
    #[error("[{section}] `{key}` needs a unit suffix: one of {suffixes}")]
    MissingUnit {
        section: String,
        key: String,
        suffixes: String,
    },
    #[error("[{section}] `{key}`: {message}")]
    Value {
        section: String,
        key: String,
        message: String,
    },
    #[error("[{section}] `{base}` given more than once ({first}, {second})")]
    Duplicate {
        section: String,
        base: String,
        first: String,
        second: String,
    },
    #[error("missing required key(s) without a preset: {0}")]
    Missing(String),
    #[error("unknown preset `{0}` (available: fig3)")]
    Preset(String),
    #[error("--set expects section.key=value, got `{0}`")]
    Override(String),
    #[error("invalid device: {0}")]
    Device(#[from] sawomit::Error),
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Length,
    Mass,
    Density,
    Power,
    Frequency,
    Velocity,
}

impl Kind {
    fn units(self) -> &'static [(&'static str, f64)] {
        use std::f64::consts::TAU;
        match self {
            Kind::Length => &[("m", 1.0), ("mm", 1e-3), ("um", 1e-6), ("nm", 1e-9)],
            Kind::Mass => &[("kg", 1.0), ("g", 1e-3), ("pg", 1e-15), ("fg", 1e-18)],
            Kind::Density => &[("kg_m3", 1.0), ("g_cm3", 1e3)],
            Kind::Power => &[("W", 1.0), ("mW", 1e-3), ("uW", 1e-6), ("nW", 1e-9), ("pW", 1e-12)],
            Kind::Frequency => &[
                ("rad_s", 1.0),
                ("Hz", TAU),
                ("kHz", TAU * 1e3),
                ("MHz", TAU * 1e6),
                ("GHz", TAU * 1e9),
                ("THz", TAU * 1e12),
            ],
            Kind::Velocity => &[("m_s", 1.0)],
        }
    }

    fn suffix_list(self) -> String {
        self.units().iter().map(|(s, _)| format!("_{s}")).collect::<Vec<_>>().join(", ")
    }
}

/// (base name, kind) for every physical key of a section; plain keys
/// (booleans, strings, dimensionless numbers) are listed separately.
fn schema(section: &str) -> Option<(&'static [(&'static str, Kind)], &'static [&'static str])> {
    use Kind::*;
    Some(match section {
        "material" => (&[("lambda", Length), ("rho_upper", Density), ("d_upper", Length)], &["n_spacer"]),
        "cavity" => (&[("omega_a", Frequency), ("kappa_a", Frequency), ("L", Length)], &[]),
        "mechanics" => (
            &[
                ("omega_b", Frequency),
                ("gamma_b", Frequency),
                ("m_b", Mass),
                ("l_idt", Length),
                ("lambda_s", Length),
                ("v_saw", Velocity),
            ],
            &[],
        ),
        "coupling" => (&[("g_om", Frequency)], &["saw"]),
        "drive" => (
            &[("P_pu", Power), ("P_pr", Power), ("P_rf", Power), ("Delta_a", Frequency)],
            &["detuning"],
        ),
        "run" => (
            &[
                ("sweep_min", Power),
                ("sweep_max", Power),
                ("delay_min", Power),
                ("delay_max", Power),
            ],
            &[
                "mode",
                "branch",
                "plot",
                "out",
                "delta_min",
                "delta_max",
                "delta_points",
                "sweep_axis",
                "sweep_points",
                "sweep_spacing",
                "delay_points",
                "delay_span",
                "delay_spectrum_points",
                "oracle_offsets",
                "oracle_ratio",
                "oracle_ratio_small",
            ],
        ),
        _ => return None,
    })
}

fn allowed_keys(section: &str) -> String {
    let (phys, plain) = schema(section).expect("known section");
    let mut names: Vec<String> = phys
        .iter()
        .map(|(b, k)| format!("{b}_<{}>", k.units().iter().map(|(s, _)| *s).collect::<Vec<_>>().join("|")))
        .collect();
    names.extend(plain.iter().map(|s| s.to_string()));
    names.join(", ")
}

/// Splits `key` into a schema base and its unit factor.
fn resolve_key(section: &str, key: &str) -> Result<Option<(&'static str, Kind, f64)>> {
    let (phys, plain) = schema(section).ok_or_else(|| ConfigError::UnknownSection(section.into()))?;
    if plain.contains(&key) {
        return Ok(None);
    }
    // Longest base first so `lambda_s_um` is not read as `lambda` + `s_um`.
    let mut bases: Vec<&(&str, Kind)> = phys.iter().collect();
    bases.sort_by_key(|(b, _)| std::cmp::Reverse(b.len()));
    for (base, kind) in bases {
        if key == *base {
            return Err(ConfigError::MissingUnit {
                section: section.into(),
                key: key.into(),
                suffixes: kind.suffix_list(),
            });
        }
        if let Some(suffix) = key.strip_prefix(base).and_then(|r| r.strip_prefix('_')) {
            if let Some((_, f)) = kind.units().iter().find(|(s, _)| *s == suffix) {
                return Ok(Some((base, *kind, *f)));
            }
            // `lambda_s` vs `lambda`: a non-matching suffix on a shorter base
            // may still be another key; only fail when no base accepts it.
            if phys.iter().any(|(b, _)| b.len() > base.len() && key.starts_with(b)) {
                continue;
            }
            if !phys.iter().any(|(b, _)| *b != *base && key.starts_with(&format!("{b}_"))) {
                return Err(ConfigError::Value {
                    section: section.into(),
                    key: key.into(),
                    message: format!("unknown unit `{suffix}`; use one of {}", kind.suffix_list()),
                });
            }
        }
    }
    Err(ConfigError::UnknownKey {
        section: section.into(),
        key: key.into(),
        allowed: allowed_keys(section),
    })
}

/// Probe-axis and secondary-axis grids plus mode switches.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub mode: Option<String>,
    pub branch: BranchSelection,
    pub plot: bool,
    pub out: Option<PathBuf>,
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_points: usize,
    pub sweep_axis: SecondaryAxis,
    pub sweep_min: Option<f64>,
    pub sweep_max: Option<f64>,
    pub sweep_points: usize,
    pub sweep_spacing: Option<Spacing>,
    pub delay_min: Option<f64>,
    pub delay_max: Option<f64>,
    pub delay_points: usize,
    /// Half-width of each delay spectrum in units of Γ.
    pub delay_span: f64,
    pub delay_spectrum_points: usize,
    /// Oracle detunings as offsets from ω_b in units of Γ.
    pub oracle_offsets: Vec<f64>,
    pub oracle_ratio: f64,
    pub oracle_ratio_small: Option<f64>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            mode: None,
            branch: BranchSelection::Lower,
            plot: false,
            out: None,
            delta_min: -0.004,
            delta_max: 0.004,
            delta_points: 2001,
            sweep_axis: SecondaryAxis::PumpPower,
            sweep_min: None,
            sweep_max: None,
            sweep_points: 10,
            sweep_spacing: None,
            delay_min: None,
            delay_max: None,
            delay_points: 40,
            delay_span: 10.0,
            delay_spectrum_points: 2001,
            oracle_offsets: vec![0.0, -0.5, 0.5, -2.0, 2.0],
            oracle_ratio: 1e-3,
            oracle_ratio_small: Some(1e-4),
        }
    }
}

impl RunSection {
    /// Secondary-axis bounds: Fig. 4 pump range or Fig. 5 RF range unless set.
    pub fn sweep_grid(&self) -> sawomit::Grid<f64> {
        let (lo, hi, spacing) = match self.sweep_axis {
            SecondaryAxis::PumpPower => (1e-8, 3e-8, Spacing::Linear),
            SecondaryAxis::RfPower => (1e-5, 1e-3, Spacing::Log),
        };
        sawomit::Grid {
            start: self.sweep_min.unwrap_or(lo),
            end: self.sweep_max.unwrap_or(hi),
            points: self.sweep_points,
            spacing: self.sweep_spacing.unwrap_or(spacing),
        }
    }

    pub fn detuning_grid(&self) -> sawomit::Grid<f64> {
        sawomit::Grid::linear(self.delta_min, self.delta_max, self.delta_points)
    }
}

/// A fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub preset: Option<String>,
    pub device: Device,
    pub run: RunSection,
}

/// Raw input before canonicalization: the parsed tables plus overrides.
#[derive(Debug, Clone, Default)]
pub struct Source {
    pub table: Table,
}

impl Source {
    pub fn from_str(text: &str) -> Result<Self> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        Ok(Source { table })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_str(&text)
    }

    pub fn set_preset(&mut self, name: &str) {
        self.table.insert("preset".into(), Value::String(name.into()));
    }

    /// Applies `section.key=value`. Any existing key for the same quantity
    /// (under another unit suffix) is replaced.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (path, raw) = spec.split_once('=').ok_or_else(|| ConfigError::Override(spec.into()))?;
        let path = path.trim();
        let raw = raw.trim();
        let value = parse_value(raw);
        if path == "preset" {
            self.table.insert("preset".into(), value);
            return Ok(());
        }
        let (section, key) = path.split_once('.').ok_or_else(|| ConfigError::Override(spec.into()))?;
        let resolved = resolve_key(section, key)?;
        let entry = self
            .table
            .entry(section.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        let table = entry.as_table_mut().ok_or_else(|| ConfigError::Value {
            section: section.into(),
            key: "".into(),
            message: "section is not a table".into(),
        })?;
        if let Some((base, _, _)) = resolved {
            let same: Vec<String> = table
                .keys()
                .filter(|k| matches!(resolve_key(section, k), Ok(Some((b, _, _))) if b == base))
                .cloned()
                .collect();
            for k in same {
                table.remove(&k);
            }
            // Choosing one SAW spec or one detuning form drops the other.
            let exclusive: &[(&str, &str)] = &[("lambda_s", "v_saw"), ("v_saw", "lambda_s"), ("Delta_a", "detuning")];
            for (a, b) in exclusive {
                if *a == base {
                    remove_base(section, table, b);
                }
            }
        } else if section == "drive" && key == "detuning" {
            remove_base(section, table, "Delta_a");
        }
        table.insert(key.to_string(), value);
        Ok(())
    }

    pub fn resolve(&self) -> Result<Config> {
        let preset = match self.table.get("preset") {
            None => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                return Err(ConfigError::Value {
                    section: "".into(),
                    key: "preset".into(),
                    message: "must be a string".into(),
                })
            }
        };
        let mut device = match preset.as_deref() {
            Some("fig3") => Device::fig3(),
            Some(other) => return Err(ConfigError::Preset(other.into())),
            None => blank_device(),
        };
        let mut seen: Vec<String> = Vec::new();
        let mut run = RunSection::default();
        for (name, value) in &self.table {
            if name == "preset" {
                continue;
            }
            let table = value.as_table().ok_or_else(|| {
                if schema(name).is_some() {
                    ConfigError::Value {
                        section: name.clone(),
                        key: "".into(),
                        message: "must be a [section]".into(),
                    }
                } else {
                    ConfigError::UnknownSection(name.clone())
                }
            })?;
            let mut bases: Vec<(&str, &str)> = Vec::new();
            for (key, v) in table {
                let resolved = resolve_key(name, key)?;
                let base = resolved.map(|(b, _, _)| b).unwrap_or(key.as_str());
                if let Some((_, first)) = bases.iter().find(|(b, _)| *b == base) {
                    return Err(ConfigError::Duplicate {
                        section: name.clone(),
                        base: base.into(),
                        first: (*first).into(),
                        second: key.clone(),
                    });
                }
                bases.push((base, key));
                let ctx = Ctx { section: name, key };
                match resolved {
                    Some((base, _, factor)) => {
                        let x = ctx.number(v)? * factor;
                        apply_physical(&mut device, &mut run, name, base, x, &ctx)?;
                    }
                    None => apply_plain(&mut device, &mut run, name, key, v, &ctx)?,
                }
                seen.push(format!("{name}.{base}"));
            }
            if name == "mechanics" && bases.iter().any(|(b, _)| *b == "lambda_s") && bases.iter().any(|(b, _)| *b == "v_saw") {
                return Err(ConfigError::Value {
                    section: "mechanics".into(),
                    key: "lambda_s/v_saw".into(),
                    message: "give exactly one of lambda_s or v_saw".into(),
                });
            }
            if name == "drive" && bases.iter().any(|(b, _)| *b == "Delta_a") && bases.iter().any(|(b, _)| *b == "detuning") {
                return Err(ConfigError::Value {
                    section: "drive".into(),
                    key: "Delta_a/detuning".into(),
                    message: "give either Delta_a or detuning = \"lock\"".into(),
                });
            }
        }
        if preset.is_none() {
            let required: &[&[&str]] = &[
                &["material.n_spacer"],
                &["material.lambda"],
                &["material.rho_upper"],
                &["material.d_upper"],
                &["cavity.omega_a"],
                &["cavity.kappa_a"],
                &["cavity.L"],
                &["mechanics.omega_b"],
                &["mechanics.gamma_b"],
                &["mechanics.m_b"],
                &["mechanics.l_idt"],
                &["mechanics.lambda_s", "mechanics.v_saw"],
                &["drive.P_pu"],
                &["drive.P_rf"],
                &["drive.Delta_a", "drive.detuning"],
            ];
            let missing: Vec<String> = required
                .iter()
                .filter(|alts| !alts.iter().any(|a| seen.iter().any(|s| s == a)))
                .map(|alts| alts.join(" or "))
                .collect();
            if !missing.is_empty() {
                return Err(ConfigError::Missing(missing.join(", ")));
            }
        }
        Ok(Config { preset, device, run })
    }
}

fn remove_base(section: &str, table: &mut Table, base: &str) {
    let keys: Vec<String> = table
        .keys()
        .filter(|k| *k == base || matches!(resolve_key(section, k), Ok(Some((b, _, _))) if b == base))
        .cloned()
        .collect();
    for k in keys {
        table.remove(&k);
    }
}

/// Parses an override value as TOML, falling back to a bare string.
fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

struct Ctx<'a> {
    section: &'a str,
    key: &'a str,
}

impl Ctx<'_> {
    fn err(&self, message: impl Into<String>) -> ConfigError {
        ConfigError::Value {
            section: self.section.into(),
            key: self.key.into(),
            message: message.into(),
        }
    }

    fn number(&self, v: &Value) -> Result<f64> {
        let x = match v {
            Value::Float(x) => *x,
            Value::Integer(i) => *i as f64,
            _ => return Err(self.err("expected a number")),
        };
        if x.is_finite() {
            Ok(x)
        } else {
            Err(self.err("must be finite"))
        }
    }

    fn count(&self, v: &Value) -> Result<usize> {
        match v {
            Value::Integer(i) if *i >= 0 => Ok(*i as usize),
            _ => Err(self.err("expected a nonnegative integer")),
        }
    }

    fn boolean(&self, v: &Value) -> Result<bool> {
        v.as_bool().ok_or_else(|| self.err("expected true or false"))
    }

    fn string<'v>(&self, v: &'v Value) -> Result<&'v str> {
        v.as_str().ok_or_else(|| self.err("expected a string"))
    }
}

/// Device with every field NaN so that a missing key cannot go unnoticed.
fn blank_device() -> Device {
    let nan = f64::NAN;
    Device {
        material: sawomit::MaterialStack {
            n_spacer: nan,
            wavelength: nan,
            rho_upper: nan,
            d_upper: nan,
        },
        cavity: sawomit::CavityParams {
            omega_a: nan,
            kappa_a: nan,
            spacer_thickness: nan,
        },
        mechanics: sawomit::MechanicalParams {
            omega_b: nan,
            gamma_b: nan,
            mass: nan,
            idt_length: nan,
            saw: SawSpec::Wavelength(nan),
        },
        drive: sawomit::DriveParams {
            pump_power: nan,
            probe_power: None,
            rf_power: nan,
            detuning: Detuning::LockToMechanical,
        },
        coupling: None,
        saw_enabled: true,
    }
}

fn apply_physical(device: &mut Device, run: &mut RunSection, section: &str, base: &str, x: f64, ctx: &Ctx) -> Result<()> {
    match (section, base) {
        ("material", "lambda") => device.material.wavelength = x,
        ("material", "rho_upper") => device.material.rho_upper = x,
        ("material", "d_upper") => device.material.d_upper = x,
        ("cavity", "omega_a") => device.cavity.omega_a = x,
        ("cavity", "kappa_a") => device.cavity.kappa_a = x,
        ("cavity", "L") => device.cavity.spacer_thickness = x,
        ("mechanics", "omega_b") => device.mechanics.omega_b = x,
        ("mechanics", "gamma_b") => device.mechanics.gamma_b = x,
        ("mechanics", "m_b") => device.mechanics.mass = x,
        ("mechanics", "l_idt") => device.mechanics.idt_length = x,
        ("mechanics", "lambda_s") => device.mechanics.saw = SawSpec::Wavelength(x),
        ("mechanics", "v_saw") => device.mechanics.saw = SawSpec::Velocity(x),
        ("coupling", "g_om") => device.coupling = Some(x),
        ("drive", "P_pu") => device.drive.pump_power = x,
        ("drive", "P_pr") => device.drive.probe_power = Some(x),
        ("drive", "P_rf") => device.drive.rf_power = x,
        ("drive", "Delta_a") => device.drive.detuning = Detuning::Fixed(x),
        ("run", "sweep_min") => run.sweep_min = Some(x),
        ("run", "sweep_max") => run.sweep_max = Some(x),
        ("run", "delay_min") => run.delay_min = Some(x),
        ("run", "delay_max") => run.delay_max = Some(x),
        _ => return Err(ctx.err("unhandled key")),
    }
    Ok(())
}

fn apply_plain(device: &mut Device, run: &mut RunSection, section: &str, key: &str, v: &Value, ctx: &Ctx) -> Result<()> {
    match (section, key) {
        ("material", "n_spacer") => device.material.n_spacer = ctx.number(v)?,
        ("coupling", "saw") => device.saw_enabled = ctx.boolean(v)?,
        ("drive", "detuning") => match ctx.string(v)? {
            "lock" => device.drive.detuning = Detuning::LockToMechanical,
            other => return Err(ctx.err(format!("`{other}`: only \"lock\" is accepted; use Delta_a_<unit> for an explicit value"))),
        },
        ("run", "mode") => {
            let m = ctx.string(v)?;
            if !MODES.contains(&m) {
                return Err(ctx.err(format!("unknown mode `{m}` ({})", MODES.join("|"))));
            }
            run.mode = Some(m.to_string());
        }
        ("run", "branch") => run.branch = BranchSelection::from_str(ctx.string(v)?).map_err(|e| ctx.err(e))?,
        ("run", "plot") => run.plot = ctx.boolean(v)?,
        ("run", "out") => run.out = Some(PathBuf::from(ctx.string(v)?)),
        ("run", "delta_min") => run.delta_min = ctx.number(v)?,
        ("run", "delta_max") => run.delta_max = ctx.number(v)?,
        ("run", "delta_points") => run.delta_points = ctx.count(v)?,
        ("run", "sweep_axis") => {
            run.sweep_axis = match ctx.string(v)? {
                "P_pu" => SecondaryAxis::PumpPower,
                "P_rf" => SecondaryAxis::RfPower,
                other => return Err(ctx.err(format!("`{other}` (P_pu|P_rf)"))),
            }
        }
        ("run", "sweep_points") => run.sweep_points = ctx.count(v)?,
        ("run", "sweep_spacing") => {
            run.sweep_spacing = Some(match ctx.string(v)? {
                "linear" => Spacing::Linear,
                "log" => Spacing::Log,
                other => return Err(ctx.err(format!("`{other}` (linear|log)"))),
            })
        }
        ("run", "delay_points") => run.delay_points = ctx.count(v)?,
        ("run", "delay_span") => run.delay_span = ctx.number(v)?,
        ("run", "delay_spectrum_points") => run.delay_spectrum_points = ctx.count(v)?,
        ("run", "oracle_offsets") => {
            let arr = v.as_array().ok_or_else(|| ctx.err("expected an array of numbers"))?;
            run.oracle_offsets = arr.iter().map(|x| ctx.number(x)).collect::<Result<_>>()?;
        }
        ("run", "oracle_ratio") => run.oracle_ratio = ctx.number(v)?,
        ("run", "oracle_ratio_small") => {
            let x = ctx.number(v)?;
            run.oracle_ratio_small = (x > 0.0).then_some(x);
        }
        _ => return Err(ctx.err("unhandled key")),
    }
    Ok(())
}

pub const MODES: [&str; 6] = ["derive", "steady", "spectrum", "sweep", "delay", "oracle"];

impl Config {
    /// Validates the device, returning warnings.
    pub fn validate(&self) -> Result<Vec<sawomit::params::Warning>> {
        let warnings = self.device.validate()?;
        if self.run.delta_points < 2 {
            return Err(ConfigError::Value {
                section: "run".into(),
                key: "delta_points".into(),
                message: "need at least 2 points".into(),
            });
        }
        if !(self.run.oracle_ratio > 0.0 && self.run.oracle_ratio <= 1e-2) {
            return Err(ConfigError::Value {
                section: "run".into(),
                key: "oracle_ratio".into(),
                message: "must lie in (0, 1e-2]".into(),
            });
        }
        Ok(warnings)
    }

    /// Canonical TOML: SI/rad/s suffixes, shortest round-trip floats. Loading
    /// it back yields an identical `Config` (apart from `preset`, which is
    /// recorded as a comment because every value is spelled out).
    pub fn effective_toml(&self) -> String {
        let d = &self.device;
        let r = &self.run;
        let mut s = String::new();
        let f = |x: f64| format!("{x:?}");
        let _ = writeln!(s, "# effective configuration (canonical units)");
        if let Some(p) = &self.preset {
            let _ = writeln!(s, "# based on preset \"{p}\"");
        }
        let _ = writeln!(s, "\n[material]");
        let _ = writeln!(s, "n_spacer = {}", f(d.material.n_spacer));
        let _ = writeln!(s, "lambda_m = {}", f(d.material.wavelength));
        let _ = writeln!(s, "rho_upper_kg_m3 = {}", f(d.material.rho_upper));
        let _ = writeln!(s, "d_upper_m = {}", f(d.material.d_upper));
        let _ = writeln!(s, "\n[cavity]");
        let _ = writeln!(s, "omega_a_rad_s = {}", f(d.cavity.omega_a));
        let _ = writeln!(s, "kappa_a_rad_s = {}", f(d.cavity.kappa_a));
        let _ = writeln!(s, "L_m = {}", f(d.cavity.spacer_thickness));
        let _ = writeln!(s, "\n[mechanics]");
        let _ = writeln!(s, "omega_b_rad_s = {}", f(d.mechanics.omega_b));
        let _ = writeln!(s, "gamma_b_rad_s = {}", f(d.mechanics.gamma_b));
        let _ = writeln!(s, "m_b_kg = {}", f(d.mechanics.mass));
        let _ = writeln!(s, "l_idt_m = {}", f(d.mechanics.idt_length));
        match d.mechanics.saw {
            SawSpec::Wavelength(l) => {
                let _ = writeln!(s, "lambda_s_m = {}", f(l));
            }
            SawSpec::Velocity(v) => {
                let _ = writeln!(s, "v_saw_m_s = {}", f(v));
            }
        }
        let _ = writeln!(s, "\n[coupling]");
        let _ = writeln!(s, "saw = {}", d.saw_enabled);
        if let Some(g) = d.coupling {
            let _ = writeln!(s, "g_om_rad_s = {}", f(g));
        }
        let _ = writeln!(s, "\n[drive]");
        let _ = writeln!(s, "P_pu_W = {}", f(d.drive.pump_power));
        if let Some(p) = d.drive.probe_power {
            let _ = writeln!(s, "P_pr_W = {}", f(p));
        }
        let _ = writeln!(s, "P_rf_W = {}", f(d.drive.rf_power));
        match d.drive.detuning {
            Detuning::LockToMechanical => {
                let _ = writeln!(s, "detuning = \"lock\"");
            }
            Detuning::Fixed(x) => {
                let _ = writeln!(s, "Delta_a_rad_s = {}", f(x));
            }
        }
        let _ = writeln!(s, "\n[run]");
        if let Some(m) = &r.mode {
            let _ = writeln!(s, "mode = \"{m}\"");
        }
        let _ = writeln!(s, "branch = \"{}\"", r.branch.name());
        let _ = writeln!(s, "plot = {}", r.plot);
        if let Some(o) = &r.out {
            let _ = writeln!(s, "out = {}", Value::String(o.display().to_string()));
        }
        let _ = writeln!(s, "delta_min = {}", f(r.delta_min));
        let _ = writeln!(s, "delta_max = {}", f(r.delta_max));
        let _ = writeln!(s, "delta_points = {}", r.delta_points);
        let _ = writeln!(s, "sweep_axis = \"{}\"", r.sweep_axis.name());
        if let Some(x) = r.sweep_min {
            let _ = writeln!(s, "sweep_min_W = {}", f(x));
        }
        if let Some(x) = r.sweep_max {
            let _ = writeln!(s, "sweep_max_W = {}", f(x));
        }
        let _ = writeln!(s, "sweep_points = {}", r.sweep_points);
        if let Some(sp) = r.sweep_spacing {
            let _ = writeln!(s, "sweep_spacing = \"{}\"", if sp == Spacing::Log { "log" } else { "linear" });
        }
        if let Some(x) = r.delay_min {
            let _ = writeln!(s, "delay_min_W = {}", f(x));
        }
        if let Some(x) = r.delay_max {
            let _ = writeln!(s, "delay_max_W = {}", f(x));
        }
        let _ = writeln!(s, "delay_points = {}", r.delay_points);
        let _ = writeln!(s, "delay_span = {}", f(r.delay_span));
        let _ = writeln!(s, "delay_spectrum_points = {}", r.delay_spectrum_points);
        let offsets: Vec<String> = r.oracle_offsets.iter().map(|x| f(*x)).collect();
        let _ = writeln!(s, "oracle_offsets = [{}]", offsets.join(", "));
        let _ = writeln!(s, "oracle_ratio = {}", f(r.oracle_ratio));
        let _ = writeln!(s, "oracle_ratio_small = {}", f(r.oracle_ratio_small.unwrap_or(0.0)));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn load(text: &str) -> Result<Config> {
        Source::from_str(text)?.resolve()
    }

    #[test]
    fn preset_alone_is_fig3() {
        let c = load("preset = \"fig3\"").unwrap();
        assert_eq!(c.device, Device::fig3());
        assert_eq!(c.run, RunSection::default());
    }

    #[test]
    fn units_are_canonicalized() {
        let c = load(
            "preset = \"fig3\"\n[cavity]\nkappa_a_GHz = 3.5\n[mechanics]\nm_b_pg = 0.33\nv_saw_m_s = 3045.0\n[drive]\nP_pu_uW = 0.015\nDelta_a_MHz = 1050\n",
        )
        .unwrap();
        assert_eq!(c.device.cavity.kappa_a, TAU * 3.5e9);
        assert_eq!(c.device.mechanics.mass, 0.33 * 1e-15);
        assert_eq!(c.device.mechanics.saw, SawSpec::Velocity(3045.0));
        assert_eq!(c.device.drive.pump_power, 0.015 * 1e-6);
        assert_eq!(c.device.drive.detuning, Detuning::Fixed(TAU * 1e6 * 1050.0));
    }

    #[test]
    fn lambda_and_lambda_s_are_distinct() {
        let c = load("preset = \"fig3\"\n[material]\nlambda_nm = 900\n[mechanics]\nlambda_s_um = 3.0\n").unwrap();
        assert_eq!(c.device.material.wavelength, 900.0 * 1e-9);
        assert_eq!(c.device.mechanics.saw, SawSpec::Wavelength(3.0 * 1e-6));
    }

    #[test]
    fn unknown_key_lists_allowed() {
        let e = load("preset = \"fig3\"\n[cavity]\nQ = 1e5\n").unwrap_err();
        let msg = e.to_string();
        assert!(matches!(e, ConfigError::UnknownKey { .. }));
        assert!(msg.contains("kappa_a_<"), "{msg}");
    }

    #[test]
    fn missing_suffix_names_units() {
        let e = load("preset = \"fig3\"\n[drive]\nP_pu = 1e-8\n").unwrap_err();
        let msg = e.to_string();
        assert!(matches!(e, ConfigError::MissingUnit { .. }));
        assert!(msg.contains("_uW") && msg.contains("_W"), "{msg}");
        let e = load("preset = \"fig3\"\n[drive]\nP_pu_kW = 1e-8\n").unwrap_err();
        assert!(e.to_string().contains("unknown unit `kW`"), "{e}");
    }

    #[test]
    fn duplicates_and_exclusive_pairs_rejected() {
        assert!(matches!(
            load("preset = \"fig3\"\n[drive]\nP_pu_W = 1e-8\nP_pu_uW = 0.01\n").unwrap_err(),
            ConfigError::Duplicate { .. }
        ));
        assert!(load("preset = \"fig3\"\n[mechanics]\nlambda_s_um = 2.9\nv_saw_m_s = 3000\n").is_err());
        assert!(load("preset = \"fig3\"\n[drive]\nDelta_a_GHz = 1\ndetuning = \"lock\"\n").is_err());
        assert!(matches!(load("[bogus]\nx = 1\n").unwrap_err(), ConfigError::UnknownSection(_)));
    }

    #[test]
    fn missing_keys_without_preset() {
        let e = load("[cavity]\nkappa_a_GHz = 3.5\n").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("material.n_spacer") && msg.contains("drive.Delta_a or drive.detuning"), "{msg}");
    }

    #[test]
    fn overrides_replace_other_suffixes() {
        let mut src = Source::from_str("preset = \"fig3\"\n[drive]\nP_rf_mW = 5\n").unwrap();
        src.apply_override("drive.P_rf_W=1e-4").unwrap();
        src.apply_override("mechanics.v_saw_m_s = 3000").unwrap();
        src.apply_override("drive.Delta_a_GHz=1.05").unwrap();
        let c = src.resolve().unwrap();
        assert_eq!(c.device.drive.rf_power, 1e-4);
        assert_eq!(c.device.mechanics.saw, SawSpec::Velocity(3000.0));
        assert_eq!(c.device.drive.detuning, Detuning::Fixed(TAU * 1e9 * 1.05));
        src.apply_override("drive.detuning=lock").unwrap();
        assert_eq!(src.resolve().unwrap().device.drive.detuning, Detuning::LockToMechanical);
        assert!(matches!(src.apply_override("drive.P_rf").unwrap_err(), ConfigError::Override(_)));
        assert!(src.apply_override("drive.P_rf=1").is_err());
    }

    #[test]
    fn effective_dump_round_trips() {
        let mut src = Source::from_str("preset = \"fig3\"\n[run]\nsweep_axis = \"P_rf\"\nplot = true\n").unwrap();
        src.apply_override("drive.P_pr_nW=0.02").unwrap();
        src.apply_override("coupling.saw=false").unwrap();
        let c = src.resolve().unwrap();
        let again = load(&c.effective_toml()).unwrap();
        assert_eq!(again.device, c.device);
        assert_eq!(again.run, c.run);
        let body = |s: String| s.lines().filter(|l| !l.starts_with('#')).map(String::from).collect::<Vec<_>>();
        assert_eq!(body(again.effective_toml()), body(c.effective_toml()));
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let c = load("preset = \"fig3\"\n[drive]\nP_pu_W = -1e-8\n").unwrap();
        let e = c.validate().unwrap_err();
        assert!(e.to_string().contains("drive.P_pu"), "{e}");
        assert!(load("preset = \"fig3\"\n[run]\nbranch = \"sideways\"\n").is_err());
        assert!(load("preset = \"fig4\"").is_err());
    }
}
