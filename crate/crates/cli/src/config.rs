//! Run configuration: strict TOML, presets and `key=value` overrides.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use smc_core::constants::DIAMOND_DENSITY;
use smc_core::libration::{moment_of_inertia, Shape, StiffnessDrive, TrapParams};
use smc_core::pulse_engine::RelaxationParams;
use smc_core::spin_core::SpinConstants;

use crate::units::*;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Spectrum,
    Fit,
    Rabi,
    Echo,
    T1,
    PumpProbe,
    Langevin,
    FokkerPlanck,
    Sensitivity,
    Dicke,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::Spectrum,
        Experiment::Fit,
        Experiment::Rabi,
        Experiment::Echo,
        Experiment::T1,
        Experiment::PumpProbe,
        Experiment::Langevin,
        Experiment::FokkerPlanck,
        Experiment::Sensitivity,
        Experiment::Dicke,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Fit => "fit",
            Experiment::Rabi => "rabi",
            Experiment::Echo => "echo",
            Experiment::T1 => "t1",
            Experiment::PumpProbe => "pump-probe",
            Experiment::Langevin => "langevin",
            Experiment::FokkerPlanck => "fokker-planck",
            Experiment::Sensitivity => "sensitivity",
            Experiment::Dicke => "dicke",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Evenly spaced grid, `points` values from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(serialize = "", deserialize = "D: Dimension"))]
pub struct Span<D> {
    pub start: Q<D>,
    pub stop: Q<D>,
    pub points: usize,
}

impl<D> Span<D> {
    pub fn values(&self, field: &str) -> Result<Vec<f64>, CliError> {
        let (a, b, n) = (self.start.get(), self.stop.get(), self.points);
        if n == 0 {
            return Err(CliError::Config(format!("{field}: points must be at least 1")));
        }
        if n == 1 {
            return Ok(vec![a]);
        }
        if !(a.is_finite() && b.is_finite()) || b < a {
            return Err(CliError::Config(format!("{field}: need finite start <= stop, got {a} and {b}")));
        }
        Ok((0..n).map(|k| if k + 1 == n { b } else { a + (b - a) * k as f64 / (n - 1) as f64 }).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinSection {
    #[serde(default = "default_d_zfs")]
    pub d_zfs: Q<Frequency>,
    #[serde(default = "default_gamma_e")]
    pub gamma_e: Q<GyroRatio>,
}

fn default_d_zfs() -> Q<Frequency> {
    Q::new(SpinConstants::default().d_zfs)
}

fn default_gamma_e() -> Q<GyroRatio> {
    Q::new(SpinConstants::default().gamma_e)
}

impl Default for SpinSection {
    fn default() -> Self {
        SpinSection { d_zfs: default_d_zfs(), gamma_e: default_gamma_e() }
    }
}

impl SpinSection {
    pub fn constants(&self) -> Result<SpinConstants, CliError> {
        Ok(SpinConstants::new(self.d_zfs.get(), self.gamma_e.get())?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeName {
    Sphere,
    CubeAverage,
    Ellipsoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    /// Paul-trap drive frequency.
    pub f_ac: Q<Frequency>,
    /// Relative stiffness modulation; zero keeps the drive as a record only.
    #[serde(default)]
    pub depth: Q<Number>,
    #[serde(default)]
    pub phase: Q<Angle>,
}

/// Either `inertia` directly or a particle geometry (`radius` with `shape`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inertia: Option<Q<Inertia>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<Q<Length>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<ShapeName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspect: Option<Q<Number>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<Q<Density>>,
    pub omega: Q<Rate>,
    pub gamma_g: Q<Rate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveSection>,
}

impl TrapSection {
    pub fn inertia(&self) -> Result<f64, CliError> {
        match (self.inertia, self.radius) {
            (Some(i), None) => Ok(i.get()),
            (None, Some(r)) => {
                let density = self.density.map_or(DIAMOND_DENSITY, |d| d.get());
                let shape = match self.shape.unwrap_or(ShapeName::Sphere) {
                    ShapeName::Sphere => Shape::Sphere,
                    ShapeName::CubeAverage => Shape::CubeAverage,
                    ShapeName::Ellipsoid => {
                        let aspect = self.aspect.ok_or_else(|| CliError::Config("trap: shape `ellipsoid` needs `aspect`".into()))?;
                        Shape::Ellipsoid { aspect: aspect.get() }
                    }
                };
                Ok(moment_of_inertia(r.get(), density, shape)?)
            }
            (Some(_), Some(_)) => Err(CliError::Config("trap: give either `inertia` or `radius`, not both".into())),
            (None, None) => Err(CliError::Config("trap: missing field `inertia` (or `radius` to compute it)".into())),
        }
    }

    pub fn params(&self) -> Result<TrapParams, CliError> {
        let mut trap = TrapParams::new(self.inertia()?, self.omega.get(), self.gamma_g.get())?;
        if let Some(d) = self.drive {
            trap = trap.with_drive(StiffnessDrive { f_ac: d.f_ac.get(), depth: d.depth.get(), phase: d.phase.get() })?;
        }
        Ok(trap)
    }
}

/// Spin ensemble driving the libration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinsSection {
    pub n_spins: Q<Number>,
    pub field: Q<Field>,
    /// Equilibrium angle between the field and the NV axis.
    pub phi: Q<Angle>,
    pub t1: Q<Time>,
    #[serde(default)]
    pub onset: Q<Time>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationSection {
    pub t1: Q<Time>,
    pub t2: Q<Time>,
    pub t2_star: Q<Time>,
    #[serde(default = "one")]
    pub stretch: Q<Number>,
}

fn one() -> Q<Number> {
    Q::new(1.0)
}

impl RelaxationSection {
    pub fn params(&self) -> Result<RelaxationParams, CliError> {
        Ok(RelaxationParams::with_stretch(self.t1.get(), self.t2.get(), self.t2_star.get(), self.stretch.get())?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub field: Q<Field>,
    pub theta_nv: Q<Angle>,
    pub phi_k: Q<Angle>,
    /// Full width at half maximum of every line.
    pub width: Q<Frequency>,
    #[serde(default = "one")]
    pub amplitude: Q<Number>,
    pub frequencies: Span<Frequency>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticPeaks {
    pub field: Q<Field>,
    pub theta_nv: Q<Angle>,
    pub phi_k: Q<Angle>,
    /// Gaussian noise on every line centre.
    #[serde(default)]
    pub noise: Q<Frequency>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peaks: Option<Vec<Q<Frequency>>>,
    /// Two-column text file (frequency, signal) to pick peaks from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum_file: Option<PathBuf>,
    /// Minimum |signal − median| of a picked peak.
    #[serde(default = "default_threshold")]
    pub threshold: Q<Number>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticPeaks>,
    #[serde(default = "default_starts")]
    pub n_theta: usize,
    #[serde(default = "default_starts")]
    pub n_phi: usize,
    #[serde(default = "default_field_starts")]
    pub n_field: usize,
    #[serde(default = "default_residual")]
    pub residual_threshold: Q<Frequency>,
}

fn default_threshold() -> Q<Number> {
    Q::new(0.01)
}

fn default_starts() -> usize {
    16
}

fn default_field_starts() -> usize {
    5
}

fn default_residual() -> Q<Frequency> {
    Q::new(5e6)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionName {
    #[default]
    Minus,
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RabiSection {
    pub rabi_frequency: Q<Frequency>,
    pub durations: Span<Time>,
    #[serde(default = "one")]
    pub pump_efficiency: Q<Number>,
    #[serde(default)]
    pub transition: TransitionName,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EchoSection {
    pub taus: Span<Time>,
    /// Defaults to the spread implied by T2*.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning_sigma: Option<Q<Frequency>>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    2000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSection {
    pub base_rate: Q<CountRate>,
    pub slope: Q<CountSlope>,
    pub attenuation: Q<Number>,
    pub bin_width: Q<Time>,
    pub linear_range: Q<Angle>,
    #[serde(default)]
    pub theta0: Q<Angle>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct T1Section {
    pub n_spins: Q<Number>,
    pub field: Q<Field>,
    pub phi: Q<Angle>,
    #[serde(default = "one")]
    pub pump_efficiency: Q<Number>,
    pub pump_end: Q<Time>,
    pub trace_end: Q<Time>,
    /// End of the F integral, measured from the end of the pump.
    pub integral_end: Q<Time>,
    pub delays: Span<Time>,
    pub repetitions: usize,
    pub detection: DetectionSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PumpProbeOutput {
    /// Peak position, amplitude and angle per delay.
    #[default]
    Track,
    /// Full contrast map in long format.
    Map,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpProbeSection {
    pub field: Q<Field>,
    pub theta_nv: Q<Angle>,
    pub phi_k: Q<Angle>,
    /// Selects the pumped orientation class (the one with a line nearest).
    pub pump_frequency: Q<Frequency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torque: Option<Q<Torque>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_spins: Option<Q<Number>>,
    pub delays: Span<Time>,
    pub probe: Span<Frequency>,
    pub probe_width: Q<Frequency>,
    #[serde(default)]
    pub output: PumpProbeOutput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Start {
    /// At rest at θ = 0.
    Rest,
    /// Boltzmann-distributed about θ = 0.
    #[default]
    Thermal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LangevinSection {
    pub temperature: Q<Temperature>,
    pub times: Span<Time>,
    pub trajectories: usize,
    #[serde(default)]
    pub start: Start,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<Q<Time>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FokkerPlanckSection {
    pub temperature: Q<Temperature>,
    pub times: Span<Time>,
    pub n_theta: usize,
    pub n_theta_dot: usize,
    /// Thermal widths of padding around the noiseless trajectory.
    #[serde(default = "default_sigma")]
    pub n_sigma: Q<Number>,
    #[serde(default = "default_cfl")]
    pub cfl: Q<Number>,
    /// When non-zero, a seeded Langevin ensemble of this size is run alongside.
    #[serde(default)]
    pub langevin_trajectories: usize,
}

fn default_sigma() -> Q<Number> {
    Q::new(6.0)
}

fn default_cfl() -> Q<Number> {
    Q::new(0.4)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldCase {
    pub name: String,
    pub delta_x: Q<Number>,
    pub ramsey_time: Q<Time>,
    pub dead_time: Q<Time>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivitySection {
    pub delta_x: Q<Number>,
    pub x0: Q<Number>,
    pub contrast: Q<Number>,
    pub ramsey_time: Q<Time>,
    pub dead_time: Q<Time>,
    pub n_spins: Q<Number>,
    pub field: Q<Field>,
    pub inertia: Q<Inertia>,
    pub omega0: Q<Rate>,
    pub gas_temp: Q<Temperature>,
    pub gamma_g: Q<Rate>,
    pub theta_span: Q<Angle>,
    pub conversion_time: Q<Time>,
    pub measurement_time: Q<Time>,
    /// Carried for reference only; no estimate uses it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation_time: Option<Q<Time>>,
    /// Extra shot-noise field estimates with other photon numbers or timings.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub field_case: Vec<FieldCase>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DickeSection {
    pub n: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_per_spin: Option<Q<Angle>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub spin: SpinSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trap: Option<TrapSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spins: Option<SpinsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<RelaxationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi: Option<RabiSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub echo: Option<EchoSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<T1Section>,
    #[serde(default, rename = "pump-probe", skip_serializing_if = "Option::is_none")]
    pub pump_probe: Option<PumpProbeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub langevin: Option<LangevinSection>,
    #[serde(default, rename = "fokker-planck", skip_serializing_if = "Option::is_none")]
    pub fokker_planck: Option<FokkerPlanckSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<SensitivitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dicke: Option<DickeSection>,
}

/// Borrow a required section or name it in the error.
pub fn section<'a, T>(s: &'a Option<T>, name: &str, experiment: Experiment) -> Result<&'a T, CliError> {
    s.as_ref().ok_or_else(|| CliError::Config(format!("experiment `{experiment}` needs a [{name}] section")))
}

pub const PRESETS: [(&str, &str); 7] = [
    ("fig1-rabi", include_str!("../presets/fig1-rabi.toml")),
    ("fig2-echo", include_str!("../presets/fig2-echo.toml")),
    ("fig3-t1", include_str!("../presets/fig3-t1.toml")),
    ("fig4-pump-probe", include_str!("../presets/fig4-pump-probe.toml")),
    ("figS2-fokker-planck", include_str!("../presets/figS2-fokker-planck.toml")),
    ("paper-s5", include_str!("../presets/paper-s5.toml")),
    ("paper-s7-fit", include_str!("../presets/paper-s7-fit.toml")),
];

/// Configs used by `--experiment` alone, for experiments without a preset.
const DEFAULTS: [(Experiment, &str); 3] = [
    (Experiment::Spectrum, include_str!("../presets/default-spectrum.toml")),
    (Experiment::Langevin, include_str!("../presets/default-langevin.toml")),
    (Experiment::Dicke, include_str!("../presets/default-dicke.toml")),
];

pub fn preset_text(name: &str) -> Result<&'static str, CliError> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        CliError::Config(format!("unknown preset `{name}`; available presets: {}", names.join(", ")))
    })
}

/// Source text of the default config of an experiment.
pub fn default_text(experiment: Experiment) -> &'static str {
    let preset = match experiment {
        Experiment::Fit => Some("paper-s7-fit"),
        Experiment::Rabi => Some("fig1-rabi"),
        Experiment::Echo => Some("fig2-echo"),
        Experiment::T1 => Some("fig3-t1"),
        Experiment::PumpProbe => Some("fig4-pump-probe"),
        Experiment::FokkerPlanck => Some("figS2-fokker-planck"),
        Experiment::Sensitivity => Some("paper-s5"),
        _ => None,
    };
    match preset {
        Some(p) => preset_text(p).expect("built-in preset"),
        None => DEFAULTS.iter().find(|(e, _)| *e == experiment).map(|(_, t)| *t).expect("built-in default"),
    }
}

pub fn preset(name: &str) -> Result<RunConfig, CliError> {
    parse(preset_text(name)?, &format!("preset {name}"), &[])
}

/// Parses config text and applies `key=value` overrides. Without overrides
/// the text is read directly so that errors carry line numbers.
pub fn parse(text: &str, origin: &str, overrides: &[String]) -> Result<RunConfig, CliError> {
    if overrides.is_empty() {
        return toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")));
    }
    let mut table: toml::Table = toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("{origin} (after overrides): {path}: {}", e.into_inner()))
    })
}

/// Sets a dotted key, e.g. `trap.omega=2300rad/s`. The value is read as a
/// TOML value when possible and as a bare string otherwise.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not of the form key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("override key `{key}` is malformed")));
    }
    let mut node = table;
    for p in &parts[..parts.len() - 1] {
        let entry = node.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override `{key}`: `{p}` is not a section")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// The resolved config as TOML, as echoed in output headers.
pub fn to_toml(config: &RunConfig) -> String {
    toml::to_string(config).expect("config serialises")
}
