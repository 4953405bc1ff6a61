//! One runner per experiment, each returning a numeric table.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use smc_core::dicke::{dicke_weights, ghz_component_weight};
use smc_core::libration::{
    fokker_planck_evolve, kinematic_torque_fit, langevin_ensemble, spins_from_torque, FokkerPlanckOptions, InitialCondition,
    LangevinOptions, LibrationState, PhaseSpacePdf, SpinTorqueModel, TrapParams,
};
use smc_core::mdmr::{
    angle_to_field, class_near, extract_peaks, fit_vector_field, forward_spectrum, nv_axes, orientation_error, parse_spectrum,
    pump_probe_simulate, CrystalOrientation, FitOptions, FitResult, FitStatus, SpectrumPeaks,
};
use smc_core::noise_budget::{budget, shot_noise_field_sensitivity, SensitivityInputs};
use smc_core::optimize::fit_exponential_decay;
use smc_core::pulse_engine::{echo_amplitude, rabi_trace, RelaxationParams, Transition};
use smc_core::readout::{DetectionParams, T1Protocol};
use smc_core::spin_core::per_spin_torque_scale;

use crate::config::*;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(String, Cell)>,
    /// Set when the run finished but its result is not trustworthy (exit 3).
    pub failure: Option<String>,
}

impl Report {
    fn new(columns: &[&str]) -> Self {
        Report { columns: columns.iter().map(|c| c.to_string()).collect(), ..Default::default() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn num_row(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| Cell::Num(v)).collect());
    }

    fn note(&mut self, key: &str, value: impl Into<Cell>) {
        self.summary.push((key.to_string(), value.into()));
    }
}

pub fn run(config: &RunConfig) -> Result<Report, CliError> {
    let e = config.experiment;
    match e {
        Experiment::Spectrum => spectrum(config, section(&config.spectrum, "spectrum", e)?),
        Experiment::Fit => fit(config, section(&config.fit, "fit", e)?),
        Experiment::Rabi => rabi(config, section(&config.rabi, "rabi", e)?),
        Experiment::Echo => echo(config, section(&config.echo, "echo", e)?),
        Experiment::T1 => t1(config, section(&config.t1, "t1", e)?),
        Experiment::PumpProbe => pump_probe(config, section(&config.pump_probe, "pump-probe", e)?),
        Experiment::Langevin => langevin(config, section(&config.langevin, "langevin", e)?),
        Experiment::FokkerPlanck => fokker_planck(config, section(&config.fokker_planck, "fokker-planck", e)?),
        Experiment::Sensitivity => sensitivity(config, section(&config.sensitivity, "sensitivity", e)?),
        Experiment::Dicke => dicke(section(&config.dicke, "dicke", e)?),
    }
}

fn transition_sign(t: Transition) -> f64 {
    match t {
        Transition::Minus => -1.0,
        Transition::Plus => 1.0,
    }
}

fn spectrum(config: &RunConfig, s: &SpectrumSection) -> Result<Report, CliError> {
    let constants = config.spin.constants()?;
    let o = CrystalOrientation::new(s.theta_nv.get(), s.phi_k.get())?;
    let peaks = forward_spectrum(s.field.get(), &o, &[s.width.get(); 8], &[s.amplitude.get(); 8], &constants)?;
    let f = s.frequencies.values("spectrum.frequencies")?;
    let mut r = Report::new(&["frequency_hz", "signal"]);
    for (fi, yi) in f.iter().zip(peaks.curve(&f)) {
        r.num_row(&[*fi, yi]);
    }
    for (i, c) in peaks.centers.iter().enumerate() {
        let (class, t) = SpectrumPeaks::label(i);
        let name = if t == Transition::Minus { "minus" } else { "plus" };
        r.note(&format!("class{class}_{name}_hz"), *c);
    }
    for (k, a) in nv_axes(&o).iter().enumerate() {
        r.note(&format!("class{k}_angle_to_field_deg"), angle_to_field(a).to_degrees());
    }
    Ok(r)
}

fn fit(config: &RunConfig, s: &FitSection) -> Result<Report, CliError> {
    let constants = config.spin.constants()?;
    let sources = s.peaks.is_some() as u8 + s.spectrum_file.is_some() as u8 + s.synthetic.is_some() as u8;
    if sources != 1 {
        return Err(CliError::Config("fit: give exactly one of `peaks`, `spectrum_file` or `synthetic`".into()));
    }
    let mut truth = None;
    let measured: Vec<f64> = if let Some(p) = &s.peaks {
        p.iter().map(|q| q.get()).collect()
    } else if let Some(path) = &s.spectrum_file {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let rows = parse_spectrum(&text)?;
        extract_peaks(&rows, s.threshold.get(), 8)
    } else {
        let syn = s.synthetic.as_ref().expect("one source");
        let o = CrystalOrientation::new(syn.theta_nv.get(), syn.phi_k.get())?;
        let lines = forward_spectrum(syn.field.get(), &o, &[1e6; 8], &[1.0; 8], &constants)?;
        let noise = Normal::new(0.0, syn.noise.get()).map_err(|e| CliError::Config(format!("fit.synthetic.noise: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        truth = Some((syn.field.get(), o));
        lines.centers.iter().map(|c| c + noise.sample(&mut rng)).collect()
    };
    let options = FitOptions {
        n_theta: s.n_theta,
        n_phi: s.n_phi,
        n_field: s.n_field,
        residual_threshold: s.residual_threshold.get(),
        constants,
        ..FitOptions::default()
    };
    let result = fit_vector_field(&measured, &options)?;
    let mut r = Report::new(&["measured_hz", "model_hz", "class", "transition"]);
    for l in &result.assignment {
        r.push(vec![measured[l.measured].into(), l.model_center.into(), (l.class as u64).into(), transition_sign(l.transition).into()]);
    }
    r.note("field_t", result.b_magnitude);
    r.note("theta_nv_deg", result.orientation.theta_nv.to_degrees());
    r.note("phi_k_deg", result.orientation.phi_k.to_degrees());
    r.note("residual_hz", result.residual);
    r.note("evaluations", result.evaluations as u64);
    let status = match result.status {
        FitStatus::Converged => "converged",
        FitStatus::ResidualAboveThreshold => "residual_above_threshold",
        FitStatus::Unidentifiable => "unidentifiable",
    };
    r.note("status", status);
    if let Some((b, o)) = truth {
        r.note("field_error_t", (result.b_magnitude - b).abs());
        r.note("orientation_error_deg", orientation_error(&result.orientation, &o).to_degrees());
    }
    if result.status != FitStatus::Converged {
        r.failure = Some(format!("fit did not converge (status {status}, residual {:.3e} Hz)", result.residual));
    }
    Ok(r)
}

fn relaxation(config: &RunConfig, required: bool) -> Result<RelaxationParams, CliError> {
    match (&config.relaxation, required) {
        (Some(r), _) => r.params(),
        (None, false) => Ok(RelaxationParams::none()),
        (None, true) => Err(CliError::Config(format!("experiment `{}` needs a [relaxation] section", config.experiment))),
    }
}

fn rabi(config: &RunConfig, s: &RabiSection) -> Result<Report, CliError> {
    let relax = relaxation(config, false)?;
    let durations = s.durations.values("rabi.durations")?;
    let target = match s.transition {
        TransitionName::Minus => Transition::Minus,
        TransitionName::Plus => Transition::Plus,
    };
    let p = rabi_trace(&durations, s.rabi_frequency.get(), &relax, s.pump_efficiency.get(), target)?;
    let mut r = Report::new(&["duration_s", "population"]);
    for (t, v) in durations.iter().zip(p) {
        r.num_row(&[*t, v]);
    }
    Ok(r)
}

fn echo(config: &RunConfig, s: &EchoSection) -> Result<Report, CliError> {
    let relax = relaxation(config, true)?;
    let sigma = s.detuning_sigma.map_or(relax.detuning_sigma(), |q| q.get());
    let taus = s.taus.values("echo.taus")?;
    let amps = taus.iter().map(|&t| echo_amplitude(t, &relax, sigma, s.samples, config.seed)).collect::<Result<Vec<_>, _>>()?;
    let mut r = Report::new(&["tau_s", "amplitude"]);
    for (t, a) in taus.iter().zip(&amps) {
        r.num_row(&[*t, *a]);
    }
    // The envelope is exp(−2τ/T2) for unit stretch.
    if taus.len() >= 3 && relax.t2.is_finite() {
        let total: Vec<f64> = taus.iter().map(|t| 2.0 * t).collect();
        let (a, t2) = fit_exponential_decay(&total, &amps)?;
        r.note("fitted_amplitude", a);
        r.note("fitted_t2_s", t2);
    }
    Ok(r)
}

fn trap(config: &RunConfig) -> Result<TrapParams, CliError> {
    section(&config.trap, "trap", config.experiment)?.params()
}

fn t1(config: &RunConfig, s: &T1Section) -> Result<Report, CliError> {
    let d = &s.detection;
    let proto = T1Protocol {
        trap: trap(config)?,
        n_spins: s.n_spins.get(),
        field_magnitude: s.field.get(),
        phi: s.phi.get(),
        relax: relaxation(config, true)?,
        pump_efficiency: s.pump_efficiency.get(),
        detection: DetectionParams {
            base_rate: d.base_rate.get(),
            slope: d.slope.get(),
            attenuation: d.attenuation.get(),
            bin_width: d.bin_width.get(),
            linear_range: d.linear_range.get(),
            theta0: d.theta0.get(),
        },
        pump_end: s.pump_end.get(),
        trace_end: s.trace_end.get(),
        integral_end: s.integral_end.get(),
        delays: s.delays.values("t1.delays")?,
        repetitions: s.repetitions,
    };
    let res = proto.run(config.seed)?;
    let mut r = Report::new(&["delay_s", "signal", "signal_error", "polarization"]);
    for k in 0..res.delays.len() {
        r.num_row(&[res.delays[k], res.signal[k], res.signal_error[k], res.polarization[k]]);
    }
    r.note("fitted_amplitude", res.fitted_amplitude);
    r.note("fitted_t1_s", res.fitted_t1);
    Ok(r)
}

fn pump_probe(config: &RunConfig, s: &PumpProbeSection) -> Result<Report, CliError> {
    let constants = config.spin.constants()?;
    let relax = relaxation(config, true)?;
    let trap = trap(config)?;
    let orientation = CrystalOrientation::new(s.theta_nv.get(), s.phi_k.get())?;
    let fit = FitResult {
        b_magnitude: s.field.get(),
        orientation,
        residual: 0.0,
        assignment: Vec::new(),
        status: FitStatus::Converged,
        evaluations: 0,
    };
    let class = class_near(&fit, s.pump_frequency.get(), &constants)?;
    let phi = angle_to_field(&nv_axes(&orientation)[class]);
    let n_spins = match (s.n_spins, s.torque) {
        (Some(n), None) => n.get(),
        (None, Some(t)) => t.get() / (per_spin_torque_scale(s.field.get(), &constants)? * phi.sin()),
        _ => return Err(CliError::Config("pump-probe: give exactly one of `n_spins` or `torque`".into())),
    };
    let mut torque = SpinTorqueModel::new(n_spins, s.field.get(), phi, relax.t1, 0.0)?;
    torque.constants = constants;
    let delays = s.delays.values("pump-probe.delays")?;
    let probe = s.probe.values("pump-probe.probe")?;
    let res = pump_probe_simulate(&fit, class, &trap, &torque, &relax, &delays, &probe, s.probe_width.get(), &constants)?;
    let mut r = match s.output {
        PumpProbeOutput::Track => {
            let mut r = Report::new(&["delay_s", "theta_rad", "line_hz", "peak_hz", "peak_amplitude", "theta_from_peak_rad"]);
            for (k, d) in delays.iter().enumerate() {
                r.num_row(&[*d, res.theta[k], res.line[k], res.peak_centers[k], res.peak_amplitudes[k], res.theta_from_peaks[k]]);
            }
            r
        }
        PumpProbeOutput::Map => {
            let mut r = Report::new(&["delay_s", "probe_hz", "contrast"]);
            for (d, row) in delays.iter().zip(&res.contrast) {
                for (f, c) in probe.iter().zip(row) {
                    r.num_row(&[*d, *f, *c]);
                }
            }
            r
        }
    };
    r.note("class", class as u64);
    r.note("phi_deg", phi.to_degrees());
    r.note("n_spins", n_spins);
    let last = res.peak_centers.len() - 1;
    r.note("peak_shift_hz", res.peak_centers[last] - res.peak_centers[0]);
    // Kinematic torque from the first 100 us of the recovered angle.
    let early: Vec<usize> = (0..delays.len()).filter(|&k| delays[k] <= 100e-6 + 1e-12).collect();
    if early.len() >= 3 {
        let t: Vec<f64> = early.iter().map(|&k| delays[k]).collect();
        let th: Vec<f64> = early.iter().map(|&k| res.theta_from_peaks[k]).collect();
        let tau = kinematic_torque_fit(&t, &th, trap.inertia)?;
        r.note("kinematic_torque_nm", tau);
        r.note("kinematic_spins", spins_from_torque(tau.abs() / phi.sin(), s.field.get())?);
    }
    Ok(r)
}

fn torque_model(config: &RunConfig) -> Result<SpinTorqueModel, CliError> {
    match &config.spins {
        None => Ok(SpinTorqueModel::none()),
        Some(s) => {
            let mut m = SpinTorqueModel::new(s.n_spins.get(), s.field.get(), s.phi.get(), s.t1.get(), s.onset.get())?;
            m.constants = config.spin.constants()?;
            Ok(m)
        }
    }
}

fn langevin(config: &RunConfig, s: &LangevinSection) -> Result<Report, CliError> {
    let trap = trap(config)?;
    let torque = torque_model(config)?;
    let times = s.times.values("langevin.times")?;
    let initial = match s.start {
        Start::Rest => InitialCondition::Fixed(LibrationState::default()),
        Start::Thermal => InitialCondition::Thermal(LibrationState::default()),
    };
    let options = LangevinOptions { max_step: s.max_step.map(|q| q.get()) };
    let res = langevin_ensemble(&initial, &trap, &torque, &times, s.temperature.get(), s.trajectories, config.seed, &options)?;
    let se = res.standard_error();
    let mut r = Report::new(&["time_s", "mean_theta", "var_theta", "std_error", "mean_theta_dot", "var_theta_dot"]);
    for k in 0..times.len() {
        r.num_row(&[times[k], res.mean_theta[k], res.var_theta[k], se[k], res.mean_theta_dot[k], res.var_theta_dot[k]]);
    }
    Ok(r)
}

fn fokker_planck(config: &RunConfig, s: &FokkerPlanckSection) -> Result<Report, CliError> {
    let trap = trap(config)?;
    let torque = torque_model(config)?;
    let times = s.times.values("fokker-planck.times")?;
    let temperature = s.temperature.get();
    let t_end = times.last().copied().unwrap_or(0.0);
    let rest = LibrationState::default();
    let (g, gv) = PhaseSpacePdf::covering_grids(&rest, &trap, &torque, temperature, t_end, s.n_sigma.get(), s.n_theta, s.n_theta_dot)?;
    let pdf0 = if temperature > 0.0 { PhaseSpacePdf::boltzmann(g, gv, &trap, temperature)? } else { PhaseSpacePdf::point_mass(g, gv, &rest)? };
    let options = FokkerPlanckOptions { cfl: s.cfl.get(), ..FokkerPlanckOptions::default() };
    let run = fokker_planck_evolve(&pdf0, &trap, &torque, temperature, &times, &options)?;
    let means = run.first_moments();

    let mut columns = vec!["time_s", "mean_theta", "var_theta", "mass"];
    let lan = if s.langevin_trajectories > 0 {
        columns.extend(["langevin_mean_theta", "langevin_std_error"]);
        let initial = if temperature > 0.0 { InitialCondition::Thermal(rest) } else { InitialCondition::Fixed(rest) };
        Some(langevin_ensemble(&initial, &trap, &torque, &times, temperature, s.langevin_trajectories, config.seed, &LangevinOptions::default())?)
    } else {
        None
    };
    let mut r = Report::new(&columns);
    let mut max_z: f64 = 0.0;
    for k in 0..times.len() {
        let pdf = &run.pdfs[k];
        let mut row = vec![times[k], means[k], pdf.variance_theta(), pdf.mass()];
        if let Some(l) = &lan {
            let se = (l.var_theta[k] / l.n_traj as f64).sqrt();
            row.extend([l.mean_theta[k], se]);
            if times[k] > 0.0 && se > 0.0 {
                max_z = max_z.max(((means[k] - l.mean_theta[k]) / se).abs());
            }
        }
        r.num_row(&row);
    }
    r.note("time_step_s", run.dt);
    r.note("steps", run.steps as u64);
    if lan.is_some() {
        r.note("max_abs_z", max_z);
    }
    Ok(r)
}

fn sensitivity(config: &RunConfig, s: &SensitivitySection) -> Result<Report, CliError> {
    let inputs = SensitivityInputs {
        delta_x: s.delta_x.get(),
        x0: s.x0.get(),
        contrast: s.contrast.get(),
        ramsey_time: s.ramsey_time.get(),
        dead_time: s.dead_time.get(),
        n_spins: s.n_spins.get(),
        field: s.field.get(),
        inertia: s.inertia.get(),
        omega0: s.omega0.get(),
        gas_temp: s.gas_temp.get(),
        gamma_g: s.gamma_g.get(),
        theta_span: s.theta_span.get(),
        gamma_e: config.spin.constants()?.gamma_e,
        conversion_time: s.conversion_time.get(),
        measurement_time: s.measurement_time.get(),
        rotation_time: s.rotation_time.map(|q| q.get()),
    };
    let mut r = Report::new(&["quantity", "value", "unit"]);
    for e in budget(&inputs)? {
        r.push(vec![e.quantity.as_str().into(), e.value.into(), e.unit.as_str().into()]);
    }
    for c in &s.field_case {
        let v = shot_noise_field_sensitivity(c.delta_x.get(), c.ramsey_time.get(), c.dead_time.get(), inputs.gamma_e)?;
        r.push(vec![c.name.as_str().into(), v.into(), "T/sqrt(Hz)".into()]);
    }
    Ok(r)
}

fn dicke(s: &DickeSection) -> Result<Report, CliError> {
    if s.n.is_empty() {
        return Err(CliError::Config("dicke: `n` needs at least one spin number".into()));
    }
    let theta = s.theta_per_spin.map(|q| q.get());
    let mut columns = vec!["n_spins", "k", "weight", "probability"];
    if theta.is_some() {
        columns.push("angle_rad");
    }
    let mut r = Report::new(&columns);
    for &n in &s.n {
        let w = dicke_weights(n)?;
        for k in 0..w.log_weights.len() {
            let mut row = vec![n.into(), (k as u64).into(), w.weight(k).into(), w.probability(k).into()];
            if let Some(th) = theta {
                row.push((k as f64 * th).into());
            }
            r.push(row);
        }
        r.note(&format!("n{n}_log_norm"), w.log_norm());
        r.note(&format!("n{n}_ghz_log2_probability"), ghz_component_weight(n)?.log2_probability);
    }
    Ok(r)
}
