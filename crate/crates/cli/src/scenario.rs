//! Scenario files: parsing, validation and the resolved run plans.
//!
//! A scenario is a TOML document with a `name`, a `kind`, a `[params]`
//! block whose keys depend on the kind, and an optional `[outputs]` block.
//! Every error names the offending key.

use std::f64::consts::PI;
use std::path::Path;

use lambda_transfer::diode::{
    project_pulse, with_transfer_rate, ContinuumGrid, PulseKind, PulseShape, SimulationWindow,
};
use lambda_transfer::diode::full::STEPS_PER_PERIOD;
use lambda_transfer::fock::{DensityMatrix, StateVector};
use lambda_transfer::lindblad::LindbladModel;
use lambda_transfer::reservoir::{
    ReservoirSpec, Spectrum, TwoUpperModeState, DEFAULT_STEP_FACTOR, MAX_STEP_FACTOR,
};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::initial::InitialState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum Kind {
    LindbladTransfer,
    PurificationMap,
    DarkState,
    MicroscopicDecay,
    ZenoScan,
    AntiZenoScan,
    InterferenceExact,
    DiodeFull,
    DiodeMarkov,
    Port2Reflection,
    ImpedanceScan,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub dir: Option<String>,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_stride() -> usize {
    10
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            dir: None,
            stride: default_stride(),
        }
    }
}

#[derive(Deserialize)]
struct Header {
    kind: Kind,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document<P> {
    name: String,
    #[allow(dead_code)]
    kind: Kind,
    params: P,
    #[serde(default)]
    outputs: Outputs,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

impl Amplitude {
    fn value(self) -> Complex64 {
        match self {
            Amplitude::Real(re) => Complex64::new(re, 0.0),
            Amplitude::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LindbladParams {
    rate: f64,
    dims: Vec<usize>,
    initial: String,
    t_final: f64,
    dt: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PurificationParams {
    dims: [usize; 2],
    initial: String,
    #[serde(default = "unit")]
    rate: f64,
    #[serde(default = "default_verify_time")]
    t_final: f64,
    dt: Option<f64>,
}

fn unit() -> f64 {
    1.0
}

fn default_verify_time() -> f64 {
    30.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReservoirParams {
    classes: usize,
    eps_max: f64,
    rate: Option<f64>,
    coupling: Option<Amplitude>,
    #[serde(default = "default_spectrum")]
    spectrum: String,
    center: Option<f64>,
    width: Option<f64>,
    frequencies: Option<Vec<f64>>,
}

fn default_spectrum() -> String {
    "equidistant".into()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DecayParams {
    reservoir: ReservoirParams,
    t_final: f64,
    dt: Option<f64>,
    fit_window: Option<[f64; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ZenoParams {
    reservoir: ReservoirParams,
    periods: Vec<f64>,
    t_final: f64,
    dt: Option<f64>,
    free_t_final: Option<f64>,
    free_window: Option<[f64; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InterferenceParams {
    reservoir: ReservoirParams,
    state: String,
    t_final: f64,
    dt: Option<f64>,
    fit_window: Option<[f64; 2]>,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum PulseParams {
    Gaussian {
        duration: f64,
        center: Option<f64>,
        #[serde(default)]
        carrier: f64,
    },
    Exponential {
        rate: f64,
        center: Option<f64>,
        #[serde(default)]
        carrier: f64,
    },
    Custom {
        start: f64,
        step: f64,
        samples: Vec<Amplitude>,
        #[serde(default)]
        carrier: f64,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DiodeFullParams {
    gamma: f64,
    gamma1: f64,
    gamma2: f64,
    reservoir: ReservoirParams,
    n_q: usize,
    delta_max: f64,
    port2_n_q: Option<usize>,
    port2_delta_max: Option<f64>,
    pulse: PulseParams,
    t_final: Option<f64>,
    dt: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DiodeMarkovParams {
    gamma: f64,
    gamma1: f64,
    gamma2: f64,
    pulse: PulseParams,
    t_final: Option<f64>,
    dt: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReflectionParams {
    gamma2: f64,
    n_q: usize,
    delta_max: f64,
    pulse: PulseParams,
    t_final: Option<f64>,
    dt: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ImpedanceParams {
    gamma: f64,
    gamma2: f64,
    ratios: Vec<f64>,
    pulse: PulseParams,
    t_final: Option<f64>,
    dt: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct LindbladPlan {
    pub model: LindbladModel,
    pub rho0: DensityMatrix,
    pub t_final: f64,
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct DarkStatePlan {
    pub model: LindbladModel,
    pub psi: StateVector,
    pub t_final: f64,
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct DecayPlan {
    pub spec: ReservoirSpec,
    pub t_final: f64,
    pub dt: f64,
    pub window: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct ZenoPlan {
    pub spec: ReservoirSpec,
    pub periods: Vec<f64>,
    pub t_final: f64,
    pub dt: f64,
    pub free_t_final: f64,
    pub free_window: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct InterferencePlan {
    pub spec: ReservoirSpec,
    pub state: TwoUpperModeState,
    pub t_final: f64,
    pub dt: f64,
    pub window: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct DiodeFullPlan {
    pub gamma: f64,
    pub port1: ContinuumGrid,
    pub port2: ContinuumGrid,
    pub spec: ReservoirSpec,
    pub pulse: PulseShape,
    pub p0: Vec<Complex64>,
    pub t_final: f64,
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct DiodeMarkovPlan {
    pub gamma: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub pulse: PulseShape,
    pub t_final: f64,
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct ReflectionPlan {
    pub grid: ContinuumGrid,
    pub pulse: PulseShape,
    pub t_final: f64,
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct ImpedancePlan {
    pub gamma: f64,
    pub gamma2: f64,
    pub ratios: Vec<f64>,
    pub pulse: PulseShape,
    pub t_final: f64,
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub enum Plan {
    LindbladTransfer(LindbladPlan),
    PurificationMap(LindbladPlan),
    DarkState(DarkStatePlan),
    MicroscopicDecay(DecayPlan),
    ZenoScan(ZenoPlan),
    AntiZenoScan(ZenoPlan),
    InterferenceExact(InterferencePlan),
    DiodeFull(DiodeFullPlan),
    DiodeMarkov(DiodeMarkovPlan),
    Port2Reflection(ReflectionPlan),
    ImpedanceScan(ImpedancePlan),
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub kind: Kind,
    pub outputs: Outputs,
    pub plan: Plan,
    /// The document as read, echoed into the manifest.
    pub source: toml::Table,
}

pub fn parse_scenario(path: &Path) -> CliResult<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> CliResult<Scenario> {
    let source: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Parse(e.message().to_string()))?;
    let header: Header = typed(text)?;
    let (name, outputs, plan) = match header.kind {
        Kind::LindbladTransfer => resolve(text, lindblad)?,
        Kind::PurificationMap => resolve(text, purification)?,
        Kind::DarkState => resolve(text, dark_state)?,
        Kind::MicroscopicDecay => resolve(text, decay)?,
        Kind::ZenoScan => resolve(text, |p| zeno(p).map(Plan::ZenoScan))?,
        Kind::AntiZenoScan => resolve(text, |p| zeno(p).map(Plan::AntiZenoScan))?,
        Kind::InterferenceExact => resolve(text, interference)?,
        Kind::DiodeFull => resolve(text, diode_full)?,
        Kind::DiodeMarkov => resolve(text, diode_markov)?,
        Kind::Port2Reflection => resolve(text, reflection)?,
        Kind::ImpedanceScan => resolve(text, impedance)?,
    };
    if outputs.stride == 0 {
        return Err(CliError::at("outputs.stride", "stride must be at least 1"));
    }
    Ok(Scenario {
        name,
        kind: header.kind,
        outputs,
        plan,
        source,
    })
}

fn typed<T: DeserializeOwned>(text: &str) -> CliResult<T> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::Parse(e.message().to_string()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            CliError::Config(inner.message().to_string())
        } else {
            CliError::at(&path, inner.message())
        }
    })
}

fn resolve<P: DeserializeOwned>(
    text: &str,
    build: impl FnOnce(P) -> CliResult<Plan>,
) -> CliResult<(String, Outputs, Plan)> {
    let doc: Document<P> = typed(text)?;
    Ok((doc.name, doc.outputs, build(doc.params)?))
}

fn positive(key: &str, what: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::at(key, format!("{what} must be positive, got {v}")))
    }
}

fn window(key: &str, w: Option<[f64; 2]>, default: (f64, f64)) -> CliResult<(f64, f64)> {
    match w {
        None => Ok(default),
        Some([a, b]) if a >= 0.0 && b > a => Ok((a, b)),
        Some([a, b]) => Err(CliError::at(key, format!("window [{a}, {b}] must satisfy 0 <= a < b"))),
    }
}

fn lindblad_step(model: &LindbladModel, dt: Option<f64>) -> CliResult<f64> {
    let limit = model.max_stable_step();
    match dt {
        None => Ok(0.5 * limit),
        Some(dt) => {
            positive("params.dt", "dt", dt)?;
            if dt > limit {
                return Err(CliError::at(
                    "params.dt",
                    format!("stability guard dt * max_rate * max_photon_number^2 <= 0.1 requires dt <= {limit}, got {dt}"),
                ));
            }
            Ok(dt)
        }
    }
}

fn initial(text: &str) -> CliResult<InitialState> {
    InitialState::parse(text).map_err(|e| CliError::at("params.initial", e))
}

fn lindblad(p: LindbladParams) -> CliResult<Plan> {
    let rate = positive("params.rate", "rate", p.rate)?;
    let dims: [usize; 2] = p
        .dims
        .as_slice()
        .try_into()
        .map_err(|_| CliError::at("params.dims", format!("expected two mode dimensions, got {}", p.dims.len())))?;
    let model = LindbladModel::transfer(dims, rate).map_err(|e| CliError::at("params.dims", e))?;
    let rho0 = initial(&p.initial)?
        .density(model.space())
        .map_err(|e| CliError::at("params.initial", e))?;
    let t_final = positive("params.t_final", "t_final", p.t_final)?;
    let dt = lindblad_step(&model, p.dt)?;
    Ok(Plan::LindbladTransfer(LindbladPlan {
        model,
        rho0,
        t_final,
        dt,
    }))
}

fn purification(p: PurificationParams) -> CliResult<Plan> {
    let rate = positive("params.rate", "rate", p.rate)?;
    let model = LindbladModel::transfer(p.dims, rate).map_err(|e| CliError::at("params.dims", e))?;
    let rho0 = initial(&p.initial)?
        .density(model.space())
        .map_err(|e| CliError::at("params.initial", e))?;
    // The closed-form map needs the whole output to fit into mode 2.
    lambda_transfer::transfer_map::asymptotic_transfer_map(&rho0)
        .map_err(|e| CliError::at("params.initial", e))?;
    let t_final = positive("params.t_final", "t_final", p.t_final)?;
    let dt = lindblad_step(&model, p.dt)?;
    Ok(Plan::PurificationMap(LindbladPlan {
        model,
        rho0,
        t_final,
        dt,
    }))
}

fn dark_state(p: LindbladParams) -> CliResult<Plan> {
    let rate = positive("params.rate", "rate", p.rate)?;
    let dims: [usize; 3] = p.dims.as_slice().try_into().map_err(|_| {
        CliError::at(
            "params.dims",
            format!("expected three mode dimensions (1, 1', 2), got {}", p.dims.len()),
        )
    })?;
    let model = LindbladModel::interference(dims, rate).map_err(|e| CliError::at("params.dims", e))?;
    let psi = initial(&p.initial)?
        .pure(model.space())
        .map_err(|e| CliError::at("params.initial", e))?;
    let t_final = positive("params.t_final", "t_final", p.t_final)?;
    let dt = lindblad_step(&model, p.dt)?;
    Ok(Plan::DarkState(DarkStatePlan {
        model,
        psi,
        t_final,
        dt,
    }))
}

fn spectrum(r: &ReservoirParams) -> CliResult<Spectrum> {
    let key = "params.reservoir.spectrum";
    let unused = |name: &str, present: bool| {
        if present {
            Err(CliError::at(
                &format!("params.reservoir.{name}"),
                format!("not used by the {} spectrum", r.spectrum),
            ))
        } else {
            Ok(())
        }
    };
    match r.spectrum.as_str() {
        "equidistant" => {
            unused("center", r.center.is_some())?;
            unused("width", r.width.is_some())?;
            unused("frequencies", r.frequencies.is_some())?;
            Ok(Spectrum::Equidistant)
        }
        "lorentzian" => {
            unused("frequencies", r.frequencies.is_some())?;
            let center = r
                .center
                .ok_or_else(|| CliError::at("params.reservoir.center", "required by the lorentzian spectrum"))?;
            let width = r
                .width
                .ok_or_else(|| CliError::at("params.reservoir.width", "required by the lorentzian spectrum"))?;
            positive("params.reservoir.width", "width", width)?;
            Ok(Spectrum::Lorentzian { center, width })
        }
        "custom" => {
            unused("center", r.center.is_some())?;
            unused("width", r.width.is_some())?;
            let w = r.frequencies.clone().ok_or_else(|| {
                CliError::at("params.reservoir.frequencies", "required by the custom spectrum")
            })?;
            Ok(Spectrum::Custom(w))
        }
        other => Err(CliError::at(
            key,
            format!("unknown spectrum `{other}`; expected equidistant, lorentzian or custom"),
        )),
    }
}

/// Builds the reservoir. With `rate`, the coupling is chosen so that the
/// Markov rate `pi f |g|^2 / eps_max` equals it.
fn reservoir(r: &ReservoirParams) -> CliResult<ReservoirSpec> {
    let spectrum = spectrum(r)?;
    let coupling = match (r.rate, r.coupling) {
        (Some(rate), None) => {
            positive("params.reservoir.rate", "rate", rate)?;
            if spectrum != Spectrum::Equidistant {
                return Err(CliError::at(
                    "params.reservoir.rate",
                    "a Markov rate fixes the coupling only for the equidistant spectrum; give `coupling`",
                ));
            }
            Complex64::new((rate * r.eps_max / (PI * r.classes as f64)).sqrt(), 0.0)
        }
        (None, Some(g)) => g.value(),
        _ => {
            return Err(CliError::at(
                "params.reservoir",
                "give exactly one of `rate` or `coupling`",
            ))
        }
    };
    ReservoirSpec::new(r.classes, r.eps_max, coupling, spectrum)
        .map_err(|e| CliError::at("params.reservoir", e))
}

fn exact_step(spec: &ReservoirSpec, dt: Option<f64>) -> CliResult<f64> {
    let limit = MAX_STEP_FACTOR / spec.bandwidth();
    match dt {
        None => Ok(DEFAULT_STEP_FACTOR / spec.bandwidth()),
        Some(dt) if dt > 0.0 && dt <= limit => Ok(dt),
        Some(dt) => Err(CliError::at(
            "params.dt",
            format!("dt must lie in (0, {MAX_STEP_FACTOR} / eps_max = {limit}], got {dt}"),
        )),
    }
}

fn decay(p: DecayParams) -> CliResult<Plan> {
    let spec = reservoir(&p.reservoir)?;
    let t_final = positive("params.t_final", "t_final", p.t_final)?;
    let dt = exact_step(&spec, p.dt)?;
    let window = window("params.fit_window", p.fit_window, (0.0, t_final))?;
    Ok(Plan::MicroscopicDecay(DecayPlan {
        spec,
        t_final,
        dt,
        window,
    }))
}

fn zeno(p: ZenoParams) -> CliResult<ZenoPlan> {
    let spec = reservoir(&p.reservoir)?;
    let t_final = positive("params.t_final", "t_final", p.t_final)?;
    let dt = exact_step(&spec, p.dt)?;
    if p.periods.is_empty() {
        return Err(CliError::at("params.periods", "at least one measurement period is required"));
    }
    for (k, &tau) in p.periods.iter().enumerate() {
        let key = format!("params.periods[{k}]");
        positive(&key, "measurement period", tau)?;
        if tau > t_final {
            return Err(CliError::at(&key, format!("period {tau} exceeds t_final = {t_final}")));
        }
    }
    let free_t_final = positive("params.free_t_final", "free_t_final", p.free_t_final.unwrap_or(t_final))?;
    let free_window = window("params.free_window", p.free_window, (0.0, free_t_final))?;
    Ok(ZenoPlan {
        spec,
        periods: p.periods,
        t_final,
        dt,
        free_t_final,
        free_window,
    })
}

fn interference(p: InterferenceParams) -> CliResult<Plan> {
    let spec = reservoir(&p.reservoir)?;
    let state = match p.state.as_str() {
        "antisymmetric" => TwoUpperModeState::antisymmetric(spec.classes()),
        "symmetric" => TwoUpperModeState::symmetric(spec.classes()),
        other => {
            return Err(CliError::at(
                "params.state",
                format!("unknown state `{other}`; expected antisymmetric or symmetric"),
            ))
        }
    };
    let t_final = positive("params.t_final", "t_final", p.t_final)?;
    let dt = exact_step(&spec, p.dt)?;
    let window = window("params.fit_window", p.fit_window, (0.0, t_final))?;
    Ok(Plan::InterferenceExact(InterferencePlan {
        spec,
        state,
        t_final,
        dt,
        window,
    }))
}

/// The pulse and the window it implies. Without an explicit center the
/// pulse peaks at three durations.
fn pulse(p: &PulseParams, rates: &[f64]) -> CliResult<(PulseShape, SimulationWindow)> {
    let key = "params.pulse";
    let build = |kind, carrier| PulseShape::new(kind, carrier).map_err(|e| CliError::at(key, e));
    let probe = match p {
        PulseParams::Gaussian { duration, carrier, .. } => build(
            PulseKind::Gaussian {
                center: 0.0,
                duration: *duration,
            },
            *carrier,
        )?,
        PulseParams::Exponential { rate, carrier, .. } => build(
            PulseKind::Exponential {
                center: 0.0,
                rate: *rate,
            },
            *carrier,
        )?,
        PulseParams::Custom {
            start,
            step,
            samples,
            carrier,
        } => build(
            PulseKind::Custom {
                start: *start,
                step: *step,
                samples: samples.iter().map(|a| a.value()).collect(),
            },
            *carrier,
        )?,
    };
    let window = SimulationWindow::new(probe.duration(), rates).map_err(|e| CliError::at(key, e))?;
    let shape = match p {
        PulseParams::Gaussian {
            duration,
            center,
            carrier,
        } => build(
            PulseKind::Gaussian {
                center: center.unwrap_or(window.pulse_center),
                duration: *duration,
            },
            *carrier,
        )?,
        PulseParams::Exponential { rate, center, carrier } => build(
            PulseKind::Exponential {
                center: center.unwrap_or(window.pulse_center),
                rate: *rate,
            },
            *carrier,
        )?,
        PulseParams::Custom { .. } => probe,
    };
    Ok((shape, window))
}

fn diode_step(dt: Option<f64>, fastest: f64) -> CliResult<f64> {
    let limit = 2.0 * PI / (STEPS_PER_PERIOD * fastest);
    match dt {
        None => Ok(0.4 * limit),
        Some(dt) if dt > 0.0 && dt <= limit => Ok(dt),
        Some(dt) => Err(CliError::at(
            "params.dt",
            format!("dt must lie in (0, {limit}] for {STEPS_PER_PERIOD} steps per fastest period, got {dt}"),
        )),
    }
}

fn grid(key: &str, n_q: usize, delta_max: f64, rate: f64, t_final: f64) -> CliResult<ContinuumGrid> {
    let g = ContinuumGrid::new(n_q, delta_max, rate).map_err(|e| CliError::at(key, e))?;
    if g.recurrence_time() <= t_final {
        return Err(CliError::at(
            key,
            format!(
                "comb recurrence 2 pi / spacing = {} must exceed t_final = {t_final}; use more modes or a smaller delta_max",
                g.recurrence_time()
            ),
        ));
    }
    Ok(g)
}

fn rates(gamma: f64, gamma1: f64, gamma2: f64) -> CliResult<[f64; 3]> {
    Ok([
        positive("params.gamma", "gamma", gamma)?,
        positive("params.gamma1", "gamma1", gamma1)?,
        positive("params.gamma2", "gamma2", gamma2)?,
    ])
}

fn diode_full(p: DiodeFullParams) -> CliResult<Plan> {
    let [gamma, gamma1, gamma2] = rates(p.gamma, p.gamma1, p.gamma2)?;
    if p.reservoir.rate.is_some() || p.reservoir.coupling.is_some() {
        return Err(CliError::at(
            "params.reservoir",
            "the coupling follows from params.gamma; remove `rate` and `coupling`",
        ));
    }
    let base = ReservoirParams {
        coupling: Some(Amplitude::Real(1.0)),
        ..p.reservoir
    };
    let spec = with_transfer_rate(&reservoir(&base)?, gamma, gamma2)
        .map_err(|e| CliError::at("params.gamma", e))?;
    let (pulse, window) = pulse(&p.pulse, &[gamma, gamma1, gamma2])?;
    let t_final = positive("params.t_final", "t_final", p.t_final.unwrap_or(window.t_final))?;
    let port1 = grid("params.n_q", p.n_q, p.delta_max, gamma1, t_final)?;
    let port2 = grid(
        "params.port2_n_q",
        p.port2_n_q.unwrap_or(p.n_q),
        p.port2_delta_max.unwrap_or(p.delta_max),
        gamma2,
        t_final,
    )?;
    let p0 = project_pulse(&port1, &pulse).map_err(|e| CliError::at("params.pulse", e))?;
    let fastest = port1
        .delta_max()
        .max(port2.delta_max())
        .max(spec.bandwidth());
    let dt = diode_step(p.dt, fastest)?;
    Ok(Plan::DiodeFull(DiodeFullPlan {
        gamma,
        port1,
        port2,
        spec,
        pulse,
        p0,
        t_final,
        dt,
    }))
}

fn markov_step(dt: Option<f64>, fastest: f64) -> CliResult<f64> {
    match dt {
        None => Ok(0.05 / fastest),
        Some(dt) => positive("params.dt", "dt", dt),
    }
}

fn diode_markov(p: DiodeMarkovParams) -> CliResult<Plan> {
    let [gamma, gamma1, gamma2] = rates(p.gamma, p.gamma1, p.gamma2)?;
    let (pulse, window) = pulse(&p.pulse, &[gamma, gamma1, gamma2])?;
    let t_final = positive("params.t_final", "t_final", p.t_final.unwrap_or(window.t_final))?;
    let dt = markov_step(p.dt, gamma.max(gamma1).max(gamma2).max(pulse.bandwidth()))?;
    Ok(Plan::DiodeMarkov(DiodeMarkovPlan {
        gamma,
        gamma1,
        gamma2,
        pulse,
        t_final,
        dt,
    }))
}

fn reflection(p: ReflectionParams) -> CliResult<Plan> {
    let gamma2 = positive("params.gamma2", "gamma2", p.gamma2)?;
    let (pulse, window) = pulse(&p.pulse, &[gamma2])?;
    let t_final = positive("params.t_final", "t_final", p.t_final.unwrap_or(window.t_final))?;
    let grid = grid("params.n_q", p.n_q, p.delta_max, gamma2, t_final)?;
    project_pulse(&grid, &pulse).map_err(|e| CliError::at("params.pulse", e))?;
    let dt = diode_step(p.dt, grid.delta_max())?;
    Ok(Plan::Port2Reflection(ReflectionPlan {
        grid,
        pulse,
        t_final,
        dt,
    }))
}

fn impedance(p: ImpedanceParams) -> CliResult<Plan> {
    let gamma = positive("params.gamma", "gamma", p.gamma)?;
    let gamma2 = positive("params.gamma2", "gamma2", p.gamma2)?;
    if p.ratios.is_empty() {
        return Err(CliError::at("params.ratios", "at least one ratio is required"));
    }
    for (k, &r) in p.ratios.iter().enumerate() {
        positive(&format!("params.ratios[{k}]"), "ratio", r)?;
    }
    let slowest = p.ratios.iter().fold(1.0f64, |m, &r| m.min(r)) * gamma;
    let fastest = p.ratios.iter().fold(1.0f64, |m, &r| m.max(r)) * gamma;
    let (pulse, window) = pulse(&p.pulse, &[gamma, slowest, gamma2])?;
    let t_final = positive("params.t_final", "t_final", p.t_final.unwrap_or(window.t_final))?;
    let dt = markov_step(p.dt, fastest.max(gamma2).max(pulse.bandwidth()))?;
    Ok(Plan::ImpedanceScan(ImpedancePlan {
        gamma,
        gamma2,
        ratios: p.ratios,
        pulse,
        t_final,
        dt,
    }))
}
