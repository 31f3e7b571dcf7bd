//! Exact single-excitation dynamics against a discrete atomic reservoir.
//!
//! The reservoir consists of `f` spectral classes with effective detunings
//! `omega_l`, each coupled to the photon pair with the lumped strength
//! `g_c = eta sqrt(N)`. In the sector holding one photon in mode 1
//! (amplitude `c0`) or one photon in mode 2 plus one excitation in class `l`
//! (amplitude `c_l`), the interaction-picture equations are
//!
//! ```text
//! dc0/dt  = i g_c        sum_l exp(+i omega_l t) c_l
//! dc_l/dt = i conj(g_c)  exp(-i omega_l t) c0
//! ```
//!
//! Norm conservation follows from the pair being Hermitian conjugates:
//! `d|c0|^2/dt = -2 Im(g_c conj(c0) S)` and `d sum|c_l|^2/dt = +2 Im(g_c conj(c0) S)`
//! with `S = sum_l exp(i omega_l t) c_l`.
//!
//! Eliminating the `c_l` gives `dc0/dt = -int_0^t g(t - s) c0(s) ds` with the
//! response function `g(t) = |g_c|^2 sum_l exp(i omega_l t)`. For an
//! equidistant comb of half width `eps_max`, `g` approaches
//! `pi f |g_c|^2 / eps_max * delta(t)` and `|c0|^2` decays at
//! `rate = pi f |g_c|^2 / eps_max` until the comb recurs at `pi f / eps_max`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ode::{step_count, ComplexOde, Rk4};

/// Largest accepted `dt * eps_max` for exact evolution.
pub const MAX_STEP_FACTOR: f64 = 0.05;
/// Default `dt * eps_max`.
pub const DEFAULT_STEP_FACTOR: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub enum Spectrum {
    /// `omega_l = eps_max (2l - 1 - f) / f`, `l = 1..=f`.
    Equidistant,
    /// Equal-quantile samples of a Lorentzian with half width at half
    /// maximum `width`, truncated to `[-eps_max, eps_max]`.
    Lorentzian { center: f64, width: f64 },
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirSpec {
    classes: usize,
    eps_max: f64,
    coupling: Complex64,
    spectrum: Spectrum,
    frequencies: Vec<f64>,
}

impl ReservoirSpec {
    pub fn new(classes: usize, eps_max: f64, coupling: Complex64, spectrum: Spectrum) -> Result<Self> {
        if classes == 0 {
            return Err(Error::input("reservoir needs at least one spectral class"));
        }
        if !(eps_max > 0.0 && eps_max.is_finite()) {
            return Err(Error::input(format!("eps_max must be positive, got {eps_max}")));
        }
        if !(coupling.re.is_finite() && coupling.im.is_finite()) {
            return Err(Error::input("coupling must be finite"));
        }
        let frequencies = match &spectrum {
            Spectrum::Equidistant => (1..=classes)
                .map(|l| eps_max * (2.0 * l as f64 - 1.0 - classes as f64) / classes as f64)
                .collect(),
            &Spectrum::Lorentzian { center, width } => {
                if !(width > 0.0) {
                    return Err(Error::input(format!("Lorentzian width must be positive, got {width}")));
                }
                let lo = ((-eps_max - center) / width).atan();
                let hi = ((eps_max - center) / width).atan();
                (0..classes)
                    .map(|k| {
                        let u = (k as f64 + 0.5) / classes as f64;
                        center + width * (lo + u * (hi - lo)).tan()
                    })
                    .collect()
            }
            Spectrum::Custom(omegas) => {
                if omegas.len() != classes {
                    return Err(Error::input(format!(
                        "custom spectrum lists {} frequencies for {classes} classes",
                        omegas.len()
                    )));
                }
                if omegas.iter().any(|w| !w.is_finite()) {
                    return Err(Error::input("custom spectrum contains non-finite frequencies"));
                }
                omegas.clone()
            }
        };
        Ok(Self {
            classes,
            eps_max,
            coupling,
            spectrum,
            frequencies,
        })
    }

    /// Equidistant comb whose coupling is chosen so that [`markov_rate`]
    /// returns `rate`.
    pub fn equidistant_with_rate(classes: usize, eps_max: f64, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) {
            return Err(Error::input(format!("rate must be non-negative, got {rate}")));
        }
        let g = (rate * eps_max / (PI * classes as f64)).sqrt();
        Self::new(classes, eps_max, Complex64::new(g, 0.0), Spectrum::Equidistant)
    }

    pub fn with_coupling(&self, coupling: Complex64) -> Self {
        Self {
            coupling,
            ..self.clone()
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn eps_max(&self) -> f64 {
        self.eps_max
    }

    pub fn coupling(&self) -> Complex64 {
        self.coupling
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// Largest `|omega_l|`, or `eps_max` if that is larger.
    pub fn bandwidth(&self) -> f64 {
        self.frequencies
            .iter()
            .fold(self.eps_max, |acc, w| acc.max(w.abs()))
    }

    /// Comb recurrence time `pi f / eps_max` of the equidistant spectrum.
    pub fn recurrence_time(&self) -> Option<f64> {
        matches!(self.spectrum, Spectrum::Equidistant)
            .then(|| PI * self.classes as f64 / self.eps_max)
    }
}

/// `g(t) = |g_c|^2 sum_l exp(i omega_l t)`, summed directly.
pub fn response_function(spec: &ReservoirSpec, t: f64) -> Complex64 {
    let sum: Complex64 = spec
        .frequencies
        .iter()
        .map(|&w| Complex64::from_polar(1.0, w * t))
        .sum();
    sum * spec.coupling.norm_sqr()
}

/// Geometric-sum form of `g(t)` for the equidistant comb:
/// `|g_c|^2 sin(eps_max t) / sin(eps_max t / f)`.
pub fn response_function_equidistant(spec: &ReservoirSpec, t: f64) -> Result<f64> {
    if spec.spectrum != Spectrum::Equidistant {
        return Err(Error::Unsupported(
            "closed-form response needs an equidistant spectrum".into(),
        ));
    }
    let f = spec.classes as f64;
    let x = spec.eps_max * t / f;
    let k = (x / PI).round();
    let g2 = spec.coupling.norm_sqr();
    if (x - k * PI).abs() < 1e-9 {
        // Phases realign: every term equals (-1)^(k (f + 1)).
        let odd = ((k as i64) * (spec.classes as i64 + 1)).rem_euclid(2) == 1;
        Ok(g2 * f * if odd { -1.0 } else { 1.0 })
    } else {
        Ok(g2 * (f * x).sin() / x.sin())
    }
}

/// Decay rate `pi f |g_c|^2 / eps_max` of the delta-correlated limit.
pub fn markov_rate(spec: &ReservoirSpec) -> Result<f64> {
    if spec.spectrum != Spectrum::Equidistant {
        return Err(Error::Unsupported(
            "markov_rate is defined for the equidistant spectrum; fit an exact trajectory instead"
                .into(),
        ));
    }
    Ok(PI * spec.classes as f64 * spec.coupling.norm_sqr() / spec.eps_max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleExcitationState {
    pub c0: Complex64,
    pub c: Vec<Complex64>,
    pub t: f64,
}

impl SingleExcitationState {
    /// Photon in mode 1, reservoir empty.
    pub fn excited(classes: usize) -> Self {
        Self {
            c0: Complex64::new(1.0, 0.0),
            c: vec![Complex64::new(0.0, 0.0); classes],
            t: 0.0,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c0.norm_sqr() + self.c.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }
}

/// Two upper modes `1` and `1'` sharing the reservoir channel.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoUpperModeState {
    pub c0: Complex64,
    pub c0p: Complex64,
    pub c: Vec<Complex64>,
    pub t: f64,
}

impl TwoUpperModeState {
    /// `(c0, c0p)` normalized, reservoir empty.
    pub fn upper(classes: usize, c0: Complex64, c0p: Complex64) -> Result<Self> {
        let norm = (c0.norm_sqr() + c0p.norm_sqr()).sqrt();
        if norm == 0.0 {
            return Err(Error::input("upper-mode amplitudes are both zero"));
        }
        Ok(Self {
            c0: c0 / norm,
            c0p: c0p / norm,
            c: vec![Complex64::new(0.0, 0.0); classes],
            t: 0.0,
        })
    }

    /// `(|1,0> - |0,1>) / sqrt(2)`; decoupled from the reservoir.
    pub fn antisymmetric(classes: usize) -> Self {
        Self::upper(classes, Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)).unwrap()
    }

    /// `(|1,0> + |0,1>) / sqrt(2)`; couples with `sqrt(2) g_c`.
    pub fn symmetric(classes: usize) -> Self {
        Self::upper(classes, Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)).unwrap()
    }

    pub fn upper_population(&self) -> f64 {
        self.c0.norm_sqr() + self.c0p.norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.upper_population() + self.c.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }
}

/// Single-excitation equations with `upper` photon amplitudes at the front
/// of the state vector, each coupled to every reservoir class with `g_c`.
struct ExactSystem<'a> {
    upper: usize,
    frequencies: &'a [f64],
    coupling: Complex64,
}

impl ComplexOde for ExactSystem<'_> {
    fn derivative(&self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        let (up, res) = y.split_at(self.upper);
        let (dup, dres) = dy.split_at_mut(self.upper);
        let drive: Complex64 = up.iter().sum();
        let i = Complex64::new(0.0, 1.0);
        let feed = i * self.coupling.conj() * drive;
        let mut collected = Complex64::new(0.0, 0.0);
        for ((&w, &c), d) in self.frequencies.iter().zip(res).zip(dres.iter_mut()) {
            let phase = Complex64::from_polar(1.0, w * t);
            collected += phase * c;
            *d = phase.conj() * feed;
        }
        let back = i * self.coupling * collected;
        dup.iter_mut().for_each(|d| *d = back);
    }
}

#[derive(Debug, Clone)]
pub struct ExactTrajectory {
    pub times: Vec<f64>,
    /// Total population of the photon amplitudes (`|c0|^2`, or
    /// `|c0|^2 + |c0p|^2` for two upper modes).
    pub survival: Vec<f64>,
    /// Per-upper-mode populations, aligned with `times`.
    pub upper_populations: Vec<Vec<f64>>,
    /// Largest `|norm(t) - norm(0)|` seen at a stored sample.
    pub norm_drift: f64,
    /// Amplitudes at `t_final`: upper modes first, then the reservoir.
    pub final_amplitudes: Vec<Complex64>,
}

fn check_step(spec: &ReservoirSpec, t_final: f64, dt: f64) -> Result<()> {
    if !(t_final > 0.0) {
        return Err(Error::config(format!("t_final must be positive, got {t_final}")));
    }
    let limit = MAX_STEP_FACTOR / spec.bandwidth();
    if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
        return Err(Error::config(format!(
            "step dt = {dt} must lie in (0, {MAX_STEP_FACTOR} / eps_max = {limit}] to resolve the fastest reservoir phase"
        )));
    }
    Ok(())
}

fn integrate(
    spec: &ReservoirSpec,
    upper: usize,
    mut y: Vec<Complex64>,
    t0: f64,
    t_final: f64,
    dt: f64,
    stride: usize,
) -> Result<ExactTrajectory> {
    check_step(spec, t_final, dt)?;
    let system = ExactSystem {
        upper,
        frequencies: spec.frequencies(),
        coupling: spec.coupling,
    };
    let steps = step_count(t_final, dt);
    let h = t_final / steps as f64;
    let stride = stride.max(1);
    let norm_of = |y: &[Complex64]| y.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let norm0 = norm_of(&y);

    let mut times = vec![t0];
    let mut upper_populations: Vec<Vec<f64>> = (0..upper).map(|j| vec![y[j].norm_sqr()]).collect();
    let mut survival = vec![y[..upper].iter().map(|z| z.norm_sqr()).sum()];
    let mut norm_drift: f64 = 0.0;

    let mut rk = Rk4::new(y.len());
    for k in 0..steps {
        rk.step(&system, t0 + k as f64 * h, h, &mut y);
        let done = k + 1;
        if done % stride == 0 || done == steps {
            times.push(t0 + done as f64 * h);
            for j in 0..upper {
                upper_populations[j].push(y[j].norm_sqr());
            }
            survival.push(y[..upper].iter().map(|z| z.norm_sqr()).sum());
            norm_drift = norm_drift.max((norm_of(&y) - norm0).abs());
        }
    }
    Ok(ExactTrajectory {
        times,
        survival,
        upper_populations,
        norm_drift,
        final_amplitudes: y,
    })
}

/// Integrates the single-excitation equations for `t_final` starting at `state.t`.
pub fn evolve_exact(
    spec: &ReservoirSpec,
    state: &SingleExcitationState,
    t_final: f64,
    dt: f64,
    stride: usize,
) -> Result<ExactTrajectory> {
    if state.c.len() != spec.classes {
        return Err(Error::input("state and reservoir have different class counts"));
    }
    let mut y = Vec::with_capacity(spec.classes + 1);
    y.push(state.c0);
    y.extend_from_slice(&state.c);
    integrate(spec, 1, y, state.t, t_final, dt, stride)
}

/// Two upper modes both coupled to every class through `(a_1 + a_1')`.
pub fn interference_evolve(
    spec: &ReservoirSpec,
    state: &TwoUpperModeState,
    t_final: f64,
    dt: f64,
    stride: usize,
) -> Result<ExactTrajectory> {
    if state.c.len() != spec.classes {
        return Err(Error::input("state and reservoir have different class counts"));
    }
    let mut y = Vec::with_capacity(spec.classes + 2);
    y.push(state.c0);
    y.push(state.c0p);
    y.extend_from_slice(&state.c);
    integrate(spec, 2, y, state.t, t_final, dt, stride)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    /// `ln` of the fitted value at `t = 0`.
    pub log_intercept: f64,
    /// Largest `|fit - data| / data` over the window.
    pub max_relative_residual: f64,
    pub points: usize,
}

/// Least-squares fit of `ln y = log_intercept - rate * t` over `t in [t_a, t_b]`.
pub fn fit_decay_rate(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::input("times and values differ in length"));
    }
    let (ta, tb) = window;
    let points: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(&t, _)| t >= ta && t <= tb)
        .map(|(&t, &y)| (t, y))
        .collect();
    if points.len() < 2 {
        return Err(Error::input(format!(
            "window [{ta}, {tb}] holds {} samples; need at least 2",
            points.len()
        )));
    }
    if let Some((t, y)) = points.iter().find(|(_, y)| !(*y > 0.0)) {
        return Err(Error::input(format!(
            "survival {y} at t = {t} is not positive; cannot take its logarithm"
        )));
    }
    let n = points.len() as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_l = points.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut stt, mut stl) = (0.0, 0.0);
    for &(t, y) in &points {
        stt += (t - mean_t) * (t - mean_t);
        stl += (t - mean_t) * (y.ln() - mean_l);
    }
    if stt == 0.0 {
        return Err(Error::input("window samples share a single time"));
    }
    let slope = stl / stt;
    let log_intercept = mean_l - slope * mean_t;
    let max_relative_residual = points
        .iter()
        .map(|&(t, y)| ((log_intercept + slope * t).exp() - y).abs() / y)
        .fold(0.0, f64::max);
    Ok(DecayFit {
        rate: -slope,
        log_intercept,
        max_relative_residual,
        points: points.len(),
    })
}

#[derive(Debug, Clone)]
pub struct ZenoResult {
    pub period: f64,
    /// Measurement times, starting with `t = 0`.
    pub times: Vec<f64>,
    /// Cumulative probability that every measurement found the reservoir empty.
    pub survival: Vec<f64>,
    pub fit: DecayFit,
    pub norm_drift: f64,
}

impl ZenoResult {
    pub fn effective_rate(&self) -> f64 {
        self.fit.rate
    }
}

/// Repeated projective measurement of the reservoir every `period`.
///
/// Between measurements the state evolves exactly. Each measurement keeps
/// the outcome "reservoir empty": the cumulative survival is multiplied by
/// `|c0|^2 / norm`, all `c_l` are reset to zero and `c0` is renormalized.
/// The effective rate is fitted to the survival at the measurement times.
pub fn zeno_evolve(
    spec: &ReservoirSpec,
    state: &SingleExcitationState,
    t_final: f64,
    period: f64,
    dt: f64,
) -> Result<ZenoResult> {
    if !(period >= dt && period > 0.0) {
        return Err(Error::config(format!(
            "measurement period {period} must be at least the step {dt}"
        )));
    }
    let measurements = (t_final / period + 1e-9).floor() as usize;
    if measurements == 0 {
        return Err(Error::config(format!(
            "t_final = {t_final} is shorter than one measurement period {period}"
        )));
    }
    let mut current = SingleExcitationState {
        c0: state.c0 / state.norm_sqr().sqrt(),
        c: vec![Complex64::new(0.0, 0.0); spec.classes],
        t: 0.0,
    };
    let mut times = vec![0.0];
    let mut survival = vec![1.0];
    let mut cumulative = 1.0;
    let mut norm_drift: f64 = 0.0;
    for k in 0..measurements {
        current.t = k as f64 * period;
        let traj = evolve_exact(spec, &current, period, dt, usize::MAX)?;
        norm_drift = norm_drift.max(traj.norm_drift);
        let amps = &traj.final_amplitudes;
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        let p_empty = amps[0].norm_sqr() / norm;
        cumulative *= p_empty;
        times.push((k + 1) as f64 * period);
        survival.push(cumulative);
        if amps[0].norm() == 0.0 {
            break;
        }
        current.c0 = amps[0] / amps[0].norm();
    }
    let fit = fit_decay_rate(&times, &survival, (0.0, f64::INFINITY))?;
    Ok(ZenoResult {
        period,
        times,
        survival,
        fit,
        norm_drift,
    })
}

/// Runs [`zeno_evolve`] for each period, in order.
pub fn zeno_scan(
    spec: &ReservoirSpec,
    state: &SingleExcitationState,
    t_final: f64,
    periods: &[f64],
    dt: f64,
) -> Result<Vec<ZenoResult>> {
    periods
        .iter()
        .map(|&p| zeno_evolve(spec, state, t_final, p, dt.min(p)))
        .collect()
}

/// Rate fitted to unmeasured exact decay of `|c0|^2` over `window`.
pub fn free_decay_rate(
    spec: &ReservoirSpec,
    t_final: f64,
    dt: f64,
    window: (f64, f64),
) -> Result<DecayFit> {
    let traj = evolve_exact(spec, &SingleExcitationState::excited(spec.classes), t_final, dt, 1)?;
    fit_decay_rate(&traj.times, &traj.survival, window)
}
