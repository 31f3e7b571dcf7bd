//! Executes a validated scenario in memory.

use lambda_transfer::diode::{
    cavity_group_delay, evolve_full, evolve_markov, leakage_minimum, min_class_overlap,
    port1_output, port2_output_decomposition, reflect_port2, ImpedanceRow,
};
use lambda_transfer::fock::DensityMatrix;
use lambda_transfer::lindblad::{evolve, EvolutionResult};
use lambda_transfer::reservoir::{
    evolve_exact, fit_decay_rate, free_decay_rate, interference_evolve, markov_rate, zeno_scan,
    ReservoirSpec, SingleExcitationState,
};
use lambda_transfer::transfer_map::purification_predicate;

use crate::error::{CliError, CliResult};
use crate::scenario::{Kind, Plan, Scenario};

const TRACE_DRIFT_LIMIT: f64 = 1e-8;
const POSITIVITY_LIMIT: f64 = -1e-8;
const HERMITICITY_LIMIT: f64 = 1e-10;
const NORM_DRIFT_PER_TIME: f64 = 1e-8;
const ENERGY_BALANCE_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(file: &str, columns: &[&str]) -> Self {
        Self {
            file: file.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn from_columns(file: &str, columns: Vec<(String, Vec<f64>)>) -> Self {
        let len = columns.first().map_or(0, |c| c.1.len());
        Self {
            file: file.into(),
            rows: (0..len).map(|i| columns.iter().map(|c| c.1[i]).collect()).collect(),
            columns: columns.into_iter().map(|c| c.0).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Invariant {
    pub name: &'static str,
    pub value: f64,
    pub bound: Bound,
    pub limit: f64,
}

impl Invariant {
    fn at_most(name: &'static str, value: f64, limit: f64) -> Self {
        Self { name, value, bound: Bound::AtMost, limit }
    }

    fn at_least(name: &'static str, value: f64, limit: f64) -> Self {
        Self { name, value, bound: Bound::AtLeast, limit }
    }

    pub fn pass(&self) -> bool {
        match self.bound {
            Bound::AtMost => self.value <= self.limit,
            Bound::AtLeast => self.value >= self.limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    /// Scalar results in the fixed order of [`summary_columns`].
    pub summary: Vec<f64>,
    pub derived: Vec<(&'static str, f64)>,
    pub invariants: Vec<Invariant>,
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        self.invariants.iter().all(Invariant::pass)
    }
}

/// Scalar summary columns per kind. Scans emit exactly these after the axis.
pub fn summary_columns(kind: Kind) -> &'static [&'static str] {
    match kind {
        Kind::LindbladTransfer => &["pop_mode1_final", "pop_mode2_final", "purity_final", "trace_drift", "min_eigenvalue"],
        Kind::PurificationMap => &["pure", "purity_map", "purity_evolved", "trace_distance_evolved_map", "witness_residual"],
        Kind::DarkState => &["fidelity_min", "fidelity_final", "upper_population_final"],
        Kind::MicroscopicDecay => &["gamma_est", "markov_rate", "gamma_est_over_markov_rate", "fit_max_relative_residual", "norm_drift"],
        Kind::ZenoScan => &["gamma_free", "markov_rate", "gamma_eff_min", "gamma_eff_max", "monotone"],
        Kind::AntiZenoScan => &["gamma_free", "markov_rate", "gamma_eff_max", "enhancement"],
        Kind::InterferenceExact => &["upper_population_final", "decay_rate", "markov_rate", "norm_drift"],
        Kind::DiodeFull => &["leakage", "port2_yield", "cavity_final", "atomic_final", "norm_drift", "port2_output_energy", "min_class_overlap"],
        Kind::DiodeMarkov => &["leakage", "port2_yield", "port2_factorized_yield", "input_energy", "energy_balance"],
        Kind::Port2Reflection => &["output_norm", "delay", "cavity_group_delay", "cavity_population_final", "port1_population", "norm_drift"],
        Kind::ImpedanceScan => &["leakage_minimum_ratio", "leakage_min", "port2_yield_at_minimum"],
    }
}

fn core(context: &str) -> impl Fn(lambda_transfer::Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{context}: {e}"))
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn lindblad_series(res: &EvolutionResult, extra: Option<(&str, Vec<f64>)>) -> Table {
    let mut columns = vec![("t".to_string(), res.times.clone())];
    columns.extend(extra.map(|(n, v)| (n.to_string(), v)));
    columns.extend(res.observables.iter().cloned());
    Table::from_columns("timeseries.csv", columns)
}

fn lindblad_invariants(res: &EvolutionResult) -> Vec<Invariant> {
    vec![
        Invariant::at_most("trace_drift", res.trace_drift, TRACE_DRIFT_LIMIT),
        Invariant::at_least("min_eigenvalue", res.min_eigenvalue(), POSITIVITY_LIMIT),
        Invariant::at_most("hermiticity_error", res.max_hermiticity_error(), HERMITICITY_LIMIT),
    ]
}

fn norm_invariant(drift: f64, t_final: f64) -> Invariant {
    Invariant::at_most("norm_drift", drift, NORM_DRIFT_PER_TIME * t_final.max(1.0))
}

/// The flat-spectrum Markov rate, NaN for other spectra.
fn markov_or_nan(spec: &ReservoirSpec) -> f64 {
    markov_rate(spec).unwrap_or(f64::NAN)
}

fn reservoir_derived(spec: &ReservoirSpec, dt: f64) -> CliResult<Vec<(&'static str, f64)>> {
    let mut d = vec![
        ("markov_rate", markov_or_nan(spec)),
        ("coupling_re", spec.coupling().re),
        ("coupling_im", spec.coupling().im),
        ("dt", dt),
    ];
    if let Some(t) = spec.recurrence_time() {
        d.push(("recurrence_time", t));
    }
    d.push(("bandwidth", spec.bandwidth()));
    Ok(d)
}

fn every(stride: usize, len: usize) -> impl Iterator<Item = usize> {
    (0..len).filter(move |&i| i % stride == 0 || i + 1 == len)
}

pub fn execute(scenario: &Scenario) -> CliResult<RunOutput> {
    let stride = scenario.outputs.stride;
    let out = match &scenario.plan {
        Plan::LindbladTransfer(p) => {
            let res = evolve(&p.model, &p.rho0, p.t_final, p.dt, stride).map_err(core("evolve"))?;
            let last = |name| res.observable(name).and_then(|v| v.last().copied()).unwrap_or(f64::NAN);
            RunOutput {
                tables: vec![lindblad_series(&res, None)],
                summary: vec![
                    last("pop_mode1"),
                    last("pop_mode2"),
                    last("purity"),
                    res.trace_drift,
                    res.min_eigenvalue(),
                ],
                derived: vec![
                    ("dt", p.dt),
                    ("max_stable_step", p.model.max_stable_step()),
                    ("max_photon_number", p.model.space().max_photon_number() as f64),
                ],
                invariants: lindblad_invariants(&res),
            }
        }
        Plan::PurificationMap(p) => {
            let outcome = purification_predicate(&p.rho0).map_err(core("closed-form map"))?;
            let res = evolve(&p.model, &p.rho0, p.t_final, p.dt, stride).map_err(core("evolve"))?;
            let evolved: &DensityMatrix = res.final_state();
            let distance = evolved
                .trace_distance(&outcome.final_state)
                .map_err(core("closed-form map"))?;
            let d2 = p.model.space().dims()[1];
            let reduced = evolved.partial_trace(&[1]).map_err(core("partial trace"))?;
            let mut populations = Table::new("mode2_populations.csv", &["m", "population_map", "population_evolved"]);
            for m in 0..d2 {
                populations.rows.push(vec![
                    m as f64,
                    outcome.final_state.population(&[0, m]),
                    reduced.get(m, m).re,
                ]);
            }
            let mut tables = vec![lindblad_series(&res, None), populations];
            if let Some(w) = &outcome.witness {
                let mut t = Table::new("witness.csv", &["m", "re", "im"]);
                t.rows = w.iter().enumerate().map(|(m, z)| vec![m as f64, z.re, z.im]).collect();
                tables.push(t);
            }
            RunOutput {
                tables,
                summary: vec![
                    flag(outcome.pure),
                    outcome.purity,
                    evolved.purity(),
                    distance,
                    outcome.witness_residual.unwrap_or(f64::NAN),
                ],
                derived: vec![("dt", p.dt), ("purity_threshold", lambda_transfer::transfer_map::PURITY_THRESHOLD)],
                invariants: lindblad_invariants(&res),
            }
        }
        Plan::DarkState(p) => {
            let rho0 = DensityMatrix::from_pure(&p.psi);
            let res = evolve(&p.model, &rho0, p.t_final, p.dt, stride).map_err(core("evolve"))?;
            let fidelity = res
                .states
                .iter()
                .map(|r| r.fidelity_with(&p.psi))
                .collect::<Result<Vec<_>, _>>()
                .map_err(core("fidelity"))?;
            let last = |name| res.observable(name).and_then(|v| v.last().copied()).unwrap_or(f64::NAN);
            let summary = vec![
                fidelity.iter().copied().fold(f64::INFINITY, f64::min),
                *fidelity.last().unwrap(),
                last("pop_mode1") + last("pop_mode2"),
            ];
            RunOutput {
                tables: vec![lindblad_series(&res, Some(("fidelity", fidelity)))],
                summary,
                derived: vec![("dt", p.dt), ("max_stable_step", p.model.max_stable_step())],
                invariants: lindblad_invariants(&res),
            }
        }
        Plan::MicroscopicDecay(p) => {
            let classes = p.spec.classes();
            let traj = evolve_exact(&p.spec, &SingleExcitationState::excited(classes), p.t_final, p.dt, stride)
                .map_err(core("exact evolution"))?;
            let fit = fit_decay_rate(&traj.times, &traj.survival, p.window).map_err(core("params.fit_window"))?;
            let gamma = markov_or_nan(&p.spec);
            let markov: Vec<f64> = traj.times.iter().map(|t| (-gamma * t).exp()).collect();
            RunOutput {
                tables: vec![Table::from_columns(
                    "timeseries.csv",
                    vec![
                        ("t".into(), traj.times.clone()),
                        ("survival".into(), traj.survival.clone()),
                        ("markov_survival".into(), markov),
                    ],
                )],
                summary: vec![fit.rate, gamma, fit.rate / gamma, fit.max_relative_residual, traj.norm_drift],
                derived: reservoir_derived(&p.spec, p.dt)?,
                invariants: vec![norm_invariant(traj.norm_drift, p.t_final)],
            }
        }
        Plan::ZenoScan(p) | Plan::AntiZenoScan(p) => {
            let anti = matches!(scenario.plan, Plan::AntiZenoScan(_));
            let free = free_decay_rate(&p.spec, p.free_t_final, p.dt, p.free_window).map_err(core("free decay"))?;
            let state = SingleExcitationState::excited(p.spec.classes());
            let scan = zeno_scan(&p.spec, &state, p.t_final, &p.periods, p.dt).map_err(core("measurement scan"))?;
            let mut table = Table::new(
                "summary.csv",
                &["tau", "gamma_eff", "fit_max_relative_residual", "survival_final", "measurements"],
            );
            for z in &scan {
                table.rows.push(vec![
                    z.period,
                    z.effective_rate(),
                    z.fit.max_relative_residual,
                    *z.survival.last().unwrap(),
                    (z.times.len() - 1) as f64,
                ]);
            }
            let rates: Vec<f64> = scan.iter().map(|z| z.effective_rate()).collect();
            let max = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = rates.iter().copied().fold(f64::INFINITY, f64::min);
            let gamma = markov_or_nan(&p.spec);
            // Shorter periods must never decay faster.
            let mut by_period: Vec<(f64, f64)> = p.periods.iter().copied().zip(rates.iter().copied()).collect();
            by_period.sort_by(|a, b| a.0.total_cmp(&b.0));
            let monotone = by_period.windows(2).all(|w| w[0].1 <= w[1].1);
            let drift = scan.iter().map(|z| z.norm_drift).fold(0.0, f64::max);
            let summary = if anti {
                vec![free.rate, gamma, max, max / free.rate]
            } else {
                vec![free.rate, gamma, min, max, flag(monotone)]
            };
            RunOutput {
                tables: vec![table],
                summary,
                derived: reservoir_derived(&p.spec, p.dt)?,
                invariants: vec![norm_invariant(drift, p.t_final)],
            }
        }
        Plan::InterferenceExact(p) => {
            let traj = interference_evolve(&p.spec, &p.state, p.t_final, p.dt, stride).map_err(core("exact evolution"))?;
            let fit = fit_decay_rate(&traj.times, &traj.survival, p.window).map_err(core("params.fit_window"))?;
            let gamma = markov_or_nan(&p.spec);
            RunOutput {
                tables: vec![Table::from_columns(
                    "timeseries.csv",
                    vec![
                        ("t".into(), traj.times.clone()),
                        ("upper_population".into(), traj.survival.clone()),
                        ("pop_mode1".into(), traj.upper_populations[0].clone()),
                        ("pop_mode1p".into(), traj.upper_populations[1].clone()),
                    ],
                )],
                summary: vec![*traj.survival.last().unwrap(), fit.rate, gamma, traj.norm_drift],
                derived: reservoir_derived(&p.spec, p.dt)?,
                invariants: vec![norm_invariant(traj.norm_drift, p.t_final)],
            }
        }
        Plan::DiodeFull(p) => {
            let traj = evolve_full(&p.port1, &p.port2, &p.spec, &p.p0, p.t_final, p.dt, stride)
                .map_err(core("diode evolution"))?;
            let series = Table::from_columns(
                "timeseries.csv",
                vec![
                    ("t".into(), traj.times.clone()),
                    ("port1".into(), traj.port1.clone()),
                    ("cavity".into(), traj.cavity.clone()),
                    ("atomic".into(), traj.atomic.clone()),
                    ("port2".into(), traj.port2.clone()),
                ],
            );
            let field1 = port1_output(&traj, &p.port1, &traj.times);
            let port1_table = Table::from_columns(
                "port1_output.csv",
                vec![
                    ("t".into(), traj.times.clone()),
                    ("re".into(), field1.iter().map(|z| z.re).collect()),
                    ("im".into(), field1.iter().map(|z| z.im).collect()),
                ],
            );
            let (times, h) = p.port2.period_samples(p.t_final, 2 * p.port2.n_q());
            let out2 = port2_output_decomposition(&traj, &p.port2, &times);
            let energy = out2.rho_out.iter().sum::<f64>() * h;
            let overlap = min_class_overlap(&out2, p.spec.frequencies());
            let port2_table = Table::from_columns(
                "port2_output.csv",
                vec![("t".into(), out2.times.clone()), ("rho_out".into(), out2.rho_out.clone())],
            );
            let end = &traj.final_state;
            RunOutput {
                tables: vec![series, port1_table, port2_table],
                summary: vec![
                    end.port1_population(),
                    end.port2_population(),
                    end.cavity_population(),
                    end.atomic_population(),
                    traj.norm_drift,
                    energy,
                    overlap,
                ],
                derived: vec![
                    ("gamma", p.gamma),
                    ("coupling", p.spec.coupling().norm()),
                    ("kappa1", p.port1.kappa()),
                    ("kappa2", p.port2.kappa()),
                    ("port1_recurrence_time", p.port1.recurrence_time()),
                    ("port2_recurrence_time", p.port2.recurrence_time()),
                    ("pulse_bandwidth", p.pulse.bandwidth()),
                    ("t_final", p.t_final),
                    ("dt", p.dt),
                ],
                invariants: vec![Invariant::at_most("norm_drift", traj.norm_drift, TRACE_DRIFT_LIMIT)],
            }
        }
        Plan::DiodeMarkov(p) => {
            let tr = evolve_markov(p.gamma, p.gamma1, p.gamma2, &p.pulse, p.t_final, p.dt)
                .map_err(core("Markov evolution"))?;
            let mut table = Table::new(
                "timeseries.csv",
                &["t", "input", "cavity", "port1_output", "rho_out", "port2_output"],
            );
            for i in every(stride, tr.times.len()) {
                table.rows.push(vec![
                    tr.times[i],
                    tr.phi_in[i].norm_sqr(),
                    tr.cavity_amplitude[i].norm_sqr(),
                    tr.port1_output[i].norm_sqr(),
                    tr.rho_out[i],
                    tr.port2_output[i].norm_sqr(),
                ]);
            }
            let balance = tr.energy_balance();
            RunOutput {
                tables: vec![table],
                summary: vec![tr.leakage, tr.port2_yield, tr.port2_factorized_yield, tr.input_energy, balance],
                derived: vec![("t_final", p.t_final), ("dt", p.dt)],
                invariants: vec![Invariant::at_most("energy_balance", balance.abs(), ENERGY_BALANCE_LIMIT)],
            }
        }
        Plan::Port2Reflection(p) => {
            let r = reflect_port2(&p.grid, &p.pulse, p.t_final, p.dt).map_err(core("reflection"))?;
            let table = Table::from_columns(
                "timeseries.csv",
                vec![
                    ("t".into(), r.times.clone()),
                    ("input".into(), r.input.iter().map(|z| z.norm_sqr()).collect()),
                    ("output".into(), r.output.iter().map(|z| z.norm_sqr()).collect()),
                ],
            );
            let gamma2 = p.grid.loss_rate();
            RunOutput {
                tables: vec![table],
                summary: vec![
                    r.output_norm,
                    r.delay,
                    cavity_group_delay(gamma2, p.pulse.carrier()),
                    r.cavity_population,
                    r.port1_population,
                    r.norm_drift,
                ],
                derived: vec![("kappa2", p.grid.kappa()), ("t_final", p.t_final), ("dt", p.dt)],
                invariants: vec![
                    Invariant::at_most("norm_drift", r.norm_drift, TRACE_DRIFT_LIMIT),
                    Invariant::at_most("port1_population", r.port1_population, 0.0),
                ],
            }
        }
        Plan::ImpedanceScan(p) => {
            let mut rows = Vec::with_capacity(p.ratios.len());
            let mut worst: f64 = 0.0;
            for &ratio in &p.ratios {
                let tr = evolve_markov(p.gamma, ratio * p.gamma, p.gamma2, &p.pulse, p.t_final, p.dt)
                    .map_err(core("Markov evolution"))?;
                worst = worst.max(tr.energy_balance().abs());
                rows.push(ImpedanceRow {
                    ratio,
                    leakage: tr.leakage,
                    port2_yield: tr.port2_yield,
                });
            }
            let mut table = Table::new("summary.csv", &["ratio", "leakage", "port2_yield"]);
            table.rows = rows.iter().map(|r| vec![r.ratio, r.leakage, r.port2_yield]).collect();
            let best = leakage_minimum(&rows)
                .and_then(|x| rows.iter().find(|r| r.ratio == x))
                .copied();
            RunOutput {
                tables: vec![table],
                summary: match best {
                    Some(r) => vec![r.ratio, r.leakage, r.port2_yield],
                    None => vec![f64::NAN; 3],
                },
                derived: vec![("t_final", p.t_final), ("dt", p.dt)],
                invariants: vec![Invariant::at_most("energy_balance", worst, ENERGY_BALANCE_LIMIT)],
            }
        }
    };
    debug_assert_eq!(out.summary.len(), summary_columns(scenario.kind).len());
    Ok(out)
}
