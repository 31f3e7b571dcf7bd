//! Single-excitation scattering through both cavities with discretized ports.
//!
//! Amplitudes: `P_q` (photon in port-1 mode `q`), `Q` (photon in cavity 1),
//! `R_l` (photon in cavity 2, atomic excitation in class `l`) and `S_lq`
//! (photon in port-2 mode `q`, atomic excitation in class `l`):
//!
//! ```text
//! dP_q/dt  = -i Delta1_q P_q - i kappa1 Q
//! dQ/dt    = -i kappa1 sum_q P_q + i g_c sum_l exp(+i omega_l t) R_l
//! dR_l/dt  = i conj(g_c) exp(-i omega_l t) Q - i kappa2 sum_q S_lq
//! dS_lq/dt = -i Delta2_q S_lq - i kappa2 R_l
//! ```
//!
//! Output fields are resynthesized at the cavity mirror from the free-field
//! amplitudes left in each comb at the end of the run.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::grid::ContinuumGrid;
use crate::error::{Error, Result};
use crate::ode::{step_count, ComplexOde, Rk4};
use crate::reservoir::ReservoirSpec;

/// Minimum number of steps per period of the fastest free oscillation.
pub const STEPS_PER_PERIOD: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DiodeState {
    pub p: Vec<Complex64>,
    pub q: Complex64,
    pub r: Vec<Complex64>,
    /// Row-major `classes x n_q`.
    pub s: Vec<Complex64>,
    pub t: f64,
}

impl DiodeState {
    pub fn port1_population(&self) -> f64 {
        self.p.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn cavity_population(&self) -> f64 {
        self.q.norm_sqr()
    }

    pub fn atomic_population(&self) -> f64 {
        self.r.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn port2_population(&self) -> f64 {
        self.s.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.port1_population()
            + self.cavity_population()
            + self.atomic_population()
            + self.port2_population()
    }
}

struct DiodeSystem<'a> {
    d1: &'a [f64],
    d2: &'a [f64],
    kappa1: f64,
    kappa2: f64,
    coupling: Complex64,
    omegas: &'a [f64],
}

impl ComplexOde for DiodeSystem<'_> {
    fn derivative(&self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        let n1 = self.d1.len();
        let n2 = self.d2.len();
        let f = self.omegas.len();
        let (p, rest) = y.split_at(n1);
        let (q, rest) = rest.split_at(1);
        let (r, s) = rest.split_at(f);
        let q = q[0];
        let (dp, drest) = dy.split_at_mut(n1);
        let (dq, drest) = drest.split_at_mut(1);
        let (dr, ds) = drest.split_at_mut(f);
        let mi = Complex64::new(0.0, -1.0);

        let mut sum_p = Complex64::new(0.0, 0.0);
        for ((&d, &a), da) in self.d1.iter().zip(p).zip(dp.iter_mut()) {
            sum_p += a;
            *da = mi * (a * d + q * self.kappa1);
        }

        let feed = Complex64::new(0.0, 1.0) * self.coupling.conj() * q;
        let mut collected = Complex64::new(0.0, 0.0);
        for l in 0..f {
            let phase = Complex64::from_polar(1.0, self.omegas[l] * t);
            let rl = r[l];
            collected += phase * rl;
            let row = &s[l * n2..(l + 1) * n2];
            let drow = &mut ds[l * n2..(l + 1) * n2];
            let mut sum_s = Complex64::new(0.0, 0.0);
            let source = rl * self.kappa2;
            for ((&d, &a), da) in self.d2.iter().zip(row).zip(drow.iter_mut()) {
                sum_s += a;
                *da = mi * (a * d + source);
            }
            dr[l] = phase.conj() * feed + mi * self.kappa2 * sum_s;
        }
        dq[0] = mi * self.kappa1 * sum_p + Complex64::new(0.0, 1.0) * self.coupling * collected;
    }
}

#[derive(Debug, Clone)]
pub struct FullTrajectory {
    pub times: Vec<f64>,
    pub cavity_amplitude: Vec<Complex64>,
    pub cavity: Vec<f64>,
    pub atomic: Vec<f64>,
    pub port1: Vec<f64>,
    pub port2: Vec<f64>,
    pub norm_drift: f64,
    pub final_state: DiodeState,
}

fn max_step(port1: &ContinuumGrid, port2: &ContinuumGrid, spec: &ReservoirSpec) -> f64 {
    let fastest = port1
        .delta_max()
        .max(port2.delta_max())
        .max(spec.bandwidth());
    2.0 * PI / (STEPS_PER_PERIOD * fastest)
}

/// Integrates the diode from a port-1 wavepacket with both cavities and the
/// atoms empty.
pub fn evolve_full(
    port1: &ContinuumGrid,
    port2: &ContinuumGrid,
    spec: &ReservoirSpec,
    p0: &[Complex64],
    t_final: f64,
    dt: f64,
    stride: usize,
) -> Result<FullTrajectory> {
    if p0.len() != port1.n_q() {
        return Err(Error::input(format!(
            "initial port-1 amplitudes have length {} but the grid has {} modes",
            p0.len(),
            port1.n_q()
        )));
    }
    if !(t_final > 0.0) {
        return Err(Error::config(format!("t_final must be positive, got {t_final}")));
    }
    let limit = max_step(port1, port2, spec);
    if !(dt > 0.0 && dt <= limit) {
        return Err(Error::config(format!(
            "step dt = {dt} must lie in (0, {limit}] for {STEPS_PER_PERIOD} steps per fastest period"
        )));
    }
    for (name, grid) in [("port 1", port1), ("port 2", port2)] {
        if grid.recurrence_time() <= t_final {
            return Err(Error::config(format!(
                "{name} comb recurs after {} which does not exceed t_final = {t_final}; refine the grid spacing",
                grid.recurrence_time()
            )));
        }
    }

    let (n1, n2, f) = (port1.n_q(), port2.n_q(), spec.classes());
    let system = DiodeSystem {
        d1: port1.detunings(),
        d2: port2.detunings(),
        kappa1: port1.kappa(),
        kappa2: port2.kappa(),
        coupling: spec.coupling(),
        omegas: spec.frequencies(),
    };
    let zero = Complex64::new(0.0, 0.0);
    let mut y = Vec::with_capacity(n1 + 1 + f + f * n2);
    y.extend_from_slice(p0);
    y.resize(n1 + 1 + f + f * n2, zero);

    let steps = step_count(t_final, dt);
    let h = t_final / steps as f64;
    let stride = stride.max(1);
    let populations = |y: &[Complex64]| {
        let sq = |s: &[Complex64]| s.iter().map(|z| z.norm_sqr()).sum::<f64>();
        (
            sq(&y[..n1]),
            y[n1],
            sq(&y[n1 + 1..n1 + 1 + f]),
            sq(&y[n1 + 1 + f..]),
        )
    };

    let mut traj = FullTrajectory {
        times: Vec::new(),
        cavity_amplitude: Vec::new(),
        cavity: Vec::new(),
        atomic: Vec::new(),
        port1: Vec::new(),
        port2: Vec::new(),
        norm_drift: 0.0,
        final_state: DiodeState {
            p: Vec::new(),
            q: zero,
            r: Vec::new(),
            s: Vec::new(),
            t: 0.0,
        },
    };
    let push = |traj: &mut FullTrajectory, t: f64, y: &[Complex64]| {
        let (p1, q, a, p2) = populations(y);
        traj.times.push(t);
        traj.cavity_amplitude.push(q);
        traj.cavity.push(q.norm_sqr());
        traj.atomic.push(a);
        traj.port1.push(p1);
        traj.port2.push(p2);
        p1 + q.norm_sqr() + a + p2
    };
    let norm0 = push(&mut traj, 0.0, &y);

    let mut rk = Rk4::new(y.len());
    for k in 0..steps {
        rk.step(&system, k as f64 * h, h, &mut y);
        let done = k + 1;
        if done % stride == 0 || done == steps {
            let norm = push(&mut traj, done as f64 * h, &y);
            traj.norm_drift = traj.norm_drift.max((norm - norm0).abs());
        }
    }
    traj.final_state = DiodeState {
        p: y[..n1].to_vec(),
        q: y[n1],
        r: y[n1 + 1..n1 + 1 + f].to_vec(),
        s: y[n1 + 1 + f..].to_vec(),
        t: t_final,
    };
    Ok(traj)
}

/// Port-1 output field `Phi_out^1(t)` at the mirror, from the final port-1 amplitudes.
pub fn port1_output(traj: &FullTrajectory, port1: &ContinuumGrid, times: &[f64]) -> Vec<Complex64> {
    let st = &traj.final_state;
    port1.fields_at(&st.p, 1, st.t, times).pop().unwrap()
}

#[derive(Debug, Clone)]
pub struct Port2Output {
    pub times: Vec<f64>,
    /// `Phi_out^{2,l}(t)` for each class `l`, aligned with `times`.
    pub per_class: Vec<Vec<Complex64>>,
    /// `sum_l |Phi_out^{2,l}(t)|^2`.
    pub rho_out: Vec<f64>,
}

/// Resynthesizes the per-class port-2 output fields at `times` from the
/// final port-2 amplitudes.
pub fn port2_output_decomposition(
    traj: &FullTrajectory,
    port2: &ContinuumGrid,
    times: &[f64],
) -> Port2Output {
    let st = &traj.final_state;
    let classes = st.r.len();
    let per_class = port2.fields_at(&st.s, classes, st.t, times);
    let rho_out = (0..times.len())
        .map(|k| per_class.iter().map(|row| row[k].norm_sqr()).sum())
        .collect();
    Port2Output {
        times: times.to_vec(),
        per_class,
        rho_out,
    }
}

/// `sum_l int |Phi_out^{2,l}|^2 dt` over one full comb period ending at the
/// final time, evaluated on `2 n_q` samples.
pub fn port2_output_energy(traj: &FullTrajectory, port2: &ContinuumGrid) -> f64 {
    let (times, h) = port2.period_samples(traj.final_state.t, 2 * port2.n_q());
    let out = port2_output_decomposition(traj, port2, &times);
    out.rho_out.iter().sum::<f64>() * h
}

/// Smallest normalized overlap `|<u_l|u_m>| / (|u_l| |u_m|)` between the
/// per-class output modes after removing each class carrier,
/// `u_l(t) = exp(i omega_l t) Phi_out^{2,l}(t)`.
pub fn min_class_overlap(output: &Port2Output, frequencies: &[f64]) -> f64 {
    let modes: Vec<Vec<Complex64>> = output
        .per_class
        .iter()
        .zip(frequencies)
        .map(|(row, &w)| {
            let v: Vec<Complex64> = row
                .iter()
                .zip(&output.times)
                .map(|(z, &t)| z * Complex64::from_polar(1.0, w * t))
                .collect();
            let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.into_iter().map(|z| z / n).collect()
        })
        .collect();
    let mut worst: f64 = 1.0;
    for a in 0..modes.len() {
        for b in a + 1..modes.len() {
            let ov: Complex64 = modes[a]
                .iter()
                .zip(&modes[b])
                .map(|(x, y)| x.conj() * y)
                .sum();
            worst = worst.min(ov.norm());
        }
    }
    worst
}
