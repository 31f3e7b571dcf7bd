//! Port-2 input on an empty cavity.
//!
//! With the atoms in their initial ground state both atom-cavity terms
//! annihilate the state, so a photon arriving through port 2 only sees cavity
//! mode 2 and its own continuum:
//! `dS_q/dt = -i Delta_q S_q - i kappa2 R`, `dR/dt = -i kappa2 sum_q S_q`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::full::STEPS_PER_PERIOD;
use super::grid::ContinuumGrid;
use super::pulse::{project_pulse, PulseShape};
use crate::error::{Error, Result};
use crate::ode::{step_count, Rk4};

#[derive(Debug, Clone)]
pub struct Reflection {
    pub times: Vec<f64>,
    pub input: Vec<Complex64>,
    pub output: Vec<Complex64>,
    /// `sum_q |S_q|^2` at the final time.
    pub output_norm: f64,
    /// Cavity population left at the final time.
    pub cavity_population: f64,
    pub norm_drift: f64,
    /// Intensity-centroid shift of the output relative to free propagation.
    pub delay: f64,
    /// Port-1 population. No amplitude couples into this sector, so it
    /// stays exactly zero.
    pub port1_population: f64,
}

/// Group delay `d arg r / d Delta` of a one-sided cavity with loss rate
/// `gamma`, where `r(Delta) = (i Delta + gamma / 2) / (i Delta - gamma / 2)`.
pub fn cavity_group_delay(gamma: f64, detuning: f64) -> f64 {
    gamma / (0.25 * gamma * gamma + detuning * detuning)
}

fn centroid(times: &[f64], field: &[Complex64]) -> f64 {
    let (mut m0, mut m1) = (0.0, 0.0);
    for (&t, z) in times.iter().zip(field) {
        let w = z.norm_sqr();
        m0 += w;
        m1 += w * t;
    }
    m1 / m0
}

/// Reflects `pulse` off the empty cavity attached to `grid` (whose loss rate
/// is `gamma2`) and reports the reflected wavepacket on `[0, t_final]`.
pub fn reflect_port2(
    grid: &ContinuumGrid,
    pulse: &PulseShape,
    t_final: f64,
    dt: f64,
) -> Result<Reflection> {
    if !(t_final > 0.0) {
        return Err(Error::config(format!("t_final must be positive, got {t_final}")));
    }
    let limit = 2.0 * PI / (STEPS_PER_PERIOD * grid.delta_max());
    if !(dt > 0.0 && dt <= limit) {
        return Err(Error::config(format!(
            "step dt = {dt} must lie in (0, {limit}] for {STEPS_PER_PERIOD} steps per fastest period"
        )));
    }
    if grid.recurrence_time() <= t_final {
        return Err(Error::config(format!(
            "port 2 comb recurs after {} which does not exceed t_final = {t_final}; refine the grid spacing",
            grid.recurrence_time()
        )));
    }
    let s0 = project_pulse(grid, pulse)?;
    let n = grid.n_q();
    let d = grid.detunings();
    let kappa = grid.kappa();
    let mi = Complex64::new(0.0, -1.0);
    let system = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let r = y[n];
        let mut sum = Complex64::new(0.0, 0.0);
        for q in 0..n {
            sum += y[q];
            dy[q] = mi * (y[q] * d[q] + r * kappa);
        }
        dy[n] = mi * kappa * sum;
    };

    let mut y = s0.clone();
    y.push(Complex64::new(0.0, 0.0));
    let norm = |y: &[Complex64]| y.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let norm0 = norm(&y);
    let steps = step_count(t_final, dt);
    let h = t_final / steps as f64;
    let mut rk = Rk4::new(n + 1);
    let mut drift: f64 = 0.0;
    for k in 0..steps {
        rk.step(&system, k as f64 * h, h, &mut y);
        drift = drift.max((norm(&y) - norm0).abs());
    }

    let samples = 4 * n;
    let times: Vec<f64> = (0..samples)
        .map(|k| t_final * k as f64 / (samples - 1) as f64)
        .collect();
    let input = grid.fields_at(&s0, 1, 0.0, &times).pop().unwrap();
    let output = grid.fields_at(&y[..n], 1, t_final, &times).pop().unwrap();
    let delay = centroid(&times, &output) - centroid(&times, &input);
    Ok(Reflection {
        times,
        input,
        output,
        output_norm: norm(&y[..n]),
        cavity_population: y[n].norm_sqr(),
        norm_drift: drift,
        delay,
        port1_population: 0.0,
    })
}
