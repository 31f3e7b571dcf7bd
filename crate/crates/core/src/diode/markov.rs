//! Markov-reduced diode: both continua and the atomic reservoir eliminated.
//!
//! `F(t) = int_0^t Phi_in(s) exp(-(gamma + gamma1)(t - s) / 2) ds` obeys
//! `dF/dt = Phi_in - (gamma + gamma1) F / 2`, and the port-2 intensity is
//! `rho_out = gamma1 gamma2 gamma G` with `dG/dt = |F|^2 - gamma2 G`.

use num_complex::Complex64;

use super::pulse::PulseShape;
use crate::error::{Error, Result};
use crate::ode::{step_count, Rk4};

#[derive(Debug, Clone)]
pub struct MarkovTrajectory {
    pub times: Vec<f64>,
    pub f: Vec<Complex64>,
    /// Cavity-1 amplitude `Q = -i sqrt(gamma1) F`.
    pub cavity_amplitude: Vec<Complex64>,
    pub phi_in: Vec<Complex64>,
    /// `Phi_out^1 = Phi_in - gamma1 F`.
    pub port1_output: Vec<Complex64>,
    pub rho_out: Vec<f64>,
    /// `sqrt(gamma1 gamma) F`, the fast-cavity-2 limit of the port-2 field.
    pub port2_output: Vec<Complex64>,
    /// `int |Phi_out^1|^2 dt` over the run.
    pub leakage: f64,
    /// `int rho_out dt` over the run.
    pub port2_yield: f64,
    /// `int |Phi_out^2|^2 dt` over the run.
    pub port2_factorized_yield: f64,
    /// `int |Phi_in|^2 dt` over the run.
    pub input_energy: f64,
    /// Cavity-2 population `gamma1 gamma G` at the final time.
    pub cavity2_population: f64,
}

impl MarkovTrajectory {
    pub fn cavity_population(&self) -> Vec<f64> {
        self.cavity_amplitude.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `int |Phi_in|^2 - (leakage + |Q|^2 + cavity 2 + yield)` at the final
    /// time; zero up to quadrature error.
    pub fn energy_balance(&self) -> f64 {
        let q = self.cavity_amplitude.last().map_or(0.0, |z| z.norm_sqr());
        self.input_energy - (self.leakage + q + self.cavity2_population + self.port2_yield)
    }
}

pub fn evolve_markov(
    gamma: f64,
    gamma1: f64,
    gamma2: f64,
    pulse: &PulseShape,
    t_final: f64,
    dt: f64,
) -> Result<MarkovTrajectory> {
    for (name, v) in [("gamma", gamma), ("gamma1", gamma1), ("gamma2", gamma2)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::input(format!("{name} must be positive, got {v}")));
        }
    }
    if !(t_final > 0.0) || !(dt > 0.0) {
        return Err(Error::config("t_final and dt must be positive"));
    }
    let decay = 0.5 * (gamma + gamma1);
    let out_scale = gamma1 * gamma2 * gamma;
    // y = [F, G, leakage, yield, factorized yield, input]; all but F are real.
    let system = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let phi = pulse.envelope(t);
        let f = y[0];
        let g = y[1].re;
        dy[0] = phi - f * decay;
        dy[1] = Complex64::new(f.norm_sqr() - gamma2 * g, 0.0);
        dy[2] = Complex64::new((phi - f * gamma1).norm_sqr(), 0.0);
        dy[3] = Complex64::new(out_scale * g, 0.0);
        dy[4] = Complex64::new(gamma1 * gamma * f.norm_sqr(), 0.0);
        dy[5] = Complex64::new(phi.norm_sqr(), 0.0);
    };

    let steps = step_count(t_final, dt);
    let h = t_final / steps as f64;
    let mut y = vec![Complex64::new(0.0, 0.0); 6];
    let mut rk = Rk4::new(6);
    let mut traj = MarkovTrajectory {
        times: Vec::with_capacity(steps + 1),
        f: Vec::with_capacity(steps + 1),
        cavity_amplitude: Vec::with_capacity(steps + 1),
        phi_in: Vec::with_capacity(steps + 1),
        port1_output: Vec::with_capacity(steps + 1),
        rho_out: Vec::with_capacity(steps + 1),
        port2_output: Vec::with_capacity(steps + 1),
        leakage: 0.0,
        port2_yield: 0.0,
        port2_factorized_yield: 0.0,
        input_energy: 0.0,
        cavity2_population: 0.0,
    };
    let sqrt_g1 = gamma1.sqrt();
    let sqrt_g1g = (gamma1 * gamma).sqrt();
    let record = |traj: &mut MarkovTrajectory, t: f64, y: &[Complex64]| {
        let phi = pulse.envelope(t);
        traj.times.push(t);
        traj.f.push(y[0]);
        traj.cavity_amplitude.push(Complex64::new(0.0, -sqrt_g1) * y[0]);
        traj.phi_in.push(phi);
        traj.port1_output.push(phi - y[0] * gamma1);
        traj.rho_out.push(out_scale * y[1].re);
        traj.port2_output.push(y[0] * sqrt_g1g);
    };
    record(&mut traj, 0.0, &y);
    for k in 0..steps {
        rk.step(&system, k as f64 * h, h, &mut y);
        record(&mut traj, (k + 1) as f64 * h, &y);
    }
    traj.leakage = y[2].re;
    traj.port2_yield = y[3].re;
    traj.port2_factorized_yield = y[4].re;
    traj.input_energy = y[5].re;
    traj.cavity2_population = gamma1 * gamma * y[1].re;
    Ok(traj)
}

/// Linear interpolation of a uniformly sampled series at `t`.
pub fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    let n = times.len();
    if n == 1 || t <= times[0] {
        return values[0];
    }
    if t >= times[n - 1] {
        return values[n - 1];
    }
    let h = (times[n - 1] - times[0]) / (n - 1) as f64;
    let x = (t - times[0]) / h;
    let k = (x.floor() as usize).min(n - 2);
    let frac = x - k as f64;
    values[k] * (1.0 - frac) + values[k + 1] * frac
}
