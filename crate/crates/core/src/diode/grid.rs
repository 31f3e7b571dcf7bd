use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Uniform frequency comb standing in for the free-space continuum of one port.
///
/// Mode `q` sits at detuning `-delta_max + (q + 1/2) spacing` with
/// `spacing = 2 delta_max / n_q`. The per-mode coupling is derived from the
/// requested cavity loss rate through `loss_rate = 2 pi kappa^2 / spacing`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumGrid {
    detunings: Vec<f64>,
    delta_max: f64,
    spacing: f64,
    kappa: f64,
    loss_rate: f64,
}

impl ContinuumGrid {
    pub fn new(n_q: usize, delta_max: f64, loss_rate: f64) -> Result<Self> {
        if n_q == 0 {
            return Err(Error::input("continuum grid needs at least one mode"));
        }
        if !(delta_max > 0.0 && delta_max.is_finite()) {
            return Err(Error::input(format!("delta_max must be positive, got {delta_max}")));
        }
        if !(loss_rate >= 0.0 && loss_rate.is_finite()) {
            return Err(Error::input(format!(
                "loss rate must be non-negative, got {loss_rate}"
            )));
        }
        let spacing = 2.0 * delta_max / n_q as f64;
        let detunings = (0..n_q)
            .map(|q| -delta_max + (q as f64 + 0.5) * spacing)
            .collect();
        let kappa = (loss_rate * spacing / (2.0 * PI)).sqrt();
        Ok(Self {
            detunings,
            delta_max,
            spacing,
            kappa,
            loss_rate,
        })
    }

    pub fn n_q(&self) -> usize {
        self.detunings.len()
    }

    pub fn detunings(&self) -> &[f64] {
        &self.detunings
    }

    pub fn delta_max(&self) -> f64 {
        self.delta_max
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn loss_rate(&self) -> f64 {
        self.loss_rate
    }

    /// Loss rate implied by the stored coupling and spacing.
    pub fn implied_loss_rate(&self) -> f64 {
        2.0 * PI * self.kappa * self.kappa / self.spacing
    }

    /// Period `2 pi / spacing` after which a free wavepacket on the comb repeats.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI / self.spacing
    }

    /// Field at the cavity mirror at time `t` for free-field amplitudes given
    /// at `t_ref`: `sqrt(spacing / 2 pi) sum_q a_q exp(-i Delta_q (t - t_ref))`.
    pub fn field_at(&self, amplitudes: &[Complex64], t_ref: f64, t: f64) -> Complex64 {
        let norm = (self.spacing / (2.0 * PI)).sqrt();
        let sum: Complex64 = self
            .detunings
            .iter()
            .zip(amplitudes)
            .map(|(&d, &a)| a * Complex64::from_polar(1.0, -d * (t - t_ref)))
            .sum();
        sum * norm
    }

    /// [`field_at`](Self::field_at) for every row of a row-major
    /// `rows x n_q` amplitude block, sampled at `times`.
    pub fn fields_at(
        &self,
        amplitudes: &[Complex64],
        rows: usize,
        t_ref: f64,
        times: &[f64],
    ) -> Vec<Vec<Complex64>> {
        let n_q = self.n_q();
        let norm = (self.spacing / (2.0 * PI)).sqrt();
        let phases: Vec<Complex64> = times
            .iter()
            .flat_map(|&t| {
                self.detunings
                    .iter()
                    .map(move |&d| Complex64::from_polar(norm, -d * (t - t_ref)))
            })
            .collect();
        (0..rows)
            .map(|r| {
                let row = &amplitudes[r * n_q..(r + 1) * n_q];
                (0..times.len())
                    .map(|k| {
                        let ph = &phases[k * n_q..(k + 1) * n_q];
                        row.iter().zip(ph).map(|(a, p)| a * p).sum()
                    })
                    .collect()
            })
            .collect()
    }

    /// `samples` equally spaced times covering one recurrence period ending at `t_end`.
    pub fn period_samples(&self, t_end: f64, samples: usize) -> (Vec<f64>, f64) {
        let h = self.recurrence_time() / samples as f64;
        let times = (0..samples)
            .map(|k| t_end - self.recurrence_time() + (k as f64 + 1.0) * h)
            .collect();
        (times, h)
    }
}
