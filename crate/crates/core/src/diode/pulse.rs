use std::f64::consts::PI;

use num_complex::Complex64;

use super::grid::ContinuumGrid;
use crate::error::{Error, Result};

/// Largest accepted `bandwidth / delta_max` when projecting onto a grid.
pub const MAX_BANDWIDTH_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub enum PulseKind {
    /// `exp(-(t - center)^2 / (2 duration^2))`.
    Gaussian { center: f64, duration: f64 },
    /// `exp(-rate |t - center| / 2)`: rises at `rate` (in intensity) up to the
    /// peak and falls back symmetrically.
    Exponential { center: f64, rate: f64 },
    /// Samples at `start + k * step`, linearly interpolated and zero outside.
    Custom {
        start: f64,
        step: f64,
        samples: Vec<Complex64>,
    },
}

/// Single-photon temporal envelope at the cavity mirror, normalized so that
/// `int |phi(t)|^2 dt = 1`, with an optional carrier detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseShape {
    kind: PulseKind,
    carrier: f64,
    scale: f64,
}

impl PulseShape {
    pub fn new(kind: PulseKind, carrier: f64) -> Result<Self> {
        let scale = match &kind {
            &PulseKind::Gaussian { duration, .. } => {
                if !(duration > 0.0) {
                    return Err(Error::input(format!("pulse duration must be positive, got {duration}")));
                }
                (PI * duration * duration).powf(-0.25)
            }
            &PulseKind::Exponential { rate, .. } => {
                if !(rate > 0.0) {
                    return Err(Error::input(format!("pulse rate must be positive, got {rate}")));
                }
                (rate / 2.0).sqrt()
            }
            PulseKind::Custom { step, samples, .. } => {
                if !(*step > 0.0) || samples.len() < 2 {
                    return Err(Error::input("custom pulse needs a positive step and two samples"));
                }
                // Exact integral of |linear interpolant|^2 on each interval.
                let energy: f64 = samples
                    .windows(2)
                    .map(|w| {
                        let (a, b) = (w[0], w[1]);
                        step * (a.norm_sqr() + (a.conj() * b).re + b.norm_sqr()) / 3.0
                    })
                    .sum();
                if energy == 0.0 {
                    return Err(Error::input("custom pulse has zero energy"));
                }
                energy.sqrt().recip()
            }
        };
        if !carrier.is_finite() {
            return Err(Error::input("carrier detuning must be finite"));
        }
        Ok(Self {
            kind,
            carrier,
            scale,
        })
    }

    pub fn gaussian(center: f64, duration: f64) -> Result<Self> {
        Self::new(PulseKind::Gaussian { center, duration }, 0.0)
    }

    pub fn with_carrier(mut self, carrier: f64) -> Self {
        self.carrier = carrier;
        self
    }

    pub fn kind(&self) -> &PulseKind {
        &self.kind
    }

    pub fn carrier(&self) -> f64 {
        self.carrier
    }

    fn raw(&self, t: f64) -> Complex64 {
        match &self.kind {
            &PulseKind::Gaussian { center, duration } => {
                let x = (t - center) / duration;
                Complex64::new((-0.5 * x * x).exp(), 0.0)
            }
            &PulseKind::Exponential { center, rate } => {
                Complex64::new((-0.5 * rate * (t - center).abs()).exp(), 0.0)
            }
            PulseKind::Custom {
                start,
                step,
                samples,
            } => {
                let x = (t - start) / step;
                if x < 0.0 || x > (samples.len() - 1) as f64 {
                    return Complex64::new(0.0, 0.0);
                }
                let k = (x.floor() as usize).min(samples.len() - 2);
                let frac = x - k as f64;
                samples[k] * (1.0 - frac) + samples[k + 1] * frac
            }
        }
    }

    /// `phi(t)` including the carrier `exp(-i carrier t)`.
    pub fn envelope(&self, t: f64) -> Complex64 {
        self.raw(t) * self.scale * Complex64::from_polar(1.0, -self.carrier * t)
    }

    /// Spectral width: `1 / duration` for Gaussians, `rate` for exponentials,
    /// RMS frequency spread for custom samples.
    pub fn bandwidth(&self) -> f64 {
        match &self.kind {
            PulseKind::Gaussian { duration, .. } => 1.0 / duration,
            PulseKind::Exponential { rate, .. } => *rate,
            PulseKind::Custom { step, samples, .. } => {
                let energy: f64 = samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * step;
                let slope: f64 = samples
                    .windows(2)
                    .map(|w| ((w[1] - w[0]) / step).norm_sqr() * step)
                    .sum();
                (slope / energy).sqrt()
            }
        }
    }

    /// Time scale used to size simulation windows.
    pub fn duration(&self) -> f64 {
        1.0 / self.bandwidth()
    }
}

/// Free-field amplitudes `P_q(0)` whose field at the mirror reproduces the pulse.
///
/// The pulse is sampled over one recurrence period `[0, 2 pi / spacing)` and
/// Fourier-projected onto the comb, then renormalized to unit norm.
pub fn project_pulse(grid: &ContinuumGrid, pulse: &PulseShape) -> Result<Vec<Complex64>> {
    let bw = pulse.bandwidth();
    if bw > MAX_BANDWIDTH_FRACTION * grid.delta_max() {
        return Err(Error::config(format!(
            "pulse bandwidth {bw} exceeds delta_max / 5 = {}; widen the grid or lengthen the pulse",
            MAX_BANDWIDTH_FRACTION * grid.delta_max()
        )));
    }
    if pulse.carrier().abs() + bw > grid.delta_max() {
        return Err(Error::config(format!(
            "pulse carrier {} lies outside the grid span +-{}",
            pulse.carrier(),
            grid.delta_max()
        )));
    }
    let samples = (8 * grid.n_q()).max(256);
    let h = grid.recurrence_time() / samples as f64;
    let field: Vec<(f64, Complex64)> = (0..samples)
        .map(|j| {
            let t = j as f64 * h;
            (t, pulse.envelope(t))
        })
        .collect();
    let norm = (grid.spacing() / (2.0 * PI)).sqrt() * h;
    let mut amps: Vec<Complex64> = grid
        .detunings()
        .iter()
        .map(|&d| {
            let s: Complex64 = field
                .iter()
                .map(|&(t, phi)| phi * Complex64::from_polar(1.0, d * t))
                .sum();
            s * norm
        })
        .collect();
    let total = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if total == 0.0 {
        return Err(Error::config("pulse has no overlap with the grid"));
    }
    amps.iter_mut().for_each(|z| *z /= total);
    Ok(amps)
}

/// Largest `|resynthesized - target|` over `samples` points of `window`,
/// relative to the peak of `|target|`.
pub fn reconstruction_error(
    grid: &ContinuumGrid,
    pulse: &PulseShape,
    amplitudes: &[Complex64],
    window: (f64, f64),
    samples: usize,
) -> f64 {
    let samples = samples.max(2);
    let h = (window.1 - window.0) / (samples - 1) as f64;
    let mut peak: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for k in 0..samples {
        let t = window.0 + k as f64 * h;
        let target = pulse.envelope(t);
        peak = peak.max(target.norm());
        worst = worst.max((grid.field_at(amplitudes, 0.0, t) - target).norm());
    }
    worst / peak
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_is_normalized() {
        let p = PulseShape::gaussian(10.0, 2.0).unwrap();
        let h = 0.01;
        let energy: f64 = (0..4000).map(|k| p.envelope(k as f64 * h).norm_sqr() * h).sum();
        assert!((energy - 1.0).abs() < 1e-10);
    }

    #[test]
    fn custom_pulse_is_normalized() {
        let samples: Vec<Complex64> = (0..50)
            .map(|k| Complex64::new((k as f64 * 0.2).sin(), 0.3))
            .collect();
        let p = PulseShape::new(
            PulseKind::Custom {
                start: 1.0,
                step: 0.1,
                samples,
            },
            0.0,
        )
        .unwrap();
        let h = 1e-4;
        let energy: f64 = (0..70000).map(|k| p.envelope(k as f64 * h).norm_sqr() * h).sum();
        assert!((energy - 1.0).abs() < 1e-3, "{energy}");
    }

    #[test]
    fn projection_reconstructs_long_gaussian() {
        let grid = ContinuumGrid::new(400, 2.5, 1.0).unwrap();
        let pulse = PulseShape::gaussian(150.0, 50.0).unwrap();
        let amps = project_pulse(&grid, &pulse).unwrap();
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-10);
        let err = reconstruction_error(&grid, &pulse, &amps, (0.0, 410.0), 2000);
        assert!(err < 0.01, "{err}");
    }

    #[test]
    fn projection_rejects_wideband_pulse() {
        let grid = ContinuumGrid::new(100, 1.0, 1.0).unwrap();
        let pulse = PulseShape::gaussian(10.0, 1.0).unwrap();
        assert!(matches!(project_pulse(&grid, &pulse), Err(Error::Config(_))));
    }
}
