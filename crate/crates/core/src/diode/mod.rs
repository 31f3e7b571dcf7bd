//! Four-port photon diode built from two cavities and the atomic reservoir.
//!
//! A photon entering port 1 fills cavity 1, is transferred irreversibly by
//! the atoms into cavity 2 and leaves through port 2. A photon entering port 2
//! finds an empty cavity and is reflected back into port 2.

pub mod full;
pub mod grid;
pub mod markov;
pub mod pulse;
pub mod reflect;
pub mod scan;

pub use full::{
    evolve_full, min_class_overlap, port1_output, port2_output_decomposition, port2_output_energy,
    DiodeState, FullTrajectory, Port2Output,
};
pub use grid::ContinuumGrid;
pub use markov::{evolve_markov, MarkovTrajectory};
pub use pulse::{project_pulse, reconstruction_error, PulseKind, PulseShape};
pub use reflect::{cavity_group_delay, reflect_port2, Reflection};
pub use scan::{impedance_scan, leakage_minimum, ImpedanceRow};

use crate::error::{Error, Result};
use crate::reservoir::ReservoirSpec;

/// Rate at which cavity 1 empties into cavity 2 when cavity 2 leaks at
/// `gamma2`: `sum_l |g_c|^2 gamma2 / ((gamma2 / 2)^2 + omega_l^2)`.
///
/// For `eps_max >> gamma2` this tends to the bare reservoir rate; otherwise
/// each class is filtered by the cavity-2 Lorentzian.
pub fn transfer_rate_through_cavity(spec: &ReservoirSpec, gamma2: f64) -> Result<f64> {
    Ok(spec.coupling().norm_sqr() * filter_sum(spec, gamma2)?)
}

fn filter_sum(spec: &ReservoirSpec, gamma2: f64) -> Result<f64> {
    if !(gamma2 > 0.0 && gamma2.is_finite()) {
        return Err(Error::input(format!("gamma2 must be positive, got {gamma2}")));
    }
    let h = 0.5 * gamma2;
    Ok(spec
        .frequencies()
        .iter()
        .map(|w| gamma2 / (h * h + w * w))
        .sum())
}

/// Copy of `spec` with a real coupling chosen so that
/// [`transfer_rate_through_cavity`] equals `rate`.
pub fn with_transfer_rate(spec: &ReservoirSpec, rate: f64, gamma2: f64) -> Result<ReservoirSpec> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::input(format!("transfer rate must be non-negative, got {rate}")));
    }
    let g = (rate / filter_sum(spec, gamma2)?).sqrt();
    Ok(spec.with_coupling(num_complex::Complex64::new(g, 0.0)))
}

/// Pulse placement and run length for a pulse of duration `duration`:
/// centered at `3 duration` and followed by `5 duration` plus ten times the
/// slowest relaxation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationWindow {
    pub pulse_center: f64,
    pub t_final: f64,
}

impl SimulationWindow {
    pub fn new(duration: f64, rates: &[f64]) -> Result<Self> {
        if !(duration > 0.0) {
            return Err(Error::input(format!("pulse duration must be positive, got {duration}")));
        }
        let slowest = rates
            .iter()
            .copied()
            .filter(|&r| r > 0.0)
            .fold(f64::INFINITY, f64::min);
        if !slowest.is_finite() {
            return Err(Error::input("at least one relaxation rate must be positive"));
        }
        let pulse_center = 3.0 * duration;
        Ok(Self {
            pulse_center,
            t_final: pulse_center + 5.0 * duration + 10.0 / slowest,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reservoir::{markov_rate, Spectrum};
    use num_complex::Complex64;

    #[test]
    fn coupling_inversion_round_trips() {
        let spec = ReservoirSpec::new(200, 0.5, Complex64::new(1.0, 0.0), Spectrum::Equidistant).unwrap();
        let tuned = with_transfer_rate(&spec, 1.0, 20.0).unwrap();
        let rate = transfer_rate_through_cavity(&tuned, 20.0).unwrap();
        assert!((rate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wide_reservoir_recovers_bare_rate() {
        // Class spacing 0.1 resolves the unit-width filter; the truncated
        // tails cost about gamma2 / (pi eps_max).
        let spec = ReservoirSpec::equidistant_with_rate(8000, 400.0, 1.0).unwrap();
        let filtered = transfer_rate_through_cavity(&spec, 1.0).unwrap();
        let bare = markov_rate(&spec).unwrap();
        assert!((filtered - bare).abs() / bare < 2e-3, "{filtered} vs {bare}");
    }

    #[test]
    fn window_uses_slowest_positive_rate() {
        let w = SimulationWindow::new(50.0, &[1.0, 1.0, 20.0]).unwrap();
        assert_eq!(w.pulse_center, 150.0);
        assert_eq!(w.t_final, 410.0);
        let w = SimulationWindow::new(2.0, &[20.0, 0.0]).unwrap();
        assert_eq!(w.t_final, 16.5);
        assert!(SimulationWindow::new(1.0, &[0.0]).is_err());
    }
}
