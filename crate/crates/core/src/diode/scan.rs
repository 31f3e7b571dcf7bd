use super::markov::evolve_markov;
use super::pulse::PulseShape;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedanceRow {
    pub ratio: f64,
    pub leakage: f64,
    pub port2_yield: f64,
}

/// Port-1 leakage and port-2 yield from the Markov-reduced model for each
/// `gamma1 = ratio * gamma`.
pub fn impedance_scan(
    ratios: &[f64],
    gamma: f64,
    gamma2: f64,
    pulse: &PulseShape,
    t_final: f64,
    dt: f64,
) -> Result<Vec<ImpedanceRow>> {
    ratios
        .iter()
        .map(|&ratio| {
            let tr = evolve_markov(gamma, ratio * gamma, gamma2, pulse, t_final, dt)?;
            Ok(ImpedanceRow {
                ratio,
                leakage: tr.leakage,
                port2_yield: tr.port2_yield,
            })
        })
        .collect()
}

/// Ratio with the smallest leakage.
pub fn leakage_minimum(rows: &[ImpedanceRow]) -> Option<f64> {
    rows.iter()
        .min_by(|a, b| a.leakage.total_cmp(&b.leakage))
        .map(|r| r.ratio)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matched_ratio_minimizes_leakage() {
        let pulse = PulseShape::gaussian(150.0, 50.0).unwrap();
        let rows = impedance_scan(&[0.25, 0.5, 1.0, 2.0, 4.0], 1.0, 20.0, &pulse, 410.0, 0.02).unwrap();
        assert_eq!(leakage_minimum(&rows), Some(1.0));
        for r in &rows {
            assert!((r.leakage + r.port2_yield - 1.0).abs() < 1e-3, "{r:?}");
        }
    }

    #[test]
    fn weak_input_coupling_reflects_everything() {
        let pulse = PulseShape::gaussian(150.0, 50.0).unwrap();
        let rows = impedance_scan(&[1e-4], 1.0, 20.0, &pulse, 410.0, 0.02).unwrap();
        assert!(rows[0].leakage > 0.999, "{:?}", rows[0]);
    }

    #[test]
    fn short_pulse_leaks_more() {
        let long = PulseShape::gaussian(150.0, 50.0).unwrap();
        let short = PulseShape::gaussian(6.0, 2.0).unwrap();
        let l = impedance_scan(&[1.0], 1.0, 20.0, &long, 410.0, 0.01).unwrap()[0].leakage;
        let s = impedance_scan(&[1.0], 1.0, 20.0, &short, 30.0, 0.01).unwrap()[0].leakage;
        assert!(s > 10.0 * l && s > 0.01, "{s} vs {l}");
    }
}
