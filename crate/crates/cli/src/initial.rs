//! Initial-state strings.
//!
//! ```text
//! fock 1 0
//! mixture 0.5 fock 1 0; 0.5 fock 0 1
//! superposition 1 fock 1 0 0; -1 fock 0 1 0
//! superposition 0.6 fock 1 0; 0,0.8 fock 0 1      (amplitude "re,im")
//! ```
//!
//! Mixture weights must sum to one; superpositions are normalized.

use lambda_transfer::fock::{DensityMatrix, ModeSpace, StateVector};
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Fock(Vec<usize>),
    Mixture(Vec<(f64, Vec<usize>)>),
    Superposition(Vec<(Complex64, Vec<usize>)>),
}

fn parse_fock<'a>(tokens: &mut impl Iterator<Item = &'a str>) -> Result<Vec<usize>, String> {
    match tokens.next() {
        Some("fock") => {}
        Some(other) => return Err(format!("expected `fock`, found `{other}`")),
        None => return Err("expected `fock`".into()),
    }
    let occ: Vec<usize> = tokens
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| format!("occupation `{t}` is not a non-negative integer"))
        })
        .collect::<Result<_, _>>()?;
    if occ.is_empty() {
        return Err("`fock` needs one occupation per mode".into());
    }
    Ok(occ)
}

fn parse_amplitude(token: &str) -> Result<Complex64, String> {
    let bad = || format!("amplitude `{token}` is not a number or `re,im` pair");
    match token.split_once(',') {
        Some((re, im)) => Ok(Complex64::new(
            re.parse().map_err(|_| bad())?,
            im.parse().map_err(|_| bad())?,
        )),
        None => Ok(Complex64::new(token.parse().map_err(|_| bad())?, 0.0)),
    }
}

impl InitialState {
    pub fn parse(text: &str) -> Result<Self, String> {
        let text = text.trim();
        let (head, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
        match head {
            "fock" => parse_fock(&mut text.split_whitespace()).map(InitialState::Fock),
            "mixture" | "superposition" => {
                let mut terms = Vec::new();
                for part in rest.split(';') {
                    let mut tokens = part.split_whitespace();
                    let coef = tokens
                        .next()
                        .ok_or_else(|| format!("empty term in `{head}`"))?;
                    terms.push((coef, parse_fock(&mut tokens)?));
                }
                if head == "mixture" {
                    let terms = terms
                        .into_iter()
                        .map(|(w, occ)| {
                            let w: f64 = w
                                .parse()
                                .map_err(|_| format!("weight `{w}` is not a number"))?;
                            if !(w >= 0.0) {
                                return Err(format!("weight {w} must be non-negative"));
                            }
                            Ok((w, occ))
                        })
                        .collect::<Result<Vec<_>, String>>()?;
                    let total: f64 = terms.iter().map(|t| t.0).sum();
                    if (total - 1.0).abs() > 1e-9 {
                        return Err(format!("mixture weights sum to {total}, not 1"));
                    }
                    Ok(InitialState::Mixture(terms))
                } else {
                    let terms = terms
                        .into_iter()
                        .map(|(a, occ)| Ok((parse_amplitude(a)?, occ)))
                        .collect::<Result<Vec<_>, String>>()?;
                    Ok(InitialState::Superposition(terms))
                }
            }
            "" => Err("initial state is empty".into()),
            other => Err(format!(
                "unknown initial state `{other}`; expected fock, mixture or superposition"
            )),
        }
    }

    pub fn density(&self, space: &ModeSpace) -> Result<DensityMatrix, String> {
        let fock = |occ: &[usize]| DensityMatrix::fock(space, occ).map_err(|e| e.to_string());
        match self {
            InitialState::Fock(occ) => fock(occ),
            InitialState::Mixture(terms) => {
                let parts = terms
                    .iter()
                    .map(|(w, occ)| Ok((*w, fock(occ)?)))
                    .collect::<Result<Vec<_>, String>>()?;
                DensityMatrix::mixture(&parts).map_err(|e| e.to_string())
            }
            InitialState::Superposition(_) => Ok(DensityMatrix::from_pure(&self.pure(space)?)),
        }
    }

    /// The state vector for Fock states and superpositions.
    pub fn pure(&self, space: &ModeSpace) -> Result<StateVector, String> {
        match self {
            InitialState::Fock(occ) => StateVector::fock(space, occ).map_err(|e| e.to_string()),
            InitialState::Superposition(terms) => {
                StateVector::superposition(space, terms).map_err(|e| e.to_string())
            }
            InitialState::Mixture(_) => Err("a mixture has no state vector".into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_forms() {
        assert_eq!(InitialState::parse("fock 1 0").unwrap(), InitialState::Fock(vec![1, 0]));
        let m = InitialState::parse("mixture 0.5 fock 1 0; 0.5 fock 0 1").unwrap();
        assert_eq!(m, InitialState::Mixture(vec![(0.5, vec![1, 0]), (0.5, vec![0, 1])]));
        let s = InitialState::parse("superposition 1 fock 1 0; 0,-1 fock 0 1").unwrap();
        assert_eq!(
            s,
            InitialState::Superposition(vec![
                (Complex64::new(1.0, 0.0), vec![1, 0]),
                (Complex64::new(0.0, -1.0), vec![0, 1])
            ])
        );
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(InitialState::parse("fock").is_err());
        assert!(InitialState::parse("fock 1 x").is_err());
        assert!(InitialState::parse("mixture 0.5 fock 1 0").is_err());
        assert!(InitialState::parse("coherent 1").is_err());
        assert!(InitialState::parse("superposition a fock 1").is_err());
    }

    #[test]
    fn builds_density_matrices() {
        let space = ModeSpace::new(&[2, 2]).unwrap();
        let rho = InitialState::parse("mixture 0.25 fock 1 0; 0.75 fock 0 1")
            .unwrap()
            .density(&space)
            .unwrap();
        assert!((rho.population(&[0, 1]) - 0.75).abs() < 1e-15);
        assert!(InitialState::parse("fock 2 0").unwrap().density(&space).is_err());
    }
}
