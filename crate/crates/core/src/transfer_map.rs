//! Closed-form long-time limit of the two-mode transfer dynamics.
//!
//! Every excitation of mode 1 ends up in mode 2. Writing the initial state
//! in the Fock basis, `A[(n, m), (n', m')] = <n, m| rho0 |n', m'>`, the
//! final state is `|0><0| (x) sum_{p, p'} B[p, p'] |p><p'|` with
//!
//! ```text
//! B[p, p'] = sum_q A[(q, p - q), (q, p' - q)]
//! ```
//!
//! This is pure index algebra and shares no code with the integrator, so the
//! two serve as oracles for each other. The map is exact for inputs whose
//! mode-2 coherences sit only in the mode-1 vacuum block (every Fock-diagonal
//! input, for instance). A coherence `|q, m><q, m'|` with `q > 0` and
//! `m != m'` is carried over at full weight here, whereas the master
//! equation damps it by the factor `2 sqrt(a b) / (a + b)` per transfer step,
//! `a` and `b` being the two branch rates.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, ModeSpace};

/// Purity above which a final state counts as pure.
pub const PURITY_THRESHOLD: f64 = 1.0 - 1e-6;

/// Matrix entries below this magnitude are treated as outside the support.
const SUPPORT_TOLERANCE: f64 = 1e-14;

fn check_two_mode(space: &ModeSpace) -> Result<(usize, usize)> {
    match space.dims() {
        &[d1, d2] => Ok((d1, d2)),
        dims => Err(Error::input(format!(
            "transfer map needs a two-mode space, got dims {dims:?}"
        ))),
    }
}

/// Mode-2 coefficient matrix `B` (a `d2 x d2` matrix).
pub fn final_mode2_coefficients(rho0: &DensityMatrix) -> Result<DMatrix<Complex64>> {
    let space = rho0.space();
    let (d1, d2) = check_two_mode(space)?;

    let n = space.total_dim();
    for i in 0..n {
        for j in 0..n {
            if rho0.get(i, j).norm() > SUPPORT_TOLERANCE {
                let worst = space.photon_number(i).max(space.photon_number(j));
                if worst > d2 - 1 {
                    return Err(Error::config(format!(
                        "mode-2 truncation {d2} cannot hold the {worst} photons present in the initial state; need dimension >= {}",
                        worst + 1
                    )));
                }
            }
        }
    }

    let mut b = DMatrix::zeros(d2, d2);
    for p in 0..d2 {
        for pp in 0..d2 {
            let mut sum = Complex64::new(0.0, 0.0);
            for q in 0..d1.min(p.min(pp) + 1) {
                let row = space.flatten(&[q, p - q]);
                let col = space.flatten(&[q, pp - q]);
                sum += rho0.get(row, col);
            }
            b[(p, pp)] = sum;
        }
    }
    Ok(b)
}

/// Final two-mode state with mode 1 in vacuum.
pub fn asymptotic_transfer_map(rho0: &DensityMatrix) -> Result<DensityMatrix> {
    let b = final_mode2_coefficients(rho0)?;
    let space = rho0.space();
    let d2 = b.nrows();
    let mut out = DMatrix::zeros(space.total_dim(), space.total_dim());
    for p in 0..d2 {
        for pp in 0..d2 {
            out[(space.flatten(&[0, p]), space.flatten(&[0, pp]))] = b[(p, pp)];
        }
    }
    DensityMatrix::new(space, out)
}

#[derive(Debug, Clone)]
pub struct PurificationOutcome {
    pub pure: bool,
    pub purity: f64,
    pub final_state: DensityMatrix,
    /// Mode-2 amplitudes `beta` with `B = |beta><beta|`, present when `pure`.
    /// The global phase puts the largest component on the positive real axis.
    pub witness: Option<Vec<Complex64>>,
    /// `max |B - beta beta^dag|` for the returned witness.
    pub witness_residual: Option<f64>,
}

pub fn purification_predicate(rho0: &DensityMatrix) -> Result<PurificationOutcome> {
    let b = final_mode2_coefficients(rho0)?;
    let final_state = asymptotic_transfer_map(rho0)?;
    let purity = final_state.purity();
    let pure = purity >= PURITY_THRESHOLD;
    if !pure {
        return Ok(PurificationOutcome {
            pure,
            purity,
            final_state,
            witness: None,
            witness_residual: None,
        });
    }

    let hermitian = (&b + b.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = hermitian.symmetric_eigen();
    let (top, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty spectrum");
    let lambda = eig.eigenvalues[top].max(0.0);
    let mut v: DVector<Complex64> = eig.eigenvectors.column(top).into_owned();
    let (pivot, _) = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .expect("non-empty eigenvector");
    let phase = v[pivot].conj() / v[pivot].norm();
    v *= phase * lambda.sqrt();

    let outer = &v * v.adjoint();
    let residual = (&b - outer).iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(PurificationOutcome {
        pure,
        purity,
        final_state,
        witness: Some(v.iter().copied().collect()),
        witness_residual: Some(residual),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::StateVector;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn fock_states_merge() {
        let space = ModeSpace::new(&[3, 5]).unwrap();
        for (n, m) in [(2, 1), (1, 3), (0, 2), (2, 2)] {
            let rho = DensityMatrix::fock(&space, &[n, m]).unwrap();
            let out = asymptotic_transfer_map(&rho).unwrap();
            assert_eq!(out, DensityMatrix::fock(&space, &[0, n + m]).unwrap());
        }
    }

    #[test]
    fn mixed_single_photon_is_purified() {
        let space = ModeSpace::new(&[2, 2]).unwrap();
        let rho = DensityMatrix::mixture(&[
            (0.5, DensityMatrix::fock(&space, &[1, 0]).unwrap()),
            (0.5, DensityMatrix::fock(&space, &[0, 1]).unwrap()),
        ])
        .unwrap();
        let out = purification_predicate(&rho).unwrap();
        assert!(out.pure);
        assert_eq!(out.final_state, DensityMatrix::fock(&space, &[0, 1]).unwrap());
        assert_eq!(out.witness.unwrap(), vec![c(0.0), c(1.0)]);
    }

    #[test]
    fn superposed_upper_mode_becomes_mixed() {
        let space = ModeSpace::new(&[2, 2]).unwrap();
        let (a0, a1) = (0.6, 0.8);
        let psi =
            StateVector::superposition(&space, &[(c(a0), vec![0, 0]), (c(a1), vec![1, 0])])
                .unwrap();
        let out = asymptotic_transfer_map(&DensityMatrix::from_pure(&psi)).unwrap();
        let expected = DensityMatrix::mixture(&[
            (a0 * a0, DensityMatrix::fock(&space, &[0, 0]).unwrap()),
            (a1 * a1, DensityMatrix::fock(&space, &[0, 1]).unwrap()),
        ])
        .unwrap();
        assert!(out.trace_distance(&expected).unwrap() < 1e-15);
        assert!(!purification_predicate(&DensityMatrix::from_pure(&psi)).unwrap().pure);
    }

    #[test]
    fn different_totals_do_not_purify() {
        let space = ModeSpace::new(&[3, 3]).unwrap();
        let rho = DensityMatrix::mixture(&[
            (0.5, DensityMatrix::fock(&space, &[2, 0]).unwrap()),
            (0.5, DensityMatrix::fock(&space, &[0, 1]).unwrap()),
        ])
        .unwrap();
        let out = purification_predicate(&rho).unwrap();
        assert!(!out.pure);
        assert!((out.purity - 0.5).abs() < 1e-15);
        assert!(out.witness.is_none());
    }

    #[test]
    fn vacuum_upper_mode_input_is_unchanged() {
        let space = ModeSpace::new(&[2, 4]).unwrap();
        let phi = [c(0.5), Complex64::new(0.0, 0.5), c(-0.5), c(0.5)];
        let psi = StateVector::superposition(
            &space,
            &phi.iter().enumerate().map(|(m, &a)| (a, vec![0, m])).collect::<Vec<_>>(),
        )
        .unwrap();
        let rho = DensityMatrix::from_pure(&psi);
        let out = purification_predicate(&rho).unwrap();
        assert!(out.pure);
        assert!(out.final_state.trace_distance(&rho).unwrap() < 1e-12);
        // Witness equals phi up to a global phase.
        let beta = out.witness.unwrap();
        let overlap: Complex64 = beta.iter().zip(&phi).map(|(b, p)| b.conj() * p).sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-9);
        assert!(out.witness_residual.unwrap() < 1e-9);
    }

    #[test]
    fn photon_number_is_preserved() {
        let space = ModeSpace::new(&[3, 5]).unwrap();
        let rho = DensityMatrix::mixture(&[
            (0.2, DensityMatrix::fock(&space, &[2, 1]).unwrap()),
            (0.3, DensityMatrix::fock(&space, &[1, 0]).unwrap()),
            (0.5, DensityMatrix::fock(&space, &[0, 4]).unwrap()),
        ])
        .unwrap();
        let out = asymptotic_transfer_map(&rho).unwrap();
        let before = rho.mean_occupation(0).unwrap() + rho.mean_occupation(1).unwrap();
        let after = out.mean_occupation(0).unwrap() + out.mean_occupation(1).unwrap();
        assert!((before - after).abs() < 1e-12);
        assert_eq!(out.mean_occupation(0).unwrap(), 0.0);
    }

    #[test]
    fn insufficient_truncation_is_rejected() {
        let space = ModeSpace::new(&[3, 3]).unwrap();
        let rho = DensityMatrix::fock(&space, &[2, 1]).unwrap();
        assert!(matches!(asymptotic_transfer_map(&rho), Err(Error::Config(_))));
    }
}
