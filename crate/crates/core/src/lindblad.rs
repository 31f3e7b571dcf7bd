//! Markovian master equation for the photon modes.
//!
//! The generator is the standard Lindblad form
//!
//! ```text
//! drho/dt = -i[H, rho] + sum_k rate_k (L_k rho L_k^dag - 1/2 {L_k^dag L_k, rho})
//! ```
//!
//! With `H = 0` and a single jump `L = a_1 a_2^dag` this moves excitations
//! irreversibly from mode 1 into mode 2. The transition `|n, m> -> |n-1, m+1>`
//! happens at rate `rate * n * (m + 1)`: occupation of mode 2 stimulates the
//! transfer.
//!
//! Density matrices are integrated as column-major vectors with fixed-step
//! RK4; there is no adaptive stepping, so runs are bit-reproducible.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{annihilation, creation, DensityMatrix, ModeSpace, SparseOperator, StateVector};
use crate::ode::{step_count, ComplexOde, Rk4};

/// Upper bound on `dt * max_rate * (max photon number)^2`.
pub const STABILITY_LIMIT: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct Jump {
    pub operator: SparseOperator,
    pub rate: f64,
}

#[derive(Debug, Clone)]
pub struct LindbladModel {
    space: ModeSpace,
    hamiltonian: Option<SparseOperator>,
    jumps: Vec<Jump>,
}

impl LindbladModel {
    pub fn new(
        space: &ModeSpace,
        hamiltonian: Option<SparseOperator>,
        jumps: Vec<Jump>,
    ) -> Result<Self> {
        if let Some(h) = &hamiltonian {
            if h.space() != space {
                return Err(Error::input("Hamiltonian lives on a different space"));
            }
        }
        for (k, j) in jumps.iter().enumerate() {
            if !(j.rate > 0.0 && j.rate.is_finite()) {
                return Err(Error::input(format!(
                    "jump {k}: rate must be positive, got {}",
                    j.rate
                )));
            }
            if j.operator.space() != space {
                return Err(Error::input(format!("jump {k} lives on a different space")));
            }
        }
        Ok(Self {
            space: space.clone(),
            hamiltonian,
            jumps,
        })
    }

    /// Two modes `[mode 1, mode 2]` with the single transfer jump `a_1 a_2^dag`.
    pub fn transfer(dims: [usize; 2], rate: f64) -> Result<Self> {
        let space = ModeSpace::new(&dims)?;
        let jump = annihilation(&space, 0)?.compose(&creation(&space, 1)?)?;
        Self::new(
            &space,
            None,
            vec![Jump {
                operator: jump,
                rate,
            }],
        )
    }

    /// Modes `[1, 1', 2]` where both upper modes feed mode 2 through the
    /// common jump `(a_1 + a_1') a_2^dag`.
    pub fn interference(dims: [usize; 3], rate: f64) -> Result<Self> {
        let space = ModeSpace::new(&dims)?;
        let upper = annihilation(&space, 0)?.add(&annihilation(&space, 1)?)?;
        let jump = upper.compose(&creation(&space, 2)?)?;
        Self::new(
            &space,
            None,
            vec![Jump {
                operator: jump,
                rate,
            }],
        )
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn hamiltonian(&self) -> Option<&SparseOperator> {
        self.hamiltonian.as_ref()
    }

    pub fn max_rate(&self) -> f64 {
        self.jumps.iter().map(|j| j.rate).fold(0.0, f64::max)
    }

    /// Largest step accepted by [`evolve`].
    pub fn max_stable_step(&self) -> f64 {
        let n = self.space.max_photon_number() as f64;
        let rate = self.max_rate();
        if rate == 0.0 || n == 0.0 {
            f64::INFINITY
        } else {
            STABILITY_LIMIT / (rate * n * n)
        }
    }
}

/// Precomputed generator: `drho = K rho + rho K^dag + sum_k rate_k L_k rho L_k^dag`
/// with `K = -iH - 1/2 sum_k rate_k L_k^dag L_k`.
struct Generator {
    n: usize,
    effective: Vec<(usize, usize, Complex64)>,
    jumps: Vec<(f64, Vec<(usize, usize, Complex64)>)>,
}

impl Generator {
    fn new(model: &LindbladModel) -> Self {
        let space = &model.space;
        let mut k = SparseOperator::zero(space);
        if let Some(h) = &model.hamiltonian {
            k = k.add(&h.scale(Complex64::new(0.0, -1.0))).unwrap();
        }
        for j in &model.jumps {
            let ldl = j.operator.adjoint().compose(&j.operator).unwrap();
            k = k.add(&ldl.scale(Complex64::new(-0.5 * j.rate, 0.0))).unwrap();
        }
        Self {
            n: space.total_dim(),
            effective: k.entries().collect(),
            jumps: model
                .jumps
                .iter()
                .map(|j| (j.rate, j.operator.entries().collect()))
                .collect(),
        }
    }
}

impl ComplexOde for Generator {
    // Column-major storage: element (r, c) lives at r + c * n.
    fn derivative(&self, _t: f64, rho: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));

        // K rho
        for &(r, k, v) in &self.effective {
            for c in 0..n {
                out[r + c * n] += v * rho[k + c * n];
            }
        }
        // rho K^dag: (rho K^dag)[r, c] = sum_k rho[r, k] conj(K[c, k])
        for &(c, k, v) in &self.effective {
            let vc = v.conj();
            for r in 0..n {
                out[r + c * n] += rho[r + k * n] * vc;
            }
        }
        // rate L rho L^dag
        let mut left = vec![Complex64::new(0.0, 0.0); n * n];
        for (rate, entries) in &self.jumps {
            left.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for &(r, k, v) in entries {
                for c in 0..n {
                    left[r + c * n] += v * rho[k + c * n];
                }
            }
            for &(c, k, v) in entries {
                let vc = v.conj() * *rate;
                for r in 0..n {
                    out[r + c * n] += left[r + k * n] * vc;
                }
            }
        }
    }
}

/// Time derivative of `rho` under `model`.
pub fn lindblad_rhs(model: &LindbladModel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.space() != model.space() {
        return Err(Error::input("density matrix and model spaces differ"));
    }
    let generator = Generator::new(model);
    let n = rho.dim();
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    generator.derivative(0.0, rho.matrix().as_slice(), &mut out);
    DensityMatrix::new(model.space(), DMatrix::from_vec(n, n, out))
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Named real time series aligned with `times`.
    pub observables: Vec<(String, Vec<f64>)>,
    /// `|tr rho(t_final) - tr rho(0)|`.
    pub trace_drift: f64,
}

impl EvolutionResult {
    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.observables
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("evolution always stores the initial state")
    }

    /// Smallest eigenvalue over all stored snapshots.
    pub fn min_eigenvalue(&self) -> f64 {
        self.states
            .iter()
            .map(DensityMatrix::min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_hermiticity_error(&self) -> f64 {
        self.states
            .iter()
            .map(DensityMatrix::hermiticity_error)
            .fold(0.0, f64::max)
    }
}

fn record(model: &LindbladModel, rho: &DensityMatrix, series: &mut [(String, Vec<f64>)]) {
    let modes = model.space.num_modes();
    for m in 0..modes {
        series[m].1.push(rho.mean_occupation(m).unwrap());
    }
    series[modes].1.push(rho.trace().re);
    series[modes + 1].1.push(rho.purity());
}

/// Integrates `model` from `rho0` to `t_final`, storing a snapshot every
/// `stride` steps plus the final state. Observables are `pop_mode{k}`
/// (mean occupation of mode `k`, counted from 1), `trace` and `purity`.
pub fn evolve(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t_final: f64,
    dt: f64,
    stride: usize,
) -> Result<EvolutionResult> {
    if rho0.space() != model.space() {
        return Err(Error::input("initial state and model spaces differ"));
    }
    if !(t_final > 0.0) {
        return Err(Error::config(format!("t_final must be positive, got {t_final}")));
    }
    if !(dt > 0.0) {
        return Err(Error::config(format!("dt must be positive, got {dt}")));
    }
    let n_max = model.space.max_photon_number() as f64;
    let product = dt * model.max_rate() * n_max * n_max;
    if product > STABILITY_LIMIT {
        return Err(Error::config(format!(
            "stability guard violated: dt * max_rate * max_photon_number^2 = {dt} * {} * {}^2 = {product:.6} exceeds {STABILITY_LIMIT}",
            model.max_rate(),
            n_max
        )));
    }
    let stride = stride.max(1);

    let generator = Generator::new(model);
    let steps = step_count(t_final, dt);
    let h = t_final / steps as f64;
    let n = rho0.dim();

    let mut series: Vec<(String, Vec<f64>)> = (0..model.space.num_modes())
        .map(|m| (format!("pop_mode{}", m + 1), Vec::new()))
        .collect();
    series.push(("trace".into(), Vec::new()));
    series.push(("purity".into(), Vec::new()));

    let mut times = vec![0.0];
    let mut states = vec![rho0.clone()];
    record(model, rho0, &mut series);

    let mut y: Vec<Complex64> = rho0.matrix().as_slice().to_vec();
    let mut rk = Rk4::new(y.len());
    for k in 0..steps {
        let t = k as f64 * h;
        rk.step(&generator, t, h, &mut y);
        let done = k + 1;
        if done % stride == 0 || done == steps {
            let rho = DensityMatrix::new(model.space(), DMatrix::from_column_slice(n, n, &y))?;
            record(model, &rho, &mut series);
            times.push(done as f64 * h);
            states.push(rho);
        }
    }
    let trace_drift = (states.last().unwrap().trace() - rho0.trace()).norm();
    Ok(EvolutionResult {
        times,
        states,
        observables: series,
        trace_drift,
    })
}

/// Fidelity `<psi| rho(t) |psi>` at each stored time, for `rho(0) = |psi><psi|`.
pub fn dark_state_check(
    model: &LindbladModel,
    psi: &StateVector,
    t_final: f64,
    dt: f64,
    stride: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if model.space().num_modes() != 3 {
        return Err(Error::input("dark-state check needs modes (1, 1', 2)"));
    }
    let rho0 = DensityMatrix::from_pure(psi);
    let result = evolve(model, &rho0, t_final, dt, stride)?;
    let fidelity = result
        .states
        .iter()
        .map(|rho| rho.fidelity_with(psi))
        .collect::<Result<Vec<_>>>()?;
    Ok((result.times, fidelity))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn vacuum_is_stationary() {
        let model = LindbladModel::transfer([3, 3], 1.0).unwrap();
        let rho = DensityMatrix::fock(model.space(), &[0, 0]).unwrap();
        let d = lindblad_rhs(&model, &rho).unwrap();
        assert!(d.matrix().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn empty_upper_mode_is_stationary() {
        let model = LindbladModel::transfer([2, 5], 1.0).unwrap();
        for m in 0..5 {
            let rho = DensityMatrix::fock(model.space(), &[0, m]).unwrap();
            let d = lindblad_rhs(&model, &rho).unwrap();
            assert!(d.matrix().iter().all(|z| z.norm() < 1e-15));
        }
    }

    #[test]
    fn single_photon_occupation_decays_at_unit_rate() {
        let model = LindbladModel::transfer([2, 2], 1.0).unwrap();
        let rho = DensityMatrix::fock(model.space(), &[1, 0]).unwrap();
        let d = lindblad_rhs(&model, &rho).unwrap();
        // d<n1>/dt = -1 and d<n2>/dt = +1, worked out on {|10>, |01>}.
        assert!((d.mean_occupation(0).unwrap() + 1.0).abs() < 1e-14);
        assert!((d.mean_occupation(1).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn derivative_is_traceless_and_hermitian() {
        let model = LindbladModel::transfer([3, 4], 0.7).unwrap();
        let space = model.space().clone();
        let psi = StateVector::superposition(
            &space,
            &[
                (c(1.0), vec![2, 0]),
                (Complex64::new(0.3, -0.4), vec![1, 1]),
                (c(0.2), vec![0, 3]),
            ],
        )
        .unwrap();
        let d = lindblad_rhs(&model, &DensityMatrix::from_pure(&psi)).unwrap();
        assert!(d.trace().norm() < 1e-12);
        assert!(d.hermiticity_error() < 1e-12);
    }

    #[test]
    fn stimulated_transfer_rate_from_fock_state() {
        for (n, m) in [(1, 0), (2, 0), (1, 2), (3, 1)] {
            let model = LindbladModel::transfer([4, 6], 1.3).unwrap();
            let rho = DensityMatrix::fock(model.space(), &[n, m]).unwrap();
            let d = lindblad_rhs(&model, &rho).unwrap();
            let outflow = -d.population(&[n, m]);
            let expected = 1.3 * (n * (m + 1)) as f64;
            assert!((outflow - expected).abs() < 1e-12, "({n},{m}): {outflow}");
            assert!((d.population(&[n - 1, m + 1]) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_nonpositive_rate() {
        assert!(matches!(
            LindbladModel::transfer([2, 2], -1.0),
            Err(Error::InvalidInput(msg)) if msg.contains("rate must be positive")
        ));
    }

    #[test]
    fn stability_guard_names_product() {
        let model = LindbladModel::transfer([3, 3], 1.0).unwrap();
        let rho = DensityMatrix::fock(model.space(), &[1, 0]).unwrap();
        let err = evolve(&model, &rho, 1.0, 0.1, 1).unwrap_err();
        assert!(matches!(&err, Error::Config(msg) if msg.contains("max_photon_number")));
    }

    #[test]
    fn single_photon_decays_exponentially() {
        let model = LindbladModel::transfer([2, 2], 1.0).unwrap();
        let rho = DensityMatrix::fock(model.space(), &[1, 0]).unwrap();
        let res = evolve(&model, &rho, 2.0, 0.01, 10).unwrap();
        let p = res.final_state().population(&[1, 0]);
        assert!((p - (-2.0f64).exp()).abs() < 1e-6);
        assert!(res.trace_drift < 1e-12);
    }

    #[test]
    fn dark_fock_state_is_unchanged() {
        let model = LindbladModel::transfer([2, 3], 1.0).unwrap();
        let rho = DensityMatrix::fock(model.space(), &[0, 1]).unwrap();
        let res = evolve(&model, &rho, 3.0, 0.01, 50).unwrap();
        for s in &res.states {
            assert_eq!(s, &rho);
        }
    }

    #[test]
    fn vacuum_fidelity_stays_one() {
        let model = LindbladModel::interference([2, 2, 2], 1.0).unwrap();
        let psi = StateVector::fock(model.space(), &[0, 0, 0]).unwrap();
        let (_, f) = dark_state_check(&model, &psi, 1.0, 0.01, 10).unwrap();
        assert!(f.iter().all(|&x| x == 1.0));
    }
}
