use lambda_transfer::diode::{project_pulse, ContinuumGrid, PulseShape};
use lambda_transfer::fock::{
    annihilation, creation, number, DensityMatrix, ModeSpace, SparseOperator, StateVector,
};
use lambda_transfer::lindblad::{evolve, lindblad_rhs, LindbladModel};
use lambda_transfer::reservoir::{evolve_exact, ReservoirSpec, SingleExcitationState};
use lambda_transfer::transfer_map::asymptotic_transfer_map;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(2usize..5, 1..4)
}

fn random_density(space: &ModeSpace, seed: &[f64]) -> DensityMatrix {
    let n = space.total_dim();
    let a = DMatrix::from_fn(n, n, |i, j| {
        let k = (i * n + j) % seed.len();
        Complex64::new(seed[k], seed[(k + 7) % seed.len()] * ((i + 2 * j) as f64).sin())
    });
    let m = &a * a.adjoint();
    let tr = m.trace();
    DensityMatrix::new(space, m / tr).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn flat_index_round_trip(dims in dims_strategy(), pick in 0usize..1000) {
        let space = ModeSpace::new(&dims).unwrap();
        let index = pick % space.total_dim();
        let occ = space.unflatten(index);
        prop_assert_eq!(space.flatten(&occ), index);
        prop_assert!(occ.iter().zip(&dims).all(|(n, d)| n < d));
    }

    #[test]
    fn creation_is_adjoint_of_annihilation(dims in dims_strategy(), mode in 0usize..3) {
        let space = ModeSpace::new(&dims).unwrap();
        let mode = mode % dims.len();
        let a = annihilation(&space, mode).unwrap();
        let ad = creation(&space, mode).unwrap();
        prop_assert_eq!(a.adjoint().to_dense(), ad.to_dense());
        prop_assert_eq!(a.adjoint().adjoint().to_dense(), a.to_dense());
    }

    #[test]
    fn creation_raises_with_sqrt_factor(dims in dims_strategy(), mode in 0usize..3) {
        let space = ModeSpace::new(&dims).unwrap();
        let mode = mode % dims.len();
        let ad = creation(&space, mode).unwrap();
        for idx in 0..space.total_dim() {
            let occ = space.unflatten(idx);
            let out = ad.apply(&StateVector::fock(&space, &occ).unwrap()).unwrap();
            let n = occ[mode];
            if n + 1 < dims[mode] {
                let mut up = occ.clone();
                up[mode] += 1;
                let j = space.flatten(&up);
                prop_assert!((out.amplitudes()[j].re - ((n + 1) as f64).sqrt()).abs() < 1e-15);
            } else {
                prop_assert_eq!(out.norm(), 0.0);
            }
        }
    }

    #[test]
    fn commutator_is_identity_below_cutoff(dims in dims_strategy(), mode in 0usize..3) {
        let space = ModeSpace::new(&dims).unwrap();
        let mode = mode % dims.len();
        let a = annihilation(&space, mode).unwrap().to_dense();
        let ad = creation(&space, mode).unwrap().to_dense();
        let comm = &a * &ad - &ad * &a;
        for i in 0..space.total_dim() {
            if space.occupation(i, mode) + 1 >= dims[mode] {
                continue;
            }
            for j in 0..space.total_dim() {
                let expect = if i == j { 1.0 } else { 0.0 };
                prop_assert!((comm[(i, j)] - Complex64::new(expect, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn partial_trace_recovers_product_factor(p in 0.05f64..0.95, q in 0.05f64..0.95) {
        let space = ModeSpace::new(&[2, 3]).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[p, 0.0, 0.0, 1.0 - p].map(|x| Complex64::new(x, 0.0)));
        let b = DMatrix::from_row_slice(3, 3, &[q, 0.0, 0.0, 0.0, (1.0 - q) / 2.0, 0.0, 0.0, 0.0, (1.0 - q) / 2.0]
            .map(|x| Complex64::new(x, 0.0)));
        let rho = DensityMatrix::new(&space, a.kronecker(&b)).unwrap();
        let reduced = rho.partial_trace(&[1]).unwrap();
        prop_assert!((reduced.matrix() - &b).camax() < 1e-15);
    }

    #[test]
    fn sparse_compose_matches_dense_product(dims in dims_strategy()) {
        let space = ModeSpace::new(&dims).unwrap();
        let a = annihilation(&space, 0).unwrap();
        let n = number(&space, dims.len() - 1).unwrap();
        let composed: SparseOperator = a.compose(&n).unwrap();
        prop_assert!((composed.to_dense() - a.to_dense() * n.to_dense()).camax() < 1e-14);
    }

    #[test]
    fn evolution_is_linear(seed in prop::collection::vec(-1.0f64..1.0, 13), alpha in 0.0f64..1.0) {
        let model = LindbladModel::transfer([3, 3], 1.0).unwrap();
        let s = model.space();
        let ra = random_density(s, &seed);
        let rb = DensityMatrix::fock(s, &[1, 1]).unwrap();
        let mix = DensityMatrix::mixture(&[(alpha, ra.clone()), (1.0 - alpha, rb.clone())]).unwrap();
        let run = |r: &DensityMatrix| evolve(&model, r, 1.0, 0.005, usize::MAX).unwrap().final_state().clone();
        let lhs = run(&mix);
        let rhs = run(&ra).matrix() * Complex64::new(alpha, 0.0) + run(&rb).matrix() * Complex64::new(1.0 - alpha, 0.0);
        prop_assert!((lhs.matrix() - rhs).camax() < 1e-9);
    }

    #[test]
    fn evolution_preserves_trace_and_positivity(seed in prop::collection::vec(-1.0f64..1.0, 11), rate in 0.2f64..2.0) {
        let model = LindbladModel::transfer([3, 4], rate).unwrap();
        let rho0 = random_density(model.space(), &seed);
        let dt = 0.5 * model.max_stable_step();
        let res = evolve(&model, &rho0, 3.0, dt, 50).unwrap();
        prop_assert!(res.trace_drift <= 1e-8);
        prop_assert!(res.min_eigenvalue() >= -1e-8);
        prop_assert!(res.max_hermiticity_error() <= 1e-12);
    }

    #[test]
    fn total_photon_number_is_conserved(seed in prop::collection::vec(-1.0f64..1.0, 11)) {
        let model = LindbladModel::transfer([3, 4], 1.0).unwrap();
        let rho = random_density(model.space(), &seed);
        let d = lindblad_rhs(&model, &rho).unwrap();
        let total = number(model.space(), 0).unwrap().add(&number(model.space(), 1).unwrap()).unwrap();
        prop_assert!(d.expectation(&total).unwrap().norm() < 1e-13);
    }

    #[test]
    fn transfer_map_preserves_photon_number_distribution(seed in prop::collection::vec(-1.0f64..1.0, 9)) {
        // Support restricted to n + m <= 2 so that it fits mode 2 of dimension 3.
        let space = ModeSpace::new(&[3, 3]).unwrap();
        let full = random_density(&space, &seed);
        let keep: Vec<usize> = (0..9).filter(|&i| space.photon_number(i) <= 2).collect();
        let m = DMatrix::from_fn(9, 9, |i, j| {
            if keep.contains(&i) && keep.contains(&j) { full.matrix()[(i, j)] } else { Complex64::new(0.0, 0.0) }
        });
        let tr = m.trace();
        let rho = DensityMatrix::new(&space, m / tr).unwrap();
        let out = asymptotic_transfer_map(&rho).unwrap();
        prop_assert!((out.trace().re - 1.0).abs() < 1e-12);
        for p in 0..=2 {
            let before: f64 = (0..9).filter(|&i| space.photon_number(i) == p).map(|i| rho.get(i, i).re).sum();
            prop_assert!((out.population(&[0, p]) - before).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_reservoir_evolution_is_unitary(classes in 1usize..40, eps in 0.5f64..5.0, rate in 0.1f64..2.0) {
        let spec = ReservoirSpec::equidistant_with_rate(classes, eps, rate).unwrap();
        let dt = 0.02 / eps;
        let traj = evolve_exact(&spec, &SingleExcitationState::excited(classes), 2.0, dt, 10).unwrap();
        prop_assert!(traj.norm_drift <= 2e-9);
    }

    #[test]
    fn grid_coupling_reproduces_loss_rate(n in 1usize..2000, dm in 0.01f64..100.0, rate in 0.0f64..50.0) {
        let g = ContinuumGrid::new(n, dm, rate).unwrap();
        prop_assert!((g.implied_loss_rate() - rate).abs() <= 1e-12 * rate.max(1.0));
    }

    #[test]
    fn projected_pulse_has_unit_norm(duration in 5.0f64..40.0, carrier in -0.5f64..0.5) {
        let grid = ContinuumGrid::new(300, 2.0, 1.0).unwrap();
        let pulse = PulseShape::gaussian(3.0 * duration, duration).unwrap().with_carrier(carrier);
        let amps = project_pulse(&grid, &pulse).unwrap();
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-10);
    }
}
