//! Truncated multi-mode bosonic Fock spaces.
//!
//! A [`ModeSpace`] is the tensor product of single-mode spaces holding Fock
//! states `0..dim`. Flat basis indices are row-major over the mode
//! multi-index, so the last mode varies fastest:
//!
//! ```text
//! flat(n_0, ..., n_{k-1}) = sum_m n_m * prod_{m' > m} dim_{m'}
//! ```
//!
//! Ladder operators use hard truncation: the creation operator maps the top
//! Fock level of a mode to the zero vector.
//!
//! Operators are stored sparse ([`SparseOperator`], CSR) while density
//! matrices are dense ([`DensityMatrix`]); all spaces in this crate stay at
//! a few hundred basis states at most.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeSpace {
    dims: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl ModeSpace {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::input("mode space needs at least one mode"));
        }
        if let Some((m, d)) = dims.iter().enumerate().find(|(_, &d)| d < 2) {
            return Err(Error::input(format!(
                "mode {m} has truncation dimension {d}; every mode needs at least 2 levels"
            )));
        }
        let mut strides = vec![1; dims.len()];
        for m in (0..dims.len() - 1).rev() {
            strides[m] = strides[m + 1] * dims[m + 1];
        }
        let total = strides[0] * dims[0];
        Ok(Self {
            dims: dims.to_vec(),
            strides,
            total,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_modes(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.total
    }

    /// Flat index of a Fock multi-index. Panics if the index is out of range.
    pub fn flatten(&self, occupations: &[usize]) -> usize {
        assert_eq!(occupations.len(), self.dims.len(), "multi-index rank mismatch");
        occupations
            .iter()
            .zip(&self.dims)
            .zip(&self.strides)
            .map(|((&n, &d), &s)| {
                assert!(n < d, "occupation {n} exceeds truncation {d}");
                n * s
            })
            .sum()
    }

    pub fn unflatten(&self, index: usize) -> Vec<usize> {
        assert!(index < self.total, "flat index {index} out of range");
        self.dims
            .iter()
            .zip(&self.strides)
            .map(|(&d, &s)| (index / s) % d)
            .collect()
    }

    /// Occupation of `mode` in the basis state with flat index `index`.
    pub fn occupation(&self, index: usize, mode: usize) -> usize {
        (index / self.strides[mode]) % self.dims[mode]
    }

    /// Total photon number of a basis state.
    pub fn photon_number(&self, index: usize) -> usize {
        (0..self.dims.len()).map(|m| self.occupation(index, m)).sum()
    }

    /// Largest total photon number representable in the space.
    pub fn max_photon_number(&self) -> usize {
        self.dims.iter().map(|d| d - 1).sum()
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.dims.len() {
            return Err(Error::input(format!(
                "mode index {mode} out of range for a {}-mode space",
                self.dims.len()
            )));
        }
        Ok(())
    }
}

/// Compressed-sparse-row complex operator on a [`ModeSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    space: ModeSpace,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<Complex64>,
}

impl SparseOperator {
    /// Builds an operator from `(row, col, value)` triplets. Duplicates are
    /// summed and exact zeros dropped.
    pub fn from_triplets(
        space: &ModeSpace,
        triplets: impl IntoIterator<Item = (usize, usize, Complex64)>,
    ) -> Result<Self> {
        let n = space.total_dim();
        let mut entries: Vec<(usize, usize, Complex64)> = Vec::new();
        for (r, c, v) in triplets {
            if r >= n || c >= n {
                return Err(Error::input(format!(
                    "entry ({r}, {c}) outside a space of dimension {n}"
                )));
            }
            entries.push((r, c, v));
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(entries.len());
        let mut rows = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            if rows.last() == Some(&r) && cols.last() == Some(&c) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                values.push(v);
            }
        }
        let mut kept_cols = Vec::with_capacity(cols.len());
        let mut kept_values = Vec::with_capacity(values.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(values) {
            if v != ZERO {
                row_ptr[r + 1] += 1;
                kept_cols.push(c);
                kept_values.push(v);
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self {
            space: space.clone(),
            row_ptr,
            cols: kept_cols,
            values: kept_values,
        })
    }

    pub fn identity(space: &ModeSpace) -> Self {
        let n = space.total_dim();
        Self {
            space: space.clone(),
            row_ptr: (0..=n).collect(),
            cols: (0..n).collect(),
            values: vec![ONE; n],
        }
    }

    pub fn zero(space: &ModeSpace) -> Self {
        Self {
            space: space.clone(),
            row_ptr: vec![0; space.total_dim() + 1],
            cols: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates stored `(row, col, value)` entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.space.total_dim()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.values[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[range.clone()].binary_search(&col) {
            Ok(k) => self.values[range.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn adjoint(&self) -> Self {
        let triplets: Vec<_> = self.entries().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(&self.space, triplets).expect("adjoint keeps indices in range")
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let triplets: Vec<_> = self.entries().map(|(r, c, v)| (r, c, v * factor)).collect();
        Self::from_triplets(&self.space, triplets).expect("scaling keeps indices in range")
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_space(&other.space)?;
        Self::from_triplets(&self.space, self.entries().chain(other.entries()))
    }

    /// Operator product `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_space(&other.space)?;
        let mut triplets = Vec::new();
        for (r, k, a) in self.entries() {
            for j in other.row_ptr[k]..other.row_ptr[k + 1] {
                triplets.push((r, other.cols[j], a * other.values[j]));
            }
        }
        Self::from_triplets(&self.space, triplets)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.space.total_dim();
        let mut m = DMatrix::zeros(n, n);
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        self.check_space(&state.space)?;
        let amplitudes = (0..self.space.total_dim())
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .map(|k| self.values[k] * state.amplitudes[self.cols[k]])
                    .sum()
            })
            .collect();
        Ok(StateVector {
            space: self.space.clone(),
            amplitudes,
        })
    }

    /// Left product `self · rho`. No normalization is applied.
    pub fn apply_density(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.check_space(&rho.space)?;
        let n = self.space.total_dim();
        let mut out = DMatrix::zeros(n, n);
        self.mul_dense_into(&rho.matrix, &mut out, ONE);
        Ok(DensityMatrix {
            space: self.space.clone(),
            matrix: out,
        })
    }

    /// `out += factor · self · m`.
    pub(crate) fn mul_dense_into(
        &self,
        m: &DMatrix<Complex64>,
        out: &mut DMatrix<Complex64>,
        factor: Complex64,
    ) {
        let n = self.space.total_dim();
        for (r, k, a) in self.entries() {
            let a = a * factor;
            for c in 0..n {
                out[(r, c)] += a * m[(k, c)];
            }
        }
    }

    fn check_space(&self, other: &ModeSpace) -> Result<()> {
        if &self.space != other {
            return Err(Error::input(format!(
                "operator space {:?} does not match operand space {:?}",
                self.space.dims(),
                other.dims()
            )));
        }
        Ok(())
    }
}

/// Single-mode annihilation operator embedded in `space` at `mode`.
pub fn annihilation(space: &ModeSpace, mode: usize) -> Result<SparseOperator> {
    space.check_mode(mode)?;
    let triplets = (0..space.total_dim()).filter_map(|col| {
        let n = space.occupation(col, mode);
        (n > 0).then(|| {
            let row = col - space.strides[mode];
            (row, col, Complex64::new((n as f64).sqrt(), 0.0))
        })
    });
    SparseOperator::from_triplets(space, triplets)
}

pub fn creation(space: &ModeSpace, mode: usize) -> Result<SparseOperator> {
    Ok(annihilation(space, mode)?.adjoint())
}

pub fn number(space: &ModeSpace, mode: usize) -> Result<SparseOperator> {
    let a = annihilation(space, mode)?;
    a.adjoint().compose(&a)
}

/// Dense `dim × dim` annihilation matrix of a single truncated mode.
pub fn single_mode_annihilation(dim: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    m
}

/// Embeds a single-mode operator at `mode`, acting as identity elsewhere.
pub fn tensor_embed(
    space: &ModeSpace,
    single_mode_op: &DMatrix<Complex64>,
    mode: usize,
) -> Result<SparseOperator> {
    space.check_mode(mode)?;
    let d = space.dims[mode];
    if single_mode_op.nrows() != d || single_mode_op.ncols() != d {
        return Err(Error::input(format!(
            "single-mode operator is {}x{} but mode {mode} has dimension {d}",
            single_mode_op.nrows(),
            single_mode_op.ncols()
        )));
    }
    let stride = space.strides[mode];
    let mut triplets = Vec::new();
    for col in 0..space.total_dim() {
        let n = space.occupation(col, mode);
        let base = col - n * stride;
        for m in 0..d {
            let v = single_mode_op[(m, n)];
            if v != ZERO {
                triplets.push((base + m * stride, col, v));
            }
        }
    }
    SparseOperator::from_triplets(space, triplets)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: ModeSpace,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(space: &ModeSpace, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(Error::input(format!(
                "state has {} amplitudes but the space has dimension {}",
                amplitudes.len(),
                space.total_dim()
            )));
        }
        Ok(Self {
            space: space.clone(),
            amplitudes,
        })
    }

    pub fn fock(space: &ModeSpace, occupations: &[usize]) -> Result<Self> {
        if occupations.len() != space.num_modes() {
            return Err(Error::input("occupation list length differs from mode count"));
        }
        if let Some(m) = (0..occupations.len()).find(|&m| occupations[m] >= space.dims[m]) {
            return Err(Error::input(format!(
                "occupation {} of mode {m} exceeds truncation {}",
                occupations[m], space.dims[m]
            )));
        }
        let mut amplitudes = vec![ZERO; space.total_dim()];
        amplitudes[space.flatten(occupations)] = ONE;
        Ok(Self {
            space: space.clone(),
            amplitudes,
        })
    }

    /// Normalized superposition `sum_k c_k |occupations_k>`.
    pub fn superposition(space: &ModeSpace, terms: &[(Complex64, Vec<usize>)]) -> Result<Self> {
        let mut amplitudes = vec![ZERO; space.total_dim()];
        for (c, occ) in terms {
            let basis = Self::fock(space, occ)?;
            for (a, b) in amplitudes.iter_mut().zip(&basis.amplitudes) {
                *a += c * b;
            }
        }
        let mut state = Self {
            space: space.clone(),
            amplitudes,
        };
        let norm = state.norm();
        if norm == 0.0 {
            return Err(Error::input("superposition has zero norm"));
        }
        state.amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(state)
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: ModeSpace,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(space: &ModeSpace, matrix: DMatrix<Complex64>) -> Result<Self> {
        let n = space.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::input(format!(
                "matrix is {}x{} but the space has dimension {n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            space: space.clone(),
            matrix,
        })
    }

    pub fn from_pure(state: &StateVector) -> Self {
        let v = nalgebra::DVector::from_column_slice(&state.amplitudes);
        Self {
            space: state.space.clone(),
            matrix: &v * v.adjoint(),
        }
    }

    pub fn fock(space: &ModeSpace, occupations: &[usize]) -> Result<Self> {
        Ok(Self::from_pure(&StateVector::fock(space, occupations)?))
    }

    /// Convex combination `sum_k w_k rho_k`. Weights are used as given.
    pub fn mixture(terms: &[(f64, DensityMatrix)]) -> Result<Self> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::input("mixture needs at least one component"))?;
        let mut matrix = DMatrix::zeros(first.dim(), first.dim());
        for (w, rho) in terms {
            if rho.space != first.space {
                return Err(Error::input("mixture components live on different spaces"));
            }
            matrix += &rho.matrix * Complex64::new(*w, 0.0);
        }
        Ok(Self {
            space: first.space.clone(),
            matrix,
        })
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// `tr(rho^2)` for a Hermitian matrix.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest entrywise deviation from Hermiticity, `max |rho - rho^dag|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self.matrix[(r, c)] - self.matrix[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn population(&self, occupations: &[usize]) -> f64 {
        let i = self.space.flatten(occupations);
        self.matrix[(i, i)].re
    }

    /// `tr(op · rho)`.
    pub fn expectation(&self, op: &SparseOperator) -> Result<Complex64> {
        if op.space() != &self.space {
            return Err(Error::input("operator and density matrix spaces differ"));
        }
        Ok(op.entries().map(|(r, c, v)| v * self.matrix[(c, r)]).sum())
    }

    /// Mean occupation of `mode`.
    pub fn mean_occupation(&self, mode: usize) -> Result<f64> {
        self.space.check_mode(mode)?;
        Ok((0..self.dim())
            .map(|i| self.space.occupation(i, mode) as f64 * self.matrix[(i, i)].re)
            .sum())
    }

    /// `<psi| rho |psi>`.
    pub fn fidelity_with(&self, psi: &StateVector) -> Result<f64> {
        if psi.space != self.space {
            return Err(Error::input("state and density matrix spaces differ"));
        }
        let v = nalgebra::DVector::from_column_slice(&psi.amplitudes);
        Ok((v.adjoint() * &self.matrix * &v)[(0, 0)].re)
    }

    /// Trace distance `||rho - sigma||_1 / 2`.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        if other.space != self.space {
            return Err(Error::input("trace distance between different spaces"));
        }
        let diff = DensityMatrix {
            space: self.space.clone(),
            matrix: &self.matrix - &other.matrix,
        };
        Ok(0.5 * diff.eigenvalues().iter().map(|e| e.abs()).sum::<f64>())
    }

    /// Reduced state on the modes listed in `keep` (in that order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::input("partial trace needs at least one kept mode"));
        }
        for (i, &m) in keep.iter().enumerate() {
            self.space.check_mode(m)?;
            if keep[..i].contains(&m) {
                return Err(Error::input(format!("mode {m} listed twice in the kept set")));
            }
        }
        let kept_dims: Vec<usize> = keep.iter().map(|&m| self.space.dims[m]).collect();
        let reduced_space = ModeSpace::new(&kept_dims)?;
        let traced: Vec<usize> = (0..self.space.num_modes())
            .filter(|m| !keep.contains(m))
            .collect();

        let n = self.dim();
        let reduced_index = |i: usize| -> usize {
            keep.iter()
                .zip(&reduced_space.strides)
                .map(|(&m, &s)| self.space.occupation(i, m) * s)
                .sum()
        };
        let env_index = |i: usize| -> Vec<usize> {
            traced.iter().map(|&m| self.space.occupation(i, m)).collect()
        };
        let red: Vec<usize> = (0..n).map(reduced_index).collect();
        let env: Vec<Vec<usize>> = (0..n).map(env_index).collect();

        let mut out = DMatrix::zeros(reduced_space.total_dim(), reduced_space.total_dim());
        for r in 0..n {
            for c in 0..n {
                if env[r] == env[c] {
                    out[(red[r], red[c])] += self.matrix[(r, c)];
                }
            }
        }
        Ok(Self {
            space: reduced_space,
            matrix: out,
        })
    }
}
