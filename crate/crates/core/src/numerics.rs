//! Dense complex Hermitian linear algebra: eigendecomposition, exact spectral
//! propagation, partial trace over the cavity and von Neumann entropy.
//!
//! Operators are stored as dense `nalgebra` matrices. Eigendecomposition first
//! splits the matrix into the connected components of its coupling graph
//! (basis states linked by nonzero matrix elements) and diagonalizes each block
//! on its own; symmetry sectors such as fermion parity or photon parity are
//! found this way without the caller having to name them.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Per-element tolerance for Hermiticity of operators.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on the squared norm of state vectors and on density-matrix traces.
pub const NORM_TOL: f64 = 1e-10;
/// Eigenvalues at or below this floor are dropped from entropy sums.
pub const ENTROPY_FLOOR: f64 = 1e-14;
/// Default relative tolerance used to merge degenerate eigenvalues.
pub const DEFAULT_LEVEL_TOL: f64 = 1e-9;

/// Labels the Hilbert space an operator or state lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisTag {
    /// `n` qubits, basis index bit `j` is the state of site `j`.
    QubitChain { n: usize },
    /// Maximal-spin sector `j = n/2`, index `i` holds `m = i - j`.
    CollectiveSpin { n: usize },
    /// Collective spin tensored with a Fock space truncated at `n_max` photons;
    /// index `i_spin * (n_max + 1) + photons`.
    SpinFock { n: usize, n_max: usize },
}

impl BasisTag {
    pub fn dim(&self) -> usize {
        match *self {
            BasisTag::QubitChain { n } => 1usize << n,
            BasisTag::CollectiveSpin { n } => n + 1,
            BasisTag::SpinFock { n, n_max } => (n + 1) * (n_max + 1),
        }
    }

    /// Number of battery cells.
    pub fn cells(&self) -> usize {
        match *self {
            BasisTag::QubitChain { n } | BasisTag::CollectiveSpin { n } | BasisTag::SpinFock { n, .. } => n,
        }
    }
}

/// Eigenpairs sorted by ascending eigenvalue.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns.
    pub vectors: DMatrix<C64>,
    /// Set when the operator is diagonal in its basis: column `i` is the unit
    /// vector on basis index `basis_index[i]`.
    basis_index: Option<Vec<usize>>,
    /// Copy of `vectors` when every eigenvector is real.
    real_vectors: Option<DMatrix<f64>>,
}

impl Eigen {
    /// Coefficients `V^† v` of a vector in the eigenbasis.
    pub fn coefficients(&self, v: &DVector<C64>) -> DVector<C64> {
        match (&self.basis_index, &self.real_vectors) {
            (Some(idx), _) => DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i])),
            (None, Some(r)) => {
                let parts = DMatrix::from_fn(v.len(), 2, |i, j| if j == 0 { v[i].re } else { v[i].im });
                let out = r.tr_mul(&parts);
                DVector::from_fn(v.len(), |i, _| C64::new(out[(i, 0)], out[(i, 1)]))
            }
            (None, None) => self.vectors.ad_mul(v),
        }
    }

    /// Inverse of [`Eigen::coefficients`].
    pub fn synthesize(&self, coeffs: &DVector<C64>) -> DVector<C64> {
        match &self.basis_index {
            Some(idx) => {
                let mut out = DVector::zeros(idx.len());
                for (c, &i) in coeffs.iter().zip(idx) {
                    out[i] = *c;
                }
                out
            }
            None => self.synthesize_many(&[coeffs]).swap_remove(0),
        }
    }

    /// [`Eigen::synthesize`] for several coefficient vectors in one product.
    pub fn synthesize_many(&self, coeffs: &[&DVector<C64>]) -> Vec<DVector<C64>> {
        if self.basis_index.is_some() {
            return coeffs.iter().map(|c| self.synthesize(c)).collect();
        }
        let n = self.values.len();
        match &self.real_vectors {
            Some(r) => {
                let parts = DMatrix::from_fn(n, 2 * coeffs.len(), |i, j| {
                    let z = coeffs[j / 2][i];
                    if j % 2 == 0 { z.re } else { z.im }
                });
                let out = r * parts;
                (0..coeffs.len()).map(|k| DVector::from_fn(n, |i, _| C64::new(out[(i, 2 * k)], out[(i, 2 * k + 1)]))).collect()
            }
            None => {
                let stacked = DMatrix::from_fn(n, coeffs.len(), |i, j| coeffs[j][i]);
                let out = &self.vectors * stacked;
                (0..coeffs.len()).map(|k| out.column(k).into_owned()).collect()
            }
        }
    }

    pub fn is_basis_aligned(&self) -> bool {
        self.basis_index.is_some()
    }
}

/// Dense Hermitian matrix with an optional cached eigendecomposition.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    entries: DMatrix<C64>,
    eig: Option<Eigen>,
    basis: BasisTag,
    diagonal: bool,
}

impl HermitianOperator {
    pub fn new(entries: DMatrix<C64>, basis: BasisTag) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::validation(format!(
                "operator must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Error::check_dim(basis.dim(), entries.nrows())?;
        let dev = hermiticity_defect(&entries);
        if dev > HERMITIAN_TOL {
            return Err(Error::validation(format!(
                "operator is not Hermitian (max |A - A^H| = {dev:e})"
            )));
        }
        let n = entries.nrows();
        let diagonal = (0..n).all(|j| (0..n).all(|i| i == j || entries[(i, j)] == C64::new(0.0, 0.0)));
        Ok(Self { entries, eig: None, basis, diagonal })
    }

    /// Real diagonal operator.
    pub fn from_diagonal(diag: &[f64], basis: BasisTag) -> Result<Self> {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Self::new(DMatrix::from_diagonal(&d), basis)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    pub fn eig(&self) -> Option<&Eigen> {
        self.eig.as_ref()
    }

    pub fn require_eig(&self) -> Result<&Eigen> {
        self.eig
            .as_ref()
            .ok_or_else(|| Error::validation("operator has no eigendecomposition; call eigendecompose first"))
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        if self.diagonal {
            DVector::from_iterator(v.len(), v.iter().enumerate().map(|(i, x)| self.entries[(i, i)] * x))
        } else {
            &self.entries * v
        }
    }

    /// `<psi|A|psi>`, real by Hermiticity.
    pub fn expectation(&self, psi: &StateVector) -> Result<f64> {
        Error::check_dim(self.dim(), psi.dim())?;
        Ok(psi.amplitudes().dotc(&self.apply(psi.amplitudes())).re)
    }

    /// Largest absolute eigenvalue.
    pub fn operator_norm(&self) -> Result<f64> {
        let eig = self.require_eig()?;
        Ok(eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }

    pub fn spectral_range(&self) -> Result<(f64, f64)> {
        let eig = self.require_eig()?;
        Ok((eig.values[0], *eig.values.last().unwrap()))
    }

    pub fn eigendecomposed(self) -> Result<Self> {
        eigendecompose(self)
    }
}

fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Connected components of the graph whose edges are nonzero off-diagonal entries.
fn coupling_components(m: &DMatrix<C64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for j in 0..n {
        for i in 0..j {
            if m[(i, j)] != C64::new(0.0, 0.0) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

/// Populate the eigendecomposition of a Hermitian operator.
pub fn eigendecompose(mut op: HermitianOperator) -> Result<HermitianOperator> {
    let dev = hermiticity_defect(&op.entries);
    if dev > HERMITIAN_TOL {
        return Err(Error::validation(format!("operator is not Hermitian (max |A - A^H| = {dev:e})")));
    }
    let n = op.dim();
    if op.diagonal {
        let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (op.entries[(i, i)].re, i)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut vectors = DMatrix::zeros(n, n);
        for (col, &(_, i)) in pairs.iter().enumerate() {
            vectors[(i, col)] = C64::new(1.0, 0.0);
        }
        op.eig = Some(Eigen {
            values: pairs.iter().map(|p| p.0).collect(),
            vectors,
            basis_index: Some(pairs.iter().map(|p| p.1).collect()),
            real_vectors: None,
        });
        return Ok(op);
    }

    // (eigenvalue, block id, column within block)
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n);
    let blocks = coupling_components(&op.entries);
    let mut block_vectors = Vec::with_capacity(blocks.len());
    for (b, members) in blocks.iter().enumerate() {
        let k = members.len();
        let sub = DMatrix::from_fn(k, k, |i, j| op.entries[(members[i], members[j])]);
        let (values, vectors) = if sub.iter().all(|z| z.im == 0.0) {
            let se = sub.map(|z| z.re).symmetric_eigen();
            (se.eigenvalues, se.eigenvectors.map(|x| C64::new(x, 0.0)))
        } else {
            let se = sub.symmetric_eigen();
            (se.eigenvalues, se.eigenvectors)
        };
        for (c, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Numerical("non-finite eigenvalue".into()));
            }
            pairs.push((*v, b, c));
        }
        block_vectors.push(vectors);
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &(_, b, c)) in pairs.iter().enumerate() {
        for (r, &row) in blocks[b].iter().enumerate() {
            vectors[(row, col)] = block_vectors[b][(r, c)];
        }
    }
    let real_vectors = vectors.iter().all(|z| z.im == 0.0).then(|| vectors.map(|z| z.re));
    op.eig = Some(Eigen { values: pairs.iter().map(|p| p.0).collect(), vectors, basis_index: None, real_vectors });
    Ok(op)
}

/// Normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<C64>,
    basis: BasisTag,
}

impl StateVector {
    pub fn new(amplitudes: DVector<C64>, basis: BasisTag) -> Result<Self> {
        Error::check_dim(basis.dim(), amplitudes.len())?;
        let norm2 = amplitudes.norm_squared();
        if (norm2 - 1.0).abs() > NORM_TOL {
            return Err(Error::validation(format!("state is not normalized (|psi|^2 = {norm2})")));
        }
        Ok(Self { amplitudes, basis })
    }

    /// Normalizes the amplitudes before validating.
    pub fn normalized(amplitudes: DVector<C64>, basis: BasisTag) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::validation("cannot normalize a zero or non-finite vector"));
        }
        Self::new(amplitudes / C64::new(norm, 0.0), basis)
    }

    pub fn basis_state(basis: BasisTag, index: usize) -> Result<Self> {
        let dim = basis.dim();
        if index >= dim {
            return Err(Error::validation(format!("basis index {index} out of range for dimension {dim}")));
        }
        let mut a = DVector::zeros(dim);
        a[index] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes: a, basis })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        Error::check_dim(self.dim(), other.dim())?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix { entries: &self.amplitudes * self.amplitudes.adjoint(), basis: self.basis }
    }
}

/// Positive semidefinite, unit-trace Hermitian matrix.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    entries: DMatrix<C64>,
    basis: BasisTag,
}

impl DensityMatrix {
    pub fn new(entries: DMatrix<C64>, basis: BasisTag) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::validation("density matrix must be square"));
        }
        Error::check_dim(basis.dim(), entries.nrows())?;
        let dev = hermiticity_defect(&entries);
        if dev > HERMITIAN_TOL {
            return Err(Error::validation(format!("density matrix is not Hermitian (defect {dev:e})")));
        }
        let tr = entries.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(Error::validation(format!("density matrix trace is {tr}, expected 1")));
        }
        let rho = Self { entries, basis };
        let min = rho.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < -NORM_TOL {
            return Err(Error::validation(format!("density matrix has negative eigenvalue {min:e}")));
        }
        Ok(rho)
    }

    /// Real diagonal density matrix.
    pub fn from_diagonal(probs: &[f64], basis: BasisTag) -> Result<Self> {
        let d = DVector::from_iterator(probs.len(), probs.iter().map(|&p| C64::new(p, 0.0)));
        Self::new(DMatrix::from_diagonal(&d), basis)
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.entries.clone().symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Kronecker product `self ⊗ other`; the basis tag of `self` is kept.
    pub fn kron(&self, other: &DensityMatrix, basis: BasisTag) -> Result<DensityMatrix> {
        let entries = self.entries.kronecker(&other.entries);
        DensityMatrix::new(entries, basis)
    }
}

/// Precomputed spectral propagator for repeated evaluation of `exp(-iHt)|psi0>`.
#[derive(Debug, Clone)]
pub struct Propagator<'a> {
    eig: &'a Eigen,
    coeffs: DVector<C64>,
    basis: BasisTag,
}

impl<'a> Propagator<'a> {
    pub fn new(h: &'a HermitianOperator, psi0: &StateVector) -> Result<Self> {
        Error::check_dim(h.dim(), psi0.dim())?;
        let eig = h.require_eig()?;
        Ok(Self { eig, coeffs: eig.coefficients(psi0.amplitudes()), basis: psi0.basis() })
    }

    pub fn state_at(&self, t: f64) -> StateVector {
        let phased = self.phased(t);
        StateVector { amplitudes: self.eig.synthesize(&phased), basis: self.basis }
    }

    /// State at `t` together with `Hψ(t)`, sharing one product with the eigenvectors.
    pub fn state_and_action_at(&self, t: f64) -> (StateVector, DVector<C64>) {
        let phased = self.phased(t);
        let scaled = DVector::from_iterator(phased.len(), phased.iter().zip(&self.eig.values).map(|(c, &e)| c * e));
        let mut out = self.eig.synthesize_many(&[&phased, &scaled]);
        let action = out.pop().expect("two columns");
        let amplitudes = out.pop().expect("two columns");
        (StateVector { amplitudes, basis: self.basis }, action)
    }

    fn phased(&self, t: f64) -> DVector<C64> {
        DVector::from_iterator(
            self.coeffs.len(),
            self.coeffs.iter().zip(&self.eig.values).map(|(c, &e)| c * C64::from_polar(1.0, -e * t)),
        )
    }
}

/// `V exp(-i Λ t) V^† |psi0>` with `ħ = 1`.
pub fn evolve(h: &HermitianOperator, psi0: &StateVector, t: f64) -> Result<StateVector> {
    Ok(Propagator::new(h, psi0)?.state_at(t))
}

/// Reduced state of the collective spin after tracing out the cavity.
pub fn partial_trace_cavity(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let (n, n_max) = match rho.basis() {
        BasisTag::SpinFock { n, n_max } => (n, n_max),
        other => return Err(Error::validation(format!("partial trace over the cavity needs a spin_fock basis, got {other:?}"))),
    };
    let (ds, df) = (n + 1, n_max + 1);
    let e = rho.entries();
    let reduced = DMatrix::from_fn(ds, ds, |a, b| (0..df).map(|k| e[(a * df + k, b * df + k)]).sum::<C64>());
    DensityMatrix::new(reduced, BasisTag::CollectiveSpin { n })
}

/// Shannon entropy in bits; entries at or below [`ENTROPY_FLOOR`] are skipped.
pub fn shannon_entropy_bits(probs: &[f64]) -> f64 {
    probs.iter().filter(|&&p| p > ENTROPY_FLOOR).map(|&p| -p * p.log2()).sum()
}

/// `-Tr ρ log2 ρ`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let ev = rho.eigenvalues();
    if let Some(&neg) = ev.iter().find(|&&q| q < -NORM_TOL) {
        return Err(Error::validation(format!("negative eigenvalue {neg:e} in density matrix")));
    }
    let s = shannon_entropy_bits(&ev);
    Ok(s.clamp(0.0, (rho.dim() as f64).log2()))
}

/// One degenerate eigenspace: representative energy and the eigenvector
/// columns spanning it.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub energy: f64,
    pub members: Vec<usize>,
}

/// Distinct eigenvalues of an observable with the column groups of each level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelStructure {
    levels: Vec<Level>,
    dim: usize,
}

impl LevelStructure {
    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.members.len()).collect()
    }

    /// Sum of `values[i]` over the members of each level.
    pub fn accumulate(&self, values: &[f64]) -> Vec<f64> {
        self.levels.iter().map(|l| l.members.iter().map(|&i| values[i]).sum()).collect()
    }
}

/// Merge consecutive eigenvalues whose gap is at most `rel_tol` times the
/// spectral range.
pub fn group_levels(op: &HermitianOperator, rel_tol: f64) -> Result<LevelStructure> {
    let eig = op.require_eig()?;
    let vals = &eig.values;
    let range = vals.last().unwrap() - vals[0];
    let tol = rel_tol * range;
    let mut groups: Vec<Vec<usize>> = vec![vec![0]];
    for i in 1..vals.len() {
        if vals[i] - vals[i - 1] <= tol {
            groups.last_mut().unwrap().push(i);
        } else {
            groups.push(vec![i]);
        }
    }
    let levels = groups
        .into_iter()
        .map(|members| {
            let energy = members.iter().map(|&i| vals[i]).sum::<f64>() / members.len() as f64;
            Level { energy, members }
        })
        .collect();
    Ok(LevelStructure { levels, dim: vals.len() })
}

/// Classical fourth-order Runge-Kutta on `dψ/dt = -iHψ` with step-doubling
/// error control. Slow; kept as an independent check of spectral propagation.
pub fn rk4_reference(h: &DMatrix<C64>, psi0: &DVector<C64>, t_end: f64, tol: f64) -> DVector<C64> {
    let minus_i = C64::new(0.0, -1.0);
    let f = |v: &DVector<C64>| -> DVector<C64> { (h * v) * minus_i };
    let step = |v: &DVector<C64>, dt: f64| -> DVector<C64> {
        let half = C64::new(dt / 2.0, 0.0);
        let k1 = f(v);
        let k2 = f(&(v + &k1 * half));
        let k3 = f(&(v + &k2 * half));
        let k4 = f(&(v + &k3 * C64::new(dt, 0.0)));
        v + (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0)
    };
    let (mut t, mut dt, mut v) = (0.0f64, 1e-2f64, psi0.clone());
    let forward = t_end >= 0.0;
    let span = t_end.abs();
    while t < span {
        dt = dt.min(span - t);
        let signed = if forward { dt } else { -dt };
        let full = step(&v, signed);
        let halves = step(&step(&v, signed / 2.0), signed / 2.0);
        let err = (&full - &halves).norm() / 15.0;
        if err <= tol {
            t += dt;
            v = &halves + (&halves - &full) * C64::new(1.0 / 15.0, 0.0);
        }
        let scale = if err == 0.0 { 2.0 } else { 0.9 * (tol / err).powf(0.2) };
        dt *= scale.clamp(0.2, 2.0);
    }
    v
}
