//! Battery and charger Hamiltonians with their initial states.
//!
//! Qubit families use the computational basis with site `j` stored in bit `j`
//! of the basis index and `σ_z|0⟩ = -|0⟩`, so `|0…0⟩` (index 0) is the battery
//! ground state. LMG lives in the maximal-spin sector and Dicke in the
//! collective spin tensored with a truncated Fock space.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jw::MomentumSector;
use crate::numerics::{group_levels, BasisTag, HermitianOperator, LevelStructure, StateVector, C64};

pub const MAX_BATTERY_QUBITS: usize = 14;
pub const MAX_JW_QUBITS: usize = 12;

/// Named coupling sets for the Jordan-Wigner solvable chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JwPreset {
    /// `λ_1 = γ_1 = 1`.
    XxNn,
    /// `λ_m = 0`, `γ_1 = 1`.
    XyNn,
    /// `λ_m = γ_m = m^-2`.
    XxPow,
    /// `λ_m = 0`, `γ_m = m^-2`.
    XyPow,
}

impl JwPreset {
    pub const ALL: [JwPreset; 4] = [JwPreset::XxNn, JwPreset::XyNn, JwPreset::XxPow, JwPreset::XyPow];

    pub fn name(&self) -> &'static str {
        match self {
            JwPreset::XxNn => "xx_nn",
            JwPreset::XyNn => "xy_nn",
            JwPreset::XxPow => "xx_pow",
            JwPreset::XyPow => "xy_pow",
        }
    }

    /// Coupling lists for `n` sites; power-law presets run to `range`,
    /// defaulting to `n/2 - 1`.
    pub fn couplings(&self, n: usize, range: Option<usize>) -> (Vec<f64>, Vec<f64>) {
        let m_max = range.unwrap_or((n / 2).saturating_sub(1)).max(1);
        let pow: Vec<f64> = (1..=m_max).map(|m| (m as f64).powi(-2)).collect();
        match self {
            JwPreset::XxNn => (vec![1.0], vec![1.0]),
            JwPreset::XyNn => (vec![0.0], vec![1.0]),
            JwPreset::XxPow => (pow.clone(), pow),
            JwPreset::XyPow => (vec![0.0; m_max], pow),
        }
    }
}

/// Which propagation path a chain uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JwSolver {
    /// Exact diagonalization when the qubit basis fits, closed form otherwise.
    #[default]
    Auto,
    Exact,
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JwChainSpec {
    #[serde(default)]
    pub preset: Option<JwPreset>,
    /// `λ_m` for `m = 1..`; ignored when a preset is given.
    #[serde(default)]
    pub lambdas: Vec<f64>,
    /// `γ_m` for `m = 1..`; ignored when a preset is given.
    #[serde(default)]
    pub gammas: Vec<f64>,
    /// Longest coupling range for power-law presets.
    #[serde(default)]
    pub range: Option<usize>,
    #[serde(default)]
    pub sector: MomentumSector,
    #[serde(default)]
    pub solver: JwSolver,
}

impl JwChainSpec {
    pub fn preset(preset: JwPreset) -> Self {
        Self { preset: Some(preset), lambdas: vec![], gammas: vec![], range: None, sector: MomentumSector::default(), solver: JwSolver::Auto }
    }

    /// Resolved `(λ_m, γ_m)` lists of equal length.
    pub fn couplings(&self, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let (mut l, mut g) = match self.preset {
            Some(p) => {
                if !self.lambdas.is_empty() || !self.gammas.is_empty() {
                    return Err(Error::Config("jw_chain takes either a preset or explicit coupling lists, not both".into()));
                }
                p.couplings(n, self.range)
            }
            None => (self.lambdas.clone(), self.gammas.clone()),
        };
        let m = l.len().max(g.len());
        if m == 0 {
            return Err(Error::Config("jw_chain needs a preset or at least one coupling".into()));
        }
        l.resize(m, 0.0);
        g.resize(m, 0.0);
        if m >= n {
            return Err(Error::validation(format!("coupling range {m} must be below the chain length {n}")));
        }
        Ok((l, g))
    }
}

fn default_gamma() -> f64 {
    -1.0
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    Parallel,
    Global,
    Hybrid { q: usize, r: usize },
    JwChain(JwChainSpec),
    Lmg {
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
    Dicke {
        /// Initial Fock truncation; `None` starts from `2N + 8`.
        #[serde(default)]
        n_max: Option<usize>,
        /// Use the `2λ/√N` coupling; `false` gives `2λ`.
        #[serde(default = "default_true")]
        normalized: bool,
    },
}

impl Family {
    pub fn is_paradigmatic(&self) -> bool {
        matches!(self, Family::Parallel | Family::Global | Family::Hybrid { .. })
    }

    pub fn label(&self) -> String {
        match self {
            Family::Parallel => "parallel".into(),
            Family::Global => "global".into(),
            Family::Hybrid { q, r } => format!("hybrid_q{q}_r{r}"),
            Family::JwChain(s) => match s.preset {
                Some(p) => format!("jw_{}", p.name()),
                None => "jw_custom".into(),
            },
            Family::Lmg { .. } => "lmg".into(),
            Family::Dicke { .. } => "dicke".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: Family,
    /// Number of battery cells.
    pub n: usize,
    /// Coupling strength; sets the unit of time. Chain couplings are absolute
    /// and use `lambda` only as the time unit.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

fn default_lambda() -> f64 {
    1.0
}

impl ModelSpec {
    pub fn new(family: Family, n: usize, lambda: f64) -> Self {
        Self { family, n, lambda }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::validation("cell count must be positive"));
        }
        if !self.lambda.is_finite() || self.lambda <= 0.0 {
            return Err(Error::validation(format!("lambda must be positive and finite, got {}", self.lambda)));
        }
        match &self.family {
            Family::Hybrid { q, r } if q * r != self.n || *q == 0 || *r == 0 => {
                Err(Error::validation(format!("hybrid needs q*r = N, got q={q}, r={r}, N={}", self.n)))
            }
            Family::JwChain(s) => {
                if !self.n.is_multiple_of(2) {
                    return Err(Error::validation("jw_chain needs an even number of sites"));
                }
                s.couplings(self.n).map(|_| ())
            }
            Family::Dicke { n_max: Some(k), .. } if *k < self.n + 2 => {
                Err(Error::validation(format!("dicke n_max must be at least N+2 = {}, got {k}", self.n + 2)))
            }
            _ => Ok(()),
        }
    }

    pub fn basis(&self) -> BasisTag {
        match self.family {
            Family::Lmg { .. } => BasisTag::CollectiveSpin { n: self.n },
            Family::Dicke { n_max, .. } => BasisTag::SpinFock { n: self.n, n_max: n_max.unwrap_or(2 * self.n + 8) },
            _ => BasisTag::QubitChain { n: self.n },
        }
    }
}

fn real_matrix(m: DMatrix<f64>) -> DMatrix<C64> {
    m.map(|x| C64::new(x, 0.0))
}

fn check_qubits(n: usize, cap: usize) -> Result<()> {
    if n == 0 || n > cap {
        return Err(Error::Capacity(format!(
            "{n} qubits requested; the dense qubit basis supports 1..={cap} (dimension 2^{cap})"
        )));
    }
    Ok(())
}

/// `½ Σ_j σ_z^j`, diagonal with eigenvalue `w - N/2` on states with `w` excitations.
pub fn build_battery(n: usize) -> Result<HermitianOperator> {
    check_qubits(n, MAX_BATTERY_QUBITS)?;
    let diag: Vec<f64> = (0..1usize << n).map(|x| x.count_ones() as f64 - n as f64 / 2.0).collect();
    HermitianOperator::from_diagonal(&diag, BasisTag::QubitChain { n })
}

/// Single-cell terms `½ σ_z^j` of the qubit battery.
pub fn cell_terms(n: usize) -> Result<Vec<HermitianOperator>> {
    check_qubits(n, MAX_BATTERY_QUBITS)?;
    (0..n)
        .map(|j| {
            let diag: Vec<f64> = (0..1usize << n).map(|x| if x >> j & 1 == 1 { 0.5 } else { -0.5 }).collect();
            HermitianOperator::from_diagonal(&diag, BasisTag::QubitChain { n })
        })
        .collect()
}

/// Sum of `coef · Π σ_x` over the given flip masks.
fn flip_sum(n: usize, terms: &[(usize, f64)]) -> DMatrix<f64> {
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    for x in 0..dim {
        for &(mask, coef) in terms {
            m[(x ^ mask, x)] += coef;
        }
    }
    m
}

/// Parallel, global or hybrid `σ_x` charger scaled by `λ`.
pub fn build_charger_paradigmatic(spec: &ModelSpec) -> Result<HermitianOperator> {
    spec.validate()?;
    let n = spec.n;
    check_qubits(n, MAX_BATTERY_QUBITS)?;
    let (q, r) = match spec.family {
        Family::Parallel => (n, 1),
        Family::Global => (1, n),
        Family::Hybrid { q, r } => (q, r),
        ref other => return Err(Error::validation(format!("{} is not a paradigmatic charger", other.label()))),
    };
    let block = (1usize << r) - 1;
    let terms: Vec<(usize, f64)> = (0..q).map(|j| (block << (r * j), spec.lambda)).collect();
    HermitianOperator::new(real_matrix(flip_sum(n, &terms)), BasisTag::QubitChain { n })
}

/// Apply a Pauli string to basis state `x`; returns the phase and the image.
/// `ops` holds `(site, kind)` with kind `b'x'`, `b'y'` or `b'z'`.
fn pauli_string(x: usize, ops: &[(usize, u8)]) -> (C64, usize) {
    let mut phase = C64::new(1.0, 0.0);
    let mut y = x;
    for &(site, kind) in ops {
        let bit = y >> site & 1;
        match kind {
            b'x' => y ^= 1 << site,
            b'y' => {
                // Y|0> = -i|1>, Y|1> = i|0>
                phase *= if bit == 0 { C64::new(0.0, -1.0) } else { C64::new(0.0, 1.0) };
                y ^= 1 << site;
            }
            _ => {
                if bit == 0 {
                    phase = -phase;
                }
            }
        }
    }
    (phase, y)
}

/// `H_B + ½ Σ_j Σ_m [(λ_m+γ_m) X_j Z…Z X_{j+m} + (λ_m-γ_m) Y_j Z…Z Y_{j+m}]`
/// on a periodic chain.
pub fn build_jw_chain(n: usize, lambdas: &[f64], gammas: &[f64]) -> Result<HermitianOperator> {
    check_qubits(n, MAX_JW_QUBITS)?;
    if lambdas.len() != gammas.len() {
        return Err(Error::validation("lambda and gamma lists must have equal length"));
    }
    if lambdas.len() >= n {
        return Err(Error::validation(format!("coupling range {} must be below the chain length {n}", lambdas.len())));
    }
    let dim = 1usize << n;
    let mut h = DMatrix::<C64>::zeros(dim, dim);
    for x in 0..dim {
        h[(x, x)] = C64::new(x.count_ones() as f64 - n as f64 / 2.0, 0.0);
    }
    let mut ops = Vec::with_capacity(n);
    for (mi, (&lm, &gm)) in lambdas.iter().zip(gammas).enumerate() {
        let m = mi + 1;
        for j in 0..n {
            for (kind, coef) in [(b'x', 0.5 * (lm + gm)), (b'y', 0.5 * (lm - gm))] {
                if coef == 0.0 {
                    continue;
                }
                ops.clear();
                ops.push((j, kind));
                ops.extend((1..m).map(|s| ((j + s) % n, b'z')));
                ops.push(((j + m) % n, kind));
                for x in 0..dim {
                    let (ph, y) = pauli_string(x, &ops);
                    h[(y, x)] += ph * coef;
                }
            }
        }
    }
    // remove round-off asymmetry from accumulated phases
    let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
    HermitianOperator::new(h, BasisTag::QubitChain { n })
}

/// One-site cyclic translation `j -> j+1 (mod N)` as a permutation matrix.
pub fn cyclic_shift(n: usize) -> DMatrix<C64> {
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    let mask = dim - 1;
    for x in 0..dim {
        let y = ((x << 1) | (x >> (n - 1))) & mask;
        m[(y, x)] = C64::new(1.0, 0.0);
    }
    m
}

/// `J_z` and `J_+` in the spin-`N/2` basis ordered `m = -N/2..N/2`.
pub fn collective_spin(n: usize) -> (Vec<f64>, DMatrix<f64>) {
    let j = n as f64 / 2.0;
    let d = n + 1;
    let jz: Vec<f64> = (0..d).map(|i| i as f64 - j).collect();
    let mut jp = DMatrix::zeros(d, d);
    for i in 0..d - 1 {
        let m = jz[i];
        jp[(i + 1, i)] = (j * (j + 1.0) - m * (m + 1.0)).sqrt();
    }
    (jz, jp)
}

/// `(H_LMG, J_z)` in the maximal-spin sector.
pub fn build_lmg(n: usize, lambda: f64, gamma: f64) -> Result<(HermitianOperator, HermitianOperator)> {
    if n == 0 {
        return Err(Error::validation("LMG needs at least one spin"));
    }
    let basis = BasisTag::CollectiveSpin { n };
    let (jz, jp) = collective_spin(n);
    let jm = jp.transpose();
    let d = n + 1;
    let mix = &jp * &jm + &jm * &jp - DMatrix::identity(d, d) * n as f64;
    let pair = &jp * &jp + &jm * &jm;
    let mut h = (mix * (1.0 + gamma) + pair * (1.0 - gamma)) * (lambda / (2.0 * n as f64));
    for i in 0..d {
        h[(i, i)] += jz[i];
    }
    let h = (&h + h.transpose()) * 0.5;
    Ok((HermitianOperator::new(real_matrix(h), basis)?, HermitianOperator::from_diagonal(&jz, basis)?))
}

/// `(H_DK, J_z ⊗ I)` with `H_DK = J_z + a†a + g J_x (a + a†)`, `g = 2λ/√N`
/// when `normalized`, else `2λ`.
pub fn build_dicke(n: usize, lambda: f64, n_max: usize, normalized: bool) -> Result<(HermitianOperator, HermitianOperator)> {
    if n == 0 {
        return Err(Error::validation("Dicke needs at least one spin"));
    }
    if n_max < n + 2 {
        return Err(Error::validation(format!("dicke n_max must be at least N+2 = {}, got {n_max}", n + 2)));
    }
    let basis = BasisTag::SpinFock { n, n_max };
    let (jz, jp) = collective_spin(n);
    let jx = (&jp + jp.transpose()) * 0.5;
    let nf = n_max + 1;
    let ds = n + 1;
    let g = if normalized { 2.0 * lambda / (n as f64).sqrt() } else { 2.0 * lambda };
    let dim = ds * nf;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    let mut hb = vec![0.0; dim];
    for (s, &z) in jz.iter().enumerate().take(ds) {
        for k in 0..nf {
            let i = s * nf + k;
            h[(i, i)] = z + k as f64;
            hb[i] = z;
        }
    }
    for s in 0..ds {
        for s2 in 0..ds {
            let x = jx[(s2, s)];
            if x == 0.0 {
                continue;
            }
            for k in 0..nf - 1 {
                // a† |k> = sqrt(k+1) |k+1>
                let amp = g * x * ((k + 1) as f64).sqrt();
                h[(s2 * nf + k + 1, s * nf + k)] += amp;
                h[(s2 * nf + k, s * nf + k + 1)] += amp;
            }
        }
    }
    Ok((HermitianOperator::new(real_matrix(h), basis)?, HermitianOperator::from_diagonal(&hb, basis)?))
}

/// Ground state of the battery, with `N` photons in the cavity for Dicke.
pub fn initial_state(spec: &ModelSpec) -> Result<StateVector> {
    let basis = spec.basis();
    let index = match basis {
        BasisTag::SpinFock { n, .. } => n,
        _ => 0,
    };
    StateVector::basis_state(basis, index)
}

/// A fully assembled model: battery, generator, initial state and the
/// battery's level structure, all with eigendecompositions.
#[derive(Debug, Clone)]
pub struct Model {
    pub spec: ModelSpec,
    pub h_b: HermitianOperator,
    pub h_c: HermitianOperator,
    pub psi0: StateVector,
    pub levels: LevelStructure,
}

impl Model {
    pub fn build(spec: &ModelSpec, level_tol: f64) -> Result<Model> {
        spec.validate()?;
        let n = spec.n;
        let (h_c, h_b) = match &spec.family {
            Family::Parallel | Family::Global | Family::Hybrid { .. } => (build_charger_paradigmatic(spec)?, build_battery(n)?),
            Family::JwChain(s) => {
                let (l, g) = s.couplings(n)?;
                (build_jw_chain(n, &l, &g)?, build_battery(n)?)
            }
            Family::Lmg { gamma } => build_lmg(n, spec.lambda, *gamma)?,
            Family::Dicke { n_max, normalized } => build_dicke(n, spec.lambda, n_max.unwrap_or(2 * n + 8), *normalized)?,
        };
        let h_b = h_b.eigendecomposed()?;
        let h_c = h_c.eigendecomposed()?;
        let levels = group_levels(&h_b, crate::numerics::DEFAULT_LEVEL_TOL.max(level_tol))?;
        Ok(Model { psi0: initial_state(spec)?, spec: spec.clone(), h_b, h_c, levels })
    }

    /// Same model with a different Dicke truncation.
    pub fn with_n_max(&self, n_max: usize, level_tol: f64) -> Result<Model> {
        let mut spec = self.spec.clone();
        match &mut spec.family {
            Family::Dicke { n_max: k, .. } => *k = Some(n_max),
            _ => return Err(Error::validation("only Dicke models carry a Fock truncation")),
        }
        Model::build(&spec, level_tol)
    }

    pub fn cells(&self) -> usize {
        self.spec.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{evolve, testutil::max_abs_diff};

    fn variance_on(h: &HermitianOperator, psi: &StateVector) -> f64 {
        let hv = h.apply(psi.amplitudes());
        let mean = psi.amplitudes().dotc(&hv).re;
        hv.norm_squared() - mean * mean
    }

    #[test]
    fn battery_spectra() {
        let b1 = build_battery(1).unwrap().eigendecomposed().unwrap();
        assert_eq!(b1.eig().unwrap().values, vec![-0.5, 0.5]);
        let b2 = build_battery(2).unwrap().eigendecomposed().unwrap();
        assert_eq!(b2.eig().unwrap().values, vec![-1.0, 0.0, 0.0, 1.0]);
        for n in 1..=8 {
            let (lo, hi) = build_battery(n).unwrap().eigendecomposed().unwrap().spectral_range().unwrap();
            assert_eq!(hi - lo, n as f64);
        }
        assert!(matches!(build_battery(15), Err(Error::Capacity(_))));
    }

    fn spec(family: Family, n: usize, lambda: f64) -> ModelSpec {
        ModelSpec::new(family, n, lambda)
    }

    #[test]
    fn paradigmatic_ground_variances() {
        let lambda = 0.8;
        let psi = StateVector::basis_state(BasisTag::QubitChain { n: 4 }, 0).unwrap();
        let par = build_charger_paradigmatic(&spec(Family::Parallel, 4, lambda)).unwrap().eigendecomposed().unwrap();
        assert!((variance_on(&par, &psi) - 4.0 * lambda * lambda).abs() < 1e-12);
        assert!((par.operator_norm().unwrap() - 4.0 * lambda).abs() < 1e-12);
        let glob = build_charger_paradigmatic(&spec(Family::Global, 4, lambda)).unwrap();
        assert!((variance_on(&glob, &psi) - lambda * lambda).abs() < 1e-12);
        let hyb = build_charger_paradigmatic(&spec(Family::Hybrid { q: 2, r: 2 }, 4, lambda)).unwrap();
        assert!((variance_on(&hyb, &psi) - 2.0 * lambda * lambda).abs() < 1e-12);
        assert!(build_charger_paradigmatic(&spec(Family::Hybrid { q: 3, r: 2 }, 4, lambda)).is_err());
    }

    #[test]
    fn paradigmatic_full_charge_at_quarter_period() {
        for family in [Family::Parallel, Family::Global, Family::Hybrid { q: 2, r: 3 }] {
            let s = spec(family, 6, 1.3);
            let m = Model::build(&s, 1e-9).unwrap();
            let psi = evolve(&m.h_c, &m.psi0, std::f64::consts::FRAC_PI_2 / 1.3).unwrap();
            let e = m.h_b.expectation(&psi).unwrap() - m.h_b.expectation(&m.psi0).unwrap();
            assert!((e - 6.0).abs() < 1e-9, "{e}");
        }
    }

    #[test]
    fn xx_nearest_neighbour_is_sigma_x_pairs() {
        let n = 4;
        let h = build_jw_chain(n, &[1.0], &[1.0]).unwrap();
        let battery = build_battery(n).unwrap();
        let mut pairs = DMatrix::<C64>::zeros(16, 16);
        for j in 0..n {
            let mask = (1 << j) | (1 << ((j + 1) % n));
            for x in 0..16usize {
                // X_j Z(empty) X_{j+1}, no string for nearest neighbours
                pairs[(x ^ mask, x)] += C64::new(1.0, 0.0);
            }
        }
        let expected = battery.entries() + pairs;
        assert!(max_abs_diff(h.entries(), &expected) < 1e-12);
    }

    #[test]
    fn jw_translation_invariance() {
        for (l, g) in [(vec![1.0], vec![1.0]), (vec![0.0, 0.0], vec![1.0, 0.25]), (vec![1.0, 0.25], vec![1.0, 0.25])] {
            let n = 6;
            let h = build_jw_chain(n, &l, &g).unwrap();
            let t = cyclic_shift(n);
            let comm = h.entries() * &t - &t * h.entries();
            assert!(comm.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-10);
        }
    }

    #[test]
    fn jw_without_pairing_commutes_with_battery() {
        let h = build_jw_chain(6, &[0.7, 0.2], &[0.0, 0.0]).unwrap();
        let b = build_battery(6).unwrap();
        let comm = h.entries() * b.entries() - b.entries() * h.entries();
        assert!(comm.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);
    }

    #[test]
    fn jw_xy_spectrum_matches_pair_energies() {
        // each (k,-k) pair block has eigenvalues ±ω_k, so the ground energy is
        // -Σω_k and flipping one pair adds 2ω_k
        let n = 8;
        let h = build_jw_chain(n, &[0.0], &[1.0]).unwrap().eigendecomposed().unwrap();
        let modes = crate::jw::dispersion(n, &[0.0], &[1.0], MomentumSector::Antiperiodic).unwrap();
        let e0 = -modes.omega.iter().sum::<f64>();
        let vals = &h.eig().unwrap().values;
        assert!((vals[0] - e0).abs() < 1e-10, "ground {} vs {e0}", vals[0]);
        for w in &modes.omega {
            let target = e0 + 2.0 * w;
            assert!(vals.iter().any(|v| (v - target).abs() < 1e-9), "missing {target}");
        }
    }

    #[test]
    fn jw_range_must_fit() {
        assert!(build_jw_chain(4, &[1.0; 4], &[1.0; 4]).is_err());
        assert!(matches!(build_jw_chain(13, &[1.0], &[1.0]), Err(Error::Capacity(_))));
    }

    #[test]
    fn lmg_spectrum_and_variance_limit() {
        let (_, jz) = build_lmg(4, 1.0, -1.0).unwrap();
        let jz = jz.eigendecomposed().unwrap();
        assert_eq!(jz.eig().unwrap().values, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        let lambda = 1.5;
        let (h, _) = build_lmg(200, lambda, -1.0).unwrap();
        let psi = StateVector::basis_state(BasisTag::CollectiveSpin { n: 200 }, 0).unwrap();
        let var = variance_on(&h, &psi);
        let limit = lambda * lambda * 4.0 / 2.0;
        assert!((var - limit).abs() < 5.0 * limit / 200.0, "{var} vs {limit}");
    }

    #[test]
    fn lmg_isotropic_stores_nothing() {
        let s = spec(Family::Lmg { gamma: 1.0 }, 6, 2.0);
        let m = Model::build(&s, 1e-9).unwrap();
        for t in [0.3, 1.0, 4.0] {
            let psi = evolve(&m.h_c, &m.psi0, t).unwrap();
            let e = m.h_b.expectation(&psi).unwrap() - m.h_b.expectation(&m.psi0).unwrap();
            assert!(e.abs() < 1e-12);
        }
    }

    #[test]
    fn dicke_matrix_element() {
        let (n, n_max, lambda) = (4, 8, 0.3);
        let (h, _) = build_dicke(n, lambda, n_max, true).unwrap();
        let nf = n_max + 1;
        let j = n as f64 / 2.0;
        for s in 0..n {
            for k in 1..nf {
                let m = s as f64 - j;
                let expected = 2.0 * lambda / (n as f64).sqrt() * 0.5 * (j * (j + 1.0) - m * (m + 1.0)).sqrt() * (k as f64).sqrt();
                let got = h.entries()[((s + 1) * nf + k - 1, s * nf + k)];
                assert!((got.re - expected).abs() < 1e-12 && got.im == 0.0);
            }
        }
    }

    #[test]
    fn dicke_decoupled_spectrum() {
        let (h, _) = build_dicke(1, 0.0, 3, true).unwrap();
        let h = h.eigendecomposed().unwrap();
        let mut expected: Vec<f64> = [-0.5, 0.5].iter().flat_map(|m| (0..4).map(move |k| m + k as f64)).collect();
        expected.sort_by(f64::total_cmp);
        assert_eq!(h.eig().unwrap().values, expected);
        assert!(build_dicke(4, 0.1, 5, true).is_err());
    }

    #[test]
    fn initial_states() {
        let p = initial_state(&spec(Family::Parallel, 3, 1.0)).unwrap();
        assert_eq!(p.amplitudes()[0], C64::new(1.0, 0.0));
        let l = initial_state(&spec(Family::Lmg { gamma: -1.0 }, 4, 1.0)).unwrap();
        assert_eq!(l.dim(), 5);
        assert_eq!(l.amplitudes()[0], C64::new(1.0, 0.0));
        let d = initial_state(&spec(Family::Dicke { n_max: Some(6), normalized: true }, 2, 1.0)).unwrap();
        assert_eq!(d.dim(), 21);
        assert_eq!(d.amplitudes()[2], C64::new(1.0, 0.0));
    }

    #[test]
    fn every_model_is_hermitian_after_build() {
        let specs = [
            spec(Family::Parallel, 3, 1.0),
            spec(Family::JwChain(JwChainSpec::preset(JwPreset::XyPow)), 6, 1.0),
            spec(Family::Lmg { gamma: -0.3 }, 7, 5.0),
            spec(Family::Dicke { n_max: None, normalized: false }, 3, 0.4),
        ];
        for s in &specs {
            let m = Model::build(s, 1e-9).unwrap();
            let e = m.h_c.eig().unwrap();
            let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(e.values.len(), e.values.iter().map(|&x| C64::new(x, 0.0))));
            assert!(max_abs_diff(&(&e.vectors * lam * e.vectors.adjoint()), m.h_c.entries()) < 1e-10);
        }
    }
}
