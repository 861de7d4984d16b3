//! Per-time measurements on charging trajectories.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::jw::POP_FLOOR;
use crate::numerics::{
    partial_trace_cavity, shannon_entropy_bits, von_neumann_entropy, BasisTag, DensityMatrix, HermitianOperator,
    LevelStructure, StateVector, C64,
};

/// Imaginary residue tolerated in expectation values that must be real.
const IMAG_TOL: f64 = 1e-10;
/// `cos θ_P` is undefined when `√(ΔH_B² I_E)` falls below this.
pub const COS_DENOM_FLOOR: f64 = 1e-12;

/// Battery-level populations and their rates of change.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationRecord {
    pub t: f64,
    pub p: Vec<f64>,
    pub p_dot: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableRecord {
    pub t: f64,
    pub e_stored: f64,
    pub p: f64,
    pub var_hb: f64,
    pub var_hc: f64,
    pub i_e: f64,
    pub i_q: f64,
    pub cos_theta_p: Option<f64>,
}

/// `⟨ψ|H_B|ψ⟩ - ⟨ψ₀|H_B|ψ₀⟩`.
pub fn stored_energy(psi: &StateVector, h_b: &HermitianOperator, psi0: &StateVector) -> Result<f64> {
    Ok(h_b.expectation(psi)? - h_b.expectation(psi0)?)
}

/// `i⟨[H_C, H_B]⟩ = -2 Im⟨H_C ψ|H_B ψ⟩`.
pub fn power(psi: &StateVector, h_b: &HermitianOperator, h_c: &HermitianOperator) -> Result<f64> {
    Error::check_dim(h_b.dim(), psi.dim())?;
    Error::check_dim(h_c.dim(), psi.dim())?;
    let a = h_c.apply(psi.amplitudes());
    let b = h_b.apply(psi.amplitudes());
    Ok(-2.0 * a.dotc(&b).im)
}

/// Mean and variance of `values` under `weights`, two-pass so the variance
/// keeps full relative precision when it is small next to the mean.
pub(crate) fn weighted_mean_var(values: impl Iterator<Item = f64> + Clone, weights: &[f64]) -> (f64, f64) {
    let mean: f64 = values.clone().zip(weights).map(|(x, w)| w * x).sum();
    let var: f64 = values.zip(weights).map(|(x, w)| w * (x - mean) * (x - mean)).sum();
    (mean, var)
}

/// `⟨O^{2m}⟩ - ⟨O^m⟩²` in the eigenbasis of `O`.
pub fn variance(psi: &StateVector, o: &HermitianOperator, m: u32) -> Result<f64> {
    if m == 0 {
        return Err(Error::validation("moment order must be at least 1"));
    }
    Error::check_dim(o.dim(), psi.dim())?;
    let eig = o.require_eig()?;
    let c = eig.coefficients(psi.amplitudes());
    let w: Vec<f64> = c.iter().map(|z| z.norm_sqr()).collect();
    Ok(weighted_mean_var(eig.values.iter().map(|v| v.powi(m as i32)), &w).1)
}

/// Variance `‖(A - ⟨A⟩)ψ‖²` without an eigendecomposition.
pub fn variance_direct(psi: &StateVector, a: &HermitianOperator) -> Result<f64> {
    Error::check_dim(a.dim(), psi.dim())?;
    let av = a.apply(psi.amplitudes());
    let mean = psi.amplitudes().dotc(&av);
    if mean.im.abs() > IMAG_TOL {
        return Err(Error::Numerical(format!("expectation of a Hermitian operator has imaginary part {:e}", mean.im)));
    }
    Ok((av - psi.amplitudes() * C64::new(mean.re, 0.0)).norm_squared())
}

/// `p_k = Σ_{i∈k} |⟨v_i|ψ⟩|²` and `ṗ_k = 2 Im⟨ψ|P_k H_C|ψ⟩` over the levels of `h_b`.
pub fn populations_and_rates(
    psi: &StateVector,
    h_b: &HermitianOperator,
    levels: &LevelStructure,
    h_c: &HermitianOperator,
    t: f64,
) -> Result<PopulationRecord> {
    Error::check_dim(h_b.dim(), psi.dim())?;
    Error::check_dim(h_c.dim(), psi.dim())?;
    Error::check_dim(levels.dim(), psi.dim())?;
    record_from(psi.amplitudes(), &h_c.apply(psi.amplitudes()), h_b, levels, t)
}

/// Level record from `ψ` and `H_C ψ` already at hand.
pub(crate) fn record_from(
    psi: &DVector<C64>,
    hc_psi: &DVector<C64>,
    h_b: &HermitianOperator,
    levels: &LevelStructure,
    t: f64,
) -> Result<PopulationRecord> {
    let eig = h_b.require_eig()?;
    let a = eig.coefficients(psi);
    let b = eig.coefficients(hc_psi);
    let probs: Vec<f64> = a.iter().map(|z| z.norm_sqr()).collect();
    let rates: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| 2.0 * (x.conj() * y).im).collect();
    Ok(PopulationRecord { t, p: levels.accumulate(&probs), p_dot: levels.accumulate(&rates) })
}

/// `Σ_k ṗ_k² / p_k` over populations above the floor.
pub fn fisher_energy(rec: &PopulationRecord) -> f64 {
    fisher_from(&rec.p, &rec.p_dot)
}

pub(crate) fn fisher_from(p: &[f64], p_dot: &[f64]) -> f64 {
    p.iter().zip(p_dot).filter(|(&p, _)| p > POP_FLOOR).map(|(&p, &d)| d * d / p).sum()
}

fn density_eigen(rho: &DensityMatrix) -> (Vec<f64>, DMatrix<C64>) {
    let se = rho.entries().clone().symmetric_eigen();
    (se.eigenvalues.iter().copied().collect(), se.eigenvectors)
}

/// `Σ_{i≠j} (p_i - p_j)² / (p_i + p_j) |⟨i|H|j⟩|²` in the eigenbasis of `ρ`.
pub fn qfi(rho: &DensityMatrix, h: &HermitianOperator) -> Result<f64> {
    Error::check_dim(h.dim(), rho.dim())?;
    let (p, u) = density_eigen(rho);
    let hu = u.adjoint() * h.entries() * &u;
    let mut sum = 0.0;
    for i in 0..p.len() {
        for j in 0..p.len() {
            let s = p[i] + p[j];
            if i == j || s <= 1e-14 {
                continue;
            }
            sum += (p[i] - p[j]).powi(2) / s * hu[(i, j)].norm_sqr();
        }
    }
    Ok((2.0 * sum).max(0.0))
}

fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let se = m.clone().symmetric_eigen();
    let d = se.eigenvalues.map(|x| C64::new(x.max(0.0).sqrt(), 0.0));
    &se.eigenvectors * DMatrix::from_diagonal(&d) * se.eigenvectors.adjoint()
}

/// `arccos F(ρ, σ)` with root fidelity `F = Tr √(√ρ σ √ρ)`.
pub fn bures_angle(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Error::check_dim(rho.dim(), sigma.dim())?;
    let s = psd_sqrt(rho.entries());
    let inner = &s * sigma.entries() * &s;
    let inner = (&inner + inner.adjoint()) * C64::new(0.5, 0.0);
    let f = inner.symmetric_eigenvalues().iter().map(|x| x.max(0.0).sqrt()).sum::<f64>();
    Ok(f.clamp(0.0, 1.0).acos())
}

/// `arccos |⟨φ|ψ⟩|`.
pub fn fubini_study(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    Ok(phi.inner(psi)?.norm().clamp(0.0, 1.0).acos())
}

/// `Σ_k p_k log₂(p_k / q_k)` in bits.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    Error::check_dim(p.len(), q.len())?;
    let mut sum = 0.0;
    for (&pk, &qk) in p.iter().zip(q) {
        if pk <= 0.0 {
            continue;
        }
        if qk <= 0.0 {
            return Err(Error::validation("KL divergence undefined: q vanishes where p does not"));
        }
        sum += pk * (pk / qk).log2();
    }
    Ok(sum.max(0.0))
}

/// Trapezoidal integral of a uniformly sampled speed.
pub fn trajectory_length(speeds: &[f64], dt: f64) -> Result<f64> {
    Ok(time_average(speeds, dt)? * dt * (speeds.len() - 1) as f64)
}

/// Split the battery variance into single-cell variances and pair covariances.
pub fn variance_decomposition(psi: &StateVector, h_list: &[HermitianOperator]) -> Result<(f64, f64)> {
    let applied: Vec<_> = h_list
        .iter()
        .map(|h| {
            Error::check_dim(h.dim(), psi.dim())?;
            Ok(h.apply(psi.amplitudes()))
        })
        .collect::<Result<_>>()?;
    let means: Vec<f64> = applied.iter().map(|v| psi.amplitudes().dotc(v).re).collect();
    let mut local = 0.0;
    let mut corr = 0.0;
    for i in 0..applied.len() {
        local += applied[i].norm_squared() - means[i] * means[i];
        for j in 0..applied.len() {
            if i != j {
                corr += applied[i].dotc(&applied[j]).re - means[i] * means[j];
            }
        }
    }
    Ok((local, corr))
}

/// `P / √(ΔH_B² I_E)`, `None` when the denominator is below [`COS_DENOM_FLOOR`].
pub fn cos_theta_p(p: f64, var_hb: f64, i_e: f64) -> Option<f64> {
    let d2 = var_hb * i_e;
    if !(d2 > COS_DENOM_FLOOR * COS_DENOM_FLOOR) {
        return None;
    }
    Some(p / d2.sqrt())
}

/// Trapezoidal mean of a uniformly sampled series.
pub fn time_average(series: &[f64], dt: f64) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::validation("time average needs at least two samples"));
    }
    if !(dt > 0.0) {
        return Err(Error::validation("time step must be positive"));
    }
    let n = series.len();
    let inner: f64 = series[1..n - 1].iter().sum();
    let integral = dt * (inner + 0.5 * (series[0] + series[n - 1]));
    Ok(integral / (dt * (n - 1) as f64))
}

/// Entropy of the spin after tracing out the cavity, divided by `log₂(N+1)`.
pub fn battery_entanglement_entropy(psi: &StateVector) -> Result<f64> {
    let n = match psi.basis() {
        BasisTag::SpinFock { n, .. } => n,
        other => return Err(Error::validation(format!("entanglement entropy needs a spin_fock state, got {other:?}"))),
    };
    let rb = partial_trace_cavity(&psi.to_density())?;
    Ok(von_neumann_entropy(&rb)? / ((n + 1) as f64).log2())
}

/// Shannon entropy in bits of a level distribution.
pub fn level_entropy_bits(p: &[f64]) -> f64 {
    shannon_entropy_bits(p)
}
