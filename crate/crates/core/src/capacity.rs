//! Energy-entropy diagram: thermal boundary at positive and negative
//! temperature, entropy-constrained extremal energies and the capacity `C(S)`.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{shannon_entropy_bits, HermitianOperator, DEFAULT_LEVEL_TOL};

/// Required agreement between the achieved and the target entropy.
pub const ENTROPY_RESIDUAL: f64 = 1e-10;
const BETA_LO: f64 = 1e-12;
const BETA_HI: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagramPoint {
    pub e: f64,
    /// Entropy in bits.
    pub s: f64,
    /// Inverse temperature; `±∞` for the extremal level mixtures.
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Completely passive states, minimal energy.
    PositiveBeta,
    /// Population-inverted states, maximal energy.
    NegativeBeta,
}

fn degeneracy_tol(values: &[f64]) -> f64 {
    let (lo, hi) = extremes(values);
    DEFAULT_LEVEL_TOL * (hi - lo)
}

fn extremes(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
}

/// Thermal populations `∝ exp(-β E_i)`; `β = ±∞` gives the uniform mixture
/// over the lowest or highest level.
pub fn gibbs(values: &[f64], beta: f64) -> Vec<f64> {
    let (lo, hi) = extremes(values);
    if beta.is_infinite() {
        let target = if beta > 0.0 { lo } else { hi };
        let tol = degeneracy_tol(values);
        let mask: Vec<bool> = values.iter().map(|&v| (v - target).abs() <= tol).collect();
        let count = mask.iter().filter(|&&b| b).count() as f64;
        return mask.into_iter().map(|b| if b { 1.0 / count } else { 0.0 }).collect();
    }
    let shift = if beta >= 0.0 { lo } else { hi };
    let w: Vec<f64> = values.iter().map(|&v| (-beta * (v - shift)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

fn point(values: &[f64], beta: f64) -> DiagramPoint {
    let p = gibbs(values, beta);
    DiagramPoint { e: p.iter().zip(values).map(|(p, v)| p * v).sum(), s: shannon_entropy_bits(&p), beta }
}

/// Thermal boundary sampled at the given inverse temperatures.
pub fn thermal_curve(h: &HermitianOperator, betas: &[f64]) -> Result<Vec<DiagramPoint>> {
    let values = &h.require_eig()?.values;
    Ok(betas.iter().map(|&b| point(values, b)).collect())
}

/// Entropy of the extreme level mixture of a branch, the lowest entropy the
/// branch can reach.
pub fn branch_min_entropy(values: &[f64], branch: Branch) -> f64 {
    let beta = match branch {
        Branch::PositiveBeta => f64::INFINITY,
        Branch::NegativeBeta => f64::NEG_INFINITY,
    };
    shannon_entropy_bits(&gibbs(values, beta))
}

/// Thermal state of the branch with the requested entropy, found by
/// bisection on `|β|`.
pub fn solve_beta_for_entropy(h: &HermitianOperator, s_target: f64, branch: Branch) -> Result<DiagramPoint> {
    let values = &h.require_eig()?.values;
    let s_max = (values.len() as f64).log2();
    let s_min = branch_min_entropy(values, branch);
    if !s_target.is_finite() || s_target > s_max + ENTROPY_RESIDUAL || s_target < s_min - ENTROPY_RESIDUAL {
        return Err(Error::validation(format!(
            "entropy target {s_target} outside the reachable range [{s_min}, {s_max}] of the {branch:?} branch"
        )));
    }
    let sign = match branch {
        Branch::PositiveBeta => 1.0,
        Branch::NegativeBeta => -1.0,
    };
    if (s_target - s_min).abs() <= ENTROPY_RESIDUAL {
        return Ok(point(values, sign * f64::INFINITY));
    }
    if s_max - s_target <= ENTROPY_RESIDUAL {
        return Ok(point(values, 0.0));
    }
    let entropy = |b: f64| point(values, sign * b).s;
    if entropy(BETA_LO) <= s_target {
        return Ok(point(values, 0.0));
    }
    let (mut lo, mut hi) = (BETA_LO, BETA_HI);
    while entropy(hi) > s_target {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numerical(format!("no inverse temperature reaches entropy {s_target}")));
        }
    }
    let mut best = point(values, sign * hi);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let p = point(values, sign * mid);
        best = p;
        if (p.s - s_target).abs() < ENTROPY_RESIDUAL * 0.01 || mid == lo || mid == hi {
            break;
        }
        if p.s > s_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (best.s - s_target).abs() >= ENTROPY_RESIDUAL {
        return Err(Error::Numerical(format!("bisection stalled with entropy residual {:e}", (best.s - s_target).abs())));
    }
    Ok(best)
}

/// `E_max(S) - E_min(S)`.
pub fn capacity_at_entropy(h: &HermitianOperator, s: f64) -> Result<f64> {
    let values = &h.require_eig()?.values;
    let s_max = (values.len() as f64).log2();
    if !(0.0..=s_max + ENTROPY_RESIDUAL).contains(&s) {
        return Err(Error::validation(format!("entropy {s} outside [0, {s_max}]")));
    }
    if s == 0.0 {
        let (lo, hi) = extremes(values);
        return Ok(hi - lo);
    }
    let lo = solve_beta_for_entropy(h, s, Branch::PositiveBeta)?;
    let hi = solve_beta_for_entropy(h, s, Branch::NegativeBeta)?;
    Ok(hi.e - lo.e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observation1Report {
    /// `E_max(0) - E(ρ₀)`: most energy any unitary can store.
    pub store_limit: f64,
    /// `E_min(0) - E(ρ₀)`: most negative change any unitary can produce.
    pub extract_limit: f64,
    pub max_stored: f64,
    pub min_stored: f64,
    /// `max_stored / C(0)`.
    pub fraction: f64,
    pub satisfied: bool,
}

/// Compare the stored-energy series of a pure-state trajectory against the
/// zero-entropy limits of the battery.
pub fn observation1_check(stored: &[f64], h_b: &HermitianOperator, e0: f64) -> Result<Observation1Report> {
    let (lo, hi) = h_b.spectral_range()?;
    let max_stored = stored.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_stored = stored.iter().copied().fold(f64::INFINITY, f64::min);
    let store_limit = hi - e0;
    let extract_limit = lo - e0;
    let tol = crate::bounds::BOUND_REL_TOL * (hi - lo) + crate::bounds::BOUND_ABS_TOL;
    Ok(Observation1Report {
        store_limit,
        extract_limit,
        max_stored,
        min_stored,
        fraction: max_stored / (hi - lo),
        satisfied: max_stored <= store_limit + tol && min_stored >= extract_limit - tol,
    })
}

/// Uniform grid of inverse temperatures.
pub fn beta_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![min];
    }
    (0..points).map(|i| min + (max - min) * i as f64 / (points - 1) as f64).collect()
}

/// Write `beta,E,S_bits` rows.
pub fn write_diagram_csv(points: &[DiagramPoint], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(b"beta,E,S_bits\n")?;
    for p in points {
        writeln!(out, "{},{},{}", crate::harness::csvio::fmt_f64(p.beta), crate::harness::csvio::fmt_f64(p.e), crate::harness::csvio::fmt_f64(p.s))?;
    }
    out.flush()?;
    Ok(())
}
