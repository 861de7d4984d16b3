//! Power, moment, Heisenberg and entanglement bounds.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{HermitianOperator, StateVector};
use crate::observables::{fisher_from, power, variance_direct, weighted_mean_var};

/// Relative tolerance of every inequality check.
pub const BOUND_REL_TOL: f64 = 1e-8;
/// Absolute floor added to the right-hand side.
pub const BOUND_ABS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, absent when both sides vanish.
    pub ratio: Option<f64>,
    pub satisfied: bool,
}

impl BoundReport {
    pub fn new(t: f64, lhs: f64, rhs: f64) -> Self {
        Self::with_tol(t, lhs, rhs, BOUND_REL_TOL)
    }

    pub fn with_tol(t: f64, lhs: f64, rhs: f64, rel_tol: f64) -> Self {
        let ratio = if rhs > 0.0 { Some(lhs / rhs) } else if lhs.abs() <= BOUND_ABS_TOL { None } else { Some(f64::INFINITY) };
        let satisfied = lhs.is_finite() && rhs.is_finite() && lhs <= rhs * (1.0 + rel_tol) + BOUND_ABS_TOL;
        Self { t, lhs, rhs, ratio, satisfied }
    }
}

/// Moment data of a level-resolved observable: `(d⟨O^m⟩/dt)²` against
/// `Δ(O^m)² I_O` with `I_O` taken over the levels of `O`.
pub fn moment_bound_check(t: f64, energies: &[f64], p: &[f64], p_dot: &[f64], m: u32) -> BoundReport {
    let (lhs, rhs) = moment_sides(energies, p, p_dot, m);
    BoundReport::new(t, lhs, rhs)
}

pub(crate) fn moment_sides(energies: &[f64], p: &[f64], p_dot: &[f64], m: u32) -> (f64, f64) {
    let (mean, var) = weighted_mean_var(energies.iter().map(|e| e.powi(m as i32)), p);
    let rate: f64 = energies.iter().zip(p_dot).map(|(e, d)| (e.powi(m as i32) - mean) * d).sum();
    (rate * rate, var * fisher_from(p, p_dot))
}

/// `P² ≤ 4 ΔH_B² ΔH_C²` on a state.
pub fn heisenberg_bound(t: f64, psi: &StateVector, h_b: &HermitianOperator, h_c: &HermitianOperator) -> Result<BoundReport> {
    let p = power(psi, h_b, h_c)?;
    let var_b = variance_direct(psi, h_b)?;
    let var_c = variance_direct(psi, h_c)?;
    Ok(heisenberg_from(t, p, var_b, var_c))
}

pub fn heisenberg_from(t: f64, p: f64, var_hb: f64, var_hc: f64) -> BoundReport {
    BoundReport::new(t, p * p, 4.0 * var_hb * var_hc)
}

/// `P² ≤ ΔH_B² I_E`.
pub fn power_fisher_bound(t: f64, p: f64, var_hb: f64, i_e: f64) -> BoundReport {
    BoundReport::new(t, p * p, var_hb * i_e)
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::validation(format!("block size k must be in 1..={n}, got {k}")));
    }
    Ok(())
}

/// Largest battery variance of a `k`-producible state of `N` cells:
/// `(r k² + (N - r k)²) / 4` with `r = ⌊N/k⌋`.
pub fn k_producibility_variance_bound(n: usize, k: usize) -> Result<f64> {
    check_k(n, k)?;
    let r = n / k;
    let rest = n - r * k;
    Ok((r * k * k + rest * rest) as f64 / 4.0)
}

/// Smallest `k` whose `k`-producibility bound admits the observed variance.
pub fn entanglement_witness_k(var_hb: f64, n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::validation("cell count must be positive"));
    }
    if !(var_hb >= 0.0) {
        return Err(Error::validation(format!("variance must be nonnegative, got {var_hb}")));
    }
    let cap = (n * n) as f64 / 4.0;
    if var_hb > cap * (1.0 + 1e-6) {
        return Err(Error::validation(format!("variance {var_hb} exceeds N²/4 = {cap}")));
    }
    for k in 1..n {
        if var_hb <= k_producibility_variance_bound(n, k)? * (1.0 + 1e-9) {
            return Ok(k);
        }
    }
    Ok(n)
}

/// Upper bound on `P²` for `k`-producible states.
pub fn power_entanglement_bound(n: usize, k: usize, i_e: f64) -> Result<f64> {
    Ok(k_producibility_variance_bound(n, k)? * i_e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_battery, Family, JwChainSpec, JwPreset, Model, ModelSpec};
    use crate::numerics::{evolve, BasisTag, Propagator, C64};
    use crate::observables::{fisher_energy, populations_and_rates, variance};
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn model(family: Family, n: usize) -> Model {
        Model::build(&ModelSpec::new(family, n, 1.0), 1e-9).unwrap()
    }

    #[test]
    fn parallel_saturates_both_bounds() {
        let m = model(Family::Parallel, 4);
        for &t in &[0.2, 0.7, 1.3] {
            let psi = evolve(&m.h_c, &m.psi0, t).unwrap();
            let rec = populations_and_rates(&psi, &m.h_b, &m.levels, &m.h_c, t).unwrap();
            let r = moment_bound_check(t, &m.levels.energies(), &rec.p, &rec.p_dot, 1);
            assert!(r.satisfied && (r.ratio.unwrap() - 1.0).abs() < 1e-9);
            let h = heisenberg_bound(t, &psi, &m.h_b, &m.h_c).unwrap();
            assert!(h.satisfied && (h.ratio.unwrap() - 1.0).abs() < 1e-9);
            let p = power(&psi, &m.h_b, &m.h_c).unwrap();
            let var = variance(&psi, &m.h_b, 1).unwrap();
            let f = power_fisher_bound(t, p, var, fisher_energy(&rec));
            assert!((f.ratio.unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn stationary_state_is_zero_against_zero() {
        let r = moment_bound_check(0.0, &[-1.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &[0.0; 3], 1);
        assert!(r.satisfied && r.ratio.is_none());
        let hb = build_battery(2).unwrap();
        let psi = StateVector::basis_state(BasisTag::QubitChain { n: 2 }, 0).unwrap();
        let h = heisenberg_bound(0.0, &psi, &hb, &hb).unwrap();
        assert!(h.satisfied && h.lhs == 0.0);
    }

    #[test]
    fn second_moment_jw_n6() {
        let m = model(Family::JwChain(JwChainSpec::preset(JwPreset::XxNn)), 6);
        let prop = Propagator::new(&m.h_c, &m.psi0).unwrap();
        for i in 0..200 {
            let t = 0.05 * i as f64;
            let rec = populations_and_rates(&prop.state_at(t), &m.h_b, &m.levels, &m.h_c, t).unwrap();
            assert!(moment_bound_check(t, &m.levels.energies(), &rec.p, &rec.p_dot, 2).satisfied);
        }
    }

    #[test]
    fn producibility_examples() {
        assert_eq!(k_producibility_variance_bound(4, 2).unwrap(), 2.0);
        assert_eq!(k_producibility_variance_bound(7, 7).unwrap(), 49.0 / 4.0);
        assert_eq!(k_producibility_variance_bound(5, 2).unwrap(), 2.25);
        assert!(k_producibility_variance_bound(4, 0).is_err());
        assert!(k_producibility_variance_bound(4, 5).is_err());
    }

    #[test]
    fn witness_examples() {
        assert_eq!(entanglement_witness_k(6.0 / 4.0, 6).unwrap(), 1);
        assert_eq!(entanglement_witness_k(9.0, 6).unwrap(), 6);
        assert_eq!(entanglement_witness_k(2.1, 4).unwrap(), 3);
        assert!(entanglement_witness_k(4.5, 4).is_err());
    }

    #[test]
    fn corollary_two_examples() {
        // hybrid N=4, q=r=2, λ=1: I_E = 4q = 8, k=2 bound (kN/4) I_E = 16 = P² at λt = π/4
        let m = model(Family::Hybrid { q: 2, r: 2 }, 4);
        let t = std::f64::consts::FRAC_PI_4;
        let psi = evolve(&m.h_c, &m.psi0, t).unwrap();
        let rec = populations_and_rates(&psi, &m.h_b, &m.levels, &m.h_c, t).unwrap();
        let ie = fisher_energy(&rec);
        assert!((ie - 8.0).abs() < 1e-9);
        let k = entanglement_witness_k(variance(&psi, &m.h_b, 1).unwrap(), 4).unwrap();
        assert_eq!(k, 2);
        let bound = power_entanglement_bound(4, k, ie).unwrap();
        let p = power(&psi, &m.h_b, &m.h_c).unwrap();
        assert!((bound - 16.0).abs() < 1e-9 && (p * p - bound).abs() < 1e-9);
        // product states and the parallel charger
        assert!((power_entanglement_bound(4, 1, 16.0).unwrap() - 16.0).abs() < 1e-15);
        assert_eq!(power_entanglement_bound(6, 4, 1.0).unwrap(), 5.0);
    }

    fn ghz_blocks(n: usize, k: usize) -> StateVector {
        // product of GHZ states on consecutive blocks of k sites, remainder block last
        let mut blocks = Vec::new();
        let mut start = 0;
        while start < n {
            let len = k.min(n - start);
            blocks.push((start, len));
            start += len;
        }
        let dim = 1usize << n;
        let mut v = DVector::zeros(dim);
        let amp = 0.5f64.powf(blocks.len() as f64 / 2.0);
        for choice in 0..1usize << blocks.len() {
            let mut x = 0usize;
            for (b, &(s, len)) in blocks.iter().enumerate() {
                if choice >> b & 1 == 1 {
                    x |= ((1usize << len) - 1) << s;
                }
            }
            v[x] = C64::new(amp, 0.0);
        }
        StateVector::new(v, BasisTag::QubitChain { n }).unwrap()
    }

    #[test]
    fn ghz_blocks_saturate_variance_bound() {
        for (n, k) in [(4, 2), (6, 2), (6, 3), (5, 2)] {
            let hb = build_battery(n).unwrap().eigendecomposed().unwrap();
            let var = variance(&ghz_blocks(n, k), &hb, 1).unwrap();
            assert!((var - k_producibility_variance_bound(n, k).unwrap()).abs() < 1e-10, "N={n} k={k}");
        }
    }

    proptest! {
        #[test]
        fn bound_nondecreasing_in_k(n in 1usize..40) {
            let b: Vec<f64> = (1..=n).map(|k| k_producibility_variance_bound(n, k).unwrap()).collect();
            prop_assert!(b.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn witness_is_minimal(n in 1usize..30, frac in 0.0f64..1.0) {
            let var = frac * (n * n) as f64 / 4.0;
            let k = entanglement_witness_k(var, n).unwrap();
            prop_assert!(var <= k_producibility_variance_bound(n, k).unwrap() * (1.0 + 1e-9));
            if k > 1 {
                prop_assert!(var > k_producibility_variance_bound(n, k - 1).unwrap() * (1.0 + 1e-9));
            }
        }
    }
}
