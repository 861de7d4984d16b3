//! Closed-form dynamics of the Jordan-Wigner solvable chains started from the
//! fermionic vacuum `|0…0⟩`.
//!
//! Every `(k, -k)` momentum pair evolves independently: the pair is occupied
//! with probability `q_k = ε_k / 2`, and the particle-number distribution is
//! the Poisson-binomial law of those independent pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor below which a level population is excluded from Fisher sums. Each
/// term `ṗ²/p` is bounded by the squared charging amplitude into the level, so
/// the floor only has to clear round-off in `p` (amplitudes carry ~1e-16 noise).
pub const POP_FLOOR: f64 = 1e-28;

/// Momentum grid of the fermionic modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentumSector {
    /// `k = (2m+1)π/N`, `m = 0..N/2-1`: the even-parity sector holding the vacuum.
    #[default]
    Antiperiodic,
    /// `k = 2πm/N`, `m = 1..N/2-1`; the unpaired `k = 0, π` modes are dropped.
    Periodic,
}

/// Positive momenta with their pair frequencies and Bogoliubov angles.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    pub n: usize,
    pub k: Vec<f64>,
    pub omega: Vec<f64>,
    pub sin_theta: Vec<f64>,
}

/// `ω_k = 2√[(½ - Σλ_m cos km)² + (Σγ_m sin km)²]`, `sin θ_k = 2Σγ_m sin(km) / ω_k`.
pub fn dispersion(n: usize, lambdas: &[f64], gammas: &[f64], sector: MomentumSector) -> Result<ModeSet> {
    if n == 0 || n % 2 == 1 {
        return Err(Error::validation(format!("the chain solution needs an even positive N, got {n}")));
    }
    if lambdas.len() != gammas.len() {
        return Err(Error::validation("lambda and gamma lists must have equal length"));
    }
    let nf = n as f64;
    let k: Vec<f64> = match sector {
        MomentumSector::Antiperiodic => (0..n / 2).map(|m| (2 * m + 1) as f64 * std::f64::consts::PI / nf).collect(),
        MomentumSector::Periodic => (1..n / 2).map(|m| 2.0 * std::f64::consts::PI * m as f64 / nf).collect(),
    };
    let mut omega = Vec::with_capacity(k.len());
    let mut sin_theta = Vec::with_capacity(k.len());
    for &kk in &k {
        let mut a = 0.5;
        let mut b = 0.0;
        for (i, (&l, &g)) in lambdas.iter().zip(gammas).enumerate() {
            let km = kk * (i + 1) as f64;
            a -= l * km.cos();
            b += g * km.sin();
        }
        let w = 2.0 * a.hypot(b);
        omega.push(w);
        sin_theta.push(if w > 0.0 { (2.0 * b / w).clamp(-1.0, 1.0) } else { 0.0 });
    }
    Ok(ModeSet { n, k, omega, sin_theta })
}

impl ModeSet {
    /// Pair energies `ε_k(t) = 2 sin²θ_k sin²(ω_k t)`.
    pub fn epsilon(&self, t: f64) -> Vec<f64> {
        self.omega
            .iter()
            .zip(&self.sin_theta)
            .map(|(&w, &s)| 2.0 * s * s * (w * t).sin().powi(2))
            .collect()
    }

    /// `dε_k/dt = 2 sin²θ_k ω_k sin(2ω_k t)`.
    pub fn epsilon_dot(&self, t: f64) -> Vec<f64> {
        self.omega
            .iter()
            .zip(&self.sin_theta)
            .map(|(&w, &s)| 2.0 * s * s * w * (2.0 * w * t).sin())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticObservables {
    pub e: f64,
    pub p: f64,
    pub var_hb: f64,
    pub var_hjw: f64,
}

pub fn analytic_observables(modes: &ModeSet, t: f64) -> AnalyticObservables {
    let eps = modes.epsilon(t);
    let eps_dot = modes.epsilon_dot(t);
    AnalyticObservables {
        e: eps.iter().sum(),
        p: eps_dot.iter().sum(),
        var_hb: eps.iter().map(|e| e * (2.0 - e)).sum(),
        var_hjw: modes.omega.iter().zip(&modes.sin_theta).map(|(w, s)| (s * w).powi(2)).sum(),
    }
}

/// Distribution of the number of occupied pairs and its time derivative.
/// Index `j` holds particle number `l = 2j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDistribution {
    pub p: Vec<f64>,
    pub p_dot: Vec<f64>,
}

impl PairDistribution {
    pub fn particle_numbers(&self) -> Vec<usize> {
        (0..self.p.len()).map(|j| 2 * j).collect()
    }

    /// Populations over all particle numbers `0..=N`, zero on odd `l`.
    pub fn full_levels(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut p = vec![0.0; n + 1];
        let mut pd = vec![0.0; n + 1];
        for j in 0..self.p.len() {
            p[2 * j] = self.p[j];
            pd[2 * j] = self.p_dot[j];
        }
        (p, pd)
    }
}

fn pair_probabilities(modes: &ModeSet, t: f64) -> (Vec<f64>, Vec<f64>) {
    let q = modes.epsilon(t).into_iter().map(|e| (e / 2.0).clamp(0.0, 1.0)).collect();
    let qd = modes.epsilon_dot(t).into_iter().map(|e| e / 2.0).collect();
    (q, qd)
}

/// Poisson-binomial convolution carrying a forward-mode derivative along:
/// `O(M²)` for `M` pairs.
pub fn pair_distribution(modes: &ModeSet, t: f64) -> PairDistribution {
    let (q, qd) = pair_probabilities(modes, t);
    let npairs = modes.n / 2;
    let mut p = vec![0.0; npairs + 1];
    let mut pd = vec![0.0; npairs + 1];
    p[0] = 1.0;
    for (count, (&qi, &qdi)) in q.iter().zip(&qd).enumerate() {
        for j in (0..=count + 1).rev() {
            let stay = p[j];
            let stay_d = pd[j];
            let (up, up_d) = if j > 0 { (p[j - 1], pd[j - 1]) } else { (0.0, 0.0) };
            p[j] = stay * (1.0 - qi) + up * qi;
            pd[j] = stay_d * (1.0 - qi) - stay * qdi + up_d * qi + up * qdi;
        }
    }
    PairDistribution { p, p_dot: pd }
}

fn convolve_excluding(q: &[f64], skip: Option<usize>, len: usize) -> Vec<f64> {
    let mut p = vec![0.0; len];
    p[0] = 1.0;
    let mut count = 0;
    for (i, &qi) in q.iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        count += 1;
        for j in (0..=count.min(len - 1)).rev() {
            let up = if j > 0 { p[j - 1] } else { 0.0 };
            p[j] = p[j] * (1.0 - qi) + up * qi;
        }
    }
    p
}

/// Reference implementation: each rate is `Σ_k q̇_k [p^{¬k}_{j-1} - p^{¬k}_j]`
/// with `p^{¬k}` recomputed by a fresh convolution that omits mode `k`.
/// `O(M³)`; used to cross-check [`pair_distribution`].
pub fn pair_distribution_leave_one_out(modes: &ModeSet, t: f64) -> PairDistribution {
    let (q, qd) = pair_probabilities(modes, t);
    let len = modes.n / 2 + 1;
    let p = convolve_excluding(&q, None, len);
    let mut pd = vec![0.0; len];
    for (k, &qdk) in qd.iter().enumerate() {
        let without = convolve_excluding(&q, Some(k), len);
        for j in 0..len {
            let up = if j > 0 { without[j - 1] } else { 0.0 };
            pd[j] += qdk * (up - without[j]);
        }
    }
    PairDistribution { p, p_dot: pd }
}

/// `Σ_l ṗ_l² / p_l` over populations above [`POP_FLOOR`].
pub fn fisher_energy_analytic(dist: &PairDistribution) -> f64 {
    dist.p
        .iter()
        .zip(&dist.p_dot)
        .filter(|(&p, _)| p > POP_FLOOR)
        .map(|(&p, &pd)| pd * pd / p)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_battery, build_jw_chain, JwPreset};
    use crate::numerics::{group_levels, Propagator, StateVector, BasisTag};
    use proptest::prelude::*;

    fn preset_modes(p: JwPreset, n: usize) -> ModeSet {
        let (l, g) = p.couplings(n, None);
        dispersion(n, &l, &g, MomentumSector::Antiperiodic).unwrap()
    }

    #[test]
    fn xx_nn_at_half_pi() {
        // N=4 antiperiodic grid contains k = π/4, 3π/4; evaluate the formula at π/2 via N=2
        let m = dispersion(2, &[1.0], &[1.0], MomentumSector::Antiperiodic).unwrap();
        assert!((m.k[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((m.omega[0] - 2.236068).abs() < 1e-6);
        assert!((m.sin_theta[0] - 0.894427).abs() < 1e-6);
    }

    #[test]
    fn no_pairing_means_no_angle() {
        let m = dispersion(10, &[0.3, 0.1], &[0.0, 0.0], MomentumSector::Antiperiodic).unwrap();
        assert!(m.sin_theta.iter().all(|&s| s == 0.0));
        assert_eq!(m.k.len(), 5);
        assert!(dispersion(7, &[1.0], &[1.0], MomentumSector::Antiperiodic).is_err());
        assert_eq!(dispersion(10, &[1.0], &[1.0], MomentumSector::Periodic).unwrap().k.len(), 4);
    }

    #[test]
    fn observables_at_zero_and_conserved_generator_variance() {
        let m = preset_modes(JwPreset::XyPow, 16);
        let a0 = analytic_observables(&m, 0.0);
        assert_eq!((a0.e, a0.p, a0.var_hb), (0.0, 0.0, 0.0));
        let a1 = analytic_observables(&m, 1.7);
        assert_eq!(a0.var_hjw, a1.var_hjw);
    }

    #[test]
    fn single_pair_distribution() {
        let m = dispersion(2, &[0.0], &[1.0], MomentumSector::Antiperiodic).unwrap();
        let t = 0.4;
        let eps = m.epsilon(t)[0];
        let eps_dot = m.epsilon_dot(t)[0];
        let d = pair_distribution(&m, t);
        assert!((d.p[0] - (1.0 - eps / 2.0)).abs() < 1e-15);
        assert!((d.p[1] - eps / 2.0).abs() < 1e-15);
        // two-outcome Fisher information ṗ²(1/p₀ + 1/p₂) with ṗ = ε̇/2
        let q_dot = eps_dot / 2.0;
        let oracle = q_dot * q_dot * (1.0 / (1.0 - eps / 2.0) + 1.0 / (eps / 2.0));
        assert!((fisher_energy_analytic(&d) - oracle).abs() < 1e-12 * oracle);
        let closed = eps_dot * eps_dot / (eps * (2.0 - eps));
        assert!((oracle - closed).abs() < 1e-12 * closed);
    }

    #[test]
    fn vacuum_distribution() {
        let m = preset_modes(JwPreset::XxNn, 12);
        let d = pair_distribution(&m, 0.0);
        assert_eq!(d.p[0], 1.0);
        assert!(d.p[1..].iter().all(|&x| x == 0.0));
        assert_eq!(fisher_energy_analytic(&d), 0.0);
    }

    #[test]
    fn tangent_rates_match_leave_one_out() {
        for p in JwPreset::ALL {
            let m = preset_modes(p, 30);
            for &t in &[0.1, 0.77, 2.3] {
                let a = pair_distribution(&m, t);
                let b = pair_distribution_leave_one_out(&m, t);
                for j in 0..a.p.len() {
                    assert!((a.p[j] - b.p[j]).abs() < 1e-13);
                    assert!((a.p_dot[j] - b.p_dot[j]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rates_match_finite_difference() {
        let m = preset_modes(JwPreset::XyNn, 20);
        let (t, h) = (0.9, 1e-5);
        let d = pair_distribution(&m, t);
        let (a, b) = (pair_distribution(&m, t + h), pair_distribution(&m, t - h));
        for j in 0..d.p.len() {
            assert!((d.p_dot[j] - (a.p[j] - b.p[j]) / (2.0 * h)).abs() < 1e-7);
        }
    }

    #[test]
    fn matches_exact_diagonalization_n8() {
        for preset in JwPreset::ALL {
            let n = 8;
            let (l, g) = preset.couplings(n, None);
            let h = build_jw_chain(n, &l, &g).unwrap().eigendecomposed().unwrap();
            let hb = build_battery(n).unwrap().eigendecomposed().unwrap();
            let levels = group_levels(&hb, 1e-9).unwrap();
            let psi0 = StateVector::basis_state(BasisTag::QubitChain { n }, 0).unwrap();
            let prop = Propagator::new(&h, &psi0).unwrap();
            let modes = dispersion(n, &l, &g, MomentumSector::Antiperiodic).unwrap();
            for i in 0..50 {
                let t = 0.1 * i as f64;
                let psi = prop.state_at(t);
                let probs: Vec<f64> = hb.eig().unwrap().coefficients(psi.amplitudes()).iter().map(|z| z.norm_sqr()).collect();
                let pops = levels.accumulate(&probs);
                let e_ed: f64 = pops.iter().zip(levels.energies()).map(|(p, e)| p * (e + n as f64 / 2.0)).sum();
                let a = analytic_observables(&modes, t);
                assert!((a.e - e_ed).abs() < 1e-8, "{preset:?} t={t}: {} vs {e_ed}", a.e);
                let (pa, _) = pair_distribution(&modes, t).full_levels(n);
                for (x, y) in pa.iter().zip(&pops) {
                    assert!((x - y).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn linear_scaling_large_n() {
        let tf = |n: usize| {
            let m = preset_modes(JwPreset::XxNn, n);
            let ts: Vec<f64> = (0..4001).map(|i| 2.0 * i as f64 / 4000.0).collect();
            let es: Vec<f64> = ts.iter().map(|&t| analytic_observables(&m, t).e).collect();
            let (i, &emax) = es.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
            let tf = ts[i];
            let vs: Vec<f64> = (0..2001).map(|j| analytic_observables(&m, tf * j as f64 / 2000.0).var_hb).collect();
            let avg = crate::observables::time_average(&vs, tf / 2000.0).unwrap();
            (emax / n as f64, avg / n as f64)
        };
        let (e3, v3) = tf(1000);
        let (e4, v4) = tf(10000);
        assert!((e3 - e4).abs() < 0.01 * e4);
        assert!((v3 - v4).abs() < 0.01 * v4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn distribution_invariants(half in 1usize..40, t in 0.0f64..20.0, which in 0usize..4) {
            let m = preset_modes(JwPreset::ALL[which], 2 * half);
            let eps = m.epsilon(t);
            prop_assert!(eps.iter().all(|&e| (0.0..=2.0).contains(&e)));
            let a = analytic_observables(&m, t);
            prop_assert!(a.var_hb >= 0.0);
            let d = pair_distribution(&m, t);
            prop_assert!((d.p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(d.p_dot.iter().sum::<f64>().abs() < 1e-9);
            prop_assert!(d.p.iter().all(|&x| x >= -1e-15));
        }
    }
}
