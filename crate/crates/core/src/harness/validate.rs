//! Cross-checks of the numerical core against independent references.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::table1::{table1_verify, TABLE1_REL_TOL};
use crate::dynamics::{Dynamics, ExactDynamics, JwAnalyticDynamics};
use crate::error::Result;
use crate::jw::{dispersion, pair_distribution, pair_distribution_leave_one_out, MomentumSector};
use crate::models::{Family, JwChainSpec, JwPreset, JwSolver, Model, ModelSpec};
use crate::numerics::{eigendecompose, rk4_reference, BasisTag, HermitianOperator, StateVector, C64, DEFAULT_LEVEL_TOL};
use crate::observables::populations_and_rates;

pub const RK4_TOL: f64 = 1e-8;
pub const JW_TOL: f64 = 1e-6;
pub const FD_TOL: f64 = 1e-6;
pub const TANGENT_TOL: f64 = 1e-10;
const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationCheck {
    pub name: String,
    pub max_dev: f64,
    pub tol: f64,
    pub pass: bool,
}

impl ValidationCheck {
    fn new(name: impl Into<String>, max_dev: f64, tol: f64) -> Self {
        Self { name: name.into(), max_dev, tol, pass: max_dev <= tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> Result<HermitianOperator> {
    let mut m = nalgebra::DMatrix::<C64>::zeros(dim, dim);
    for j in 0..dim {
        m[(j, j)] = C64::new(rng.random_range(-1.0..1.0), 0.0);
        for i in 0..j {
            let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    eigendecompose(HermitianOperator::new(m, BasisTag::CollectiveSpin { n: dim - 1 })?)
}

/// Spectral propagation against adaptive RK4 on random and model Hamiltonians.
pub fn spectral_vs_rk4(seed: u64) -> Result<ValidationCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut cases: Vec<(HermitianOperator, StateVector)> = Vec::new();
    for dim in [3, 8, 17] {
        let h = random_hermitian(dim, &mut rng)?;
        let raw = nalgebra::DVector::from_fn(dim, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let psi = StateVector::normalized(raw, h.basis())?;
        cases.push((h, psi));
    }
    for family in [Family::Global, Family::Lmg { gamma: -1.0 }, Family::Dicke { n_max: Some(8), normalized: true }] {
        let m = Model::build(&ModelSpec::new(family, 4, 1.0), DEFAULT_LEVEL_TOL)?;
        cases.push((m.h_c, m.psi0));
    }
    for (h, psi) in &cases {
        for t in [0.3, 1.1] {
            let spectral = crate::numerics::evolve(h, psi, t)?;
            let oracle = rk4_reference(h.entries(), psi.amplitudes(), t, 1e-12);
            worst = worst.max((spectral.amplitudes() - oracle).iter().fold(0.0, |m, z| m.max(z.norm())));
        }
    }
    Ok(ValidationCheck::new("spectral_vs_rk4", worst, RK4_TOL))
}

/// Closed-form chain observables against exact diagonalization.
pub fn jw_analytic_vs_exact(sizes: &[usize], points: usize) -> Result<ValidationCheck> {
    let mut worst = 0.0f64;
    for &n in sizes {
        for preset in JwPreset::ALL {
            let mut chain = JwChainSpec::preset(preset);
            chain.solver = JwSolver::Exact;
            let spec = ModelSpec::new(Family::JwChain(chain), n, 1.0);
            let model = Model::build(&spec, DEFAULT_LEVEL_TOL)?;
            let exact = ExactDynamics::new(&model)?;
            let analytic = JwAnalyticDynamics::from_spec(&spec)?;
            for i in 0..points {
                let t = 10.0 * i as f64 / (points - 1) as f64;
                let (a, b) = (exact.sample(t)?, analytic.sample(t)?);
                for (x, y) in [(a.e, b.e), (a.p, b.p), (a.var_hb, b.var_hb), (a.var_hc, b.var_hc), (a.i_e, b.i_e)] {
                    worst = worst.max(rel(x, y));
                }
                for (x, y) in a.pops.iter().zip(&b.pops).chain(a.rates.iter().zip(&b.rates)) {
                    worst = worst.max((x - y).abs());
                }
            }
        }
    }
    Ok(ValidationCheck::new("jw_analytic_vs_exact", worst, JW_TOL))
}

/// Power against a central difference of the stored energy.
pub fn power_vs_finite_difference() -> Result<ValidationCheck> {
    let mut worst = 0.0f64;
    let families = [
        Family::Parallel,
        Family::Global,
        Family::Hybrid { q: 2, r: 2 },
        Family::JwChain(JwChainSpec::preset(JwPreset::XxPow)),
        Family::Lmg { gamma: 0.3 },
        Family::Dicke { n_max: Some(12), normalized: true },
    ];
    for family in families {
        let model = Model::build(&ModelSpec::new(family, 4, 1.0), DEFAULT_LEVEL_TOL)?;
        let d = ExactDynamics::new(&model)?;
        for i in 1..=10 {
            let t = 0.23 * i as f64;
            let fd = (d.energy(t + FD_STEP)? - d.energy(t - FD_STEP)?) / (2.0 * FD_STEP);
            worst = worst.max(rel(d.power(t)?, fd));
        }
    }
    Ok(ValidationCheck::new("power_vs_finite_difference", worst, FD_TOL))
}

/// Level-population rates against central differences of the populations.
pub fn rates_vs_finite_difference() -> Result<ValidationCheck> {
    let mut worst = 0.0f64;
    for family in [Family::Lmg { gamma: -1.0 }, Family::Global, Family::Dicke { n_max: Some(12), normalized: true }] {
        let model = Model::build(&ModelSpec::new(family, 6, 1.0), DEFAULT_LEVEL_TOL)?;
        let d = ExactDynamics::new(&model)?;
        let pops = |t: f64| -> Result<Vec<f64>> {
            let psi = d.state(t).expect("exact dynamics tracks the state");
            Ok(populations_and_rates(&psi, &model.h_b, &model.levels, &model.h_c, t)?.p)
        };
        for i in 1..=10 {
            let t = 0.19 * i as f64;
            let psi = d.state(t).expect("exact dynamics tracks the state");
            let rec = populations_and_rates(&psi, &model.h_b, &model.levels, &model.h_c, t)?;
            let (up, down) = (pops(t + FD_STEP)?, pops(t - FD_STEP)?);
            for k in 0..rec.p_dot.len() {
                worst = worst.max((rec.p_dot[k] - (up[k] - down[k]) / (2.0 * FD_STEP)).abs());
            }
        }
    }
    Ok(ValidationCheck::new("rates_vs_finite_difference", worst, FD_TOL))
}

/// Forward-mode pair-distribution rates against leave-one-out recomputation.
pub fn tangent_vs_leave_one_out(seed: u64) -> Result<ValidationCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for n in [8, 40, 200] {
        for preset in JwPreset::ALL {
            let (l, g) = preset.couplings(n, None);
            let modes = dispersion(n, &l, &g, MomentumSector::Antiperiodic)?;
            for _ in 0..5 {
                let t = rng.random_range(0.0..10.0);
                let (a, b) = (pair_distribution(&modes, t), pair_distribution_leave_one_out(&modes, t));
                for (x, y) in a.p.iter().zip(&b.p).chain(a.p_dot.iter().zip(&b.p_dot)) {
                    worst = worst.max((x - y).abs());
                }
            }
        }
    }
    Ok(ValidationCheck::new("tangent_vs_leave_one_out", worst, TANGENT_TOL))
}

/// Run every cross-check.
pub fn run_validation(seed: u64) -> Result<ValidationReport> {
    let table = table1_verify(1.0, seed)?;
    let worst_table = table.cells.iter().map(|c| c.max_rel_dev).fold(0.0, f64::max);
    let checks = vec![
        spectral_vs_rk4(seed)?,
        jw_analytic_vs_exact(&[4, 6, 8, 10], 50)?,
        power_vs_finite_difference()?,
        rates_vs_finite_difference()?,
        tangent_vs_leave_one_out(seed)?,
        ValidationCheck::new("table1", worst_table, TABLE1_REL_TOL),
    ];
    Ok(ValidationReport { checks })
}
