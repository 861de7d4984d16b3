//! Closed-form results of the parallel, global and hybrid chargers checked
//! against simulation, cell by cell.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::ScenarioConfig;
use super::trajectory::run_trajectory;
use crate::bounds::entanglement_witness_k;
use crate::error::Result;
use crate::models::{cell_terms, Family, Model, ModelSpec};
use crate::numerics::{evolve, StateVector};
use crate::observables::{fisher_energy, populations_and_rates, power, stored_energy, variance, variance_decomposition, variance_direct};

pub const TABLE1_REL_TOL: f64 = 1e-8;
pub const TABLE1_SIZES: [usize; 4] = [2, 4, 6, 8];
const RANDOM_TIMES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Cell {
    pub family: String,
    pub n: usize,
    pub quantity: &'static str,
    /// Largest relative deviation over the checked instants.
    pub max_rel_dev: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Report {
    pub cells: Vec<Table1Cell>,
}

impl Table1Report {
    pub fn passed(&self) -> bool {
        self.cells.iter().all(|c| c.pass)
    }
}

fn rel_dev(observed: f64, expected: f64) -> f64 {
    (observed - expected).abs() / expected.abs().max(1.0)
}

/// Every charger family for `N` cells: parallel, global and each `q·r = N` hybrid.
pub fn families(n: usize) -> Vec<Family> {
    let mut out = vec![Family::Parallel, Family::Global];
    out.extend((1..=n).filter(|q| n.is_multiple_of(*q)).map(|q| Family::Hybrid { q, r: n / q }));
    out
}

fn blocks(family: &Family, n: usize) -> (usize, usize) {
    match *family {
        Family::Parallel => (n, 1),
        Family::Global => (1, n),
        Family::Hybrid { q, r } => (q, r),
        _ => unreachable!("table rows cover the paradigmatic chargers only"),
    }
}

fn check_family(family: Family, n: usize, lambda: f64, seed: u64) -> Result<Vec<Table1Cell>> {
    let (q, r) = blocks(&family, n);
    let spec = ModelSpec::new(family.clone(), n, lambda);
    let model = Model::build(&spec, crate::numerics::DEFAULT_LEVEL_TOL)?;
    let terms = cell_terms(n)?;
    let (nf, qf, rf, l2) = (n as f64, q as f64, r as f64, lambda * lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times: Vec<f64> = (0..RANDOM_TIMES).map(|_| rng.random_range(0.1..1.47) / lambda).collect();

    let dev = |name: &'static str, devs: Vec<f64>| Table1Cell {
        family: family.label(),
        n,
        quantity: name,
        max_rel_dev: devs.iter().copied().fold(0.0, f64::max),
        pass: devs.iter().all(|d| *d <= TABLE1_REL_TOL),
    };
    let mut cells = Vec::new();

    cells.push(dev("norm_HC", vec![rel_dev(model.h_c.operator_norm()?, qf * lambda)]));
    let run = run_trajectory(&ScenarioConfig::new(spec.clone()))?;
    cells.push(dev("lambda_t_F", vec![rel_dev(run.summary.lambda_t_f, std::f64::consts::FRAC_PI_2)]));
    cells.push(dev("var_HC", vec![rel_dev(variance_direct(&model.psi0, &model.h_c)?, qf * l2)]));

    let states: Vec<(f64, StateVector)> =
        times.iter().map(|&t| evolve(&model.h_c, &model.psi0, t).map(|s| (t, s))).collect::<Result<_>>()?;
    let (mut ie, mut e, mut vb, mut ent, mut sat) = (vec![], vec![], vec![], vec![], vec![]);
    for (t, psi) in &states {
        let p = (lambda * t).sin().powi(2);
        let rec = populations_and_rates(psi, &model.h_b, &model.levels, &model.h_c, *t)?;
        let i_e = fisher_energy(&rec);
        let var = variance(psi, &model.h_b, 1)?;
        ie.push(rel_dev(i_e, 4.0 * qf * l2));
        e.push(rel_dev(stored_energy(psi, &model.h_b, &model.psi0)?, nf * p));
        vb.push(rel_dev(var, nf * rf * p * (1.0 - p)));
        ent.push(rel_dev(variance_decomposition(psi, &terms)?.1, nf * p * (rf - 1.0) * (1.0 - p)));
        sat.push(rel_dev(power(psi, &model.h_b, &model.h_c)?, (var * i_e).sqrt()));
    }
    cells.push(dev("I_E", ie));
    cells.push(dev("E", e));
    cells.push(dev("var_HB", vb));
    cells.push(dev("var_ent_HB", ent));
    let half = evolve(&model.h_c, &model.psi0, std::f64::consts::FRAC_PI_4 / lambda)?;
    let k = entanglement_witness_k(variance(&half, &model.h_b, 1)?, n)?;
    cells.push(dev("witness_k", vec![rel_dev(k as f64, rf)]));
    cells.push(dev("P_saturation", sat));
    Ok(cells)
}

/// Check every row of the table for `N ∈ {2, 4, 6, 8}`.
pub fn table1_verify(lambda: f64, seed: u64) -> Result<Table1Report> {
    use rayon::prelude::*;
    let jobs: Vec<(Family, usize)> = TABLE1_SIZES.iter().flat_map(|&n| families(n).into_iter().map(move |f| (f, n))).collect();
    let cells: Vec<Vec<Table1Cell>> = jobs
        .into_par_iter()
        .enumerate()
        .map(|(i, (f, n))| check_family(f, n, lambda, seed.wrapping_add(i as u64)))
        .collect::<Result<_>>()?;
    Ok(Table1Report { cells: cells.into_iter().flatten().collect() })
}
